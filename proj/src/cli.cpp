#include "tbvar/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include "tbvar/error.hpp"
#include "tbvar/evaluation.hpp"
#include "tbvar/io.hpp"
#include "tbvar/reproduce.hpp"
#include "tbvar/spectra.hpp"

namespace tbvar::cli {

namespace {

// JSON config files for CLI11: top-level keys are global options, nested
// objects hold the options of the subcommand with that name.
class ConfigJson : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool, std::string) const override {
    Json j = Json::object();
    for (const CLI::Option* opt : app->get_options({})) {
      if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
      const std::string name = opt->get_lnames().front();
      if (opt->count() > 0) {
        const auto& res = opt->results();
        j[name] = res.size() == 1 ? Json(res.front()) : Json(res);
      } else if (default_also && !opt->get_default_str().empty()) {
        j[name] = opt->get_default_str();
      }
    }
    for (const CLI::App* sub : app->get_subcommands({})) {
      Json s = Json::parse(to_config(sub, default_also, false, ""));
      if (!s.empty()) j[sub->get_name()] = s;
    }
    return j.dump(2);
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    Json j;
    try {
      in >> j;
    } catch (const Json::exception& e) {
      throw CLI::ConversionError(std::string("config: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config: top level must be a JSON object");
    std::vector<CLI::ConfigItem> items;
    collect(j, {}, items);
    return items;
  }

 private:
  static std::string scalar(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number()) return v.dump();
    throw CLI::ConversionError("config: unsupported value " + v.dump());
  }

  static void collect(const Json& j, const std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& items) {
    for (const auto& [key, value] : j.items()) {
      if (value.is_object()) {
        std::vector<std::string> next = parents;
        next.push_back(key);
        collect(value, next, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array())
        for (const Json& v : value) item.inputs.push_back(scalar(v));
      else
        item.inputs.push_back(scalar(value));
      items.push_back(std::move(item));
    }
  }
};

int default_threads() {
  if (const char* env = std::getenv("TBVAR_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-")
    out << text;
  else
    write_text(path, text);
}

// --- experiment specs from JSON ----------------------------------------------

template <typename T>
T field(const Json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const Json::exception&) {
    throw InvalidArgument("spec field '" + key + "' has the wrong type");
  }
}

ExperimentSpec spec_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidArgument("spec must be a JSON object");
  ExperimentSpec s;
  if (j.contains("preset")) s = preset_spec(field<std::string>(j.at("preset"), "preset"));
  for (const auto& [key, v] : j.items()) {
    if (key == "preset") continue;
    if (key == "p1") s.p1 = field<Eigen::Index>(v, key);
    else if (key == "p2") s.p2 = field<Eigen::Index>(v, key);
    else if (key == "rank_b") s.rank_b = field<Eigen::Index>(v, key);
    else if (key == "rho_a") s.rho_a = field<double>(v, key);
    else if (key == "rho_c") s.rho_c = field<double>(v, key);
    else if (key == "T") s.T = field<Eigen::Index>(v, key);
    else if (key == "replications") s.replications = field<int>(v, key);
    else if (key == "seed") s.seed = field<std::uint64_t>(v, key);
    else if (key == "b_structure") s.b_structure = parse_b_structure(field<std::string>(v, key));
    else if (key == "prob_a") s.prob_a = field<double>(v, key);
    else if (key == "prob_b") s.prob_b = field<double>(v, key);
    else if (key == "prob_c") s.prob_c = field<double>(v, key);
    else if (key == "snr_b") s.snr_b = field<double>(v, key);
    else if (key == "omega_density") s.omega_density = field<double>(v, key);
    else if (key == "omega_condition") s.omega_condition = field<double>(v, key);
    else if (key == "identity_noise") s.identity_noise = field<bool>(v, key);
    else if (key == "burn_in") s.burn_in = field<Eigen::Index>(v, key);
    else if (key == "lowrank_method") {
      const auto m = field<std::string>(v, key);
      if (m == "truncate") s.lowrank_method = LowRankMethod::truncate;
      else if (m == "threshold") s.lowrank_method = LowRankMethod::threshold;
      else throw InvalidArgument("spec field 'lowrank_method' must be truncate or threshold");
    } else if (key == "noise") {
      if (!v.is_object()) throw InvalidArgument("spec field 'noise' must be an object");
      for (const auto& [nk, nv] : v.items()) {
        if (nk == "family") s.noise.family = parse_noise_family(field<std::string>(nv, "noise.family"));
        else if (nk == "df") s.noise.df = field<double>(nv, "noise.df");
        else if (nk == "mu") s.noise.mu = field<double>(nv, "noise.mu");
        else if (nk == "sigma") s.noise.sigma = field<double>(nv, "noise.sigma");
        else throw InvalidArgument("spec: unknown field 'noise." + nk + "'");
      }
    } else {
      throw InvalidArgument("spec: unknown field '" + key + "'");
    }
  }
  return s;
}

// --- data loading ---------------------------------------------------------------

struct DataArgs {
  std::string x_path, z_path;
  std::string diff, diff_x, diff_z;
};

void add_data_options(CLI::App* cmd, DataArgs& a, bool z_required) {
  cmd->add_option("--x", a.x_path, "CSV of the X block (rows in time order)")->required();
  auto* z = cmd->add_option("--z", a.z_path, "CSV of the Z block");
  if (z_required) z->required();
  const auto modes = CLI::IsMember({"abs", "rel"});
  cmd->add_option("--diff", a.diff, "first-difference every column: abs or rel")->check(modes);
  cmd->add_option("--diff-x", a.diff_x, "difference the X columns (overrides --diff)")->check(modes);
  cmd->add_option("--diff-z", a.diff_z, "difference the Z columns (overrides --diff)")->check(modes);
}

struct Data {
  Matrix x, z;
};

Data load_data(const DataArgs& a) {
  Data d;
  d.x = read_csv(a.x_path).data;
  if (!a.z_path.empty()) {
    d.z = read_csv(a.z_path).data;
    if (d.z.rows() != d.x.rows())
      throw InvalidArgument("X and Z have different row counts (" + std::to_string(d.x.rows()) + " vs " +
                            std::to_string(d.z.rows()) + ")");
  }
  const std::string dx = a.diff_x.empty() ? a.diff : a.diff_x;
  const std::string dz = a.diff_z.empty() ? a.diff : a.diff_z;
  // A differenced block loses its first row; the other block is trimmed to match.
  if (!dx.empty()) d.x = difference(d.x, dx);
  else if (!dz.empty() && d.z.size() != 0) d.x = d.x.bottomRows(d.x.rows() - 1).eval();
  if (d.z.size() != 0) {
    if (!dz.empty()) d.z = difference(d.z, dz);
    else if (!dx.empty()) d.z = d.z.bottomRows(d.z.rows() - 1).eval();
  }
  return d;
}

Json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

// --- subcommands --------------------------------------------------------------

struct SimulateArgs {
  std::string spec_path, preset, out_dir = ".", noise;
  std::optional<std::uint64_t> seed;
  std::optional<Eigen::Index> T;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  ExperimentSpec spec = preset_spec("A.1");
  if (!a.spec_path.empty()) spec = spec_from_json(Json::parse(read_text(a.spec_path)));
  if (!a.preset.empty()) spec = preset_spec(a.preset);
  if (a.seed) spec.seed = *a.seed;
  if (a.T) spec.T = *a.T;
  if (!a.noise.empty()) spec.noise.family = parse_noise_family(a.noise);
  spec.validate();

  Rng rng(split_seed(spec.seed, 0));
  const ModelParams params = generate_params(spec, rng);
  const Panel panel = simulate_system(params, spec.T, spec.noise, spec.burn_in, rng);

  std::filesystem::create_directories(a.out_dir);
  const std::filesystem::path dir(a.out_dir);
  write_csv((dir / "X.csv").string(), panel.X, "x");
  write_csv((dir / "Z.csv").string(), panel.Z, "z");
  Json pj = params_to_json(params);
  pj["seed"] = spec.seed;
  pj["preset"] = spec.preset;
  write_text((dir / "params.json").string(), pj.dump(2) + "\n");
  out << "wrote " << (dir / "X.csv").string() << ", " << (dir / "Z.csv").string() << ", "
      << (dir / "params.json").string() << " (T = " << spec.T << ")\n";
  return kOk;
}

struct EstimateArgs {
  DataArgs data;
  std::string out, surface, tune = "bic", b_structure = "lowrank";
  std::optional<double> lambda_a, lambda_b, lambda_c, rho_u, rho_v;
  std::optional<int> grid;
  int max_iters = 50;
};

std::string surface_csv(const std::vector<BicPoint>& block1, const std::vector<BicPoint>& block2) {
  std::string s = "block,lambda1,lambda2,score,df,ok\n";
  auto rows = [&s](int block, const std::vector<BicPoint>& pts) {
    for (const BicPoint& p : pts)
      s += std::to_string(block) + "," + format_double(p.lambda1) + "," + format_double(p.lambda2) + "," +
           format_double(p.score) + "," + format_double(p.df) + "," + (p.ok ? "1" : "0") + "\n";
  };
  rows(1, block1);
  rows(2, block2);
  return s;
}

int cmd_estimate(const EstimateArgs& a, std::ostream& out) {
  const Data data = load_data(a.data);
  const DesignResponse d = build_design_response(data.x, data.z);
  const Eigen::Index n = d.rows();

  TuningSpec tu;
  if (a.grid) tu.grid_points = tu.a_points = *a.grid;
  EstimationConfig cfg;
  cfg.b_structure = parse_b_structure(a.b_structure);
  if (cfg.b_structure == BStructure::zero) throw InvalidArgument("--b-structure must be lowrank or sparse");
  cfg.ctrl.max_outer_iters = a.max_iters;
  cfg.rho_u = a.rho_u.value_or(tu.rho_mult * penalty_scale(data.x.cols(), n));
  cfg.rho_v = d.has_z() ? a.rho_v.value_or(tu.rho_mult * penalty_scale(data.z.cols(), n)) : 0.0;

  Json j;
  j["schema_version"] = kSchemaVersion;
  j["T"] = n;
  Json tuning{{"mode", a.tune}, {"rho_u", cfg.rho_u}, {"rho_v", cfg.rho_v}};
  std::vector<BicPoint> surf1, surf2;
  int code = kOk;
  try {
    FitResult f1, f2;
    const double ma = lambda_max_a(d);
    if (a.tune == "bic") {
      BicResult b1 = bic_select_block1(d, log_grid(tu.a_lo * ma, tu.a_hi * ma, tu.a_points), cfg);
      f1 = std::move(b1.fit);
      surf1 = std::move(b1.surface);
      tuning["lambda_a"] = b1.best.lambda1;
      if (d.has_z()) {
        const double mb = lambda_max_b(d, cfg.b_structure), mc = lambda_max_c(d);
        BicResult b2 = bic_select_block2(d, log_grid(tu.b_lo * mb, tu.b_hi * mb, tu.grid_points),
                                         log_grid(tu.c_lo * mc, tu.c_hi * mc, tu.grid_points), cfg);
        f2 = std::move(b2.fit);
        surf2 = std::move(b2.surface);
        tuning["lambda_b"] = b2.best.lambda1;
        tuning["lambda_c"] = b2.best.lambda2;
      }
    } else {
      cfg.lambda_a = a.lambda_a.value_or(tu.a_frac * ma);
      tuning["lambda_a"] = cfg.lambda_a;
      f1 = estimate_block1(d, cfg);
      if (d.has_z()) {
        cfg.lambda_b = a.lambda_b.value_or(tu.b_frac * lambda_max_b(d, cfg.b_structure));
        cfg.lambda_c = a.lambda_c.value_or(tu.c_frac * lambda_max_c(d));
        tuning["lambda_b"] = cfg.lambda_b;
        tuning["lambda_c"] = cfg.lambda_c;
        f2 = estimate_block2(d, cfg);
      }
    }
    j["block1"] = fit_to_json(f1);
    if (d.has_z()) {
      j["block2"] = fit_to_json(f2);
      j["params"] = params_to_json(combine(f1, f2));
    }
  } catch (const NumericalBreakdown& e) {
    j["error"] = {{"type", "numerical_breakdown"}, {"message", e.what()}};
    code = kNumerical;
  } catch (const RankDeficiency& e) {
    j["error"] = {{"type", "rank_deficiency"}, {"message", e.what()}};
  } catch (const ConvergenceFailure& e) {
    j["error"] = {{"type", "convergence_failure"}, {"message", e.what()}};
  } catch (const DegenerateInput& e) {
    j["error"] = {{"type", "degenerate_input"}, {"message", e.what()}};
  }
  j["tuning"] = tuning;
  emit(a.out, j.dump(2) + "\n", out);

  if (a.tune == "bic") {
    std::string path = a.surface;
    if (path.empty() && !a.out.empty() && a.out != "-") {
      std::filesystem::path p(a.out);
      path = (p.parent_path() / (p.stem().string() + "_surface.csv")).string();
    }
    if (!path.empty()) write_text(path, surface_csv(surf1, surf2));
  }
  return code;
}

struct TestArgs {
  DataArgs data;
  std::string out, method = "rank";
  double alpha = 0.05;
  int r = 0;
};

int cmd_test(const TestArgs& a, std::ostream& out) {
  const Data data = load_data(a.data);
  const TestMethod m = parse_test_method(a.method);
  TestReport rep;
  if (m == TestMethod::rank) rep = rank_test(data.x, data.z, a.r, a.alpha);
  else if (m == TestMethod::granger) rep = granger_test(data.x, data.z, a.alpha);
  else rep = higher_criticism_test(data.x, data.z);
  emit(a.out, report_to_json(rep).dump(2) + "\n", out);
  return kOk;
}

ModelParams load_params(const std::string& path) {
  const Json j = Json::parse(read_text(path));
  return params_from_json(j.contains("params") ? j.at("params") : j);
}

struct ForecastArgs {
  DataArgs data;
  std::string params, out;
};

int cmd_forecast(const ForecastArgs& a, std::ostream& out) {
  const ModelParams p = load_params(a.params);
  const Data data = load_data(a.data);
  if (data.x.cols() != p.p1() || data.z.cols() != p.p2())
    throw InvalidArgument("data columns do not match the parameter dimensions");
  const Eigen::Index last = data.x.rows() - 1;
  const Forecast f = forecast_one_step(p, data.x.row(last).transpose(), data.z.row(last).transpose());
  const Json j{{"schema_version", kSchemaVersion}, {"origin", last}, {"x", vector_to_json(f.x)}, {"z", vector_to_json(f.z)}};
  emit(a.out, j.dump(2) + "\n", out);
  return kOk;
}

struct SpectraArgs {
  std::string params, out;
  int grid = 512;
};

int cmd_spectra(const SpectraArgs& a, std::ostream& out) {
  const ModelParams p = load_params(a.params);
  const SpectralSummary s = spectral_density_W(p, a.grid);
  const BoundsReport b = spectrum_bounds_check(p, a.grid);
  const Json j{{"schema_version", kSchemaVersion},
               {"grid_size", a.grid},
               {"m_lower", s.m_lower},
               {"M_upper", s.M_upper},
               {"mu_min_g", s.mu_min_g},
               {"mu_max_g", s.mu_max_g},
               {"max_formula_gap", s.max_formula_gap},
               {"bounds", bounds_to_json(b)}};
  emit(a.out, j.dump(2) + "\n", out);
  return kOk;
}

struct ReproduceArgs {
  std::string table, profile = "desk", out_dir = "reproduce";
  int threads = 1;
  std::uint64_t seed = 20240101;
};

int cmd_reproduce(const ReproduceArgs& a, std::ostream& out, std::ostream& err) {
  ReproduceOptions o;
  o.table = a.table;
  o.profile = parse_profile(a.profile);
  o.out_dir = a.out_dir;
  o.threads = a.threads;
  o.seed = a.seed;
  o.log = &err;
  const Json s = reproduce(o);
  out << a.table << ": " << s.at("within_band").get<int>() << " of " << s.at("total").get<std::size_t>()
      << " metrics within the published bands; see " << a.out_dir << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation, estimation and testing for two-block recursive VAR systems", "tbvar"};
  app.config_formatter(std::make_shared<ConfigJson>());
  app.set_config("--config", "", "JSON file with option values; command-line flags take precedence");
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "draw parameters and a panel; writes X.csv, Z.csv, params.json");
  c_sim->add_option("--spec", sim.spec_path, "experiment spec (JSON)");
  c_sim->add_option("--preset", sim.preset, "named setting, e.g. A.1")->check(CLI::IsMember(preset_names()));
  c_sim->add_option("--seed", sim.seed, "RNG seed (default 20240101)");
  c_sim->add_option("--T", sim.T, "number of periods");
  c_sim->add_option("--noise", sim.noise, "gaussian|student_t|elliptical");
  c_sim->add_option("--out", sim.out_dir, "output directory")->capture_default_str();

  EstimateArgs est;
  auto* c_est = app.add_subcommand("estimate", "fit (A, Omega_u) and, with --z, (B, C, Omega_v)");
  add_data_options(c_est, est.data, false);
  c_est->add_option("--out", est.out, "fit JSON (default stdout)");
  c_est->add_option("--tune", est.tune, "fixed|bic")->check(CLI::IsMember({"fixed", "bic"}))->capture_default_str();
  c_est->add_option("--grid", est.grid, "points per lattice axis for --tune bic")->check(CLI::PositiveNumber);
  c_est->add_option("--surface", est.surface, "BIC score surface CSV (default <out>_surface.csv)");
  c_est->add_option("--b-structure", est.b_structure, "lowrank|sparse")->capture_default_str();
  c_est->add_option("--lambda-a", est.lambda_a, "penalty on A (fixed tuning)");
  c_est->add_option("--lambda-b", est.lambda_b, "penalty on B (fixed tuning)");
  c_est->add_option("--lambda-c", est.lambda_c, "penalty on C (fixed tuning)");
  c_est->add_option("--rho-u", est.rho_u, "graphical-lasso penalty for Omega_u");
  c_est->add_option("--rho-v", est.rho_v, "graphical-lasso penalty for Omega_v");
  c_est->add_option("--max-iters", est.max_iters, "outer iterations")->check(CLI::PositiveNumber)->capture_default_str();

  TestArgs tst;
  auto* c_tst = app.add_subcommand("test", "rank, Granger or higher-criticism test of B = 0 / rank(B) <= r");
  add_data_options(c_tst, tst.data, true);
  c_tst->add_option("--method", tst.method, "rank|granger|hc")->check(CLI::IsMember({"rank", "granger", "hc"}))
      ->capture_default_str();
  c_tst->add_option("--alpha", tst.alpha, "level")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  c_tst->add_option("--r", tst.r, "rank under the null")->check(CLI::NonNegativeNumber)->capture_default_str();
  c_tst->add_option("--out", tst.out, "report JSON (default stdout)");

  ForecastArgs fc;
  auto* c_fc = app.add_subcommand("forecast", "one-step forecast from the last row of the data");
  add_data_options(c_fc, fc.data, true);
  c_fc->add_option("--params", fc.params, "params.json or an estimate output")->required();
  c_fc->add_option("--out", fc.out, "forecast JSON (default stdout)");

  SpectraArgs sp;
  auto* c_sp = app.add_subcommand("spectra", "spectral density extremes and the bound checks");
  c_sp->add_option("--params", sp.params, "params.json or an estimate output")->required();
  c_sp->add_option("--grid", sp.grid, "frequency grid size")->check(CLI::PositiveNumber)->capture_default_str();
  c_sp->add_option("--out", sp.out, "JSON (default stdout)");

  ReproduceArgs rp;
  rp.threads = default_threads();
  auto* c_rp = app.add_subcommand("reproduce", "rerun one table of the simulation study");
  c_rp->add_option("table", rp.table, "table id")->required()->check(CLI::IsMember(table_ids()));
  c_rp->add_option("--profile", rp.profile, "desk|full")->check(CLI::IsMember({"desk", "full"}))
      ->capture_default_str();
  c_rp->add_option("--out", rp.out_dir, "output directory")->capture_default_str();
  c_rp->add_option("--threads", rp.threads, "worker threads (default $TBVAR_THREADS or 1)")
      ->check(CLI::PositiveNumber);
  c_rp->add_option("--seed", rp.seed, "base seed")->capture_default_str();

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    if (!rev.empty()) rev.pop_back();
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (c_sim->parsed()) return cmd_simulate(sim, out);
    if (c_est->parsed()) return cmd_estimate(est, out);
    if (c_tst->parsed()) return cmd_test(tst, out);
    if (c_fc->parsed()) return cmd_forecast(fc, out);
    if (c_sp->parsed()) return cmd_spectra(sp, out);
    if (c_rp->parsed()) return cmd_reproduce(rp, out, err);
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const RankDeficiency& e) {
    err << "precondition failed: " << e.what() << "\n";
    return kPrecondition;
  } catch (const DegenerateInput& e) {
    err << "precondition failed: " << e.what() << "\n";
    return kPrecondition;
  } catch (const Error& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kConfigError;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace tbvar::cli
