#include "tbvar/reproduce.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <ostream>

#include "tbvar/error.hpp"
#include "tbvar/evaluation.hpp"

namespace tbvar {

namespace {

struct Row {
  std::string setting;
  std::string metric;
  double mean = 0.0;
  std::optional<double> sd;
  std::size_t n = 0;
  double paper = 0.0;
  double lo = 0.0;
  double hi = 0.0;

  bool within() const { return mean >= lo && mean <= hi; }
};

// Half-widths of the comparison bands, by metric family.
constexpr double kSupportBand = 0.10;
constexpr double kErrorBand = 0.20;
constexpr double kRankBand = 1.5;
constexpr double kForecastBand = 0.20;
constexpr double kRateBand = 0.07;

double band_for(const std::string& metric) {
  if (metric.find("rank") != std::string::npos) return kRankBand;
  if (metric.find("forecast") != std::string::npos) return kForecastBand;
  if (metric.find("error") != std::string::npos) return kErrorBand;
  if (metric.find("sen") != std::string::npos || metric.find("spc") != std::string::npos) return kSupportBand;
  return kRateBand;
}

Row make_row(const std::string& setting, const std::string& metric, const Summary& s, double paper) {
  Row r;
  r.setting = setting;
  r.metric = metric;
  r.mean = s.mean;
  r.sd = s.sd;
  r.n = s.n;
  r.paper = paper;
  const double b = band_for(metric);
  r.lo = paper - b;
  r.hi = paper + b;
  if (metric.find("rank") == std::string::npos) {
    r.lo = std::max(0.0, r.lo);
    if (metric.find("forecast") == std::string::npos) r.hi = std::min(1.0, r.hi);
  }
  return r;
}

void note(const ReproduceOptions& o, const std::string& msg) {
  if (o.log) *o.log << "[" << o.table << "] " << msg << std::endl;
}

ExperimentOptions experiment_options(const ReproduceOptions& o, bool forecast) {
  ExperimentOptions eo;
  eo.forecast = forecast;
  eo.threads = o.threads;
  return eo;
}

ExperimentReport run_setting(const ReproduceOptions& o, ExperimentSpec spec, bool forecast) {
  spec.replications = o.profile.replications;
  spec.seed = o.seed;
  note(o, spec.preset + " (" + to_string(spec.noise.family) + "), " + std::to_string(spec.replications) +
              " replications");
  ExperimentReport rep = run_experiment(spec, experiment_options(o, forecast));
  if (rep.failures > 0) note(o, spec.preset + ": " + std::to_string(rep.failures) + " failed replications");
  return rep;
}

void add_rows(std::vector<Row>& rows, const std::string& setting, const ExperimentReport& rep,
              const std::vector<std::pair<std::string, double>>& paper) {
  for (const auto& [metric, value] : paper) {
    auto it = rep.summary.find(metric);
    if (it == rep.summary.end()) continue;
    rows.push_back(make_row(setting, metric, it->second, value));
  }
}

using PaperRow = std::vector<std::pair<std::string, double>>;

PaperRow estimation_row(double a_sen, double a_spc, double a_err, double rank, double b_err, double c_sen,
                        double c_spc, double c_err) {
  return {{"A.sen", a_sen}, {"A.spc", a_spc},   {"A.error", a_err}, {"B.rank", rank},
          {"B.error", b_err}, {"C.sen", c_sen}, {"C.spc", c_spc},   {"C.error", c_err}};
}

std::vector<Row> table2(const ReproduceOptions& o) {
  const std::vector<std::pair<std::string, PaperRow>> published = {
      {"A.1", estimation_row(0.98, 0.99, 0.34, 5.2, 0.11, 1.00, 0.97, 0.15)},
      {"A.2", estimation_row(0.97, 0.99, 0.38, 5.2, 0.31, 0.97, 0.97, 0.28)},
      {"A.3", estimation_row(0.99, 0.96, 0.87, 5.8, 0.54, 0.98, 0.92, 0.28)},
      {"A.4", estimation_row(0.96, 0.99, 0.36, 5.2, 0.32, 0.95, 0.98, 0.37)},
      {"B.1", estimation_row(0.97, 0.99, 0.37, 11.4, 0.15, 1.00, 0.99, 0.09)},
      {"B.2", estimation_row(0.98, 0.99, 0.38, 21.2, 0.12, 1.00, 0.99, 0.08)},
      {"C.1", estimation_row(1.00, 0.97, 0.25, 5.6, 0.23, 1.00, 0.92, 0.11)},
      {"C.2", estimation_row(0.99, 0.95, 0.45, 5.0, 0.31, 1.00, 0.92, 0.04)},
      {"C.3", estimation_row(1.00, 0.96, 0.18, 6.7, 0.19, 1.00, 0.87, 0.14)},
      {"C.3'", estimation_row(1.00, 0.99, 0.13, 5.2, 0.23, 1.00, 0.90, 0.06)},
  };
  std::vector<Row> rows;
  for (const auto& [preset, paper] : published) add_rows(rows, preset, run_setting(o, preset_spec(preset), false), paper);
  return rows;
}

std::vector<Row> table3(const ReproduceOptions& o) {
  struct Entry {
    const char* preset;
    NoiseFamily family;
    PaperRow paper;
  };
  const std::vector<Entry> published = {
      {"A.2", NoiseFamily::student_t, estimation_row(0.99, 0.95, 0.60, 6.00, 0.24, 0.96, 0.96, 0.27)},
      {"A.2", NoiseFamily::elliptical, estimation_row(0.97, 0.99, 0.36, 5.1, 0.34, 1.00, 0.85, 0.15)},
      {"B.1", NoiseFamily::student_t, estimation_row(0.98, 0.95, 0.61, 10.4, 0.34, 0.99, 0.95, 0.25)},
      {"B.1", NoiseFamily::elliptical, estimation_row(0.95, 0.99, 0.37, 10.1, 0.40, 1.00, 0.90, 0.09)},
      {"C.1", NoiseFamily::student_t, estimation_row(0.99, 0.92, 0.22, 6.0, 0.09, 1.00, 0.93, 0.10)},
      {"C.1", NoiseFamily::elliptical, estimation_row(1.00, 0.90, 0.32, 5.2, 0.13, 1.00, 0.92, 0.07)},
      {"C.2", NoiseFamily::student_t, estimation_row(0.99, 0.95, 0.37, 5.1, 0.22, 1.00, 0.89, 0.10)},
      {"C.2", NoiseFamily::elliptical, estimation_row(0.88, 0.97, 0.43, 5.1, 0.40, 1.00, 0.86, 0.10)},
  };
  std::vector<Row> rows;
  for (const Entry& e : published) {
    ExperimentSpec spec = preset_spec(e.preset);
    spec.noise.family = e.family;
    add_rows(rows, std::string(e.preset) + "/" + to_string(e.family), run_setting(o, spec, false), e.paper);
  }
  return rows;
}

std::vector<Row> table4(const ReproduceOptions& o) {
  const std::vector<std::tuple<const char*, double, double>> published = {
      {"A.1", 0.89, 0.23}, {"C.1", 0.62, 0.10}, {"C.2", 0.93, 0.17}, {"C.3", 0.68, 0.10}, {"B.1", 0.92, 0.14},
      {"B.2", 0.94, 0.14}, {"A.2", 0.87, 0.24}, {"A.3", 0.96, 0.44}, {"A.4", 0.89, 0.274},
  };
  std::vector<Row> rows;
  for (const auto& [preset, fx, fz] : published)
    add_rows(rows, preset, run_setting(o, preset_spec(preset), true), {{"forecast.x", fx}, {"forecast.z", fz}});
  return rows;
}

std::vector<Row> table5(const ReproduceOptions& o) {
  const PaperRow paper = {
      {"A.sen_twostep", 0.97}, {"A.spc_twostep", 0.95}, {"A.error_twostep", 0.52}, {"B.error_twostep", 0.27},
      {"B.rank_twostep", 5},   {"C.sen_twostep", 1.00}, {"C.spc_twostep", 0.98}, {"C.error_twostep", 0.12},
      {"A.sen", 0.97},         {"A.spc", 0.97},         {"A.error", 0.36},         {"B.error", 0.24},
      {"B.rank", 5},           {"C.sen", 1.00},         {"C.spc", 0.95},           {"C.error", 0.05},
  };
  std::vector<Row> rows;
  const ExperimentReport rep = run_setting(o, preset_spec("A.1"), false);
  add_rows(rows, "A.1", rep, paper);
  if (auto it = rep.summary.find("trace_ok"); it != rep.summary.end())
    rows.push_back(make_row("A.1", "trace_ok", it->second, 1.0));
  return rows;
}

// Long-series length used for subsampling, in multiples of the block length.
constexpr Eigen::Index kSeriesMultiple = 20;

CalibrationSpec calibration(const ReproduceOptions& o, Eigen::Index p1, Eigen::Index p2, double rho_c,
                            Eigen::Index T) {
  CalibrationSpec c;
  c.model.preset = "test";
  c.model.p1 = p1;
  c.model.p2 = p2;
  c.model.rho_a = 0.5;
  c.model.rho_c = rho_c;
  c.model.T = T;
  c.model.identity_noise = true;
  c.model.seed = o.seed;
  c.model.b_structure = BStructure::zero;
  c.model.rank_b = 0;
  c.n_subsamples = o.profile.subsamples;
  c.block_length = T;
  c.series_length = kSeriesMultiple * T;
  return c;
}

// Sparse alternative for the higher-criticism power rows.
constexpr double kSparsePowerExponent = -0.4;
constexpr double kSparsePowerSnr = 0.8;

double sparse_power_probability(Eigen::Index p1, Eigen::Index p2) {
  return std::pow(static_cast<double>(p1 * p2), kSparsePowerExponent);
}

std::string setting_name(Eigen::Index p1, Eigen::Index p2, double rho_c, Eigen::Index T) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(%ld,%ld) rhoC=%.1f T=%ld", static_cast<long>(p1), static_cast<long>(p2), rho_c,
                static_cast<long>(T));
  return buf;
}

Row rate_row(const std::string& setting, const std::string& metric, const CalibrationResult& r, double paper) {
  Summary s;
  s.mean = r.rate;
  s.n = static_cast<std::size_t>(r.n_subsamples);
  Row row = make_row(setting, metric, s, paper);
  if (paper >= 1.0) row.lo = 1.0 - kRateBand;
  return row;
}

std::vector<Row> table8(const ReproduceOptions& o) {
  struct Entry {
    Eigen::Index p1, p2;
    double rho_c;
    Eigen::Index T;
    int rank;  // rank of B*; the size columns test r <= rank, power tests r <= rank - 1
    double size01, size05, size10, power;
  };
  const std::vector<Entry> published = {
      {20, 20, 0.5, 500, 0, 0.028, 0.123, 0.227, 1},   {20, 20, 0.5, 1000, 0, 0.015, 0.073, 0.137, 1},
      {20, 20, 0.5, 2000, 0, 0.011, 0.059, 0.118, 1},  {50, 20, 0.5, 500, 0, 0.070, 0.228, 0.355, 1},
      {50, 20, 0.5, 1000, 0, 0.026, 0.125, 0.226, 1},  {50, 20, 0.5, 2000, 0, 0.013, 0.094, 0.163, 1},
      {20, 50, 0.5, 500, 0, 0.484, 0.751, 0.857, 1},   {20, 50, 0.5, 1000, 0, 0.089, 0.246, 0.375, 1},
      {20, 50, 0.5, 2000, 0, 0.020, 0.088, 0.164, 1},  {100, 50, 0.5, 500, 0, 0.997, 0.999, 1.0, 1},
      {100, 50, 0.5, 1000, 0, 0.608, 0.828, 0.908, 1}, {100, 50, 0.5, 2000, 0, 0.166, 0.374, 0.511, 1},
      {20, 50, 0.8, 500, 0, 0.533, 0.789, 0.880, 1},   {20, 50, 0.8, 1000, 0, 0.130, 0.306, 0.452, 1},
      {20, 50, 0.8, 2000, 0, 0.045, 0.145, 0.252, 1},  {50, 20, 0.8, 500, 0, 0.083, 0.250, 0.382, 1},
      {50, 20, 0.8, 1000, 0, 0.039, 0.133, 0.234, 1},  {50, 20, 0.8, 2000, 0, 0.019, 0.096, 0.174, 1},
      {20, 50, 0.5, 500, 5, 0.092, 0.274, 0.400, 1},   {20, 50, 0.5, 1000, 5, 0.034, 0.140, 0.236, 1},
      {20, 50, 0.5, 2000, 5, 0.022, 0.096, 0.178, 1},  {50, 20, 0.5, 500, 5, 0.454, 0.722, 0.829, 1},
      {50, 20, 0.5, 1000, 5, 0.126, 0.313, 0.452, 1},  {50, 20, 0.5, 2000, 5, 0.062, 0.184, 0.284, 1},
  };
  std::vector<Row> rows;
  for (const Entry& e : published) {
    const std::string name = setting_name(e.p1, e.p2, e.rho_c, e.T) + " rank=" + std::to_string(e.rank);
    note(o, name);
    CalibrationSpec size = calibration(o, e.p1, e.p2, e.rho_c, e.T);
    size.method = TestMethod::rank;
    if (e.rank > 0) {
      size.model.b_structure = BStructure::low_rank;
      size.model.rank_b = e.rank;
    }
    size.r_null = e.rank;
    const std::pair<double, double> levels[] = {{0.01, e.size01}, {0.05, e.size05}, {0.10, e.size10}};
    for (const auto& [alpha, paper] : levels) {
      size.alpha = alpha;
      char metric[32];
      std::snprintf(metric, sizeof metric, "size@%.2f", alpha);
      rows.push_back(rate_row(name, metric, run_calibration(size), paper));
    }
    CalibrationSpec power = size;
    power.model.b_structure = BStructure::low_rank;
    power.model.rank_b = std::max(1, e.rank);
    power.r_null = power.model.rank_b - 1;
    power.alpha = 0.01;
    rows.push_back(rate_row(name, "power@0.01", run_calibration(power), e.power));
  }
  return rows;
}

std::vector<Row> table9(const ReproduceOptions& o) {
  struct Entry {
    Eigen::Index p1, p2;
    double rho_c;
    double size[4], power[4];
  };
  const Eigen::Index lengths[4] = {200, 500, 1000, 2000};
  const std::vector<Entry> published = {
      {20, 20, 0.5, {0.244, 0.097, 0.074, 0.055}, {1, 1, 1, 1}},
      {50, 20, 0.5, {0.393, 0.131, 0.108, 0.074}, {1, 1, 1, 1}},
      {20, 50, 0.5, {0.996, 0.351, 0.153, 0.093}, {1, 1, 1, 1}},
      {100, 50, 0.5, {1.000, 0.963, 0.270, 0.115}, {1, 1, 1, 1}},
      {50, 20, 0.8, {0.402, 0.158, 0.112, 0.075}, {0.829, 0.996, 1, 1}},
      {20, 50, 0.8, {0.999, 0.430, 0.166, 0.111}, {1, 1, 1, 1}},
  };
  std::vector<Row> rows;
  for (const Entry& e : published) {
    for (int k = 0; k < 4; ++k) {
      const std::string name = setting_name(e.p1, e.p2, e.rho_c, lengths[k]);
      note(o, name);
      CalibrationSpec size = calibration(o, e.p1, e.p2, e.rho_c, lengths[k]);
      size.method = TestMethod::higher_criticism;
      rows.push_back(rate_row(name, "size", run_calibration(size), e.size[k]));
      CalibrationSpec power = size;
      power.model.b_structure = BStructure::sparse;
      power.model.prob_b = sparse_power_probability(e.p1, e.p2);
      power.model.snr_b = kSparsePowerSnr;
      rows.push_back(rate_row(name, "power", run_calibration(power), e.power[k]));
    }
  }
  return rows;
}

std::string rows_to_csv(const std::string& table, const std::vector<Row>& rows) {
  std::string out = "table,setting,metric,mean,sd,n,paper,lo,hi,within\n";
  for (const Row& r : rows) {
    out += table + ",\"" + r.setting + "\"," + r.metric + "," + format_double(r.mean) + "," +
           (r.sd ? format_double(*r.sd) : std::string()) + "," + std::to_string(r.n) + "," + format_double(r.paper) +
           "," + format_double(r.lo) + "," + format_double(r.hi) + "," + (r.within() ? "1" : "0") + "\n";
  }
  return out;
}

Json rows_to_json(const ReproduceOptions& o, const std::vector<Row>& rows) {
  Json items = Json::array();
  int inside = 0;
  for (const Row& r : rows) {
    inside += r.within() ? 1 : 0;
    items.push_back({{"setting", r.setting},
                     {"metric", r.metric},
                     {"mean", r.mean},
                     {"sd", r.sd ? Json(*r.sd) : Json(nullptr)},
                     {"n", r.n},
                     {"paper", r.paper},
                     {"band", {r.lo, r.hi}},
                     {"within", r.within()}});
  }
  return {{"schema_version", kSchemaVersion},
          {"table", o.table},
          {"profile", o.profile.name},
          {"replications", o.profile.replications},
          {"subsamples", o.profile.subsamples},
          {"seed", o.seed},
          {"rows", items},
          {"within_band", inside},
          {"total", rows.size()}};
}

}  // namespace

ReproduceProfile parse_profile(const std::string& name) {
  if (name == "desk") return {"desk", 20, 500};
  if (name == "full") return {"full", 100, 3000};
  throw InvalidArgument("unknown profile '" + name + "' (expected desk|full)");
}

std::vector<std::string> table_ids() { return {"table2", "table3", "table4", "table5", "table8", "table9"}; }

Json reproduce(const ReproduceOptions& o) {
  std::vector<Row> rows;
  if (o.table == "table2") rows = table2(o);
  else if (o.table == "table3") rows = table3(o);
  else if (o.table == "table4") rows = table4(o);
  else if (o.table == "table5") rows = table5(o);
  else if (o.table == "table8") rows = table8(o);
  else if (o.table == "table9") rows = table9(o);
  else throw InvalidArgument("unknown table '" + o.table + "' (expected table2|table3|table4|table5|table8|table9)");

  Json summary = rows_to_json(o, rows);
  if (!o.out_dir.empty()) {
    std::filesystem::create_directories(o.out_dir);
    const std::filesystem::path dir(o.out_dir);
    write_text((dir / (o.table + ".csv")).string(), rows_to_csv(o.table, rows));
    write_text((dir / (o.table + ".json")).string(), summary.dump(2) + "\n");
  }
  return summary;
}

}  // namespace tbvar
