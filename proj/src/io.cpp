#include "tbvar/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tbvar/error.hpp"

namespace tbvar {

std::string format_double(double v) {
  char buf[32];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::string to_csv(const Matrix& m, const std::string& prefix) {
  std::string out;
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (j) out += ',';
    out += prefix + std::to_string(j + 1);
  }
  out += '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_csv(const std::string& path, const Matrix& m, const std::string& prefix) {
  write_text(path, to_csv(m, prefix));
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\r')) cell.pop_back();
    std::size_t b = 0;
    while (b < cell.size() && cell[b] == ' ') ++b;
    cells.push_back(cell.substr(b));
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& s, std::size_t row, std::size_t col) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || s.empty())
    throw InvalidArgument("CSV: row " + std::to_string(row) + ", column " + std::to_string(col) +
                          ": '" + s + "' is not a number");
  return v;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  CsvTable t;
  if (!std::getline(in, line)) throw InvalidArgument("CSV: empty input");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
  t.header = split_line(line);
  if (t.header.empty()) throw InvalidArgument("CSV: empty header");
  std::vector<std::vector<double>> rows;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_line(line);
    if (cells.size() != t.header.size())
      throw InvalidArgument("CSV: row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                            " fields, header has " + std::to_string(t.header.size()));
    std::vector<double> vals(cells.size());
    for (std::size_t j = 0; j < cells.size(); ++j) vals[j] = parse_number(cells[j], row, j + 1);
    rows.push_back(std::move(vals));
  }
  t.data.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.header.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) t.data(i, j) = rows[i][j];
  return t;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_text(path)); }

Matrix difference(const Matrix& m, const std::string& mode) {
  if (m.rows() < 2) throw InvalidArgument("difference: need at least 2 rows");
  const Matrix prev = m.topRows(m.rows() - 1), next = m.bottomRows(m.rows() - 1);
  if (mode == "abs") return next - prev;
  if (mode == "rel") {
    if ((prev.array() == 0.0).any()) throw InvalidArgument("difference: relative change with a zero value");
    return ((next - prev).array() / prev.array()).matrix();
  }
  throw InvalidArgument("difference: mode must be abs or rel");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw InvalidArgument("write to '" + path + "' failed");
}

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j) {
  if (!j.is_array()) throw InvalidArgument("matrix JSON must be an array of rows");
  const Eigen::Index r = static_cast<Eigen::Index>(j.size());
  if (r == 0) return Matrix();
  if (!j[0].is_array()) throw InvalidArgument("matrix JSON rows must be arrays");
  const Eigen::Index c = static_cast<Eigen::Index>(j[0].size());
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (!j[i].is_array() || static_cast<Eigen::Index>(j[i].size()) != c)
      throw InvalidArgument("matrix JSON rows have unequal lengths");
    for (Eigen::Index k = 0; k < c; ++k) {
      if (!j[i][k].is_number()) throw InvalidArgument("matrix JSON entries must be numbers");
      m(i, k) = j[i][k].get<double>();
    }
  }
  return m;
}

Json params_to_json(const ModelParams& p) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["b_structure"] = to_string(p.b_structure);
  if (p.A.size()) j["A"] = matrix_to_json(p.A);
  if (p.B.size()) j["B"] = matrix_to_json(p.B);
  if (p.C.size()) j["C"] = matrix_to_json(p.C);
  if (p.omega_u.size()) j["omega_u"] = matrix_to_json(p.omega_u);
  if (p.omega_v.size()) j["omega_v"] = matrix_to_json(p.omega_v);
  return j;
}

ModelParams params_from_json(const Json& j) {
  if (!j.is_object()) throw InvalidArgument("params JSON must be an object");
  ModelParams p;
  if (j.contains("b_structure")) p.b_structure = parse_b_structure(j.at("b_structure").get<std::string>());
  for (const char* key : {"A", "B", "C", "omega_u", "omega_v"})
    if (!j.contains(key)) throw InvalidArgument(std::string("params JSON: missing field '") + key + "'");
  p.A = matrix_from_json(j.at("A"));
  p.B = matrix_from_json(j.at("B"));
  p.C = matrix_from_json(j.at("C"));
  p.omega_u = matrix_from_json(j.at("omega_u"));
  p.omega_v = matrix_from_json(j.at("omega_v"));
  return p;
}

Json fit_to_json(const FitResult& f) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["block"] = f.block2 ? 2 : 1;
  if (f.block2) {
    j["B"] = matrix_to_json(f.params.B);
    j["C"] = matrix_to_json(f.params.C);
    j["omega_v"] = matrix_to_json(f.params.omega_v);
    j["b_structure"] = to_string(f.params.b_structure);
    j["rank_B"] = rank_of(f.params.B);
  } else {
    j["A"] = matrix_to_json(f.params.A);
    j["omega_u"] = matrix_to_json(f.params.omega_u);
  }
  j["objective_trace"] = f.objective_trace;
  j["outer_iterations"] = f.outer_iterations;
  j["inner_iterations"] = f.inner_iterations;
  j["converged"] = f.converged;
  return j;
}

Json report_to_json(const TestReport& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["method"] = to_string(r.method);
  j["statistic"] = r.statistic;
  j["T"] = r.T;
  if (r.method != TestMethod::higher_criticism) j["scaled_statistic"] = r.scaled_statistic;
  j["dof"] = r.dof ? Json(*r.dof) : Json(nullptr);
  j["threshold"] = r.threshold ? Json(*r.threshold) : Json(nullptr);
  j["p_value"] = r.p_value ? Json(*r.p_value) : Json(nullptr);
  j["alpha"] = r.alpha ? Json(*r.alpha) : Json(nullptr);
  j["r_null"] = r.r_null ? Json(*r.r_null) : Json(nullptr);
  j["reject"] = r.reject;
  if (!r.eigenvalues.empty()) j["eigenvalues"] = r.eigenvalues;
  return j;
}

Json bounds_to_json(const BoundsReport& r) {
  Json checks = Json::array();
  for (const BoundCheck& c : r.checks)
    checks.push_back({{"name", c.name}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"margin", c.margin}});
  return {{"checks", checks}, {"min_margin", r.min_margin}, {"all_hold", r.all_hold()}};
}

Json summary_to_json(const Summary& s) {
  Json j{{"mean", s.mean}, {"n", s.n}};
  j["sd"] = s.sd ? Json(*s.sd) : Json(nullptr);
  return j;
}

}  // namespace tbvar
