#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tbvar/estimate.hpp"
#include "tbvar/evaluation.hpp"
#include "tbvar/spectra.hpp"
#include "tbvar/testing.hpp"

namespace tbvar {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal form that round-trips (at most 17 significant digits).
std::string format_double(double v);

/// Header row prefix1..prefixN, then one row per observation.
std::string to_csv(const Matrix& m, const std::string& prefix);
void write_csv(const std::string& path, const Matrix& m, const std::string& prefix);

struct CsvTable {
  std::vector<std::string> header;
  Matrix data;
};

CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::string& path);

/// First differences ("abs") or relative changes ("rel"); drops the first row.
Matrix difference(const Matrix& m, const std::string& mode);

std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

Json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const Json& j);

Json params_to_json(const ModelParams& p);
ModelParams params_from_json(const Json& j);

Json fit_to_json(const FitResult& f);
Json report_to_json(const TestReport& r);
Json bounds_to_json(const BoundsReport& r);
Json summary_to_json(const Summary& s);

}  // namespace tbvar
