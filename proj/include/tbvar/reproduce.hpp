#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tbvar/io.hpp"

namespace tbvar {

/// desk: 20 replications, 500 subsamples; full: 100 and 3000.
struct ReproduceProfile {
  std::string name = "desk";
  int replications = 20;
  int subsamples = 500;
};

ReproduceProfile parse_profile(const std::string& name);

struct ReproduceOptions {
  std::string table;
  ReproduceProfile profile;
  std::string out_dir;  // empty: no files
  int threads = 1;
  std::uint64_t seed = 20240101;
  std::ostream* log = nullptr;
};

std::vector<std::string> table_ids();

/// Runs one table of the simulation study. Writes <table>.csv (one row per
/// setting and metric) and <table>.json to out_dir, and returns the JSON
/// summary, which pairs every metric with the published value and a band.
Json reproduce(const ReproduceOptions& opts);

}  // namespace tbvar
