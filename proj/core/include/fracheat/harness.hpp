#ifndef FRACHEAT_HARNESS_HPP
#define FRACHEAT_HARNESS_HPP

#include <map>
#include <string>
#include <vector>

#include "fracheat/heat_kernel.hpp"
#include "fracheat/quadrature.hpp"

namespace fracheat {

inline constexpr const char *artifact_version = "fracheat 0.1.0";

// Plain-text key = value configuration with [section] headers. Keys outside
// a section are the run-level controls (kind, seed, out, threads); section
// keys are stored as "section.key". Unknown keys are rejected against the
// per-kind schema before anything is written.
struct ExperimentConfig {
  std::string kind;
  uint64_t seed = 1;
  std::string out_dir = "out";
  int threads = 0;
  std::map<std::string, std::string> keys;

  bool has(const std::string &k) const { return keys.count(k) > 0; }
  std::string get(const std::string &k, const std::string &fallback = "") const;
  double get_double(const std::string &k, double fallback) const;
  double require_double(const std::string &k) const;
  long get_long(const std::string &k, long fallback) const;
  std::string require_str(const std::string &k) const;
};

ExperimentConfig parse_config_text(const std::string &text);
ExperimentConfig parse_config_file(const std::string &path);

struct RunResult {
  std::map<std::string, double> scalars;
  std::vector<std::string> files;
  std::vector<std::string> warnings;
};

// Validate, write the manifest, execute the experiment, emit CSV/grid files.
RunResult run(const ExperimentConfig &cfg);

// Kernel decomposition with default options, shared within the process.
const KernelDecomposition &shared_kernel();

MeshDensity density_by_name(const std::string &name);

} // namespace fracheat

#endif
