#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "halting/algorithms.hpp"
#include "halting/ensembles.hpp"
#include "halting/limitlaw.hpp"
#include "halting/spectral.hpp"

namespace halting {

// Configuration problems map to CLI exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Study {
  halting,
  gap_law,
  zeta,
  deflation,
  projections,
  conditions,
  validate
};

Study study_from_name(const std::string& name);
const char* study_name(Study s);

struct ExperimentConfig {
  Study study = Study::halting;
  std::vector<std::string> ensembles = {"LOE", "LUE", "BE", "CBE"};
  std::vector<Algorithm> algorithms = {Algorithm::QR, Algorithm::P,
                                       Algorithm::IP};
  std::vector<int> sizes = {100, 200, 400};  // N grid
  std::vector<double> ds = {0.5, 2.0 / 3.0};
  double alpha = 6.0;
  long num_samples = 2000;
  std::uint64_t master_seed = 1;
  int workers = 0;  // 0: HALTING_LAB_WORKERS or the OpenMP default
  std::string out_dir = "out";
  std::vector<std::string> formats = {"csv", "json"};
  RescaleConvention rescale;
  ConditionParams cond;
  std::vector<double> s_grid = {0.025, 0.05, 0.1, 0.2};
  std::vector<double> p_grid = {0.5, 0.25, 0.1, 0.05, 0.01};
  bool spectral_path = true;  // halting study: closed forms vs iterating
  std::string edge = "both";  // gap-law: lower / upper / both
  bool fast = true;           // gap sampling: bidiagonal model when Gaussian
  long cap = 0;               // 0: default_iteration_cap
  bool quick = false;         // validate: reduced sizes

  // Strict parsing: unknown fields are rejected. forced, when set, must
  // agree with any "study" field in the JSON.
  static ExperimentConfig from_json(const nlohmann::json& j,
                                    std::optional<Study> forced = {});
  static ExperimentConfig from_file(const std::string& path,
                                    std::optional<Study> forced = {});

  void validate() const;  // throws ConfigError
  nlohmann::json echo() const;
};

struct ResultBundle {
  nlohmann::json summary;
  std::string csv;  // header plus one line per retained record
  long total_runs = 0;
  long included = 0;
  long capped = 0;
  long degenerate = 0;
  bool passed = true;  // validate study: invariant suite verdict
};

ResultBundle run_halting_study(const ExperimentConfig& cfg);
ResultBundle run_gap_law_study(const ExperimentConfig& cfg);
ResultBundle run_zeta_study(const ExperimentConfig& cfg);
ResultBundle run_deflation_study(const ExperimentConfig& cfg);
ResultBundle run_projection_study(const ExperimentConfig& cfg);
ResultBundle run_conditions_study(const ExperimentConfig& cfg);
ResultBundle run_error_validation(const ExperimentConfig& cfg);

ResultBundle run_study(const ExperimentConfig& cfg);

// Writes <out_dir>/<study>_samples.csv and <out_dir>/<study>_summary.json
// per cfg.formats, creating out_dir if needed. Throws std::runtime_error
// with the path on I/O failure. The summary's volatile "timing" block is
// the only part that varies between identical runs.
void emit(const ResultBundle& bundle, const ExperimentConfig& cfg);

// %.17g, locale-independent; shared by every CSV writer.
std::string format_double(double x);

// Exit code for a finished run: 1 when a validate bundle failed, 3 when
// the capped-sample rate exceeds 5%, else 0.
int exit_code_for(const ResultBundle& bundle);

}  // namespace halting
