#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rsr/dataset.hpp"
#include "rsr/estimators.hpp"

namespace rsr {

/// One estimator entry of an experiment: which algorithm plus its knobs.
struct EstimatorSpec {
  std::string name;  // "spca" | "sggd" | "ransac"
  SggdConfig sggd;
  RansacConfig ransac;
};

/// A sweep: a generator model whose numeric parameters may be lists (sweep
/// axes), a set of estimators, and trial bookkeeping. Cells are the
/// Cartesian product of the axes in declaration order.
struct ExperimentConfig {
  std::string model;  // "haystack" | "general_line" | "equipartition" | "axis_spike"
  std::vector<std::pair<std::string, std::vector<double>>> model_params;
  std::vector<EstimatorSpec> estimators;
  int trials_per_cell = 1;
  std::uint64_t base_seed = 0;
  double recovery_tol = 1e-6;
  std::string output_dir = ".";

  void validate() const;
  long long cell_count() const;
  /// Parameter values of one cell, mixed-radix decode of cell_index.
  std::vector<std::pair<std::string, double>> cell_params(long long cell_index) const;
};

/// Parses the sectioned key-value config format ([model] / [estimator] /
/// [run] sections, `key = value...` lines, '#' comments). Throws ConfigError
/// with the offending line number.
ExperimentConfig parse_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config_text(const std::string& text);

/// One trial outcome. wall_ms is informational and kept out of the trials
/// CSV so reruns are byte-identical.
struct TrialResult {
  long long cell_index = 0;
  int trial_index = 0;
  std::string estimator;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, double>> params;
  double theta1 = 0.0;
  bool recovered = false;
  int iterations = 0;
  double energy_final = 0.0;
  double snr = 0.0;
  double kappa_d = 0.0;
  double stability_lower_bound = 0.0;
  double snr_required_sggd = 0.0;
  std::string status = "ok";
  double wall_ms = 0.0;
};

/// Builds the trial's dataset from the mixed seed and runs one estimator.
/// Estimator errors land in TrialResult::status, never abort a sweep.
TrialResult run_trial(const ExperimentConfig& cfg, long long cell_index,
                      int estimator_index, int trial_index);

/// Deterministic seed for (cell, trial); documented as
/// mix_seed(base_seed, cell_index, trial_index) from rng.hpp.
std::uint64_t trial_seed(const ExperimentConfig& cfg, long long cell_index,
                         int trial_index);

struct SweepResult {
  std::vector<TrialResult> trials;  // ordered by (cell, estimator, trial)
  std::string trials_csv;
  std::string summary_csv;
  std::string timing_csv;
};

/// Runs the full Cartesian product on a worker pool. Results are ordered by
/// (cell, estimator, trial) regardless of completion order, so parallel and
/// serial runs write identical bytes. workers = 0 reads RSR_WORKERS, else
/// hardware concurrency.
SweepResult sweep(const ExperimentConfig& cfg, int workers = 0);

/// Per-estimator SNR at which the recovery rate crosses 0.5 (linear
/// interpolation between grid cells), printed next to a theoretical
/// threshold column from the summary. Also writes one plot-ready
/// (snr, recovery_rate) CSV per estimator under out_prefix. Non-monotone
/// rates produce a warning, not a failure.
void report_phase_transition(const std::string& summary_csv_path,
                             std::ostream& out, const std::string& out_prefix,
                             const std::string& threshold_column = "snr_required_sggd");

}  // namespace rsr
