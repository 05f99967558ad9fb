#ifndef CVBELL_EXPERIMENT_HPP
#define CVBELL_EXPERIMENT_HPP

#include <array>
#include <string>

#include "cvbell/sampling.hpp"

namespace cvbell {

// End-to-end simulated Bell run on a two-mode state. Per trial each observer
// draws R in {0,1,2}: R=0 measures X, R=1 measures Y (homodyne), R=2 counts
// photons. Counting events go undetected with probability 1-p_detect and the
// undetected outcome is recorded as 0 (fixed policy). Detector efficiency eta
// is folded in once by sending the state through the loss channel before any
// distribution is formed; counting then samples the lossy Fock diagonal,
// which matches per-photon binomial thinning.
struct ExperimentConfig {
  StateSpec<double> state;
  Family family = Family::Second;
  double eta = 1.0;
  double p_detect = 1.0;
  std::array<double, 3> setting_probs_1{1 / 3.0, 1 / 3.0, 1 / 3.0};
  std::array<double, 3> setting_probs_2{1 / 3.0, 1 / 3.0, 1 / 3.0};
  Eigen::Index trials = 100000;
  std::uint64_t seed = 0;
  Eigen::Index min_cell_trials = 100;
  double sigma_threshold = 3.0;
  int grid_points = 1024;
  double grid_halfwidth = 8.0;
  Eigen::Index shard_size = 65536;  // trials per RNG stream; fixed so results
                                    // do not depend on worker count
  int workers = 1;
  bool record_trials = false;
};

struct TrialRecord {
  std::uint8_t r1, r2;
  double out1, out2;
  std::uint8_t det1, det2;
};

struct LoopholeReport {
  InequalityReport<double> inequality;  // lhs vs the naive (assign-zero) rhs
  double corrected_rhs = 0.0;           // full-LHV detection bound
  double corrected_rhs_se = 0.0;
  bool violated_naive = false;
  bool violated_corrected = false;
  double sigma_naive = 0.0;
  double sigma_corrected = 0.0;
  std::array<double, 2> p_detect_observed{1.0, 1.0};
  std::array<std::array<Eigen::Index, 3>, 3> histogram{};  // [r1][r2]
  Ingredients ingredients;
  bool corrected_bound_available = true;  // false: first family reports naive only
  std::string note;
  std::vector<TrialRecord> trial_log;
};

// Which estimators a setting cell feeds. Mismatched homodyne/count pairs
// contribute single-mode marginals only; no trial enters more than one
// correlator.
struct CellUsage {
  bool joint_quadrature = false;
  bool joint_counts = false;
  std::array<int, 2> quad_axis{-1, -1};  // -1 none, 0 X, 1 Y
  std::array<bool, 2> count_marginal{false, false};
};

CellUsage cell_usage(int r1, int r2);

LoopholeReport run_experiment(const ExperimentConfig& config);

}  // namespace cvbell

#endif
