#ifndef CVBELL_SAMPLING_HPP
#define CVBELL_SAMPLING_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "cvbell/inequalities.hpp"
#include "cvbell/rng.hpp"
#include "cvbell/states.hpp"

namespace cvbell {

struct Setting {
  enum class Kind { Homodyne, Count };
  Kind kind = Kind::Homodyne;
  double theta = 0.0;  // homodyne LO phase, ignored for counting

  static Setting homodyne(double theta) { return {Kind::Homodyne, theta}; }
  static Setting count() { return {Kind::Count, 0.0}; }
};

// Joint quadrature distribution discretized on a uniform midpoint grid over
// [-L, L] per axis (1 or 2 modes). probs is flattened with axis 1 slowest and
// sums to 1 after renormalization; the pre-normalization mass defect is the
// off-grid tail and may not exceed 1e-9.
struct GridPdf {
  int n_axes = 1;
  int points = 2048;
  double halfwidth = 8.0;
  std::vector<double> thetas;
  Eigen::VectorXd probs;

  double cell_width() const { return 2.0 * halfwidth / points; }
  double cell_left(Eigen::Index i) const { return -halfwidth + i * cell_width(); }
  double midpoint(Eigen::Index i) const { return cell_left(i) + 0.5 * cell_width(); }

  // Σ p · x1^p1 · x2^p2 over cell midpoints.
  double moment(int p1, int p2 = 0) const;
};

// Per-trial measurement records. outcomes holds the recorded value per mode
// (quadrature real or photon count); for counting, detected=false means the
// recorded value has already been assigned 0.
struct SampleBatch {
  std::vector<Setting> settings;
  std::vector<Eigen::VectorXd> outcomes;
  std::vector<std::vector<std::uint8_t>> detected;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  Eigen::Index trials() const { return outcomes.empty() ? 0 : outcomes[0].size(); }
};

// Hermite functions phi_n for the vacuum-variance-1/4 convention
// (X = (a + a^dag)/2), evaluated by stable upward recurrence on normalized
// Hermite functions. Column n of the result is phi_n on the grid.
Eigen::MatrixXd hermite_functions(const Eigen::VectorXd& x, int n_max);

// Joint position density of the state after rotating each mode j by
// exp(-i theta_j N_j). Pure states are evaluated directly; mixed states are
// eigendecomposed and eigenvector densities summed (weights below 1e-12
// dropped). At most 2 modes jointly.
GridPdf quadrature_pdf(const FockTensor<double>& state, std::span<const double> thetas,
                       int points = 2048, double halfwidth = 8.0);

// Inverse-CDF sampling over grid cells with within-cell uniform jitter.
// Deterministic per (seed, stream).
SampleBatch sample_quadrature(const GridPdf& pdf, Eigen::Index trials,
                              std::uint64_t seed, std::uint64_t stream = 0);

// Joint photon numbers from the Fock diagonal, followed by independent
// binomial thinning with probability eta per photon (the counting-statistics
// form of the beam-splitter loss model). Deterministic per (seed, stream).
SampleBatch sample_counts(const FockTensor<double>& state, double eta,
                          Eigen::Index trials, std::uint64_t seed,
                          std::uint64_t stream = 0);

struct Moment {
  double mean = 0.0;
  double se = 0.0;
  Eigen::Index n = 0;
};

// Mergeable running sums; merging is associative and order-independent up to
// float rounding, so shards are combined in fixed shard order.
struct MomentAccum {
  Eigen::Index n = 0;
  double sum = 0.0;
  double sumsq = 0.0;

  void add(double x) {
    ++n;
    sum += x;
    sumsq += x * x;
  }
  void merge(const MomentAccum& o) {
    n += o.n;
    sum += o.sum;
    sumsq += o.sumsq;
  }
  Moment finalize() const;
};

struct Ingredients {
  Moment xx, yy, xy, yx;          // <X1X2>, <Y1Y2>, <X1Y2>, <Y1X2>
  Moment n1n2, n1, n2;            // counting; undetected events recorded as 0
  Moment x1sq, y1sq, x2sq, y2sq;  // per-mode quadrature second moments
  Moment n1_det, n2_det;          // detected-ensemble count means
  Moment p1_det, p2_det;          // observed detection rates
};

// Rebuild the inequality ingredients from sample batches. Each batch feeds
// exactly the estimators its setting pair allows; the seven core ingredients
// must each end up with at least 2 trials or a SamplingError names the
// missing setting combination.
Ingredients estimate_ingredients(std::span<const SampleBatch> batches);

// Assemble a sampled report: lhs from the 4-segment quadrature decomposition
// (or its second-family mirror), SEs by first-order error propagation,
// verdict at sigma_threshold combined standard errors.
InequalityReport<double> report_from_ingredients(Family family, const Ingredients& ing,
                                                 double sigma_threshold = 3.0);

// SampleBatch CSV export: trial,setting1,setting2,outcome1,outcome2,detected1,detected2
std::string sample_batch_csv(const SampleBatch& batch);

}  // namespace cvbell

#endif
