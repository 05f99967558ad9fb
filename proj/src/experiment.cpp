#include "cvbell/experiment.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include "cvbell/channels.hpp"

namespace cvbell {

CellUsage cell_usage(int r1, int r2) {
  CellUsage u;
  u.joint_quadrature = r1 < 2 && r2 < 2;
  u.joint_counts = r1 == 2 && r2 == 2;
  u.quad_axis = {r1 < 2 ? r1 : -1, r2 < 2 ? r2 : -1};
  u.count_marginal = {r1 == 2, r2 == 2};
  return u;
}

namespace {

constexpr double kHalfPi = std::numbers::pi / 2;

struct ShardAccums {
  MomentAccum xx, yy, xy, yx, n1n2, n1, n2;
  MomentAccum x1sq, y1sq, x2sq, y2sq, n1d, n2d, p1, p2;
  std::array<std::array<Eigen::Index, 3>, 3> histogram{};
  std::vector<TrialRecord> log;

  void merge(const ShardAccums& o) {
    xx.merge(o.xx); yy.merge(o.yy); xy.merge(o.xy); yx.merge(o.yx);
    n1n2.merge(o.n1n2); n1.merge(o.n1); n2.merge(o.n2);
    x1sq.merge(o.x1sq); y1sq.merge(o.y1sq); x2sq.merge(o.x2sq); y2sq.merge(o.y2sq);
    n1d.merge(o.n1d); n2d.merge(o.n2d); p1.merge(o.p1); p2.merge(o.p2);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) histogram[i][j] += o.histogram[i][j];
    log.insert(log.end(), o.log.begin(), o.log.end());
  }
};

// One sampleable distribution: grid geometry plus cumulative cell masses.
struct CellSampler {
  GridPdf pdf;
  std::vector<double> cum;

  void init(GridPdf p) {
    pdf = std::move(p);
    cum.resize(static_cast<std::size_t>(pdf.probs.size()));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < pdf.probs.size(); ++i) {
      acc += pdf.probs[i];
      cum[static_cast<std::size_t>(i)] = acc;
    }
  }
};

std::vector<double> cum_of(const Eigen::VectorXd& p) {
  std::vector<double> cum(static_cast<std::size_t>(p.size()));
  double acc = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    acc += std::max(0.0, p[i]);
    cum[static_cast<std::size_t>(i)] = acc;
  }
  return cum;
}

}  // namespace

LoopholeReport run_experiment(const ExperimentConfig& config) {
  for (const auto& probs : {config.setting_probs_1, config.setting_probs_2}) {
    double sum = 0.0;
    for (double p : probs) {
      if (p < 0.0) throw ConfigError("run_experiment: negative setting probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ConfigError("run_experiment: setting probabilities must sum to 1");
  }
  if (config.trials < 1) throw ConfigError("run_experiment: trials must be >= 1");
  if (!(config.p_detect >= 0.0 && config.p_detect <= 1.0))
    throw ConfigError("run_experiment: p_detect must lie in [0,1]");
  if (!(config.eta >= 0.0 && config.eta <= 1.0))
    throw ConfigError("run_experiment: eta must lie in [0,1]");
  if (config.shard_size < 1) throw ConfigError("run_experiment: shard_size must be >= 1");

  FockTensor<double> state = build(config.state);
  if (state.num_modes() != 2)
    throw ConfigError("run_experiment: joint CV sampling requires a 2-mode state");
  if (config.eta < 1.0) state = apply_loss_all_modes(state, config.eta);

  // Measurement distributions, built once. Axis index 0 = X, 1 = Y.
  const double thetas[2] = {0.0, kHalfPi};
  std::array<std::array<CellSampler, 2>, 2> joint;
  std::array<std::array<CellSampler, 2>, 2> marginal;  // [mode-1][axis]
  std::array<std::vector<double>, 2> marginal_counts_cum;
  for (int a1 = 0; a1 < 2; ++a1)
    for (int a2 = 0; a2 < 2; ++a2) {
      const double th[2] = {thetas[a1], thetas[a2]};
      joint[a1][a2].init(
          quadrature_pdf(state, th, config.grid_points, config.grid_halfwidth));
    }
  for (int mode = 1; mode <= 2; ++mode) {
    const FockBasis mode_basis({state.basis().cutoff(mode)});
    const FockTensor<double> reduced =
        FockTensor<double>::mixed(mode_basis, reduced_density(state, mode));
    for (int ax = 0; ax < 2; ++ax) {
      const double th[1] = {thetas[ax]};
      marginal[mode - 1][ax].init(
          quadrature_pdf(reduced, th, config.grid_points, config.grid_halfwidth));
    }
    marginal_counts_cum[mode - 1] = cum_of(reduced.number_diagonal());
  }
  const std::vector<double> joint_counts_cum = cum_of(state.number_diagonal());
  const FockBasis& basis = state.basis();

  const std::array<std::vector<double>, 2> setting_cum = {
      std::vector<double>{config.setting_probs_1[0],
                          config.setting_probs_1[0] + config.setting_probs_1[1], 1.0},
      std::vector<double>{config.setting_probs_2[0],
                          config.setting_probs_2[0] + config.setting_probs_2[1], 1.0}};

  const Eigen::Index n_shards =
      (config.trials + config.shard_size - 1) / config.shard_size;
  std::vector<ShardAccums> shards(static_cast<std::size_t>(n_shards));

  auto run_shard = [&](Eigen::Index shard) {
    // Fixed per-trial draw order: R1, R2, outcome draws in mode order,
    // detection flags in mode order.
    RngStream rng(config.seed, static_cast<std::uint64_t>(shard) + 1);
    ShardAccums& acc = shards[static_cast<std::size_t>(shard)];
    const Eigen::Index begin = shard * config.shard_size;
    const Eigen::Index end = std::min(config.trials, begin + config.shard_size);

    auto draw_joint_quadrature = [&](const CellSampler& s, double& o1, double& o2) {
      const auto cell =
          static_cast<Eigen::Index>(rng.categorical_from_cumulative(s.cum));
      const double dx = s.pdf.cell_width();
      const Eigen::Index i1 = cell / s.pdf.points, i2 = cell % s.pdf.points;
      o1 = s.pdf.cell_left(i1) + rng.uniform() * dx;
      o2 = s.pdf.cell_left(i2) + rng.uniform() * dx;
    };
    auto draw_marginal_quadrature = [&](const CellSampler& s) {
      const auto cell =
          static_cast<Eigen::Index>(rng.categorical_from_cumulative(s.cum));
      return s.pdf.cell_left(cell) + rng.uniform() * s.pdf.cell_width();
    };

    for (Eigen::Index t = begin; t < end; ++t) {
      const int r1 = static_cast<int>(rng.categorical_from_cumulative(setting_cum[0]));
      const int r2 = static_cast<int>(rng.categorical_from_cumulative(setting_cum[1]));
      ++acc.histogram[r1][r2];
      const CellUsage usage = cell_usage(r1, r2);
      double out1 = 0.0, out2 = 0.0;
      bool det1 = true, det2 = true;

      if (usage.joint_quadrature) {
        draw_joint_quadrature(joint[r1][r2], out1, out2);
        MomentAccum& corr = r1 == 0 ? (r2 == 0 ? acc.xx : acc.xy)
                                    : (r2 == 0 ? acc.yx : acc.yy);
        corr.add(out1 * out2);
        (r1 == 0 ? acc.x1sq : acc.y1sq).add(out1 * out1);
        (r2 == 0 ? acc.x2sq : acc.y2sq).add(out2 * out2);
      } else if (usage.joint_counts) {
        const auto cell = static_cast<Eigen::Index>(
            rng.categorical_from_cumulative(joint_counts_cum));
        const double c1 = basis.digit(cell, 1);
        const double c2 = basis.digit(cell, 2);
        det1 = rng.bernoulli(config.p_detect);
        det2 = rng.bernoulli(config.p_detect);
        out1 = det1 ? c1 : 0.0;  // undetected events recorded as 0
        out2 = det2 ? c2 : 0.0;
        acc.n1n2.add(out1 * out2);
        acc.n1.add(out1);
        acc.n2.add(out2);
        acc.p1.add(det1 ? 1.0 : 0.0);
        acc.p2.add(det2 ? 1.0 : 0.0);
        if (det1) acc.n1d.add(c1);
        if (det2) acc.n2d.add(c2);
      } else {
        // Mismatched pair: each side drawn from its exact marginal, feeding
        // single-mode estimators only.
        if (usage.quad_axis[0] >= 0) {
          out1 = draw_marginal_quadrature(marginal[0][usage.quad_axis[0]]);
          (usage.quad_axis[0] == 0 ? acc.x1sq : acc.y1sq).add(out1 * out1);
        }
        if (usage.quad_axis[1] >= 0) {
          out2 = draw_marginal_quadrature(marginal[1][usage.quad_axis[1]]);
          (usage.quad_axis[1] == 0 ? acc.x2sq : acc.y2sq).add(out2 * out2);
        }
        if (usage.count_marginal[0]) {
          const auto cell = static_cast<Eigen::Index>(
              rng.categorical_from_cumulative(marginal_counts_cum[0]));
          det1 = rng.bernoulli(config.p_detect);
          out1 = det1 ? double(cell) : 0.0;
          acc.n1.add(out1);
          acc.p1.add(det1 ? 1.0 : 0.0);
          if (det1) acc.n1d.add(double(cell));
        }
        if (usage.count_marginal[1]) {
          const auto cell = static_cast<Eigen::Index>(
              rng.categorical_from_cumulative(marginal_counts_cum[1]));
          det2 = rng.bernoulli(config.p_detect);
          out2 = det2 ? double(cell) : 0.0;
          acc.n2.add(out2);
          acc.p2.add(det2 ? 1.0 : 0.0);
          if (det2) acc.n2d.add(double(cell));
        }
      }

      if (config.record_trials)
        acc.log.push_back({static_cast<std::uint8_t>(r1), static_cast<std::uint8_t>(r2),
                           out1, out2, static_cast<std::uint8_t>(det1),
                           static_cast<std::uint8_t>(det2)});
    }
  };

  if (config.workers > 1 && n_shards > 1) {
    std::atomic<Eigen::Index> next{0};
    const int n_threads = static_cast<int>(
        std::min<Eigen::Index>(config.workers, n_shards));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int w = 0; w < n_threads; ++w)
      pool.emplace_back([&] {
        for (Eigen::Index s = next.fetch_add(1); s < n_shards; s = next.fetch_add(1))
          run_shard(s);
      });
    for (auto& th : pool) th.join();
  } else {
    for (Eigen::Index s = 0; s < n_shards; ++s) run_shard(s);
  }

  // Deterministic merge in shard order regardless of completion order.
  ShardAccums total;
  for (const auto& shard : shards) total.merge(shard);

  // Cells with nonzero probability must be populated.
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (config.setting_probs_1[i] <= 0.0 || config.setting_probs_2[j] <= 0.0) continue;
      if (total.histogram[i][j] < config.min_cell_trials)
        throw SamplingError("run_experiment: setting cell (R1=" + std::to_string(i) +
                            ",R2=" + std::to_string(j) + ") has " +
                            std::to_string(total.histogram[i][j]) + " < " +
                            std::to_string(config.min_cell_trials) + " trials");
    }

  LoopholeReport report;
  report.histogram = total.histogram;
  report.trial_log = std::move(total.log);

  Ingredients ing;
  ing.xx = total.xx.finalize(); ing.yy = total.yy.finalize();
  ing.xy = total.xy.finalize(); ing.yx = total.yx.finalize();
  ing.n1n2 = total.n1n2.finalize();
  ing.n1 = total.n1.finalize(); ing.n2 = total.n2.finalize();
  ing.x1sq = total.x1sq.finalize(); ing.y1sq = total.y1sq.finalize();
  ing.x2sq = total.x2sq.finalize(); ing.y2sq = total.y2sq.finalize();
  ing.n1_det = total.n1d.finalize(); ing.n2_det = total.n2d.finalize();
  ing.p1_det = total.p1.finalize(); ing.p2_det = total.p2.finalize();
  report.ingredients = ing;

  report.inequality = report_from_ingredients(config.family, ing, config.sigma_threshold);
  report.violated_naive = report.inequality.violated;
  report.sigma_naive = report.inequality.sigma;
  report.p_detect_observed = {ing.p1_det.n > 0 ? ing.p1_det.mean : 1.0,
                              ing.p2_det.n > 0 ? ing.p2_det.mean : 1.0};

  if (config.family == Family::Second) {
    // Full-LHV bound: Π_j [ p_jD <N_j>_D + (1 - p_jD) <X_j^2 + Y_j^2> ].
    double term[2], term_var[2];
    const Moment* ndet[2] = {&ing.n1_det, &ing.n2_det};
    const Moment* pdet[2] = {&ing.p1_det, &ing.p2_det};
    const Moment* xsq[2] = {&ing.x1sq, &ing.x2sq};
    const Moment* ysq[2] = {&ing.y1sq, &ing.y2sq};
    for (int j = 0; j < 2; ++j) {
      const double p = pdet[j]->n > 0 ? pdet[j]->mean : 1.0;
      const double nd = ndet[j]->n > 0 ? ndet[j]->mean : 0.0;
      const double total_intensity = xsq[j]->mean + ysq[j]->mean;
      term[j] = p * nd + (1.0 - p) * total_intensity;
      const double var_p =
          pdet[j]->n > 0 ? p * (1.0 - p) / double(pdet[j]->n) : 0.0;
      term_var[j] = (nd - total_intensity) * (nd - total_intensity) * var_p +
                    p * p * ndet[j]->se * ndet[j]->se +
                    (1.0 - p) * (1.0 - p) *
                        (xsq[j]->se * xsq[j]->se + ysq[j]->se * ysq[j]->se);
    }
    report.corrected_rhs = term[0] * term[1];
    report.corrected_rhs_se = std::sqrt(term[1] * term[1] * term_var[0] +
                                        term[0] * term[0] * term_var[1]);
    report.corrected_bound_available = true;
  } else {
    report.corrected_rhs = report.inequality.rhs;
    report.corrected_rhs_se = report.inequality.rhs_se;
    report.corrected_bound_available = false;
    report.note =
        "first family: corrected detection bound not defined, naive bound reported";
  }

  const double combined =
      std::sqrt(report.inequality.lhs_se * report.inequality.lhs_se +
                report.corrected_rhs_se * report.corrected_rhs_se);
  report.sigma_corrected =
      combined > 0.0 ? (report.inequality.lhs - report.corrected_rhs) / combined : 0.0;
  report.violated_corrected =
      report.inequality.lhs - report.corrected_rhs > config.sigma_threshold * combined;
  return report;
}

}  // namespace cvbell
