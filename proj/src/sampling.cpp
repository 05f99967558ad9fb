#include "cvbell/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "cvbell/channels.hpp"
#include "cvbell/util.hpp"

namespace cvbell {

double GridPdf::moment(int p1, int p2) const {
  double acc = 0.0;
  if (n_axes == 1) {
    for (Eigen::Index i = 0; i < probs.size(); ++i)
      acc += probs[i] * std::pow(midpoint(i), p1);
    return acc;
  }
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    const Eigen::Index i1 = i / points, i2 = i % points;
    acc += probs[i] * std::pow(midpoint(i1), p1) * std::pow(midpoint(i2), p2);
  }
  return acc;
}

Eigen::MatrixXd hermite_functions(const Eigen::VectorXd& x, int n_max) {
  const Eigen::Index m = x.size();
  Eigen::MatrixXd phi(m, n_max + 1);
  const double root2 = std::numbers::sqrt2;
  const Eigen::VectorXd y = root2 * x;
  phi.col(0) = (-0.5 * y.array().square()).exp() / std::pow(std::numbers::pi, 0.25);
  if (n_max >= 1) phi.col(1) = root2 * y.array() * phi.col(0).array();
  for (int n = 1; n < n_max; ++n)
    phi.col(n + 1) = std::sqrt(2.0 / (n + 1)) * y.array() * phi.col(n).array() -
                     std::sqrt(double(n) / (n + 1)) * phi.col(n - 1).array();
  return std::pow(2.0, 0.25) * phi;
}

namespace {

// exp(-i theta N) phase per Fock level.
Eigen::VectorXcd rotation_phases(int cutoff, double theta) {
  Eigen::VectorXcd ph(cutoff + 1);
  for (int n = 0; n <= cutoff; ++n)
    ph[n] = std::exp(std::complex<double>(0.0, -theta * n));
  return ph;
}

Eigen::VectorXd grid_midpoints(int points, double halfwidth) {
  Eigen::VectorXd x(points);
  const double dx = 2.0 * halfwidth / points;
  for (int i = 0; i < points; ++i) x[i] = -halfwidth + (i + 0.5) * dx;
  return x;
}

// |Phi1 C Phi2^T|^2 accumulated into probs (2-mode) or |Phi c|^2 (1-mode).
void accumulate_density(const Eigen::MatrixXd& phi1, const Eigen::MatrixXd& phi2,
                        const Eigen::VectorXcd& amps, const FockBasis& basis,
                        double weight, Eigen::VectorXd& probs) {
  if (basis.num_modes() == 1) {
    const Eigen::VectorXcd on_grid = phi1 * amps;
    probs += weight * on_grid.cwiseAbs2();
    return;
  }
  const Eigen::Index d1 = basis.mode_dim(1), d2 = basis.mode_dim(2);
  const Eigen::Map<const Eigen::Matrix<std::complex<double>, Eigen::Dynamic,
                                       Eigen::Dynamic, Eigen::RowMajor>>
      coeffs(amps.data(), d1, d2);
  const Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic,
                      Eigen::RowMajor>
      on_grid = phi1.cast<std::complex<double>>() * coeffs *
                phi2.cast<std::complex<double>>().transpose();
  // row-major storage walks x2 fastest, matching the axis-1-slowest flattening
  const Eigen::Index m = phi1.rows();
  Eigen::Map<const Eigen::VectorXcd> flat(on_grid.data(), m * m);
  probs += weight * flat.cwiseAbs2();
}

}  // namespace

GridPdf quadrature_pdf(const FockTensor<double>& state, std::span<const double> thetas,
                       int points, double halfwidth) {
  const FockBasis& basis = state.basis();
  const int n = basis.num_modes();
  if (n > 2)
    throw std::invalid_argument("quadrature_pdf: joint CV sampling capped at 2 modes");
  if (static_cast<int>(thetas.size()) != n)
    throw std::invalid_argument("quadrature_pdf: need one phase per mode");
  if (points < 2) throw std::invalid_argument("quadrature_pdf: need at least 2 points");
  int max_dim = 0;
  for (int m = 1; m <= n; ++m) max_dim = std::max<int>(max_dim, basis.mode_dim(m));
  const double min_halfwidth = 1.2 * std::sqrt(double(max_dim));
  if (halfwidth < min_halfwidth)
    throw NumericalError("quadrature_pdf: halfwidth " + std::to_string(halfwidth) +
                         " below support bound " + std::to_string(min_halfwidth));

  const Eigen::VectorXd x = grid_midpoints(points, halfwidth);
  const Eigen::MatrixXd phi1 = hermite_functions(x, basis.cutoff(1));
  const Eigen::MatrixXd phi2 =
      n == 2 ? hermite_functions(x, basis.cutoff(2)) : Eigen::MatrixXd();

  const Eigen::Index n_cells = n == 1 ? points : Eigen::Index(points) * points;
  Eigen::VectorXd probs = Eigen::VectorXd::Zero(n_cells);

  auto rotate = [&](Eigen::VectorXcd v) {
    for (int m = 1; m <= n; ++m) {
      const auto ph = rotation_phases(basis.cutoff(m), thetas[m - 1]);
      const Eigen::Index stride = basis.stride(m);
      const Eigen::Index d = basis.mode_dim(m);
      for (Eigen::Index base = 0; base < v.size(); base += d * stride)
        for (Eigen::Index level = 0; level < d; ++level)
          v.segment(base + level * stride, stride) *= ph[level];
    }
    return v;
  };

  if (state.is_pure()) {
    accumulate_density(phi1, phi2, rotate(state.amplitudes()), basis, 1.0, probs);
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
        (state.density() + state.density().adjoint()) / 2.0);
    if (solver.info() != Eigen::Success)
      throw NumericalError("quadrature_pdf: eigendecomposition failed");
    for (Eigen::Index i = 0; i < solver.eigenvalues().size(); ++i) {
      const double w = solver.eigenvalues()[i];
      if (w < 1e-12) continue;
      accumulate_density(phi1, phi2, rotate(solver.eigenvectors().col(i)), basis, w,
                         probs);
    }
  }

  const double dx = 2.0 * halfwidth / points;
  probs *= (n == 1 ? dx : dx * dx);
  const double total = probs.sum();
  const double tail = 1.0 - total;
  if (tail > 1e-9)
    throw NumericalError("quadrature_pdf: grid overflow, off-grid tail " +
                         std::to_string(tail) + " exceeds 1e-9");
  probs /= total;

  GridPdf pdf;
  pdf.n_axes = n;
  pdf.points = points;
  pdf.halfwidth = halfwidth;
  pdf.thetas.assign(thetas.begin(), thetas.end());
  pdf.probs = std::move(probs);
  return pdf;
}

namespace {

std::vector<double> cumulative_of(const Eigen::VectorXd& probs) {
  std::vector<double> cum(probs.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    cum[static_cast<std::size_t>(i)] = acc;
  }
  return cum;
}

}  // namespace

SampleBatch sample_quadrature(const GridPdf& pdf, Eigen::Index trials,
                              std::uint64_t seed, std::uint64_t stream) {
  if (trials < 1) throw std::invalid_argument("sample_quadrature: need trials >= 1");
  const auto cum = cumulative_of(pdf.probs);
  RngStream rng(seed, stream);

  SampleBatch batch;
  batch.seed = seed;
  batch.stream = stream;
  for (int ax = 0; ax < pdf.n_axes; ++ax) {
    batch.settings.push_back(Setting::homodyne(pdf.thetas[ax]));
    batch.outcomes.emplace_back(trials);
    batch.detected.emplace_back(trials, std::uint8_t{1});
  }
  const double dx = pdf.cell_width();
  for (Eigen::Index t = 0; t < trials; ++t) {
    const auto cell = static_cast<Eigen::Index>(rng.categorical_from_cumulative(cum));
    if (pdf.n_axes == 1) {
      batch.outcomes[0][t] = pdf.cell_left(cell) + rng.uniform() * dx;
    } else {
      const Eigen::Index i1 = cell / pdf.points, i2 = cell % pdf.points;
      batch.outcomes[0][t] = pdf.cell_left(i1) + rng.uniform() * dx;
      batch.outcomes[1][t] = pdf.cell_left(i2) + rng.uniform() * dx;
    }
  }
  return batch;
}

SampleBatch sample_counts(const FockTensor<double>& state, double eta,
                          Eigen::Index trials, std::uint64_t seed,
                          std::uint64_t stream) {
  if (trials < 1) throw std::invalid_argument("sample_counts: need trials >= 1");
  if (!(eta >= 0.0 && eta <= 1.0))
    throw std::invalid_argument("sample_counts: eta must lie in [0,1]");
  const FockBasis& basis = state.basis();
  const Eigen::VectorXd diag = state.number_diagonal().cwiseMax(0.0);
  const auto cum = cumulative_of(diag);
  RngStream rng(seed, stream);

  SampleBatch batch;
  batch.seed = seed;
  batch.stream = stream;
  const int n_modes = basis.num_modes();
  for (int m = 0; m < n_modes; ++m) {
    batch.settings.push_back(Setting::count());
    batch.outcomes.emplace_back(trials);
    batch.detected.emplace_back(trials, std::uint8_t{1});
  }
  for (Eigen::Index t = 0; t < trials; ++t) {
    const auto cell = static_cast<Eigen::Index>(rng.categorical_from_cumulative(cum));
    for (int m = 1; m <= n_modes; ++m) {
      const int n_photons = basis.digit(cell, m);
      int counted = n_photons;
      if (eta < 1.0) {
        counted = 0;
        for (int p = 0; p < n_photons; ++p)
          if (rng.bernoulli(eta)) ++counted;
      }
      batch.outcomes[m - 1][t] = counted;
    }
  }
  return batch;
}

Moment MomentAccum::finalize() const {
  Moment m;
  m.n = n;
  if (n == 0) return m;
  m.mean = sum / double(n);
  if (n >= 2) {
    const double var = std::max(0.0, (sumsq - double(n) * m.mean * m.mean) / double(n - 1));
    m.se = std::sqrt(var / double(n));
  }
  return m;
}

namespace {

enum class Axis { X, Y, Other };

Axis axis_of(const Setting& s) {
  if (s.kind != Setting::Kind::Homodyne) return Axis::Other;
  if (std::abs(s.theta) < 1e-9) return Axis::X;
  if (std::abs(s.theta - std::numbers::pi / 2) < 1e-9) return Axis::Y;
  return Axis::Other;
}

}  // namespace

Ingredients estimate_ingredients(std::span<const SampleBatch> batches) {
  MomentAccum xx, yy, xy, yx, n1n2, n1, n2, x1sq, y1sq, x2sq, y2sq, n1d, n2d, p1, p2;

  auto feed_quadrature = [&](int mode, Axis ax, const Eigen::VectorXd& out) {
    MomentAccum& acc = mode == 1 ? (ax == Axis::X ? x1sq : y1sq)
                                 : (ax == Axis::X ? x2sq : y2sq);
    for (Eigen::Index t = 0; t < out.size(); ++t) acc.add(out[t] * out[t]);
  };
  auto feed_counts = [&](int mode, const Eigen::VectorXd& out,
                         const std::vector<std::uint8_t>& det) {
    MomentAccum& naive = mode == 1 ? n1 : n2;
    MomentAccum& detected = mode == 1 ? n1d : n2d;
    MomentAccum& rate = mode == 1 ? p1 : p2;
    for (Eigen::Index t = 0; t < out.size(); ++t) {
      const bool d = det[static_cast<std::size_t>(t)] != 0;
      naive.add(d ? out[t] : 0.0);
      rate.add(d ? 1.0 : 0.0);
      if (d) detected.add(out[t]);
    }
  };

  for (const auto& batch : batches) {
    if (batch.settings.size() != 2)
      throw SamplingError("estimate_ingredients: batches must cover 2 modes");
    const Setting& s1 = batch.settings[0];
    const Setting& s2 = batch.settings[1];
    const bool hom1 = s1.kind == Setting::Kind::Homodyne;
    const bool hom2 = s2.kind == Setting::Kind::Homodyne;
    if (hom1 && hom2) {
      const Axis a1 = axis_of(s1), a2 = axis_of(s2);
      if (a1 == Axis::Other || a2 == Axis::Other) continue;  // non-canonical phase
      MomentAccum& corr = a1 == Axis::X ? (a2 == Axis::X ? xx : xy)
                                        : (a2 == Axis::X ? yx : yy);
      for (Eigen::Index t = 0; t < batch.trials(); ++t)
        corr.add(batch.outcomes[0][t] * batch.outcomes[1][t]);
      feed_quadrature(1, a1, batch.outcomes[0]);
      feed_quadrature(2, a2, batch.outcomes[1]);
    } else if (!hom1 && !hom2) {
      for (Eigen::Index t = 0; t < batch.trials(); ++t) {
        const double r1 = batch.detected[0][static_cast<std::size_t>(t)]
                              ? batch.outcomes[0][t] : 0.0;
        const double r2 = batch.detected[1][static_cast<std::size_t>(t)]
                              ? batch.outcomes[1][t] : 0.0;
        n1n2.add(r1 * r2);
      }
      feed_counts(1, batch.outcomes[0], batch.detected[0]);
      feed_counts(2, batch.outcomes[1], batch.detected[1]);
    } else {
      // Mismatched pair: marginals only, no correlator.
      if (hom1) {
        const Axis a1 = axis_of(s1);
        if (a1 != Axis::Other) feed_quadrature(1, a1, batch.outcomes[0]);
        feed_counts(2, batch.outcomes[1], batch.detected[1]);
      } else {
        const Axis a2 = axis_of(s2);
        if (a2 != Axis::Other) feed_quadrature(2, a2, batch.outcomes[1]);
        feed_counts(1, batch.outcomes[0], batch.detected[0]);
      }
    }
  }

  const struct {
    const MomentAccum* acc;
    const char* name;
  } required[] = {{&xx, "(X1,X2)"}, {&yy, "(Y1,Y2)"},  {&xy, "(X1,Y2)"}, {&yx, "(Y1,X2)"},
                  {&n1n2, "(N1,N2)"}, {&n1, "N1 counting"}, {&n2, "N2 counting"}};
  for (const auto& req : required)
    if (req.acc->n < 2)
      throw SamplingError(std::string("estimate_ingredients: missing setting combination ") +
                          req.name);

  Ingredients ing;
  ing.xx = xx.finalize();
  ing.yy = yy.finalize();
  ing.xy = xy.finalize();
  ing.yx = yx.finalize();
  ing.n1n2 = n1n2.finalize();
  ing.n1 = n1.finalize();
  ing.n2 = n2.finalize();
  ing.x1sq = x1sq.finalize();
  ing.y1sq = y1sq.finalize();
  ing.x2sq = x2sq.finalize();
  ing.y2sq = y2sq.finalize();
  ing.n1_det = n1d.finalize();
  ing.n2_det = n2d.finalize();
  ing.p1_det = p1.finalize();
  ing.p2_det = p2.finalize();
  return ing;
}

InequalityReport<double> report_from_ingredients(Family family, const Ingredients& ing,
                                                 double sigma_threshold) {
  InequalityReport<double> rep;
  rep.family = family;
  rep.n_modes = 2;
  rep.k = 1;
  rep.source = InequalityReport<double>::Source::Sampled;

  const double xx = ing.xx.mean, yy = ing.yy.mean, xy = ing.xy.mean, yx = ing.yx.mean;
  double dxx, dyy, dxy, dyx;
  if (family == Family::First) {
    rep.lhs = first_family_lhs(xx, yy, xy, yx);
    dxx = 2.0 * (xx + yy);
    dyy = 2.0 * (xx + yy);
    dxy = 2.0 * (xy - yx);
    dyx = -2.0 * (xy - yx);
    rep.rhs = ing.n1n2.mean;
    rep.rhs_se = ing.n1n2.se;
  } else {
    rep.lhs = second_family_lhs(xx, yy, xy, yx);
    dxx = 2.0 * (xx - yy);
    dyy = -2.0 * (xx - yy);
    dxy = 2.0 * (xy + yx);
    dyx = 2.0 * (xy + yx);
    rep.rhs = ing.n1.mean * ing.n2.mean;
    rep.rhs_se = std::sqrt(std::pow(ing.n2.mean * ing.n1.se, 2) +
                           std::pow(ing.n1.mean * ing.n2.se, 2));
  }
  rep.lhs_se = std::sqrt(std::pow(dxx * ing.xx.se, 2) + std::pow(dyy * ing.yy.se, 2) +
                         std::pow(dxy * ing.xy.se, 2) + std::pow(dyx * ing.yx.se, 2));

  const double combined = std::sqrt(rep.lhs_se * rep.lhs_se + rep.rhs_se * rep.rhs_se);
  rep.tol = sigma_threshold * combined;
  rep.sigma = combined > 0.0 ? (rep.lhs - rep.rhs) / combined : 0.0;
  rep.violated = rep.lhs - rep.rhs > rep.tol;
  rep.ratio = detail::ratio_of(rep.lhs, rep.rhs, rep.tol);
  return rep;
}

std::string sample_batch_csv(const SampleBatch& batch) {
  std::ostringstream out;
  out << "trial,setting1,setting2,outcome1,outcome2,detected1,detected2\n";
  auto setting_name = [](const Setting& s) -> std::string {
    if (s.kind == Setting::Kind::Count) return "N";
    if (std::abs(s.theta) < 1e-9) return "X";
    if (std::abs(s.theta - std::numbers::pi / 2) < 1e-9) return "Y";
    return "H" + std::to_string(s.theta);
  };
  const std::string s1 = setting_name(batch.settings[0]);
  const std::string s2 =
      batch.settings.size() > 1 ? setting_name(batch.settings[1]) : std::string("-");
  const bool two = batch.outcomes.size() > 1;
  for (Eigen::Index t = 0; t < batch.trials(); ++t) {
    out << t << ',' << s1 << ',' << s2 << ',' << format_double(batch.outcomes[0][t])
        << ',' << format_double(two ? batch.outcomes[1][t] : 0.0) << ','
        << int(batch.detected[0][static_cast<std::size_t>(t)]) << ','
        << (two ? int(batch.detected[1][static_cast<std::size_t>(t)]) : 1) << '\n';
  }
  return out.str();
}

}  // namespace cvbell
