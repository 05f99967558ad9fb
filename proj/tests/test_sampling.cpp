#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numbers>

#include "cvbell/sampling.hpp"
#include "test_support.hpp"

using namespace cvbell;
using doctest::Approx;

namespace {

constexpr double kHalfPi = std::numbers::pi / 2;

FockTensor<double> fock1(int n, int cutoff) {
  StateSpec<double> spec;
  spec.variant = StateSpec<double>::FockOccupation{{n}};
  spec.cutoffs = {cutoff};
  return build(spec);
}

FockTensor<double> vacuum2(int cutoff = 4) {
  StateSpec<double> spec;
  spec.variant = StateSpec<double>::Vacuum{2};
  spec.cutoffs = {cutoff};
  return build(spec);
}

}  // namespace

TEST_CASE("hermite functions are orthonormal on the grid") {
  Eigen::VectorXd x(2048);
  const double dx = 16.0 / 2048;
  for (int i = 0; i < 2048; ++i) x[i] = -8.0 + (i + 0.5) * dx;
  const Eigen::MatrixXd phi = hermite_functions(x, 30);
  const Eigen::MatrixXd gram = phi.transpose() * phi * dx;
  CHECK((gram - Eigen::MatrixXd::Identity(31, 31)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("vacuum quadrature pdf: variance 1/4 in the half-unit convention") {
  const double th[1] = {0.0};
  const auto pdf = quadrature_pdf(fock1(0, 3), th);
  CHECK(pdf.probs.sum() == Approx(1.0).epsilon(1e-12));
  CHECK(pdf.moment(1) == testing::AbsApprox(0.0, 1e-9));
  CHECK(pdf.moment(2) == testing::AbsApprox(0.25, 1e-6));
}

TEST_CASE("|1> quadrature pdf: variance 3/4, node at the origin") {
  const double th[1] = {0.0};
  const auto pdf = quadrature_pdf(fock1(1, 3), th);
  CHECK(pdf.moment(2) == testing::AbsApprox(0.75, 1e-6));
  // density ~ x^2 exp(-2x^2): the central cells carry almost nothing
  CHECK(pdf.probs[pdf.points / 2] < 1e-6);
}

TEST_CASE("grid moments match operator expectations for mixed states") {
  const auto lossy = apply_loss_all_modes(testing::tmss_state(0.4, 14), 0.7);
  const double th[2] = {0.0, 0.0};
  const auto pdf = quadrature_pdf(lossy, th, 1024);
  const auto x1 = quadrature_op<double>(1, 14, 0.0);
  const auto x2 = quadrature_op<double>(2, 14, 0.0);
  const double xx = expect<double>(lossy, {x1, x2}).value.real();
  CHECK(pdf.moment(1, 1) == testing::AbsApprox(xx, 1e-5));
  const double x1sq = expect<double>(lossy, {x1, x1}).value.real();
  CHECK(pdf.moment(2, 0) == testing::AbsApprox(x1sq, 1e-5));
}

TEST_CASE("tmss joint pdf reproduces <X1 X2> = sinh r cosh r / 2") {
  const double th[2] = {0.0, 0.0};
  const auto pdf = quadrature_pdf(testing::tmss_state(0.5, 18), th, 1024);
  CHECK(pdf.moment(1, 1) ==
        testing::AbsApprox(std::sinh(0.5) * std::cosh(0.5) / 2, 1e-5));
}

TEST_CASE("rotated pdfs measure the rotated quadrature") {
  const double th[2] = {kHalfPi, kHalfPi};
  const auto pdf = quadrature_pdf(testing::tmss_state(0.5, 18), th, 1024);
  // <Y1 Y2> on the TMSS is -sinh r cosh r / 2
  CHECK(pdf.moment(1, 1) ==
        testing::AbsApprox(-std::sinh(0.5) * std::cosh(0.5) / 2, 1e-5));
}

TEST_CASE("quadrature pdf rejects undersized grids and halfwidths") {
  const double th[1] = {0.0};
  // halfwidth below the 1.2 sqrt(n_max+1) support bound
  CHECK_THROWS_AS(quadrature_pdf(fock1(0, 35), th, 512, 5.0), NumericalError);
  // wide enough by the bound, but vacuum mass still escapes the window
  CHECK_THROWS_AS(quadrature_pdf(fock1(0, 1), th, 512, 1.75), NumericalError);
}

TEST_CASE("more than two modes jointly is rejected") {
  StateSpec<double> spec;
  spec.variant = StateSpec<double>::Vacuum{3};
  spec.cutoffs = {1};
  const double th[3] = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(quadrature_pdf(build(spec), th), std::invalid_argument);
}

TEST_CASE("sample_quadrature: vacuum variance within 5 standard errors") {
  const double th[1] = {0.0};
  const auto pdf = quadrature_pdf(fock1(0, 3), th);
  const auto batch = sample_quadrature(pdf, 100000, 7);
  const double var = batch.outcomes[0].array().square().mean();
  // var(X^2) for a Gaussian with sigma^2 = 1/4 is 2 sigma^4 = 1/8
  const double se = std::sqrt(0.125 / 100000.0);
  CHECK(std::abs(var - 0.25) < 5 * se);
  CHECK(batch.settings[0].kind == Setting::Kind::Homodyne);
}

TEST_CASE("sample_quadrature: delta-like pdf keeps every sample in its cell") {
  GridPdf pdf;
  pdf.n_axes = 1;
  pdf.points = 64;
  pdf.halfwidth = 8.0;
  pdf.thetas = {0.0};
  pdf.probs = Eigen::VectorXd::Zero(64);
  pdf.probs[40] = 1.0;
  const auto batch = sample_quadrature(pdf, 500, 3);
  for (Eigen::Index t = 0; t < batch.trials(); ++t) {
    CHECK(batch.outcomes[0][t] >= pdf.cell_left(40));
    CHECK(batch.outcomes[0][t] <= pdf.cell_left(41));
  }
}

TEST_CASE("sample_quadrature: joint tmss correlator within 5 standard errors") {
  const double th[2] = {0.0, 0.0};
  const auto pdf = quadrature_pdf(testing::tmss_state(0.5, 18), th, 1024);
  const auto batch = sample_quadrature(pdf, 100000, 11);
  MomentAccum acc;
  for (Eigen::Index t = 0; t < batch.trials(); ++t)
    acc.add(batch.outcomes[0][t] * batch.outcomes[1][t]);
  const auto m = acc.finalize();
  CHECK(std::abs(m.mean - 0.2938002984) < 5 * m.se);
}

TEST_CASE("sampling is deterministic per (seed, stream)") {
  const double th[1] = {0.0};
  const auto pdf = quadrature_pdf(fock1(0, 3), th);
  const auto a = sample_quadrature(pdf, 100, 5, 1);
  const auto b = sample_quadrature(pdf, 100, 5, 1);
  const auto c = sample_quadrature(pdf, 100, 5, 2);
  CHECK((a.outcomes[0] - b.outcomes[0]).norm() == 0.0);
  CHECK((a.outcomes[0] - c.outcomes[0]).norm() > 1e-6);
}

TEST_CASE("sample_counts: |1,1> with eta=1 counts (1,1) every trial") {
  StateSpec<double> spec;
  spec.variant = StateSpec<double>::FockOccupation{{1, 1}};
  spec.cutoffs = {1};
  const auto batch = sample_counts(build(spec), 1.0, 200, 9);
  CHECK((batch.outcomes[0].array() == 1.0).all());
  CHECK((batch.outcomes[1].array() == 1.0).all());
  CHECK(batch.settings[0].kind == Setting::Kind::Count);
}

TEST_CASE("sample_counts: binomial thinning gives mean eta per photon") {
  StateSpec<double> spec;
  spec.variant = StateSpec<double>::FockOccupation{{1, 1}};
  spec.cutoffs = {1};
  const auto batch = sample_counts(build(spec), 0.6, 100000, 13);
  const double se = std::sqrt(0.6 * 0.4 / 100000.0);
  CHECK(std::abs(batch.outcomes[0].mean() - 0.6) < 5 * se);
  CHECK(std::abs(batch.outcomes[1].mean() - 0.6) < 5 * se);
}

TEST_CASE("sample_counts: tmss joint second moment within 5 standard errors") {
  const auto batch = sample_counts(testing::tmss_state(0.5, 18), 1.0, 100000, 17);
  MomentAccum acc;
  for (Eigen::Index t = 0; t < batch.trials(); ++t)
    acc.add(batch.outcomes[0][t] * batch.outcomes[1][t]);
  const auto m = acc.finalize();
  CHECK(std::abs(m.mean - oracle::tmss_n1n2(0.5)) < 5 * m.se);
}

TEST_CASE("thinning equivalence: sampled marginal matches the loss-channel diagonal") {
  const auto state = testing::tmss_state(0.4, 12);
  const double eta = 0.5;
  const Eigen::Index n = 200000;
  const auto batch = sample_counts(state, eta, n, 21);
  // empirical marginal of mode 1
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(13);
  for (Eigen::Index t = 0; t < n; ++t) hist[int(batch.outcomes[0][t])] += 1.0;
  hist /= double(n);
  const auto lossy = apply_loss(state, 1, eta);
  const Eigen::VectorXd expected = reduced_density(lossy, 1).diagonal().real();
  double tv = 0.0;
  for (int i = 0; i < 13; ++i) tv += std::abs(hist[i] - expected[i]);
  CHECK(tv / 2 < 0.01);
}

TEST_CASE("estimate_ingredients rebuilds correlators and marginals") {
  const auto state = testing::single_photon_state(std::numbers::pi / 4, 0.0, 2);
  const Eigen::Index n = 100000;
  std::vector<SampleBatch> batches;
  int stream = 0;
  for (const double t1 : {0.0, kHalfPi})
    for (const double t2 : {0.0, kHalfPi}) {
      const double th[2] = {t1, t2};
      batches.push_back(
          sample_quadrature(quadrature_pdf(state, th, 1024), n, 31, ++stream));
    }
  batches.push_back(sample_counts(state, 1.0, n, 31, ++stream));
  const auto ing = estimate_ingredients(batches);
  const auto rep = report_from_ingredients(Family::First, ing, 3.0);
  CHECK(std::abs(rep.lhs - 0.25) < 5 * rep.lhs_se);
  CHECK(std::abs(rep.rhs) <= 5 * rep.rhs_se + 1e-12);
  CHECK(rep.violated);

  // vacuum: every ingredient compatible with zero
  std::vector<SampleBatch> vac_batches;
  const auto vac = vacuum2();
  for (const double t1 : {0.0, kHalfPi})
    for (const double t2 : {0.0, kHalfPi}) {
      const double th[2] = {t1, t2};
      vac_batches.push_back(
          sample_quadrature(quadrature_pdf(vac, th, 1024), 20000, 33, ++stream));
    }
  vac_batches.push_back(sample_counts(vac, 1.0, 20000, 33, ++stream));
  const auto vac_ing = estimate_ingredients(vac_batches);
  CHECK(std::abs(vac_ing.xx.mean) < 5 * vac_ing.xx.se + 1e-12);
  CHECK(std::abs(vac_ing.yx.mean) < 5 * vac_ing.yx.se + 1e-12);
  CHECK(vac_ing.n1n2.mean == 0.0);
}

TEST_CASE("estimate_ingredients reconstructs the tmss violation") {
  const auto state = testing::tmss_state(0.5, 18);
  const Eigen::Index n = 100000;
  std::vector<SampleBatch> batches;
  int stream = 0;
  for (const double t1 : {0.0, kHalfPi})
    for (const double t2 : {0.0, kHalfPi}) {
      const double th[2] = {t1, t2};
      batches.push_back(
          sample_quadrature(quadrature_pdf(state, th, 1024), n, 37, ++stream));
    }
  batches.push_back(sample_counts(state, 1.0, n, 37, ++stream));
  const auto rep =
      report_from_ingredients(Family::Second, estimate_ingredients(batches), 3.0);
  CHECK(std::abs(rep.lhs - 0.3452744614) < 5 * rep.lhs_se);
  CHECK(std::abs(rep.rhs - 0.0737341440) < 5 * rep.rhs_se);
  CHECK(rep.violated);
  CHECK(rep.sigma > 5.0);
}

TEST_CASE("estimate_ingredients names the missing setting combination") {
  const auto state = vacuum2();
  const double th[2] = {0.0, 0.0};
  std::vector<SampleBatch> batches{
      sample_quadrature(quadrature_pdf(state, th, 512), 100, 41)};
  try {
    estimate_ingredients(batches);
    FAIL("expected SamplingError");
  } catch (const SamplingError& e) {
    CHECK(std::string(e.what()).find("(Y1,Y2)") != std::string::npos);
  }
}

TEST_CASE("estimator error shrinks as 1/sqrt(n)") {
  const double th[2] = {0.0, 0.0};
  const auto pdf = quadrature_pdf(vacuum2(), th, 512);
  const int replicas = 16;
  std::vector<double> log_n, log_rmse;
  for (const Eigen::Index n : {1000, 10000, 100000}) {
    double sq = 0.0;
    for (int rep = 0; rep < replicas; ++rep) {
      const auto batch = sample_quadrature(pdf, n, 1000 + rep, 5);
      MomentAccum acc;
      for (Eigen::Index t = 0; t < n; ++t)
        acc.add(batch.outcomes[0][t] * batch.outcomes[1][t]);
      sq += acc.finalize().mean * acc.finalize().mean;  // truth is 0
    }
    log_n.push_back(std::log(double(n)));
    log_rmse.push_back(0.5 * std::log(sq / replicas));
  }
  const double xbar = (log_n[0] + log_n[1] + log_n[2]) / 3;
  const double ybar = (log_rmse[0] + log_rmse[1] + log_rmse[2]) / 3;
  double num = 0, den = 0;
  for (int i = 0; i < 3; ++i) {
    num += (log_n[i] - xbar) * (log_rmse[i] - ybar);
    den += (log_n[i] - xbar) * (log_n[i] - xbar);
  }
  CHECK(num / den == testing::AbsApprox(-0.5, 0.1));
}

TEST_CASE("sample batch CSV carries the column contract") {
  const auto state = vacuum2();
  const double th[2] = {0.0, kHalfPi};
  const auto batch = sample_quadrature(quadrature_pdf(state, th, 512), 3, 51);
  const std::string csv = sample_batch_csv(batch);
  CHECK(csv.rfind("trial,setting1,setting2,outcome1,outcome2,detected1,detected2\n",
                  0) == 0);
  CHECK(csv.find("0,X,Y,") != std::string::npos);
}
