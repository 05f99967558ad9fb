#ifndef CVBELL_INEQUALITIES_HPP
#define CVBELL_INEQUALITIES_HPP

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "cvbell/ops.hpp"

namespace cvbell {

enum class Family { First, Second };

inline const char* family_name(Family f) { return f == Family::First ? "first" : "second"; }

// Outcome of one inequality evaluation.
//  first  family: |<Π_{i<=k} a_i Π_{j>k} a_j^dag>|^2  <=  <Π_i N_i>
//  second family: |<Π_i a_i>|^2  <=  <Π_{i<=k} N_i> <Π_{j>k} N_j>
// ratio degenerates to +inf when the rhs vanishes with a nonzero lhs (the
// raw pair stays in the record) and to 0 when both sides vanish.
template <typename T>
struct InequalityReport {
  Family family = Family::First;
  int n_modes = 2;
  int k = 1;
  T lhs = T(0);
  T rhs = T(0);
  T ratio = T(0);
  bool violated = false;
  T tol = T(1e-10);
  T sigma = T(0);  // (lhs-rhs)/combined SE; 0 on the analytic path
  enum class Source { Analytic, Sampled };
  Source source = Source::Analytic;
  T lhs_se = T(0);
  T rhs_se = T(0);
};

using InequalityReportd = InequalityReport<double>;

namespace detail {

template <typename T>
T ratio_of(T lhs, T rhs, T tol) {
  if (rhs < T(1e-14)) {
    if (lhs > tol) return std::numeric_limits<T>::infinity();
    return T(0);
  }
  return lhs / rhs;
}

template <typename T>
void check_partition(const FockTensor<T>& state, int k) {
  const int n = state.num_modes();
  if (k < 1 || k > n - 1)
    throw std::invalid_argument("partition k=" + std::to_string(k) +
                                " outside 1.." + std::to_string(n - 1));
}

}  // namespace detail

template <typename T>
InequalityReport<T> eval_first(const FockTensor<T>& state, int k, T tol = T(1e-10)) {
  detail::check_partition(state, k);
  const FockBasis& basis = state.basis();
  const int n = basis.num_modes();
  std::vector<ModeOp<T>> amp_ops;
  for (int m = 1; m <= k; ++m) amp_ops.push_back(annihilation_op<T>(m, basis.cutoff(m)));
  for (int m = k + 1; m <= n; ++m) amp_ops.push_back(creation_op<T>(m, basis.cutoff(m)));
  std::vector<ModeOp<T>> num_ops;
  for (int m = 1; m <= n; ++m) num_ops.push_back(number_op<T>(m, basis.cutoff(m)));

  InequalityReport<T> rep;
  rep.family = Family::First;
  rep.n_modes = n;
  rep.k = k;
  rep.tol = tol;
  rep.lhs = std::norm(expect<T>(state, amp_ops).value);
  rep.rhs = expect<T>(state, num_ops).value.real();
  rep.ratio = detail::ratio_of(rep.lhs, rep.rhs, tol);
  rep.violated = rep.lhs - rep.rhs > tol;
  return rep;
}

template <typename T>
InequalityReport<T> eval_second(const FockTensor<T>& state, int k, T tol = T(1e-10)) {
  detail::check_partition(state, k);
  const FockBasis& basis = state.basis();
  const int n = basis.num_modes();
  std::vector<ModeOp<T>> amp_ops;
  for (int m = 1; m <= n; ++m) amp_ops.push_back(annihilation_op<T>(m, basis.cutoff(m)));
  std::vector<ModeOp<T>> num_a, num_b;
  for (int m = 1; m <= k; ++m) num_a.push_back(number_op<T>(m, basis.cutoff(m)));
  for (int m = k + 1; m <= n; ++m) num_b.push_back(number_op<T>(m, basis.cutoff(m)));

  InequalityReport<T> rep;
  rep.family = Family::Second;
  rep.n_modes = n;
  rep.k = k;
  rep.tol = tol;
  rep.lhs = std::norm(expect<T>(state, amp_ops).value);
  rep.rhs = expect<T>(state, num_a).value.real() * expect<T>(state, num_b).value.real();
  rep.ratio = detail::ratio_of(rep.lhs, rep.rhs, tol);
  rep.violated = rep.lhs - rep.rhs > tol;
  return rep;
}

template <typename T>
InequalityReport<T> evaluate(const FockTensor<T>& state, Family family, int k,
                             T tol = T(1e-10)) {
  return family == Family::First ? eval_first(state, k, tol) : eval_second(state, k, tol);
}

// lhs assembled from the four local quadrature correlators, Family::First:
// (<X1X2> + <Y1Y2>)^2 + (<X1Y2> - <Y1X2>)^2 = |<a1 a2^dag>|^2.
template <typename T>
T first_family_lhs(T xx, T yy, T xy, T yx) {
  return (xx + yy) * (xx + yy) + (xy - yx) * (xy - yx);
}

// Family::Second mirror, from a = X + iY with commuting modes:
// (<X1X2> - <Y1Y2>)^2 + (<X1Y2> + <Y1X2>)^2 = |<a1 a2>|^2.
template <typename T>
T second_family_lhs(T xx, T yy, T xy, T yx) {
  return (xx - yy) * (xx - yy) + (xy + yx) * (xy + yx);
}

namespace detail {

template <typename T>
std::array<T, 4> quadrature_correlators(const FockTensor<T>& state) {
  if (state.num_modes() != 2)
    throw std::invalid_argument("quadrature decomposition requires exactly 2 modes");
  const FockBasis& basis = state.basis();
  const T half_pi = std::numbers::pi_v<T> / 2;
  const auto x1 = quadrature_op<T>(1, basis.cutoff(1), T(0));
  const auto y1 = quadrature_op<T>(1, basis.cutoff(1), half_pi);
  const auto x2 = quadrature_op<T>(2, basis.cutoff(2), T(0));
  const auto y2 = quadrature_op<T>(2, basis.cutoff(2), half_pi);
  return {expect<T>(state, {x1, x2}).value.real(),
          expect<T>(state, {y1, y2}).value.real(),
          expect<T>(state, {x1, y2}).value.real(),
          expect<T>(state, {y1, x2}).value.real()};
}

}  // namespace detail

// |<a1 a2^dag>|^2 via the 4-segment local homodyne decomposition.
template <typename T>
T quadrature_decomposition_first(const FockTensor<T>& state) {
  const auto [xx, yy, xy, yx] = detail::quadrature_correlators(state);
  return first_family_lhs(xx, yy, xy, yx);
}

// |<a1 a2>|^2 via the mirrored decomposition.
template <typename T>
T quadrature_decomposition_second(const FockTensor<T>& state) {
  const auto [xx, yy, xy, yx] = detail::quadrature_correlators(state);
  return second_family_lhs(xx, yy, xy, yx);
}

}  // namespace cvbell

#endif
