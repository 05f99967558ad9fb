#ifndef CVBELL_STATES_HPP
#define CVBELL_STATES_HPP

#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include <unsupported/Eigen/MatrixFunctions>

#include "cvbell/ops.hpp"
#include "cvbell/rng.hpp"

namespace cvbell {

// State constructors, parameterized the way the physics is: squeezing r,
// superposition angles theta/phi, GHZ weights (c1, c2) and vacuum admixture
// p_s, per-mode cutoff. The cutoff must leave a neglected tail below tail_tol
// or construction fails.
template <typename T>
struct StateSpec {
  struct SinglePhoton {
    T theta = std::numbers::pi_v<T> / 4;
    T phi = T(0);
  };
  struct Tmss {
    T r = T(0.5);
  };
  struct GhzVacuum {
    int n_modes = 3;
    int k = 1;
    std::complex<T> c1{std::sqrt(T(0.5)), T(0)};
    std::complex<T> c2{std::sqrt(T(0.5)), T(0)};
    T p_s = T(1);
  };
  struct MultimodeEpr {
    int n_modes = 3;
    T r = T(0.5);
  };
  struct Vacuum {
    int n_modes = 2;
  };
  struct FockOccupation {
    std::vector<int> occupations;
  };
  struct RandomPure {
    int n_modes = 2;
    std::uint64_t seed = 0;
  };
  struct RandomMixed {
    int n_modes = 2;
    std::uint64_t seed = 0;
    int rank = 1;
  };

  using Variant = std::variant<SinglePhoton, Tmss, GhzVacuum, MultimodeEpr, Vacuum,
                               FockOccupation, RandomPure, RandomMixed>;

  Variant variant = Tmss{};
  std::vector<int> cutoffs;  // one per mode, or a single broadcast value
  T tail_tol = T(1e-12);
};

using StateSpecd = StateSpec<double>;

template <typename T>
int spec_num_modes(const StateSpec<T>& spec) {
  return std::visit(
      [](const auto& v) -> int {
        using V = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<V, typename StateSpec<T>::SinglePhoton> ||
                      std::is_same_v<V, typename StateSpec<T>::Tmss>)
          return 2;
        else if constexpr (std::is_same_v<V, typename StateSpec<T>::FockOccupation>)
          return static_cast<int>(v.occupations.size());
        else
          return v.n_modes;
      },
      spec.variant);
}

// Tail of the truncated TMSS ladder: probability mass on |n,n> with n > cutoff
// is exactly tanh^{2(cutoff+1)} r.
template <typename T>
T tmss_tail(T r, int cutoff) {
  return std::pow(std::tanh(r), T(2 * (cutoff + 1)));
}

template <typename T>
int tmss_min_cutoff(T r, T tail_tol = T(1e-12)) {
  int n = 1;
  while (tmss_tail(r, n) >= tail_tol && n < 4096) ++n;
  return n;
}

// P(n > cutoff) for a single-mode squeezed vacuum:
// P(2m) = C(2m,m) (tanh^2 r / 4)^m / cosh r.
template <typename T>
T squeezed_vacuum_tail(T r, int cutoff) {
  if (r == T(0)) return T(0);
  const T q = std::tanh(r) * std::tanh(r) / T(4);
  T term = T(1) / std::cosh(r);  // P(0)
  T cdf = term;
  for (int m = 1; 2 * m <= cutoff; ++m) {
    term *= q * T(2 * m) * T(2 * m - 1) / (T(m) * T(m));
    cdf += term;
  }
  return std::max(T(0), T(1) - cdf);
}

template <typename T>
int squeezed_min_cutoff(T r, T tail_tol = T(1e-12)) {
  int n = 2;
  while (squeezed_vacuum_tail(r, n) >= tail_tol && n < 4096) n += 2;
  return n;
}

namespace detail {

inline std::vector<int> resolve_cutoffs(const std::vector<int>& cutoffs, int n_modes,
                                        const char* what) {
  if (cutoffs.empty())
    throw NumericalError(std::string(what) + ": no cutoff given");
  if (cutoffs.size() == 1) return std::vector<int>(n_modes, cutoffs[0]);
  if (static_cast<int>(cutoffs.size()) != n_modes)
    throw NumericalError(std::string(what) + ": cutoff list has " +
                         std::to_string(cutoffs.size()) + " entries for " +
                         std::to_string(n_modes) + " modes");
  return cutoffs;
}

// Dense single-mode squeeze matrix exp(xi_sign * r (a^2 - a^dag^2)/2) on the
// truncated space, via scaling-and-squaring matrix exponential.
// xi_sign = +1 squeezes X, -1 squeezes Y.
template <typename T>
MatrixX<T> squeeze_matrix(int cutoff, T r, int xi_sign) {
  const Eigen::Index d = cutoff + 1;
  MatrixX<T> a = MatrixX<T>::Zero(d, d);
  for (int n = 1; n <= cutoff; ++n) a(n - 1, n) = std::sqrt(T(n));
  MatrixX<T> gen =
      (T(xi_sign) * r / T(2)) * (a * a - (a * a).adjoint().eval()).eval();
  return gen.exp();
}

template <typename T>
ModeOp<T> dense_mode_op(int mode, const MatrixX<T>& m) {
  std::vector<Eigen::Triplet<std::complex<T>>> t;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (m(i, j) != std::complex<T>(0)) t.emplace_back(i, j, m(i, j));
  return {mode, from_triplets<T>(m.rows(), t)};
}

// Probability mass on basis states where any mode sits at its top level;
// a proxy for beam-splitter pileup against the cutoff.
template <typename T>
T boundary_mass(const FockBasis& basis, const VectorX<T>& v) {
  T mass = T(0);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    for (int m = 1; m <= basis.num_modes(); ++m)
      if (basis.digit(i, m) == basis.cutoff(m)) {
        mass += std::norm(v[i]);
        break;
      }
  }
  return mass;
}

}  // namespace detail

// Cascaded EPR network: mode 1 squeezed in Y, modes 2..N squeezed in X, then
// B_12 with cos(theta_1) = 1/sqrt(N) followed by B_{j,j+1}(pi/4) for
// j = 2..N-1, with B_jk(theta): a_j -> a_j cos + a_k sin,
// a_k -> -a_j sin + a_k cos. For N=2 the output carries the same inequality
// ingredients as tmss(r).
template <typename T>
FockTensor<T> build_epr_network(int n_modes, T r, int cutoff, T tail_tol = T(1e-12)) {
  if (n_modes < 2) throw NumericalError("build_epr_network: need at least 2 modes");
  if (r < T(0)) throw NumericalError("build_epr_network: r must be >= 0");
  FockBasis basis(std::vector<int>(n_modes, cutoff));
  VectorX<T> v = VectorX<T>::Zero(basis.dim());
  v[0] = std::complex<T>(1, 0);
  if (r == T(0)) return FockTensor<T>::pure(std::move(basis), std::move(v));

  const T input_tail = T(n_modes) * squeezed_vacuum_tail(r, cutoff);
  if (!(input_tail < tail_tol))
    throw NumericalError("build_epr_network: cutoff " + std::to_string(cutoff) +
                         " leaves tail " + std::to_string(double(input_tail)) +
                         " >= " + std::to_string(double(tail_tol)));

  for (int m = 1; m <= n_modes; ++m) {
    const int sign = (m == 1) ? -1 : +1;  // Y-squeeze mode 1, X-squeeze the rest
    const auto u = detail::dense_mode_op<T>(m, detail::squeeze_matrix<T>(cutoff, r, sign));
    v = apply_mode_op(u, basis, v);
  }

  auto beam_splitter = [&](int j, int k, T theta) {
    std::vector<GeneratorTerm<T>> gen;
    gen.push_back({std::complex<T>(theta, 0),
                   {creation_op<T>(j, cutoff), annihilation_op<T>(k, cutoff)}});
    gen.push_back({std::complex<T>(-theta, 0),
                   {annihilation_op<T>(j, cutoff), creation_op<T>(k, cutoff)}});
    v = apply_exp_generator<T>(basis, gen, std::move(v));
  };
  beam_splitter(1, 2, std::acos(T(1) / std::sqrt(T(n_modes))));
  for (int j = 2; j < n_modes; ++j) beam_splitter(j, j + 1, std::numbers::pi_v<T> / 4);

  const T pileup = detail::boundary_mass<T>(basis, v);
  if (!(pileup < tail_tol))
    throw NumericalError("build_epr_network: boundary mass " +
                         std::to_string(double(pileup)) + " >= tail tolerance");
  return FockTensor<T>::pure(std::move(basis), std::move(v));
}

template <typename T>
FockTensor<T> build(const StateSpec<T>& spec) {
  using Spec = StateSpec<T>;
  const int n_modes = spec_num_modes(spec);
  const std::vector<int> cutoffs =
      detail::resolve_cutoffs(spec.cutoffs, n_modes, "build");

  auto basis = FockBasis(cutoffs);

  return std::visit(
      [&](const auto& s) -> FockTensor<T> {
        using V = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<V, typename Spec::SinglePhoton>) {
          if (cutoffs[0] < 1 || cutoffs[1] < 1)
            throw NumericalError("build: single_photon needs cutoff >= 1");
          VectorX<T> v = VectorX<T>::Zero(basis.dim());
          const int occ10[] = {1, 0}, occ01[] = {0, 1};
          v[basis.index_of(occ10)] = std::complex<T>(std::cos(s.theta), 0);
          v[basis.index_of(occ01)] =
              std::sin(s.theta) * std::exp(std::complex<T>(0, -s.phi));
          return FockTensor<T>::pure(std::move(basis), std::move(v));
        } else if constexpr (std::is_same_v<V, typename Spec::Tmss>) {
          if (s.r < T(0)) throw NumericalError("build: tmss r must be >= 0");
          const int c = std::min(cutoffs[0], cutoffs[1]);
          if (!(tmss_tail(s.r, c) < spec.tail_tol))
            throw NumericalError(
                "build: tmss cutoff " + std::to_string(c) + " leaves tail " +
                std::to_string(double(tmss_tail(s.r, c))) + " >= tail_tol");
          VectorX<T> v = VectorX<T>::Zero(basis.dim());
          const T t = std::tanh(s.r);
          T coeff = T(1) / std::cosh(s.r);
          for (int n = 0; n <= c; ++n) {
            const int occ[] = {n, n};
            v[basis.index_of(occ)] = std::complex<T>(coeff, 0);
            coeff *= t;
          }
          return FockTensor<T>::pure(std::move(basis), std::move(v));
        } else if constexpr (std::is_same_v<V, typename Spec::GhzVacuum>) {
          if (s.k < 1 || s.k > s.n_modes - 1)
            throw NumericalError("build: ghz_vacuum needs 1 <= k <= N-1");
          if (!(s.p_s >= T(0) && s.p_s <= T(1)))
            throw NumericalError("build: ghz_vacuum p_s must lie in [0,1]");
          const T wsum = std::norm(s.c1) + std::norm(s.c2);
          if (std::abs(wsum - T(1)) > T(1e-10))
            throw NumericalError("build: ghz_vacuum needs |c1|^2 + |c2|^2 = 1");
          for (int c : cutoffs)
            if (c < 1) throw NumericalError("build: ghz_vacuum needs cutoff >= 1");
          VectorX<T> g = VectorX<T>::Zero(basis.dim());
          std::vector<int> occ1(s.n_modes, 0), occ2(s.n_modes, 0);
          for (int m = 0; m < s.n_modes; ++m) (m < s.k ? occ1 : occ2)[m] = 1;
          g[basis.index_of(occ1)] = s.c1;
          g[basis.index_of(occ2)] = s.c2;
          MatrixX<T> rho = s.p_s * (g * g.adjoint());
          rho(0, 0) += T(1) - s.p_s;
          return FockTensor<T>::mixed(std::move(basis), std::move(rho));
        } else if constexpr (std::is_same_v<V, typename Spec::MultimodeEpr>) {
          int c = cutoffs[0];
          for (int ci : cutoffs)
            if (ci != c)
              throw NumericalError("build: multimode_epr needs a uniform cutoff");
          return build_epr_network<T>(s.n_modes, s.r, c, spec.tail_tol);
        } else if constexpr (std::is_same_v<V, typename Spec::Vacuum>) {
          VectorX<T> v = VectorX<T>::Zero(basis.dim());
          v[0] = std::complex<T>(1, 0);
          return FockTensor<T>::pure(std::move(basis), std::move(v));
        } else if constexpr (std::is_same_v<V, typename Spec::FockOccupation>) {
          VectorX<T> v = VectorX<T>::Zero(basis.dim());
          v[basis.index_of(s.occupations)] = std::complex<T>(1, 0);
          return FockTensor<T>::pure(std::move(basis), std::move(v));
        } else if constexpr (std::is_same_v<V, typename Spec::RandomPure>) {
          RngStream rng(s.seed, 0);
          VectorX<T> v(basis.dim());
          for (Eigen::Index i = 0; i < v.size(); ++i)
            v[i] = std::complex<T>(T(rng.gaussian()), T(rng.gaussian()));
          return FockTensor<T>::pure(std::move(basis), std::move(v));
        } else {
          static_assert(std::is_same_v<V, typename Spec::RandomMixed>);
          if (s.rank < 1) throw NumericalError("build: random_mixed rank must be >= 1");
          // Ginibre construction G G^dag / Tr: positive with the given rank.
          RngStream rng(s.seed, 0);
          MatrixX<T> g(basis.dim(), s.rank);
          for (Eigen::Index j = 0; j < g.cols(); ++j)
            for (Eigen::Index i = 0; i < g.rows(); ++i)
              g(i, j) = std::complex<T>(T(rng.gaussian()), T(rng.gaussian()));
          MatrixX<T> rho = g * g.adjoint();
          return FockTensor<T>::mixed(std::move(basis), std::move(rho));
        }
      },
      spec.variant);
}

}  // namespace cvbell

#endif
