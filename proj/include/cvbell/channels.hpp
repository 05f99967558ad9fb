#ifndef CVBELL_CHANNELS_HPP
#define CVBELL_CHANNELS_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>
#include <span>
#include <vector>

#include "cvbell/ops.hpp"

namespace cvbell {

namespace detail {

// Kraus operators of the efficiency-eta loss channel on one mode:
// K_k = Σ_n sqrt(C(n,k)) eta^{(n-k)/2} (1-eta)^{k/2} |n-k><n|.
// They sum to identity exactly on the truncated space because a^k only lowers.
template <typename T>
std::vector<ModeOp<T>> loss_kraus_ops(int mode, int cutoff, T eta) {
  std::vector<ModeOp<T>> ks;
  for (int k = 0; k <= cutoff; ++k) {
    std::vector<Eigen::Triplet<std::complex<T>>> t;
    for (int n = k; n <= cutoff; ++n) {
      T logc = T(0);  // log C(n,k)
      for (int i = 1; i <= k; ++i)
        logc += std::log(T(n - k + i)) - std::log(T(i));
      T amp = std::exp(T(0.5) * logc) * std::pow(eta, T(n - k) / T(2)) *
              std::pow(T(1) - eta, T(k) / T(2));
      if (amp != T(0)) t.emplace_back(n - k, n, std::complex<T>(amp, T(0)));
    }
    if (!t.empty()) ks.push_back({mode, from_triplets<T>(cutoff + 1, t)});
  }
  return ks;
}

}  // namespace detail

// Beam-splitter coupling to a vacuum ancilla with transmissivity sqrt(eta),
// ancilla traced out. Output is always mixed; trace is preserved exactly.
template <typename T>
FockTensor<T> apply_loss(const FockTensor<T>& state, int mode, T eta) {
  if (!(eta >= T(0) && eta <= T(1)))
    throw std::invalid_argument("apply_loss: eta must lie in [0,1]");
  const FockTensor<T> rho_in = state.to_mixed();
  const FockBasis& basis = rho_in.basis();
  if (mode < 1 || mode > basis.num_modes())
    throw std::invalid_argument("apply_loss: mode index out of range");
  MatrixX<T> out = MatrixX<T>::Zero(basis.dim(), basis.dim());
  for (const auto& k : detail::loss_kraus_ops<T>(mode, basis.cutoff(mode), eta)) {
    MatrixX<T> tmp = apply_left(k, basis, rho_in.density());
    out += apply_right_adjoint(k, basis, tmp);
  }
  return FockTensor<T>::mixed(basis, std::move(out));
}

template <typename T>
FockTensor<T> apply_loss_all_modes(const FockTensor<T>& state, T eta) {
  FockTensor<T> out = state.to_mixed();
  for (int m = 1; m <= state.basis().num_modes(); ++m) out = apply_loss(out, m, eta);
  return out;
}

// Transposition of the density matrix on the listed modes (proper nonempty
// subset). Pure inputs are promoted. Negative output eigenvalues are allowed.
template <typename T>
FockTensor<T> partial_transpose(const FockTensor<T>& state, std::span<const int> modes) {
  const FockTensor<T> rho_in = state.to_mixed();
  const FockBasis& basis = rho_in.basis();
  std::set<int> subset(modes.begin(), modes.end());
  if (subset.empty())
    throw std::invalid_argument("partial_transpose: empty mode subset");
  if (static_cast<int>(subset.size()) == basis.num_modes())
    throw std::invalid_argument(
        "partial_transpose: full subset is a global transpose, not a partial one");
  for (int m : subset)
    if (m < 1 || m > basis.num_modes())
      throw std::invalid_argument("partial_transpose: mode index out of range");

  const Eigen::Index d = basis.dim();
  const MatrixX<T>& rho = rho_in.density();
  MatrixX<T> out(d, d);
  // Per-mode digit lookup tables for the transposed modes.
  std::vector<std::vector<int>> digits;
  std::vector<Eigen::Index> strides;
  for (int m : subset) {
    std::vector<int> tab(d);
    for (Eigen::Index i = 0; i < d; ++i) tab[i] = basis.digit(i, m);
    digits.push_back(std::move(tab));
    strides.push_back(basis.stride(m));
  }
  for (Eigen::Index col = 0; col < d; ++col)
    for (Eigen::Index row = 0; row < d; ++row) {
      Eigen::Index r = row, c = col;
      for (std::size_t s = 0; s < strides.size(); ++s) {
        const int dr = digits[s][row], dc = digits[s][col];
        r += static_cast<Eigen::Index>(dc - dr) * strides[s];
        c += static_cast<Eigen::Index>(dr - dc) * strides[s];
      }
      out(r, c) = rho(row, col);
    }
  return FockTensor<T>::mixed(basis, std::move(out));
}

template <typename T>
FockTensor<T> partial_transpose(const FockTensor<T>& state,
                                std::initializer_list<int> modes) {
  return partial_transpose(state, std::span<const int>(modes.begin(), modes.size()));
}

namespace detail {

template <typename T>
MatrixX<T> hermitized(const FockTensor<T>& state, T herm_tol = T(1e-10)) {
  const FockTensor<T> rho = state.to_mixed();
  const MatrixX<T>& m = rho.density();
  const T scale = std::max(T(1), m.template lpNorm<Eigen::Infinity>());
  const T err = (m - m.adjoint()).template lpNorm<Eigen::Infinity>();
  if (err > herm_tol * scale)
    throw NumericalError("eigensolve: input not Hermitian within tolerance");
  return ((m + m.adjoint()) / T(2)).eval();
}

}  // namespace detail

template <typename T>
RealVectorX<T> eigenvalues(const FockTensor<T>& state) {
  Eigen::SelfAdjointEigenSolver<MatrixX<T>> solver(detail::hermitized(state),
                                                   Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw NumericalError("eigensolve: solver did not converge");
  return solver.eigenvalues();
}

template <typename T>
T min_eigenvalue(const FockTensor<T>& state) {
  return eigenvalues(state).minCoeff();
}

// Partial trace onto a single kept mode.
template <typename T>
MatrixX<T> reduced_density(const FockTensor<T>& state, int keep_mode) {
  const FockBasis& basis = state.basis();
  if (keep_mode < 1 || keep_mode > basis.num_modes())
    throw std::invalid_argument("reduced_density: mode index out of range");
  const Eigen::Index d = basis.mode_dim(keep_mode);
  const Eigen::Index stride = basis.stride(keep_mode);
  const Eigen::Index block = d * stride;
  MatrixX<T> out = MatrixX<T>::Zero(d, d);
  const Eigen::Index dim = basis.dim();
  if (state.is_pure()) {
    const VectorX<T>& v = state.amplitudes();
    for (Eigen::Index base = 0; base < dim; base += block)
      for (Eigen::Index q = 0; q < stride; ++q)
        for (Eigen::Index i = 0; i < d; ++i) {
          const std::complex<T> vi = v[base + i * stride + q];
          if (vi == std::complex<T>(0)) continue;
          for (Eigen::Index j = 0; j < d; ++j)
            out(i, j) += vi * std::conj(v[base + j * stride + q]);
        }
  } else {
    const MatrixX<T>& rho = state.density();
    for (Eigen::Index base = 0; base < dim; base += block)
      for (Eigen::Index q = 0; q < stride; ++q)
        for (Eigen::Index i = 0; i < d; ++i)
          for (Eigen::Index j = 0; j < d; ++j)
            out(i, j) += rho(base + i * stride + q, base + j * stride + q);
  }
  return out;
}

}  // namespace cvbell

#endif
