#ifndef CVBELL_OPS_HPP
#define CVBELL_OPS_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "cvbell/fock.hpp"

namespace cvbell {

template <typename T>
using SparseC = Eigen::SparseMatrix<std::complex<T>>;

// Single-mode operator tagged with the (1-based) mode it acts on. The matrix
// lives on that mode's truncated space; creation rows beyond the cutoff are
// dropped.
template <typename T>
struct ModeOp {
  int mode = 1;
  SparseC<T> mat;

  ModeOp adjoint() const { return {mode, SparseC<T>(mat.adjoint())}; }
  ModeOp transpose() const { return {mode, SparseC<T>(mat.transpose())}; }
  ModeOp conjugate() const { return {mode, SparseC<T>(mat.conjugate())}; }
};

namespace detail {
template <typename T>
SparseC<T> from_triplets(Eigen::Index d,
                         const std::vector<Eigen::Triplet<std::complex<T>>>& trips) {
  SparseC<T> m(d, d);
  m.setFromTriplets(trips.begin(), trips.end());
  m.makeCompressed();
  return m;
}
}  // namespace detail

// <n-1| a |n> = sqrt(n)
template <typename T>
ModeOp<T> annihilation_op(int mode, int cutoff) {
  std::vector<Eigen::Triplet<std::complex<T>>> t;
  for (int n = 1; n <= cutoff; ++n)
    t.emplace_back(n - 1, n, std::complex<T>(std::sqrt(T(n)), T(0)));
  return {mode, detail::from_triplets<T>(cutoff + 1, t)};
}

template <typename T>
ModeOp<T> creation_op(int mode, int cutoff) {
  return annihilation_op<T>(mode, cutoff).adjoint();
}

template <typename T>
ModeOp<T> number_op(int mode, int cutoff) {
  std::vector<Eigen::Triplet<std::complex<T>>> t;
  for (int n = 1; n <= cutoff; ++n) t.emplace_back(n, n, std::complex<T>(T(n), T(0)));
  return {mode, detail::from_triplets<T>(cutoff + 1, t)};
}

// quadrature(theta) = (a e^{-i theta} + a^dag e^{i theta}) / 2.
// quadrature(0) = X, quadrature(pi/2) = Y, and a = X + iY holds exactly at
// the matrix level (vacuum variance 1/4 convention).
template <typename T>
ModeOp<T> quadrature_op(int mode, int cutoff, T theta) {
  const std::complex<T> em(std::cos(theta), -std::sin(theta));
  std::vector<Eigen::Triplet<std::complex<T>>> t;
  for (int n = 1; n <= cutoff; ++n) {
    const T s = std::sqrt(T(n)) / T(2);
    t.emplace_back(n - 1, n, s * em);
    t.emplace_back(n, n - 1, s * std::conj(em));
  }
  return {mode, detail::from_triplets<T>(cutoff + 1, t)};
}

namespace detail {

template <typename T>
void check_op(const ModeOp<T>& op, const FockBasis& basis) {
  if (op.mode < 1 || op.mode > basis.num_modes())
    throw std::invalid_argument("operator mode index " + std::to_string(op.mode) +
                                " out of range 1.." + std::to_string(basis.num_modes()));
  if (op.mat.rows() != basis.mode_dim(op.mode) || op.mat.cols() != basis.mode_dim(op.mode))
    throw std::invalid_argument("operator cutoff mismatch on mode " +
                                std::to_string(op.mode) + ": matrix is " +
                                std::to_string(op.mat.rows()) + "x" +
                                std::to_string(op.mat.cols()) + ", basis dim " +
                                std::to_string(basis.mode_dim(op.mode)));
}

}  // namespace detail

// (op ⊗ 1) |v>
template <typename T>
VectorX<T> apply_mode_op(const ModeOp<T>& op, const FockBasis& basis,
                         const VectorX<T>& v) {
  detail::check_op(op, basis);
  const Eigen::Index d = basis.mode_dim(op.mode);
  const Eigen::Index stride = basis.stride(op.mode);
  const Eigen::Index block = d * stride;
  VectorX<T> out = VectorX<T>::Zero(v.size());
  for (Eigen::Index base = 0; base < v.size(); base += block)
    for (int j = 0; j < op.mat.outerSize(); ++j)
      for (typename SparseC<T>::InnerIterator it(op.mat, j); it; ++it)
        out.segment(base + it.row() * stride, stride) +=
            it.value() * v.segment(base + j * stride, stride);
  return out;
}

// (op ⊗ 1) · M
template <typename T>
MatrixX<T> apply_left(const ModeOp<T>& op, const FockBasis& basis, const MatrixX<T>& m) {
  detail::check_op(op, basis);
  const Eigen::Index d = basis.mode_dim(op.mode);
  const Eigen::Index stride = basis.stride(op.mode);
  const Eigen::Index block = d * stride;
  MatrixX<T> out = MatrixX<T>::Zero(m.rows(), m.cols());
  for (Eigen::Index base = 0; base < m.rows(); base += block)
    for (int j = 0; j < op.mat.outerSize(); ++j)
      for (typename SparseC<T>::InnerIterator it(op.mat, j); it; ++it)
        out.middleRows(base + it.row() * stride, stride) +=
            it.value() * m.middleRows(base + j * stride, stride);
  return out;
}

// M · (op ⊗ 1)^dag
template <typename T>
MatrixX<T> apply_right_adjoint(const ModeOp<T>& op, const FockBasis& basis,
                               const MatrixX<T>& m) {
  detail::check_op(op, basis);
  const Eigen::Index d = basis.mode_dim(op.mode);
  const Eigen::Index stride = basis.stride(op.mode);
  const Eigen::Index block = d * stride;
  MatrixX<T> out = MatrixX<T>::Zero(m.rows(), m.cols());
  for (Eigen::Index base = 0; base < m.cols(); base += block)
    for (int j = 0; j < op.mat.outerSize(); ++j)
      for (typename SparseC<T>::InnerIterator it(op.mat, j); it; ++it)
        out.middleCols(base + it.row() * stride, stride) +=
            std::conj(it.value()) * m.middleCols(base + j * stride, stride);
  return out;
}

template <typename T>
struct ComplexExpectation {
  std::complex<T> value;
  std::optional<T> variance_proxy;  // set on sampled estimates only
};

// <O> with O the embedded product ops[0]·ops[1]·...·ops.back() (listed order =
// operator product order, so ops.back() acts on the ket first).
// Tr(rho·O) for mixed states, <psi|O|psi> for pure ones.
template <typename T>
ComplexExpectation<T> expect(const FockTensor<T>& state, std::span<const ModeOp<T>> ops) {
  const FockBasis& basis = state.basis();
  for (const auto& op : ops) detail::check_op(op, basis);
  if (state.is_pure()) {
    VectorX<T> phi = state.amplitudes();
    for (auto it = ops.rbegin(); it != ops.rend(); ++it)
      phi = apply_mode_op(*it, basis, phi);
    return {state.amplitudes().dot(phi), std::nullopt};
  }
  MatrixX<T> m = state.density();
  for (auto it = ops.rbegin(); it != ops.rend(); ++it) m = apply_left(*it, basis, m);
  return {m.trace(), std::nullopt};
}

template <typename T>
ComplexExpectation<T> expect(const FockTensor<T>& state,
                             std::initializer_list<ModeOp<T>> ops) {
  return expect(state, std::span<const ModeOp<T>>(ops.begin(), ops.size()));
}

// One term of an anti-Hermitian generator: coeff * Π factors.
template <typename T>
struct GeneratorTerm {
  std::complex<T> coeff;
  std::vector<ModeOp<T>> factors;
};

namespace detail {

template <typename T>
VectorX<T> apply_generator(const FockBasis& basis,
                           std::span<const GeneratorTerm<T>> terms,
                           const VectorX<T>& v) {
  VectorX<T> out = VectorX<T>::Zero(v.size());
  for (const auto& term : terms) {
    VectorX<T> w = v;
    for (auto it = term.factors.rbegin(); it != term.factors.rend(); ++it)
      w = apply_mode_op(*it, basis, w);
    out += term.coeff * w;
  }
  return out;
}

}  // namespace detail

// |v> := exp(G)|v> with G = Σ terms, evaluated by Taylor series on the vector
// after splitting exp(G) = (exp(G/2^s))^{2^s} so each factor converges in a
// few dozen terms. Works for any generator norm at the cost of 2^s passes.
template <typename T>
VectorX<T> apply_exp_generator(const FockBasis& basis,
                               std::span<const GeneratorTerm<T>> terms, VectorX<T> v,
                               T tol = T(1e-14)) {
  // Rough 1-norm bound of G from term coefficients and factor norms.
  T bound = T(0);
  for (const auto& term : terms) {
    T prod = std::abs(term.coeff);
    for (const auto& f : term.factors) {
      T colmax = T(0);
      for (int j = 0; j < f.mat.outerSize(); ++j) {
        T colsum = T(0);
        for (typename SparseC<T>::InnerIterator it(f.mat, j); it; ++it)
          colsum += std::abs(it.value());
        colmax = std::max(colmax, colsum);
      }
      prod *= colmax;
    }
    bound += prod;
  }
  int s = 0;
  while ((bound / T(1ull << s)) > T(0.5) && s < 40) ++s;
  const Eigen::Index steps = Eigen::Index(1) << s;
  const T inv = T(1) / T(steps);

  std::vector<GeneratorTerm<T>> scaled(terms.begin(), terms.end());
  for (auto& term : scaled) term.coeff *= inv;

  for (Eigen::Index step = 0; step < steps; ++step) {
    VectorX<T> acc = v;
    VectorX<T> pow = v;
    const T ref = v.norm();
    for (int k = 1; k <= 64; ++k) {
      pow = detail::apply_generator<T>(basis, scaled, pow) / T(k);
      acc += pow;
      if (pow.norm() <= tol * ref) break;
      if (k == 64)
        throw NumericalError("apply_exp_generator: Taylor series did not converge");
    }
    v = std::move(acc);
  }
  return v;
}

}  // namespace cvbell

#endif
