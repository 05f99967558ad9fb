#ifndef CVBELL_FOCK_HPP
#define CVBELL_FOCK_HPP

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cvbell/errors.hpp"

namespace cvbell {

template <typename T>
using VectorX = Eigen::Vector<std::complex<T>, Eigen::Dynamic>;
template <typename T>
using MatrixX = Eigen::Matrix<std::complex<T>, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using RealVectorX = Eigen::Vector<T, Eigen::Dynamic>;

// Truncated multimode Fock basis {0..n_max} per mode. Flat index layout is
// row-major over modes with mode 1 slowest:
//   index(n_1..n_N) = n_1*stride(1) + ... + n_N*stride(N),  stride(N) = 1.
class FockBasis {
 public:
  // Pure amplitude vectors are cheap; density matrices cost dim^2, so the
  // mixed-state dimension cap is much tighter.
  static constexpr Eigen::Index kMaxPureDim = 1 << 20;
  static constexpr Eigen::Index kMaxMixedDim = 4096;

  explicit FockBasis(std::vector<int> cutoffs) : cutoffs_(std::move(cutoffs)) {
    if (cutoffs_.empty()) throw NumericalError("FockBasis: no modes");
    strides_.assign(cutoffs_.size(), 1);
    dim_ = 1;
    for (int m = static_cast<int>(cutoffs_.size()) - 1; m >= 0; --m) {
      if (cutoffs_[m] < 0) throw NumericalError("FockBasis: negative cutoff");
      strides_[m] = dim_;
      dim_ *= cutoffs_[m] + 1;
      if (dim_ > kMaxPureDim)
        throw NumericalError("FockBasis: dimension " + std::to_string(dim_) +
                             " exceeds cap " + std::to_string(kMaxPureDim));
    }
  }

  int num_modes() const { return static_cast<int>(cutoffs_.size()); }
  Eigen::Index dim() const { return dim_; }
  const std::vector<int>& cutoffs() const { return cutoffs_; }

  // Modes are 1-based throughout the public surface.
  int cutoff(int mode) const { return cutoffs_[check_mode(mode)]; }
  Eigen::Index mode_dim(int mode) const { return cutoffs_[check_mode(mode)] + 1; }
  Eigen::Index stride(int mode) const { return strides_[check_mode(mode)]; }

  // Occupation of `mode` inside flat index `idx`.
  int digit(Eigen::Index idx, int mode) const {
    const int m = check_mode(mode);
    return static_cast<int>((idx / strides_[m]) % (cutoffs_[m] + 1));
  }

  Eigen::Index index_of(std::span<const int> occupations) const {
    if (static_cast<int>(occupations.size()) != num_modes())
      throw NumericalError("FockBasis: occupation list size mismatch");
    Eigen::Index idx = 0;
    for (int m = 0; m < num_modes(); ++m) {
      if (occupations[m] < 0 || occupations[m] > cutoffs_[m])
        throw NumericalError("FockBasis: occupation outside cutoff");
      idx += occupations[m] * strides_[m];
    }
    return idx;
  }

  std::vector<int> occupation_of(Eigen::Index idx) const {
    std::vector<int> occ(num_modes());
    for (int m = 0; m < num_modes(); ++m) occ[m] = digit(idx, m + 1);
    return occ;
  }

  bool operator==(const FockBasis& other) const { return cutoffs_ == other.cutoffs_; }

 private:
  int check_mode(int mode) const {
    if (mode < 1 || mode > num_modes())
      throw std::invalid_argument("mode index " + std::to_string(mode) +
                                  " out of range 1.." + std::to_string(num_modes()));
    return mode - 1;
  }

  std::vector<int> cutoffs_;
  std::vector<Eigen::Index> strides_;
  Eigen::Index dim_ = 0;
};

// State over a truncated Fock basis: either a pure amplitude vector or a
// density matrix. Construction normalizes (unit norm / unit trace) and checks
// the mixed-state Hermiticity tolerance; positivity is deliberately not
// enforced so partial transposes remain representable.
template <typename T>
class FockTensor {
 public:
  enum class Kind { Pure, Mixed };

  static FockTensor pure(FockBasis basis, VectorX<T> amplitudes) {
    if (amplitudes.size() != basis.dim())
      throw NumericalError("FockTensor: amplitude vector size mismatch");
    const T nrm = amplitudes.norm();
    if (!(nrm > T(0)) || !std::isfinite(static_cast<double>(nrm)))
      throw NumericalError("FockTensor: cannot normalize zero/non-finite state");
    amplitudes /= nrm;
    FockTensor out;
    out.kind_ = Kind::Pure;
    out.basis_ = std::move(basis);
    out.amplitudes_ = std::move(amplitudes);
    return out;
  }

  static FockTensor mixed(FockBasis basis, MatrixX<T> rho) {
    if (rho.rows() != basis.dim() || rho.cols() != basis.dim())
      throw NumericalError("FockTensor: density matrix size mismatch");
    if (basis.dim() > FockBasis::kMaxMixedDim)
      throw NumericalError("FockTensor: dimension " + std::to_string(basis.dim()) +
                           " exceeds mixed-state cap " +
                           std::to_string(FockBasis::kMaxMixedDim));
    const T scale = std::max(T(1), rho.template lpNorm<Eigen::Infinity>());
    const T herm_err = (rho - rho.adjoint()).template lpNorm<Eigen::Infinity>();
    if (herm_err > kHermTol * scale)
      throw NumericalError("FockTensor: density matrix not Hermitian (error " +
                           std::to_string(static_cast<double>(herm_err)) + ")");
    const std::complex<T> tr = rho.trace();
    if (!(tr.real() > T(0)))
      throw NumericalError("FockTensor: non-positive trace");
    rho /= tr.real();
    FockTensor out;
    out.kind_ = Kind::Mixed;
    out.basis_ = std::move(basis);
    out.density_ = std::move(rho);
    return out;
  }

  Kind kind() const { return kind_; }
  bool is_pure() const { return kind_ == Kind::Pure; }
  const FockBasis& basis() const { return basis_; }
  int num_modes() const { return basis_.num_modes(); }
  Eigen::Index dim() const { return basis_.dim(); }

  const VectorX<T>& amplitudes() const {
    if (!is_pure()) throw std::logic_error("FockTensor: amplitudes() on mixed state");
    return amplitudes_;
  }

  const MatrixX<T>& density() const {
    if (is_pure()) throw std::logic_error("FockTensor: density() on pure state");
    return density_;
  }

  // Rank-1 promotion; no-op on mixed states.
  FockTensor to_mixed() const {
    if (!is_pure()) return *this;
    if (dim() > FockBasis::kMaxMixedDim)
      throw NumericalError("FockTensor: dimension " + std::to_string(dim()) +
                           " exceeds mixed-state cap " +
                           std::to_string(FockBasis::kMaxMixedDim) +
                           " on promotion to density operator");
    MatrixX<T> rho = amplitudes_ * amplitudes_.adjoint();
    return mixed(basis_, std::move(rho));
  }

  // Photon-number probabilities: |psi_i|^2 (pure) or Re diag(rho) (mixed).
  RealVectorX<T> number_diagonal() const {
    if (is_pure()) return amplitudes_.cwiseAbs2();
    return density_.diagonal().real();
  }

  static constexpr T kHermTol = T(1e-12);

 private:
  FockTensor() : basis_({0}) {}

  Kind kind_ = Kind::Pure;
  FockBasis basis_;
  VectorX<T> amplitudes_;
  MatrixX<T> density_;
};

using FockTensord = FockTensor<double>;

}  // namespace cvbell

#endif
