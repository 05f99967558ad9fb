#ifndef CVBELL_NPT_HPP
#define CVBELL_NPT_HPP

#include <numeric>
#include <vector>

#include "cvbell/channels.hpp"
#include "cvbell/inequalities.hpp"

namespace cvbell {

// Partial-transpose spectrum summary. negativity (sum of |negative
// eigenvalues|) is an extension measure beyond the plain NPT verdict and is
// labeled as such in serialized output.
template <typename T>
struct PTReport {
  T min_eig = T(0);
  T negativity = T(0);
  bool is_npt = false;
  std::vector<int> partition;
  T tol = T(1e-10);
};

using PTReportd = PTReport<double>;

template <typename T>
PTReport<T> pt_report(const FockTensor<T>& state, std::span<const int> modes,
                      T tol = T(1e-10)) {
  PTReport<T> rep;
  rep.partition.assign(modes.begin(), modes.end());
  rep.tol = tol;
  const auto evs = eigenvalues(partial_transpose(state, modes));
  rep.min_eig = evs.minCoeff();
  rep.negativity = T(0);
  for (Eigen::Index i = 0; i < evs.size(); ++i)
    if (evs[i] < T(0)) rep.negativity -= evs[i];
  rep.is_npt = rep.min_eig < -tol;
  return rep;
}

template <typename T>
PTReport<T> pt_report(const FockTensor<T>& state, std::initializer_list<int> modes,
                      T tol = T(1e-10)) {
  return pt_report(state, std::span<const int>(modes.begin(), modes.size()), tol);
}

// Modes k+1..N, the group the partial transpose acts on.
inline std::vector<int> second_group(int n_modes, int k) {
  std::vector<int> modes(n_modes - k);
  std::iota(modes.begin(), modes.end(), k + 1);
  return modes;
}

// rhs - lhs of the chosen inequality, computed on the partially transposed
// state through the identity <O_A O_B>_{rho^PT} = <O_A O_B^{dag*}>_rho
// (conjugation taken elementwise in the Fock basis, the basis the transpose
// is taken in). Agreement with the direct eval_* gap validates that identity.
template <typename T>
T pt_moment_check(const FockTensor<T>& state, Family family, int k) {
  const int n = state.num_modes();
  if (k < 1 || k > n - 1)
    throw std::invalid_argument("pt_moment_check: partition out of range");
  const FockBasis& basis = state.basis();
  const auto group = second_group(n, k);
  const FockTensor<T> sigma = partial_transpose(state, group);

  // On sigma, the B-group operator carrying a_j in the rho-picture appears as
  // a_j^* and the one carrying N_j appears as a_j^T a_j^*.
  std::vector<ModeOp<T>> num_b_pt;
  for (int m = k + 1; m <= n; ++m) {
    const auto a = annihilation_op<T>(m, basis.cutoff(m));
    num_b_pt.push_back(a.transpose());
    num_b_pt.push_back(a.conjugate());
  }

  if (family == Family::First) {
    // lhs' = |<Π_{i<=k} a_i Π_{j>k} a_j^*>_sigma|^2
    // rhs' = <Π_{i<=k} N_i Π_{j>k} a_j^T a_j^*>_sigma
    std::vector<ModeOp<T>> amp;
    for (int m = 1; m <= k; ++m) amp.push_back(annihilation_op<T>(m, basis.cutoff(m)));
    for (int m = k + 1; m <= n; ++m)
      amp.push_back(annihilation_op<T>(m, basis.cutoff(m)).conjugate());
    std::vector<ModeOp<T>> num;
    for (int m = 1; m <= k; ++m) num.push_back(number_op<T>(m, basis.cutoff(m)));
    for (const auto& op : num_b_pt) num.push_back(op);
    const T lhs = std::norm(expect<T>(sigma, amp).value);
    const T rhs = expect<T>(sigma, num).value.real();
    return rhs - lhs;
  }

  // Second family:
  // lhs' = |<Π_{i<=k} a_i^dag Π_{j>k} a_j^*>_sigma|^2
  // rhs' = <Π_{i<=k} N_i>_sigma · <Π_{j>k} a_j^T a_j^*>_sigma
  std::vector<ModeOp<T>> amp;
  for (int m = 1; m <= k; ++m) amp.push_back(creation_op<T>(m, basis.cutoff(m)));
  for (int m = k + 1; m <= n; ++m)
    amp.push_back(annihilation_op<T>(m, basis.cutoff(m)).conjugate());
  std::vector<ModeOp<T>> num_a;
  for (int m = 1; m <= k; ++m) num_a.push_back(number_op<T>(m, basis.cutoff(m)));
  const T lhs = std::norm(expect<T>(sigma, amp).value);
  const T rhs =
      expect<T>(sigma, num_a).value.real() * expect<T>(sigma, num_b_pt).value.real();
  return rhs - lhs;
}

}  // namespace cvbell

#endif
