#pragma once

// Dense complex matrices plus the toleranced order-theoretic predicates
// (positive semidefiniteness, Loewner comparison, effects) that everything
// else in the library is built on.  All indices are 0-based, all layouts
// row-major lexicographic.

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <vector>

namespace qflow {

using cplx = std::complex<double>;
using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;

// Numerical tolerances.  eps_psd: relative slack for the PSD predicate.
// eps_eq: equality / hermiticity slack.  eps_fix: fixed-point convergence
// threshold for Kleene iteration.
struct tolerance {
  double eps_psd = 1e-9;
  double eps_eq = 1e-9;
  double eps_fix = 1e-10;

  void validate() const {
    if (eps_psd < 0 || eps_eq < 0 || eps_fix < 0)
      throw std::invalid_argument("tolerance: negative epsilon");
  }
};

inline constexpr long default_max_iter = 10000;

inline cmat adjoint(const cmat& a) { return a.adjoint(); }

inline cmat cidentity(Eigen::Index n) { return cmat::Identity(n, n); }

inline cmat czero(Eigen::Index r, Eigen::Index c) { return cmat::Zero(r, c); }

// Kronecker product, left factor major: (a⊗b)[(i,k),(j,l)] = a(i,j)·b(k,l)
// with row index i·rows(b)+k.
inline cmat kron(const cmat& a, const cmat& b) {
  cmat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

inline double max_abs(const cmat& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

// Largest entrywise distance; the metric used for convergence checks and
// approximate equality throughout.
inline double entry_dist(const cmat& a, const cmat& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("entry_dist: shape mismatch");
  return max_abs(a - b);
}

inline bool approx_eq(const cmat& a, const cmat& b, double eps) {
  return entry_dist(a, b) <= eps * std::max({1.0, max_abs(a), max_abs(b)});
}

// Hermitian projection (a+a†)/2, permitted only when the anti-Hermitian part
// is below eps_eq relative to the matrix scale; larger asymmetry is an error,
// never silently symmetrized.
inline cmat checked_hermitian(const cmat& a, double eps_eq) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("checked_hermitian: non-square matrix");
  cmat anti = (a - a.adjoint()) / 2.0;
  if (max_abs(anti) > eps_eq * std::max(1.0, max_abs(a)))
    throw std::invalid_argument("checked_hermitian: matrix is not Hermitian within tolerance");
  return (a + a.adjoint()) / 2.0;
}

inline bool is_hermitian(const cmat& a, double eps_eq) {
  if (a.rows() != a.cols()) return false;
  return max_abs(a - a.adjoint()) <= 2.0 * eps_eq * std::max(1.0, max_abs(a));
}

// Eigenvalues of a Hermitian matrix, ascending.  Errors if the input is not
// Hermitian within eps_eq.
inline std::vector<double> hermitian_eigenvalues(const cmat& a, double eps_eq = 1e-9) {
  cmat h = checked_hermitian(a, eps_eq);
  if (h.rows() == 0) return {};
  Eigen::SelfAdjointEigenSolver<cmat> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("hermitian_eigenvalues: eigensolver failed");
  std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + h.rows());
  return ev;
}

inline double min_eigenvalue(const cmat& a, double eps_eq = 1e-9) {
  auto ev = hermitian_eigenvalues(a, eps_eq);
  if (ev.empty()) throw std::invalid_argument("min_eigenvalue: empty matrix");
  return ev.front();
}

// Spectral norm of a Hermitian matrix = largest |eigenvalue|.
inline double hermitian_norm(const cmat& a, double eps_eq = 1e-9) {
  auto ev = hermitian_eigenvalues(a, eps_eq);
  if (ev.empty()) return 0.0;
  return std::max(std::abs(ev.front()), std::abs(ev.back()));
}

// The single centralized PSD oracle: true iff `a` is Hermitian within eps_eq
// and its minimum eigenvalue is ≥ −eps_psd · max(1, spectral norm).
// Non-square input is an error, non-Hermitian input is simply not PSD.
inline bool is_psd(const cmat& a, const tolerance& tol = {}) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("is_psd: non-square matrix");
  if (a.rows() == 0) return true;
  if (!is_hermitian(a, tol.eps_eq)) return false;
  cmat h = (a + a.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<cmat> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("is_psd: eigensolver failed");
  double lo = es.eigenvalues()(0);
  double hi = es.eigenvalues()(h.rows() - 1);
  double norm = std::max(std::abs(lo), std::abs(hi));
  return lo >= -tol.eps_psd * std::max(1.0, norm);
}

// Loewner order: a ⊑ b iff b − a is positive semidefinite.
inline bool loewner_leq(const cmat& a, const cmat& b, const tolerance& tol = {}) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("loewner_leq: shape mismatch");
  return is_psd(b - a, tol);
}

// Effect: 0 ⊑ a ⊑ I.
inline bool is_effect(const cmat& a, const tolerance& tol = {}) {
  return is_psd(a, tol) && loewner_leq(a, cidentity(a.rows()), tol);
}

}  // namespace qflow
