#pragma once

// Dense spectral routines for small d: real Schur decomposition, the
// dominant generalized eigenspace E_max of V K^T Q, and distances to it.

#include "attnflow/sphere.hpp"

#include <Eigen/Eigenvalues>

#include <complex>
#include <sstream>
#include <vector>

namespace attnflow {

struct Subspace {
  Mat basis;  // columns orthonormal
  int dim() const { return static_cast<int>(basis.cols()); }
};

struct SchurDecomposition {
  Mat q;  // orthogonal
  Mat t;  // quasi-upper-triangular (1x1 and 2x2 diagonal blocks)
};

/// Real Schur factorization A = Q T Q^T.
inline SchurDecomposition real_schur(const Mat& a) {
  const int d = static_cast<int>(a.rows());
  Eigen::RealSchur<Mat> schur;
  schur.setMaxIterations(100 * d);
  schur.compute(a);
  if (schur.info() != Eigen::Success) {
    std::ostringstream msg;
    msg << "real_schur: QR iteration did not converge after " << 100 * d
        << " sweeps (|A| = " << a.norm() << ")";
    throw NumericalError(msg.str());
  }
  SchurDecomposition out{schur.matrixU(), schur.matrixT()};
  const double scale = std::max(a.norm(), 1e-300);
  const double resid = (out.q * out.t * out.q.transpose() - a).norm();
  if (resid > 1e-8 * scale) {
    std::ostringstream msg;
    msg << "real_schur: residual " << resid << " exceeds 1e-8*|A| = " << 1e-8 * scale;
    throw NumericalError(msg.str());
  }
  return out;
}

inline std::vector<std::complex<double>> eigenvalues(const Mat& a) {
  Eigen::ComplexSchur<Mat> schur(a, /*computeU=*/false);
  if (schur.info() != Eigen::Success)
    throw NumericalError("eigenvalues: complex Schur did not converge");
  std::vector<std::complex<double>> out(a.rows());
  for (int i = 0; i < a.rows(); ++i) out[i] = schur.matrixT()(i, i);
  return out;
}

namespace detail {

// Swaps the adjacent diagonal entries k, k+1 of the complex upper-triangular
// T by a unitary similarity, updating U accordingly.
inline void swap_adjacent_triangular(Eigen::MatrixXcd& t, Eigen::MatrixXcd& u, int k) {
  using C = std::complex<double>;
  const C a = t(k, k), b = t(k, k + 1), c = t(k + 1, k + 1);
  const double n = std::sqrt(std::norm(b) + std::norm(c - a));
  if (n < 1e-300) return;  // equal eigenvalues, order irrelevant
  // first column = normalized eigenvector of [[a,b],[0,c]] for eigenvalue c
  const C v1 = b / n, v2 = (c - a) / n;
  Eigen::Matrix2cd g;
  g << v1, -std::conj(v2), v2, std::conj(v1);
  const int d = static_cast<int>(t.rows());
  t.block(0, k, k + 2, 2) = t.block(0, k, k + 2, 2) * g;
  t.block(k, k, 2, d - k) = g.adjoint() * t.block(k, k, 2, d - k);
  u.block(0, k, d, 2) = u.block(0, k, d, 2) * g;
  t(k + 1, k) = 0.0;
}

}  // namespace detail

/// Orthonormal basis of the invariant subspace spanned by the generalized
/// eigenvectors whose eigenvalue real parts lie within group_tol of the
/// maximum. group_tol < 0 selects the default 1e-8 * |A|_F.
inline Subspace dominant_invariant_subspace(const Mat& a, double group_tol = -1.0) {
  const int d = static_cast<int>(a.rows());
  if (group_tol < 0) group_tol = 1e-8 * std::max(a.norm(), 1.0);
  Eigen::ComplexSchur<Mat> schur(a, /*computeU=*/true);
  if (schur.info() != Eigen::Success)
    throw NumericalError("dominant_invariant_subspace: Schur did not converge");
  Eigen::MatrixXcd t = schur.matrixT();
  Eigen::MatrixXcd u = schur.matrixU();

  double max_re = t(0, 0).real();
  for (int i = 1; i < d; ++i) max_re = std::max(max_re, t(i, i).real());
  auto selected = [&](int i) { return t(i, i).real() >= max_re - group_tol; };

  // Bubble selected eigenvalues to the leading positions.
  int front = 0;
  for (int i = 0; i < d; ++i) {
    if (!selected(i)) continue;
    for (int j = i; j > front; --j) detail::swap_adjacent_triangular(t, u, j - 1);
    ++front;
  }
  const int k = front;

  // The dominant group is closed under conjugation, so the span of the real
  // and imaginary parts of the leading Schur vectors is a real k-dimensional
  // invariant subspace.
  Mat stacked(d, 2 * k);
  stacked << u.leftCols(k).real(), u.leftCols(k).imag();
  Eigen::JacobiSVD<Mat> svd(stacked, Eigen::ComputeThinU);
  Subspace out;
  out.basis = svd.matrixU().leftCols(k);

  const double scale = std::max(a.norm(), 1.0);
  for (int j = 0; j < k; ++j) {
    Vec img = a * out.basis.col(j);
    Vec resid = img - out.basis * (out.basis.transpose() * img);
    if (resid.norm() > 1e-7 * scale)
      throw NumericalError("dominant_invariant_subspace: invariance check failed");
  }
  return out;
}

/// |x - Pi_S x|, zero iff x lies in span(S).
inline double subspace_distance(const Vec& x, const Subspace& s) {
  return (x - s.basis * (s.basis.transpose() * x)).norm();
}

}  // namespace attnflow
