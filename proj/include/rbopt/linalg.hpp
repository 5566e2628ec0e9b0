#pragma once

#include <Eigen/Dense>

namespace rbopt {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// (A + A^T) / 2. All symmetric-matrix computations symmetrize first to
/// control numerical drift.
inline Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

/// Eigendecomposition of a symmetric matrix. Throws DegenerateInput if the
/// solver fails to converge.
struct SymEig {
  Vector eigenvalues;
  Matrix eigenvectors;
};
SymEig sym_eig(const Matrix& a);

/// f applied to a symmetric matrix through its eigendecomposition.
Matrix sym_matrix_function(const Matrix& a, double (*f)(double));

Matrix spd_sqrt(const Matrix& a);      // requires eigenvalues > 0
Matrix spd_inv_sqrt(const Matrix& a);  // requires eigenvalues > 0
Matrix spd_log(const Matrix& a);       // requires eigenvalues > 0
Matrix sym_exp(const Matrix& a);       // any symmetric matrix
Matrix spd_inverse(const Matrix& a);   // via eigendecomposition

/// Frechet derivative of the matrix logarithm at SPD point a, applied to the
/// symmetric direction h (Daleckii-Krein formula with the Loewner matrix).
Matrix dlog_spd(const Matrix& a, const Matrix& h);
/// Same, reusing a precomputed eigendecomposition of a.
Matrix dlog_spd(const SymEig& eig_a, const Matrix& h);

/// Minimum eigenvalue of a symmetric matrix.
double sym_min_eigenvalue(const Matrix& a);

/// Isometric half-vectorization of a symmetric d x d matrix: diagonal entries
/// as-is, off-diagonal entries scaled by sqrt(2), so that
/// svec(S) . svec(T) = <S, T>_F. Length d(d+1)/2.
Vector svec(const Matrix& s);
/// Inverse of svec.
Matrix smat(const Vector& v, Eigen::Index d);

/// Q-factor of the thin QR decomposition with the sign convention that the
/// diagonal of R is positive. Throws DegenerateInput when R is rank
/// deficient.
Matrix qr_q_factor(const Matrix& a);

/// curvature factor zeta(tau, c) = sqrt(|tau|) c / tanh(sqrt(|tau|) c) for
/// tau < 0, and 1 otherwise.
double trig_zeta(double tau, double c);

}  // namespace rbopt
