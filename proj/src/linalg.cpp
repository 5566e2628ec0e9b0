#include "rbopt/linalg.hpp"

#include <cmath>

#include "rbopt/errors.hpp"

namespace rbopt {

SymEig sym_eig(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym(a));
  if (es.info() != Eigen::Success) {
    throw DegenerateInput("symmetric eigendecomposition failed to converge");
  }
  return {es.eigenvalues(), es.eigenvectors()};
}

Matrix sym_matrix_function(const Matrix& a, double (*f)(double)) {
  const SymEig e = sym_eig(a);
  Vector fd(e.eigenvalues.size());
  for (Eigen::Index i = 0; i < fd.size(); ++i) fd[i] = f(e.eigenvalues[i]);
  return e.eigenvectors * fd.asDiagonal() * e.eigenvectors.transpose();
}

namespace {

void require_positive(const Vector& eigs, const char* op) {
  if (eigs.size() > 0 && eigs.minCoeff() <= 0.0) {
    throw DegenerateInput(std::string(op) +
                          ": matrix is not positive definite (min eigenvalue " +
                          std::to_string(eigs.minCoeff()) + ")");
  }
}

}  // namespace

Matrix spd_sqrt(const Matrix& a) {
  const SymEig e = sym_eig(a);
  require_positive(e.eigenvalues, "spd_sqrt");
  return e.eigenvectors * e.eigenvalues.cwiseSqrt().asDiagonal() *
         e.eigenvectors.transpose();
}

Matrix spd_inv_sqrt(const Matrix& a) {
  const SymEig e = sym_eig(a);
  require_positive(e.eigenvalues, "spd_inv_sqrt");
  return e.eigenvectors * e.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() *
         e.eigenvectors.transpose();
}

Matrix spd_log(const Matrix& a) {
  const SymEig e = sym_eig(a);
  require_positive(e.eigenvalues, "spd_log");
  return e.eigenvectors * e.eigenvalues.array().log().matrix().asDiagonal() *
         e.eigenvectors.transpose();
}

Matrix sym_exp(const Matrix& a) {
  const SymEig e = sym_eig(a);
  return e.eigenvectors * e.eigenvalues.array().exp().matrix().asDiagonal() *
         e.eigenvectors.transpose();
}

Matrix spd_inverse(const Matrix& a) {
  const SymEig e = sym_eig(a);
  require_positive(e.eigenvalues, "spd_inverse");
  return e.eigenvectors * e.eigenvalues.cwiseInverse().asDiagonal() *
         e.eigenvectors.transpose();
}

Matrix dlog_spd(const SymEig& eig_a, const Matrix& h) {
  const Vector& lam = eig_a.eigenvalues;
  require_positive(lam, "dlog_spd");
  const Matrix& u = eig_a.eigenvectors;
  const Matrix ht = u.transpose() * sym(h) * u;
  const Eigen::Index d = lam.size();
  Matrix out(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const double li = lam[i], lj = lam[j];
      // Loewner matrix of log; the diagonal limit is 1/lambda.
      double w;
      if (std::abs(li - lj) <= 1e-12 * (std::abs(li) + std::abs(lj))) {
        w = 2.0 / (li + lj);
      } else {
        w = (std::log(li) - std::log(lj)) / (li - lj);
      }
      out(i, j) = w * ht(i, j);
    }
  }
  return u * out * u.transpose();
}

Matrix dlog_spd(const Matrix& a, const Matrix& h) {
  return dlog_spd(sym_eig(a), h);
}

double sym_min_eigenvalue(const Matrix& a) {
  return sym_eig(a).eigenvalues.minCoeff();
}

Vector svec(const Matrix& s) {
  const Eigen::Index d = s.rows();
  Vector v(d * (d + 1) / 2);
  const double r2 = std::sqrt(2.0);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      v[k++] = (i == j) ? s(i, j) : r2 * 0.5 * (s(i, j) + s(j, i));
    }
  }
  return v;
}

Matrix smat(const Vector& v, Eigen::Index d) {
  if (v.size() != d * (d + 1) / 2) {
    throw ContractViolation("smat: vector length does not match dimension");
  }
  Matrix s(d, d);
  const double inv_r2 = 1.0 / std::sqrt(2.0);
  Eigen::Index k = 0;
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i <= j; ++i) {
      const double x = v[k++];
      if (i == j) {
        s(i, j) = x;
      } else {
        s(i, j) = s(j, i) = inv_r2 * x;
      }
    }
  }
  return s;
}

Matrix qr_q_factor(const Matrix& a) {
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(a.rows(), a.cols());
  const Matrix r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double rjj = r(j, j);
    if (std::abs(rjj) < 1e-14 * std::max(1.0, a.norm())) {
      throw DegenerateInput("qr_q_factor: rank-deficient factor");
    }
    if (rjj < 0) q.col(j) = -q.col(j);
  }
  return q;
}

double trig_zeta(double tau, double c) {
  if (tau >= 0.0) return 1.0;
  const double s = std::sqrt(-tau) * c;
  if (s < 1e-8) return 1.0;  // limit of s/tanh(s)
  return s / std::tanh(s);
}

}  // namespace rbopt
