#include "rbopt/benchmarks.hpp"

#include "rbopt/hypergradient.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <mutex>

#include "rbopt/errors.hpp"

namespace rbopt {

Matrix random_spd_matrix(Eigen::Index d, Rng& rng, double eig_lo,
                         double eig_hi) {
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Matrix g(d, d);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = n01(rng);
  const Matrix q = qr_q_factor(g);
  Vector lam(d);
  const double lo = std::log(eig_lo), hi = std::log(eig_hi);
  for (Eigen::Index i = 0; i < d; ++i)
    lam[i] = std::exp(lo + (hi - lo) * u01(rng));
  return sym(q * lam.asDiagonal() * q.transpose());
}

// ---------------------------------------------------------------------------
// Toy quadratic

std::pair<BilevelProblem, std::shared_ptr<const ToyQuadraticInstance>>
make_toy_quadratic(Matrix c) {
  auto inst = std::make_shared<ToyQuadraticInstance>();
  inst->c = std::move(c);
  const Eigen::Index ny = inst->c.rows();
  const Eigen::Index nx = inst->c.cols();
  inst->upper = make_euclidean(nx);
  inst->lower = make_euclidean(ny);

  BilevelProblem p;
  p.upper = inst->upper;
  p.lower = inst->lower;
  p.f = [](const Point&, const Point& y) {
    return 0.5 * y.block().squaredNorm();
  };
  p.g = [inst](const Point& x, const Point& y) {
    return 0.5 * (y.block() - inst->c * x.block()).squaredNorm();
  };
  p.grad_f_x = [](const Point& x, const Point&) { return zero_tangent(x); };
  p.grad_f_y = [](const Point&, const Point& y) {
    return make_tangent(y, Matrix(y.block()));
  };
  p.grad_g_y = [inst](const Point& x, const Point& y) {
    return make_tangent(y, Matrix(y.block() - inst->c * x.block()));
  };
  p.grad_g_x = [inst](const Point& x, const Point& y) {
    return make_tangent(
        x, Matrix(-inst->c.transpose() * (y.block() - inst->c * x.block())));
  };
  p.hess_g_y_vec = [](const Point&, const Point&, const Tangent& v) {
    return v;
  };
  p.cross_g_xy_vec = [inst](const Point& x, const Point&, const Tangent& v) {
    return make_tangent(x, Matrix(-inst->c.transpose() * v.block()));
  };
  p.lower_closed_form = [inst, lower = inst->lower](const Point& x) {
    return make_point(lower, Matrix(inst->c * x.block()));
  };
  p.exact_hypergradient = [inst](const Point& x) {
    return make_tangent(
        x, Matrix(inst->c.transpose() * (inst->c * x.block())));
  };
  return {std::move(p), inst};
}

std::pair<BilevelProblem, std::shared_ptr<const ToyQuadraticInstance>>
make_toy_quadratic(Eigen::Index nx, Eigen::Index ny, unsigned long long seed) {
  if (nx < 1 || ny < 1) throw ConfigError("toy_quadratic: dims must be >= 1");
  Rng rng(seed);
  std::normal_distribution<double> n01;
  Matrix c(ny, nx);
  for (Eigen::Index j = 0; j < nx; ++j)
    for (Eigen::Index i = 0; i < ny; ++i) c(i, j) = n01(rng);
  return make_toy_quadratic(std::move(c));
}

// ---------------------------------------------------------------------------
// Simple similarity

namespace {

Matrix similarity_b(const SimpleSimilarityInstance& inst, const Matrix& w) {
  return sym(w * inst.yty * w.transpose()) +
         inst.lambda * Matrix::Identity(inst.d, inst.d);
}

Matrix stiefel_project(const Matrix& w, const Matrix& z) {
  return z - w * sym(w.transpose() * z);
}

}  // namespace

std::pair<BilevelProblem, std::shared_ptr<const SimpleSimilarityInstance>>
make_simple_similarity(Eigen::Index n, Eigen::Index d, Eigen::Index r,
                       double lambda, unsigned long long seed) {
  if (!(n >= d && d >= r && r >= 1)) {
    throw ConfigError("simple_similarity: need n >= d >= r >= 1");
  }
  if (lambda <= 0) throw ConfigError("simple_similarity: lambda must be > 0");

  auto inst = std::make_shared<SimpleSimilarityInstance>();
  inst->n = n;
  inst->d = d;
  inst->r = r;
  inst->lambda = lambda;
  Rng rng(seed);
  std::normal_distribution<double> n01;
  inst->x_data.resize(n, d);
  inst->y_data.resize(n, r);
  for (Eigen::Index j = 0; j < d; ++j)
    for (Eigen::Index i = 0; i < n; ++i) inst->x_data(i, j) = n01(rng);
  for (Eigen::Index j = 0; j < r; ++j)
    for (Eigen::Index i = 0; i < n; ++i) inst->y_data(i, j) = n01(rng);
  inst->a = sym(inst->x_data.transpose() * inst->x_data);
  inst->yty = sym(inst->y_data.transpose() * inst->y_data);
  inst->cxy = inst->x_data.transpose() * inst->y_data;
  if (sym_min_eigenvalue(inst->a) <= 0) {
    throw DegenerateInput("simple_similarity: X^T X is not positive definite");
  }
  inst->upper = make_stiefel(d, r);
  inst->lower = make_spd(d);

  BilevelProblem p;
  p.upper = inst->upper;
  p.lower = inst->lower;
  p.f = [inst](const Point& x, const Point& y) {
    return -((y.block() * inst->cxy).cwiseProduct(x.block())).sum();
  };
  p.g = [inst](const Point& x, const Point& y) {
    const Matrix b = similarity_b(*inst, x.block());
    return (y.block().cwiseProduct(inst->a)).sum() +
           (spd_inverse(y.block()).cwiseProduct(b)).sum();
  };
  p.grad_f_x = [inst](const Point& x, const Point& y) {
    const Matrix eg = -(y.block() * inst->cxy);
    return make_tangent(x, stiefel_project(x.block(), eg));
  };
  p.grad_f_y = [inst](const Point& x, const Point& y) {
    const Matrix eg = -sym(inst->cxy * x.block().transpose());
    return make_tangent(y, sym(y.block() * eg * y.block()));
  };
  p.grad_g_y = [inst](const Point& x, const Point& y) {
    const Matrix b = similarity_b(*inst, x.block());
    const Matrix& m = y.block();
    return make_tangent(y, sym(m * inst->a * m - b));
  };
  p.grad_g_x = [inst](const Point& x, const Point& y) {
    const Matrix eg =
        2.0 * spd_inverse(y.block()) * x.block() * inst->yty;
    return make_tangent(x, stiefel_project(x.block(), eg));
  };
  p.hess_g_y_vec = [inst](const Point& x, const Point& y, const Tangent& tv) {
    const Matrix b = similarity_b(*inst, x.block());
    const Matrix& m = y.block();
    const Matrix minv = spd_inverse(m);
    const Matrix& v = tv.block();
    return make_tangent(y, sym(0.5 * (v * inst->a * m + m * inst->a * v) +
                               0.5 * (v * minv * b + b * minv * v)));
  };
  p.cross_g_xy_vec = [inst](const Point& x, const Point& y, const Tangent& tv) {
    const Matrix minv = spd_inverse(y.block());
    const Matrix eg = -2.0 * minv * tv.block() * minv * x.block() * inst->yty;
    return make_tangent(x, stiefel_project(x.block(), eg));
  };
  p.lower_closed_form = [inst, lower = inst->lower](const Point& x) {
    // M* = A^-1/2 (A^1/2 B A^1/2)^1/2 A^-1/2 solves M A M = B.
    const Matrix b = similarity_b(*inst, x.block());
    const Matrix ah = spd_sqrt(inst->a);
    const Matrix aih = spd_inv_sqrt(inst->a);
    return make_point(lower, sym(aih * spd_sqrt(sym(ah * b * ah)) * aih));
  };
  // Exact hypergradient: at y* the Hessian reduces to V A M + M A V, so the
  // tangent linear system is a Lyapunov equation solved in the eigenbasis of
  // M^1/2 A M^1/2.
  BilevelProblem p_for_oracle = p;  // copy without exact_hypergradient set
  p.exact_hypergradient = [inst, p_for_oracle](const Point& x) {
    const Point ystar = p_for_oracle.lower_closed_form(x);
    const Matrix& m = ystar.block();
    const Matrix mh = spd_sqrt(m);
    const Matrix mih = spd_inv_sqrt(m);
    const SymEig ae = sym_eig(sym(mh * inst->a * mh));
    const Tangent rhs = p_for_oracle.grad_f_y(x, ystar);
    const Matrix rt =
        ae.eigenvectors.transpose() * sym(mih * rhs.block() * mih) *
        ae.eigenvectors;
    Matrix vt(inst->d, inst->d);
    for (Eigen::Index i = 0; i < inst->d; ++i) {
      for (Eigen::Index j = 0; j < inst->d; ++j) {
        vt(i, j) = rt(i, j) / (ae.eigenvalues[i] + ae.eigenvalues[j]);
      }
    }
    const Matrix v = sym(mh * ae.eigenvectors * vt *
                         ae.eigenvectors.transpose() * mh);
    const Tangent vstar = make_tangent(ystar, v);
    return p_for_oracle.grad_f_x(x, ystar) -
           p_for_oracle.cross_g_xy_vec(x, ystar, vstar);
  };
  return {std::move(p), inst};
}

// ---------------------------------------------------------------------------
// Shallow hyper-representation

namespace {

struct ShallowSnapshot {
  Matrix a;                  // key
  std::vector<SymEig> eigs;  // eigendecomposition of S_i = A^T D_i A
  Matrix phi;                // n x m feature matrix
  Matrix gram_tr;            // Phi_tr^T Phi_tr / m_tr + lambda I
};

class ShallowWorkspace {
 public:
  explicit ShallowWorkspace(std::shared_ptr<const ShallowHyperRepInstance> inst)
      : inst_(std::move(inst)) {}

  std::shared_ptr<const ShallowSnapshot> get(const Matrix& a) const {
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (snapshot_ && (snapshot_->a - a).squaredNorm() == 0.0) {
        return snapshot_;
      }
    }
    auto snap = build(a);
    std::lock_guard<std::mutex> lock(mu_);
    snapshot_ = snap;
    return snap;
  }

 private:
  std::shared_ptr<const ShallowSnapshot> build(const Matrix& a) const {
    auto snap = std::make_shared<ShallowSnapshot>();
    snap->a = a;
    const Eigen::Index n = inst_->n;
    const Eigen::Index m = inst_->feature_dim();
    snap->eigs.reserve(static_cast<std::size_t>(n));
    snap->phi.resize(n, m);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Matrix s =
          sym(a.transpose() * inst_->samples[static_cast<std::size_t>(i)] * a);
      SymEig e = sym_eig(s);
      if (e.eigenvalues.minCoeff() <= 0) {
        throw DegenerateInput("shallow_hyperrep: A^T D A lost definiteness");
      }
      const Matrix logs =
          e.eigenvectors * e.eigenvalues.array().log().matrix().asDiagonal() *
          e.eigenvectors.transpose();
      snap->phi.row(i) = svec(logs).transpose();
      snap->eigs.push_back(std::move(e));
    }
    const Eigen::Index mt = inst_->train_count();
    const Matrix phi_tr = snap->phi.topRows(mt);
    snap->gram_tr = sym(phi_tr.transpose() * phi_tr) / double(mt) +
                    inst_->lambda * Matrix::Identity(m, m);
    return snap;
  }

  std::shared_ptr<const ShallowHyperRepInstance> inst_;
  mutable std::mutex mu_;
  mutable std::shared_ptr<const ShallowSnapshot> snapshot_;
};

}  // namespace

std::pair<BilevelProblem, std::shared_ptr<const ShallowHyperRepInstance>>
make_shallow_hyperrep(Eigen::Index n, Eigen::Index d, Eigen::Index r,
                      double lambda, double noise_sd,
                      unsigned long long seed) {
  if (!(d >= r && r >= 1)) throw ConfigError("shallow_hyperrep: need d >= r >= 1");
  if (n < 4 || n % 2 != 0) {
    throw ConfigError("shallow_hyperrep: n must be even and >= 4");
  }
  if (lambda <= 0) {
    throw ConfigError(
        "shallow_hyperrep: lambda must be > 0 (ridge keeps the Gram matrix "
        "nonsingular)");
  }

  auto inst = std::make_shared<ShallowHyperRepInstance>();
  inst->n = n;
  inst->d = d;
  inst->r = r;
  inst->lambda = lambda;
  inst->noise_sd = noise_sd;
  inst->upper = make_stiefel(d, r);
  inst->lower = make_euclidean(r * (r + 1) / 2);

  Rng rng(seed);
  std::normal_distribution<double> n01;
  inst->samples.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    inst->samples.push_back(random_spd_matrix(d, rng));
  }
  // Ground-truth mapping generates the targets.
  Matrix g(d, r);
  for (Eigen::Index j = 0; j < r; ++j)
    for (Eigen::Index i = 0; i < d; ++i) g(i, j) = n01(rng);
  const Matrix a_true = qr_q_factor(g);
  Vector beta_true(inst->feature_dim());
  for (Eigen::Index i = 0; i < beta_true.size(); ++i) beta_true[i] = n01(rng);
  inst->targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Matrix s =
        sym(a_true.transpose() * inst->samples[static_cast<std::size_t>(i)] *
            a_true);
    inst->targets[i] =
        svec(spd_log(s)).dot(beta_true) + noise_sd * n01(rng);
  }

  auto ws = std::make_shared<ShallowWorkspace>(inst);

  const Eigen::Index mt = inst->train_count();
  const Eigen::Index mv = n - mt;

  // Split helpers; the first half of the samples is the training set.
  const auto val_error = [inst, mv, mt](const ShallowSnapshot& snap,
                                        const Vector& beta) -> Vector {
    return snap.phi.bottomRows(mv) * beta - inst->targets.tail(mv);
  };
  const auto train_error = [inst, mt](const ShallowSnapshot& snap,
                                      const Vector& beta) -> Vector {
    return snap.phi.topRows(mt) * beta - inst->targets.head(mt);
  };

  // Euclidean gradient in A of (1/den) sum_i e_i <svec(log S_i), w_i>:
  //   (2/den) sum_i e_i D_i A Dlog_{S_i}[smat(w_i)].
  const auto chain_grad_a =
      [inst](const ShallowSnapshot& snap, Eigen::Index offset,
             const Vector& errs, const std::vector<Matrix>& dirs,
             double den) -> Matrix {
    Matrix acc = Matrix::Zero(inst->d, inst->r);
    for (Eigen::Index i = 0; i < errs.size(); ++i) {
      if (errs[i] == 0.0) continue;
      const auto idx = static_cast<std::size_t>(offset + i);
      acc += errs[i] * inst->samples[idx] * snap.a *
             dlog_spd(snap.eigs[idx], dirs[static_cast<std::size_t>(i)]);
    }
    return (2.0 / den) * acc;
  };

  BilevelProblem p;
  p.upper = inst->upper;
  p.lower = inst->lower;
  p.f = [inst, ws, val_error, mv](const Point& x, const Point& y) {
    const auto snap = ws->get(x.block());
    return 0.5 / double(mv) * val_error(*snap, y.block().col(0)).squaredNorm();
  };
  p.g = [inst, ws, train_error, mt](const Point& x, const Point& y) {
    const auto snap = ws->get(x.block());
    const Vector beta = y.block().col(0);
    return 0.5 / double(mt) * train_error(*snap, beta).squaredNorm() +
           0.5 * inst->lambda * beta.squaredNorm();
  };
  p.grad_f_y = [ws, val_error, mv](const Point& x, const Point& y) {
    const auto snap = ws->get(x.block());
    const Vector e = val_error(*snap, y.block().col(0));
    Matrix out = snap->phi.bottomRows(mv).transpose() * e / double(mv);
    return make_tangent(y, std::move(out));
  };
  p.grad_g_y = [inst, ws, train_error, mt](const Point& x, const Point& y) {
    const auto snap = ws->get(x.block());
    const Vector beta = y.block().col(0);
    const Vector e = train_error(*snap, beta);
    Matrix out = snap->phi.topRows(mt).transpose() * e / double(mt) +
                 inst->lambda * beta;
    return make_tangent(y, std::move(out));
  };
  p.grad_f_x = [inst, ws, val_error, chain_grad_a, mv,
                mt](const Point& x, const Point& y) {
    const auto snap = ws->get(x.block());
    const Vector beta = y.block().col(0);
    const Vector e = val_error(*snap, beta);
    const Matrix mb = smat(beta, inst->r);
    std::vector<Matrix> dirs(static_cast<std::size_t>(mv), mb);
    const Matrix eg = chain_grad_a(*snap, mt, e, dirs, double(mv));
    return make_tangent(x, stiefel_project(x.block(), eg));
  };
  p.grad_g_x = [inst, ws, train_error, chain_grad_a,
                mt](const Point& x, const Point& y) {
    const auto snap = ws->get(x.block());
    const Vector beta = y.block().col(0);
    const Vector e = train_error(*snap, beta);
    const Matrix mb = smat(beta, inst->r);
    std::vector<Matrix> dirs(static_cast<std::size_t>(mt), mb);
    const Matrix eg = chain_grad_a(*snap, 0, e, dirs, double(mt));
    return make_tangent(x, stiefel_project(x.block(), eg));
  };
  p.hess_g_y_vec = [ws](const Point& x, const Point& y, const Tangent& tv) {
    const auto snap = ws->get(x.block());
    Matrix out = snap->gram_tr * tv.block().col(0);
    return make_tangent(y, std::move(out));
  };
  p.cross_g_xy_vec = [inst, ws, train_error, chain_grad_a,
                      mt](const Point& x, const Point& y, const Tangent& tv) {
    const auto snap = ws->get(x.block());
    const Vector beta = y.block().col(0);
    const Vector v = tv.block().col(0);
    const Vector e = train_error(*snap, beta);
    const Matrix mb = smat(beta, inst->r);
    const Matrix v_dir = smat(v, inst->r);
    const Vector phiv = snap->phi.topRows(mt) * v;
    // d/dA of grad_g_beta, adjoint against v: per sample the direction is
    // e_i smat(v) + <phi_i, v> smat(beta).
    Matrix acc = Matrix::Zero(inst->d, inst->r);
    for (Eigen::Index i = 0; i < mt; ++i) {
      const auto idx = static_cast<std::size_t>(i);
      const Matrix dir = e[i] * v_dir + phiv[i] * mb;
      acc += inst->samples[idx] * snap->a * dlog_spd(snap->eigs[idx], dir);
    }
    const Matrix eg = (2.0 / double(mt)) * acc;
    return make_tangent(x, stiefel_project(x.block(), eg));
  };
  p.lower_closed_form = [inst, ws, mt,
                         lower = inst->lower](const Point& x) {
    const auto snap = ws->get(x.block());
    const Vector rhs = snap->phi.topRows(mt).transpose() *
                       inst->targets.head(mt) / double(mt);
    Matrix beta = snap->gram_tr.ldlt().solve(rhs);
    return make_point(lower, std::move(beta));
  };

  // Exact hypergradient: Euclidean lower level, so v* is a direct dense
  // solve against the ridge Gram matrix at beta*.
  BilevelProblem base = p;
  p.exact_hypergradient = [base, ws](const Point& x) {
    const Point ystar = base.lower_closed_form(x);
    const auto snap = ws->get(x.block());
    const Tangent gfy = base.grad_f_y(x, ystar);
    Matrix vdata = snap->gram_tr.ldlt().solve(gfy.block());
    const Tangent vstar = make_tangent(ystar, std::move(vdata));
    return base.grad_f_x(x, ystar) - base.cross_g_xy_vec(x, ystar, vstar);
  };
  return {std::move(p), inst};
}

// ---------------------------------------------------------------------------
// Robust optimization (Karcher mean / Gaussian MLE weights)

namespace {

struct SpdContext {
  SymEig eig;      // of y
  Matrix y_sqrt, y_inv_sqrt, y_inv;
};

SpdContext spd_context(const Matrix& y) {
  SpdContext ctx;
  ctx.eig = sym_eig(y);
  if (ctx.eig.eigenvalues.minCoeff() <= 0) {
    throw DegenerateInput("robust: lower iterate lost positive definiteness");
  }
  const Vector sq = ctx.eig.eigenvalues.cwiseSqrt();
  ctx.y_sqrt = ctx.eig.eigenvectors * sq.asDiagonal() *
               ctx.eig.eigenvectors.transpose();
  ctx.y_inv_sqrt = ctx.eig.eigenvectors * sq.cwiseInverse().asDiagonal() *
                   ctx.eig.eigenvectors.transpose();
  ctx.y_inv = ctx.eig.eigenvectors *
              ctx.eig.eigenvalues.cwiseInverse().asDiagonal() *
              ctx.eig.eigenvectors.transpose();
  return ctx;
}

}  // namespace

std::pair<BilevelProblem, std::shared_ptr<const RobustInstance>> make_robust(
    RobustLoss loss, Eigen::Index n, Eigen::Index d, unsigned long long seed) {
  if (n < 2 || d < 1) throw ConfigError("robust: need n >= 2 and d >= 1");

  auto inst = std::make_shared<RobustInstance>();
  inst->loss = loss;
  inst->n = n;
  inst->d = d;
  inst->upper = make_simplex(n);
  inst->lower = make_spd(d);

  unsigned long long attempt_seed = seed;
  for (int attempt = 0;; ++attempt) {
    Rng rng(attempt_seed);
    inst->spd_samples.clear();
    inst->vec_samples.clear();
    if (loss == RobustLoss::kKarcherMean) {
      for (Eigen::Index i = 0; i < n; ++i) {
        inst->spd_samples.push_back(random_spd_matrix(d, rng));
      }
      break;
    }
    // MLE samples: zero-mean Gaussian with a random PSD covariance.
    const Matrix cov_half = spd_sqrt(random_spd_matrix(d, rng));
    std::normal_distribution<double> n01;
    Matrix second_moment = Matrix::Zero(d, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      Vector z(d);
      for (Eigen::Index k = 0; k < d; ++k) z[k] = n01(rng);
      Vector xi = cov_half * z;
      second_moment += xi * xi.transpose();
      inst->vec_samples.push_back(std::move(xi));
    }
    second_moment /= double(n);
    if (sym_min_eigenvalue(second_moment) > 1e-8) break;
    if (attempt >= 8) {
      throw DegenerateInput("robust_mle: could not draw nonsingular samples");
    }
    std::cerr << "robust_mle: degenerate sample moment, regenerating with "
                 "seed "
              << attempt_seed + 1 << "\n";
    ++attempt_seed;
  }

  // Per-sample losses and their SPD gradients/Hessians.
  const auto losses = [inst](const Matrix& y) -> Vector {
    const SpdContext ctx = spd_context(y);
    Vector l(inst->n);
    if (inst->loss == RobustLoss::kKarcherMean) {
      for (Eigen::Index i = 0; i < inst->n; ++i) {
        const Matrix xit =
            sym(ctx.y_inv_sqrt *
                inst->spd_samples[static_cast<std::size_t>(i)] *
                ctx.y_inv_sqrt);
        l[i] = spd_log(xit).squaredNorm();
      }
    } else {
      const double logdet = ctx.eig.eigenvalues.array().log().sum();
      for (Eigen::Index i = 0; i < inst->n; ++i) {
        const Vector& xi = inst->vec_samples[static_cast<std::size_t>(i)];
        l[i] = 0.5 * logdet + 0.5 * xi.dot(ctx.y_inv * xi);
      }
    }
    return l;
  };

  // Weighted gradient sum_i w_i G_y l_i as a symmetric matrix.
  const auto weighted_grad_y = [inst](const Matrix& y,
                                      const Vector& w) -> Matrix {
    const SpdContext ctx = spd_context(y);
    Matrix acc = Matrix::Zero(inst->d, inst->d);
    if (inst->loss == RobustLoss::kKarcherMean) {
      for (Eigen::Index i = 0; i < inst->n; ++i) {
        if (w[i] == 0.0) continue;
        const Matrix xit =
            sym(ctx.y_inv_sqrt *
                inst->spd_samples[static_cast<std::size_t>(i)] *
                ctx.y_inv_sqrt);
        // G_y d^2(y, xi) = -2 Log_y(xi)
        acc += w[i] * (-2.0) * sym(ctx.y_sqrt * spd_log(xit) * ctx.y_sqrt);
      }
    } else {
      Matrix sp = Matrix::Zero(inst->d, inst->d);
      double wsum = 0.0;
      for (Eigen::Index i = 0; i < inst->n; ++i) {
        const Vector& xi = inst->vec_samples[static_cast<std::size_t>(i)];
        sp += w[i] * (xi * xi.transpose());
        wsum += w[i];
      }
      acc = 0.5 * (wsum * y - sp);
    }
    return sym(acc);
  };

  BilevelProblem p;
  p.upper = inst->upper;
  p.lower = inst->lower;
  p.f = [inst, losses](const Point& x, const Point& y) {
    const Vector pw = x.block().col(0);
    const Vector uniform = Vector::Constant(inst->n, 1.0 / double(inst->n));
    return (pw - uniform).squaredNorm() - pw.dot(losses(y.block()));
  };
  p.g = [losses](const Point& x, const Point& y) {
    return x.block().col(0).dot(losses(y.block()));
  };
  p.grad_f_x = [inst, losses](const Point& x, const Point& y) {
    const Vector pw = x.block().col(0);
    const Vector uniform = Vector::Constant(inst->n, 1.0 / double(inst->n));
    Matrix eg(inst->n, 1);
    eg.col(0) = 2.0 * (pw - uniform) - losses(y.block());
    return egrad_to_rgrad(x, eg);
  };
  p.grad_f_y = [weighted_grad_y](const Point& x, const Point& y) {
    return make_tangent(y, Matrix(-weighted_grad_y(y.block(),
                                                   x.block().col(0))));
  };
  p.grad_g_y = [weighted_grad_y](const Point& x, const Point& y) {
    return make_tangent(y, weighted_grad_y(y.block(), x.block().col(0)));
  };
  p.grad_g_x = [inst, losses](const Point& x, const Point& y) {
    Matrix eg(inst->n, 1);
    eg.col(0) = losses(y.block());
    return egrad_to_rgrad(x, eg);
  };
  p.hess_g_y_vec = [inst](const Point& x, const Point& y, const Tangent& tv) {
    const SpdContext ctx = spd_context(y.block());
    const Vector pw = x.block().col(0);
    const Matrix vt = sym(ctx.y_inv_sqrt * tv.block() * ctx.y_inv_sqrt);
    Matrix acc = Matrix::Zero(inst->d, inst->d);
    if (inst->loss == RobustLoss::kKarcherMean) {
      for (Eigen::Index i = 0; i < inst->n; ++i) {
        if (pw[i] == 0.0) continue;
        const Matrix xit =
            sym(ctx.y_inv_sqrt *
                inst->spd_samples[static_cast<std::size_t>(i)] *
                ctx.y_inv_sqrt);
        const SymEig xe = sym_eig(xit);
        acc += pw[i] * dlog_spd(xe, vt * xit + xit * vt);
      }
    } else {
      Matrix sp = Matrix::Zero(inst->d, inst->d);
      for (Eigen::Index i = 0; i < inst->n; ++i) {
        const Vector& xi = inst->vec_samples[static_cast<std::size_t>(i)];
        sp += pw[i] * (xi * xi.transpose());
      }
      const Matrix spt = sym(ctx.y_inv_sqrt * sp * ctx.y_inv_sqrt);
      // Covariant derivative of (sum(p) y - S_p)/2 in the rescaled chart.
      acc = 0.25 * (vt * spt + spt * vt);
    }
    return make_tangent(y, sym(ctx.y_sqrt * acc * ctx.y_sqrt));
  };
  p.cross_g_xy_vec = [inst](const Point& x, const Point& y, const Tangent& tv) {
    const SpdContext ctx = spd_context(y.block());
    const Matrix yinv_v_yinv = ctx.y_inv * tv.block() * ctx.y_inv;
    Matrix w(inst->n, 1);
    if (inst->loss == RobustLoss::kKarcherMean) {
      for (Eigen::Index i = 0; i < inst->n; ++i) {
        const Matrix xit =
            sym(ctx.y_inv_sqrt *
                inst->spd_samples[static_cast<std::size_t>(i)] *
                ctx.y_inv_sqrt);
        const Matrix grad_i =
            -2.0 * sym(ctx.y_sqrt * spd_log(xit) * ctx.y_sqrt);
        w(i, 0) = (grad_i.cwiseProduct(yinv_v_yinv)).sum();
      }
    } else {
      for (Eigen::Index i = 0; i < inst->n; ++i) {
        const Vector& xi = inst->vec_samples[static_cast<std::size_t>(i)];
        const Matrix grad_i = 0.5 * (y.block() - xi * xi.transpose());
        w(i, 0) = (grad_i.cwiseProduct(yinv_v_yinv)).sum();
      }
    }
    return egrad_to_rgrad(x, w);
  };

  if (loss == RobustLoss::kGaussianMle) {
    p.lower_closed_form = [inst, lower = inst->lower](const Point& x) {
      const Vector pw = x.block().col(0);
      Matrix sp = Matrix::Zero(inst->d, inst->d);
      for (Eigen::Index i = 0; i < inst->n; ++i) {
        const Vector& xi = inst->vec_samples[static_cast<std::size_t>(i)];
        sp += pw[i] * (xi * xi.transpose());
      }
      if (sym_min_eigenvalue(sp) <= 0) {
        throw DegenerateInput("robust_mle: weighted second moment singular");
      }
      return make_point(lower, sym(sp));
    };
  } else {
    // Karcher-mean reference: safeguarded fixed-point iteration
    // y <- Exp_y(-eta * G_y g) with eta = 0.5, run to gradient norm 1e-10.
    p.lower_closed_form = [inst, weighted_grad_y,
                           lower = inst->lower](const Point& x) {
      const Vector pw = x.block().col(0);
      // Log-Euclidean mean as the starting point.
      Matrix acc = Matrix::Zero(inst->d, inst->d);
      for (Eigen::Index i = 0; i < inst->n; ++i) {
        acc += pw[i] *
               spd_log(inst->spd_samples[static_cast<std::size_t>(i)]);
      }
      Point y = make_point(lower, sym_exp(acc));
      double eta = 0.5;
      double prev = std::numeric_limits<double>::infinity();
      for (int it = 0; it < 20000; ++it) {
        const Tangent grad = make_tangent(y, weighted_grad_y(y.block(), pw));
        const double gn = norm(grad);
        if (gn <= 1e-10) return y;
        if (gn > prev) eta *= 0.5;  // monotone safeguard for wide spreads
        prev = gn;
        y = exp(y, -eta * grad);
      }
      throw DegenerateInput(
          "robust_km: fixed-point oracle did not reach 1e-10");
    };
  }

  BilevelProblem base = p;
  p.exact_hypergradient = [base](const Point& x) {
    return exact_hypergradient_dense(base, x);
  };
  return {std::move(p), inst};
}

// ---------------------------------------------------------------------------
// Min-max saddle

BilevelProblem make_minmax_saddle() {
  BilevelProblem p;
  p.upper = make_euclidean(1);
  p.lower = make_euclidean(1);
  p.f = [](const Point& x, const Point& y) {
    const double xv = x.block()(0, 0), yv = y.block()(0, 0);
    return xv * yv - 0.5 * yv * yv;
  };
  p.grad_f_x = [](const Point& x, const Point& y) {
    Matrix g(1, 1);
    g(0, 0) = y.block()(0, 0);
    return make_tangent(x, std::move(g));
  };
  p.grad_f_y = [](const Point& x, const Point& y) {
    Matrix g(1, 1);
    g(0, 0) = x.block()(0, 0) - y.block()(0, 0);
    return make_tangent(y, std::move(g));
  };
  return p;
}

// ---------------------------------------------------------------------------
// Problem specs

nlohmann::json problem_spec_to_json(const ProblemSpec& spec) {
  nlohmann::json j;
  j["kind"] = spec.kind;
  j["n"] = spec.n;
  j["d"] = spec.d;
  j["r"] = spec.r;
  j["lambda"] = spec.lambda;
  j["noise_sd"] = spec.noise_sd;
  j["seed"] = spec.seed;
  return j;
}

ProblemSpec problem_spec_from_json(const nlohmann::json& j) {
  ProblemSpec spec;
  spec.kind = j.at("kind").get<std::string>();
  spec.n = j.value("n", 0);
  spec.d = j.value("d", 0);
  spec.r = j.value("r", 0);
  spec.lambda = j.value("lambda", 0.0);
  spec.noise_sd = j.value("noise_sd", 0.1);
  spec.seed = j.value("seed", 0ULL);
  return spec;
}

BilevelProblem make_problem(const ProblemSpec& spec) {
  if (spec.kind == "toy_quadratic") {
    return make_toy_quadratic(spec.n, spec.d, spec.seed).first;
  }
  if (spec.kind == "simple_similarity") {
    return make_simple_similarity(spec.n, spec.d, spec.r, spec.lambda,
                                  spec.seed)
        .first;
  }
  if (spec.kind == "shallow_hyperrep") {
    return make_shallow_hyperrep(spec.n, spec.d, spec.r, spec.lambda,
                                 spec.noise_sd, spec.seed)
        .first;
  }
  if (spec.kind == "robust_km") {
    return make_robust(RobustLoss::kKarcherMean, spec.n, spec.d, spec.seed)
        .first;
  }
  if (spec.kind == "robust_mle") {
    return make_robust(RobustLoss::kGaussianMle, spec.n, spec.d, spec.seed)
        .first;
  }
  if (spec.kind == "minmax_saddle") {
    return make_minmax_saddle();
  }
  throw ConfigError("unknown problem kind: " + spec.kind);
}

}  // namespace rbopt
