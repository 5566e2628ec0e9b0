#include "rbopt/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rbopt/errors.hpp"

namespace rbopt {

namespace {

double rel_err(double got, double want) {
  return std::abs(got - want) / (1.0 + std::max(std::abs(got), std::abs(want)));
}

}  // namespace

CheckReport check_gradient(const std::function<double(const Point&)>& f,
                           const std::function<Tangent(const Point&)>& grad,
                           const Point& x, int n_dirs, Rng& rng, double h,
                           double threshold) {
  if (n_dirs < 1) throw ConfigError("check_gradient: n_dirs must be >= 1");
  CheckReport report;
  report.check_name = "gradient[" + x.manifold->name() + "]";
  report.samples = n_dirs;
  report.threshold = threshold;
  const Tangent g = grad(x);
  for (int i = 0; i < n_dirs; ++i) {
    const Tangent u = random_tangent(x, rng);
    const double analytic = inner(g, u);
    const double fd = (f(exp(x, h * u)) - f(exp(x, -h * u))) / (2.0 * h);
    report.max_rel_error = std::max(report.max_rel_error, rel_err(analytic, fd));
  }
  report.pass = report.max_rel_error <= threshold;
  return report;
}

std::vector<CheckReport> check_manifold(const ManifoldPtr& m, int n_samples,
                                        unsigned long long seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<CheckReport> reports;

  // exp/log roundtrip: ||log(x, exp(x, u)) - u|| <= 1e-8 (1 + ||u||).
  {
    CheckReport r;
    r.check_name = "roundtrip[" + m->name() + "]";
    r.samples = n_samples;
    r.threshold = 1e-8;
    for (int i = 0; i < n_samples; ++i) {
      const Point x = random_point(m, rng);
      const Tangent u = (0.5 * u01(rng)) * random_tangent(x, rng);
      const Tangent back = log(x, exp(x, u));
      const double err = norm(back - u) / (1.0 + norm(u));
      r.max_rel_error = std::max(r.max_rel_error, err);
    }
    r.pass = r.max_rel_error <= r.threshold;
    reports.push_back(r);
  }

  // Transport isometry, asserted only for geometries with true parallel
  // transport.
  if (m->transport_is_isometric()) {
    CheckReport r;
    r.check_name = "transport_isometry[" + m->name() + "]";
    r.samples = n_samples;
    r.threshold = 1e-10;
    for (int i = 0; i < n_samples; ++i) {
      const Point x = random_point(m, rng);
      const Point y = exp(x, u01(rng) * random_tangent(x, rng));
      const Tangent u = random_tangent(x, rng);
      const Tangent v = random_tangent(x, rng);
      const double before = inner(u, v);
      const double after = inner(transport(y, u), transport(y, v));
      const double err = std::abs(after - before) / (1.0 + std::abs(before));
      r.max_rel_error = std::max(r.max_rel_error, err);
    }
    r.pass = r.max_rel_error <= r.threshold;
    reports.push_back(r);
  }

  // Retraction error scaling: for u scaled by t in {1, 1/2, 1/4} the ratio
  // ||log(x, retract(x, t u)) - t u|| / t^2 stays bounded (first-order
  // agreement with exp); the ratios are reported as metrics.
  {
    CheckReport r;
    r.check_name = "retraction_scaling[" + m->name() + "]";
    r.samples = std::min(n_samples, 10);
    const double scales[3] = {1.0, 0.5, 0.25};
    double worst_growth = 0.0;
    double ratio_max = 0.0;
    double scale_variation_max = 0.0;
    for (int i = 0; i < r.samples; ++i) {
      const Point x = random_point(m, rng);
      const Tangent u = 0.1 * random_tangent(x, rng);
      double sample_min = std::numeric_limits<double>::infinity();
      double sample_max = 0.0;
      double prev_ratio = -1.0;
      for (const double t : scales) {
        const Tangent tu = t * u;
        const double err = norm(log(x, retract(x, tu)) - tu);
        const double ratio = err / (t * t * std::max(1e-300, norm(u) * norm(u)));
        sample_min = std::min(sample_min, ratio);
        sample_max = std::max(sample_max, ratio);
        ratio_max = std::max(ratio_max, ratio);
        if (prev_ratio >= 0.0) {
          // Ratios must not blow up as t decreases.
          worst_growth = std::max(
              worst_growth, (ratio - prev_ratio) / (1.0 + prev_ratio));
        }
        prev_ratio = ratio;
      }
      if (sample_max > 1e-12) {
        scale_variation_max = std::max(
            scale_variation_max, (sample_max - sample_min) / sample_max);
      }
    }
    r.metrics["c_R"] = ratio_max;
    r.metrics["scale_variation_max"] = scale_variation_max;
    r.max_rel_error = std::max(0.0, worst_growth);
    r.threshold = 0.5;
    r.pass = r.max_rel_error <= r.threshold;
    reports.push_back(r);
  }

  // Point invariants preserved by exp and retract.
  {
    CheckReport r;
    r.check_name = "invariants_preserved[" + m->name() + "]";
    r.samples = n_samples;
    r.threshold = 0.0;
    int violations = 0;
    std::string why;
    for (int i = 0; i < n_samples; ++i) {
      const Point x = random_point(m, rng);
      const Tangent u = u01(rng) * random_tangent(x, rng);
      if (!m->check_point(exp(x, u).blocks, &why)) ++violations;
      if (!m->check_point(retract(x, u).blocks, &why)) ++violations;
      if (!m->check_tangent(x.blocks, u.blocks, &why)) ++violations;
    }
    r.max_rel_error = violations;
    r.pass = violations == 0;
    reports.push_back(r);
  }

  // Trigonometric distance bound on nonpositively curved geometries:
  // a^2 <= zeta(tau, c) b^2 + c^2 - 2 <log_xa(xb), log_xa(xc)>.
  const auto tau = m->sectional_curvature_lower_bound();
  if (tau && *tau < 0.0 && m->exp_is_geodesic()) {
    CheckReport r;
    r.check_name = "trig_distance_bound[" + m->name() + "]";
    r.samples = n_samples;
    r.threshold = 1e-8;
    double min_slack = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_samples; ++i) {
      // Triangles with diameter <= 2.
      const Point xa = random_point(m, rng);
      const Tangent ub = u01(rng) * random_tangent(xa, rng);
      const Tangent uc = u01(rng) * random_tangent(xa, rng);
      const Point xb = exp(xa, ub);
      const Point xc = exp(xa, uc);
      const double a = distance(xb, xc);
      const double b = distance(xa, xc);
      const double c = distance(xa, xb);
      const double zeta = trig_zeta(*tau, c);
      const Tangent lb = log(xa, xb);
      const Tangent lc = log(xa, xc);
      const double slack =
          zeta * b * b + c * c - 2.0 * inner(lb, lc) - a * a;
      min_slack = std::min(min_slack, slack);
    }
    r.metrics["min_slack"] = min_slack;
    r.max_rel_error = std::max(0.0, -min_slack);
    r.pass = min_slack >= -r.threshold;
    reports.push_back(r);
  }

  return reports;
}

CheckReport check_adjoint(const BilevelProblem& p, const Point& x,
                          const Point& y, int n_pairs, Rng& rng,
                          double threshold) {
  CheckReport report;
  report.check_name = "adjoint[xy]";
  report.samples = n_pairs;
  report.threshold = threshold;
  for (int i = 0; i < n_pairs; ++i) {
    const Tangent v = random_tangent(y, rng);
    const Tangent u = random_tangent(x, rng);
    const Tangent xy_v = p.cross_g_xy_vec
                             ? p.cross_g_xy_vec(x, y, v)
                             : fd_cross_g_xy_vec(p, x, y, v);
    const Tangent yx_u = fd_cross_g_yx_vec(p, x, y, u);
    const double lhs = inner(xy_v, u);
    const double rhs = inner(v, yx_u);
    report.max_rel_error = std::max(report.max_rel_error, rel_err(lhs, rhs));
  }
  report.pass = report.max_rel_error <= threshold;
  return report;
}

std::vector<CheckReport> check_problem_gradients(const BilevelProblem& p,
                                                 int n_points,
                                                 unsigned long long seed,
                                                 double threshold) {
  Rng rng(seed);
  std::vector<CheckReport> reports;
  struct Entry {
    const char* name;
    bool wrt_x;
    std::function<double(const Point&, const Point&)> value;
    std::function<Tangent(const Point&, const Point&)> grad;
  };
  std::vector<Entry> entries;
  entries.push_back({"grad_f_x", true, p.f, p.grad_f_x});
  entries.push_back({"grad_f_y", false, p.f, p.grad_f_y});
  entries.push_back({"grad_g_y", false, p.g, p.grad_g_y});
  if (p.grad_g_x) entries.push_back({"grad_g_x", true, p.g, p.grad_g_x});

  for (const Entry& e : entries) {
    CheckReport r;
    r.check_name = e.name;
    r.samples = n_points;
    r.threshold = threshold;
    for (int i = 0; i < n_points; ++i) {
      const Point x = random_point(p.upper, rng);
      const Point y = random_point(p.lower, rng);
      const Point& at = e.wrt_x ? x : y;
      const auto f1 = [&](const Point& z) {
        return e.wrt_x ? e.value(z, y) : e.value(x, z);
      };
      const auto g1 = [&](const Point& z) {
        return e.wrt_x ? e.grad(z, y) : e.grad(x, z);
      };
      const CheckReport sub = check_gradient(f1, g1, at, 3, rng, 1e-5, threshold);
      r.max_rel_error = std::max(r.max_rel_error, sub.max_rel_error);
    }
    r.pass = r.max_rel_error <= threshold;
    reports.push_back(std::move(r));
  }
  return reports;
}

std::vector<CheckReport> check_problem_second_order(const BilevelProblem& p,
                                                    int n_points,
                                                    unsigned long long seed,
                                                    double threshold) {
  Rng rng(seed);
  std::vector<CheckReport> reports;

  if (p.hess_g_y_vec) {
    CheckReport r;
    r.check_name = "hess_g_y_vec_vs_fd";
    r.samples = n_points;
    r.threshold = threshold;
    for (int i = 0; i < n_points; ++i) {
      const Point x = random_point(p.upper, rng);
      const Point y = random_point(p.lower, rng);
      const Tangent v = random_tangent(y, rng);
      const Tangent analytic = p.hess_g_y_vec(x, y, v);
      const Tangent fd = fd_hess_g_y_vec(p, x, y, v);
      const double err = norm(analytic - fd) / (1.0 + norm(fd));
      r.max_rel_error = std::max(r.max_rel_error, err);
    }
    r.pass = r.max_rel_error <= threshold;
    reports.push_back(std::move(r));
  }

  if (p.cross_g_xy_vec && p.grad_g_x) {
    CheckReport r;
    r.check_name = "cross_g_xy_vec_vs_fd";
    r.samples = n_points;
    r.threshold = threshold;
    for (int i = 0; i < n_points; ++i) {
      const Point x = random_point(p.upper, rng);
      const Point y = random_point(p.lower, rng);
      const Tangent v = random_tangent(y, rng);
      const Tangent analytic = p.cross_g_xy_vec(x, y, v);
      const Tangent fd = fd_cross_g_xy_vec(p, x, y, v);
      const double err = norm(analytic - fd) / (1.0 + norm(fd));
      r.max_rel_error = std::max(r.max_rel_error, err);
    }
    r.pass = r.max_rel_error <= threshold;
    reports.push_back(std::move(r));
  }

  {
    CheckReport r;
    r.check_name = "adjoint_consistency";
    r.samples = n_points;
    r.threshold = 1e-3;
    for (int i = 0; i < n_points; ++i) {
      const Point x = random_point(p.upper, rng);
      const Point y = random_point(p.lower, rng);
      const CheckReport sub = check_adjoint(p, x, y, 2, rng);
      r.max_rel_error = std::max(r.max_rel_error, sub.max_rel_error);
    }
    r.pass = r.max_rel_error <= r.threshold;
    reports.push_back(std::move(r));
  }
  return reports;
}

}  // namespace rbopt
