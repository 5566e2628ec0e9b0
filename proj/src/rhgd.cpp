#include "rbopt/rhgd.hpp"

#include <chrono>
#include <cmath>

#include "rbopt/errors.hpp"

namespace rbopt {

namespace {

using Clock = std::chrono::steady_clock;

bool finite_blocks(const Blocks& b) {
  for (const auto& m : b) {
    if (!m.allFinite()) return false;
  }
  return true;
}

}  // namespace

RunTrace run_rhgd(const BilevelProblem& p, const RHGDConfig& cfg,
                  std::optional<Point> x0, std::optional<Point> y0) {
  if (cfg.T < 1) throw ConfigError("rhgd: T must be >= 1");
  if (cfg.eta_x <= 0 || cfg.eta_y <= 0) {
    throw ConfigError("rhgd: step sizes must be > 0");
  }
  if (cfg.inner_iters < 0) throw ConfigError("rhgd: inner_iters must be >= 0");

  RunTrace trace;
  Rng rng(cfg.seed);
  Point x = x0 ? *x0 : random_point(p.upper, rng);
  Point y = y0 ? *y0 : random_point(p.lower, rng);

  const auto start = Clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(Clock::now() - start).count();
  };

  for (int t = 0; t < cfg.T; ++t) {
    // Reckless fixed steps can push iterates into numerically degenerate
    // territory (overflowing eigensolves and the like) before coordinates
    // turn non-finite; both count as divergence for the sweep tables.
    try {
      for (int k = 0; k < cfg.inner_iters; ++k) {
        const Tangent grad = p.grad_g_y(x, y);
        if (!finite_blocks(grad.blocks)) {
          trace.status = "diverged";
          return trace;
        }
        const Tangent move = -cfg.eta_y * grad;
        y = (cfg.map_mode == MapMode::kExp) ? exp(y, move) : retract(y, move);
        if (!finite_blocks(y.blocks)) {
          trace.status = "diverged";
          return trace;
        }
      }

      const LinearSolveResult lin =
          tscg_solve(p, x, y, zero_tangent(y), cfg.cg_tol, cfg.cg_cap);
      if (lin.cap_hit) ++trace.cap_hits;

      const Tangent ghat = approx_hypergradient(p, x, y, lin.v);
      const double gsq = inner(ghat, ghat);

      TraceRow row;
      row.t = t;
      row.hypergrad_sq = gsq;
      row.a = 1.0 / cfg.eta_x;  // fixed step recorded for schema uniformity
      row.K_t = cfg.inner_iters;
      row.N_t = lin.iterations;
      row.upper_obj = p.f(x, y);
      row.time_s = elapsed();
      if (cfg.record_hypergrad_error && p.exact_hypergradient &&
          t % cfg.hypergrad_error_every == 0) {
        row.hypergrad_error = norm(ghat - p.exact_hypergradient(x));
      }
      trace.rows.push_back(row);

      if (!std::isfinite(gsq) || gsq > kDivergenceThreshold) {
        trace.status = "diverged";
        return trace;
      }

      const Tangent move = -cfg.eta_x * ghat;
      x = (cfg.map_mode == MapMode::kExp) ? exp(x, move) : retract(x, move);
      if (!finite_blocks(x.blocks)) {
        trace.status = "diverged";
        return trace;
      }
    } catch (const DegenerateInput&) {
      trace.status = "diverged";
      return trace;
    } catch (const IndefinitenessError&) {
      trace.status = "diverged";
      return trace;
    } catch (const DivergenceError&) {
      trace.status = "diverged";
      return trace;
    } catch (const DomainError&) {
      trace.status = "diverged";
      return trace;
    }
  }

  trace.final_x = x;
  trace.final_y = y;
  return trace;
}

}  // namespace rbopt
