#pragma once

#include "rbopt/adarhd.hpp"

namespace rbopt {

/// Non-adaptive Riemannian hypergradient descent with fixed step sizes and a
/// fixed lower-level iteration budget; the linear system is solved by
/// conjugate gradient with a fixed tolerance and cap.
struct RHGDConfig {
  int T = 100;
  double eta_x = 0.5;
  double eta_y = 0.5;
  int inner_iters = 50;  // 50 or 20 in the reference configurations
  double cg_tol = 1e-10;
  int cg_cap = 50;
  MapMode map_mode = MapMode::kRetract;
  unsigned long long seed = 0;
  bool record_hypergrad_error = false;
  int hypergrad_error_every = 1;
};

/// Divergence threshold: a run halts with status "diverged" once any value
/// is non-finite or ||Ghat F||^2 exceeds this bound.
inline constexpr double kDivergenceThreshold = 1e12;

/// Runs RHGD. Divergence is recorded in the trace status rather than thrown,
/// so sweep drivers can tabulate failed configurations.
RunTrace run_rhgd(const BilevelProblem& p, const RHGDConfig& cfg,
                  std::optional<Point> x0 = std::nullopt,
                  std::optional<Point> y0 = std::nullopt);

}  // namespace rbopt
