#pragma once

// Unconstrained quasi-Newton maximizer (BFGS with a strong-Wolfe line search).

#include <functional>
#include <string>

#include "chainlik/chain_core.hpp"

namespace chainlik {

struct BfgsOptions {
  double grad_tol = 1e-8;
  double step_tol = 1e-10;
  unsigned max_iter = 500;
  /// The run is abandoned as divergent once any |z_j| exceeds this.
  double z_limit = 30.0;
};

/// Evaluates the objective at z, writes its gradient, and stores in
/// `stationarity` the quantity compared against grad_tol. Returns -inf for
/// points where the objective is undefined.
using ValueAndGradient = std::function<double(const Vector& z, Vector& grad, double& stationarity)>;

struct BfgsResult {
  Vector z;
  double value = 0.0;
  Vector grad;
  double stationarity = 0.0;
  double last_step = 0.0;
  unsigned iterations = 0;
  bool converged = false;
  bool diverged = false;
  std::string message;
};

BfgsResult maximize_bfgs(const ValueAndGradient& f, const Vector& z0, const BfgsOptions& options);

}  // namespace chainlik
