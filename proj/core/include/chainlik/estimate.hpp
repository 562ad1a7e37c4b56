#pragma once

// Maximization of ML / PL / QL objectives over a model's domain, and the
// closed-form estimators available for a few families.

#include <optional>
#include <vector>

#include "chainlik/likelihood.hpp"
#include "chainlik/model_zoo.hpp"

namespace chainlik {

struct FitOptions {
  unsigned n_starts = 5;
  double grad_tol = 1e-8;
  double step_tol = 1e-10;
  unsigned max_iter = 500;
  /// Extra start points in the original parameterization, tried after the
  /// built-in ones.
  std::vector<Vector> start_points;
  /// When false, a run where no start converges returns the best attempt with
  /// converged = false instead of throwing NoConvergence.
  bool throw_on_failure = true;

  void validate() const;
};

struct FitResult {
  Vector theta_hat;
  Method method;
  double loglik_at_max = 0.0;
  /// Infinity norm of the theta-gradient divided by the total count.
  double gradient_norm = 0.0;
  bool converged = false;
  unsigned n_starts_used = 0;
  unsigned best_start_index = 0;
  unsigned iterations = 0;
  std::string message;
};

/// Multistart BFGS in the model's unconstrained coordinates. Starts are the
/// image of z = 0, then Halton points in [-2, 2]^dim, then the explicit
/// start points. The best converged start wins: highest objective, ties to the
/// lowest index.
FitResult fit(const Objective& objective, const FitOptions& options = {});

/// Printed closed-form estimators. Throws NoClosedForm for other pairs.
///   SymmetricTwoState  ML, QL: (N01 + N10) / n.   PL (m=1): root of the
///                      conditional-frequency equation.
///   GeneralTwoState    ML: N01 / N0., N10 / N1.
///   Ising1D            ML, QL: log(N00 + N11) / (N01 + N10).  PL (m=1).
///   ReflectingWalk     ML.
///   Saturated          ML: N(a,b) / N(a,.).
FitResult closed_form_fit(const ModelSpec& spec, const Method& method, const TupleCounts& counts);

/// Whether closed_form_fit supports the pair.
bool has_closed_form(const ModelSpec& spec, const Method& method);

}  // namespace chainlik
