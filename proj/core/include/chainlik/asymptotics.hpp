#pragma once

// Limit distributions of sqrt(n)(theta_hat - theta0) under the model for
// ML, QL of order k and PL of order 1, the count covariance structures they
// rest on, delta-method variances and Monte Carlo calibration.

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "chainlik/estimate.hpp"
#include "chainlik/likelihood.hpp"
#include "chainlik/model_zoo.hpp"

namespace chainlik {

struct AsymptoticOptions {
  Derivatives derivatives = Derivatives::Auto;
  /// Periodic chains have no convergent gamma series; CesaroLimit accepts
  /// them by using the fundamental-matrix value.
  Periodicity periodicity = Periodicity::Reject;
};

struct MLIngredients {
  Matrix J;
  std::vector<Matrix> J_a;  ///< per state
};

struct QLIngredients {
  unsigned k = 2;
  Matrix H, G, L;
  std::vector<Vector> kappa;  ///< kappa_b = sum_c gamma(b,c) v_c
  Matrix J_k, K_k;
  bool periodic = false;
};

struct PLIngredients {
  std::vector<Vector> w;  ///< w(a,c) = d log p2(a,c), row-major; zero where p2 = 0
  Matrix M, Q, R;
  Matrix J0, K0;
};

struct AvarResult {
  Method method;
  Matrix sigma;  ///< limit covariance of sqrt(n)(theta_hat - theta0)
  Vector sds;
  std::variant<MLIngredients, QLIngredients, PLIngredients> ingredients;
};

MLIngredients info_J(const ParametricModel& model, const Vector& theta, const AsymptoticOptions& opts = {});

QLIngredients ql_ingredients(const ParametricModel& model, const Vector& theta, unsigned k,
                             const AsymptoticOptions& opts = {});

PLIngredients pl_ingredients(const ParametricModel& model, const Vector& theta,
                             const AsymptoticOptions& opts = {});

/// Sigma = J^-1, J_k^-1 K_k J_k^-1 or J0^-1 K0 J0^-1. PL is available for
/// order 1 only; other orders throw InvalidArgument.
AvarResult avar(const ParametricModel& model, const Vector& theta, const Method& method,
                const AsymptoticOptions& opts = {});

/// Inverse of a symmetric information matrix through an LDLT solve; throws
/// SingularInformation when the eigenvalue condition number exceeds 1e12 or
/// the matrix is not positive definite.
Matrix invert_information(const Matrix& information);

/// Literal quadruple sum for Q, O(S^4 p^2); kept for cross-checks.
Matrix pl_q_literal(const ParametricModel& model, const Vector& theta, const AsymptoticOptions& opts = {});

// ---------------------------------------------------------------------------
// Count covariances. Limits of cov(sqrt(n) N / n) for pair and triplet
// counters, indexed row-major: pair (a,b) -> a*S + b, triplet (a,b,c) ->
// (a*S + b)*S + c.

Matrix pair_cov(const TransitionMatrix& p, Periodicity periodicity = Periodicity::Reject);
Matrix triplet_cov(const TransitionMatrix& p, Periodicity periodicity = Periodicity::Reject);
/// cov(Z(a,.,c), Z(d,.,f)) evaluated from its own closed expression.
Matrix marginal_triplet_cov(const TransitionMatrix& p, Periodicity periodicity = Periodicity::Reject);
/// Same quantity by summing triplet_cov over the middle indices.
Matrix marginal_triplet_cov_from_triplets(const Matrix& triplet, std::size_t num_states);
/// Sum triplet_cov over the last indices, giving the pair covariance.
Matrix pair_cov_from_triplets(const Matrix& triplet, std::size_t num_states);

// ---------------------------------------------------------------------------
// Delta method

struct FocusParameter {
  std::string name;
  std::function<double(const Vector&)> psi;
  /// Analytic gradient; empty means central differences of psi.
  std::function<Vector(const Vector&)> gradient;
};

/// Central-difference gradient of psi with steps fd_step(theta_j).
Vector fd_gradient(const std::function<double(const Vector&)>& psi, const Vector& theta);

/// Gradient of the focus parameter (analytic when provided).
Vector focus_gradient(const FocusParameter& focus, const Vector& theta);

/// tau^2 = grad^T Sigma grad.
double delta_method(const AvarResult& avar, const FocusParameter& focus, const Vector& theta);

/// Delta = -log|P(theta)| / 4. The gradient assembles -(1/4) tr(P^-1 dP/dtheta_j);
/// throws SingularP when |P| <= 0.
FocusParameter asynchronous_distance(std::shared_ptr<const ParametricModel> model);

/// The four coefficients c_1..c_4 of the Kimura4 distance gradient built
/// from entries of P^-1: dDelta/dtheta = -c / 4.
Vector kimura4_distance_coefficients(const Vector& theta);

/// Focus parameters of the Kimura4 model: p(1), p(2), p(1->2), p(2->1),
/// gamma/delta and the two mean times to a type change.
std::vector<FocusParameter> kimura4_focus_parameters();

// ---------------------------------------------------------------------------
// Monte Carlo

struct McOptions {
  FitOptions fit;
  /// Add theta_true to the multistart set.
  bool start_at_truth = true;
  double max_failure_rate = 0.05;
};

struct McSummary {
  Method method;
  std::size_t n = 0;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  Vector mean;
  Vector sd_scaled;  ///< sqrt(n) * empirical standard deviation
  std::size_t n_ok = 0;
  std::size_t n_failed = 0;
  std::vector<std::string> failures;  ///< "rep <i>: <reason>"
  std::vector<Vector> estimates;      ///< converged estimates in replication order
};

/// Simulates `reps` stationary chains of n transitions with per-replication
/// seeds derive_seed(seed, r), fits each, and summarizes. Throws
/// TooManyFailures above the allowed non-convergence rate.
McSummary mc_study(std::shared_ptr<const ParametricModel> model, const Vector& theta_true,
                   const Method& method, std::size_t n, std::size_t reps, std::uint64_t seed,
                   const McOptions& options = {});

}  // namespace chainlik
