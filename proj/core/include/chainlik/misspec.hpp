#pragma once

// Least-false analysis: what ML, PL and QL converge to when the data come
// from a transition matrix outside the fitted family.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chainlik/estimate.hpp"
#include "chainlik/likelihood.hpp"
#include "chainlik/model_zoo.hpp"

namespace chainlik {

struct TrueMechanism {
  TransitionMatrix p;
  Vector pi;
  Matrix p2;

  static TrueMechanism from(const TransitionMatrix& p);
};

/// Population tuple frequencies pi_{x0} prod p(x_i, x_{i+1}); they sum to 1.
TupleCounts expected_counts(const TrueMechanism& truth, unsigned order);

/// Limit of n^-1 log-objective at theta. Returns -infinity where the truth
/// puts mass on a cell the model gives probability zero.
double limit_functional(const Method& method, const ParametricModel& model, const TrueMechanism& truth,
                        const Vector& theta);

/// H_PL through 2 H_ML - sum pi_a pi2(a,c) log p2(a,c); PL order 1.
double pl_functional_two_step_form(const ParametricModel& model, const TrueMechanism& truth, const Vector& theta);

/// Kullback-Leibler type distance whose minimizer is the maximizer of the
/// functional. ML: pi-weighted row distances. PL (order 1): weighted
/// distances between the conditionals of the middle state given its
/// neighbours. QL: marginal distance plus (k - 1) times the ML distance.
double kl_distance(const Method& method, const ParametricModel& model, const TrueMechanism& truth,
                   const Vector& theta);

/// Row distances d_a = sum_b pi(a,b) log(pi(a,b) / p(a,b)).
Vector kl_rows(const ParametricModel& model, const TrueMechanism& truth, const Vector& theta);

/// sum_a pi_a log(pi_a / p_a(theta)).
double kl_marginal(const ParametricModel& model, const TrueMechanism& truth, const Vector& theta);

struct LeastFalseResult {
  Method method;
  Vector theta_0;
  double H_at_max = 0.0;
  double kl_at_min = 0.0;
  bool converged = false;
};

/// Maximizes the limit functional with the same optimizer as fit().
LeastFalseResult least_false(const Method& method, std::shared_ptr<const ParametricModel> model,
                             const TrueMechanism& truth, const FitOptions& options = {});

/// Six-parameter Kimura truth with gamma_{1,2} = gamma +- eps and
/// delta_{1,2} = delta +- eps; base is (alpha, beta, gamma, delta).
TrueMechanism kimura6_truth(const Vector& base, double eps);

struct SweepPoint {
  double eps = 0.0;
  Method method;
  Vector theta_0;  ///< empty when the point failed
  double kl_at_min = 0.0;
  std::string error;
};

/// Least-false Kimura4 parameters under kimura6_truth(base, eps) for every
/// grid point and method, ordered by eps then method.
std::vector<SweepPoint> eps_sweep(const std::vector<double>& eps_grid, const Vector& base,
                                  const std::vector<Method>& methods, const FitOptions& options = {});

/// 41 points from -0.10 to 0.10 in steps of 0.005.
std::vector<double> default_eps_grid();

/// (.03, .04, .13, .14); the alternative (.03, .04, .12, .14) is a CLI option.
Vector default_sweep_base();

}  // namespace chainlik
