#pragma once

// Parametric transition models theta -> P(theta) with first and second
// derivatives of the cell probabilities and the stationary log-derivatives.

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "chainlik/chain_core.hpp"

namespace chainlik {

/// a . theta < bound
struct LinearConstraint {
  Vector a;
  double bound = 0.0;
};

/// Open box plus strict linear inequalities. A point is in the domain when
/// it satisfies both and every structurally supported cell of P is positive.
struct Domain {
  Vector lower;
  Vector upper;
  std::vector<LinearConstraint> linear;
};

class ParametricModel {
 public:
  virtual ~ParametricModel() = default;

  virtual std::string name() const = 0;
  const StateSpace& states() const noexcept { return states_; }
  std::size_t num_states() const noexcept { return states_.size(); }
  std::size_t dim() const noexcept { return names_.size(); }
  const std::vector<std::string>& theta_names() const noexcept { return names_; }
  const Domain& domain() const noexcept { return domain_; }

  bool in_domain(const Vector& theta) const;
  /// Throws OutOfDomain with the offending coordinate or constraint.
  void require_in_domain(const Vector& theta) const;

  /// Raw P(theta); no domain check.
  virtual Matrix transition(const Vector& theta) const = 0;
  /// Validated P(theta); throws OutOfDomain outside the domain.
  TransitionMatrix transition_matrix(const Vector& theta) const;

  /// Cells with p(a,b) identically zero over the whole domain (row-major S*S).
  virtual std::vector<char> structural_zeros() const;

  /// dP/dtheta_j (dim matrices) and d2P/dtheta_j dtheta_k (dim*dim,
  /// index j*dim+k). Only called when has_analytic_transition() is true.
  virtual bool has_analytic_transition() const { return false; }
  virtual void transition_derivatives(const Vector& theta, std::vector<Matrix>& dp,
                                      std::vector<Matrix>& d2p) const;

  /// S x dim matrix whose row a is v_a = d log p_a / d theta.
  virtual bool has_analytic_stationary_scores() const { return false; }
  virtual Matrix stationary_scores(const Vector& theta) const;

  /// Family-specific equilibrium formula, when one exists.
  virtual std::optional<Vector> stationary_closed_form(const Vector& theta) const;

  /// Smooth bijection between the domain and R^dim used by the optimizer.
  /// The default maps each box coordinate by logit (or log / identity for
  /// half-open and unbounded coordinates) and ignores linear constraints;
  /// families with joint constraints override both directions.
  virtual Vector to_unconstrained(const Vector& theta) const;
  virtual Vector from_unconstrained(const Vector& z) const;

 protected:
  ParametricModel(StateSpace states, std::vector<std::string> names, Domain domain);

 private:
  StateSpace states_;
  std::vector<std::string> names_;
  Domain domain_;
};

enum class Family {
  SymmetricTwoState,
  GeneralTwoState,
  Equicorrelation,
  ThreeState,
  Ising1D,
  ReflectingWalk,
  Kimura4,
  Kimura6,
  Saturated,
};

std::string_view family_name(Family family) noexcept;
std::optional<Family> parse_family(std::string_view name);

struct ModelSpec {
  Family family = Family::SymmetricTwoState;
  /// Equicorrelation, ReflectingWalk and Saturated; ignored elsewhere.
  std::size_t num_states = 0;
  /// Equicorrelation only: the fixed equilibrium p. Absent means p is
  /// estimated through the parameters p_1..p_{S-1}.
  std::optional<Vector> known_p;
};

/// Parameter orders:
///   SymmetricTwoState  theta
///   GeneralTwoState    alpha, beta
///   Equicorrelation    rho [, p1, ..., p_{S-1}]
///   ThreeState         alpha, beta
///   Ising1D            beta
///   ReflectingWalk     p
///   Kimura4            alpha, beta, gamma, delta
///   Kimura6            alpha, beta, gamma1, gamma2, delta1, delta2
///   Saturated          p(a,b) for b < S-1, row-major
std::shared_ptr<const ParametricModel> make_model(const ModelSpec& spec);

enum class Derivatives {
  Auto,              ///< analytic where the family provides it
  FiniteDifference,  ///< always central differences
};

struct TransitionDerivatives {
  Matrix p;
  std::vector<Matrix> dp;
  std::vector<Matrix> d2p;  ///< index j*dim+k
};

TransitionDerivatives transition_derivatives(const ParametricModel& model, const Vector& theta,
                                             Derivatives mode = Derivatives::Auto);

/// u(a,b) = d log p(a,b), i(a,b) = d2 log p(a,b), stored row-major by cell.
/// Structural-zero cells carry zero vectors and are flagged.
struct CellScores {
  TransitionMatrix p;
  std::vector<Vector> u;
  std::vector<Matrix> i;
  std::vector<char> structural;

  const Vector& u_at(std::size_t a, std::size_t b) const { return u[a * p.size() + b]; }
  const Matrix& i_at(std::size_t a, std::size_t b) const { return i[a * p.size() + b]; }
};

CellScores transition_and_scores(const ParametricModel& model, const Vector& theta,
                                 Derivatives mode = Derivatives::Auto);

struct StationaryScores {
  Vector pi;
  Matrix v;  ///< S x dim, row a is v_a
};

StationaryScores stationary_scores(const ParametricModel& model, const Vector& theta,
                                   Derivatives mode = Derivatives::Auto);

/// Central-difference step cbrt(eps) * max(1, |x|).
double fd_step(double x) noexcept;

}  // namespace chainlik
