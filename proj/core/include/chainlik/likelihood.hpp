#pragma once

// Log-likelihood (ML), log pseudo-likelihood of order m (PL) and log
// composite likelihood of order k (QL), with exact gradients.

#include <memory>
#include <string>

#include "chainlik/chain_core.hpp"
#include "chainlik/model_zoo.hpp"

namespace chainlik {

struct Method {
  enum class Kind { ML, PL, QL };
  Kind kind = Kind::ML;
  /// PL order m >= 1 or QL order k >= 2; unused for ML.
  unsigned order = 0;

  static Method ml() { return {Kind::ML, 0}; }
  static Method pl(unsigned m = 1) { return {Kind::PL, m}; }
  static Method ql(unsigned k = 2) { return {Kind::QL, k}; }

  /// Tuple order the counts must have: 2 for ML and QL, m + 2 for PL.
  unsigned required_count_order() const;
  /// "ml", "pl", "pl2", "ql", "ql3", ...
  std::string label() const;
  void validate() const;

  bool operator==(const Method&) const = default;
};

/// Parses the labels produced by Method::label (also "pl1", "ql2").
Method parse_method(const std::string& label);

/// Behaviour when a cell with positive count has zero model probability.
enum class ZeroPolicy {
  Strict,    ///< throw ZeroProbabilityWithPositiveCount
  Sentinel,  ///< return -infinity
};

/// sum_{a,b} N(a,b) log p(a,b). Higher-order counts are reduced to pairs by
/// marginalizing trailing axes.
double loglik_ml(const ParametricModel& model, const Vector& theta, const TupleCounts& counts,
                 ZeroPolicy zeros = ZeroPolicy::Strict);

/// sum over (m+2)-tuples of N * log{ prod of the m+1 one-step factors /
/// p^(m+1)(first, last) }. Counts of order above m + 2 are marginalized.
double loglik_pl(const ParametricModel& model, const Vector& theta, const TupleCounts& counts,
                 unsigned m = 1, ZeroPolicy zeros = ZeroPolicy::Strict);

/// sum_a N(a,.) log p_a + (k - 1) sum_{a,b} N(a,b) log p(a,b), with N(a,.)
/// the row marginal of the pair counts.
double loglik_ql(const ParametricModel& model, const Vector& theta, const TupleCounts& counts,
                 unsigned k = 2, ZeroPolicy zeros = ZeroPolicy::Strict);

/// A method bound to a model and a data set. The counts are reduced once at
/// construction to the sufficient arrays each method needs.
class Objective {
 public:
  Objective(std::shared_ptr<const ParametricModel> model, Method method, const TupleCounts& counts,
            ZeroPolicy zeros = ZeroPolicy::Strict);

  const ParametricModel& model() const noexcept { return *model_; }
  const std::shared_ptr<const ParametricModel>& model_ptr() const noexcept { return model_; }
  const Method& method() const noexcept { return method_; }
  ZeroPolicy zero_policy() const noexcept { return zeros_; }
  /// Total count of the reduced counts (windows of the data).
  double total() const noexcept { return total_; }

  double value(const Vector& theta) const;
  Vector gradient(const Vector& theta) const;
  /// Value and gradient in one pass; the gradient is left undefined when the
  /// value is -infinity.
  double value_and_gradient(const Vector& theta, Vector& grad) const;

  /// Stationary-score mode used by the QL gradient.
  void set_derivatives(Derivatives mode) noexcept { derivatives_ = mode; }

 private:
  std::shared_ptr<const ParametricModel> model_;
  Method method_;
  ZeroPolicy zeros_;
  Derivatives derivatives_ = Derivatives::Auto;
  double total_ = 0.0;
  Matrix pairs_;    ///< ML/QL: N(a,b). PL: one-step weight sum_t N(x_t = a, x_{t+1} = b).
  Matrix ends_;     ///< PL: N(a, ., ..., c).
  Vector visits_;   ///< QL: N(a, .).
};

Vector gradient(const Objective& objective, const Vector& theta);

}  // namespace chainlik
