#include "chainlik/likelihood.hpp"

#include <cmath>
#include <limits>

#include "chainlik/error.hpp"

namespace chainlik {

unsigned Method::required_count_order() const {
  return kind == Kind::PL ? order + 2 : 2;
}

std::string Method::label() const {
  switch (kind) {
    case Kind::ML: return "ml";
    case Kind::PL: return order == 1 ? "pl" : "pl" + std::to_string(order);
    case Kind::QL: return order == 2 ? "ql" : "ql" + std::to_string(order);
  }
  return "?";
}

void Method::validate() const {
  if (kind == Kind::PL && order < 1) throw Error(Errc::InvalidArgument, "PL order must be >= 1");
  if (kind == Kind::QL && order < 2) throw Error(Errc::InvalidArgument, "QL order must be >= 2");
}

Method parse_method(const std::string& label) {
  auto order_of = [&](std::size_t prefix, unsigned fallback) -> unsigned {
    if (label.size() == prefix) return fallback;
    const std::string digits = label.substr(prefix);
    if (digits.find_first_not_of("0123456789") != std::string::npos || digits.size() > 6) {
      throw Error(Errc::Config, "bad method '" + label + "'");
    }
    return static_cast<unsigned>(std::stoul(digits));
  };
  Method m;
  if (label == "ml") {
    m = Method::ml();
  } else if (label.rfind("pl", 0) == 0) {
    m = Method::pl(order_of(2, 1));
  } else if (label.rfind("ql", 0) == 0) {
    m = Method::ql(order_of(2, 2));
  } else {
    throw Error(Errc::Config, "unknown method '" + label + "' (expected ml, pl[m], ql[k])");
  }
  try {
    m.validate();
  } catch (const Error& e) {
    throw Error(Errc::Config, e.what());
  }
  return m;
}

namespace {

constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

std::shared_ptr<const ParametricModel> borrow(const ParametricModel& model) {
  return std::shared_ptr<const ParametricModel>(&model, [](const ParametricModel*) {});
}

/// sum N log P over cells with positive N; nullopt on a zero-probability hit.
std::optional<double> weighted_log(const Matrix& n, const Matrix& p) {
  double total = 0.0;
  for (Eigen::Index a = 0; a < n.rows(); ++a) {
    for (Eigen::Index b = 0; b < n.cols(); ++b) {
      if (n(a, b) <= 0.0) continue;
      if (!(p(a, b) > 0.0)) return std::nullopt;
      total += n(a, b) * std::log(p(a, b));
    }
  }
  return total;
}

}  // namespace

Objective::Objective(std::shared_ptr<const ParametricModel> model, Method method, const TupleCounts& counts,
                     ZeroPolicy zeros)
    : model_(std::move(model)), method_(method), zeros_(zeros) {
  method_.validate();
  if (counts.num_states() != model_->num_states()) {
    throw Error(Errc::InvalidArgument, "counts have " + std::to_string(counts.num_states()) +
                                           " states, model has " + std::to_string(model_->num_states()));
  }
  const unsigned need = method_.required_count_order();
  if (counts.order() < need) {
    throw Error(Errc::OrderMismatch, method_.label() + " needs counts of order " + std::to_string(need) +
                                         ", got " + std::to_string(counts.order()));
  }
  const TupleCounts reduced = counts.truncate_to(need);
  total_ = reduced.n_effective();
  const auto s = static_cast<Eigen::Index>(model_->num_states());
  if (method_.kind == Method::Kind::PL) {
    pairs_ = Matrix::Zero(s, s);
    for (std::size_t flat = 0; flat < reduced.num_cells(); ++flat) {
      const double c = reduced.cell(flat);
      if (c == 0.0) continue;
      const std::vector<std::size_t> t = reduced.tuple_of(flat);
      for (std::size_t i = 0; i + 1 < t.size(); ++i) {
        pairs_(static_cast<Eigen::Index>(t[i]), static_cast<Eigen::Index>(t[i + 1])) += c;
      }
    }
    ends_ = reduced.end_marginal();
  } else {
    pairs_ = reduced.as_matrix();
    visits_ = pairs_.rowwise().sum();
  }
}

double Objective::value(const Vector& theta) const {
  model_->require_in_domain(theta);
  const Matrix p = model_->transition(theta);
  auto fail = [&]() {
    if (zeros_ == ZeroPolicy::Sentinel) return kMinusInf;
    throw Error(Errc::ZeroProbabilityWithPositiveCount,
                model_->name() + ": positive count in a cell of zero model probability");
  };
  const std::optional<double> base = weighted_log(pairs_, p);
  if (!base) return fail();
  switch (method_.kind) {
    case Method::Kind::ML:
      return *base;
    case Method::Kind::PL: {
      const std::optional<double> ends = weighted_log(ends_, matrix_power(p, method_.order + 1));
      if (!ends) return fail();
      return *base - *ends;
    }
    case Method::Kind::QL: {
      const Vector pi = stationary_distribution(model_->transition_matrix(theta)).pi;
      double marginal = 0.0;
      for (Eigen::Index a = 0; a < pi.size(); ++a) {
        if (visits_(a) <= 0.0) continue;
        if (!(pi(a) > 0.0)) return fail();
        marginal += visits_(a) * std::log(pi(a));
      }
      return marginal + static_cast<double>(method_.order - 1) * *base;
    }
  }
  return kMinusInf;
}

double Objective::value_and_gradient(const Vector& theta, Vector& grad) const {
  const double f = value(theta);
  const auto d = static_cast<Eigen::Index>(model_->dim());
  grad = Vector::Zero(d);
  if (!std::isfinite(f)) return f;
  const TransitionDerivatives td = transition_derivatives(*model_, theta);
  const Matrix& p = td.p;
  const Eigen::Index s = p.rows();

  // sum N(a,b) dP(a,b) / P(a,b)
  auto score_sum = [&](const Matrix& n, const Matrix& prob, const std::vector<Matrix>& dprob) {
    Vector g = Vector::Zero(d);
    for (Eigen::Index a = 0; a < s; ++a) {
      for (Eigen::Index b = 0; b < s; ++b) {
        if (n(a, b) <= 0.0) continue;
        const double w = n(a, b) / prob(a, b);
        for (Eigen::Index j = 0; j < d; ++j) g(j) += w * dprob[static_cast<std::size_t>(j)](a, b);
      }
    }
    return g;
  };

  grad = score_sum(pairs_, p, td.dp);
  if (method_.kind == Method::Kind::PL) {
    const unsigned k = method_.order + 1;
    std::vector<Matrix> powers(k + 1);
    powers[0] = Matrix::Identity(s, s);
    for (unsigned i = 1; i <= k; ++i) powers[i] = powers[i - 1] * p;
    std::vector<Matrix> dpk(static_cast<std::size_t>(d), Matrix::Zero(s, s));
    for (Eigen::Index j = 0; j < d; ++j) {
      for (unsigned i = 0; i < k; ++i) {
        dpk[static_cast<std::size_t>(j)] += powers[i] * td.dp[static_cast<std::size_t>(j)] * powers[k - 1 - i];
      }
    }
    grad -= score_sum(ends_, powers[k], dpk);
  } else if (method_.kind == Method::Kind::QL) {
    grad *= static_cast<double>(method_.order - 1);
    const StationaryScores ss = stationary_scores(*model_, theta, derivatives_);
    grad += ss.v.transpose() * visits_;
  }
  return f;
}

Vector Objective::gradient(const Vector& theta) const {
  Vector g;
  value_and_gradient(theta, g);
  return g;
}

Vector gradient(const Objective& objective, const Vector& theta) { return objective.gradient(theta); }

double loglik_ml(const ParametricModel& model, const Vector& theta, const TupleCounts& counts, ZeroPolicy zeros) {
  return Objective(borrow(model), Method::ml(), counts, zeros).value(theta);
}

double loglik_pl(const ParametricModel& model, const Vector& theta, const TupleCounts& counts, unsigned m,
                 ZeroPolicy zeros) {
  return Objective(borrow(model), Method::pl(m), counts, zeros).value(theta);
}

double loglik_ql(const ParametricModel& model, const Vector& theta, const TupleCounts& counts, unsigned k,
                 ZeroPolicy zeros) {
  return Objective(borrow(model), Method::ql(k), counts, zeros).value(theta);
}

}  // namespace chainlik
