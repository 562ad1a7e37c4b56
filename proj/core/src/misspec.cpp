#include "chainlik/misspec.hpp"

#include <cmath>
#include <limits>

#include "chainlik/error.hpp"

namespace chainlik {

namespace {

std::shared_ptr<const ParametricModel> borrow(const ParametricModel& model) {
  return std::shared_ptr<const ParametricModel>(&model, [](const ParametricModel*) {});
}

constexpr double kInf = std::numeric_limits<double>::infinity();

/// sum_i q_i log(q_i / m_i) over q_i > 0; +infinity when some m_i = 0.
double kl_term(double q, double m) {
  if (q <= 0.0) return 0.0;
  if (m <= 0.0) return kInf;
  return q * std::log(q / m);
}

void require_same_size(const ParametricModel& model, const TrueMechanism& truth) {
  if (static_cast<Eigen::Index>(model.num_states()) != truth.p.matrix().rows()) {
    throw Error(Errc::InvalidArgument, "truth and model have different state spaces");
  }
}

}  // namespace

TrueMechanism TrueMechanism::from(const TransitionMatrix& p) {
  TrueMechanism t{p, stationary_distribution(p).pi, {}};
  t.p2 = p.matrix() * p.matrix();
  return t;
}

TupleCounts expected_counts(const TrueMechanism& truth, unsigned order) {
  if (order < 1) throw Error(Errc::InvalidArgument, "tuple order must be >= 1");
  const auto s = static_cast<std::size_t>(truth.pi.size());
  TupleCounts out(s, order);
  const Matrix& p = truth.p.matrix();
  for (std::size_t flat = 0; flat < out.num_cells(); ++flat) {
    const std::vector<std::size_t> tuple = out.tuple_of(flat);
    double v = truth.pi(static_cast<Eigen::Index>(tuple[0]));
    for (std::size_t i = 1; i < tuple.size() && v > 0.0; ++i) {
      v *= p(static_cast<Eigen::Index>(tuple[i - 1]), static_cast<Eigen::Index>(tuple[i]));
    }
    out.cell(flat) = v;
  }
  return out;
}

double limit_functional(const Method& method, const ParametricModel& model, const TrueMechanism& truth,
                        const Vector& theta) {
  method.validate();
  require_same_size(model, truth);
  model.require_in_domain(theta);
  const Objective objective(borrow(model), method, expected_counts(truth, method.required_count_order()),
                            ZeroPolicy::Sentinel);
  return objective.value(theta);
}

double pl_functional_two_step_form(const ParametricModel& model, const TrueMechanism& truth, const Vector& theta) {
  const double h_ml = limit_functional(Method::ml(), model, truth, theta);
  const Matrix p = model.transition_matrix(theta).matrix();
  const Matrix p2 = p * p;
  double two_step = 0.0;
  for (Eigen::Index a = 0; a < p.rows(); ++a) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) {
      const double w = truth.pi(a) * truth.p2(a, c);
      if (w == 0.0) continue;
      if (p2(a, c) <= 0.0) return -kInf;
      two_step += w * std::log(p2(a, c));
    }
  }
  return 2.0 * h_ml - two_step;
}

Vector kl_rows(const ParametricModel& model, const TrueMechanism& truth, const Vector& theta) {
  require_same_size(model, truth);
  const Matrix p = model.transition_matrix(theta).matrix();
  const Matrix& t = truth.p.matrix();
  Vector d = Vector::Zero(p.rows());
  for (Eigen::Index a = 0; a < p.rows(); ++a) {
    for (Eigen::Index b = 0; b < p.cols(); ++b) d(a) += kl_term(t(a, b), p(a, b));
  }
  return d;
}

double kl_marginal(const ParametricModel& model, const TrueMechanism& truth, const Vector& theta) {
  require_same_size(model, truth);
  const Vector pi = stationary_distribution(model.transition_matrix(theta)).pi;
  double d = 0.0;
  for (Eigen::Index a = 0; a < pi.size(); ++a) d += kl_term(truth.pi(a), pi(a));
  return d;
}

double kl_distance(const Method& method, const ParametricModel& model, const TrueMechanism& truth,
                   const Vector& theta) {
  method.validate();
  model.require_in_domain(theta);
  switch (method.kind) {
    case Method::Kind::ML:
      return truth.pi.dot(kl_rows(model, truth, theta));
    case Method::Kind::QL:
      return kl_marginal(model, truth, theta) +
             static_cast<double>(method.order - 1) * truth.pi.dot(kl_rows(model, truth, theta));
    case Method::Kind::PL: {
      if (method.order != 1) throw Error(Errc::InvalidArgument, "PL distance is available for order 1 only");
      require_same_size(model, truth);
      const Matrix p = model.transition_matrix(theta).matrix();
      const Matrix p2 = p * p;
      const Matrix& t = truth.p.matrix();
      const Eigen::Index s = p.rows();
      double d = 0.0;
      for (Eigen::Index a = 0; a < s; ++a) {
        for (Eigen::Index c = 0; c < s; ++c) {
          const double weight = truth.pi(a) * truth.p2(a, c);
          if (weight == 0.0) continue;
          double inner = 0.0;
          for (Eigen::Index b = 0; b < s; ++b) {
            const double q = t(a, b) * t(b, c) / truth.p2(a, c);
            const double m = p2(a, c) > 0.0 ? p(a, b) * p(b, c) / p2(a, c) : 0.0;
            inner += kl_term(q, m);
          }
          d += weight * inner;
        }
      }
      return d;
    }
  }
  return kInf;
}

LeastFalseResult least_false(const Method& method, std::shared_ptr<const ParametricModel> model,
                             const TrueMechanism& truth, const FitOptions& options) {
  method.validate();
  require_same_size(*model, truth);
  const Objective objective(model, method, expected_counts(truth, method.required_count_order()),
                            ZeroPolicy::Sentinel);
  const FitResult f = fit(objective, options);
  LeastFalseResult out;
  out.method = method;
  out.theta_0 = f.theta_hat;
  out.H_at_max = f.loglik_at_max;
  out.converged = f.converged;
  const bool has_distance = !(method.kind == Method::Kind::PL && method.order != 1);
  out.kl_at_min = has_distance ? kl_distance(method, *model, truth, f.theta_hat)
                               : std::numeric_limits<double>::quiet_NaN();
  return out;
}

TrueMechanism kimura6_truth(const Vector& base, double eps) {
  if (base.size() != 4) throw Error(Errc::InvalidArgument, "sweep base must be (alpha, beta, gamma, delta)");
  static const auto k6 = make_model({Family::Kimura6, 0, std::nullopt});
  Vector theta(6);
  theta << base(0), base(1), base(2) + eps, base(2) - eps, base(3) + eps, base(3) - eps;
  k6->require_in_domain(theta);
  return TrueMechanism::from(k6->transition_matrix(theta));
}

std::vector<SweepPoint> eps_sweep(const std::vector<double>& eps_grid, const Vector& base,
                                  const std::vector<Method>& methods, const FitOptions& options) {
  const auto k4 = make_model({Family::Kimura4, 0, std::nullopt});
  std::vector<SweepPoint> out;
  for (const double eps : eps_grid) {
    std::optional<TrueMechanism> truth;
    std::string truth_error;
    try {
      truth = kimura6_truth(base, eps);
    } catch (const Error& e) {
      truth_error = e.what();
    }
    for (const Method& m : methods) {
      SweepPoint pt;
      pt.eps = eps;
      pt.method = m;
      if (!truth) {
        pt.error = truth_error;
      } else {
        try {
          FitOptions o = options;
          o.start_points.push_back(base);
          const LeastFalseResult r = least_false(m, k4, *truth, o);
          pt.theta_0 = r.theta_0;
          pt.kl_at_min = r.kl_at_min;
        } catch (const Error& e) {
          pt.error = e.what();
        }
      }
      out.push_back(std::move(pt));
    }
  }
  return out;
}

std::vector<double> default_eps_grid() {
  std::vector<double> grid;
  for (int i = -20; i <= 20; ++i) grid.push_back(0.005 * i);
  return grid;
}

Vector default_sweep_base() {
  Vector b(4);
  b << 0.03, 0.04, 0.13, 0.14;
  return b;
}

}  // namespace chainlik
