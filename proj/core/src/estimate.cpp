#include "chainlik/estimate.hpp"

#include <cmath>
#include <limits>

#include "chainlik/error.hpp"
#include "chainlik/optimizer.hpp"

namespace chainlik {

void FitOptions::validate() const {
  if (n_starts < 1) throw Error(Errc::Config, "n_starts must be >= 1");
  if (!(grad_tol > 0.0) || !(step_tol > 0.0)) throw Error(Errc::Config, "tolerances must be positive");
  if (max_iter < 1) throw Error(Errc::Config, "max_iter must be >= 1");
}

namespace {

double halton(unsigned index, unsigned base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

unsigned nth_prime(unsigned n) {
  static const unsigned primes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41,
                                    43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101};
  return primes[n % (sizeof(primes) / sizeof(primes[0]))];
}

/// Objective per observation in unconstrained coordinates.
class Scaled {
 public:
  explicit Scaled(const Objective& objective)
      : obj_(objective), model_(objective.model()), scale_(1.0 / std::max(1.0, objective.total())) {}

  double operator()(const Vector& z, Vector& gz, double& stationarity) const {
    const Vector theta = model_.from_unconstrained(z);
    gz = Vector::Zero(z.size());
    stationarity = std::numeric_limits<double>::infinity();
    if (!theta.allFinite() || !model_.in_domain(theta)) return -std::numeric_limits<double>::infinity();
    Vector gtheta;
    double f;
    try {
      f = obj_.value_and_gradient(theta, gtheta);
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    }
    if (!std::isfinite(f)) return f;
    gtheta *= scale_;
    stationarity = gtheta.lpNorm<Eigen::Infinity>();
    gz = jacobian(z).transpose() * gtheta;
    return f * scale_;
  }

  /// d theta / d z by central differences of the (cheap, smooth) map.
  Matrix jacobian(const Vector& z) const {
    const Eigen::Index d = z.size();
    Matrix jac(d, d);
    for (Eigen::Index k = 0; k < d; ++k) {
      const double h = 1e-6 * std::max(1.0, std::abs(z(k)));
      Vector plus = z, minus = z;
      plus(k) += h;
      minus(k) -= h;
      jac.col(k) = (model_.from_unconstrained(plus) - model_.from_unconstrained(minus)) / (2.0 * h);
    }
    return jac;
  }

  double scale() const noexcept { return scale_; }

 private:
  const Objective& obj_;
  const ParametricModel& model_;
  double scale_;
};

/// True when some parameter leaves the objective exactly or numerically flat
/// at theta (zero curvature per observation along its axis).
bool flat_direction(const Objective& objective, const Vector& theta, double scale) {
  const ParametricModel& model = objective.model();
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    double h = 1e-5 * std::max(1.0, std::abs(theta(j)));
    Vector plus = theta, minus = theta;
    for (int i = 0; i < 40; ++i) {
      plus = theta;
      minus = theta;
      plus(j) += h;
      minus(j) -= h;
      if (model.in_domain(plus) && model.in_domain(minus)) break;
      h *= 0.5;
    }
    try {
      const double curvature =
          (objective.gradient(plus)(j) - objective.gradient(minus)(j)) * scale / (2.0 * h);
      if (!(std::abs(curvature) > 1e-12)) return true;
    } catch (const Error&) {
      return false;
    }
  }
  return false;
}

}  // namespace

FitResult fit(const Objective& objective, const FitOptions& options) {
  options.validate();
  const ParametricModel& model = objective.model();
  if (!(objective.total() > 0.0)) throw Error(Errc::DataDegenerate, "no counts to fit");
  const auto d = static_cast<Eigen::Index>(model.dim());

  std::vector<Vector> starts;
  starts.push_back(Vector::Zero(d));
  for (unsigned i = 1; i < options.n_starts; ++i) {
    Vector z(d);
    for (Eigen::Index j = 0; j < d; ++j) z(j) = 4.0 * halton(i, nth_prime(static_cast<unsigned>(j))) - 2.0;
    starts.push_back(z);
  }
  for (const Vector& theta : options.start_points) {
    if (!model.in_domain(theta)) {
      throw Error(Errc::Config, "explicit start point lies outside the model domain");
    }
    starts.push_back(model.to_unconstrained(theta));
  }

  const Scaled scaled(objective);
  BfgsOptions bopts;
  bopts.grad_tol = options.grad_tol;
  bopts.step_tol = options.step_tol;
  bopts.max_iter = options.max_iter;

  std::vector<BfgsResult> runs;
  runs.reserve(starts.size());
  for (const Vector& z0 : starts) runs.push_back(maximize_bfgs(scaled, z0, bopts));

  auto better = [](const BfgsResult& a, const BfgsResult& b) {
    const double tol = 1e-12 * (1.0 + std::abs(b.value));
    return a.value > b.value + tol;
  };
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    if (!runs[i].converged) continue;
    if (!best || better(runs[i], runs[*best])) best = i;
  }

  FitResult result;
  result.method = objective.method();
  result.n_starts_used = static_cast<unsigned>(runs.size());
  if (!best) {
    bool all_diverged = true;
    std::optional<std::size_t> fallback;
    for (std::size_t i = 0; i < runs.size(); ++i) {
      all_diverged = all_diverged && runs[i].diverged;
      if (std::isfinite(runs[i].value) && (!fallback || better(runs[i], runs[*fallback]))) fallback = i;
    }
    if (all_diverged) {
      throw Error(Errc::DataDegenerate,
                  "every start ran to the domain boundary; the data do not identify an interior maximum");
    }
    if (options.throw_on_failure || !fallback) {
      std::string why = runs.empty() ? "" : runs.front().message;
      throw Error(Errc::NoConvergence, "no start converged (first start: " + why + ")");
    }
    best = fallback;
  }
  const BfgsResult& r = runs[*best];
  result.theta_hat = model.from_unconstrained(r.z);
  result.loglik_at_max = r.value / scaled.scale();
  result.gradient_norm = r.stationarity;
  result.converged = r.converged;
  result.best_start_index = static_cast<unsigned>(*best);
  result.iterations = r.iterations;
  result.message = r.message;
  if (result.converged && flat_direction(objective, result.theta_hat, scaled.scale())) {
    throw Error(Errc::DataDegenerate, "objective is flat in some parameter at the maximum");
  }
  return result;
}

// ---------------------------------------------------------------------------
// Closed forms

bool has_closed_form(const ModelSpec& spec, const Method& method) {
  using K = Method::Kind;
  const bool pl1 = method.kind == K::PL && method.order == 1;
  switch (spec.family) {
    case Family::SymmetricTwoState:
    case Family::Ising1D:
      return method.kind == K::ML || method.kind == K::QL || pl1;
    case Family::GeneralTwoState:
    case Family::ReflectingWalk:
    case Family::Saturated:
      return method.kind == K::ML;
    default:
      return false;
  }
}

namespace {

double ratio(double num, double den, const char* what) {
  if (!(den > 0.0) || !(num > 0.0) || !(num < den) || !std::isfinite(num / den)) {
    throw Error(Errc::DataDegenerate, std::string("closed form for ") + what + " is on the boundary");
  }
  return num / den;
}

}  // namespace

FitResult closed_form_fit(const ModelSpec& spec, const Method& method, const TupleCounts& counts) {
  if (!has_closed_form(spec, method)) {
    throw Error(Errc::NoClosedForm, std::string(family_name(spec.family)) + " has no closed form for " +
                                         method.label());
  }
  const auto model = make_model(spec);
  if (counts.order() < method.required_count_order()) {
    throw Error(Errc::OrderMismatch, "closed form for " + method.label() + " needs counts of order " +
                                         std::to_string(method.required_count_order()));
  }
  const TupleCounts pairs = counts.truncate_to(2);
  const Matrix n = pairs.as_matrix();
  Vector theta(static_cast<Eigen::Index>(model->dim()));
  const bool pl = method.kind == Method::Kind::PL;

  switch (spec.family) {
    case Family::SymmetricTwoState: {
      if (pl) {
        const TupleCounts t = counts.truncate_to(3);
        const double rho = ratio(t(0, 1, 0) + t(1, 0, 1),
                                 t(0, 0, 0) + t(0, 1, 0) + t(1, 0, 1) + t(1, 1, 1), "rho_n");
        theta(0) = std::sqrt(rho) / (std::sqrt(rho) + std::sqrt(1.0 - rho));
      } else {
        theta(0) = ratio(n(0, 1) + n(1, 0), n.sum(), "theta");
      }
      break;
    }
    case Family::GeneralTwoState:
      theta(0) = ratio(n(0, 1), n(0, 0) + n(0, 1), "alpha");
      theta(1) = ratio(n(1, 0), n(1, 0) + n(1, 1), "beta");
      break;
    case Family::Ising1D: {
      double same, diff;
      if (pl) {
        const TupleCounts t = counts.truncate_to(3);
        same = t(0, 0, 0) + t(1, 1, 1);
        diff = t(0, 1, 0) + t(1, 0, 1);
      } else {
        same = n(0, 0) + n(1, 1);
        diff = n(0, 1) + n(1, 0);
      }
      if (!(same > 0.0) || !(diff > 0.0)) throw Error(Errc::DataDegenerate, "Ising closed form is infinite");
      theta(0) = (pl ? 0.5 : 1.0) * std::log(same / diff);
      break;
    }
    case Family::ReflectingWalk: {
      double up = 0.0, moves = 0.0;
      for (Eigen::Index i = 1; i + 1 < n.rows(); ++i) {
        up += n(i, i + 1);
        moves += n(i, i - 1) + n(i, i + 1);
      }
      theta(0) = ratio(up, moves, "p");
      break;
    }
    case Family::Saturated: {
      const Eigen::Index s = n.rows();
      for (Eigen::Index a = 0; a < s; ++a) {
        const double row = n.row(a).sum();
        for (Eigen::Index b = 0; b + 1 < s; ++b) {
          theta(a * (s - 1) + b) = ratio(n(a, b), row, "p(a,b)");
        }
        if (!(n(a, s - 1) > 0.0)) throw Error(Errc::DataDegenerate, "saturated closed form on the boundary");
      }
      break;
    }
    default:
      throw Error(Errc::NoClosedForm, "no closed form");
  }

  const Objective objective(model, method, counts);
  FitResult result;
  result.theta_hat = theta;
  result.method = method;
  Vector g;
  result.loglik_at_max = objective.value_and_gradient(theta, g);
  result.gradient_norm = g.lpNorm<Eigen::Infinity>() / std::max(1.0, objective.total());
  result.converged = true;
  result.n_starts_used = 0;
  result.message = "closed form";
  return result;
}

}  // namespace chainlik
