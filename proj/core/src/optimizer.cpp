#include "chainlik/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace chainlik {

namespace {

constexpr double kC1 = 1e-4;
constexpr double kC2 = 0.9;

struct Probe {
  double alpha = 0.0;
  double f = 0.0;  // minimized value (negated objective)
  double df = 0.0;
  Vector z;
  Vector g;
  double stationarity = 0.0;
  bool valid = false;
};

class LineSearch {
 public:
  LineSearch(const ValueAndGradient& f, const Vector& z, const Vector& dir) : f_(f), z_(z), dir_(dir) {}

  Probe eval(double alpha) const {

    Probe p;
    p.alpha = alpha;
    p.z = z_ + alpha * dir_;
    Vector g;
    const double v = f_(p.z, g, p.stationarity);
    p.valid = std::isfinite(v) && g.allFinite();
    p.f = p.valid ? -v : std::numeric_limits<double>::infinity();
    p.g = p.valid ? Vector(-g) : Vector();
    p.df = p.valid ? p.g.dot(dir_) : std::numeric_limits<double>::infinity();
    return p;
  }

  /// Nocedal and Wright, algorithms 3.5 / 3.6. Returns an invalid probe when
  /// no acceptable step is found.
  Probe search(const Probe& origin, double alpha1) const {
    // The slope of the origin probe belongs to the previous direction.
    Probe start = origin;
    start.alpha = 0.0;
    start.df = start.g.dot(dir_);
    Probe prev = start;
    double alpha = alpha1;
    for (int i = 0; i < 40; ++i) {
      Probe cur = eval(alpha);
      if (!cur.valid || !sufficient(start, cur) || (i > 0 && cur.f >= prev.f && !flat(start, cur))) {
        return zoom(start, prev, cur);
      }
      if (std::abs(cur.df) <= -kC2 * start.df) return cur;
      if (cur.df >= 0.0) return zoom(start, cur, prev);
      prev = cur;
      alpha *= 2.0;
    }
    return prev.alpha > 0.0 ? prev : Probe{};
  }

 private:
  /// Change in f below what double precision resolves near start.
  static bool flat(const Probe& start, const Probe& cur) {
    return std::abs(cur.f - start.f) <= 1e-14 * (1.0 + std::abs(start.f));
  }

  /// Armijo decrease, or the approximate Wolfe condition of Hager and Zhang
  /// when the decrease is lost in rounding.
  static bool sufficient(const Probe& start, const Probe& cur) {
    if (cur.f <= start.f + kC1 * cur.alpha * start.df) return true;
    return flat(start, cur) && cur.df <= (2.0 * kC1 - 1.0) * start.df;
  }

  Probe zoom(const Probe& start, Probe lo, Probe hi) const {
    Probe best = lo.alpha > 0.0 ? lo : Probe{};
    for (int i = 0; i < 40; ++i) {
      double alpha = 0.5 * (lo.alpha + hi.alpha);
      // Quadratic through lo (value and slope) and hi, kept away from the ends.
      if (hi.valid && lo.valid) {
        const double da = hi.alpha - lo.alpha;
        const double denom = 2.0 * (hi.f - lo.f - lo.df * da);
        if (denom > 0.0) {
          const double trial = lo.alpha - lo.df * da * da / denom;
          const double a = std::min(lo.alpha, hi.alpha), b = std::max(lo.alpha, hi.alpha);
          if (trial > a + 0.1 * (b - a) && trial < b - 0.1 * (b - a)) alpha = trial;
        }
      }
      // A bracket this narrow means a kink along the line; keep the Armijo point.
      if (std::abs(hi.alpha - lo.alpha) < 1e-8 * std::max(1.0, lo.alpha)) break;
      Probe cur = eval(alpha);
      if (!cur.valid || !sufficient(start, cur) || (cur.f >= lo.f && !flat(start, cur))) {
        hi = cur;
        continue;
      }
      if (std::abs(cur.df) <= -kC2 * start.df) return cur;
      if (cur.df * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
      lo = cur;
      best = cur;
    }
    return best;
  }

  const ValueAndGradient& f_;
  const Vector& z_;
  const Vector& dir_;
};

}  // namespace

BfgsResult maximize_bfgs(const ValueAndGradient& f, const Vector& z0, const BfgsOptions& options) {
  const Eigen::Index n = z0.size();
  BfgsResult result;
  Vector zero_dir = Vector::Zero(n);
  LineSearch initial(f, z0, zero_dir);
  Probe cur = initial.eval(0.0);
  result.z = z0;
  if (!cur.valid) {
    result.message = "objective undefined at the start point";
    return result;
  }
  Matrix h = Matrix::Identity(n, n);
  bool scaled = false;
  double last_step = std::numeric_limits<double>::infinity();

  auto finish = [&](const Probe& p, unsigned iterations, bool converged, std::string message) {
    result.z = p.z;
    result.value = -p.f;
    result.grad = -p.g;
    result.stationarity = p.stationarity;
    result.iterations = iterations;
    result.converged = converged;
    result.last_step = last_step;
    result.message = std::move(message);
    return result;
  };

  for (unsigned iter = 0; iter < options.max_iter; ++iter) {
    const double zscale = 1.0 + cur.z.lpNorm<Eigen::Infinity>();
    const Vector newton = h * cur.g;
    const bool small_grad = cur.stationarity <= options.grad_tol;
    if (small_grad && (newton.lpNorm<Eigen::Infinity>() <= options.step_tol * zscale ||
                       last_step <= options.step_tol * zscale)) {
      return finish(cur, iter, true, "converged");
    }
    if (cur.z.lpNorm<Eigen::Infinity>() > options.z_limit) {
      result.diverged = true;
      return finish(cur, iter, false, "parameter ran to the domain boundary");
    }
    Vector dir = -newton;
    if (!(dir.dot(cur.g) < 0.0)) {
      h.setIdentity();
      scaled = false;
      dir = -cur.g;
    }
    double alpha1 = 1.0;
    if (!scaled) alpha1 = std::min(1.0, 1.0 / std::max(1e-300, dir.lpNorm<Eigen::Infinity>()));
    LineSearch ls(f, cur.z, dir);
    Probe next = ls.search(cur, alpha1);
    if (!next.valid || next.alpha <= 0.0) {
      if (scaled) {
        // Retry once along steepest descent with a fresh Hessian estimate.
        h.setIdentity();
        scaled = false;
        last_step = std::numeric_limits<double>::infinity();
        dir = -cur.g;
        LineSearch retry(f, cur.z, dir);
        next = retry.search(cur, std::min(1.0, 1.0 / std::max(1e-300, dir.lpNorm<Eigen::Infinity>())));
      }
      if (!next.valid || next.alpha <= 0.0) {
        last_step = 0.0;
        const bool converged = small_grad;
        return finish(cur, iter, converged, converged ? "converged (no further progress)" : "line search failed");
      }
    }
    const Vector s = next.z - cur.z;
    const Vector y = next.g - cur.g;
    last_step = s.lpNorm<Eigen::Infinity>();
    if (last_step == 0.0) {
      const bool converged = small_grad;
      return finish(cur, iter, converged, converged ? "converged (no further progress)" : "line search stalled");
    }
    const double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm()) {
      if (!scaled) {
        h = Matrix::Identity(n, n) * (sy / y.dot(y));
        scaled = true;
      }
      const double rho = 1.0 / sy;
      const Matrix i_rsy = Matrix::Identity(n, n) - rho * s * y.transpose();
      h = i_rsy * h * i_rsy.transpose() + rho * s * s.transpose();
    }
    cur = std::move(next);
  }
  return finish(cur, options.max_iter, false, "iteration limit reached");
}

}  // namespace chainlik
