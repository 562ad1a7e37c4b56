#include "chainlik/model_zoo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chainlik/error.hpp"

namespace chainlik {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logit(double x) { return std::log(x) - std::log1p(-x); }

/// x_i = cap * exp(z_i) / (1 + sum_j exp(z_j)); positive with sum below cap.
Vector additive_logistic(const Vector& z, double cap) {
  const double zmax = std::max(0.0, z.maxCoeff());
  const Vector e = (z.array() - zmax).exp().matrix();
  const double denom = std::exp(-zmax) + e.sum();
  return cap * e / denom;
}

Vector additive_logistic_inverse(const Vector& x, double cap) {
  const double rest = cap - x.sum();
  return (x.array() / rest).log().matrix();
}

Domain box(std::size_t dim, double lo, double hi) {
  return Domain{Vector::Constant(static_cast<Eigen::Index>(dim), lo),
                Vector::Constant(static_cast<Eigen::Index>(dim), hi),
                {}};
}

LinearConstraint constraint(std::initializer_list<double> a, double bound) {
  Vector v(static_cast<Eigen::Index>(a.size()));
  Eigen::Index i = 0;
  for (double x : a) v(i++) = x;
  return {v, bound};
}

std::vector<Matrix> zeros(std::size_t count, Eigen::Index s) {
  return std::vector<Matrix>(count, Matrix::Zero(s, s));
}

// ---------------------------------------------------------------------------

class SymmetricTwoState final : public ParametricModel {
 public:
  SymmetricTwoState() : ParametricModel(StateSpace::numbered(2, 0), {"theta"}, box(1, 0.0, 1.0)) {}
  std::string name() const override { return "symmetric-two-state"; }

  Matrix transition(const Vector& t) const override {
    Matrix p(2, 2);
    p << 1.0 - t(0), t(0), t(0), 1.0 - t(0);
    return p;
  }
  bool has_analytic_transition() const override { return true; }
  void transition_derivatives(const Vector&, std::vector<Matrix>& dp,
                              std::vector<Matrix>& d2p) const override {
    dp = zeros(1, 2);
    dp[0] << -1.0, 1.0, 1.0, -1.0;
    d2p = zeros(1, 2);
  }
  bool has_analytic_stationary_scores() const override { return true; }
  Matrix stationary_scores(const Vector&) const override { return Matrix::Zero(2, 1); }
  std::optional<Vector> stationary_closed_form(const Vector&) const override {
    return Vector::Constant(2, 0.5);
  }
};

class GeneralTwoState final : public ParametricModel {
 public:
  GeneralTwoState()
      : ParametricModel(StateSpace::numbered(2, 0), {"alpha", "beta"}, box(2, 0.0, 1.0)) {}
  std::string name() const override { return "general-two-state"; }

  Matrix transition(const Vector& t) const override {
    Matrix p(2, 2);
    p << 1.0 - t(0), t(0), t(1), 1.0 - t(1);
    return p;
  }
  bool has_analytic_transition() const override { return true; }
  void transition_derivatives(const Vector&, std::vector<Matrix>& dp,
                              std::vector<Matrix>& d2p) const override {
    dp = zeros(2, 2);
    dp[0] << -1.0, 1.0, 0.0, 0.0;
    dp[1] << 0.0, 0.0, 1.0, -1.0;
    d2p = zeros(4, 2);
  }
  bool has_analytic_stationary_scores() const override { return true; }
  Matrix stationary_scores(const Vector& t) const override {
    const double a = t(0), b = t(1), w = 1.0 / (a + b);
    Matrix v(2, 2);
    v << -w, 1.0 / b - w, 1.0 / a - w, -w;
    return v;
  }
  std::optional<Vector> stationary_closed_form(const Vector& t) const override {
    Vector pi(2);
    pi << t(1), t(0);
    return pi / (t(0) + t(1));
  }
};

/// P = (1 - rho) 1 p^T + rho I.
class Equicorrelation final : public ParametricModel {
 public:
  explicit Equicorrelation(Vector known_p)
      : ParametricModel(StateSpace::numbered(static_cast<std::size_t>(known_p.size()), 1), {"rho"},
                        Domain{Vector::Constant(1, lower_bound(known_p)), Vector::Constant(1, 1.0), {}}),
        known_(true),
        p_(std::move(known_p)) {}

  explicit Equicorrelation(std::size_t s)
      : ParametricModel(StateSpace::numbered(s, 1), names(s), unknown_domain(s)), known_(false) {}

  std::string name() const override { return "equicorrelation"; }

  Matrix transition(const Vector& t) const override {
    const Vector p = pvec(t);
    const auto s = p.size();
    return (1.0 - t(0)) * Vector::Ones(s) * p.transpose() + t(0) * Matrix::Identity(s, s);
  }

  bool has_analytic_transition() const override { return true; }
  void transition_derivatives(const Vector& t, std::vector<Matrix>& dp,
                              std::vector<Matrix>& d2p) const override {
    const Vector p = pvec(t);
    const auto s = p.size();
    const auto d = static_cast<Eigen::Index>(dim());
    dp = zeros(dim(), s);
    d2p = zeros(dim() * dim(), s);
    dp[0] = Matrix::Identity(s, s) - Vector::Ones(s) * p.transpose();
    for (Eigen::Index j = 1; j < d; ++j) {
      Matrix e = Matrix::Zero(s, s);
      e.col(j - 1).setOnes();
      e.col(s - 1).setConstant(-1.0);
      dp[j] = (1.0 - t(0)) * e;
      d2p[j] = -e;
      d2p[j * d] = -e;
    }
  }

  bool has_analytic_stationary_scores() const override { return true; }
  Matrix stationary_scores(const Vector& t) const override {
    const Vector p = pvec(t);
    const auto s = p.size();
    const auto d = static_cast<Eigen::Index>(dim());
    Matrix v = Matrix::Zero(s, d);
    for (Eigen::Index j = 1; j < d; ++j) {
      v(j - 1, j) = 1.0 / p(j - 1);
      v(s - 1, j) = -1.0 / p(s - 1);
    }
    return v;
  }
  std::optional<Vector> stationary_closed_form(const Vector& t) const override { return pvec(t); }

  Vector to_unconstrained(const Vector& t) const override {
    if (known_) return ParametricModel::to_unconstrained(t);
    const Vector p = pvec(t);
    const double lb = lower_bound(p);
    Vector z(t.size());
    z(0) = logit((t(0) - lb) / (1.0 - lb));
    z.tail(t.size() - 1) = additive_logistic_inverse(t.tail(t.size() - 1), 1.0);
    return z;
  }
  Vector from_unconstrained(const Vector& z) const override {
    if (known_) return ParametricModel::from_unconstrained(z);
    Vector t(z.size());
    t.tail(z.size() - 1) = additive_logistic(z.tail(z.size() - 1), 1.0);
    const double lb = lower_bound(pvec(t));
    t(0) = lb + (1.0 - lb) * sigmoid(z(0));
    return t;
  }

  /// Smallest rho keeping the diagonal nonnegative: max_b -p_b / (1 - p_b).
  static double lower_bound(const Vector& p) {
    double lb = -kInf;
    for (Eigen::Index b = 0; b < p.size(); ++b) lb = std::max(lb, -p(b) / (1.0 - p(b)));
    return lb;
  }

 private:
  static std::vector<std::string> names(std::size_t s) {
    std::vector<std::string> out{"rho"};
    for (std::size_t j = 1; j < s; ++j) out.push_back("p" + std::to_string(j));
    return out;
  }
  static Domain unknown_domain(std::size_t s) {
    Domain d = box(s, 0.0, 1.0);
    d.lower(0) = -1.0;
    Vector a = Vector::Ones(static_cast<Eigen::Index>(s));
    a(0) = 0.0;
    d.linear.push_back({a, 1.0});
    return d;
  }

  Vector pvec(const Vector& t) const {
    if (known_) return p_;
    const auto s = t.size();
    Vector p(s);
    p.head(s - 1) = t.tail(s - 1);
    p(s - 1) = 1.0 - t.tail(s - 1).sum();
    return p;
  }

  bool known_;
  Vector p_;
};

class ThreeState final : public ParametricModel {
 public:
  ThreeState()
      : ParametricModel(StateSpace::numbered(3, 1), {"alpha", "beta"},
                        Domain{Vector::Zero(2), Vector::Ones(2), {constraint({1.0, 1.0}, 1.0)}}) {}
  std::string name() const override { return "three-state"; }

  Matrix transition(const Vector& t) const override {
    const double a = t(0), b = t(1), c = 1.0 - a - b;
    Matrix p(3, 3);
    p << c, a, b, a, c, b, a, b, c;
    return p;
  }
  bool has_analytic_transition() const override { return true; }
  void transition_derivatives(const Vector&, std::vector<Matrix>& dp,
                              std::vector<Matrix>& d2p) const override {
    dp = zeros(2, 3);
    dp[0] << -1, 1, 0, 1, -1, 0, 1, 0, -1;
    dp[1] << -1, 0, 1, 0, -1, 1, 0, 1, -1;
    d2p = zeros(4, 3);
  }
  bool has_analytic_stationary_scores() const override { return true; }
  Matrix stationary_scores(const Vector& t) const override {
    const double a = t(0), b = t(1);
    const double s1 = 2 * a + b, s2 = a + 2 * b, q = a * a + a * b + b * b;
    Matrix v(3, 2);
    v << 1.0 / a - 2.0 / s1, -1.0 / s1,
        (2 * a + b) / q - 1.0 / s2 - 2.0 / s1, (a + 2 * b) / q - 2.0 / s2 - 1.0 / s1,
        -1.0 / s2, 1.0 / b - 2.0 / s2;
    return v;
  }
  std::optional<Vector> stationary_closed_form(const Vector& t) const override {
    const double a = t(0), b = t(1);
    Vector pi(3);
    pi << a / (2 * a + b), (a * a + a * b + b * b) / ((a + 2 * b) * (2 * a + b)), b / (a + 2 * b);
    return pi;
  }
  Vector to_unconstrained(const Vector& t) const override {
    return additive_logistic_inverse(t, 1.0);
  }
  Vector from_unconstrained(const Vector& z) const override { return additive_logistic(z, 1.0); }
};

/// P = [[e, 1], [1, e]] / (1 + e) with e = exp(beta).
class Ising1D final : public ParametricModel {
 public:
  Ising1D()
      : ParametricModel(StateSpace::numbered(2, 0), {"beta"},
                        Domain{Vector::Constant(1, -kInf), Vector::Constant(1, kInf), {}}) {}
  std::string name() const override { return "ising-1d"; }

  Matrix transition(const Vector& t) const override {
    const double same = sigmoid(t(0));
    Matrix p(2, 2);
    p << same, 1.0 - same, 1.0 - same, same;
    return p;
  }
  bool has_analytic_transition() const override { return true; }
  void transition_derivatives(const Vector& t, std::vector<Matrix>& dp,
                              std::vector<Matrix>& d2p) const override {
    const double s = sigmoid(t(0));
    const double d1 = s * (1.0 - s), d2 = d1 * (1.0 - 2.0 * s);
    dp = zeros(1, 2);
    dp[0] << d1, -d1, -d1, d1;
    d2p = zeros(1, 2);
    d2p[0] << d2, -d2, -d2, d2;
  }
  bool has_analytic_stationary_scores() const override { return true; }
  Matrix stationary_scores(const Vector&) const override { return Matrix::Zero(2, 1); }
  std::optional<Vector> stationary_closed_form(const Vector&) const override {
    return Vector::Constant(2, 0.5);
  }
};

/// Walk on 1..k reflected at both ends: interior states step down with
/// probability q = 1 - p and up with probability p.
class ReflectingWalk final : public ParametricModel {
 public:
  explicit ReflectingWalk(std::size_t k)
      : ParametricModel(StateSpace::numbered(k, 1), {"p"}, box(1, 0.0, 1.0)), k_(k) {}
  std::string name() const override { return "reflecting-walk"; }

  Matrix transition(const Vector& t) const override {
    const auto k = static_cast<Eigen::Index>(k_);
    Matrix p = Matrix::Zero(k, k);
    p(0, 1) = 1.0;
    p(k - 1, k - 2) = 1.0;
    for (Eigen::Index i = 1; i + 1 < k; ++i) {
      p(i, i - 1) = 1.0 - t(0);
      p(i, i + 1) = t(0);
    }
    return p;
  }
  std::vector<char> structural_zeros() const override {
    std::vector<char> mask(k_ * k_, 1);
    for (std::size_t a = 0; a < k_; ++a) {
      if (a > 0) mask[a * k_ + a - 1] = 0;
      if (a + 1 < k_) mask[a * k_ + a + 1] = 0;
    }
    return mask;
  }
  bool has_analytic_transition() const override { return true; }
  void transition_derivatives(const Vector&, std::vector<Matrix>& dp,
                              std::vector<Matrix>& d2p) const override {
    const auto k = static_cast<Eigen::Index>(k_);
    dp = zeros(1, k);
    for (Eigen::Index i = 1; i + 1 < k; ++i) {
      dp[0](i, i - 1) = -1.0;
      dp[0](i, i + 1) = 1.0;
    }
    d2p = zeros(1, k);
  }

  bool has_analytic_stationary_scores() const override { return true; }
  Matrix stationary_scores(const Vector& t) const override {
    const double p = t(0), q = 1.0 - p, r = p / q;
    const auto k = static_cast<Eigen::Index>(k_);
    const double pi1 = (*stationary_closed_form(t))(0);
    double sum = 0.0;
    for (Eigen::Index i = 1; i <= k - 2; ++i) {
      sum += std::pow(r, static_cast<double>(i - 1)) * (static_cast<double>(i) / q - 1.0);
    }
    const double v1 = -pi1 * (sum / (p * q) +
                              static_cast<double>(k - 2) * std::pow(r, static_cast<double>(k - 3)) / (q * q));
    Matrix v(k, 1);
    v(0, 0) = v1;
    for (Eigen::Index i = 2; i <= k - 1; ++i) {
      v(i - 1, 0) = v1 - 1.0 / p + static_cast<double>(i - 1) / (p * q);
    }
    v(k - 1, 0) = v1 + static_cast<double>(k - 2) / (p * q);
    return v;
  }
  std::optional<Vector> stationary_closed_form(const Vector& t) const override {
    const double p = t(0), q = 1.0 - p, r = p / q;
    const auto k = static_cast<Eigen::Index>(k_);
    double s = 0.0;
    for (Eigen::Index i = 1; i <= k - 2; ++i) s += std::pow(r, static_cast<double>(i));
    const double pi1 = 1.0 / (1.0 + s / p + std::pow(r, static_cast<double>(k - 2)));
    Vector pi(k);
    pi(0) = pi1;
    for (Eigen::Index i = 2; i <= k - 1; ++i) {
      pi(i - 1) = pi1 * std::pow(p, static_cast<double>(i - 2)) / std::pow(q, static_cast<double>(i - 1));
    }
    pi(k - 1) = pi1 * std::pow(r, static_cast<double>(k - 2));
    return pi;
  }

 private:
  std::size_t k_;
};

/// Four-parameter nucleotide model in the state order A, G, C, T.
class Kimura4 final : public ParametricModel {
 public:
  Kimura4()
      : ParametricModel(StateSpace::dna(), {"alpha", "beta", "gamma", "delta"},
                        Domain{Vector::Zero(4), (Vector(4) << 0.5, 0.5, 1.0, 1.0).finished(),
                               {constraint({2, 0, 1, 0}, 1.0), constraint({2, 0, 0, 1}, 1.0),
                                constraint({0, 2, 1, 0}, 1.0), constraint({0, 2, 0, 1}, 1.0)}}) {}
  std::string name() const override { return "kimura4"; }

  Matrix transition(const Vector& t) const override {
    const double a = t(0), b = t(1), g = t(2), d = t(3);
    Matrix p(4, 4);
    p << 1 - 2 * a - g, g, a, a,
        d, 1 - 2 * a - d, a, a,
        b, b, 1 - 2 * b - g, g,
        b, b, d, 1 - 2 * b - d;
    return p;
  }
  bool has_analytic_transition() const override { return true; }
  void transition_derivatives(const Vector&, std::vector<Matrix>& dp,
                              std::vector<Matrix>& d2p) const override {
    dp = zeros(4, 4);
    dp[0] << -2, 0, 1, 1, 0, -2, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0;
    dp[1] << 0, 0, 0, 0, 0, 0, 0, 0, 1, 1, -2, 0, 1, 1, 0, -2;
    dp[2] << -1, 1, 0, 0, 0, 0, 0, 0, 0, 0, -1, 1, 0, 0, 0, 0;
    dp[3] << 0, 0, 0, 0, 1, -1, 0, 0, 0, 0, 0, 0, 0, 0, 1, -1;
    d2p = zeros(16, 4);
  }

  bool has_analytic_stationary_scores() const override { return true; }
  Matrix stationary_scores(const Vector& t) const override {
    // Each log p_x is a signed sum of logs of linear forms in theta.
    struct Term {
      double sign;
      double c[4];
    };
    static const Term terms[4][4] = {
        {{1, {0, 1, 0, 0}}, {-1, {1, 1, 0, 0}}, {1, {1, 0, 0, 1}}, {-1, {2, 0, 1, 1}}},
        {{1, {0, 1, 0, 0}}, {-1, {1, 1, 0, 0}}, {1, {1, 0, 1, 0}}, {-1, {2, 0, 1, 1}}},
        {{1, {1, 0, 0, 0}}, {-1, {1, 1, 0, 0}}, {1, {0, 1, 0, 1}}, {-1, {0, 2, 1, 1}}},
        {{1, {1, 0, 0, 0}}, {-1, {1, 1, 0, 0}}, {1, {0, 1, 1, 0}}, {-1, {0, 2, 1, 1}}},
    };
    Matrix v = Matrix::Zero(4, 4);
    for (int x = 0; x < 4; ++x) {
      for (const Term& term : terms[x]) {
        const Eigen::Map<const Eigen::Vector4d> c(term.c);
        v.row(x) += term.sign * c.transpose() / c.dot(t);
      }
    }
    return v;
  }
  std::optional<Vector> stationary_closed_form(const Vector& t) const override {
    const double a = t(0), b = t(1), g = t(2), d = t(3);
    Vector pi(4);
    pi << b / (a + b) * (a + d) / (2 * a + g + d), b / (a + b) * (a + g) / (2 * a + g + d),
        a / (a + b) * (b + d) / (2 * b + g + d), a / (a + b) * (b + g) / (2 * b + g + d);
    return pi;
  }

  // alpha, beta in (0, 1/2) by scaled logit; gamma, delta in (0, m) with
  // m = 1 - 2 max(alpha, beta).
  Vector to_unconstrained(const Vector& t) const override {
    const double m = 1.0 - 2.0 * std::max(t(0), t(1));
    Vector z(4);
    z << logit(2 * t(0)), logit(2 * t(1)), logit(t(2) / m), logit(t(3) / m);
    return z;
  }
  Vector from_unconstrained(const Vector& z) const override {
    Vector t(4);
    t(0) = 0.5 * sigmoid(z(0));
    t(1) = 0.5 * sigmoid(z(1));
    const double m = 1.0 - 2.0 * std::max(t(0), t(1));
    t(2) = m * sigmoid(z(2));
    t(3) = m * sigmoid(z(3));
    return t;
  }
};

/// Six-parameter extension: separate gamma/delta within purines (1) and
/// pyrimidines (2).
class Kimura6 final : public ParametricModel {
 public:
  Kimura6()
      : ParametricModel(StateSpace::dna(), {"alpha", "beta", "gamma1", "gamma2", "delta1", "delta2"},
                        Domain{Vector::Zero(6), (Vector(6) << 0.5, 0.5, 1, 1, 1, 1).finished(),
                               {constraint({2, 0, 1, 0, 0, 0}, 1.0), constraint({2, 0, 0, 0, 1, 0}, 1.0),
                                constraint({0, 2, 0, 1, 0, 0}, 1.0),
                                constraint({0, 2, 0, 0, 0, 1}, 1.0)}}) {}
  std::string name() const override { return "kimura6"; }

  Matrix transition(const Vector& t) const override {
    const double a = t(0), b = t(1), g1 = t(2), g2 = t(3), d1 = t(4), d2 = t(5);
    Matrix p(4, 4);
    p << 1 - 2 * a - g1, g1, a, a,
        d1, 1 - 2 * a - d1, a, a,
        b, b, 1 - 2 * b - g2, g2,
        b, b, d2, 1 - 2 * b - d2;
    return p;
  }

  // Rows A, G share alpha; rows C, T share beta. Each within-type rate is a
  // logistic fraction of the room 1 - 2 alpha (or 1 - 2 beta) left in its row.
  Vector to_unconstrained(const Vector& t) const override {
    Vector z(6);
    z << logit(2 * t(0)), logit(2 * t(1)), logit(t(2) / (1 - 2 * t(0))), logit(t(3) / (1 - 2 * t(1))),
        logit(t(4) / (1 - 2 * t(0))), logit(t(5) / (1 - 2 * t(1)));
    return z;
  }
  Vector from_unconstrained(const Vector& z) const override {
    Vector t(6);
    t(0) = 0.5 * sigmoid(z(0));
    t(1) = 0.5 * sigmoid(z(1));
    t(2) = (1 - 2 * t(0)) * sigmoid(z(2));
    t(3) = (1 - 2 * t(1)) * sigmoid(z(3));
    t(4) = (1 - 2 * t(0)) * sigmoid(z(4));
    t(5) = (1 - 2 * t(1)) * sigmoid(z(5));
    return t;
  }
};

class Saturated final : public ParametricModel {
 public:
  explicit Saturated(std::size_t s)
      : ParametricModel(StateSpace::numbered(s, 1), names(s), domain(s)), s_(s) {}
  std::string name() const override { return "saturated"; }

  Matrix transition(const Vector& t) const override {
    const auto s = static_cast<Eigen::Index>(s_);
    Matrix p(s, s);
    for (Eigen::Index a = 0; a < s; ++a) {
      p.row(a).head(s - 1) = t.segment(a * (s - 1), s - 1).transpose();
      p(a, s - 1) = 1.0 - t.segment(a * (s - 1), s - 1).sum();
    }
    return p;
  }
  Vector to_unconstrained(const Vector& t) const override {
    const auto s = static_cast<Eigen::Index>(s_);
    Vector z(t.size());
    for (Eigen::Index a = 0; a < s; ++a) {
      z.segment(a * (s - 1), s - 1) = additive_logistic_inverse(t.segment(a * (s - 1), s - 1), 1.0);
    }
    return z;
  }
  Vector from_unconstrained(const Vector& z) const override {
    const auto s = static_cast<Eigen::Index>(s_);
    Vector t(z.size());
    for (Eigen::Index a = 0; a < s; ++a) {
      t.segment(a * (s - 1), s - 1) = additive_logistic(z.segment(a * (s - 1), s - 1), 1.0);
    }
    return t;
  }

 private:
  static std::vector<std::string> names(std::size_t s) {
    std::vector<std::string> out;
    for (std::size_t a = 0; a < s; ++a) {
      for (std::size_t b = 0; b + 1 < s; ++b) {
        out.push_back("p(" + std::to_string(a + 1) + "," + std::to_string(b + 1) + ")");
      }
    }
    return out;
  }
  static Domain domain(std::size_t s) {
    const std::size_t dim = s * (s - 1);
    Domain d = box(dim, 0.0, 1.0);
    for (std::size_t a = 0; a < s; ++a) {
      Vector c = Vector::Zero(static_cast<Eigen::Index>(dim));
      c.segment(static_cast<Eigen::Index>(a * (s - 1)), static_cast<Eigen::Index>(s - 1)).setOnes();
      d.linear.push_back({c, 1.0});
    }
    return d;
  }

  std::size_t s_;
};

}  // namespace

// ---------------------------------------------------------------------------
// ParametricModel defaults

ParametricModel::ParametricModel(StateSpace states, std::vector<std::string> names, Domain domain)
    : states_(std::move(states)), names_(std::move(names)), domain_(std::move(domain)) {}

bool ParametricModel::in_domain(const Vector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dim()) return false;
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    if (!std::isfinite(theta(j))) return false;
    if (!(theta(j) > domain_.lower(j) && theta(j) < domain_.upper(j))) return false;
  }
  for (const auto& c : domain_.linear) {
    if (!(c.a.dot(theta) < c.bound)) return false;
  }
  const Matrix p = transition(theta);
  const std::vector<char> mask = structural_zeros();
  const auto s = p.rows();
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index b = 0; b < s; ++b) {
      const bool structural = mask[static_cast<std::size_t>(a * s + b)] != 0;
      if (!structural && !(p(a, b) > 0.0)) return false;
    }
  }
  return true;
}

void ParametricModel::require_in_domain(const Vector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dim()) {
    throw Error(Errc::OutOfDomain, name() + ": expected " + std::to_string(dim()) + " parameters, got " +
                                       std::to_string(theta.size()));
  }
  if (!in_domain(theta)) {
    std::string where;
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      where += (j ? ", " : "") + names_[static_cast<std::size_t>(j)] + "=" + std::to_string(theta(j));
    }
    throw Error(Errc::OutOfDomain, name() + ": parameter point outside the domain (" + where + ")");
  }
}

TransitionMatrix ParametricModel::transition_matrix(const Vector& theta) const {
  require_in_domain(theta);
  Matrix p = transition(theta);
  // Clamp rounding residue so that validation of entries in [0,1] holds.
  p = p.cwiseMax(0.0).cwiseMin(1.0);
  return TransitionMatrix(states_, std::move(p));
}

std::vector<char> ParametricModel::structural_zeros() const {
  return std::vector<char>(num_states() * num_states(), 0);
}

void ParametricModel::transition_derivatives(const Vector&, std::vector<Matrix>&,
                                             std::vector<Matrix>&) const {
  throw Error(Errc::InvalidArgument, name() + " has no analytic transition derivatives");
}

Matrix ParametricModel::stationary_scores(const Vector&) const {
  throw Error(Errc::InvalidArgument, name() + " has no analytic stationary scores");
}

std::optional<Vector> ParametricModel::stationary_closed_form(const Vector&) const {
  return std::nullopt;
}

Vector ParametricModel::to_unconstrained(const Vector& theta) const {
  Vector z(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double lo = domain_.lower(j), hi = domain_.upper(j), x = theta(j);
    if (std::isfinite(lo) && std::isfinite(hi)) {
      z(j) = logit((x - lo) / (hi - lo));
    } else if (std::isfinite(lo)) {
      z(j) = std::log(x - lo);
    } else if (std::isfinite(hi)) {
      z(j) = -std::log(hi - x);
    } else {
      z(j) = x;
    }
  }
  return z;
}

Vector ParametricModel::from_unconstrained(const Vector& z) const {
  Vector theta(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) {
    const double lo = domain_.lower(j), hi = domain_.upper(j);
    if (std::isfinite(lo) && std::isfinite(hi)) {
      theta(j) = lo + (hi - lo) * sigmoid(z(j));
    } else if (std::isfinite(lo)) {
      theta(j) = lo + std::exp(z(j));
    } else if (std::isfinite(hi)) {
      theta(j) = hi - std::exp(-z(j));
    } else {
      theta(j) = z(j);
    }
  }
  return theta;
}

// ---------------------------------------------------------------------------
// Families

std::string_view family_name(Family family) noexcept {
  switch (family) {
    case Family::SymmetricTwoState: return "symmetric-two-state";
    case Family::GeneralTwoState: return "general-two-state";
    case Family::Equicorrelation: return "equicorrelation";
    case Family::ThreeState: return "three-state";
    case Family::Ising1D: return "ising-1d";
    case Family::ReflectingWalk: return "reflecting-walk";
    case Family::Kimura4: return "kimura4";
    case Family::Kimura6: return "kimura6";
    case Family::Saturated: return "saturated";
  }
  return "unknown";
}

std::optional<Family> parse_family(std::string_view name) {
  for (Family f : {Family::SymmetricTwoState, Family::GeneralTwoState, Family::Equicorrelation,
                   Family::ThreeState, Family::Ising1D, Family::ReflectingWalk, Family::Kimura4,
                   Family::Kimura6, Family::Saturated}) {
    if (family_name(f) == name) return f;
  }
  return std::nullopt;
}

namespace {

void require_states(const ModelSpec& spec, std::size_t fixed) {
  if (spec.num_states != 0 && spec.num_states != fixed) {
    throw Error(Errc::InvalidSpec, std::string(family_name(spec.family)) + " has exactly " +
                                       std::to_string(fixed) + " states");
  }
  if (spec.known_p) {
    throw Error(Errc::InvalidSpec, "known_p applies only to the equicorrelation family");
  }
}

}  // namespace

std::shared_ptr<const ParametricModel> make_model(const ModelSpec& spec) {
  switch (spec.family) {
    case Family::SymmetricTwoState:
      require_states(spec, 2);
      return std::make_shared<SymmetricTwoState>();
    case Family::GeneralTwoState:
      require_states(spec, 2);
      return std::make_shared<GeneralTwoState>();
    case Family::ThreeState:
      require_states(spec, 3);
      return std::make_shared<ThreeState>();
    case Family::Ising1D:
      require_states(spec, 2);
      return std::make_shared<Ising1D>();
    case Family::Kimura4:
      require_states(spec, 4);
      return std::make_shared<Kimura4>();
    case Family::Kimura6:
      require_states(spec, 4);
      return std::make_shared<Kimura6>();
    case Family::Equicorrelation: {
      if (spec.known_p) {
        const Vector& p = *spec.known_p;
        if (p.size() < 2 || (spec.num_states != 0 && spec.num_states != static_cast<std::size_t>(p.size()))) {
          throw Error(Errc::InvalidSpec, "known_p length must equal the number of states (>= 2)");
        }
        if ((p.array() <= 0.0).any() || (p.array() >= 1.0).any() || std::abs(p.sum() - 1.0) > 1e-12) {
          throw Error(Errc::InvalidSpec, "known_p must be a positive probability vector");
        }
        return std::make_shared<Equicorrelation>(p);
      }
      if (spec.num_states < 2 || spec.num_states > kMaxDenseStates) {
        throw Error(Errc::InvalidSpec, "equicorrelation needs 2..26 states");
      }
      return std::make_shared<Equicorrelation>(spec.num_states);
    }
    case Family::ReflectingWalk:
      if (spec.known_p) throw Error(Errc::InvalidSpec, "known_p applies only to equicorrelation");
      if (spec.num_states < 3 || spec.num_states > kMaxDenseStates) {
        throw Error(Errc::InvalidSpec, "reflecting walk needs 3..26 states");
      }
      return std::make_shared<ReflectingWalk>(spec.num_states);
    case Family::Saturated:
      if (spec.known_p) throw Error(Errc::InvalidSpec, "known_p applies only to equicorrelation");
      if (spec.num_states < 2 || spec.num_states > kMaxDenseStates) {
        throw Error(Errc::InvalidSpec, "saturated model needs 2..26 states");
      }
      return std::make_shared<Saturated>(spec.num_states);
  }
  throw Error(Errc::InvalidSpec, "unknown model family");
}

// ---------------------------------------------------------------------------
// Derivatives

double fd_step(double x) noexcept {
  static const double h = std::cbrt(std::numeric_limits<double>::epsilon());
  return h * std::max(1.0, std::abs(x));
}

namespace {

/// Shrinks h until theta +- h e_j (and the optional second axis) stay inside.
double inside_step(const ParametricModel& model, const Vector& theta, Eigen::Index j, double h) {
  for (int tries = 0; tries < 60; ++tries) {
    Vector plus = theta, minus = theta;
    plus(j) += h;
    minus(j) -= h;
    if (model.in_domain(plus) && model.in_domain(minus)) return h;
    h *= 0.5;
  }
  throw Error(Errc::OutOfDomain, model.name() + ": no finite-difference step fits inside the domain");
}

bool square_inside(const ParametricModel& model, const Vector& theta, Eigen::Index j, double hj,
                   Eigen::Index k, double hk) {
  for (int sj : {-1, 1}) {
    for (int sk : {-1, 1}) {
      Vector x = theta;
      x(j) += sj * hj;
      x(k) += sk * hk;
      if (!model.in_domain(x)) return false;
    }
  }
  return true;
}

}  // namespace

TransitionDerivatives transition_derivatives(const ParametricModel& model, const Vector& theta,
                                             Derivatives mode) {
  model.require_in_domain(theta);
  TransitionDerivatives out;
  out.p = model.transition(theta);
  const auto d = static_cast<Eigen::Index>(model.dim());
  if (mode == Derivatives::Auto && model.has_analytic_transition()) {
    model.transition_derivatives(theta, out.dp, out.d2p);
    return out;
  }
  out.dp.resize(static_cast<std::size_t>(d));
  out.d2p.resize(static_cast<std::size_t>(d * d));
  for (Eigen::Index j = 0; j < d; ++j) {
    const double h = inside_step(model, theta, j, fd_step(theta(j)));
    Vector plus = theta, minus = theta;
    plus(j) += h;
    minus(j) -= h;
    out.dp[static_cast<std::size_t>(j)] = (model.transition(plus) - model.transition(minus)) / (2.0 * h);
  }
  // Second differences use a wider step: truncation is negligible for the
  // families that reach this path and round-off scales as eps / h^2.
  std::vector<double> h2(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) {
    h2[static_cast<std::size_t>(j)] = inside_step(model, theta, j, 1e-3 * std::max(1.0, std::abs(theta(j))));
  }
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index k = j; k < d; ++k) {
      Matrix value;
      if (j == k) {
        const double h = h2[static_cast<std::size_t>(j)];
        Vector plus = theta, minus = theta;
        plus(j) += h;
        minus(j) -= h;
        value = (model.transition(plus) - 2.0 * out.p + model.transition(minus)) / (h * h);
      } else {
        double hj = h2[static_cast<std::size_t>(j)], hk = h2[static_cast<std::size_t>(k)];
        int tries = 0;
        while (!square_inside(model, theta, j, hj, k, hk)) {
          hj *= 0.5;
          hk *= 0.5;
          if (++tries > 60) throw Error(Errc::OutOfDomain, "no mixed-difference step fits the domain");
        }
        Matrix acc = Matrix::Zero(out.p.rows(), out.p.cols());
        for (int sj : {-1, 1}) {
          for (int sk : {-1, 1}) {
            Vector x = theta;
            x(j) += sj * hj;
            x(k) += sk * hk;
            acc += static_cast<double>(sj * sk) * model.transition(x);
          }
        }
        value = acc / (4.0 * hj * hk);
      }
      out.d2p[static_cast<std::size_t>(j * d + k)] = value;
      out.d2p[static_cast<std::size_t>(k * d + j)] = value;
    }
  }
  return out;
}

CellScores transition_and_scores(const ParametricModel& model, const Vector& theta, Derivatives mode) {
  const TransitionDerivatives td = transition_derivatives(model, theta, mode);
  const auto s = static_cast<Eigen::Index>(model.num_states());
  const auto d = static_cast<Eigen::Index>(model.dim());
  const std::vector<char> mask = model.structural_zeros();
  CellScores out{model.transition_matrix(theta), {}, {}, mask};
  out.u.assign(static_cast<std::size_t>(s * s), Vector::Zero(d));
  out.i.assign(static_cast<std::size_t>(s * s), Matrix::Zero(d, d));
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index b = 0; b < s; ++b) {
      const auto cell = static_cast<std::size_t>(a * s + b);
      const double p = td.p(a, b);
      if (mask[cell] || p <= 0.0) {
        out.structural[cell] = 1;
        continue;
      }
      Vector u(d);
      Matrix i(d, d);
      for (Eigen::Index j = 0; j < d; ++j) u(j) = td.dp[static_cast<std::size_t>(j)](a, b) / p;
      for (Eigen::Index j = 0; j < d; ++j) {
        for (Eigen::Index k = 0; k < d; ++k) {
          i(j, k) = td.d2p[static_cast<std::size_t>(j * d + k)](a, b) / p - u(j) * u(k);
        }
      }
      out.u[cell] = u;
      out.i[cell] = i;
    }
  }
  return out;
}

StationaryScores stationary_scores(const ParametricModel& model, const Vector& theta, Derivatives mode) {
  const TransitionMatrix p = model.transition_matrix(theta);
  StationaryScores out{stationary_distribution(p).pi, {}};
  if (mode == Derivatives::Auto && model.has_analytic_stationary_scores()) {
    out.v = model.stationary_scores(theta);
    return out;
  }
  const auto d = static_cast<Eigen::Index>(model.dim());
  out.v = Matrix::Zero(p.matrix().rows(), d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double h = inside_step(model, theta, j, fd_step(theta(j)));
    Vector plus = theta, minus = theta;
    plus(j) += h;
    minus(j) -= h;
    const Vector lp = stationary_vector(model.transition(plus)).array().log().matrix();
    const Vector lm = stationary_vector(model.transition(minus)).array().log().matrix();
    out.v.col(j) = (lp - lm) / (2.0 * h);
  }
  return out;
}

}  // namespace chainlik
