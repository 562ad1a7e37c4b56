#include <gtest/gtest.h>

#include <cmath>

#include "chainlik/error.hpp"
#include "chainlik/likelihood.hpp"
#include "generators.hpp"
#include "oracles.hpp"

namespace chainlik {
namespace {

using testing::Rng;

TupleCounts sample_counts(const ParametricModel& model, const Vector& theta, std::size_t n, unsigned order,
                          std::uint64_t seed) {
  const ChainPath path = simulate(model.transition_matrix(theta), n, InitialState::stationary(), seed);
  return count_tuples(path, order);
}

// Direct evaluation of each objective from its definition.
double direct_ml(const Matrix& p, const TupleCounts& pairs) {
  double s = 0.0;
  for (Eigen::Index a = 0; a < p.rows(); ++a)
    for (Eigen::Index b = 0; b < p.cols(); ++b)
      if (pairs(a, b) > 0) s += pairs(a, b) * std::log(p(a, b));
  return s;
}

double direct_ql(const Matrix& p, const TupleCounts& pairs, unsigned k) {
  const Vector pi = oracle::stationary_by_powers(p);
  double s = 0.0;
  for (Eigen::Index a = 0; a < p.rows(); ++a) {
    double row = 0.0;
    for (Eigen::Index b = 0; b < p.cols(); ++b) row += pairs(a, b);
    if (row > 0) s += row * std::log(pi(a));
  }
  return s + (k - 1.0) * direct_ml(p, pairs);
}

double direct_pl(const Matrix& p, const TupleCounts& counts, unsigned m) {
  const Matrix pm1 = [&] {
    Matrix r = Matrix::Identity(p.rows(), p.cols());
    for (unsigned i = 0; i <= m; ++i) r = r * p;
    return r;
  }();
  double s = 0.0;
  for (std::size_t flat = 0; flat < counts.num_cells(); ++flat) {
    const double n = counts.cell(flat);
    if (n == 0) continue;
    const auto t = counts.tuple_of(flat);
    double lf = -std::log(pm1(t.front(), t.back()));
    for (std::size_t i = 1; i < t.size(); ++i) lf += std::log(p(t[i - 1], t[i]));
    s += n * lf;
  }
  return s;
}

TEST(Method, LabelsRoundTrip) {
  for (const Method& m : {Method::ml(), Method::pl(1), Method::pl(2), Method::ql(2), Method::ql(5)}) {
    EXPECT_EQ(parse_method(m.label()), m);
  }
  EXPECT_EQ(Method::ml().label(), "ml");
  EXPECT_EQ(Method::pl(1).label(), "pl");
  EXPECT_EQ(Method::ql(2).label(), "ql");
  EXPECT_EQ(Method::ql(3).label(), "ql3");
  EXPECT_EQ(parse_method("pl1"), Method::pl(1));
  EXPECT_EQ(parse_method("ql2"), Method::ql(2));
  EXPECT_THROW(parse_method("ql1"), Error);
  EXPECT_THROW(parse_method("pl0"), Error);
  EXPECT_THROW(parse_method("mle"), Error);
  EXPECT_EQ(Method::ml().required_count_order(), 2u);
  EXPECT_EQ(Method::ql(4).required_count_order(), 2u);
  EXPECT_EQ(Method::pl(2).required_count_order(), 4u);
}

class ObjectiveFamilies : public ::testing::TestWithParam<testing::FamilyCase> {};

TEST_P(ObjectiveFamilies, ValuesMatchDirectDefinitions) {
  const auto model = make_model(GetParam().spec);
  Rng rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector theta = testing::random_theta(rng, *model);
    const TupleCounts c4 = sample_counts(*model, theta, 400, 4, 500 + static_cast<std::uint64_t>(trial));
    const Vector eval = testing::random_theta(rng, *model);
    const Matrix p = model->transition(eval);
    const TupleCounts pairs = c4.truncate_to(2);
    const double tol = 1e-9 * std::max(1.0, std::abs(direct_ml(p, pairs)));
    // Distinct structural zeros may make an evaluation point infeasible.
    if (!std::isfinite(direct_ml(p, pairs))) continue;
    EXPECT_NEAR(loglik_ml(*model, eval, c4), direct_ml(p, pairs), tol);
    EXPECT_NEAR(loglik_ql(*model, eval, c4, 2), direct_ql(p, pairs, 2), tol);
    EXPECT_NEAR(loglik_ql(*model, eval, c4, 4), direct_ql(p, pairs, 4), tol);
    EXPECT_NEAR(loglik_pl(*model, eval, c4, 1), direct_pl(p, c4.truncate_to(3), 1), tol);
    EXPECT_NEAR(loglik_pl(*model, eval, c4, 2), direct_pl(p, c4, 2), tol);
    for (const Method& m : {Method::ml(), Method::ql(3), Method::pl(1), Method::pl(2)}) {
      const Objective obj(model, m, c4);
      const double expected = m.kind == Method::Kind::ML   ? loglik_ml(*model, eval, c4)
                              : m.kind == Method::Kind::QL ? loglik_ql(*model, eval, c4, m.order)
                                                           : loglik_pl(*model, eval, c4, m.order);
      EXPECT_NEAR(obj.value(eval), expected, tol) << m.label();
    }
  }
}

TEST_P(ObjectiveFamilies, GradientsMatchFiniteDifferences) {
  const auto model = make_model(GetParam().spec);
  Rng rng(37);
  for (int trial = 0; trial < 5; ++trial) {
    const Vector theta = testing::random_theta(rng, *model);
    const TupleCounts c3 = sample_counts(*model, theta, 600, 3, 900 + static_cast<std::uint64_t>(trial));
    for (const Method& m : {Method::ml(), Method::ql(2), Method::ql(4), Method::pl(1)}) {
      const Objective obj(model, m, c3);
      const double v = obj.value(theta);
      if (!std::isfinite(v)) continue;
      const Vector g = obj.gradient(theta);
      const auto f = [&](const Vector& t) -> Vector { return Vector::Constant(1, obj.value(t)); };
      const Vector fd = oracle::fd_jacobian(f, theta, 1e-6).row(0).transpose();
      const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
      EXPECT_LT((g - fd).cwiseAbs().maxCoeff() / scale, 1e-5) << GetParam().label << " " << m.label();
      Vector g2;
      EXPECT_DOUBLE_EQ(obj.value_and_gradient(theta, g2), v);
      EXPECT_LT((g2 - g).cwiseAbs().maxCoeff(), 1e-12 * scale);
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllFamilies, ObjectiveFamilies, ::testing::ValuesIn(testing::all_family_cases()),
                         [](const auto& info) {
                           std::string s = info.param.label;
                           for (char& c : s) c = c == '-' ? '_' : c;
                           return s;
                         });

TEST(Likelihood, ZeroProbabilityPolicy) {
  const auto walk = make_model({Family::ReflectingWalk, 4, std::nullopt});
  Vector theta(1);
  theta << 0.4;
  Matrix n = Matrix::Constant(4, 4, 1.0);  // includes impossible moves
  const TupleCounts counts = TupleCounts::from_matrix(n);
  try {
    loglik_ml(*walk, theta, counts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ZeroProbabilityWithPositiveCount);
  }
  EXPECT_EQ(loglik_ml(*walk, theta, counts, ZeroPolicy::Sentinel), -std::numeric_limits<double>::infinity());
  const Objective sentinel(walk, Method::ml(), counts, ZeroPolicy::Sentinel);
  EXPECT_EQ(sentinel.value(theta), -std::numeric_limits<double>::infinity());
}

TEST(Likelihood, OrderMismatch) {
  const auto model = make_model({Family::GeneralTwoState, 0, std::nullopt});
  Matrix n(2, 2);
  n << 5, 3, 2, 6;
  try {
    Objective(model, Method::pl(1), TupleCounts::from_matrix(n));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::OrderMismatch);
  }
}

TEST(Likelihood, OutOfDomainRejected) {
  const auto model = make_model({Family::GeneralTwoState, 0, std::nullopt});
  Matrix n(2, 2);
  n << 5, 3, 2, 6;
  const Objective obj(model, Method::ml(), TupleCounts::from_matrix(n));
  Vector bad(2);
  bad << 1.2, 0.3;
  EXPECT_THROW(obj.value(bad), Error);
}

}  // namespace
}  // namespace chainlik
