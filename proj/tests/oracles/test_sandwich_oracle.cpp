// Limit covariances against a sandwich assembled without the library's
// ingredient formulas: cell gradients and the expected Hessian by finite
// differences, and the count covariance by explicit lag sums.

#include <gtest/gtest.h>

#include "chainlik/asymptotics.hpp"
#include "generators.hpp"
#include "oracles.hpp"

namespace chainlik {
namespace {

using testing::Rng;

class SandwichOracle : public ::testing::TestWithParam<testing::FamilyCase> {};

TEST_P(SandwichOracle, AvarMatches) {
  const auto& fc = GetParam();
  if (fc.periodic) GTEST_SKIP() << "lag sums diverge for periodic chains";
  const auto model = make_model(fc.spec);
  Rng rng(81);
  for (int trial = 0; trial < 3; ++trial) {
    const Vector theta = testing::random_theta(rng, *model, 0.1);
    for (const Method& m : {Method::ml(), Method::ql(2), Method::ql(3), Method::pl(1)}) {
      const Matrix lib = avar(*model, theta, m).sigma;
      const Matrix ref = oracle::sandwich(*model, theta, m);
      const double scale = std::max(1e-3, lib.cwiseAbs().maxCoeff());
      EXPECT_LT((lib - ref).cwiseAbs().maxCoeff() / scale, 5e-5) << fc.label << " " << m.label();
    }
  }
}

INSTANTIATE_TEST_SUITE_P(AllFamilies, SandwichOracle, ::testing::ValuesIn(testing::all_family_cases()),
                         [](const auto& info) {
                           std::string s = info.param.label;
                           for (char& c : s) c = c == '-' ? '_' : c;
                           return s;
                         });

TEST(SandwichOracle, PublishedAnchors) {
  // Ising at beta = 3, where the PL loss is largest.
  const auto ising = make_model({Family::Ising1D, 0, std::nullopt});
  Vector b(1);
  b << 3.0;
  EXPECT_NEAR(std::sqrt(oracle::sandwich(*ising, b, Method::pl(1))(0, 0)), 11.068, 5e-3);
  EXPECT_NEAR(std::sqrt(oracle::sandwich(*ising, b, Method::ml())(0, 0)), 4.705, 5e-3);
}

}  // namespace
}  // namespace chainlik
