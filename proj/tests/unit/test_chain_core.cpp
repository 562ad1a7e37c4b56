#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "chainlik/chain_core.hpp"
#include "chainlik/error.hpp"
#include "chainlik/model_zoo.hpp"
#include "generators.hpp"
#include "oracles.hpp"

namespace chainlik {
namespace {

using testing::Rng;

Matrix two_state(double a, double b) {
  Matrix p(2, 2);
  p << 1 - a, a, b, 1 - b;
  return p;
}

TEST(StateSpace, RejectsDegenerateLabels) {
  EXPECT_THROW(StateSpace({"x"}), Error);
  EXPECT_THROW(StateSpace({"x", "x"}), Error);
  const StateSpace dna = StateSpace::dna();
  EXPECT_EQ(dna.labels(), (std::vector<std::string>{"A", "G", "C", "T"}));
  EXPECT_EQ(dna.index_of("C"), 2u);
  EXPECT_FALSE(dna.index_of("U").has_value());
  EXPECT_EQ(StateSpace::numbered(3).label(0), "1");
}

TEST(TransitionMatrix, ValidatesRows) {
  Matrix bad = two_state(0.3, 0.4);
  bad(0, 0) += 1e-6;
  EXPECT_THROW(TransitionMatrix(StateSpace::numbered(2), bad), Error);
  Matrix negative = two_state(0.3, 0.4);
  negative(0, 0) = -0.1;
  negative(0, 1) = 1.1;
  EXPECT_THROW(TransitionMatrix(StateSpace::numbered(2), negative), Error);
  EXPECT_THROW(TransitionMatrix(StateSpace::numbered(3), two_state(0.3, 0.4)), Error);
}

TEST(TransitionMatrix, IrreducibilityAndPeriod) {
  const TransitionMatrix ok(StateSpace::numbered(2), two_state(0.3, 0.4));
  EXPECT_TRUE(ok.is_irreducible());
  EXPECT_TRUE(ok.is_aperiodic());
  const TransitionMatrix absorbing(StateSpace::numbered(2), two_state(0.0, 0.4));
  EXPECT_FALSE(absorbing.is_irreducible());
  try {
    stationary_distribution(absorbing);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotIrreducible);
  }
  const TransitionMatrix flip(StateSpace::numbered(2), two_state(1.0, 1.0));
  EXPECT_TRUE(flip.is_irreducible());
  EXPECT_FALSE(flip.is_aperiodic());
  EXPECT_NEAR(flip.second_eigenvalue_modulus(), 1.0, 1e-12);
}

TEST(Stationary, TwoStateClosedForm) {
  const auto pi = stationary_distribution(TransitionMatrix(StateSpace::numbered(2), two_state(0.2, 0.6))).pi;
  EXPECT_NEAR(pi(0), 0.6 / 0.8, 1e-14);
  EXPECT_NEAR(pi(1), 0.2 / 0.8, 1e-14);
}

TEST(Stationary, MatchesPowerOracleOnRandomMatrices) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t s = 2 + trial % 6;
    const Matrix p = testing::random_stochastic(rng, s);
    const Vector pi = stationary_distribution(TransitionMatrix(StateSpace::numbered(s), p)).pi;
    EXPECT_NEAR((pi - oracle::stationary_by_powers(p)).cwiseAbs().maxCoeff(), 0.0, 1e-12) << "trial " << trial;
    EXPECT_NEAR(pi.sum(), 1.0, 1e-14);
    EXPECT_NEAR((pi.transpose() * p - pi.transpose()).cwiseAbs().maxCoeff(), 0.0, 1e-13);
  }
}

TEST(KStep, AgreesWithRepeatedProducts) {
  Rng rng(3);
  const Matrix p = testing::random_stochastic(rng, 4);
  const TransitionMatrix tm(StateSpace::numbered(4), p);
  Matrix acc = Matrix::Identity(4, 4);
  for (unsigned k = 0; k <= 9; ++k) {
    EXPECT_NEAR((k_step(tm, k).matrix() - acc).cwiseAbs().maxCoeff(), 0.0, 1e-14) << k;
    acc = acc * p;
  }
}

TEST(Gamma, MatchesBruteForceSeries) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t s = 2 + trial % 4;
    const Matrix p = testing::random_stochastic(rng, s, 0.05);
    const TransitionMatrix tm(StateSpace::numbered(s), p);
    const GammaMatrices g = gamma_matrices(tm);
    const Matrix brute = oracle::gamma_brute_force(p, 4000);
    EXPECT_NEAR((g.gamma - brute).cwiseAbs().maxCoeff(), 0.0, 1e-10) << "trial " << trial;
    const Vector pi = oracle::stationary_by_powers(p);
    const Matrix k0 = Matrix::Identity(s, s) - Vector::Ones(s) * pi.transpose();
    EXPECT_NEAR((g.gamma_bar - (g.gamma - k0)).cwiseAbs().maxCoeff(), 0.0, 1e-12);
    EXPECT_NEAR((gamma_series(tm) - g.gamma).cwiseAbs().maxCoeff(), 0.0, 1e-11);
    EXPECT_FALSE(g.periodic);
  }
}

TEST(Gamma, RowsAndStationaryProjectionVanish) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix p = testing::random_stochastic(rng, 5);
    const TransitionMatrix tm(StateSpace::numbered(5), p);
    const Matrix g = gamma_matrices(tm).gamma;
    const Vector pi = stationary_distribution(tm).pi;
    EXPECT_LT(g.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((pi.transpose() * g).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Gamma, PeriodicChainsNeedCesaro) {
  const auto walk = make_model({Family::ReflectingWalk, 5, std::nullopt});
  Vector theta(1);
  theta << 0.4;
  const TransitionMatrix p = walk->transition_matrix(theta);
  EXPECT_FALSE(p.is_aperiodic());
  try {
    gamma_matrices(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotAperiodic);
  }
  EXPECT_THROW(gamma_series(p), Error);
  const GammaMatrices g = gamma_matrices(p, Periodicity::CesaroLimit);
  EXPECT_TRUE(g.periodic);
  // The Cesaro value still has vanishing rows and solves (I - P) gamma = I - 1 pi^T.
  const Vector pi = stationary_distribution(p).pi;
  const Matrix residual = (Matrix::Identity(5, 5) - p.matrix()) * g.gamma -
                          (Matrix::Identity(5, 5) - Vector::Ones(5) * pi.transpose());
  EXPECT_LT(residual.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(g.gamma.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Simulate, DeterministicGivenSeed) {
  const TransitionMatrix p(StateSpace::numbered(2), two_state(0.3, 0.4));
  const ChainPath a = simulate(p, 200, InitialState::stationary(), 42);
  const ChainPath b = simulate(p, 200, InitialState::stationary(), 42);
  const ChainPath c = simulate(p, 200, InitialState::stationary(), 43);
  EXPECT_EQ(a.x, b.x);
  EXPECT_NE(a.x, c.x);
  EXPECT_EQ(a.transitions(), 200u);
  EXPECT_EQ(a.seed, 42u);
  const ChainPath fixed = simulate(p, 5, InitialState::fixed(1), 1);
  EXPECT_EQ(fixed.x.front(), 1u);
}

TEST(Simulate, NeverTakesZeroProbabilityMoves) {
  const auto walk = make_model({Family::ReflectingWalk, 6, std::nullopt});
  Vector theta(1);
  theta << 0.3;
  const TransitionMatrix p = walk->transition_matrix(theta);
  const ChainPath path = simulate(p, 5000, InitialState::stationary(), 9);
  for (std::size_t t = 1; t < path.x.size(); ++t) EXPECT_GT(p(path.x[t - 1], path.x[t]), 0.0);
}

TEST(Simulate, FrequenciesConvergeToStationary) {
  Rng rng(21);
  const Matrix m = testing::random_stochastic(rng, 3);
  const TransitionMatrix p(StateSpace::numbered(3), m);
  const ChainPath path = simulate(p, 400000, InitialState::stationary(), 77);
  const TupleCounts ones = count_tuples(path, 1);
  const Vector pi = stationary_distribution(p).pi;
  for (std::size_t a = 0; a < 3; ++a) {
    EXPECT_NEAR(ones.cell(a) / ones.n_effective(), pi(static_cast<Eigen::Index>(a)), 5e-3);
  }
}

TEST(Counts, WindowTotalsAndMarginals) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t s = 2 + trial % 3;
    const TransitionMatrix p(StateSpace::numbered(s), testing::random_stochastic(rng, s));
    const std::size_t n = 30 + static_cast<std::size_t>(trial) * 7;
    const ChainPath path = simulate(p, n, InitialState::stationary(), 100 + static_cast<std::uint64_t>(trial));
    for (unsigned m = 1; m <= 4; ++m) {
      EXPECT_DOUBLE_EQ(count_tuples(path, m).n_effective(), static_cast<double>(n - m + 2));
    }
    const TupleCounts pairs = count_tuples(path, 2);
    const TupleCounts triples = count_tuples(path, 3);
    // Triplet windows drop the final pair; the first-axis marginal drops the first.
    TupleCounts expected_last = pairs;
    expected_last.cell(path.x[n - 1] * s + path.x[n]) -= 1;
    TupleCounts expected_first = pairs;
    expected_first.cell(path.x[0] * s + path.x[1]) -= 1;
    const TupleCounts last = triples.marginalize_last();
    const TupleCounts first = triples.marginalize_first();
    for (std::size_t c = 0; c < pairs.num_cells(); ++c) {
      EXPECT_DOUBLE_EQ(last.cell(c), expected_last.cell(c));
      EXPECT_DOUBLE_EQ(first.cell(c), expected_first.cell(c));
    }
    EXPECT_DOUBLE_EQ(triples.truncate_to(2).n_effective(), static_cast<double>(n - 1));
    const Matrix ends = triples.end_marginal();
    EXPECT_DOUBLE_EQ(ends.sum(), triples.n_effective());
  }
}

TEST(Counts, FlatIndexRoundTrip) {
  const TupleCounts c(4, 3);
  std::set<std::size_t> seen;
  for (std::size_t flat = 0; flat < c.num_cells(); ++flat) {
    const auto t = c.tuple_of(flat);
    ASSERT_EQ(t.size(), 3u);
    EXPECT_EQ(c.flat_index(t), flat);
    EXPECT_EQ(flat, (t[0] * 4 + t[1]) * 4 + t[2]);
    seen.insert(flat);
  }
  EXPECT_EQ(seen.size(), 64u);
}

TEST(Counts, MatrixRoundTripAndErrors) {
  Matrix n(2, 2);
  n << 1, 2, 3, 4;
  const TupleCounts c = TupleCounts::from_matrix(n);
  EXPECT_EQ(c.as_matrix(), n);
  EXPECT_DOUBLE_EQ(c(1, 0), 3.0);
  EXPECT_THROW(TupleCounts(2, 2, {1.0, -1.0, 0.0, 0.0}), Error);
  EXPECT_THROW(TupleCounts(2, 2, {1.0, 2.0}), Error);
  try {
    TupleCounts(2, 2).truncate_to(3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::OrderMismatch);
  }
  const ChainPath shortpath{StateSpace::numbered(2), {0, 1}, std::nullopt};
  try {
    count_tuples(shortpath, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::PathTooShort);
  }
}

TEST(DeriveSeed, DistinctStreams) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t r = 0; r < 1000; ++r) seeds.insert(derive_seed(61, r));
  EXPECT_EQ(seeds.size(), 1000u);
  EXPECT_EQ(derive_seed(61, 5), derive_seed(61, 5));
  EXPECT_NE(derive_seed(61, 5), derive_seed(62, 5));
}

}  // namespace
}  // namespace chainlik
