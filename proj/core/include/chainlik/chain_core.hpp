#pragma once

// Finite-state Markov chain fundamentals: state spaces, transition matrices,
// stationary distributions, multi-step probabilities, the accumulated
// deviation matrices gamma / gamma-bar, simulation and tuple counting.
//
// State indices are zero-based everywhere in the library. The sequence file
// format used by the CLI is one-based; the conversion lives in io.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace chainlik {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Tolerance on row sums accepted by TransitionMatrix.
inline constexpr double kRowSumTolerance = 1e-12;
/// A chain is treated as aperiodic when every eigenvalue other than the unit
/// one has modulus below 1 - kAperiodicityGap.
inline constexpr double kAperiodicityGap = 1e-12;
/// Largest state space for which dense tuple counts of order <= 4 are allowed.
inline constexpr std::size_t kMaxDenseStates = 26;

class StateSpace {
 public:
  explicit StateSpace(std::vector<std::string> labels);

  /// Labels "first", "first+1", ... as decimal strings.
  static StateSpace numbered(std::size_t size, int first = 1);
  /// The nucleotide alphabet in the row order A, G, C, T.
  static StateSpace dna();

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(std::size_t index) const { return labels_.at(index); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::optional<std::size_t> index_of(std::string_view label) const;

  bool operator==(const StateSpace&) const = default;

 private:
  std::vector<std::string> labels_;
};

class TransitionMatrix {
 public:
  /// Validates shape, entry range [0,1] and row sums (within kRowSumTolerance).
  TransitionMatrix(StateSpace states, Matrix p);

  /// Skips validation; for matrices produced internally whose rows are
  /// stochastic up to accumulated rounding (e.g. high matrix powers).
  static TransitionMatrix unchecked(StateSpace states, Matrix p);

  const StateSpace& states() const noexcept { return states_; }
  const Matrix& matrix() const noexcept { return p_; }
  std::size_t size() const noexcept { return states_.size(); }
  double operator()(std::size_t a, std::size_t b) const { return p_(a, b); }

  /// Strong connectivity of the digraph with an edge a->b whenever p(a,b) > 0.
  bool is_irreducible() const;
  /// Largest modulus among eigenvalues after removing the one closest to 1.
  double second_eigenvalue_modulus() const;
  bool is_aperiodic() const;

 private:
  struct NoCheck {};
  TransitionMatrix(StateSpace states, Matrix p, NoCheck);

  StateSpace states_;
  Matrix p_;
};

struct StationaryDistribution {
  Vector pi;
};

/// gamma(a,b) = sum_{k>=0} (p^(k)(a,b) - pi_b); gamma_bar drops the k = 0 term.
struct GammaMatrices {
  Matrix gamma;
  Matrix gamma_bar;
  /// True when the chain is periodic and the values are the Cesaro limits of
  /// the partial sums rather than an absolutely convergent series.
  bool periodic = false;
};

enum class Periodicity {
  Reject,       ///< throw NotAperiodic for periodic chains
  CesaroLimit,  ///< return the fundamental-matrix value (Cesaro limit)
};

struct ChainPath {
  StateSpace states;
  std::vector<std::uint32_t> x;  ///< x_0, ..., x_n
  std::optional<std::uint64_t> seed;

  /// Number of transitions n (path length minus one).
  std::size_t transitions() const noexcept { return x.empty() ? 0 : x.size() - 1; }
};

/// Dense counts of m-tuples (x_i, ..., x_{i+m-1}). Cells are stored row-major
/// with the first tuple element most significant. Cells are real so that
/// expected counts (population weights) can share the same representation.
class TupleCounts {
 public:
  TupleCounts(std::size_t num_states, unsigned order);
  TupleCounts(std::size_t num_states, unsigned order, std::vector<double> cells);

  /// Order-2 counts from an S x S matrix N(a,b).
  static TupleCounts from_matrix(const Matrix& pair_counts);

  unsigned order() const noexcept { return order_; }
  std::size_t num_states() const noexcept { return num_states_; }
  std::size_t num_cells() const noexcept { return cells_.size(); }
  /// Total of all cells; equals the number of counted windows for path data.
  double n_effective() const;

  std::span<const double> cells() const noexcept { return cells_; }
  double& cell(std::size_t flat) { return cells_[flat]; }
  double cell(std::size_t flat) const { return cells_[flat]; }
  double at(std::span<const std::size_t> tuple) const;
  double operator()(std::size_t a, std::size_t b) const;
  double operator()(std::size_t a, std::size_t b, std::size_t c) const;
  std::size_t flat_index(std::span<const std::size_t> tuple) const;
  /// Inverse of flat_index.
  std::vector<std::size_t> tuple_of(std::size_t flat) const;

  /// Sum over the last axis (order - 1 result).
  TupleCounts marginalize_last() const;
  /// Sum over the first axis (order - 1 result).
  TupleCounts marginalize_first() const;
  /// Repeatedly marginalize the last axis down to the requested order.
  TupleCounts truncate_to(unsigned order) const;
  /// N(a, ., ..., ., c): sum over all interior positions; order >= 2.
  Matrix end_marginal() const;
  /// Order-2 counts as an S x S matrix.
  Matrix as_matrix() const;

 private:
  std::size_t num_states_;
  unsigned order_;
  std::vector<double> cells_;
};

struct InitialState {
  enum class Kind { Stationary, Fixed };
  Kind kind = Kind::Stationary;
  std::size_t state = 0;

  static InitialState stationary() { return {}; }
  static InitialState fixed(std::size_t a) { return {Kind::Fixed, a}; }
};

/// Solves pi (P - I) = 0 with the normalization sum(pi) = 1 replacing one
/// equation of the linear system.
StationaryDistribution stationary_distribution(const TransitionMatrix& p);
/// Same on a raw matrix; assumes the caller has checked irreducibility.
Vector stationary_vector(const Matrix& p);
/// Irreducibility test on a raw matrix (positive-entry digraph).
bool is_irreducible(const Matrix& p);

/// P^k by repeated squaring; P^0 is the identity.
TransitionMatrix k_step(const TransitionMatrix& p, unsigned k);
Matrix matrix_power(const Matrix& p, unsigned k);

/// gamma via the fundamental matrix Z = (I - P + 1 pi^T)^{-1}: gamma = Z - 1 pi^T.
GammaMatrices gamma_matrices(const TransitionMatrix& p,
                             Periodicity periodicity = Periodicity::Reject);
/// Raw-matrix variant used by the asymptotics code.
GammaMatrices gamma_matrices(const Matrix& p, const Vector& pi, bool periodic);

/// Truncated series sum_{k=0}^{K} (P^k - 1 pi^T), stopping once the max-abs of
/// a term drops below term_tolerance. Throws NotAperiodic for periodic chains
/// and NoConvergence if max_terms is reached first.
Matrix gamma_series(const TransitionMatrix& p, double term_tolerance = 1e-13,
                    std::size_t max_terms = 1'000'000);

/// Simulates x_0, ..., x_n. The path is a pure function of (P, n, init, seed):
/// a std::mt19937_64 engine is seeded with `seed`; each draw takes the top 53
/// bits of one engine output as u in [0,1) and selects the first state whose
/// cumulative probability (in index order) exceeds u. x_0 uses pi for a
/// stationary start.
ChainPath simulate(const TransitionMatrix& p, std::size_t n, InitialState init,
                   std::uint64_t seed);

/// Sliding-window counts of m-tuples; n - m + 2 windows for a path with n
/// transitions.
TupleCounts count_tuples(const ChainPath& path, unsigned m);

/// Counts m-tuples of a raw index sequence (no validation of entries).
TupleCounts count_tuples(std::span<const std::uint32_t> x, std::size_t num_states,
                         unsigned m);

/// Derives an independent 64-bit stream seed (splitmix64 mixing of
/// seed and stream index).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace chainlik
