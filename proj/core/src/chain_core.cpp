#include "chainlik/chain_core.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>
#include <set>

#include <Eigen/Eigenvalues>

#include "chainlik/error.hpp"

namespace chainlik {

// ---------------------------------------------------------------------------
// StateSpace

StateSpace::StateSpace(std::vector<std::string> labels) : labels_(std::move(labels)) {
  if (labels_.size() < 2) {
    throw Error(Errc::InvalidArgument, "state space needs at least two states");
  }
  std::set<std::string> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size()) {
    throw Error(Errc::InvalidArgument, "state labels must be pairwise distinct");
  }
}

StateSpace StateSpace::numbered(std::size_t size, int first) {
  std::vector<std::string> labels;
  labels.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    labels.push_back(std::to_string(first + static_cast<int>(i)));
  }
  return StateSpace(std::move(labels));
}

StateSpace StateSpace::dna() { return StateSpace({"A", "G", "C", "T"}); }

std::optional<std::size_t> StateSpace::index_of(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return i;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// TransitionMatrix

TransitionMatrix::TransitionMatrix(StateSpace states, Matrix p)
    : states_(std::move(states)), p_(std::move(p)) {
  const auto s = static_cast<Eigen::Index>(states_.size());
  if (p_.rows() != s || p_.cols() != s) {
    throw Error(Errc::InvalidArgument, "transition matrix shape does not match state space");
  }
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index b = 0; b < s; ++b) {
      const double v = p_(a, b);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        throw Error(Errc::InvalidArgument, "transition probability outside [0,1] at (" +
                                               std::to_string(a) + "," + std::to_string(b) + ")");
      }
    }
    if (std::abs(p_.row(a).sum() - 1.0) > kRowSumTolerance) {
      throw Error(Errc::InvalidArgument, "row " + std::to_string(a) + " does not sum to 1");
    }
  }
}

TransitionMatrix::TransitionMatrix(StateSpace states, Matrix p, NoCheck)
    : states_(std::move(states)), p_(std::move(p)) {}

TransitionMatrix TransitionMatrix::unchecked(StateSpace states, Matrix p) {
  return TransitionMatrix(std::move(states), std::move(p), NoCheck{});
}

bool is_irreducible(const Matrix& p) {
  const auto s = static_cast<std::size_t>(p.rows());
  // Strongly connected iff every state is reachable from 0 in the graph and
  // in its transpose.
  auto reaches_all = [&](bool transpose) {
    std::vector<char> seen(s, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    while (!stack.empty()) {
      const std::size_t a = stack.back();
      stack.pop_back();
      for (std::size_t b = 0; b < s; ++b) {
        const double w = transpose ? p(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a))
                                   : p(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        if (w > 0.0 && !seen[b]) {
          seen[b] = 1;
          stack.push_back(b);
        }
      }
    }
    return std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
  };
  return reaches_all(false) && reaches_all(true);
}

bool TransitionMatrix::is_irreducible() const { return chainlik::is_irreducible(p_); }

double TransitionMatrix::second_eigenvalue_modulus() const {
  Eigen::EigenSolver<Matrix> solver(p_, /*computeEigenvectors=*/false);
  const auto& ev = solver.eigenvalues();
  Eigen::Index unit = 0;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double d = std::abs(ev(i) - std::complex<double>(1.0, 0.0));
    if (d < best) {
      best = d;
      unit = i;
    }
  }
  double second = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (i != unit) second = std::max(second, std::abs(ev(i)));
  }
  return second;
}

bool TransitionMatrix::is_aperiodic() const {
  return second_eigenvalue_modulus() < 1.0 - kAperiodicityGap;
}

// ---------------------------------------------------------------------------
// Stationary distribution, powers, gamma

Vector stationary_vector(const Matrix& p) {
  const Eigen::Index s = p.rows();
  Matrix a = p.transpose() - Matrix::Identity(s, s);
  a.row(s - 1).setOnes();
  Vector rhs = Vector::Zero(s);
  rhs(s - 1) = 1.0;
  Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible()) {
    throw Error(Errc::Singular, "stationary equations are singular");
  }
  return lu.solve(rhs);
}

StationaryDistribution stationary_distribution(const TransitionMatrix& p) {
  if (!p.is_irreducible()) {
    throw Error(Errc::NotIrreducible, "transition matrix is not irreducible");
  }
  return {stationary_vector(p.matrix())};
}

Matrix matrix_power(const Matrix& p, unsigned k) {
  Matrix result = Matrix::Identity(p.rows(), p.cols());
  Matrix base = p;
  while (k > 0) {
    if (k & 1u) result = result * base;
    k >>= 1u;
    if (k > 0) base = base * base;
  }
  return result;
}

TransitionMatrix k_step(const TransitionMatrix& p, unsigned k) {
  return TransitionMatrix::unchecked(p.states(), matrix_power(p.matrix(), k));
}

GammaMatrices gamma_matrices(const Matrix& p, const Vector& pi, bool periodic) {
  const Eigen::Index s = p.rows();
  const Matrix limit = Vector::Ones(s) * pi.transpose();
  const Matrix identity = Matrix::Identity(s, s);
  Eigen::FullPivLU<Matrix> lu(identity - p + limit);
  if (!lu.isInvertible()) {
    throw Error(Errc::Singular, "fundamental matrix I - P + 1 pi^T is singular");
  }
  GammaMatrices g;
  g.gamma = lu.inverse() - limit;
  g.gamma_bar = g.gamma - (identity - limit);
  g.periodic = periodic;
  return g;
}

GammaMatrices gamma_matrices(const TransitionMatrix& p, Periodicity periodicity) {
  const Vector pi = stationary_distribution(p).pi;
  const bool periodic = !p.is_aperiodic();
  if (periodic && periodicity == Periodicity::Reject) {
    throw Error(Errc::NotAperiodic, "gamma series diverges for a periodic chain");
  }
  return gamma_matrices(p.matrix(), pi, periodic);
}

Matrix gamma_series(const TransitionMatrix& p, double term_tolerance, std::size_t max_terms) {
  const Vector pi = stationary_distribution(p).pi;
  if (!p.is_aperiodic()) {
    throw Error(Errc::NotAperiodic, "gamma series diverges for a periodic chain");
  }
  const Eigen::Index s = p.matrix().rows();
  const Matrix limit = Vector::Ones(s) * pi.transpose();
  Matrix power = Matrix::Identity(s, s);
  Matrix sum = Matrix::Zero(s, s);
  for (std::size_t k = 0; k < max_terms; ++k) {
    const Matrix term = power - limit;
    sum += term;
    if (term.cwiseAbs().maxCoeff() < term_tolerance) return sum;
    power = power * p.matrix();
  }
  throw Error(Errc::NoConvergence, "gamma series did not reach the term tolerance");
}

// ---------------------------------------------------------------------------
// TupleCounts

namespace {

std::size_t checked_cell_count(std::size_t num_states, unsigned order) {
  if (order < 1) throw Error(Errc::InvalidArgument, "tuple order must be >= 1");
  if (num_states < 2) throw Error(Errc::InvalidArgument, "need at least two states");
  if (order <= 4 && num_states > kMaxDenseStates) {
    throw Error(Errc::InvalidArgument, "dense counts support at most 26 states");
  }
  std::size_t cells = 1;
  for (unsigned i = 0; i < order; ++i) {
    if (cells > (std::size_t{1} << 40) / num_states) {
      throw Error(Errc::InvalidArgument, "tuple count array too large");
    }
    cells *= num_states;
  }
  return cells;
}

}  // namespace

TupleCounts::TupleCounts(std::size_t num_states, unsigned order)
    : num_states_(num_states),
      order_(order),
      cells_(checked_cell_count(num_states, order), 0.0) {}

TupleCounts::TupleCounts(std::size_t num_states, unsigned order, std::vector<double> cells)
    : num_states_(num_states), order_(order), cells_(std::move(cells)) {
  if (cells_.size() != checked_cell_count(num_states, order)) {
    throw Error(Errc::InvalidArgument, "cell vector size does not match S^m");
  }
  for (double c : cells_) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw Error(Errc::InvalidArgument, "counts must be finite and nonnegative");
    }
  }
}

TupleCounts TupleCounts::from_matrix(const Matrix& pair_counts) {
  if (pair_counts.rows() != pair_counts.cols()) {
    throw Error(Errc::InvalidArgument, "pair count matrix must be square");
  }
  const auto s = static_cast<std::size_t>(pair_counts.rows());
  std::vector<double> cells(s * s);
  for (std::size_t a = 0; a < s; ++a) {
    for (std::size_t b = 0; b < s; ++b) {
      cells[a * s + b] = pair_counts(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
  }
  return TupleCounts(s, 2, std::move(cells));
}

double TupleCounts::n_effective() const {
  double total = 0.0;
  for (double c : cells_) total += c;
  return total;
}

std::size_t TupleCounts::flat_index(std::span<const std::size_t> tuple) const {
  if (tuple.size() != order_) throw Error(Errc::OrderMismatch, "tuple length != order");
  std::size_t flat = 0;
  for (std::size_t v : tuple) {
    if (v >= num_states_) throw Error(Errc::InvalidArgument, "state index out of range");
    flat = flat * num_states_ + v;
  }
  return flat;
}

std::vector<std::size_t> TupleCounts::tuple_of(std::size_t flat) const {
  std::vector<std::size_t> tuple(order_);
  for (unsigned i = order_; i-- > 0;) {
    tuple[i] = flat % num_states_;
    flat /= num_states_;
  }
  return tuple;
}

double TupleCounts::at(std::span<const std::size_t> tuple) const {
  return cells_[flat_index(tuple)];
}

double TupleCounts::operator()(std::size_t a, std::size_t b) const {
  const std::size_t t[] = {a, b};
  return at(t);
}

double TupleCounts::operator()(std::size_t a, std::size_t b, std::size_t c) const {
  const std::size_t t[] = {a, b, c};
  return at(t);
}

TupleCounts TupleCounts::marginalize_last() const {
  if (order_ < 2) throw Error(Errc::OrderMismatch, "cannot marginalize order-1 counts");
  TupleCounts out(num_states_, order_ - 1);
  for (std::size_t flat = 0; flat < cells_.size(); ++flat) {
    out.cells_[flat / num_states_] += cells_[flat];
  }
  return out;
}

TupleCounts TupleCounts::marginalize_first() const {
  if (order_ < 2) throw Error(Errc::OrderMismatch, "cannot marginalize order-1 counts");
  TupleCounts out(num_states_, order_ - 1);
  const std::size_t stride = out.cells_.size();
  for (std::size_t flat = 0; flat < cells_.size(); ++flat) {
    out.cells_[flat % stride] += cells_[flat];
  }
  return out;
}

TupleCounts TupleCounts::truncate_to(unsigned order) const {
  if (order > order_) throw Error(Errc::OrderMismatch, "cannot raise count order");
  TupleCounts out = *this;
  while (out.order_ > order) out = out.marginalize_last();
  return out;
}

Matrix TupleCounts::end_marginal() const {
  if (order_ < 2) throw Error(Errc::OrderMismatch, "end marginal needs order >= 2");
  const auto s = static_cast<Eigen::Index>(num_states_);
  Matrix out = Matrix::Zero(s, s);
  std::size_t inner = 1;
  for (unsigned i = 0; i + 1 < order_; ++i) inner *= num_states_;
  // flat = first * S^(m-1) + middle * S + last
  for (std::size_t flat = 0; flat < cells_.size(); ++flat) {
    const auto first = static_cast<Eigen::Index>(flat / inner);
    const auto last = static_cast<Eigen::Index>(flat % num_states_);
    out(first, last) += cells_[flat];
  }
  return out;
}

Matrix TupleCounts::as_matrix() const {
  if (order_ != 2) throw Error(Errc::OrderMismatch, "as_matrix needs order-2 counts");
  const auto s = static_cast<Eigen::Index>(num_states_);
  Matrix out(s, s);
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index b = 0; b < s; ++b) {
      out(a, b) = cells_[static_cast<std::size_t>(a * s + b)];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simulation and counting

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

namespace {

std::uint32_t draw(std::mt19937_64& engine, std::span<const double> cumulative) {
  const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
  for (std::size_t b = 0; b + 1 < cumulative.size(); ++b) {
    if (u < cumulative[b]) return static_cast<std::uint32_t>(b);
  }
  return static_cast<std::uint32_t>(cumulative.size() - 1);
}

}  // namespace

ChainPath simulate(const TransitionMatrix& p, std::size_t n, InitialState init,
                   std::uint64_t seed) {
  if (n < 1) throw Error(Errc::InvalidArgument, "simulate needs n >= 1");
  const std::size_t s = p.size();
  std::vector<double> cumulative(s * s);
  for (std::size_t a = 0; a < s; ++a) {
    double acc = 0.0;
    for (std::size_t b = 0; b < s; ++b) {
      acc += p(a, b);
      cumulative[a * s + b] = acc;
    }
  }
  std::mt19937_64 engine(seed);
  ChainPath path{p.states(), {}, seed};
  path.x.resize(n + 1);
  if (init.kind == InitialState::Kind::Stationary) {
    const Vector pi = stationary_distribution(p).pi;
    std::vector<double> start(s);
    double acc = 0.0;
    for (std::size_t a = 0; a < s; ++a) {
      acc += std::max(0.0, pi(static_cast<Eigen::Index>(a)));
      start[a] = acc;
    }
    path.x[0] = draw(engine, start);
  } else {
    if (init.state >= s) throw Error(Errc::InvalidArgument, "initial state out of range");
    path.x[0] = static_cast<std::uint32_t>(init.state);
  }
  for (std::size_t i = 1; i <= n; ++i) {
    path.x[i] = draw(engine, std::span<const double>(cumulative).subspan(path.x[i - 1] * s, s));
  }
  return path;
}

TupleCounts count_tuples(std::span<const std::uint32_t> x, std::size_t num_states, unsigned m) {
  if (m < 1) throw Error(Errc::InvalidArgument, "tuple order must be >= 1");
  if (x.size() < m) {
    throw Error(Errc::PathTooShort, "path of length " + std::to_string(x.size()) +
                                        " is shorter than tuple order " + std::to_string(m));
  }
  TupleCounts counts(num_states, m);
  std::size_t modulus = 1;
  for (unsigned i = 0; i + 1 < m; ++i) modulus *= num_states;
  // Rolling index over the window.
  std::size_t flat = 0;
  for (unsigned i = 0; i + 1 < m; ++i) flat = flat * num_states + x[i];
  for (std::size_t i = m - 1; i < x.size(); ++i) {
    flat = (flat % modulus) * num_states + x[i];
    counts.cell(flat) += 1.0;
  }
  return counts;
}

TupleCounts count_tuples(const ChainPath& path, unsigned m) {
  for (std::uint32_t v : path.x) {
    if (v >= path.states.size()) throw Error(Errc::InvalidArgument, "path entry out of range");
  }
  return count_tuples(path.x, path.states.size(), m);
}

}  // namespace chainlik
