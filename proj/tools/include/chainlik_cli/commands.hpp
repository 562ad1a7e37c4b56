#pragma once

// The library behind each chainlik subcommand. Commands return their output
// as data; main.cpp decides where it goes.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "chainlik/asymptotics.hpp"
#include "chainlik/error.hpp"
#include "chainlik/misspec.hpp"
#include "chainlik_cli/config.hpp"
#include "chainlik_cli/io.hpp"
#include "chainlik_cli/report.hpp"

namespace chainlik::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitData = 2;
inline constexpr int kExitNoConvergence = 3;
inline constexpr int kExitConfig = 4;

int exit_code(Errc code) noexcept;

// ---------------------------------------------------------------------------
// simulate

/// DNA for the Kimura families, integers otherwise.
Alphabet default_alphabet(Family family) noexcept;

/// Simulates config.n transitions at config.theta from a stationary start
/// and renders the file with model, theta, n, seed and alphabet metadata.
std::string simulate_text(const RunConfig& config, std::optional<Alphabet> alphabet = std::nullopt);

// ---------------------------------------------------------------------------
// fit

struct FitReport {
  std::string family;
  Method method;
  FitResult fit;
  std::vector<std::string> names;
  std::vector<std::string> state_labels;
  double n = 0.0;                     ///< number of transitions in the data
  Vector sds;                         ///< sqrt(Sigma_jj / n) at theta_hat; empty on failure
  std::string sd_error;
  Vector equilibrium;                 ///< stationary distribution of P(theta_hat)

  KeyValueDoc machine() const;
  std::string human() const;
};

/// Fits config.method to the counts. Non-convergence is reported through
/// fit.converged rather than thrown.
FitReport cmd_fit(const TupleCounts& counts, const StateSpace& states, const RunConfig& config);

/// Counts of the order the method needs.
TupleCounts counts_for(const ChainPath& path, const Method& method);

// ---------------------------------------------------------------------------
// avar

/// Columns parameter, ml_sd, ql_sd, pl_sd, are_ql, are_pl, error; the sds
/// are limit standard deviations and are_x = var_ml / var_x. A method that
/// fails leaves its cells empty and names the reason in the error column.
CsvTable cmd_avar(const RunConfig& config);

// ---------------------------------------------------------------------------
// sweep

struct GridAxis {
  std::string name;
  double lo = 0.0, hi = 0.0, step = 0.0;

  std::vector<double> values() const;
};

/// "name=lo:hi:step"; a bare "name=value" is a single point.
GridAxis parse_grid_axis(const std::string& text);

/// Limit variances and ARE per parameter on the product grid. Parameters
/// not on an axis keep their config.theta value.
CsvTable sweep_are_grid(const RunConfig& config, const std::vector<GridAxis>& axes);

/// ARE of QL of each order against ML on the product grid.
CsvTable sweep_ql_order(const RunConfig& config, const std::vector<GridAxis>& axes,
                        const std::vector<unsigned>& orders);

/// Least-false Kimura4 parameters under the six-parameter truth.
CsvTable sweep_least_false(const std::vector<double>& eps, const Vector& base, const FitOptions& fit);

// ---------------------------------------------------------------------------
// reproduce

struct ReproduceOptions {
  std::string out_dir = ".";
  std::uint64_t seed = 61;
  std::size_t reps = 1000;
  std::size_t n = 500;
  /// Base (alpha, beta, gamma, delta) of the sweep.
  Vector sweep_base = default_sweep_base();
};

std::vector<std::string> reproduce_ids();

/// The table behind an id, without touching the filesystem.
CsvTable reproduce_table(const std::string& id, const ReproduceOptions& options);

/// Writes table_<id>.csv and manifest_<id>.json into out_dir; returns the
/// paths written.
std::vector<std::string> cmd_reproduce(const std::string& id, const ReproduceOptions& options);

/// Pair counts (vowel, consonant) from the Pushkin and English letter
/// sequences in the vowel/consonant study.
Matrix pushkin_counts();
Matrix english_counts();

}  // namespace chainlik::cli
