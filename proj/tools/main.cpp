// chainlik command-line tool. Options given on the command line override the
// values loaded through --config.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "chainlik_cli/commands.hpp"

namespace {

using namespace chainlik;
using namespace chainlik::cli;

/// Flags shared by the commands that build a RunConfig.
struct CommonFlags {
  std::string config_path;
  std::string save_path;
  std::optional<std::string> model, theta, method, known_p;
  std::optional<std::size_t> states, n, reps, n_starts;
  std::optional<std::uint64_t> seed;
  bool allow_periodic = false;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON run configuration");
    app->add_option("--save-config", save_path, "Write the effective configuration to this file");
    app->add_option("--model", model, "Model family");
    app->add_option("--states", states, "Number of states (equicorrelation, reflecting-walk, saturated)");
    app->add_option("--known-p", known_p, "Fixed equilibrium p as a comma list (equicorrelation)");
    app->add_option("--theta", theta, "Parameter vector as a comma list");
    app->add_option("--method", method, "ml, pl, plM, ql or qlK");
    app->add_option("--seed", seed, "Random seed");
    app->add_option("--n", n, "Number of transitions");
    app->add_option("--reps", reps, "Monte Carlo replications");
    app->add_option("--n-starts", n_starts, "Optimizer starting points");
    app->add_flag("--allow-periodic", allow_periodic, "Accept periodic chains (Cesaro-limit ingredients)");
  }

  RunConfig build() const {
    RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (model) {
      const auto f = parse_family(*model);
      if (!f) throw Error(Errc::Config, "unknown model '" + *model + "'");
      c.model.family = *f;
    }
    if (states) c.model.num_states = *states;
    if (known_p) c.model.known_p = parse_vector(*known_p);
    if (theta) c.theta = parse_vector(*theta);
    if (method) c.method = parse_method(*method);
    if (seed) c.seed = *seed;
    if (n) c.n = *n;
    if (reps) c.reps = *reps;
    if (n_starts) c.fit.n_starts = *n_starts;
    if (allow_periodic) c.allow_periodic = true;
    c.validate();
    if (!save_path.empty()) save_config(c, save_path);
    return c;
  }
};

void emit(const std::string& text, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << text;
  } else {
    write_file_atomic(out, text);
  }
}

std::vector<unsigned> parse_orders(const std::string& text) {
  std::vector<unsigned> out;
  for (const double v : parse_vector(text)) {
    if (v < 2 || v != static_cast<unsigned>(v)) throw Error(Errc::Config, "QL orders are integers >= 2");
    out.push_back(static_cast<unsigned>(v));
  }
  return out;
}

int run(int argc, char** argv) {
  CLI::App app{"Likelihood-based estimation for parametric Markov chains"};
  app.require_subcommand(1);

  // simulate
  CommonFlags sim_flags;
  std::string sim_out, sim_alphabet;
  auto* sim = app.add_subcommand("simulate", "Simulate a stationary chain and write a sequence file");
  sim_flags.attach(sim);
  sim->add_option("--out", sim_out, "Output file (default stdout)");
  sim->add_option("--alphabet", sim_alphabet, "integers or dna");

  // fit
  CommonFlags fit_flags;
  std::string fit_input, fit_counts, fit_out, fit_format = "kv";
  auto* fitc = app.add_subcommand("fit", "Fit a model to a sequence file or a pair-count matrix");
  fit_flags.attach(fitc);
  auto* in_opt = fitc->add_option("--input", fit_input, "Sequence file");
  fitc->add_option("--counts", fit_counts, "Pair-count matrix file")->excludes(in_opt);
  fitc->add_option("--format", fit_format, "kv, human or both")->check(CLI::IsMember({"kv", "human", "both"}));
  fitc->add_option("--out", fit_out, "Output file (default stdout)");

  // avar
  CommonFlags avar_flags;
  std::string avar_out;
  bool avar_human = false;
  auto* av = app.add_subcommand("avar", "Limit standard deviations and efficiencies at theta");
  avar_flags.attach(av);
  av->add_option("--out", avar_out, "Output CSV (default stdout)");
  av->add_flag("--human", avar_human, "Aligned table instead of CSV");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Parameter sweeps");
  sweep->require_subcommand(1);
  CommonFlags grid_flags, order_flags;
  std::vector<std::string> grid_axes, order_axes;
  std::string grid_out, order_out, order_list = "2,3,4", lf_out, lf_eps, lf_base;
  auto* grid = sweep->add_subcommand("are-grid", "Limit variances and ARE on a parameter grid");
  grid_flags.attach(grid);
  grid->add_option("--grid", grid_axes, "Axis name=lo:hi:step (repeatable)");
  grid->add_option("--out", grid_out, "Output CSV (default stdout)");
  auto* order = sweep->add_subcommand("ql-order", "ARE of QL by order on a parameter grid");
  order_flags.attach(order);
  order->add_option("--grid", order_axes, "Axis name=lo:hi:step (repeatable)");
  order->add_option("--orders", order_list, "QL orders as a comma list");
  order->add_option("--out", order_out, "Output CSV (default stdout)");
  std::size_t lf_starts = 5;
  auto* lf = sweep->add_subcommand("least-false", "Least-false Kimura4 parameters under a Kimura6 truth");
  lf->add_option("--eps-grid", lf_eps, "Epsilon values as a comma list");
  lf->add_option("--base", lf_base, "Base (alpha,beta,gamma,delta)");
  lf->add_option("--n-starts", lf_starts, "Optimizer starting points");
  lf->add_option("--out", lf_out, "Output CSV (default stdout)");

  // reproduce
  std::string rep_id;
  ReproduceOptions rep;
  std::string rep_base;
  auto* repc = app.add_subcommand("reproduce", "Regenerate a reference table");
  repc->add_option("id", rep_id, "Table id")->required()->check(CLI::IsMember(reproduce_ids()));
  repc->add_option("--out", rep.out_dir, "Output directory");
  repc->add_option("--seed", rep.seed, "Monte Carlo seed");
  repc->add_option("--reps", rep.reps, "Monte Carlo replications");
  repc->add_option("--n", rep.n, "Transitions per replication");
  repc->add_option("--base", rep_base, "Sweep base (alpha,beta,gamma,delta)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (sim->parsed()) {
    RunConfig c = sim_flags.build();
    if (!sim_out.empty()) c.output = sim_out;
    const std::optional<Alphabet> alphabet =
        sim_alphabet.empty() ? std::nullopt : std::optional<Alphabet>(parse_alphabet(sim_alphabet));
    emit(simulate_text(c, alphabet), c.output);
    return kExitOk;
  }

  if (fitc->parsed()) {
    RunConfig c = fit_flags.build();
    if (!fit_input.empty()) c.input = fit_input;
    if (!fit_out.empty()) c.output = fit_out;
    std::optional<TupleCounts> counts;
    std::optional<StateSpace> states;
    const auto model = make_model(c.model);
    if (!fit_counts.empty()) {
      counts = TupleCounts::from_matrix(read_count_matrix(fit_counts));
      states = model->states();
    } else {
      if (c.input.empty()) throw Error(Errc::Config, "fit needs --input or --counts");
      const SequenceFile file =
          read_sequence(c.input, default_alphabet(c.model.family) == Alphabet::Dna ? std::optional(Alphabet::Dna)
                                                                                 : std::nullopt,
                        model->num_states());
      counts = counts_for(file.parsed, c.method);
      states = file.parsed.states;
    }
    const FitReport report = cmd_fit(*counts, *states, c);
    std::string text;
    if (fit_format != "human") text += report.machine().to_string();
    if (fit_format != "kv") text += report.human();
    emit(text, c.output);
    return report.fit.converged ? kExitOk : kExitNoConvergence;
  }

  if (av->parsed()) {
    const RunConfig c = avar_flags.build();
    const CsvTable t = cmd_avar(c);
    emit(avar_human ? t.to_human() : t.to_csv(), avar_out.empty() ? c.output : avar_out);
    return kExitOk;
  }

  if (grid->parsed()) {
    const RunConfig c = grid_flags.build();
    std::vector<GridAxis> axes;
    for (const auto& a : grid_axes) axes.push_back(parse_grid_axis(a));
    emit(sweep_are_grid(c, axes).to_csv(), grid_out.empty() ? c.output : grid_out);
    return kExitOk;
  }

  if (order->parsed()) {
    const RunConfig c = order_flags.build();
    std::vector<GridAxis> axes;
    for (const auto& a : order_axes) axes.push_back(parse_grid_axis(a));
    emit(sweep_ql_order(c, axes, parse_orders(order_list)).to_csv(), order_out.empty() ? c.output : order_out);
    return kExitOk;
  }

  if (lf->parsed()) {
    std::vector<double> eps = default_eps_grid();
    if (!lf_eps.empty()) {
      const Vector v = parse_vector(lf_eps);
      eps.assign(v.data(), v.data() + v.size());
    }
    const Vector base = lf_base.empty() ? default_sweep_base() : parse_vector(lf_base);
    FitOptions fo;
    fo.n_starts = lf_starts;
    emit(sweep_least_false(eps, base, fo).to_csv(), lf_out);
    return kExitOk;
  }

  if (repc->parsed()) {
    if (!rep_base.empty()) rep.sweep_base = parse_vector(rep_base);
    for (const auto& path : cmd_reproduce(rep_id, rep)) std::cout << path << '\n';
    return kExitOk;
  }
  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const chainlik::Error& e) {
    std::cerr << "chainlik: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "chainlik: " << e.what() << '\n';
    return kExitData;
  }
}
