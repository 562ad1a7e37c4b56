#include "chainlik_cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

namespace chainlik::cli {

int exit_code(Errc code) noexcept {
  switch (code) {
    case Errc::NoConvergence:
    case Errc::TooManyFailures:
      return kExitNoConvergence;
    case Errc::Config:
    case Errc::InvalidSpec:
    case Errc::InvalidArgument:
    case Errc::OutOfDomain:
    case Errc::NotAperiodic:
    case Errc::NoClosedForm:
      return kExitConfig;
    default:
      return kExitData;
  }
}

namespace {

AsymptoticOptions asymptotic_options(const RunConfig& c) {
  AsymptoticOptions o;
  o.periodicity = c.allow_periodic ? Periodicity::CesaroLimit : Periodicity::Reject;
  return o;
}

std::string join(const Vector& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt_machine(v(i));
  return out;
}

const Vector& require_theta(const RunConfig& c) {
  if (!c.theta) throw Error(Errc::Config, "this command needs theta");
  return *c.theta;
}

/// Runs fn on every point of the product grid in row-major axis order.
void for_each_grid_point(const ParametricModel& model, const Vector& base, const std::vector<GridAxis>& axes,
                         const std::function<void(const Vector&, std::string_view)>& fn) {
  std::vector<Eigen::Index> index;
  std::vector<std::vector<double>> values;
  for (const GridAxis& a : axes) {
    const auto& names = model.theta_names();
    const auto it = std::find(names.begin(), names.end(), a.name);
    if (it == names.end()) throw Error(Errc::Config, "grid axis '" + a.name + "' is not a parameter of the model");
    index.push_back(static_cast<Eigen::Index>(it - names.begin()));
    values.push_back(a.values());
  }
  std::vector<std::size_t> pos(axes.size(), 0);
  while (true) {
    Vector theta = base;
    for (std::size_t i = 0; i < axes.size(); ++i) theta(index[i]) = values[i][pos[i]];
    std::string error;
    if (!model.in_domain(theta)) error = "outside domain";
    fn(theta, error);
    std::size_t i = axes.size();
    while (i > 0) {
      --i;
      if (++pos[i] < values[i].size()) break;
      pos[i] = 0;
      if (i == 0) return;
    }
    if (axes.empty()) return;
  }
}

Vector grid_base(const ParametricModel& model, const RunConfig& c, const std::vector<GridAxis>& axes) {
  if (c.theta) return *c.theta;
  if (axes.size() != model.dim()) {
    throw Error(Errc::Config, "theta is needed for parameters that have no grid axis");
  }
  return Vector::Zero(static_cast<Eigen::Index>(model.dim()));
}

}  // namespace

// ---------------------------------------------------------------------------
// simulate

Alphabet default_alphabet(Family family) noexcept {
  return family == Family::Kimura4 || family == Family::Kimura6 ? Alphabet::Dna : Alphabet::Integers;
}

std::string simulate_text(const RunConfig& config, std::optional<Alphabet> alphabet) {
  config.validate();
  const Vector& theta = require_theta(config);
  const auto model = make_model(config.model);
  const Alphabet a = alphabet.value_or(default_alphabet(config.model.family));
  if (a == Alphabet::Dna && model->num_states() != 4) {
    throw Error(Errc::Config, "the DNA alphabet needs a four-state model");
  }
  const ChainPath path = simulate(model->transition_matrix(theta), config.n, InitialState::stationary(), config.seed);
  const Metadata meta = {{"model", std::string(family_name(config.model.family))},
                         {"theta", join(theta)},
                         {"n", std::to_string(config.n)},
                         {"seed", std::to_string(config.seed)},
                         {"alphabet", std::string(alphabet_name(a))},
                         {"states", std::to_string(model->num_states())}};
  return format_sequence(path, a, meta);
}

// ---------------------------------------------------------------------------
// fit

TupleCounts counts_for(const ChainPath& path, const Method& method) {
  return count_tuples(path, method.required_count_order());
}

FitReport cmd_fit(const TupleCounts& counts, const StateSpace& states, const RunConfig& config) {
  config.validate();
  const auto model = make_model(config.model);
  if (model->num_states() != counts.num_states()) {
    throw Error(Errc::Config, "data have " + std::to_string(counts.num_states()) + " states; the model has " +
                                  std::to_string(model->num_states()));
  }
  const Objective objective(model, config.method, counts);
  FitOptions fo = config.fit;
  fo.throw_on_failure = false;

  FitReport r;
  r.family = family_name(config.model.family);
  r.method = config.method;
  r.fit = fit(objective, fo);
  r.names = model->theta_names();
  r.state_labels = states.labels();
  // m-tuple counts from a path of n transitions hold n - m + 2 windows.
  r.n = counts.n_effective() + static_cast<double>(counts.order()) - 2.0;
  r.equilibrium = stationary_distribution(model->transition_matrix(r.fit.theta_hat)).pi;
  try {
    const AvarResult av = avar(*model, r.fit.theta_hat, config.method, asymptotic_options(config));
    r.sds = (av.sigma.diagonal().cwiseMax(0.0) / r.n).cwiseSqrt();
  } catch (const Error& e) {
    r.sd_error = e.what();
  }
  return r;
}

KeyValueDoc FitReport::machine() const {
  KeyValueDoc d;
  d.add("model", family);
  d.add("method", method.label());
  d.add("n", fmt_machine(n));
  d.add("converged", fit.converged ? "1" : "0");
  d.add("loglik", fit.loglik_at_max);
  d.add("gradient_norm", fit.gradient_norm);
  d.add("iterations", std::to_string(fit.iterations));
  d.add("best_start", std::to_string(fit.best_start_index));
  for (std::size_t j = 0; j < names.size(); ++j) d.add("theta." + names[j], fit.theta_hat(static_cast<Eigen::Index>(j)));
  for (std::size_t j = 0; j < names.size() && sds.size() > 0; ++j) {
    d.add("sd." + names[j], sds(static_cast<Eigen::Index>(j)));
  }
  if (!sd_error.empty()) d.add("sd_error", sd_error);
  for (std::size_t a = 0; a < state_labels.size(); ++a) {
    d.add("equilibrium." + state_labels[a], equilibrium(static_cast<Eigen::Index>(a)));
  }
  d.add("message", fit.message);
  return d;
}

std::string FitReport::human() const {
  std::ostringstream os;
  os << family << " fitted by " << method.label() << " to " << fmt_human(n, 10) << " transitions"
     << (fit.converged ? "" : " (NOT CONVERGED: " + fit.message + ")") << "\n";
  CsvTable t({"parameter", "estimate", "sd"});
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    t.add_row({names[j], fmt_machine(fit.theta_hat(i)), sds.size() > 0 ? fmt_machine(sds(i)) : "-"});
  }
  os << t.to_human();
  if (!sd_error.empty()) os << "sd unavailable: " << sd_error << "\n";
  os << "log objective " << fmt_human(fit.loglik_at_max, 10) << ", gradient norm " << fmt_human(fit.gradient_norm, 2)
     << "\nequilibrium";
  for (std::size_t a = 0; a < state_labels.size(); ++a) {
    os << " " << state_labels[a] << "=" << fmt_human(equilibrium(static_cast<Eigen::Index>(a)));
  }
  os << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// avar

CsvTable cmd_avar(const RunConfig& config) {
  config.validate();
  const Vector& theta = require_theta(config);
  const auto model = make_model(config.model);
  const unsigned k = config.method.kind == Method::Kind::QL ? config.method.order : 2;
  const AsymptoticOptions opts = asymptotic_options(config);

  std::optional<Matrix> sig[3];
  std::string errors;
  const Method methods[3] = {Method::ml(), Method::ql(k), Method::pl(1)};
  for (int i = 0; i < 3; ++i) {
    try {
      sig[i] = avar(*model, theta, methods[i], opts).sigma;
    } catch (const Error& e) {
      errors += (errors.empty() ? "" : "; ") + methods[i].label() + ": " + e.what();
    }
  }
  CsvTable t({"parameter", "ml_sd", "ql_sd", "pl_sd", "are_ql", "are_pl", "error"});
  for (std::size_t j = 0; j < model->dim(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    auto sd = [&](int m) { return sig[m] ? fmt_machine(std::sqrt((*sig[m])(i, i))) : std::string(); };
    auto are = [&](int m) { return sig[0] && sig[m] ? fmt_machine((*sig[0])(i, i) / (*sig[m])(i, i)) : std::string(); };
    t.add_row({model->theta_names()[j], sd(0), sd(1), sd(2), are(1), are(2), errors});
  }
  return t;
}

// ---------------------------------------------------------------------------
// sweep

std::vector<double> GridAxis::values() const {
  std::vector<double> out;
  if (step <= 0.0) {
    out.push_back(lo);
    return out;
  }
  const auto count = static_cast<long>(std::floor((hi - lo) / step + 1e-9));
  for (long i = 0; i <= count; ++i) out.push_back(lo + static_cast<double>(i) * step);
  return out;
}

GridAxis parse_grid_axis(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw Error(Errc::Config, "grid axis '" + text + "' must look like name=lo:hi:step");
  }
  GridAxis a;
  a.name = text.substr(0, eq);
  std::string spec = text.substr(eq + 1);
  for (char& c : spec) c = c == ':' ? ',' : c;
  const Vector v = parse_vector(spec);
  if (v.size() == 1) {
    a.lo = a.hi = v(0);
  } else if (v.size() == 3 && v(2) > 0.0 && v(1) >= v(0)) {
    a.lo = v(0);
    a.hi = v(1);
    a.step = v(2);
  } else {
    throw Error(Errc::Config, "grid axis '" + text + "' must look like name=lo:hi:step with lo <= hi, step > 0");
  }
  return a;
}

CsvTable sweep_are_grid(const RunConfig& config, const std::vector<GridAxis>& axes) {
  const auto model = make_model(config.model);
  const Vector base = grid_base(*model, config, axes);
  const unsigned k = config.method.kind == Method::Kind::QL ? config.method.order : 2;
  const AsymptoticOptions opts = asymptotic_options(config);
  const auto& names = model->theta_names();

  std::vector<std::string> header = names;
  for (const std::string& p : names) {
    for (const char* col : {"ml_var_", "ql_var_", "pl_var_", "are_ql_", "are_pl_"}) header.push_back(col + p);
  }
  header.push_back("error");
  CsvTable t(header);
  for_each_grid_point(*model, base, axes, [&](const Vector& theta, std::string_view domain_error) {
    std::vector<std::string> row;
    for (Eigen::Index j = 0; j < theta.size(); ++j) row.push_back(fmt_machine(theta(j)));
    std::string error(domain_error);
    std::optional<Matrix> sig[3];
    if (error.empty()) {
      const Method methods[3] = {Method::ml(), Method::ql(k), Method::pl(1)};
      for (int m = 0; m < 3; ++m) {
        try {
          sig[m] = avar(*model, theta, methods[m], opts).sigma;
        } catch (const Error& e) {
          error += (error.empty() ? "" : "; ") + methods[m].label() + ": " + e.what();
        }
      }
    }
    for (Eigen::Index j = 0; j < theta.size(); ++j) {
      for (int m = 0; m < 3; ++m) row.push_back(sig[m] ? fmt_machine((*sig[m])(j, j)) : "");
      for (int m = 1; m < 3; ++m) row.push_back(sig[0] && sig[m] ? fmt_machine((*sig[0])(j, j) / (*sig[m])(j, j)) : "");
    }
    row.push_back(error);
    t.add_row(std::move(row));
  });
  return t;
}

CsvTable sweep_ql_order(const RunConfig& config, const std::vector<GridAxis>& axes,
                        const std::vector<unsigned>& orders) {
  const auto model = make_model(config.model);
  const Vector base = grid_base(*model, config, axes);
  const AsymptoticOptions opts = asymptotic_options(config);
  const auto& names = model->theta_names();
  std::vector<std::string> header = names;
  header.push_back("k");
  for (const std::string& p : names) header.push_back("are_ql_" + p);
  header.push_back("error");
  CsvTable t(header);
  for_each_grid_point(*model, base, axes, [&](const Vector& theta, std::string_view domain_error) {
    std::optional<Matrix> ml;
    std::string ml_error(domain_error);
    if (ml_error.empty()) {
      try {
        ml = avar(*model, theta, Method::ml(), opts).sigma;
      } catch (const Error& e) {
        ml_error = std::string("ml: ") + e.what();
      }
    }
    for (const unsigned k : orders) {
      std::vector<std::string> row;
      for (Eigen::Index j = 0; j < theta.size(); ++j) row.push_back(fmt_machine(theta(j)));
      row.push_back(std::to_string(k));
      std::string error = ml_error;
      std::optional<Matrix> ql;
      if (error.empty()) {
        try {
          ql = avar(*model, theta, Method::ql(k), opts).sigma;
        } catch (const Error& e) {
          error = Method::ql(k).label() + ": " + e.what();
        }
      }
      for (Eigen::Index j = 0; j < theta.size(); ++j) {
        row.push_back(ml && ql ? fmt_machine((*ml)(j, j) / (*ql)(j, j)) : "");
      }
      row.push_back(error);
      t.add_row(std::move(row));
    }
  });
  return t;
}

CsvTable sweep_least_false(const std::vector<double>& eps, const Vector& base, const FitOptions& fit) {
  const std::vector<Method> methods = {Method::ml(), Method::ql(2), Method::pl(1)};
  CsvTable t({"eps", "method", "alpha", "beta", "gamma", "delta", "kl", "error"});
  for (const SweepPoint& p : eps_sweep(eps, base, methods, fit)) {
    std::vector<std::string> row = {fmt_machine(p.eps), p.method.label()};
    for (Eigen::Index j = 0; j < 4; ++j) row.push_back(p.theta_0.size() ? fmt_machine(p.theta_0(j)) : "");
    row.push_back(p.theta_0.size() ? fmt_machine(p.kl_at_min) : "");
    row.push_back(p.error);
    t.add_row(std::move(row));
  }
  return t;
}

}  // namespace chainlik::cli
