#include <filesystem>

#include <nlohmann/json.hpp>

#include "chainlik_cli/commands.hpp"

namespace chainlik::cli {

using nlohmann::json;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (const double x : v) out(i++) = x;
  return out;
}

const Vector kEquicorrelationTheta = vec({0.5, 0.3, 0.6});
const Vector kThreeStateTheta = vec({0.21, 0.55});
const Vector kKimuraTheta = vec({0.027, 0.041, 0.123, 0.128});
const std::vector<double> kIsingBeta = {0.0, 0.5, 1.0, 1.5, 3.0};

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

json rows_of(const Matrix& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_std(m.row(i).transpose()));
  return out;
}

/// Limit sds of ML, QL(2), PL per parameter for the given model and theta.
CsvTable sd_table(const ModelSpec& spec, const Vector& theta, bool with_variances) {
  const auto model = make_model(spec);
  const Method methods[3] = {Method::ml(), Method::ql(2), Method::pl(1)};
  Matrix sig[3];
  for (int m = 0; m < 3; ++m) sig[m] = avar(*model, theta, methods[m]).sigma;
  std::vector<std::string> header = {"parameter", "ml_sd", "ql_sd", "pl_sd"};
  if (with_variances) header.insert(header.end(), {"ml_var", "ql_var", "pl_var"});
  CsvTable t(header);
  for (std::size_t j = 0; j < model->dim(); ++j) {
    const auto i = static_cast<Eigen::Index>(j);
    std::vector<std::string> row = {model->theta_names()[j]};
    for (int m = 0; m < 3; ++m) row.push_back(fmt_machine(std::sqrt(sig[m](i, i))));
    if (with_variances) {
      for (int m = 0; m < 3; ++m) row.push_back(fmt_machine(sig[m](i, i)));
    }
    t.add_row(std::move(row));
  }
  return t;
}

CsvTable table_5_0() {
  CsvTable t({"corpus", "n00", "n01", "n10", "n11", "one_minus_alpha", "beta", "pi_vowel", "pi_consonant"});
  const auto model = make_model({Family::GeneralTwoState, 0, std::nullopt});
  for (const auto& [name, counts] : {std::pair{"pushkin", pushkin_counts()}, std::pair{"english", english_counts()}}) {
    const Objective objective(model, Method::ml(), TupleCounts::from_matrix(counts));
    const Vector theta = fit(objective).theta_hat;
    const Vector pi = stationary_distribution(model->transition_matrix(theta)).pi;
    t.add_row({name, fmt_machine(counts(0, 0)), fmt_machine(counts(0, 1)), fmt_machine(counts(1, 0)),
               fmt_machine(counts(1, 1)), fmt_machine(1.0 - theta(0)), fmt_machine(theta(1)), fmt_machine(pi(0)),
               fmt_machine(pi(1))});
  }
  return t;
}

CsvTable table_5_2() {
  const auto model = make_model({Family::Ising1D, 0, std::nullopt});
  CsvTable t({"beta", "ml_sd", "pl_sd"});
  for (const double b : kIsingBeta) {
    const Vector theta = vec({b});
    t.add_row({fmt_machine(b), fmt_machine(avar(*model, theta, Method::ml()).sds(0)),
               fmt_machine(avar(*model, theta, Method::pl(1)).sds(0))});
  }
  return t;
}

CsvTable table_6_1(const ReproduceOptions& o) {
  const auto model = make_model({Family::Kimura4, 0, std::nullopt});
  const Method methods[3] = {Method::ml(), Method::ql(2), Method::pl(1)};
  McSummary mc[3];
  Vector theory[3];
  for (int m = 0; m < 3; ++m) {
    theory[m] = avar(*model, kKimuraTheta, methods[m]).sds;
    McOptions mo;
    mo.max_failure_rate = 1.0;
    mc[m] = mc_study(model, kKimuraTheta, methods[m], o.n, o.reps, o.seed, mo);
  }
  CsvTable t({"parameter", "true", "ml_ave", "ml_sd", "ml_theory", "ql_ave", "ql_sd", "ql_theory", "pl_ave", "pl_sd",
              "pl_theory", "failures"});
  for (Eigen::Index j = 0; j < 4; ++j) {
    std::vector<std::string> row = {model->theta_names()[static_cast<std::size_t>(j)], fmt_machine(kKimuraTheta(j))};
    for (int m = 0; m < 3; ++m) {
      row.push_back(fmt_machine(mc[m].mean(j)));
      row.push_back(fmt_machine(mc[m].sd_scaled(j)));
      row.push_back(fmt_machine(theory[m](j)));
    }
    row.push_back(std::to_string(mc[0].n_failed) + "/" + std::to_string(mc[1].n_failed) + "/" +
                  std::to_string(mc[2].n_failed));
    t.add_row(std::move(row));
  }
  return t;
}

json manifest_inputs(const std::string& id, const ReproduceOptions& o) {
  if (id == "5.0") {
    return {{"pushkin", rows_of(pushkin_counts())}, {"english", rows_of(english_counts())}, {"model", "general-two-state"}};
  }
  if (id == "5.1") return {{"model", "equicorrelation"}, {"states", 3}, {"theta", to_std(kEquicorrelationTheta)}};
  if (id == "5.2") return {{"model", "ising-1d"}, {"beta", kIsingBeta}};
  if (id == "5.4") return {{"model", "three-state"}, {"theta", to_std(kThreeStateTheta)}};
  if (id == "6.1") {
    return {{"model", "kimura4"}, {"theta", to_std(kKimuraTheta)}, {"seed", o.seed}, {"reps", o.reps}, {"n", o.n}};
  }
  return {{"model", "kimura4"},
          {"truth", "kimura6"},
          {"base", to_std(o.sweep_base)},
          {"eps", default_eps_grid()},
          {"methods", {"ml", "ql", "pl"}}};
}

json manifest_tolerances(const std::string& id) {
  if (id == "5.0") return {{"counts", 0.0}, {"estimates", 1e-3}};
  if (id == "6.1") return {{"theory", 2e-3}, {"mc_mean", 0.005}, {"mc_sd_relative", 0.10}};
  if (id == "7.sweep") return {{"eps0_truth", 1e-6}};
  return {{"sd", 5e-3}};
}

}  // namespace

Matrix pushkin_counts() {
  Matrix m(2, 2);
  m << 1104, 7534, 7533, 3829;
  return m;
}

Matrix english_counts() {
  Matrix m(2, 2);
  m << 1484, 6396, 6397, 5723;
  return m;
}

std::vector<std::string> reproduce_ids() { return {"5.0", "5.1", "5.2", "5.4", "6.1", "7.sweep"}; }

CsvTable reproduce_table(const std::string& id, const ReproduceOptions& o) {
  if (id == "5.0") return table_5_0();
  if (id == "5.1") return sd_table({Family::Equicorrelation, 3, std::nullopt}, kEquicorrelationTheta, true);
  if (id == "5.2") return table_5_2();
  if (id == "5.4") return sd_table({Family::ThreeState, 0, std::nullopt}, kThreeStateTheta, false);
  if (id == "6.1") return table_6_1(o);
  if (id == "7.sweep") return sweep_least_false(default_eps_grid(), o.sweep_base, {});
  throw Error(Errc::Config, "unknown table id '" + id + "'");
}

std::vector<std::string> cmd_reproduce(const std::string& id, const ReproduceOptions& o) {
  const CsvTable table = reproduce_table(id, o);
  std::error_code ec;
  std::filesystem::create_directories(o.out_dir, ec);
  if (ec) throw Error(Errc::Io, "cannot create directory '" + o.out_dir + "'");
  const std::string base = (std::filesystem::path(o.out_dir) / ("table_" + id)).string();
  const std::string csv = base + ".csv";
  const std::string manifest = (std::filesystem::path(o.out_dir) / ("manifest_" + id + ".json")).string();
  write_file_atomic(csv, table.to_csv());
  const json m = {{"id", id},
                  {"table", std::filesystem::path(csv).filename().string()},
                  {"inputs", manifest_inputs(id, o)},
                  {"tolerances", manifest_tolerances(id)},
                  {"rows", table.rows().size()}};
  write_file_atomic(manifest, m.dump(2) + "\n");
  return {csv, manifest};
}

}  // namespace chainlik::cli
