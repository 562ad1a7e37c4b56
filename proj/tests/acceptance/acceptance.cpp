// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Reference values live in tests/golden and tests/fixtures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "chainlik/asymptotics.hpp"
#include "chainlik/error.hpp"
#include "chainlik/misspec.hpp"
#include "chainlik_cli/io.hpp"
#include "chainlik_cli/report.hpp"
#include "generators.hpp"

namespace chainlik {
namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  /// Records a check; failing checks are listed in the detail.
  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [miss] " << what << ";";
    }
  }
  void note(const std::string& what) { detail << " " << what << ";"; }
};

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (const double x : v) out(i++) = x;
  return out;
}

std::string num(double v, int digits = 6) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

cli::CsvTable golden(const std::string& name) {
  return cli::CsvTable::parse(cli::read_file(std::string(CHAINLIK_TEST_DATA) + "/golden/" + name));
}

double cell(const cli::CsvTable& t, std::size_t row, const std::string& col) {
  return std::stod(t.rows().at(row).at(t.column(col)));
}

AsymptoticOptions cesaro() {
  AsymptoticOptions o;
  o.periodicity = Periodicity::CesaroLimit;
  return o;
}

// 1. ----------------------------------------------------------------------
void symmetric_two_state(Outcome& out) {
  const auto model = make_model({Family::SymmetricTwoState, 0, std::nullopt});
  double worst_pl = 0, worst_ml = 0, worst_are = 0;
  for (int i = 1; i <= 19; ++i) {
    const double t = 0.05 * i;
    const double ml = avar(*model, vec({t}), Method::ml()).sigma(0, 0);
    const double pl = avar(*model, vec({t}), Method::pl(1)).sigma(0, 0);
    worst_pl = std::max(worst_pl, std::abs(pl - 0.25));
    worst_ml = std::max(worst_ml, std::abs(ml - t * (1 - t)));
    worst_are = std::max(worst_are, std::abs(ml / pl - 4 * t * (1 - t)));
  }
  out.check(worst_pl <= 1e-8, "PL variance off 0.25 by " + num(worst_pl));
  out.check(worst_ml <= 1e-10, "ML variance off theta(1-theta) by " + num(worst_ml));
  out.check(worst_are <= 1e-8, "ARE off 4 theta(1-theta) by " + num(worst_are));
  out.note("max |PL-0.25|=" + num(worst_pl, 3) + ", max |ML-t(1-t)|=" + num(worst_ml, 3) +
           ", max |ARE-4t(1-t)|=" + num(worst_are, 3));
}

// 2. ----------------------------------------------------------------------
void two_state_equivalences(Outcome& out) {
  const auto model = make_model({Family::GeneralTwoState, 0, std::nullopt});
  double worst_ql = 0, worst_pl = 0;
  for (int i = 1; i <= 9; ++i) {
    for (int j = 1; j <= 9; ++j) {
      const Vector t = vec({0.1 * i, 0.1 * j});
      const Matrix ml = avar(*model, t, Method::ml()).sigma;
      worst_ql = std::max(worst_ql, max_abs(avar(*model, t, Method::ql(2)).sigma - ml));
    }
    const Vector t = vec({0.1 * i, 1 - 0.1 * i});
    worst_pl = std::max(worst_pl, max_abs(avar(*model, t, Method::pl(1)).sigma - avar(*model, t, Method::ml()).sigma));
  }
  out.check(worst_ql <= 1e-10, "QL2 vs ML " + num(worst_ql));
  out.check(worst_pl <= 1e-8, "PL vs ML on alpha+beta=1 " + num(worst_pl));
  out.note("max |QL2-ML|=" + num(worst_ql, 3) + " on 9x9 grid, max |PL-ML|=" + num(worst_pl, 3) + " on alpha+beta=1");
}

// 3. ----------------------------------------------------------------------
void equicorrelation_table(Outcome& out) {
  // The printed entries agree with the diagonal of the limit covariance
  // (the variances), so that is what they are compared with.
  const auto model = make_model({Family::Equicorrelation, 3, std::nullopt});
  const Vector theta = vec({0.5, 0.3, 0.6});
  const cli::CsvTable g = golden("table_5_1.csv");
  const Method methods[] = {Method::ml(), Method::ql(2), Method::pl(1)};
  const char* cols[] = {"ml", "ql", "pl"};
  double worst = 0;
  for (int m = 0; m < 3; ++m) {
    const Matrix sigma = avar(*model, theta, methods[m]).sigma;
    for (std::size_t j = 0; j < 3; ++j) {
      const double ours = sigma(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
      const double printed = cell(g, j, cols[m]);
      worst = std::max(worst, std::abs(ours - printed));
      out.check(std::abs(ours - printed) <= 5e-3, std::string(cols[m]) + " " + g.rows()[j][0] + " " + num(ours, 5) +
                                                       " vs " + num(printed, 4));
    }
  }
  out.note("max deviation " + num(worst, 3) + " over 9 entries");
}

// 4. ----------------------------------------------------------------------
void ising_table(Outcome& out) {
  const auto model = make_model({Family::Ising1D, 0, std::nullopt});
  const cli::CsvTable g = golden("table_5_2.csv");
  double worst = 0;
  for (std::size_t r = 0; r < g.rows().size(); ++r) {
    const Vector b = vec({cell(g, r, "beta")});
    const double ml = avar(*model, b, Method::ml()).sds(0);
    const double pl = avar(*model, b, Method::pl(1)).sds(0);
    for (const auto& [ours, col] : {std::pair{ml, "ml_sd"}, std::pair{pl, "pl_sd"}}) {
      const double printed = cell(g, r, col);
      worst = std::max(worst, std::abs(ours - printed));
      out.check(std::abs(ours - printed) <= 5e-3,
                std::string(col) + " beta=" + num(b(0), 2) + " " + num(ours, 5) + " vs " + num(printed, 5));
    }
  }
  out.note("max deviation " + num(worst, 3) + " over 10 entries");
}

// 5. ----------------------------------------------------------------------
void three_state(Outcome& out) {
  const auto model = make_model({Family::ThreeState, 0, std::nullopt});
  const Vector theta = vec({0.21, 0.55});
  const cli::CsvTable g = golden("three_state_sds.csv");
  const Method methods[] = {Method::ml(), Method::ql(2), Method::pl(1)};
  const char* cols[] = {"ml_sd", "ql_sd", "pl_sd"};
  for (int m = 0; m < 3; ++m) {
    const Vector sds = avar(*model, theta, methods[m]).sds;
    for (std::size_t j = 0; j < 2; ++j) {
      const double ours = sds(static_cast<Eigen::Index>(j));
      const double printed = cell(g, j, cols[m]);
      out.check(std::abs(ours - printed) <= 5e-3,
                std::string(cols[m]) + " " + g.rows()[j][0] + " " + num(ours, 4) + " vs " + num(printed, 3));
    }
    out.note(std::string(cols[m]) + "=(" + num(sds(0), 4) + "," + num(sds(1), 4) + ")");
  }
}

// 6. ----------------------------------------------------------------------
const Vector kKimuraTheta = vec({0.027, 0.041, 0.123, 0.128});

void kimura_theory(Outcome& out) {
  const auto model = make_model({Family::Kimura4, 0, std::nullopt});
  const cli::CsvTable g = golden("table_6_1.csv");
  const Method methods[] = {Method::ml(), Method::ql(2), Method::pl(1)};
  const char* cols[] = {"ml_theory", "ql_theory", "pl_theory"};
  int within = 0;
  for (int m = 0; m < 3; ++m) {
    const Vector sds = avar(*model, kKimuraTheta, methods[m]).sds;
    for (std::size_t j = 0; j < 4; ++j) {
      const double ours = sds(static_cast<Eigen::Index>(j));
      const double printed = cell(g, j, cols[m]);
      const bool ok = std::abs(ours - printed) <= 2e-3;
      within += ok;
      out.check(ok, std::string(cols[m]) + " " + g.rows()[j][0] + " " + num(ours, 4) + " vs " + num(printed, 3));
    }
  }
  out.note(std::to_string(within) + "/12 within 2e-3");
}

// 7. ----------------------------------------------------------------------
void kimura_monte_carlo(Outcome& out) {
  const auto model = make_model({Family::Kimura4, 0, std::nullopt});
  const std::size_t n = 500, reps = 1000;
  const std::uint64_t seed = 61;
  const auto start = std::chrono::steady_clock::now();
  for (const Method& m : {Method::ml(), Method::ql(2), Method::pl(1)}) {
    McOptions o;
    // Collect every replication so the summary can be reported even when
    // the failure rate exceeds McOptions' default limit, which is checked
    // explicitly below.
    o.max_failure_rate = 1.0;
    const McSummary s = mc_study(model, kKimuraTheta, m, n, reps, seed, o);
    const Vector theory = avar(*model, kKimuraTheta, m).sds;
    const double rate = static_cast<double>(s.n_failed) / static_cast<double>(reps);
    out.check(rate <= McOptions{}.max_failure_rate,
              m.label() + " failed fits " + std::to_string(s.n_failed) + "/" + std::to_string(reps));
    std::string means, sds;
    for (Eigen::Index j = 0; j < 4; ++j) {
      const std::string name = model->theta_names()[static_cast<std::size_t>(j)];
      out.check(std::abs(s.mean(j) - kKimuraTheta(j)) <= 0.005,
                m.label() + " mean " + name + " " + num(s.mean(j), 4) + " vs " + num(kKimuraTheta(j), 3));
      out.check(std::abs(s.sd_scaled(j) / theory(j) - 1) <= 0.10,
                m.label() + " sd " + name + " " + num(s.sd_scaled(j), 4) + " vs theory " + num(theory(j), 4));
      means += (j ? "," : "") + num(s.mean(j), 4);
      sds += (j ? "," : "") + num(s.sd_scaled(j), 4);
    }
    out.note(m.label() + " mean=(" + means + ") sqrt(n)sd=(" + sds + ") failed=" + std::to_string(s.n_failed));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  out.check(secs < 600, "runtime " + num(secs, 3) + " s");
  out.note("runtime " + num(secs, 3) + " s");
}

// 8. ----------------------------------------------------------------------
/// Empirical covariance of (N - E N) / sqrt(n) across chains, with the
/// standard error of each entry.
struct EmpiricalCov {
  Matrix cov, se;
};

EmpiricalCov empirical(const std::vector<Vector>& z) {
  const auto d = z.front().size();
  const double r = static_cast<double>(z.size());
  Matrix sum = Matrix::Zero(d, d), sum_sq = Matrix::Zero(d, d);
  for (const Vector& v : z) {
    const Matrix prod = v * v.transpose();
    sum += prod;
    sum_sq += prod.cwiseProduct(prod);
  }
  EmpiricalCov e;
  e.cov = sum / r;
  const Matrix var = (sum_sq / r - e.cov.cwiseProduct(e.cov)) * (r / (r - 1));
  e.se = (var / r).cwiseSqrt();
  return e;
}

void covariance_oracles(Outcome& out) {
  struct Case {
    ModelSpec spec;
    Vector theta;
  };
  const Case cases[] = {{{Family::SymmetricTwoState, 0, std::nullopt}, vec({0.3})},
                        {{Family::GeneralTwoState, 0, std::nullopt}, vec({0.2, 0.35})}};
  const std::size_t chains = 20000, n = 2000;
  for (const Case& c : cases) {
    const auto model = make_model(c.spec);
    const TransitionMatrix p = model->transition_matrix(c.theta);
    const std::size_t s = p.size();
    const Matrix pairs = pair_cov(p);
    const Matrix triples = triplet_cov(p);
    const Matrix marginal = marginal_triplet_cov(p);
    const double a1 = max_abs(pair_cov_from_triplets(triples, s) - pairs);
    const double a2 = max_abs(marginal_triplet_cov_from_triplets(triples, s) - marginal);
    out.check(a1 <= 1e-10, model->name() + " triplet marginal vs pair " + num(a1));
    out.check(a2 <= 1e-10, model->name() + " marginal direct vs summed " + num(a2));

    // Exact means under the stationary start.
    const Vector pi = stationary_distribution(p).pi;
    const TupleCounts expected3 = [&] {
      TupleCounts t(s, 3);
      for (std::size_t f = 0; f < t.num_cells(); ++f) {
        const auto u = t.tuple_of(f);
        t.cell(f) = pi(static_cast<Eigen::Index>(u[0])) * p(u[0], u[1]) * p(u[1], u[2]);
      }
      return t;
    }();
    std::vector<Vector> z2, z3, zm;
    z2.reserve(chains);
    z3.reserve(chains);
    zm.reserve(chains);
    const double root = std::sqrt(static_cast<double>(n));
    for (std::size_t r = 0; r < chains; ++r) {
      const ChainPath path = simulate(p, n, InitialState::stationary(), derive_seed(8, r));
      const TupleCounts c3 = count_tuples(path, 3);
      const TupleCounts c2 = count_tuples(path, 2);
      Vector v3(static_cast<Eigen::Index>(c3.num_cells()));
      for (std::size_t f = 0; f < c3.num_cells(); ++f) {
        v3(static_cast<Eigen::Index>(f)) = (c3.cell(f) - static_cast<double>(n - 1) * expected3.cell(f)) / root;
      }
      Vector v2(static_cast<Eigen::Index>(c2.num_cells()));
      for (std::size_t a = 0; a < s; ++a) {
        for (std::size_t b = 0; b < s; ++b) {
          v2(static_cast<Eigen::Index>(a * s + b)) =
              (c2(a, b) - static_cast<double>(n) * pi(static_cast<Eigen::Index>(a)) * p(a, b)) / root;
        }
      }
      Vector vm = Vector::Zero(static_cast<Eigen::Index>(s * s));
      for (std::size_t a = 0; a < s; ++a)
        for (std::size_t b = 0; b < s; ++b)
          for (std::size_t cc = 0; cc < s; ++cc) {
            vm(static_cast<Eigen::Index>(a * s + cc)) += v3(static_cast<Eigen::Index>((a * s + b) * s + cc));
          }
      z2.push_back(std::move(v2));
      z3.push_back(std::move(v3));
      zm.push_back(std::move(vm));
    }
    for (const auto& [label, limit, z] : {std::tuple{"pair", &pairs, &z2}, std::tuple{"triplet", &triples, &z3},
                                          std::tuple{"marginal", &marginal, &zm}}) {
      const EmpiricalCov e = empirical(*z);
      const Matrix ratio = (e.cov - *limit).cwiseQuotient(e.se);
      const double worst = ratio.cwiseAbs().maxCoeff();
      out.check(worst <= 3.0, model->name() + " " + label + " MC deviation " + num(worst, 3) + " SE");
      out.note(model->name() + " " + label + " max |MC-limit|/SE=" + num(worst, 3));
    }
    out.note(model->name() + " algebraic " + num(std::max(a1, a2), 2));
  }
}

// 9. ----------------------------------------------------------------------
void identity_suite(Outcome& out) {
  using testing::Rng;
  int families = 0;
  for (const testing::FamilyCase& fc : testing::all_family_cases()) {
    const auto model = make_model(fc.spec);
    const AsymptoticOptions opts = fc.periodic ? cesaro() : AsymptoticOptions{};
    const auto d = static_cast<Eigen::Index>(model->dim());
    const std::size_t s = model->num_states();
    Rng rng(9);
    double score = 0, ja = 0, mr = 0, wsum = 0, grad = 0;
    bool pl_checked = false;
    for (int trial = 0; trial < 20; ++trial) {
      const Vector theta = testing::random_theta(rng, *model);
      const CellScores cs = transition_and_scores(*model, theta);
      const MLIngredients ml = info_J(*model, theta, opts);
      for (std::size_t a = 0; a < s; ++a) {
        Vector mean = Vector::Zero(d);
        Matrix minus_i = Matrix::Zero(d, d);
        for (std::size_t b = 0; b < s; ++b) {
          mean += cs.p(a, b) * cs.u_at(a, b);
          minus_i -= cs.p(a, b) * cs.i_at(a, b);
        }
        score = std::max(score, max_abs(mean));
        ja = std::max(ja, max_abs(ml.J_a[a] - minus_i));
      }
      try {
        const PLIngredients pl = pl_ingredients(*model, theta, opts);
        pl_checked = true;
        mr = std::max(mr, max_abs(pl.M - pl.R));
        const Matrix p2 = cs.p.matrix() * cs.p.matrix();
        for (std::size_t a = 0; a < s; ++a) {
          Vector acc = Vector::Zero(d);
          for (std::size_t c = 0; c < s; ++c) acc += p2(a, c) * pl.w[a * s + c];
          wsum = std::max(wsum, max_abs(acc));
        }
      } catch (const Error& e) {
        if (e.code() != Errc::NotAperiodic) throw;
      }

      // Gradients: dP, d log pi and every objective against central differences.
      const auto rel = [](const Matrix& analytic, const Matrix& fd) {
        return max_abs(analytic - fd) / std::max(1.0, max_abs(fd));
      };
      const auto fd = [&](const std::function<Vector(const Vector&)>& f, const Vector& x) {
        const Vector f0 = f(x);
        Matrix jac(f0.size(), x.size());
        for (Eigen::Index j = 0; j < x.size(); ++j) {
          Vector xp = x, xm = x;
          const double h = 1e-6 * std::max(1.0, std::abs(x(j)));
          xp(j) += h;
          xm(j) -= h;
          jac.col(j) = (f(xp) - f(xm)) / (2 * h);
        }
        return jac;
      };
      const TransitionDerivatives td = transition_derivatives(*model, theta);
      const Matrix jp = fd([&](const Vector& t) -> Vector { return model->transition(t).reshaped(); }, theta);
      for (Eigen::Index j = 0; j < d; ++j) {
        grad = std::max(grad, rel(td.dp[static_cast<std::size_t>(j)].reshaped(), jp.col(j)));
      }
      const StationaryScores ss = stationary_scores(*model, theta);
      const Matrix jv = fd(
          [&](const Vector& t) -> Vector {
            return stationary_distribution(model->transition_matrix(t)).pi.array().log().matrix();
          },
          theta);
      grad = std::max(grad, rel(ss.v, jv));
      const TrueMechanism truth = TrueMechanism::from(model->transition_matrix(theta));
      for (const Method& m : {Method::ml(), Method::ql(3), Method::pl(1)}) {
        const Objective obj(model, m, expected_counts(truth, m.required_count_order()));
        const Vector g = obj.gradient(theta);
        const Matrix jg = fd([&](const Vector& t) -> Vector { return Vector::Constant(1, obj.value(t)); }, theta);
        grad = std::max(grad, rel(g.transpose(), jg));
      }
    }
    ++families;
    const std::string l = fc.label;
    out.check(score <= 1e-8, l + " score mean " + num(score));
    out.check(ja <= 1e-8, l + " J_a " + num(ja));
    out.check(!pl_checked || mr <= 1e-8, l + " M-R " + num(mr));
    out.check(!pl_checked || wsum <= 1e-8, l + " w sums " + num(wsum));
    out.check(grad <= 1e-5, l + " gradient rel " + num(grad));
    if (!pl_checked) out.note(l + ": PL identities not defined (periodic)");
  }
  out.note(std::to_string(families) + " families x 20 theta");
}

// 10. ---------------------------------------------------------------------
void reflecting_walk(Outcome& out) {
  double worst = 0;
  for (const std::size_t k : {5u, 10u, 15u}) {
    const auto model = make_model({Family::ReflectingWalk, k, std::nullopt});
    for (int i = 1; i <= 9; ++i) {
      const double p = 0.1 * i;
      const Vector pi = stationary_distribution(model->transition_matrix(vec({p}))).pi;
      const double expected = (1 - pi(0) - pi(static_cast<Eigen::Index>(k - 1))) / (p * (1 - p));
      worst = std::max(worst, std::abs(info_J(*model, vec({p})).J(0, 0) - expected));
    }
  }
  out.check(worst <= 1e-10, "J formula off by " + num(worst));
  out.note("max |J - formula|=" + num(worst, 3));

  // The order sweep on the ten-state walk.
  const auto model = make_model({Family::ReflectingWalk, 10, std::nullopt});
  const unsigned orders[] = {2, 3, 4, 10, 100};
  double lowest_100 = 1.0;
  for (int i = 1; i <= 9; ++i) {
    const Vector theta = vec({0.1 * i});
    const double ml = avar(*model, theta, Method::ml(), cesaro()).sigma(0, 0);
    double previous = 0.0;
    for (const unsigned k : orders) {
      const double are = ml / avar(*model, theta, Method::ql(k), cesaro()).sigma(0, 0);
      out.check(are >= previous - 1e-12, "ARE decreases at p=" + num(theta(0), 2) + " k=" + std::to_string(k));
      previous = are;
    }
    lowest_100 = std::min(lowest_100, previous);
  }
  out.check(lowest_100 >= 0.95, "ARE at k=100 only " + num(lowest_100, 4));
  out.note("min ARE at k=100 " + num(lowest_100, 4));
}

// 11. ---------------------------------------------------------------------
void misspecification(Outcome& out) {
  const auto model = make_model({Family::Kimura4, 0, std::nullopt});
  const Vector base = vec({0.03, 0.04, 0.13, 0.14});
  const Method methods[] = {Method::ml(), Method::ql(2), Method::pl(1)};
  const auto solve = [&](const Method& m, double eps) {
    const LeastFalseResult r = least_false(m, model, kimura6_truth(base, eps));
    if (!r.converged) throw Error(Errc::NoConvergence, m.label() + " least-false search at eps=" + num(eps));
    return r.theta_0;
  };
  double at_zero = 0;
  for (const Method& m : methods) at_zero = std::max(at_zero, max_abs(solve(m, 0.0) - base));
  out.check(at_zero <= 1e-6, "eps=0 least-false off base by " + num(at_zero));
  out.note("eps=0 max deviation " + num(at_zero, 3));
  for (const double eps : {-0.05, 0.05}) {
    const Vector ml = solve(Method::ml(), eps);
    const Vector ql = solve(Method::ql(2), eps);
    const Vector pl = solve(Method::pl(1), eps);
    const Vector gap_ql = (ql - ml).cwiseAbs();
    const Vector gap_pl = (pl - ml).cwiseAbs();
    for (Eigen::Index j = 0; j < 4; ++j) {
      out.check(gap_ql(j) < 0.002, "eps=" + num(eps, 2) + " QL-ML gap " + model->theta_names()[static_cast<std::size_t>(j)] +
                                       " " + num(gap_ql(j), 4));
    }
    out.check(gap_pl.maxCoeff() > 5 * gap_ql.maxCoeff(), "eps=" + num(eps, 2) + " PL gap not 5x QL gap");
    out.note("eps=" + num(eps, 2) + " max QL-ML " + num(gap_ql.maxCoeff(), 4) + ", max PL-ML " +
             num(gap_pl.maxCoeff(), 4));
  }
}

// 12. ---------------------------------------------------------------------
void pushkin(Outcome& out) {
  const Matrix counts = cli::read_count_matrix(std::string(CHAINLIK_TEST_DATA) + "/fixtures/pushkin_pairs.txt");
  const auto model = make_model({Family::GeneralTwoState, 0, std::nullopt});
  const Objective obj(model, Method::ml(), TupleCounts::from_matrix(counts));
  const FitResult f = fit(obj);
  out.check(f.converged, "fit did not converge");
  const Vector pi = stationary_distribution(model->transition_matrix(f.theta_hat)).pi;
  const cli::CsvTable g = golden("pushkin_fit.csv");
  const double ours[] = {1 - f.theta_hat(0), f.theta_hat(1), pi(0), pi(1)};
  for (std::size_t i = 0; i < 4; ++i) {
    const double printed = cell(g, i, "value");
    out.check(std::abs(ours[i] - printed) <= 1e-3, g.rows()[i][0] + " " + num(ours[i], 5) + " vs " + num(printed, 3));
  }
  out.note("1-alpha=" + num(ours[0], 5) + " beta=" + num(ours[1], 5) + " pi=(" + num(ours[2], 5) + "," +
           num(ours[3], 5) + ")");
}

// 13. ---------------------------------------------------------------------
void closed_forms(Outcome& out) {
  struct Pair {
    ModelSpec spec;
    Method method;
  };
  std::vector<Pair> pairs;
  const ModelSpec specs[] = {{Family::SymmetricTwoState, 0, std::nullopt}, {Family::Ising1D, 0, std::nullopt},
                             {Family::GeneralTwoState, 0, std::nullopt},   {Family::ReflectingWalk, 5, std::nullopt},
                             {Family::Saturated, 3, std::nullopt}};
  for (const ModelSpec& spec : specs) {
    for (const Method& m : {Method::ml(), Method::ql(2), Method::ql(3), Method::pl(1)}) {
      if (has_closed_form(spec, m)) pairs.push_back({spec, m});
    }
  }
  testing::Rng rng(13);
  double worst = 0;
  for (const Pair& pr : pairs) {
    const auto model = make_model(pr.spec);
    double pair_worst = 0;
    for (int rep = 0; rep < 50; ++rep) {
      const Vector theta = testing::random_theta(rng, *model, 0.1);
      const ChainPath path =
          simulate(model->transition_matrix(theta), 2000, InitialState::stationary(), derive_seed(1300, pairs.size() * 100 + rep));
      const TupleCounts counts = count_tuples(path, pr.method.required_count_order());
      const FitResult closed = closed_form_fit(pr.spec, pr.method, counts);
      const FitResult numeric = fit(Objective(model, pr.method, counts));
      out.check(numeric.converged, model->name() + " " + pr.method.label() + " fit failed: " + numeric.message);
      pair_worst = std::max(pair_worst, max_abs(numeric.theta_hat - closed.theta_hat));
    }
    out.check(pair_worst <= 1e-6, model->name() + " " + pr.method.label() + " " + num(pair_worst));
    worst = std::max(worst, pair_worst);
  }
  out.note(std::to_string(pairs.size()) + " (family, method) pairs x 50 datasets, max |numeric - closed|=" +
           num(worst, 3));
}

}  // namespace
}  // namespace chainlik

int main() {
  using chainlik::Outcome;
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria = {
      {"1 symmetric two-state closed forms", chainlik::symmetric_two_state},
      {"2 two-state equivalences", chainlik::two_state_equivalences},
      {"3 equicorrelation table", chainlik::equicorrelation_table},
      {"4 Ising table", chainlik::ising_table},
      {"5 three-state sds", chainlik::three_state},
      {"6 Kimura theory sds", chainlik::kimura_theory},
      {"7 Kimura Monte Carlo", chainlik::kimura_monte_carlo},
      {"8 count covariance oracles", chainlik::covariance_oracles},
      {"9 identity suite", chainlik::identity_suite},
      {"10 reflecting walk", chainlik::reflecting_walk},
      {"11 misspecification", chainlik::misspecification},
      {"12 Pushkin fit", chainlik::pushkin},
      {"13 fit vs closed form", chainlik::closed_forms},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      run(out);
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << " [error] " << e.what() << ";";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !out.pass;
    std::cout << (out.pass ? "PASS " : "FAIL ") << name << " (" << chainlik::num(secs, 3) << " s):" << out.detail.str()
              << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
