#include "chainlik/asymptotics.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>

#include "chainlik/error.hpp"

namespace chainlik {

namespace {

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

/// sum over cells of weight(a,b) * x(a,b) y(a,b)^T
Matrix cell_outer_sum(const Matrix& weight, const std::vector<Vector>& x, const std::vector<Vector>& y,
                      Eigen::Index dim) {
  const Eigen::Index s = weight.rows();
  Matrix out = Matrix::Zero(dim, dim);
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index b = 0; b < s; ++b) {
      const double w = weight(a, b);
      if (w == 0.0) continue;
      const auto cell = static_cast<std::size_t>(a * s + b);
      out.noalias() += w * x[cell] * y[cell].transpose();
    }
  }
  return out;
}

/// w(a,c) = (dP P + P dP)(a,c) / p2(a,c); zero where p2 vanishes.
std::vector<Vector> pl_w(const TransitionDerivatives& td, const Matrix& p2) {
  const Eigen::Index s = p2.rows();
  const auto d = static_cast<Eigen::Index>(td.dp.size());
  std::vector<Vector> w(static_cast<std::size_t>(s * s), Vector::Zero(d));
  for (Eigen::Index j = 0; j < d; ++j) {
    const Matrix& dp = td.dp[static_cast<std::size_t>(j)];
    const Matrix dp2 = dp * td.p + td.p * dp;
    for (Eigen::Index a = 0; a < s; ++a) {
      for (Eigen::Index c = 0; c < s; ++c) {
        if (p2(a, c) > 0.0) w[static_cast<std::size_t>(a * s + c)](j) = dp2(a, c) / p2(a, c);
      }
    }
  }
  return w;
}

}  // namespace

Matrix invert_information(const Matrix& information) {
  const Matrix sym = symmetrize(information);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > 1e12) {
    throw Error(Errc::SingularInformation,
                "information matrix is singular or ill-conditioned (eigenvalues " + std::to_string(lo) + " .. " +
                    std::to_string(hi) + ")");
  }
  const Eigen::LDLT<Matrix> ldlt(sym);
  return symmetrize(ldlt.solve(Matrix::Identity(sym.rows(), sym.cols())));
}

MLIngredients info_J(const ParametricModel& model, const Vector& theta, const AsymptoticOptions& opts) {
  const CellScores cs = transition_and_scores(model, theta, opts.derivatives);
  const Vector pi = stationary_distribution(cs.p).pi;
  const auto s = static_cast<Eigen::Index>(model.num_states());
  const auto d = static_cast<Eigen::Index>(model.dim());
  MLIngredients out;
  out.J = Matrix::Zero(d, d);
  for (Eigen::Index a = 0; a < s; ++a) {
    Matrix ja = Matrix::Zero(d, d);
    for (Eigen::Index b = 0; b < s; ++b) {
      const double p = cs.p(a, b);
      if (p == 0.0) continue;
      const Vector& u = cs.u_at(a, b);
      ja.noalias() += p * u * u.transpose();
    }
    out.J += pi(a) * ja;
    out.J_a.push_back(ja);
  }
  out.J = symmetrize(out.J);
  return out;
}

QLIngredients ql_ingredients(const ParametricModel& model, const Vector& theta, unsigned k,
                             const AsymptoticOptions& opts) {
  if (k < 2) throw Error(Errc::InvalidArgument, "QL order must be >= 2");
  const CellScores cs = transition_and_scores(model, theta, opts.derivatives);
  const StationaryScores ss = stationary_scores(model, theta, opts.derivatives);
  const GammaMatrices gm = gamma_matrices(cs.p, opts.periodicity);
  const Vector& pi = ss.pi;
  const Matrix& v = ss.v;
  const auto s = static_cast<Eigen::Index>(model.num_states());
  const auto d = static_cast<Eigen::Index>(model.dim());
  const Matrix J = info_J(model, theta, opts).J;

  QLIngredients out;
  out.k = k;
  out.periodic = gm.periodic;
  out.H = symmetrize(v.transpose() * pi.asDiagonal() * v);
  out.G = v.transpose() * pi.asDiagonal() * gm.gamma_bar * v;
  const Matrix kappa = gm.gamma * v;  // row b is kappa_b
  for (Eigen::Index b = 0; b < s; ++b) out.kappa.push_back(kappa.row(b).transpose());
  out.L = Matrix::Zero(d, d);
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index b = 0; b < s; ++b) {
      const double w = pi(a) * cs.p(a, b);
      if (w == 0.0) continue;
      out.L.noalias() += w * cs.u_at(a, b) * out.kappa[static_cast<std::size_t>(b)].transpose();
    }
  }
  const double km1 = static_cast<double>(k - 1);
  out.J_k = symmetrize(km1 * J + out.H);
  out.K_k = symmetrize(km1 * km1 * J + out.H + out.G + out.G.transpose() + km1 * (out.L + out.L.transpose()));
  return out;
}

PLIngredients pl_ingredients(const ParametricModel& model, const Vector& theta, const AsymptoticOptions& opts) {
  const CellScores cs = transition_and_scores(model, theta, opts.derivatives);
  const TransitionDerivatives td = transition_derivatives(model, theta, opts.derivatives);
  const Vector pi = stationary_distribution(cs.p).pi;
  const Matrix& p = cs.p.matrix();
  const Matrix p2 = p * p;
  const auto s = static_cast<Eigen::Index>(model.num_states());
  const auto d = static_cast<Eigen::Index>(model.dim());
  const Matrix J = info_J(model, theta, opts).J;

  PLIngredients out;
  out.w = pl_w(td, p2);
  out.M = symmetrize(cell_outer_sum(pi.asDiagonal() * p2, out.w, out.w, d));

  out.R = Matrix::Zero(d, d);
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index b = 0; b < s; ++b) {
      if (p(a, b) == 0.0) continue;
      for (Eigen::Index c = 0; c < s; ++c) {
        const double weight = pi(a) * p(a, b) * p(b, c);
        if (weight == 0.0) continue;
        out.R.noalias() += weight * (cs.u_at(a, b) + cs.u_at(b, c)) *
                           out.w[static_cast<std::size_t>(a * s + c)].transpose();
      }
    }
  }

  // Q_jk = sum_{a,c} pi_a W_j(a,c) (P Z_k)(a,c) with Z_k = P o (W_k P^T).
  std::vector<Matrix> W(static_cast<std::size_t>(d), Matrix::Zero(s, s));
  for (Eigen::Index a = 0; a < s; ++a) {
    for (Eigen::Index c = 0; c < s; ++c) {
      const Vector& wac = out.w[static_cast<std::size_t>(a * s + c)];
      for (Eigen::Index j = 0; j < d; ++j) W[static_cast<std::size_t>(j)](a, c) = wac(j);
    }
  }
  out.Q = Matrix::Zero(d, d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const Matrix z = p.cwiseProduct(W[static_cast<std::size_t>(k)] * p.transpose());
    const Matrix pz = pi.asDiagonal() * (p * z);
    for (Eigen::Index j = 0; j < d; ++j) out.Q(j, k) = W[static_cast<std::size_t>(j)].cwiseProduct(pz).sum();
  }

  out.J0 = symmetrize(2.0 * J - out.M);
  out.K0 = symmetrize(4.0 * J - 3.0 * out.M + out.Q + out.Q.transpose());
  return out;
}

Matrix pl_q_literal(const ParametricModel& model, const Vector& theta, const AsymptoticOptions& opts) {
  const PLIngredients pl = pl_ingredients(model, theta, opts);
  const Matrix p = model.transition_matrix(theta).matrix();
  const Vector pi = stationary_vector(p);
  const Eigen::Index s = p.rows();
  const auto d = static_cast<Eigen::Index>(model.dim());
  Matrix q = Matrix::Zero(d, d);
  for (Eigen::Index a = 0; a < s; ++a)
    for (Eigen::Index c = 0; c < s; ++c)
      for (Eigen::Index dd = 0; dd < s; ++dd)
        for (Eigen::Index f = 0; f < s; ++f) {
          const double weight = pi(a) * p(a, dd) * p(dd, c) * p(c, f);
          if (weight == 0.0) continue;
          q.noalias() += weight * pl.w[static_cast<std::size_t>(a * s + c)] *
                         pl.w[static_cast<std::size_t>(dd * s + f)].transpose();
        }
  return q;
}

AvarResult avar(const ParametricModel& model, const Vector& theta, const Method& method,
                const AsymptoticOptions& opts) {
  method.validate();
  AvarResult out;
  out.method = method;
  switch (method.kind) {
    case Method::Kind::ML: {
      MLIngredients ml = info_J(model, theta, opts);
      out.sigma = invert_information(ml.J);
      out.ingredients = std::move(ml);
      break;
    }
    case Method::Kind::QL: {
      QLIngredients ql = ql_ingredients(model, theta, method.order, opts);
      const Matrix inv = invert_information(ql.J_k);
      out.sigma = symmetrize(inv * ql.K_k * inv);
      out.ingredients = std::move(ql);
      break;
    }
    case Method::Kind::PL: {
      if (method.order != 1) {
        throw Error(Errc::InvalidArgument, "limit variance is available for PL of order 1 only");
      }
      PLIngredients pl = pl_ingredients(model, theta, opts);
      const Matrix inv = invert_information(pl.J0);
      out.sigma = symmetrize(inv * pl.K0 * inv);
      out.ingredients = std::move(pl);
      break;
    }
  }
  out.sds = out.sigma.diagonal().cwiseMax(0.0).cwiseSqrt();
  return out;
}

// ---------------------------------------------------------------------------
// Count covariances

Matrix pair_cov(const TransitionMatrix& tm, Periodicity periodicity) {
  const GammaMatrices gm = gamma_matrices(tm, periodicity);
  const Vector pi = stationary_distribution(tm).pi;
  const Matrix& p = tm.matrix();
  const Matrix& g = gm.gamma;
  const Eigen::Index s = p.rows();
  Matrix out(s * s, s * s);
  for (Eigen::Index a = 0; a < s; ++a)
    for (Eigen::Index b = 0; b < s; ++b)
      for (Eigen::Index c = 0; c < s; ++c)
        for (Eigen::Index d = 0; d < s; ++d) {
          const double same = (a == c && b == d) ? 1.0 : 0.0;
          out(a * s + b, c * s + d) = pi(a) * p(a, b) * (same - pi(c) * p(c, d)) +
                                      p(a, b) * p(c, d) * (pi(a) * g(b, c) + pi(c) * g(d, a));
        }
  return out;
}

Matrix triplet_cov(const TransitionMatrix& tm, Periodicity periodicity) {
  const GammaMatrices gm = gamma_matrices(tm, periodicity);
  const Vector pi = stationary_distribution(tm).pi;
  const Matrix& p = tm.matrix();
  const Matrix& g = gm.gamma;
  const Eigen::Index s = p.rows();
  auto idx = [s](Eigen::Index x, Eigen::Index y, Eigen::Index z) { return (x * s + y) * s + z; };
  auto delta = [](Eigen::Index x, Eigen::Index y) { return x == y ? 1.0 : 0.0; };
  Matrix out(s * s * s, s * s * s);
  for (Eigen::Index a = 0; a < s; ++a)
    for (Eigen::Index b = 0; b < s; ++b)
      for (Eigen::Index c = 0; c < s; ++c) {
        const double left = pi(a) * p(a, b) * p(b, c);
        for (Eigen::Index d = 0; d < s; ++d)
          for (Eigen::Index e = 0; e < s; ++e)
            for (Eigen::Index f = 0; f < s; ++f) {
              const double right = pi(d) * p(d, e) * p(e, f);
              double v = left * (delta(a, d) * delta(b, e) * delta(c, f) - right);
              v += left * (delta(b, d) * delta(c, e) - pi(d) * p(d, e)) * p(e, f);
              v += right * (delta(e, a) * delta(f, b) - pi(a) * p(a, b)) * p(b, c);
              v += left * g(c, d) * p(d, e) * p(e, f);
              v += right * g(f, a) * p(a, b) * p(b, c);
              out(idx(a, b, c), idx(d, e, f)) = v;
            }
      }
  return out;
}

Matrix marginal_triplet_cov(const TransitionMatrix& tm, Periodicity periodicity) {
  const GammaMatrices gm = gamma_matrices(tm, periodicity);
  const Vector pi = stationary_distribution(tm).pi;
  const Matrix& p = tm.matrix();
  const Matrix p2 = p * p;
  const Matrix& g = gm.gamma;
  const Eigen::Index s = p.rows();
  Matrix out(s * s, s * s);
  for (Eigen::Index a = 0; a < s; ++a)
    for (Eigen::Index c = 0; c < s; ++c)
      for (Eigen::Index d = 0; d < s; ++d)
        for (Eigen::Index f = 0; f < s; ++f) {
          const double same = (a == d && c == f) ? 1.0 : 0.0;
          const double x = pi(a) * p2(a, c), y = pi(d) * p2(d, f);
          out(a * s + c, d * s + f) = x * (same - y) + pi(a) * p(a, d) * p(d, c) * p(c, f) +
                                      pi(d) * p(d, a) * p(a, f) * p(f, c) - 2.0 * x * y +
                                      x * g(c, d) * p2(d, f) + y * g(f, a) * p2(a, c);
        }
  return out;
}

Matrix marginal_triplet_cov_from_triplets(const Matrix& triplet, std::size_t num_states) {
  const auto s = static_cast<Eigen::Index>(num_states);
  Matrix out = Matrix::Zero(s * s, s * s);
  for (Eigen::Index a = 0; a < s; ++a)
    for (Eigen::Index b = 0; b < s; ++b)
      for (Eigen::Index c = 0; c < s; ++c)
        for (Eigen::Index d = 0; d < s; ++d)
          for (Eigen::Index e = 0; e < s; ++e)
            for (Eigen::Index f = 0; f < s; ++f)
              out(a * s + c, d * s + f) += triplet((a * s + b) * s + c, (d * s + e) * s + f);
  return out;
}

Matrix pair_cov_from_triplets(const Matrix& triplet, std::size_t num_states) {
  const auto s = static_cast<Eigen::Index>(num_states);
  Matrix out = Matrix::Zero(s * s, s * s);
  for (Eigen::Index a = 0; a < s; ++a)
    for (Eigen::Index b = 0; b < s; ++b)
      for (Eigen::Index c = 0; c < s; ++c)
        for (Eigen::Index d = 0; d < s; ++d)
          for (Eigen::Index e = 0; e < s; ++e)
            for (Eigen::Index f = 0; f < s; ++f)
              out(a * s + b, d * s + e) += triplet((a * s + b) * s + c, (d * s + e) * s + f);
  return out;
}

// ---------------------------------------------------------------------------
// Delta method

Vector fd_gradient(const std::function<double(const Vector&)>& psi, const Vector& theta) {
  Vector g(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double h = fd_step(theta(j));
    Vector plus = theta, minus = theta;
    plus(j) += h;
    minus(j) -= h;
    g(j) = (psi(plus) - psi(minus)) / (2.0 * h);
  }
  return g;
}

Vector focus_gradient(const FocusParameter& focus, const Vector& theta) {
  return focus.gradient ? focus.gradient(theta) : fd_gradient(focus.psi, theta);
}

double delta_method(const AvarResult& result, const FocusParameter& focus, const Vector& theta) {
  const Vector g = focus_gradient(focus, theta);
  if (!g.allFinite()) throw Error(Errc::InvalidArgument, focus.name + ": gradient is not finite");
  return g.dot(result.sigma * g);
}

FocusParameter asynchronous_distance(std::shared_ptr<const ParametricModel> model) {
  FocusParameter f;
  f.name = "asynchronous_distance";
  f.psi = [model](const Vector& theta) {
    const double det = model->transition(theta).determinant();
    if (!(det > 0.0)) throw Error(Errc::SingularP, "|P(theta)| <= 0; log|P| is undefined");
    return -0.25 * std::log(det);
  };
  f.gradient = [model](const Vector& theta) {
    const TransitionDerivatives td = transition_derivatives(*model, theta);
    const double det = td.p.determinant();
    if (!(det > 0.0)) throw Error(Errc::SingularP, "|P(theta)| <= 0; log|P| is undefined");
    const Matrix inv = td.p.inverse();
    Vector g(static_cast<Eigen::Index>(td.dp.size()));
    for (std::size_t j = 0; j < td.dp.size(); ++j) {
      g(static_cast<Eigen::Index>(j)) = -0.25 * (inv * td.dp[j]).trace();
    }
    return g;
  };
  return f;
}

Vector kimura4_distance_coefficients(const Vector& theta) {
  const auto model = make_model({Family::Kimura4, 0, std::nullopt});
  const Matrix p = model->transition(theta);
  if (!(p.determinant() > 0.0)) throw Error(Errc::SingularP, "|P(theta)| <= 0; log|P| is undefined");
  const Matrix inv = p.inverse();
  // P^{j,i} is entry (j,i) of P^-1, one-based.
  auto P = [&inv](int j, int i) { return inv(j - 1, i - 1); };
  Vector c(4);
  c(0) = -2 * P(1, 1) + P(3, 1) + P(4, 1) - 2 * P(2, 2) + P(3, 2) + P(4, 2);
  c(1) = P(1, 3) + P(2, 3) - 2 * P(3, 3) + P(1, 4) + P(2, 4) - 2 * P(4, 4);
  c(2) = P(2, 1) - P(1, 1) - P(3, 3) + P(4, 3);
  c(3) = P(1, 2) - P(2, 2) + P(3, 4) - P(4, 4);
  return c;
}

std::vector<FocusParameter> kimura4_focus_parameters() {
  std::vector<FocusParameter> out;
  auto add = [&out](std::string name, std::function<double(const Vector&)> psi) {
    out.push_back({std::move(name), std::move(psi), {}});
  };
  add("p(1)", [](const Vector& t) { return t(1) * (1 - 2 * t(0)) / (t(0) + t(1)); });
  add("p(2)", [](const Vector& t) { return t(0) * (1 - 2 * t(1)) / (t(0) + t(1)); });
  add("p(1->2)", [](const Vector& t) { return 2 * t(0) * t(1) / (t(0) + t(1)); });
  add("p(2->1)", [](const Vector& t) { return 2 * t(0) * t(1) / (t(0) + t(1)); });
  add("gamma/delta", [](const Vector& t) { return t(2) / t(3); });
  add("psi(1,2)", [](const Vector& t) {
    return 2 * t(1) * (t(0) + t(1)) / (t(0) * (1 + 2 * t(1)) * (1 + 2 * t(1)));
  });
  add("psi(2,1)", [](const Vector& t) {
    return 2 * t(0) * (t(0) + t(1)) / (t(1) * (1 + 2 * t(0)) * (1 + 2 * t(0)));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo

McSummary mc_study(std::shared_ptr<const ParametricModel> model, const Vector& theta_true, const Method& method,
                   std::size_t n, std::size_t reps, std::uint64_t seed, const McOptions& options) {
  method.validate();
  if (reps < 2) throw Error(Errc::InvalidArgument, "mc_study needs at least two replications");
  const TransitionMatrix tm = model->transition_matrix(theta_true);
  FitOptions fopts = options.fit;
  if (options.start_at_truth) fopts.start_points.push_back(theta_true);
  fopts.throw_on_failure = true;

  McSummary out;
  out.method = method;
  out.n = n;
  out.reps = reps;
  out.seed = seed;
  for (std::size_t r = 0; r < reps; ++r) {
    const ChainPath path = simulate(tm, n, InitialState::stationary(), derive_seed(seed, r));
    try {
      const TupleCounts counts = count_tuples(path, method.required_count_order());
      const Objective objective(model, method, counts);
      out.estimates.push_back(fit(objective, fopts).theta_hat);
    } catch (const Error& e) {
      out.failures.push_back("rep " + std::to_string(r) + ": " + e.what());
    }
  }
  out.n_ok = out.estimates.size();
  out.n_failed = out.failures.size();
  if (static_cast<double>(out.n_failed) > options.max_failure_rate * static_cast<double>(reps)) {
    throw Error(Errc::TooManyFailures, std::to_string(out.n_failed) + " of " + std::to_string(reps) +
                                           " replications failed to converge");
  }
  const auto d = theta_true.size();
  out.mean = Vector::Zero(d);
  for (const Vector& e : out.estimates) out.mean += e;
  out.mean /= static_cast<double>(out.n_ok);
  Vector var = Vector::Zero(d);
  for (const Vector& e : out.estimates) var += (e - out.mean).cwiseAbs2();
  var /= static_cast<double>(out.n_ok - 1);
  out.sd_scaled = (var * static_cast<double>(n)).cwiseSqrt();
  return out;
}

}  // namespace chainlik
