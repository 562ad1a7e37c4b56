#include <benchmark/benchmark.h>

#include "chainlik/asymptotics.hpp"
#include "chainlik/estimate.hpp"

namespace {

using namespace chainlik;

Vector kimura_theta() {
  Vector t(4);
  t << 0.027, 0.041, 0.123, 0.128;
  return t;
}

TransitionMatrix walk(std::size_t states) {
  const auto model = make_model({Family::ReflectingWalk, states, std::nullopt});
  Vector p(1);
  p << 0.4;
  return model->transition_matrix(p);
}

void BM_Stationary(benchmark::State& state) {
  const auto model = make_model({Family::Saturated, static_cast<std::size_t>(state.range(0)), std::nullopt});
  const TransitionMatrix p = model->transition_matrix(Vector::Constant(static_cast<Eigen::Index>(model->dim()),
                                                                       0.5 / static_cast<double>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(stationary_distribution(p));
}
BENCHMARK(BM_Stationary)->Arg(4)->Arg(16)->Arg(26);

void BM_GammaFundamental(benchmark::State& state) {
  const TransitionMatrix p = walk(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(gamma_matrices(p, Periodicity::CesaroLimit));
}
BENCHMARK(BM_GammaFundamental)->Arg(5)->Arg(15)->Arg(26);

void BM_PlQFast(benchmark::State& state) {
  const auto model = make_model({Family::Kimura4, 0, std::nullopt});
  const Vector t = kimura_theta();
  for (auto _ : state) benchmark::DoNotOptimize(pl_ingredients(*model, t));
}
BENCHMARK(BM_PlQFast);

void BM_PlQLiteral(benchmark::State& state) {
  const auto model = make_model({Family::Kimura4, 0, std::nullopt});
  const Vector t = kimura_theta();
  for (auto _ : state) benchmark::DoNotOptimize(pl_q_literal(*model, t));
}
BENCHMARK(BM_PlQLiteral);

void BM_Kimura4Fit(benchmark::State& state) {
  const auto model = make_model({Family::Kimura4, 0, std::nullopt});
  const Method method = state.range(0) == 0 ? Method::ml() : state.range(0) == 1 ? Method::ql(2) : Method::pl(1);
  const ChainPath path = simulate(model->transition_matrix(kimura_theta()), 5000, InitialState::stationary(), 5);
  const Objective objective(model, method, count_tuples(path, method.required_count_order()));
  for (auto _ : state) benchmark::DoNotOptimize(fit(objective));
  state.SetLabel(method.label());
}
BENCHMARK(BM_Kimura4Fit)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  const auto model = make_model({Family::Kimura4, 0, std::nullopt});
  const TransitionMatrix p = model->transition_matrix(kimura_theta());
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(simulate(p, 10000, InitialState::stationary(), ++seed));
  state.SetItemsProcessed(state.iterations() * 10000);
}
BENCHMARK(BM_Simulate);

}  // namespace
BENCHMARK_MAIN();
