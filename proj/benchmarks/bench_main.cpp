#include <benchmark/benchmark.h>

#include <map>
#include <string>

#include "ldx/engine.hpp"
#include "ldx/models.hpp"
#include "ldx/oracle.hpp"
#include "ldx/spectral.hpp"

using namespace ldx;

namespace {

const models::AnyModel& model(const std::string& name) {
  static std::map<std::string, models::AnyModel> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, models::load_model(std::string(LDX_MODELS_DIR) + "/" + name)).first;
  return it->second;
}

const char* const kModels[] = {"gaussian.json", "markov2.json", "nystrom_vonmises.json", "doubling_cos.json"};

}  // namespace

static void BM_Perron(benchmark::State& state) {
  const AnalyticFamily& f = models::as_family(model(kModels[state.range(0)]));
  const OperatorTriple t = f.evaluate(0.3);
  for (auto _ : state) benchmark::DoNotOptimize(spectral::perron(t));
  state.SetLabel(kModels[state.range(0)]);
}
BENCHMARK(BM_Perron)->DenseRange(0, 3)->Unit(benchmark::kMicrosecond);

static void BM_Taylor(benchmark::State& state) {
  const AnalyticFamily& f = models::as_family(model(kModels[state.range(0)]));
  for (auto _ : state) benchmark::DoNotOptimize(spectral::taylor_via_cauchy(f, 0.3, 8));
  state.SetLabel(kModels[state.range(0)]);
}
BENCHMARK(BM_Taylor)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

static void BM_Expand(benchmark::State& state) {
  const models::AnyModel& m = model("markov2.json");
  engine::ExpandOptions o;
  o.order = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(engine::expand(m, 0.3, o));
}
BENCHMARK(BM_Expand)->Arg(0)->Arg(2)->Arg(6)->Unit(benchmark::kMillisecond);

static void BM_TiltedMc(benchmark::State& state) {
  const auto& m = std::get<models::FiniteMarkovModel>(model("markov2.json"));
  const engine::TiltData t = engine::solve_tilt(model("markov2.json"), 0.3);
  const long long N = state.range(0);
  oracle::McOptions o;
  o.threads = 1;
  for (auto _ : state)
    benchmark::DoNotOptimize(oracle::tilted_mc_tail(m, N, (t.mean + 0.3) * N, t.theta_a, 10000, 7, o));
  state.SetItemsProcessed(state.iterations() * 10000 * N);
}
BENCHMARK(BM_TiltedMc)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

static void BM_Cylinder(benchmark::State& state) {
  const auto& m = std::get<models::FourierTransferModel>(model("doubling_cos.json"));
  const int N = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(oracle::cylinder_tail(m, N, 0.4 * N));
}
BENCHMARK(BM_Cylinder)->Arg(10)->Arg(14)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
