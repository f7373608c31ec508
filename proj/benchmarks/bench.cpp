#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "memfp/eval_harness.hpp"
#include "memfp/synthgen.hpp"

using namespace memfp;

namespace {

std::vector<ErrorBitmap> random_bitmaps(std::size_t n, int width, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::uint64_t mask = width == 4 ? 0xffffffffull : ~0ull;
  std::vector<ErrorBitmap> out;
  out.reserve(n);
  while (out.size() < n) {
    const std::uint64_t bits = rng() & rng() & mask;
    if (bits) out.emplace_back(width, bits);
  }
  return out;
}

std::vector<CEEvent> one_dimm_stream(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CEEvent> events;
  Timestamp ts = 1'000'000;
  for (std::size_t i = 0; i < n; ++i) {
    ts += static_cast<Timestamp>(rng() % kHour);
    CEEvent e;
    e.ts = ts;
    e.dimm_id = "D";
    e.address.rank = static_cast<int>(rng() % 2);
    e.address.device = static_cast<int>(rng() % 4);
    e.address.bank_group = static_cast<int>(rng() % 2);
    e.address.bank = static_cast<int>(rng() % 4);
    e.address.row = static_cast<int>(rng() % 32);
    e.address.column = static_cast<int>(rng() % 32);
    std::uint64_t bits = 0;
    while (!bits) bits = rng() & rng() & 0xffffffffull;
    e.bitmap = ErrorBitmap(4, bits);
    events.push_back(e);
  }
  return events;
}

void BM_SpatialFeatures(benchmark::State& state) {
  const auto bitmaps = random_bitmaps(1024, static_cast<int>(state.range(0)), 7);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(spatial_features(bitmaps[i++ & 1023]));
  }
}
BENCHMARK(BM_SpatialFeatures)->Arg(4)->Arg(8);

void BM_MatchRules(benchmark::State& state) {
  const RuleSet rules = default_rules();
  const auto bitmaps = random_bitmaps(1024, 4, 11);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(match_rules(bitmaps[i++ & 1023], rules));
  }
}
BENCHMARK(BM_MatchRules);

void BM_WindowedIndicators(benchmark::State& state) {
  const RuleSet rules = default_rules();
  const auto events = one_dimm_stream(static_cast<std::size_t>(state.range(0)), 13);
  const Timestamp t = events.back().ts;
  for (auto _ : state) {
    benchmark::DoNotOptimize(windowed_indicators(events, rules, t));
  }
}
BENCHMARK(BM_WindowedIndicators)->Arg(100)->Arg(1000);

void BM_ClassifyFaults(benchmark::State& state) {
  const auto events = one_dimm_stream(static_cast<std::size_t>(state.range(0)), 17);
  const Timestamp t = events.back().ts;
  for (auto _ : state) {
    benchmark::DoNotOptimize(classify_faults(events, {}, t));
  }
}
BENCHMARK(BM_ClassifyFaults)->Arg(100)->Arg(1000);

void BM_BuildFeatureVector(benchmark::State& state) {
  DimmSpec spec;
  spec.dimm_id = "D";
  spec.manufacturer = "A";
  spec.capacity_gb = 32;
  spec.data_width = DataWidth::x4;
  spec.frequency_mhz = 2933;
  spec.process_class = "other";
  spec.server_age_days = 500;
  const auto events = one_dimm_stream(static_cast<std::size_t>(state.range(0)), 19);
  const DimmFeatureContext ctx(spec, events, default_rules());
  const WindowConfig cfg;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ctx.build(events.back().ts, cfg));
  }
}
BENCHMARK(BM_BuildFeatureVector)->Arg(100)->Arg(1000);

void BM_PredictProba(benchmark::State& state) {
  std::mt19937_64 rng(23);
  DataMatrix m;
  m.rows = 2000;
  m.cols = 59;
  for (std::size_t i = 0; i < m.rows; ++i) {
    double sum = 0;
    for (std::size_t j = 0; j < m.cols; ++j) {
      const double v = static_cast<double>(rng() % 100);
      m.x.push_back(v);
      sum += v;
    }
    m.y.push_back(sum > 50.0 * static_cast<double>(m.cols) ? 1 : 0);
  }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < m.cols; ++j) names.push_back("f" + std::to_string(j));
  Hyperparams hp;
  hp.n_trees = static_cast<int>(state.range(0));
  const TreeEnsemble model = train(m, names, hp);
  std::vector<double> v(m.x.begin(), m.x.begin() + static_cast<std::ptrdiff_t>(m.cols));
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict_proba(v));
  }
}
BENCHMARK(BM_PredictProba)->Arg(50)->Arg(200);

void BM_Generate(benchmark::State& state) {
  GeneratorConfig cfg;
  cfg.n_dimms = static_cast<std::size_t>(state.range(0));
  cfg.duration_days = 30;
  cfg.seed = 29;
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate(cfg));
  }
}
BENCHMARK(BM_Generate)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
