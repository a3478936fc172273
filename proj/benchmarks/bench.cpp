#include <benchmark/benchmark.h>

#include <vector>

#include "textwalk/evaluation.hpp"
#include "textwalk/fixtures.hpp"
#include "textwalk/trainer.hpp"
#include "textwalk/walks.hpp"

using namespace textwalk;

namespace {

const Graph& fixture_graph() {
  static const Graph g = [] {
    FixtureSpec spec;
    spec.base_concepts = 400;
    spec.cross_links = 400;
    return generate_fixture(spec).graph();
  }();
  return g;
}

void BM_AliasSample(benchmark::State& state) {
  Rng rng(1);
  std::vector<double> w(static_cast<std::size_t>(state.range(0)));
  for (auto& x : w) x = rng.uniform(0.1, 4.0);
  const AliasTable table(w);
  for (auto _ : state) benchmark::DoNotOptimize(table.sample(rng));
}
BENCHMARK(BM_AliasSample)->Arg(4)->Arg(64)->Arg(1024);

void BM_BuildAliasTables(benchmark::State& state) {
  WalkConfig cfg;
  cfg.p = 0.5;
  cfg.q = 2.0;
  for (auto _ : state) benchmark::DoNotOptimize(build_alias_tables(fixture_graph(), cfg));
}
BENCHMARK(BM_BuildAliasTables)->Unit(benchmark::kMillisecond);

void BM_GenerateWalks(benchmark::State& state) {
  WalkConfig cfg;
  cfg.p = state.range(0) ? 0.5 : 1.0;
  const auto tables = build_alias_tables(fixture_graph(), cfg);
  std::size_t steps = 0;
  for (auto _ : state) {
    const auto walks = generate_walks(fixture_graph(), tables, cfg, 3);
    steps += walks.size() * cfg.walk_length;
  }
  state.counters["steps/s"] = benchmark::Counter(static_cast<double>(steps), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_GenerateWalks)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_EncodeBackward(benchmark::State& state) {
  const auto kind = static_cast<EncoderKind>(state.range(0));
  const auto model = init_model(fixture_graph(), kind, 30, 1);
  const auto inputs = bind_inputs(model, fixture_graph());
  auto grads = ModelGradients::like(model);
  const std::vector<double> upstream(30, 0.1);
  NodeId v = 0;
  for (auto _ : state) {
    const auto trace = trace_encode(kind, inputs.rows[v], model.focus);
    backward_trace(kind, trace, model.focus, upstream, grads, Side::Focus);
    v = (v + 1) % static_cast<NodeId>(fixture_graph().node_count());
  }
  state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_EncodeBackward)->DenseRange(0, 3);

void BM_Auc(benchmark::State& state) {
  Rng rng(4);
  std::vector<double> pos(static_cast<std::size_t>(state.range(0))), neg(pos.size());
  for (auto& x : pos) x = rng.uniform(0.2, 1.0);
  for (auto& x : neg) x = rng.uniform(0.0, 0.8);
  for (auto _ : state) benchmark::DoNotOptimize(auc(pos, neg));
}
BENCHMARK(BM_Auc)->Arg(1000)->Arg(100000)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
