#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "zosd/candidates.hpp"
#include "zosd/eval.hpp"
#include "zosd/scoring.hpp"
#include "zosd/synthetic.hpp"

using namespace zosd;

static void BM_SyntheticEmbed(benchmark::State& state) {
  const auto dim = static_cast<std::size_t>(state.range(0));
  std::uint64_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(synthetic_embed("key" + std::to_string(i++), dim, 42));
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_SyntheticEmbed)->Arg(64)->Arg(512)->Arg(1024);

static void BM_Auroc(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u;
  std::vector<ImageOutcome> outcomes(n);
  for (std::size_t i = 0; i < n; ++i) outcomes[i] = {"", u(rng), i % 3 == 0};
  for (auto _ : state) benchmark::DoNotOptimize(auroc(outcomes));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Auroc)->RangeMultiplier(10)->Range(100, 100000)->Complexity();

static void BM_ExtractCandidates(benchmark::State& state) {
  SyntheticParams p;
  const auto d = synthetic_decoder_output("boat_0001", "boat", p);
  const auto seen = seen_labels(std::vector<std::string>{"airplane", "automobile", "bird", "cat", "deer", "dog"});
  const ScoringConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(extract_candidates(d, cfg, StopList::english(), seen));
}
BENCHMARK(BM_ExtractCandidates);

// One image end to end: candidates, prompt lookups (memoized after the first
// iteration) and the softmax over seen + generated labels.
static void BM_RunInference(benchmark::State& state) {
  SplitSpec s{"bench", {"airplane", "automobile", "bird", "cat", "deer", "dog"}, {"ship"}, {{"ship_0001", "ship"}}};
  const std::vector<SplitSpec> splits{s};
  SyntheticParams p;
  p.dim = static_cast<std::size_t>(state.range(0));
  SyntheticBackend backend(p, image_classes(splits));
  const auto cands = synthetic_candidates(splits, p);
  const auto seen = seen_labels(s.seen_classes);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_inference("ship_0001", seen, backend, cands, ScoringConfig{}, StopList::english()));
  }
}
BENCHMARK(BM_RunInference)->Arg(64)->Arg(512);
BENCHMARK_MAIN();
