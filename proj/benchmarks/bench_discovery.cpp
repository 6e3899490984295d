#include <fstream>
#include <sstream>

#include <benchmark/benchmark.h>

#include "kdisc/discovery.hpp"
#include "kdisc/language.hpp"
#include "oracles.hpp"

using namespace kdisc;

namespace {

std::string slurp(const std::string& name) {
  std::ifstream in(std::string(KDISC_FIXTURES) + "/" + name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

EventLog synthetic(std::size_t activities, std::size_t traces) {
  std::vector<Label> labels;
  for (std::size_t i = 0; i < activities; ++i) labels.push_back("act" + std::to_string(i));
  std::mt19937_64 rng(activities);
  return oracle::simulate(oracle::random_tree(labels, rng), traces, 7);
}

void BM_DiscoverLoans(benchmark::State& state) {
  const auto log = parse_variants(slurp("loan_log.variants"));
  const auto rules = state.range(0) ? parse_rules(slurp("loan_rules.txt")) : std::vector<DeclareRule>{};
  for (auto _ : state) benchmark::DoNotOptimize(discover(log, rules));
}
BENCHMARK(BM_DiscoverLoans)->Arg(0)->Arg(1);

void BM_DiscoverSynthetic(benchmark::State& state) {
  const auto log = synthetic(static_cast<std::size_t>(state.range(0)), 20000);
  DiscoveryParams p;
  p.workers = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(discover(log, {}, p));
  state.counters["variants"] = static_cast<double>(log.variants().size());
}
BENCHMARK(BM_DiscoverSynthetic)->Args({8, 1})->Args({12, 1})->Args({12, 4})->Args({16, 1})->Unit(benchmark::kMillisecond);

void BM_SelectCutMinedRules(benchmark::State& state) {
  const auto log = synthetic(10, 5000);
  const auto dfg = build_dfg(log);
  const auto cuts = enumerate_cuts(dfg);
  const auto rules = mine_rules(log, 0.9);
  for (auto _ : state) benchmark::DoNotOptimize(select_cut(cuts, dfg, rules, 0.2));
  state.counters["cuts"] = static_cast<double>(cuts.size());
  state.counters["rules"] = static_cast<double>(rules.size());
}
BENCHMARK(BM_SelectCutMinedRules)->Unit(benchmark::kMillisecond);

void BM_ModelSatisfies(benchmark::State& state) {
  const auto log = parse_variants(slurp("loan_log.variants"));
  const auto tree = discover(log, {});
  const auto rule = DeclareRule::binary(Template::NotCoExistence, "A-accepted", "A-rejected");
  for (auto _ : state) benchmark::DoNotOptimize(model_satisfies(rule, tree, 2, 8));
}
BENCHMARK(BM_ModelSatisfies);

}  // namespace
BENCHMARK_MAIN();
