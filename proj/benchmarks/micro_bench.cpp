#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "medverify/bootstrap.hpp"
#include "medverify/corpus.hpp"
#include "medverify/verdict.hpp"

namespace {

medv::corpus::EmbeddingIndex random_index(std::size_t n, std::uint32_t dim) {
  std::mt19937_64 rng(1);
  std::normal_distribution<float> nd;
  medv::corpus::EmbeddingIndex index(dim);
  std::vector<float> v(dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& x : v) x = nd(rng);
    index.add(static_cast<medv::Pmid>(i + 1), v);
  }
  return index;
}

void BM_TopK(benchmark::State& state) {
  const auto index = random_index(static_cast<std::size_t>(state.range(0)), 256);
  const std::vector<float> query(index.row(0).begin(), index.row(0).end());
  for (auto _ : state) benchmark::DoNotOptimize(medv::corpus::top_k(index, query, 10));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_TopK)->Arg(10000)->Arg(100000);

void BM_ParseVerification(benchmark::State& state) {
  const std::string raw = "<think>" + std::string(static_cast<std::size_t>(state.range(0)), 'x') +
                          "</think>\n<score>-1</score>";
  for (auto _ : state) benchmark::DoNotOptimize(medv::parse_verification_output(raw));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(raw.size()));
}
BENCHMARK(BM_ParseVerification)->Arg(200)->Arg(4000);

void BM_Bootstrap(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::vector<double> v(static_cast<std::size_t>(state.range(0)));
  for (auto& x : v) x = static_cast<double>(rng() % 2);
  for (auto _ : state) benchmark::DoNotOptimize(medv::bench::bootstrap_ci(v, 2000, 0.95, 3));
}
BENCHMARK(BM_Bootstrap)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
