// Microbenchmarks for the hot paths: transition-matrix construction, the
// document encoder, divergence kernels, and a full gradient step.

#include <benchmark/benchmark.h>

#include <random>

#include "topicnet/gaussian.hpp"
#include "topicnet/model.hpp"
#include "topicnet/objective.hpp"

using namespace topicnet;

namespace {

ModelParams medium_params() {
  // vocabulary 2000, three latent layers, paper-scale embedding width
  return init_params({2000, 128, 64, 32}, {256, 256, 256, 256}, 100, 1);
}

Document random_doc(int vocab, int nnz, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> word(0, vocab - 1);
  std::uniform_int_distribution<int> count(1, 5);
  std::map<int, double> m;
  while (static_cast<int>(m.size()) < nnz) m[word(rng)] += count(rng);
  return {m.begin(), m.end()};
}

void bm_compute_phi(benchmark::State& state) {
  ModelParams p = medium_params();
  for (auto _ : state) benchmark::DoNotOptimize(compute_phi(p, 1));
}
BENCHMARK(bm_compute_phi)->Unit(benchmark::kMillisecond);

void bm_encode(benchmark::State& state) {
  ModelParams p = medium_params();
  std::mt19937_64 rng(2);
  Document doc = random_doc(2000, 80, rng);
  for (auto _ : state) benchmark::DoNotOptimize(encode(p, doc, true, rng));
}
BENCHMARK(bm_encode)->Unit(benchmark::kMillisecond);

void bm_pairwise_kl(benchmark::State& state) {
  ModelParams p = medium_params();
  for (auto _ : state)
    benchmark::DoNotOptimize(pairwise_gaussian_kl(p.mean[1].value, p.log_var[1].value,
                                                  p.mean[2].value, p.log_var[2].value));
}
BENCHMARK(bm_pairwise_kl)->Unit(benchmark::kMillisecond);

void bm_kl_weibull_gamma(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(kl_weibull_gamma(1.3, 0.8, 2.1, 1.0));
}
BENCHMARK(bm_kl_weibull_gamma);

void bm_gradient_step(benchmark::State& state) {
  ModelParams p = init_params({500, 64, 32}, {64, 64, 64}, 32, 3);
  SparseCorpus corpus;
  corpus.vocab_size = 500;
  std::mt19937_64 rng(4);
  for (int d = 0; d < 32; ++d) corpus.docs.push_back(random_doc(500, 40, rng));
  std::vector<int> batch(32);
  std::iota(batch.begin(), batch.end(), 0);
  ObjectiveConfig cfg;
  for (auto _ : state)
    benchmark::DoNotOptimize(total_loss_and_gradients(p, corpus, batch, nullptr, cfg, rng));
}
BENCHMARK(bm_gradient_step)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
