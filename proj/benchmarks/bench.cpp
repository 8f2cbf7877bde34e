#include <benchmark/benchmark.h>

#include "scrublab/attack.hpp"
#include "scrublab/corpus.hpp"
#include "scrublab/encoder.hpp"
#include "scrublab/metrics.hpp"

using namespace scrublab;

namespace {

encoder_config bench_config() {
  encoder_config cfg;
  cfg.embed_dim = 64;
  cfg.n_layers = 2;
  cfg.n_heads = 4;
  cfg.vocab_size = 512;
  cfg.visual_enabled = true;
  return cfg;
}

document bench_doc() {
  corpus_spec spec;
  spec.n_docs = 1;
  spec.seed = 7;
  return generate_corpus(spec, vocabulary::default_vocab())[0];
}

void bm_forward(benchmark::State& state) {
  const auto cfg = bench_config();
  const auto params = model_params::init(cfg, task_kind::mlm, 3);
  const document doc = bench_doc();
  doc_input in;
  in.tokens = &doc.tokens;
  in.boxes = &doc.boxes;
  in.img = doc.img ? &*doc.img : nullptr;
  for (auto _ : state) benchmark::DoNotOptimize(forward(params, in));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(doc.tokens.size()));
}
BENCHMARK(bm_forward);

void bm_train_step(benchmark::State& state) {
  const auto cfg = bench_config();
  auto params = model_params::init(cfg, task_kind::mlm, 3);
  auto grads = model_params::zeros_like(params);
  const document doc = bench_doc();
  rng r(11);
  const train_example ex = make_targets(doc, task_kind::mlm, 0.15, r);
  for (auto _ : state) {
    grads = model_params::zeros_like(params);
    benchmark::DoNotOptimize(
        loss_and_backward(params, ex.input(), ex.positions, ex.labels, 1.0, grads));
  }
}
BENCHMARK(bm_train_step);

void bm_loss_to_likelihood(benchmark::State& state) {
  rng r(5);
  std::vector<double> losses(128);
  for (auto& v : losses) v = 0.1 + 10.0 * r.next_double();
  for (auto _ : state) benchmark::DoNotOptimize(loss_to_likelihood(losses, 0.3));
}
BENCHMARK(bm_loss_to_likelihood);

void bm_sample_top_p(benchmark::State& state) {
  rng r(5);
  std::vector<token_id> ids(128);
  std::vector<double> probs(128);
  double total = 0.0;
  for (int i = 0; i < 128; ++i) {
    ids[i] = 5 + i;
    probs[i] = r.next_double();
    total += probs[i];
  }
  for (auto& p : probs) p /= total;
  for (auto _ : state) benchmark::DoNotOptimize(sample_top_p(ids, probs, 0.1, r));
}
BENCHMARK(bm_sample_top_p);

void bm_levenshtein(benchmark::State& state) {
  rng r(9);
  std::vector<token_id> a(15), b(15);
  for (auto& t : a) t = static_cast<token_id>(r.next_int(5, 511));
  for (auto& t : b) t = static_cast<token_id>(r.next_int(5, 511));
  for (auto _ : state) benchmark::DoNotOptimize(levenshtein_norm(a, b));
}
BENCHMARK(bm_levenshtein);

void bm_jaro_winkler(benchmark::State& state) {
  rng r(9);
  std::vector<token_id> a(15), b(15);
  for (auto& t : a) t = static_cast<token_id>(r.next_int(5, 511));
  for (auto& t : b) t = static_cast<token_id>(r.next_int(5, 511));
  for (auto _ : state) benchmark::DoNotOptimize(jaro_winkler_norm(a, b));
}
BENCHMARK(bm_jaro_winkler);

void bm_generate_corpus(benchmark::State& state) {
  corpus_spec spec;
  spec.n_docs = 16;
  spec.seed = 21;
  const vocabulary vocab = vocabulary::default_vocab();
  for (auto _ : state) benchmark::DoNotOptimize(generate_corpus(spec, vocab));
  state.SetItemsProcessed(state.iterations() * spec.n_docs);
}
BENCHMARK(bm_generate_corpus);

}  // namespace

BENCHMARK_MAIN();
