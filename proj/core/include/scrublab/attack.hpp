#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scrublab/corpus.hpp"
#include "scrublab/train.hpp"

namespace scrublab {

enum class mean_kind { arithmetic, geometric };
enum class loss_scope { current_token, field_so_far };

std::string to_string(mean_kind k);
mean_kind mean_kind_from_string(std::string_view s);
std::string to_string(loss_scope s);
loss_scope loss_scope_from_string(std::string_view s);

struct attack_config {
  int n_candidates = 128;
  double pub_temp_start = 1.0;
  double pub_temp_end = 0.3;
  int pub_decay_steps = 3;
  double target_temp = 0.3;
  mean_kind mean = mean_kind::geometric;
  double mean_weight = 0.4;
  double top_p = 0.10;
  int n_attempts = 8;
  loss_scope scope = loss_scope::field_so_far;
  std::uint64_t seed = 1;

  void validate() const;
};

// Read-only model reference plus the visual-noise ablation switches. The
// engine only ever sees checkpoints through this wrapper.
struct model_handle {
  const checkpoint* ckpt = nullptr;
  bool visual_noise = false;
  std::uint64_t noise_seed = 0;

  model_handle(const checkpoint& c) : ckpt(&c) {}
  model_handle(const checkpoint& c, bool noise, std::uint64_t seed)
      : ckpt(&c), visual_noise(noise), noise_seed(seed) {}
  const model_params& params() const { return ckpt->params; }
};

// One token step's working state: every per-candidate quantity of the
// combinatorial inversion, kept for audit and tests.
struct candidate_set {
  std::vector<token_id> ids;
  std::vector<double> pub_logits;
  std::vector<double> pub_probs;      // ĝ over the set, sums to 1
  std::vector<double> target_losses;  // empty in the private-mlm variant
  std::vector<double> final_probs;    // aggregated p over the set, sums to 1
};

struct reconstruction_attempt {
  std::string field_id;
  std::vector<token_id> tokens;
  std::vector<double> p;  // aggregated probability of the sampled token, pre-nucleus
  std::vector<double> g;  // public probability of the sampled token
  int attempt = 0;
};

// Linear decay from pub_temp_start to pub_temp_end over pub_decay_steps,
// constant afterwards. t is 1-based.
double temp_at(const attack_config& cfg, int t);

// Step 1: one public forward; the n highest-logit non-special ids at the
// position of token t, sorted by logit descending then id ascending.
std::pair<std::vector<token_id>, std::vector<double>> select_candidates(
    const model_handle& pub_mlm, const scrubbed_doc& scrubbed,
    const std::vector<token_id>& working_tokens, int t, int n_candidates);

// Step 2: per candidate, one target forward with the candidate written at
// token t; loss summed over the scope positions. Entity-extraction targets
// only; the label pattern is derived from the public span and field type.
std::vector<double> score_candidates_loss(const model_handle& target, const scrubbed_doc& scrubbed,
                                          const std::vector<token_id>& working_tokens, int t,
                                          const std::vector<token_id>& ids, field_type y,
                                          loss_scope scope);

// Step 3: softmax of logits / T(t).
std::vector<double> logits_to_likelihood(const std::vector<double>& logits, int t,
                                         const attack_config& cfg);

// Step 4: l̃ = 2 − l/median(l), then softmax(l̃ / target_temp). All-zero
// median degenerates to the uniform distribution.
std::vector<double> loss_to_likelihood(const std::vector<double>& losses, double target_temp);

// Step 5: arithmetic w·l̂+(1−w)·ĝ or geometric l̂^w·ĝ^(1−w), renormalized.
std::vector<double> aggregate(const std::vector<double>& pub_probs,
                              const std::vector<double>& target_probs, mean_kind kind, double w);

// Step 6: nucleus sampling. Returns the chosen id and its probability in the
// pre-renormalization distribution.
std::pair<token_id, double> sample_top_p(const std::vector<token_id>& ids,
                                         const std::vector<double>& probs, double top_p, rng& r);

// Full six-step loop over t = 1..k against an entity-extraction target.
reconstruction_attempt reconstruct_field(const model_handle& target, const model_handle& pub_mlm,
                                         const scrubbed_doc& scrubbed, const attack_config& cfg,
                                         rng& r);

// MLM-target shortcut: candidates and probabilities come from the target
// itself; the public model only supplies ĝ for membership scoring.
reconstruction_attempt reconstruct_field_private_mlm(const model_handle& target_mlm,
                                                     const model_handle& pub_mlm,
                                                     const scrubbed_doc& scrubbed,
                                                     const attack_config& cfg, rng& r);

// Public-only comparison point: the same pipeline pinned to w = 0, with zero
// target forwards.
reconstruction_attempt baseline_reconstruct(const model_handle& pub_mlm,
                                            const scrubbed_doc& scrubbed, const attack_config& cfg,
                                            rng& r);

void save_attack_manifest(const attack_config& cfg, const std::filesystem::path& file,
                          std::uint64_t spec_hash);
attack_config load_attack_manifest(const std::filesystem::path& file,
                                   std::uint64_t* spec_hash_out = nullptr);

void save_attempts_jsonl(const std::vector<reconstruction_attempt>& attempts,
                         const std::filesystem::path& file, std::uint64_t spec_hash);
std::vector<reconstruction_attempt> load_attempts_jsonl(const std::filesystem::path& file,
                                                        std::uint64_t* spec_hash_out = nullptr);

}  // namespace scrublab
