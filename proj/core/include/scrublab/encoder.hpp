#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scrublab/common.hpp"
#include "scrublab/document.hpp"
#include "scrublab/image.hpp"
#include "scrublab/vocab.hpp"

namespace scrublab {

using matrix = Eigen::MatrixXd;
using vec = Eigen::VectorXd;

enum class task_kind { mlm, ee_bio, ee_spade };

std::string to_string(task_kind t);
task_kind task_kind_from_string(std::string_view s);

inline constexpr int k_num_field_types = 6;
inline constexpr int k_bio_labels = 2 * k_num_field_types + 1;
inline constexpr int k_bio_outside = 0;

// B tags are odd, I tags even; 0 is reserved for outside.
int bio_label_id(field_type t, bool begin);

struct encoder_config {
  int embed_dim = 64;
  int n_layers = 2;
  int n_heads = 4;
  int max_seq_len = 128;
  int coord_buckets = 32;
  bool layout_enabled = true;
  bool visual_enabled = false;
  int vocab_size = 0;

  void validate() const;
  bool operator==(const encoder_config&) const = default;
};

struct layer_params {
  matrix ln1_g, ln1_b;
  matrix wq, bq, wk, bk, wv, bv, wo, bo;
  matrix ln2_g, ln2_b;
  matrix w1, b1, w2, b2;
};

// All tensors are doubles in memory; checkpoints round-trip through float32.
struct model_params {
  encoder_config config;
  task_kind task = task_kind::mlm;

  matrix tok_emb;       // vocab × d
  matrix coord_emb[4];  // buckets × d, one table per box coordinate
  matrix vis_proj;      // 1 × d
  std::vector<layer_params> layers;
  matrix lnf_g, lnf_b;  // 1 × d
  matrix head_w;        // mlm: vocab × d, bio: 13 × d, spade: d × d
  matrix head_b;        // mlm: 1 × vocab, bio: 1 × 13, spade: unused
  matrix spade_none;    // 1 × d, spade only

  static model_params init(const encoder_config& cfg, task_kind task, std::uint64_t seed);
  static model_params zeros_like(const model_params& other);

  // Visits every tensor in a fixed canonical order under stable names.
  void for_each_tensor(const std::function<void(const std::string&, matrix&)>& fn);
  void for_each_tensor(const std::function<void(const std::string&, const matrix&)>& fn) const;

  std::size_t parameter_count() const;
};

// Non-owning view of one document's model inputs. `tokens` may differ from the
// source document (masked or candidate-substituted copies).
struct doc_input {
  const std::vector<token_id>* tokens = nullptr;
  const std::vector<bbox>* boxes = nullptr;
  const image* img = nullptr;
  bool visual_noise = false;
  std::uint64_t visual_noise_seed = 0;
};

struct layer_trace {
  matrix ln1_xhat, a;
  vec ln1_istd;
  matrix q, k, v;
  std::vector<matrix> attn;  // per head, rows sum to 1
  matrix attn_concat;
  matrix x_attn;
  matrix ln2_xhat, b;
  vec ln2_istd;
  matrix f_pre, f_act;
  matrix x_out;
};

struct forward_trace {
  matrix x0;
  std::vector<double> vis;
  std::vector<layer_trace> layers;
  matrix lnf_xhat;
  vec lnf_istd;
  matrix hidden;
};

// Pooled grey level of each token's image region, with optional frozen noise
// substitution keyed on (seed, position).
std::vector<double> visual_features(const doc_input& in, int n);

// Process-wide forward-pass counter, used by tests to audit model access.
std::uint64_t forward_pass_count();
void reset_forward_pass_count();

// Final hidden states, L × d. Fills `trace` when given (needed for backward
// and for attention inspection in tests).
matrix forward_hidden(const model_params& p, const doc_input& in, forward_trace* trace = nullptr);

// Head logits for the given rows of `hidden`. Row i corresponds to
// positions[i]. Classes: vocab (mlm), 13 (bio), L + 1 (spade, last = none).
matrix head_logits(const model_params& p, const matrix& hidden, const std::vector<int>& positions);

// Full per-token logits, L × classes.
matrix forward(const model_params& p, const doc_input& in);

// Cross entropy per target position. targets[i] labels positions[i].
std::vector<double> token_loss(const matrix& logits, const std::vector<int>& targets,
                               const std::vector<int>& positions);

// Supervision for one document under a task. Owns masked token copies and the
// whitened image so the source document stays untouched.
struct train_example {
  std::vector<token_id> input_tokens;
  std::vector<bbox> boxes;
  std::optional<image> img;
  std::vector<int> positions;
  std::vector<int> labels;

  doc_input input() const;
};

train_example make_targets(const document& doc, task_kind task, double mask_rate, rng& r);

// Accumulates d(sum of CE at positions)/dθ into `grads` scaled by grad_scale.
// Returns the unscaled summed loss.
double loss_and_backward(const model_params& p, const doc_input& in,
                         const std::vector<int>& positions, const std::vector<int>& labels,
                         double grad_scale, model_params& grads);

}  // namespace scrublab
