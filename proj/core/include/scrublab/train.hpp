#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "scrublab/corpus.hpp"
#include "scrublab/encoder.hpp"

namespace scrublab {

enum class select_criterion { precision, loss };

std::string to_string(select_criterion c);
select_criterion select_criterion_from_string(std::string_view s);

struct train_config {
  task_kind task = task_kind::mlm;
  int epochs = 0;  // 0 resolves to the task default: 300 for mlm, 150 otherwise
  int batch_size = 8;
  double learning_rate = 1e-3;
  double mask_rate = 0.15;
  std::uint64_t seed = 1;
  bool visual_noise_ablation = false;

  void validate() const;
  int effective_epochs() const;
};

struct checkpoint {
  int epoch = 0;
  model_params params;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  std::uint64_t spec_hash = 0;
};

// Moment buffers live in model_params-shaped containers so resume round-trips
// through the same float32 tensor format as checkpoints.
struct adam_state {
  model_params m;
  model_params v;
  std::int64_t step = 0;

  static adam_state zeros_like(const model_params& p);
};

using epoch_sink = std::function<void(const checkpoint&)>;

// Runs mini-batch training and hands one checkpoint per epoch to `sink`.
// Parameters and moments are rounded to float32 at every epoch boundary, so a
// run resumed from a saved epoch is bit-identical to an uninterrupted one.
// `opt_out`, when given, receives the final optimizer state.
void train(const train_config& cfg, const encoder_config& enc, const std::vector<document>& train_docs,
           const std::vector<document>& valid_docs, const epoch_sink& sink,
           const checkpoint* resume_from = nullptr, const adam_state* resume_opt = nullptr,
           adam_state* opt_out = nullptr);

std::vector<checkpoint> train(const train_config& cfg, const encoder_config& enc,
                              const std::vector<document>& train_docs,
                              const std::vector<document>& valid_docs);

// precision: max val_accuracy; loss: min val_loss. Ties go to the earliest epoch.
const checkpoint& select_checkpoint(const std::vector<checkpoint>& checkpoints,
                                    select_criterion criterion);

void round_to_f32(model_params& p);

void save_checkpoint(const checkpoint& ck, const std::filesystem::path& file);
checkpoint load_checkpoint(const std::filesystem::path& file);

void save_adam_state(const adam_state& st, const std::filesystem::path& file);
adam_state load_adam_state(const std::filesystem::path& file, const model_params& shape);

}  // namespace scrublab
