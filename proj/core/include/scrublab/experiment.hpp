#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scrublab/game.hpp"
#include "scrublab/metrics.hpp"
#include "scrublab/report.hpp"

namespace scrublab {

enum class variant_kind { one_shot, multi_shot };
enum class modality_kind { unimodal, bimodal };

std::string to_string(variant_kind v);
variant_kind variant_kind_from_string(std::string_view s);
std::string to_string(modality_kind m);
modality_kind modality_kind_from_string(std::string_view s);

struct epoch_sweep_cfg {
  int stride = 5;
  double field_fraction = 0.4;
};

struct ablation_cfg {
  bool layout_off = false;
  bool visual_noise = false;
  std::optional<epoch_sweep_cfg> epoch_sweep;
  bool aux_shift = false;
};

struct stage_train_cfg {
  int epochs = 0;  // 0 keeps the task default
  int batch_size = 8;
  double learning_rate = 1e-3;
  double mask_rate = 0.15;
};

// One attack scenario: corpus, two models, attack settings, ablations.
struct experiment_spec {
  std::string name;
  corpus_spec corpus;
  std::optional<corpus_spec> aux_corpus;  // public-side corpus for aux_shift
  task_kind task = task_kind::ee_bio;
  select_criterion criterion = select_criterion::loss;
  modality_kind modality = modality_kind::bimodal;
  variant_kind variant = variant_kind::one_shot;
  mi_metric_kind mi_metric = mi_metric_kind::perplexity_ratio;
  encoder_config encoder;
  stage_train_cfg target_train;
  stage_train_cfg pub_train;
  attack_config attack;
  ablation_cfg ablations;
  int checkpoint_stride = 1;  // epoch file cadence; first/last/best always kept
  std::uint64_t seed = 1;
};

// Parses the experiment file, pulling in the corpus specs it references.
// The returned hash covers the canonical form of everything parsed and is
// stamped into every artifact the run produces.
experiment_spec load_experiment(const std::filesystem::path& file, std::uint64_t* spec_hash_out);
std::uint64_t experiment_hash(const experiment_spec& exp);

corpus_spec corpus_spec_from_json_text(const std::string& text);
corpus_spec load_corpus_spec(const std::filesystem::path& file);

// Artifact layout of one run directory.
struct run_paths {
  std::filesystem::path root;

  std::filesystem::path corpus_dir() const { return root / "corpus"; }
  std::filesystem::path aux_corpus_dir() const { return root / "aux_corpus"; }
  std::filesystem::path train_dir(const std::string& role) const { return root / "train" / role; }
  std::filesystem::path attack_dir() const { return root / "attack"; }
  std::filesystem::path report_dir() const { return root / "report"; }

  std::filesystem::path corpus_file() const { return corpus_dir() / "docs.jsonl"; }
  std::filesystem::path vocab_file() const { return corpus_dir() / "vocab.txt"; }
  std::filesystem::path aux_corpus_file() const { return aux_corpus_dir() / "docs.jsonl"; }
  std::filesystem::path ckpt_file(const std::string& role, int epoch) const;
  std::filesystem::path best_ckpt_file(const std::string& role, select_criterion c) const;
  std::filesystem::path metrics_csv(const std::string& role) const;
  std::filesystem::path opt_file(const std::string& role) const;
  std::filesystem::path run_info_file() const { return attack_dir() / "run_info.json"; }
};

void cmd_generate(const experiment_spec& exp, const run_paths& paths, bool force);
void cmd_train(const experiment_spec& exp, const run_paths& paths, bool force, bool resume = false);
void cmd_attack(const experiment_spec& exp, const run_paths& paths, bool force, int workers = 1);

// Aggregates finished runs into one table plus per-run curve files.
void cmd_report(const std::vector<std::filesystem::path>& run_roots,
                const std::filesystem::path& out_dir, bool force);

// Runs every experiment file end to end under out_root/<name>, then reports.
void cmd_sweep(const std::vector<std::filesystem::path>& experiment_files,
               const std::filesystem::path& out_root, bool force);

}  // namespace scrublab
