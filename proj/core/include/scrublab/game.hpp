#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scrublab/attack.hpp"

namespace scrublab {

enum class mi_metric_kind {
  raw_perplexity,
  perplexity_ratio,
  raw_and_ratio,
  max_token_gap,
  max_token_ratio,
};

std::string to_string(mi_metric_kind k);
mi_metric_kind mi_metric_kind_from_string(std::string_view s);

enum class likelihood_source { target, public_side };

// likelihood = ∏ q_t, perplexity = likelihood^(-1/k).
std::pair<double, double> field_likelihood_and_perplexity(const reconstruction_attempt& attempt,
                                                          likelihood_source source);

// Higher = more plausibly memorized, for every kind.
double mi_score(const reconstruction_attempt& attempt, mi_metric_kind kind);

// Max score wins; ties go to the lowest attempt index.
const reconstruction_attempt& mi_filter(const std::vector<reconstruction_attempt>& attempts,
                                        mi_metric_kind kind);

struct field_record {
  std::string field_id;
  std::vector<token_id> ground_truth;  // attached by result assembly, for EVAL only
  reconstruction_attempt attempt;
  double mi = 0.0;
  int rank = 0;
};

// Stable descending sort by mi, ranks rewritten 1..n.
void mi_sort(std::vector<field_record>& records, mi_metric_kind kind);

struct game_result {
  std::vector<field_record> fields;
  mi_metric_kind metric = mi_metric_kind::perplexity_ratio;
  bool sorted = false;
};

// Attack and baseline evaluated through one shared code path.
struct game_pair {
  game_result attack;
  game_result baseline;
};

// Restricts a game to a subset of fields; empty means all.
using field_filter = std::function<bool(const std::string& field_id)>;

// Raw per-attempt log, written before filtering.
struct attempt_log {
  std::vector<reconstruction_attempt> attack;
  std::vector<reconstruction_attempt> baseline;
};

// One attempt per field, no filtering, no sorting. The target task picks the
// reconstruction route: mlm uses the private-mlm variant, ee tasks the full
// six-step loop. Fields are independent, so any worker count gives identical
// output.
game_pair run_one_shot(const model_handle& target, const model_handle& pub_mlm,
                       const std::vector<document>& private_docs, const attack_config& cfg,
                       mi_metric_kind metric, const field_filter& filter = {},
                       attempt_log* log = nullptr, int workers = 1);

// n_attempts per field, filter to one, then sort by plausibility.
game_pair run_multi_shot(const model_handle& target, const model_handle& pub_mlm,
                         const std::vector<document>& private_docs, const attack_config& cfg,
                         mi_metric_kind metric, const field_filter& filter = {},
                         attempt_log* log = nullptr, int workers = 1);

void save_game_result(const game_result& result, const std::filesystem::path& file,
                      std::uint64_t spec_hash);
game_result load_game_result(const std::filesystem::path& file,
                             std::uint64_t* spec_hash_out = nullptr);

}  // namespace scrublab
