#pragma once

#include <vector>

#include "scrublab/game.hpp"

namespace scrublab {

using token_seq = std::vector<token_id>;

// 1 iff identical length and ids.
int perfect_reconstruction(const token_seq& f, const token_seq& ft);

// Mismatched positions / k. Lengths must agree.
double hamming(const token_seq& f, const token_seq& ft);

// Unit-cost edit distance over max(|f|, |ft|); 0 for two empty sequences.
double levenshtein_norm(const token_seq& f, const token_seq& ft);

// 1 − Jaro-Winkler similarity over token ids (window ⌊max/2⌋−1, prefix scale
// 0.1, prefix length capped at 4).
double jaro_winkler_norm(const token_seq& f, const token_seq& ft);

struct one_shot_scores {
  double pr = 0.0;
  double hd = 0.0;
  double ld = 0.0;
  double jwd = 0.0;
};

// Per-field metrics between ground truth and retained reconstruction,
// averaged across all fields. Field order is irrelevant.
one_shot_scores score_one_shot(const game_result& result);

// ¼ [ (PRa+ε)/(PRb+ε) + (HDb+ε)/(HDa+ε) + (LDb+ε)/(LDa+ε) + (JWDb+ε)/(JWDa+ε) ].
double improvement_factor(const one_shot_scores& attack, const one_shot_scores& baseline,
                          double eps = 0.05);

struct curve_report {
  std::vector<double> p_grid;
  std::vector<double> acc_at;
  std::vector<double> ham_at;
  double acc_auc = 0.0;
  double ham_aac = 0.0;
  double acc_at_1pct = 0.0;
  double acc_at_5pct = 0.0;
  double acc_at_100 = 0.0;
};

// Top-p prefix curves over an mi-sorted field list. The first max(1, ⌈p·F⌉)
// fields form T(p); m = 0 evaluates the grid at every field boundary, which
// makes the area sums exact for the step functions.
curve_report curves(const std::vector<token_seq>& f, const std::vector<token_seq>& ft, int m = 0);
curve_report curves(const game_result& sorted_result, int m = 0);

}  // namespace scrublab
