#include "scrublab/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace scrublab {

int perfect_reconstruction(const token_seq& f, const token_seq& ft) {
  return f == ft ? 1 : 0;
}

double hamming(const token_seq& f, const token_seq& ft) {
  require_data(f.size() == ft.size(), "hamming needs equal lengths");
  require_data(!f.empty(), "hamming over empty sequences");
  std::size_t mism = 0;
  for (std::size_t i = 0; i < f.size(); ++i) mism += (f[i] != ft[i]) ? 1u : 0u;
  return static_cast<double>(mism) / static_cast<double>(f.size());
}

double levenshtein_norm(const token_seq& f, const token_seq& ft) {
  const std::size_t n = f.size(), m = ft.size();
  if (n == 0 && m == 0) return 0.0;
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (f[i - 1] == ft[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[m]) / static_cast<double>(std::max(n, m));
}

double jaro_winkler_norm(const token_seq& f, const token_seq& ft) {
  const std::size_t n = f.size(), m = ft.size();
  if (n == 0 && m == 0) return 0.0;
  if (n == 0 || m == 0) return 1.0;

  const std::size_t maxlen = std::max(n, m);
  const std::size_t window = maxlen / 2 >= 1 ? maxlen / 2 - 1 : 0;

  std::vector<char> fmatch(n, 0), tmatch(m, 0);
  std::size_t matches = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i > window ? i - window : 0;
    const std::size_t hi = std::min(m, i + window + 1);
    for (std::size_t j = lo; j < hi; ++j) {
      if (tmatch[j] || f[i] != ft[j]) continue;
      fmatch[i] = tmatch[j] = 1;
      ++matches;
      break;
    }
  }
  if (matches == 0) return 1.0;

  std::size_t transpositions = 0, j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!fmatch[i]) continue;
    while (!tmatch[j]) ++j;
    if (f[i] != ft[j]) ++transpositions;
    ++j;
  }
  const double mm = static_cast<double>(matches);
  const double jaro = (mm / n + mm / m + (mm - transpositions / 2.0) / mm) / 3.0;

  std::size_t prefix = 0;
  for (; prefix < std::min({n, m, static_cast<std::size_t>(4)}); ++prefix)
    if (f[prefix] != ft[prefix]) break;
  const double jw = jaro + static_cast<double>(prefix) * 0.1 * (1.0 - jaro);
  return 1.0 - jw;
}

one_shot_scores score_one_shot(const game_result& result) {
  require_data(!result.fields.empty(), "no fields to score");
  one_shot_scores s;
  for (const auto& r : result.fields) {
    s.pr += perfect_reconstruction(r.ground_truth, r.attempt.tokens);
    s.hd += hamming(r.ground_truth, r.attempt.tokens);
    s.ld += levenshtein_norm(r.ground_truth, r.attempt.tokens);
    s.jwd += jaro_winkler_norm(r.ground_truth, r.attempt.tokens);
  }
  const double inv = 1.0 / static_cast<double>(result.fields.size());
  s.pr *= inv;
  s.hd *= inv;
  s.ld *= inv;
  s.jwd *= inv;
  return s;
}

double improvement_factor(const one_shot_scores& attack, const one_shot_scores& baseline,
                          double eps) {
  require(eps > 0.0, "eps must be positive");
  return 0.25 * ((attack.pr + eps) / (baseline.pr + eps) + (baseline.hd + eps) / (attack.hd + eps) +
                 (baseline.ld + eps) / (attack.ld + eps) +
                 (baseline.jwd + eps) / (attack.jwd + eps));
}

curve_report curves(const std::vector<token_seq>& f, const std::vector<token_seq>& ft, int m) {
  require_data(!f.empty(), "curves need at least one field");
  require_data(f.size() == ft.size(), "curves need aligned field lists");
  const int nf = static_cast<int>(f.size());
  if (m <= 0) m = nf;

  // Prefix means over the given (already sorted) order.
  std::vector<double> prefix_pr(nf + 1, 0.0), prefix_ham(nf + 1, 0.0);
  double acc_pr = 0.0, acc_ham = 0.0;
  for (int i = 0; i < nf; ++i) {
    acc_pr += perfect_reconstruction(f[i], ft[i]);
    acc_ham += hamming(f[i], ft[i]);
    prefix_pr[i + 1] = acc_pr / (i + 1);
    prefix_ham[i + 1] = acc_ham / (i + 1);
  }
  const auto top = [&](double p) {
    const int n = static_cast<int>(std::ceil(p * nf - 1e-9));
    return std::max(1, std::min(nf, n));
  };

  curve_report rep;
  rep.p_grid.resize(m);
  rep.acc_at.resize(m);
  rep.ham_at.resize(m);
  double acc_sum = 0.0, ham_sum = 0.0;
  for (int j = 1; j <= m; ++j) {
    const double p = static_cast<double>(j) / m;
    const int n = top(p);
    rep.p_grid[j - 1] = p;
    rep.acc_at[j - 1] = prefix_pr[n];
    rep.ham_at[j - 1] = prefix_ham[n];
    acc_sum += prefix_pr[n];
    ham_sum += prefix_ham[n];
  }
  rep.acc_auc = acc_sum / m;
  rep.ham_aac = 1.0 - ham_sum / m;
  rep.acc_at_1pct = prefix_pr[top(0.01)];
  rep.acc_at_5pct = prefix_pr[top(0.05)];
  rep.acc_at_100 = prefix_pr[nf];
  return rep;
}

curve_report curves(const game_result& sorted_result, int m) {
  std::vector<token_seq> f, ft;
  f.reserve(sorted_result.fields.size());
  ft.reserve(sorted_result.fields.size());
  for (const auto& r : sorted_result.fields) {
    f.push_back(r.ground_truth);
    ft.push_back(r.attempt.tokens);
  }
  return curves(f, ft, m);
}

}  // namespace scrublab
