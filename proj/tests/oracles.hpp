#pragma once

// Independent reference implementations. Deliberately naive: full DP tables,
// direct textbook formulas, no shared code with the library versions.

#include <algorithm>
#include <cmath>
#include <vector>

#include "scrublab/metrics.hpp"

namespace oracle {

inline int naive_levenshtein_raw(const scrublab::token_seq& a, const scrublab::token_seq& b) {
  const std::size_t n = a.size(), m = b.size();
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const int sub = d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, sub});
    }
  return d[n][m];
}

inline double naive_levenshtein_norm(const scrublab::token_seq& a, const scrublab::token_seq& b) {
  const std::size_t denom = std::max(a.size(), b.size());
  if (denom == 0) return 0.0;
  return static_cast<double>(naive_levenshtein_raw(a, b)) / static_cast<double>(denom);
}

inline double naive_jaro(const scrublab::token_seq& a, const scrublab::token_seq& b) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0 && m == 0) return 1.0;
  if (n == 0 || m == 0) return 0.0;
  const std::size_t maxlen = std::max(n, m);
  const std::size_t window = maxlen / 2 >= 1 ? maxlen / 2 - 1 : 0;

  std::vector<bool> a_match(n, false), b_match(m, false);
  int matches = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i > window ? i - window : 0;
    const std::size_t hi = std::min(m, i + window + 1);
    for (std::size_t j = lo; j < hi; ++j) {
      if (b_match[j] || a[i] != b[j]) continue;
      a_match[i] = b_match[j] = true;
      ++matches;
      break;
    }
  }
  if (matches == 0) return 0.0;

  int half_transpositions = 0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!a_match[i]) continue;
    while (!b_match[j]) ++j;
    if (a[i] != b[j]) ++half_transpositions;
    ++j;
  }
  const double mm = matches;
  const double t = half_transpositions / 2.0;
  return (mm / n + mm / m + (mm - t) / mm) / 3.0;
}

inline double naive_jaro_winkler_norm(const scrublab::token_seq& a, const scrublab::token_seq& b) {
  const double jaro = naive_jaro(a, b);
  std::size_t prefix = 0;
  while (prefix < std::min({a.size(), b.size(), std::size_t(4)}) && a[prefix] == b[prefix])
    ++prefix;
  return 1.0 - (jaro + static_cast<double>(prefix) * 0.1 * (1.0 - jaro));
}

inline std::vector<double> naive_softmax(std::vector<double> v, double temp = 1.0) {
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x / temp);
  for (auto& x : v) x = std::exp(x / temp - mx);
  double s = 0.0;
  for (double x : v) s += x;
  for (auto& x : v) x /= s;
  return v;
}

// -log softmax(row)[label], computed the slow direct way.
inline double naive_ce(const Eigen::MatrixXd& logits, int row, int label) {
  double mx = logits(row, 0);
  for (int c = 1; c < logits.cols(); ++c) mx = std::max(mx, logits(row, c));
  double z = 0.0;
  for (int c = 0; c < logits.cols(); ++c) z += std::exp(logits(row, c) - mx);
  return -(logits(row, label) - mx - std::log(z));
}

}  // namespace oracle
