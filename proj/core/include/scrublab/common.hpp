#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace scrublab {

// Error taxonomy mirrored by the CLI exit codes: usage 1, data 2, numerical 3.
struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw usage_error(msg);
}
inline void require_data(bool cond, const std::string& msg) {
  if (!cond) throw data_error(msg);
}

uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ull);
uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 0xcbf29ce484222325ull);
uint64_t mix64(uint64_t x);

// Seed fan-out: every pipeline stage derives its stream from (master, tag[, a, b]).
// Stable across platforms; documented in the README so runs can be replayed stage by stage.
uint64_t derive_seed(uint64_t master, std::string_view tag, uint64_t a = 0, uint64_t b = 0);

// splitmix64 stream. Self-contained so corpora, training and attacks are
// bit-reproducible independent of the standard library's distributions.
class rng {
 public:
  explicit rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix64(state_);
  }

  // uniform in [0, 1)
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // uniform in [0, n)
  uint64_t next_below(uint64_t n) { return n ? next_u64() % n : 0; }

  int next_int(int lo, int hi) {  // inclusive range
    return lo + static_cast<int>(next_below(static_cast<uint64_t>(hi - lo + 1)));
  }

  double next_gauss() {
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = next_double();
    double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[next_below(i)]);
    }
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[next_below(v.size())];
  }

 private:
  uint64_t state_;
};

std::string to_hex(uint64_t x);
uint64_t from_hex(std::string_view s);

}  // namespace scrublab
