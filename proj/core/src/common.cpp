#include "scrublab/common.hpp"

#include <array>

namespace scrublab {

uint64_t fnv1a64(const void* data, size_t n, uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

uint64_t fnv1a64(std::string_view s, uint64_t h) { return fnv1a64(s.data(), s.size(), h); }

uint64_t mix64(uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ull;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebull;
  x ^= x >> 31;
  return x;
}

uint64_t derive_seed(uint64_t master, std::string_view tag, uint64_t a, uint64_t b) {
  uint64_t h = fnv1a64(tag);
  h = mix64(h ^ mix64(master + 0x9e3779b97f4a7c15ull));
  h = mix64(h ^ mix64(a + 0xd1b54a32d192ed03ull));
  h = mix64(h ^ mix64(b + 0x8cb92ba72f3d8dd7ull));
  return h;
}

std::string to_hex(uint64_t x) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<size_t>(i)] = digits[x & 0xf];
    x >>= 4;
  }
  return s;
}

uint64_t from_hex(std::string_view s) {
  uint64_t x = 0;
  for (char c : s) {
    x <<= 4;
    if (c >= '0' && c <= '9') {
      x |= static_cast<uint64_t>(c - '0');
    } else if (c >= 'a' && c <= 'f') {
      x |= static_cast<uint64_t>(c - 'a' + 10);
    } else if (c >= 'A' && c <= 'F') {
      x |= static_cast<uint64_t>(c - 'A' + 10);
    } else {
      throw data_error("invalid hex string: " + std::string(s));
    }
  }
  return x;
}

}  // namespace scrublab
