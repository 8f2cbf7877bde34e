#include <set>

#include "doctest.h"
#include "scrublab/common.hpp"

using namespace scrublab;

TEST_CASE("splitmix stream is deterministic and well spread") {
  rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

  rng c(42);
  double mean = 0.0;
  for (int i = 0; i < 20000; ++i) mean += c.next_double();
  mean /= 20000.0;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("next_double stays in [0,1) and next_int covers its range") {
  rng r(7);
  std::set<int> seen;
  for (int i = 0; i < 5000; ++i) {
    const double d = r.next_double();
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
    seen.insert(r.next_int(3, 7));
  }
  CHECK(seen == std::set<int>{3, 4, 5, 6, 7});
}

TEST_CASE("next_gauss has roughly unit moments") {
  rng r(11);
  double m1 = 0.0, m2 = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double g = r.next_gauss();
    m1 += g;
    m2 += g * g;
  }
  m1 /= n;
  m2 /= n;
  CHECK(m1 == doctest::Approx(0.0).epsilon(0.05));
  CHECK(std::abs(m1) < 0.03);
  CHECK(m2 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("shuffle permutes without losing elements") {
  rng r(5);
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  auto w = v;
  r.shuffle(w);
  CHECK(w != v);
  std::sort(w.begin(), w.end());
  CHECK(w == v);
}

TEST_CASE("derive_seed separates stages, tags and indices") {
  const uint64_t master = 123;
  CHECK(derive_seed(master, "epoch", 1) != derive_seed(master, "epoch", 2));
  CHECK(derive_seed(master, "epoch", 1) != derive_seed(master, "valmask", 1));
  CHECK(derive_seed(master, "a", 1, 2) != derive_seed(master, "a", 2, 1));
  CHECK(derive_seed(1, "a") != derive_seed(2, "a"));
  CHECK(derive_seed(master, "a", 7, 9) == derive_seed(master, "a", 7, 9));
}

TEST_CASE("fnv1a64 matches the published reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("hex round trip") {
  for (uint64_t v : {0ull, 1ull, 0xdeadbeefull, 0xffffffffffffffffull}) {
    CHECK(from_hex(to_hex(v)) == v);
  }
  CHECK(to_hex(0xdeadbeefull).size() == 16);
}

TEST_CASE("error taxonomy maps to distinct types") {
  CHECK_THROWS_AS(require(false, "x"), usage_error);
  CHECK_THROWS_AS(require_data(false, "x"), data_error);
  CHECK_NOTHROW(require(true, "x"));
}
