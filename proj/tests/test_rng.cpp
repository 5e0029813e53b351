#include "doctest.h"

#include <cmath>
#include <vector>

#include "bxt/rng.hpp"

using bxt::Rng;

TEST_CASE("same seed reproduces the stream") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derived substreams differ from parent and siblings") {
    const auto s0 = bxt::derive_seed(42, 0);
    const auto s1 = bxt::derive_seed(42, 1);
    const auto t0 = bxt::derive_seed(43, 0);
    CHECK(s0 != s1);
    CHECK(s0 != t0);
    CHECK(bxt::derive_seed(42, 0) == s0);
}

TEST_CASE("uniform_index stays in range and covers values") {
    Rng rng(7);
    std::vector<int> hits(10, 0);
    for (int i = 0; i < 10000; ++i) {
        const auto v = rng.uniform_index(10);
        REQUIRE(v < 10);
        ++hits[v];
    }
    for (int h : hits) CHECK(h > 800);  // ~1000 expected each
}

TEST_CASE("uniform_open stays strictly inside the interval") {
    Rng rng(11);
    for (int i = 0; i < 1000; ++i) {
        const auto t = rng.uniform_open(0.0, 1.0);
        REQUIRE(t.has_value());
        CHECK(*t > 0.0);
        CHECK(*t < 1.0);
    }
    // no representable interior point
    const double x = 1.0;
    CHECK_FALSE(rng.uniform_open(x, std::nextafter(x, 2.0)).has_value());
    CHECK_FALSE(rng.uniform_open(1.0, 1.0).has_value());
}

TEST_CASE("gaussian moments are sane") {
    Rng rng(5);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gaussian();
        sum += g;
        sum2 += g * g;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.02);
    CHECK(std::abs(var - 1.0) < 0.03);
}
