#include <doctest.h>

#include <cmath>
#include <set>

#include "planarflow/rng.hpp"

using namespace planarflow;

TEST_CASE("identical seeds give bitwise identical streams") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("derived streams differ from parent and each other") {
    Rng root(7);
    Rng c1 = root.derive(1);
    Rng c2 = root.derive(2);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 100; ++i) {
        seen.insert(c1.next_u64());
        seen.insert(c2.next_u64());
    }
    CHECK(seen.size() == 200);
}

TEST_CASE("normal moments over 1e5 draws") {
    Rng rng(123);
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    // 4-sigma confidence bands.
    CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("uniform stays in [0,1) and uniform_index in range") {
    Rng rng(5);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        CHECK(rng.uniform_index(7) < 7);
    }
}

TEST_CASE("keyed_normal is a pure function of (key, cell)") {
    const std::uint64_t key = Rng(99).stream_key();
    const double a = keyed_normal(key, 12345);
    (void)keyed_normal(key, 1);
    (void)keyed_normal(key, 99999);
    CHECK(keyed_normal(key, 12345) == a);
    CHECK(keyed_normal(key, 12346) != a);
}

TEST_CASE("keyed_normal marginals are standard normal") {
    const std::uint64_t key = Rng(2024).stream_key();
    const int n = 100000;
    double sum = 0.0, sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = keyed_normal(key, static_cast<std::uint64_t>(i));
        sum += x;
        sq += x * x;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}
