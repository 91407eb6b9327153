#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "tvulog/rng.hpp"

using namespace tvulog;

TEST_CASE("identical seeds give identical streams") {
    CounterRng a(42), b(42);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
    CounterRng c(42), d(43);
    bool differ = false;
    for (int i = 0; i < 16 && !differ; ++i) differ = c.next_u64() != d.next_u64();
    CHECK(differ);
}

TEST_CASE("stream words are addressable by counter") {
    CounterRng a(7);
    std::vector<std::uint64_t> seq;
    for (int i = 0; i < 32; ++i) seq.push_back(a.next_u64());
    for (int i = 0; i < 32; ++i) CHECK(CounterRng::word(7, std::uint64_t(i)) == seq[std::size_t(i)]);
}

TEST_CASE("uniform draws live in (0,1]") {
    CounterRng a(123);
    for (int i = 0; i < 100000; ++i) {
        double u = a.next_uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u <= 1.0);
    }
}

TEST_CASE("uniform moments") {
    CounterRng a(9001);
    const int n = 200000;
    double sum = 0, sumsq = 0;
    for (int i = 0; i < n; ++i) {
        double u = a.next_uniform();
        sum += u;
        sumsq += u * u;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean - 0.5) < 0.005);
    CHECK(std::abs(var - 1.0 / 12.0) < 0.005);
}

TEST_CASE("normal moments") {
    CounterRng a(555);
    const int n = 200000;
    double sum = 0, sumsq = 0, sumcube = 0;
    for (int i = 0; i < n; ++i) {
        double x = a.next_normal();
        sum += x;
        sumsq += x * x;
        sumcube += x * x * x;
    }
    double mean = sum / n;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(sumsq / n - 1.0) < 0.02);
    CHECK(std::abs(sumcube / n) < 0.05);
    for (int i = 0; i < 1000; ++i) REQUIRE(std::isfinite(a.next_normal()));
}
