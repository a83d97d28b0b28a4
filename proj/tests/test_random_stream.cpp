#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "nrsync/random_stream.hpp"
#include "stats_util.hpp"

using namespace nrsync;

TEST_CASE("stream output is pinned") {
    // Frozen reference values; a change here breaks reproducibility of
    // every published run.
    RandomStream r(42, 0);
    CHECK(r.next_u64() == 0xb340bdbc3082000fULL);
    CHECK(r.next_u64() == 0x55c257003f5e2287ULL);
    CHECK(r.next_u64() == 0x9fb004bce4189dd4ULL);

    RandomStream g(42, 7);
    CHECK(g.standard_normal() == 0.66627803371083327);
    CHECK(g.standard_normal() == 1.2410380338790434);
    CHECK(g.standard_normal() == 0.37821246596782798);
}

TEST_CASE("equal seed and stream id give identical sequences") {
    RandomStream a(123, 456);
    RandomStream b(123, 456);
    for (int i = 0; i < 10000; ++i) {
        REQUIRE(a.standard_normal() == b.standard_normal());
        REQUIRE(a.uniform() == b.uniform());
    }
    RandomStream c(123, 457);
    RandomStream d(124, 456);
    RandomStream a2(123, 456);
    int same_c = 0;
    int same_d = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto x = a2.next_u64();
        same_c += x == c.next_u64();
        same_d += x == d.next_u64();
    }
    CHECK(same_c == 0);
    CHECK(same_d == 0);
}

TEST_CASE("uniform stays in [0, 1)") {
    RandomStream r(1, 1);
    double lo = 1.0;
    double hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = r.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 1e-3);
    CHECK(hi > 1.0 - 1e-3);
}

TEST_CASE("substreams are uncorrelated") {
    constexpr int n = 1'000'000;
    std::vector<double> a(n);
    std::vector<double> b(n);
    for (int i = 0; i < n; ++i) {
        RandomStream s0(99, 2 * static_cast<std::uint64_t>(i));
        RandomStream s1(99, 2 * static_cast<std::uint64_t>(i) + 1);
        a[i] = s0.standard_normal();
        b[i] = s1.standard_normal();
    }
    CHECK(std::abs(test::correlation(a, b)) < 0.01);

    // Consecutive draws within one stream as well.
    RandomStream s(5, 0);
    for (int i = 0; i < n; ++i) {
        a[i] = s.uniform();
        b[i] = s.uniform();
    }
    CHECK(std::abs(test::correlation(a, b)) < 0.01);
}

TEST_CASE("standard normal moments") {
    RandomStream r(2024, 3);
    constexpr int n = 1'000'000;
    std::vector<double> z(n);
    for (auto& v : z) {
        v = r.standard_normal();
    }
    const auto m = test::moments(z);
    CHECK(std::abs(m.mean) < 4.0 / std::sqrt(n));
    CHECK(m.stddev == doctest::Approx(1.0).epsilon(0.003));
}

TEST_CASE("portable_log tracks std::log to a few ulp") {
    auto ulps = [](double a, double b) {
        return std::abs(a - b) /
               (std::nextafter(std::abs(b), std::numeric_limits<double>::infinity()) -
                std::abs(b));
    };
    for (double x : {1.0, 2.0, 0.5, 1e-300, 1e300, 0.7071067811865476, 1.4142135623730951,
                     std::numeric_limits<double>::denorm_min(), 3.0, 10.0}) {
        const double ref = std::log(x);
        if (ref == 0.0) {
            CHECK(portable_log(x) == 0.0);
        } else {
            CHECK(ulps(portable_log(x), ref) <= 4.0);
        }
    }
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200000; ++i) {
        const double x = u(gen);
        if (x == 0.0 || std::abs(x - 1.0) < 1e-6) {
            continue;
        }
        REQUIRE(ulps(portable_log(x), std::log(x)) <= 4.0);
    }
    CHECK(std::isinf(portable_log(0.0)));
    CHECK(std::isnan(portable_log(-1.0)));
}
