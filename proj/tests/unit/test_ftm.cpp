#include "rttloc/errors.hpp"
#include "rttloc/ftm.hpp"
#include "rttloc/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace rttloc;

TEST_CASE("compute_rtt examples") {
    CHECK(compute_rtt({0, 5, 10, 15}) == 10);
    CHECK(compute_rtt({100, 100, 100, 100}) == 0);
    CHECK(compute_rtt({0, 40, 60, 100}) == 80);
}

TEST_CASE("compute_rtt rejects non-monotone clocks") {
    CHECK_THROWS_AS(compute_rtt({10, 0, 5, 9}), ValidationError);  // t4 < t1
    CHECK_THROWS_AS(compute_rtt({0, 10, 9, 20}), ValidationError);  // t3 < t2
}

TEST_CASE("clock offsets cancel") {
    Rng rng = make_rng(1);
    std::uniform_int_distribution<Nanoseconds> off(-1'000'000'000'000LL, 1'000'000'000'000LL);
    std::uniform_int_distribution<Nanoseconds> gap(0, 100'000);
    for (int i = 0; i < 1000; ++i) {
        const Nanoseconds t1 = gap(rng), t2 = gap(rng);
        const FtmExchange x{t1, t2, t2 + gap(rng), t1 + gap(rng)};
        const Nanoseconds d = off(rng), dp = off(rng);
        const FtmExchange shifted{x.t1 + d, x.t2 + dp, x.t3 + dp, x.t4 + d};
        REQUIRE(compute_rtt(shifted) == compute_rtt(x));
    }
}

TEST_CASE("average_rtt examples") {
    auto with_rtt = [](Nanoseconds r) { return FtmExchange{0, 0, 0, r}; };
    CHECK(average_rtt(Burst({with_rtt(10), with_rtt(20)})) == 15.0);
    CHECK(average_rtt(Burst({with_rtt(7)})) == 7.0);
    CHECK(average_rtt(Burst({with_rtt(80), with_rtt(80), with_rtt(100), with_rtt(100)})) == 90.0);
    CHECK_THROWS_AS(Burst({}), ValidationError);
    CHECK_THROWS_AS(average_rtt(std::span<const FtmExchange>{}), ValidationError);
}

TEST_CASE("average of identical exchanges is exact") {
    Rng rng = make_rng(2);
    std::uniform_int_distribution<Nanoseconds> t(0, 1'000'000'000);
    for (int i = 0; i < 200; ++i) {
        const Nanoseconds a = t(rng), b = t(rng);
        const FtmExchange x{a, b, b + t(rng) % 1000, a + t(rng) % 5000};
        const std::size_t n = 1 + static_cast<std::size_t>(i % 64);
        CHECK(average_rtt(Burst(std::vector<FtmExchange>(n, x))) == static_cast<double>(compute_rtt(x)));
    }
}

TEST_CASE("rtt <-> distance") {
    CHECK(rtt_to_distance(200) == 30.0);
    CHECK(rtt_to_distance(0) == 0.0);
    CHECK(rtt_to_distance(-20) == -3.0);
    CHECK(distance_to_rtt(30.0) == 200.0);
    CHECK(distance_to_rtt(0.0) == 0.0);
    CHECK(distance_to_rtt(60.0) == 400.0);

    Rng rng = make_rng(3);
    std::uniform_real_distribution<double> exp10(-6.0, 6.0);
    for (int i = 0; i < 10000; ++i) {
        const double d = (i % 2 ? 1 : -1) * std::pow(10.0, exp10(rng));
        const double back = rtt_to_distance(distance_to_rtt(d));
        REQUIRE(std::abs(back - d) <= 1e-12 * std::abs(d));
    }
}
