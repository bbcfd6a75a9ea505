#include "rttloc/errors.hpp"
#include "rttloc/ftm.hpp"
#include "rttloc/sim.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

using namespace rttloc;

namespace {

SimConfig quiet(Testbed tb) {
    SimConfig c;
    c.testbed = std::move(tb);
    return c.noiseless();
}

Point2 random_point(Rng& rng, double w, double h) { return {w * uniform01(rng), h * uniform01(rng)}; }

}  // namespace

TEST_CASE("is_blocked examples") {
    const Point2 tx{0, 0}, rx{4, 0};
    CHECK(is_blocked(tx, rx, std::vector<Point2>{{2, 0}}, 0.3));
    CHECK_FALSE(is_blocked(tx, rx, std::vector<Point2>{{2, 1}}, 0.3));
    CHECK(is_blocked(tx, rx, std::vector<Point2>{rx}, 0.3));
    CHECK_FALSE(is_blocked(tx, rx, std::vector<Point2>{}, 0.3));
    CHECK_FALSE(is_blocked(tx, rx, std::vector<Point2>{{2, 0.3}}, 0.3));  // touching is not blocking
    CHECK(segment_distance({5, 0}, tx, rx) == 1.0);
    CHECK(segment_distance({2, -2}, tx, rx) == 2.0);
}

TEST_CASE("blockage is symmetric and monotone in the person set") {
    Rng rng = make_rng(50);
    for (int t = 0; t < 2000; ++t) {
        const Point2 a = random_point(rng, 6, 8), b = random_point(rng, 6, 8);
        std::vector<Point2> persons;
        const int n = static_cast<int>(rng() % 4);
        for (int i = 0; i < n; ++i) persons.push_back(random_point(rng, 6, 8));
        const bool ab = is_blocked(a, b, persons, 0.3);
        REQUIRE(ab == is_blocked(b, a, persons, 0.3));
        persons.push_back(random_point(rng, 6, 8));
        if (ab) REQUIRE(is_blocked(a, b, persons, 0.3));
    }
}

TEST_CASE("noiseless empty room gives geometric RTTs") {
    const auto tb = preset_testbed("testbed1");
    const auto cfg = quiet(tb);
    const auto s = simulate_scan(cfg, {});
    REQUIRE(s.size() == 63);
    for (std::size_t t = 0; t < tb.transmitters.size(); ++t)
        for (std::size_t r = 0; r < tb.receivers.size(); ++r) {
            const double d = distance(tb.transmitters[t], tb.receivers[r]);
            const auto i = tb.pair_index(t, r);
            CHECK(s.detected[i]);
            CHECK(s.values[i] == distance_to_rtt(d));
            CHECK(std::abs(rtt_to_distance(s.values[i]) - d) <= 1e-12 * d);
        }
}

TEST_CASE("one blocked pair gets exactly the NLoS excess") {
    Testbed tb{4, 4, {{0, 0}, {0, 4}}, {{4, 0}}, {{0, {1, 0}}}, {}};
    auto cfg = quiet(tb);
    const std::vector<Point2> person{{1, 0}};
    REQUIRE(is_blocked(tb.transmitters[0], tb.receivers[0], person, 0.3));
    REQUIRE_FALSE(is_blocked(tb.transmitters[1], tb.receivers[0], person, 0.3));
    const auto s = simulate_scan(cfg, person);
    CHECK(s.values[0] == doctest::Approx(distance_to_rtt(4.0) + 20.0).epsilon(1e-14));
    CHECK(distance_to_rtt(3.0) == 20.0);
    CHECK(s.values[1] == distance_to_rtt(std::sqrt(32.0)));
}

TEST_CASE("simulate_scan is deterministic per seed") {
    SimConfig cfg;
    cfg.testbed = preset_testbed("testbed2");
    cfg.seed = 9;
    const std::vector<Point2> p{{3, 3}, {10, 7}};
    CHECK(simulate_scan(cfg, p) == simulate_scan(cfg, p));
    cfg.seed = 10;
    const auto other = simulate_scan(cfg, p);
    cfg.seed = 9;
    CHECK_FALSE(other == simulate_scan(cfg, p));
}

TEST_CASE("presets follow the deployment table") {
    const auto t1 = preset_testbed("testbed1");
    CHECK(t1.width == 5.8);
    CHECK(t1.height == 8.3);
    CHECK(t1.transmitters.size() == 9);
    CHECK(t1.receivers.size() == 7);
    CHECK(t1.pair_count() == 63);
    CHECK(t1.reference_points.size() == 14);
    CHECK(t1.test_points.size() == 4);
    CHECK_NOTHROW(t1.validate());

    const auto t2 = preset_testbed("testbed2");
    CHECK(t2.width == 17.3);
    CHECK(t2.height == 10.9);
    CHECK(t2.pair_count() == 81);
    CHECK(t2.reference_points.size() == 14);
    CHECK(t2.test_points.size() == 10);
    CHECK_NOTHROW(t2.validate());

    for (const auto* tb : {&t1, &t2}) {  // devices on the perimeter
        for (const auto& p : tb->transmitters)
            CHECK((p.x == 0 || p.y == 0 || p.x == tb->width || p.y == tb->height));
        for (const auto& p : tb->receivers)
            CHECK((p.x == 0 || p.y == 0 || p.x == tb->width || p.y == tb->height));
    }
    CHECK_THROWS_AS(preset_testbed("testbed3"), ValidationError);
}

TEST_CASE("generate_dataset shapes") {
    SimConfig c1;
    c1.testbed = preset_testbed("testbed1");
    const auto d1 = generate_dataset(c1, 100);
    CHECK(d1.size() == 1400);
    std::set<int> ids;
    for (const auto& r : d1) {
        ids.insert(r.ref_id);
        REQUIRE(r.state.size() == 63);
        REQUIRE(distance(r.position, c1.testbed.reference_point(r.ref_id).location) <= c1.body_radius + 1e-12);
        for (std::size_t i = 0; i < 63; ++i)
            if (r.state.detected[i]) REQUIRE(r.state.values[i] == std::round(r.state.values[i]));
    }
    CHECK(ids.size() == 14);

    SimConfig c2;
    c2.testbed = preset_testbed("testbed2");
    CHECK(generate_dataset(c2, 2).front().state.size() == 81);

    const std::vector<ReferencePoint> one{c1.testbed.reference_points[3]};
    CHECK(generate_dataset(c1, 1, 0, one).size() == 1);
    CHECK_THROWS_AS(generate_dataset(c1, 0), ValidationError);

    CHECK(generate_dataset(c1, 3) == generate_dataset(c1, 3));
    CHECK_FALSE(generate_dataset(c1, 3, 0) == generate_dataset(c1, 3, 1));
}

TEST_CASE("every anomaly class occurs") {
    SimConfig base;
    base.testbed = preset_testbed("testbed2");
    const auto& tb = base.testbed;

    // missed detections at the default rate, other noise off
    SimConfig c = base.noiseless();
    c.nlos_excess_mean = 0.0;
    c.p_missed_detection = base.p_missed_detection;
    std::size_t missing = 0;
    for (const auto& r : generate_dataset(c, 100))
        for (std::size_t i = 0; i < r.state.size(); ++i)
            if (!r.state.detected[i]) {
                ++missing;
                REQUIRE(r.state.values[i] == kPlaceholderRttNs);
            }
    CHECK(missing > 0);

    // latency spikes: every value is the (rounded) geometric RTT, or that plus the spike
    SimConfig sp = base.noiseless();
    sp.nlos_excess_mean = 0.0;
    sp.latency_spike_prob = base.latency_spike_prob;
    std::size_t spikes = 0;
    for (const auto& r : generate_dataset(sp, 100))
        for (std::size_t t = 0; t < tb.transmitters.size(); ++t)
            for (std::size_t q = 0; q < tb.receivers.size(); ++q) {
                const double geo = distance_to_rtt(distance(tb.transmitters[t], tb.receivers[q]));
                const double v = r.state.values[tb.pair_index(t, q)];
                REQUIRE((v == std::round(geo) || v == std::round(geo + sp.latency_spike_ns)));
                spikes += v > geo + 50.0;
            }
    CHECK(spikes > 0);

    // calibration offsets can push short links negative
    SimConfig neg = base;
    neg.device_offset_std = 40.0;
    std::size_t negative = 0;
    for (const auto& r : generate_dataset(neg, 20))
        for (std::size_t i = 0; i < r.state.size(); ++i) negative += r.state.detected[i] && r.state.values[i] < 0;
    CHECK(negative > 0);
}

TEST_CASE("receiver offsets are fixed per world") {
    SimConfig cfg;
    cfg.testbed = preset_testbed("testbed1");
    cfg.seed = 3;
    const Simulator a(cfg), b(cfg);
    CHECK(a.receiver_offsets() == b.receiver_offsets());
    CHECK(a.receiver_offsets().size() == 7);
}

TEST_CASE("sway stays in the body disc and the room") {
    SimConfig cfg;
    cfg.testbed = preset_testbed("testbed1");
    const Simulator sim(cfg);
    Rng rng = make_rng(51);
    for (int i = 0; i < 1000; ++i) {
        const Point2 c{0.1, 8.2};
        const Point2 p = sim.sway(c, rng);
        REQUIRE(distance(p, c) <= 0.3 + 1e-12);
        REQUIRE(cfg.testbed.contains(p));
    }
}

TEST_CASE("multi-person instances respect the separation") {
    SimConfig cfg;
    cfg.testbed = preset_testbed("testbed1");
    const auto inst = generate_multi_instances(cfg, 2, 4.0, 50, 3, 1);
    CHECK(inst.size() == 50);
    for (const auto& i : inst) {
        REQUIRE(i.truths.size() == 2);
        REQUIRE(i.scans.size() == 3);
        CHECK(i.truth_ids[0] != i.truth_ids[1]);
        CHECK(distance(cfg.testbed.reference_point(i.truth_ids[0]).location,
                       cfg.testbed.reference_point(i.truth_ids[1]).location) >= 4.0);
    }
    CHECK_THROWS_AS(generate_multi_instances(cfg, 15, 0.0, 1, 1, 1), ValidationError);
}

TEST_CASE("sim config validation") {
    SimConfig cfg;
    cfg.testbed = preset_testbed("testbed1");
    CHECK_NOTHROW(cfg.validate());
    cfg.p_missed_detection = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg.p_missed_detection = 0.0;
    cfg.thermal_noise_std = -1;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
}
