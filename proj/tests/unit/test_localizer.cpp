#include "rttloc/errors.hpp"
#include "rttloc/localizer.hpp"
#include "rttloc/sim.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace rttloc;

namespace {

std::vector<double> random_p(std::size_t m, Rng& rng) {
    std::vector<double> p(m);
    for (auto& x : p) x = std::exp(-30.0 * uniform01(rng));  // spans many orders of magnitude
    return p;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// twice the signed area of (a, b, c)
double cross(const Point2& a, const Point2& b, const Point2& c) {
    return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

// Point-in-convex-hull test by brute force: p is inside iff it lies in some
// triangle spanned by the points (Caratheodory in 2D).
bool in_hull(const Point2& p, const std::vector<Point2>& pts, double tol) {
    auto on_segment = [&](const Point2& a, const Point2& b) {
        const double len = distance(a, b);
        if (len == 0) return distance(a, p) <= tol;
        return std::abs(cross(a, b, p)) / len <= tol && std::min(a.x, b.x) - tol <= p.x &&
               p.x <= std::max(a.x, b.x) + tol && std::min(a.y, b.y) - tol <= p.y && p.y <= std::max(a.y, b.y) + tol;
    };
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (distance(pts[i], p) <= tol) return true;
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            if (on_segment(pts[i], pts[j])) return true;
            for (std::size_t k = j + 1; k < pts.size(); ++k) {
                const double d1 = cross(pts[i], pts[j], p), d2 = cross(pts[j], pts[k], p), d3 = cross(pts[k], pts[i], p);
                const bool neg = d1 < -tol || d2 < -tol || d3 < -tol;
                const bool pos = d1 > tol || d2 > tol || d3 > tol;
                if (!(neg && pos)) return true;
            }
        }
    }
    return false;
}

}  // namespace

TEST_CASE("likelihood kernel examples") {
    const double sigma = 0.37;
    auto one = likelihood_from_distances({{0.0}}, sigma);
    CHECK(one.p[0] == 1.0);
    one = likelihood_from_distances({{sigma}}, sigma);
    CHECK(one.p[0] == doctest::Approx(0.36787944117144233).epsilon(1e-15));
    const auto two = likelihood_from_distances({{0.0, sigma}}, sigma);
    CHECK(two.p[0] == doctest::Approx((1 + std::exp(-1.0)) / 2).epsilon(1e-15));
    CHECK(two.n_scans == 2);
    CHECK_THROWS_AS(likelihood_from_distances({{}}, sigma), ValidationError);
}

TEST_CASE("likelihood is monotone decreasing in each distance") {
    Rng rng = make_rng(40);
    for (int t = 0; t < 1000; ++t) {
        std::vector<std::vector<double>> d(1, std::vector<double>(3));
        for (auto& x : d[0]) x = uniform01(rng);
        const double base = likelihood_from_distances(d, 0.2).p[0];
        d[0][t % 3] += 0.01 + uniform01(rng);
        REQUIRE(likelihood_from_distances(d, 0.2).p[0] < base);
    }
}

TEST_CASE("rbf sigma") {
    std::vector<NormalizedVector> same(3, NormalizedVector::Constant(4, 0.2));
    CHECK(rbf_sigma(same, SigmaMode::kOnlineStd) == kSigmaFloor);
    std::vector<NormalizedVector> two{NormalizedVector::Constant(2, 0.0), NormalizedVector::Constant(2, 1.0)};
    const double sd = rbf_sigma(two, SigmaMode::kOnlineStd);
    CHECK(sd == 0.5);  // population std of {0, 1}
    CHECK(rbf_sigma(two, SigmaMode::kOnlineVar) == 0.25);
    CHECK(rbf_sigma(two, SigmaMode::kFixed, 0.3) == 0.3);
    CHECK(rbf_sigma(std::vector<NormalizedVector>{NormalizedVector::Constant(2, 0.4)}, SigmaMode::kOnlineStd) ==
          kSigmaFloor);
}

TEST_CASE("posterior examples") {
    auto q = posterior(LikelihoodVector::from_probabilities({0.3, 0.3, 0.3, 0.3})).q;
    for (double x : q) CHECK(x == 0.25);
    q = posterior(LikelihoodVector::from_probabilities({1, 1, 2})).q;
    CHECK(q == std::vector<double>{0.25, 0.25, 0.5});
    CHECK_THROWS_AS(posterior(LikelihoodVector::from_probabilities({0, 0})), ValidationError);
}

TEST_CASE("posterior: normalization and scale invariance over 1000 cases") {
    Rng rng = make_rng(41);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t m = 1 + rng() % 40;
        const auto p = random_p(m, rng);
        const auto q = posterior(LikelihoodVector::from_probabilities(p)).q;
        REQUIRE(std::abs(sum(q) - 1.0) <= 1e-9);
        for (double x : q) REQUIRE(x >= 0.0);

        const double c = std::exp(20.0 * (uniform01(rng) - 0.5));
        auto scaled = p;
        for (auto& x : scaled) x *= c;
        const auto qc = posterior(LikelihoodVector::from_probabilities(scaled)).q;
        for (std::size_t i = 0; i < m; ++i) REQUIRE(std::abs(qc[i] - q[i]) <= 1e-12);
    }
}

TEST_CASE("posterior survives underflowed likelihoods") {
    // distances far beyond sigma: every exp() underflows to zero
    const auto lv = likelihood_from_distances({{1.0}, {1.0 + 1e-6}, {2.0}}, 1e-6);
    CHECK(lv.p[0] == 0.0);
    const auto q = posterior(lv).q;
    CHECK(std::abs(sum(q) - 1.0) < 1e-12);
    CHECK(q[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
    CHECK(q[2] == 0.0);
}

TEST_CASE("detect examples") {
    CHECK(detect({{0.5, 0.1, 0.4}}, 0.3) == std::vector<std::size_t>{0, 2});
    CHECK(detect({{0.5, 0.1, 0.4}}, 0.0) == std::vector<std::size_t>{0, 1, 2});
    CHECK(detect({{0.5, 0.25, 0.25}}, 0.25) == std::vector<std::size_t>{0});
}

TEST_CASE("detect is monotone in tau over 1000 cases") {
    Rng rng = make_rng(42);
    for (int t = 0; t < 1000; ++t) {
        const auto q = posterior(LikelihoodVector::from_probabilities(random_p(1 + rng() % 30, rng)));
        double a = uniform01(rng), b = uniform01(rng);
        if (a > b) std::swap(a, b);
        const auto lo = detect(q, a), hi = detect(q, b);
        REQUIRE(std::includes(lo.begin(), lo.end(), hi.begin(), hi.end()));
    }
}

TEST_CASE("fine_localize examples") {
    std::vector<Site> line{{0, {0, 0}}, {1, {2, 0}}, {2, {10, 0}}};
    CHECK(fine_localize({{0.1, 0.3, 0.6}}, 0, line, 1) == Point2{0, 0});
    const auto p = fine_localize({{0.1, 0.3, 0.6}}, 0, line, 2);
    CHECK(p.x == doctest::Approx(1.5));
    CHECK(p.y == 0.0);

    std::vector<Site> square{{0, {0, 0}}, {1, {1, 0}}, {2, {0, 1}}, {3, {1, 1}}, {4, {5, 5}}};
    const auto c = fine_localize({{0.2, 0.2, 0.2, 0.2, 0.2}}, 3, square, 4);
    CHECK(c.x == doctest::Approx(0.5));
    CHECK(c.y == doctest::Approx(0.5));

    // equidistant neighbours: lower id wins
    std::vector<Site> tie{{5, {0, 0}}, {2, {1, 0}}, {1, {-1, 0}}};
    const auto t = fine_localize({{0.5, 0.0, 0.5}}, 0, tie, 2);
    CHECK(t == Point2{-0.5, 0});

    // zero mass over the neighbourhood falls back to the detected point itself
    CHECK(fine_localize({{0, 0, 1}}, 0, line, 2) == Point2{0, 0});
    CHECK_THROWS_AS(fine_localize({{1, 0, 0}}, 0, line, 0), ValidationError);
    CHECK_THROWS_AS(fine_localize({{1, 0, 0}}, 0, line, 4), ValidationError);
}

TEST_CASE("fine_localize: convex hull and centroid identities over 1000 cases") {
    Rng rng = make_rng(43);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t m = 1 + rng() % 12;
        std::vector<Site> sites;
        for (std::size_t i = 0; i < m; ++i)
            sites.push_back({static_cast<int>(i), {10 * uniform01(rng), 10 * uniform01(rng)}});
        const auto q = posterior(LikelihoodVector::from_probabilities(random_p(m, rng)));
        const std::size_t det = rng() % m;
        const std::size_t k = 1 + rng() % m;

        // neighbourhood by brute force: sort by (distance, id)
        std::vector<std::size_t> order(m);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](auto a, auto b) {
            const double da = distance(sites[a].location, sites[det].location);
            const double db = distance(sites[b].location, sites[det].location);
            return da != db ? da < db : sites[a].id < sites[b].id;
        });
        std::vector<Point2> hood;
        double w = 0, x = 0, y = 0;
        for (std::size_t j = 0; j < k; ++j) {
            const auto& s = sites[order[j]];
            hood.push_back(s.location);
            w += q.q[order[j]];
            x += q.q[order[j]] * s.location.x;
            y += q.q[order[j]] * s.location.y;
        }
        const Point2 p = fine_localize(q, det, sites, k);
        REQUIRE(in_hull(p, hood, 1e-9));
        if (w > 0) {
            REQUIRE(std::abs(p.x - x / w) < 1e-9);
            REQUIRE(std::abs(p.y - y / w) < 1e-9);
        }

        // uniform q with k = M gives the centroid of every site
        PosteriorVector u{std::vector<double>(m, 1.0 / m)};
        const Point2 c = fine_localize(u, det, sites, m);
        double cx = 0, cy = 0;
        for (const auto& s : sites) {
            cx += s.location.x;
            cy += s.location.y;
        }
        REQUIRE(std::abs(c.x - cx / m) < 1e-9);
        REQUIRE(std::abs(c.y - cy / m) < 1e-9);
    }
}

TEST_CASE("default tau") {
    CHECK(default_tau(14) == 1.5 / 14);
    CHECK(default_tau(1) == 1.5);
}

namespace {

// Registry trained on noiseless Testbed1 data, shared by the end-to-end cases.
const ModelRegistry& noiseless_registry() {
    static const ModelRegistry reg = [] {
        SimConfig sim;
        sim.testbed = preset_testbed("testbed1");
        sim = sim.noiseless();
        sim.seed = 7;
        TrainConfig cfg;
        cfg.learning_rate = 0.2;
        cfg.max_epochs = 150;
        cfg.seed = 8;
        return train_registry(sim.testbed, generate_dataset(sim, 30), cfg);
    }();
    return reg;
}

}  // namespace

TEST_CASE("end to end: one person on a reference point in a noiseless world") {
    SimConfig sim;
    sim.testbed = preset_testbed("testbed1");
    sim = sim.noiseless();
    const auto& reg = noiseless_registry();
    const double spacing = 5.8 / 3;  // grid pitch along x
    for (const auto& rp : sim.testbed.reference_points) {
        const std::vector<Point2> persons{rp.location};
        const std::vector<StateVector> scans(3, simulate_scan(sim, persons));
        const auto est = localize_scans(reg, scans, LocalizerConfig{});
        REQUIRE(est.detected.size() == 1);
        CHECK(est.detected[0].ref_point_id == rp.id);
        CHECK(distance(est.detected[0].position, rp.location) <= 0.5 * spacing);
        CHECK(est.threshold_used == default_tau(reg.size()));
    }
}

TEST_CASE("end to end: two separated persons, tau = 1.5/M") {
    // default noise; in a noiseless world sigma collapses and the posterior goes winner-take-all
    SimConfig sim;
    sim.testbed = preset_testbed("testbed1");
    sim.seed = 5;
    TrainConfig cfg;
    cfg.seed = 6;
    const auto reg = train_registry(sim.testbed, generate_dataset(sim, 100), cfg);
    const Simulator world(sim);
    Rng rng = make_rng(44);
    const auto a = sim.testbed.reference_point(0), b = sim.testbed.reference_point(13);
    REQUIRE(distance(a.location, b.location) >= 4.0);

    int both = 0;
    for (int t = 0; t < 20; ++t) {
        std::vector<StateVector> scans;
        for (int j = 0; j < 5; ++j) {
            const std::vector<Point2> persons{world.sway(a.location, rng), world.sway(b.location, rng)};
            scans.push_back(world.scan(persons, rng));
        }
        const auto est = localize_scans(reg, scans, LocalizerConfig{});
        bool got_a = false, got_b = false;
        for (const auto& d : est.detected) {
            got_a |= d.ref_point_id == a.id;
            got_b |= d.ref_point_id == b.id;
        }
        both += got_a && got_b;

        LocalizerConfig capped;
        capped.tau = 0.0;
        capped.n_expected = 2;
        REQUIRE(localize_scans(reg, scans, capped).detected.size() == 2);
        LocalizerConfig strict;
        strict.tau = 0.99;
        REQUIRE(localize_scans(reg, scans, strict).detected.size() <= 1);
    }
    MESSAGE("both persons found in " << both << "/20");
    CHECK(both >= 14);
}

TEST_CASE("likelihood through a registry") {
    const auto& reg = noiseless_registry();
    CHECK_THROWS_AS(likelihood(reg, std::vector<NormalizedVector>{}), ValidationError);
    std::vector<NormalizedVector> s{NormalizedVector::Constant(63, 0.5), NormalizedVector::Constant(63, 0.6)};
    const auto lv = likelihood(reg, s);
    CHECK(lv.p.size() == reg.size());
    CHECK(lv.n_scans == 2);
    for (std::size_t i = 0; i < lv.p.size(); ++i) {
        CHECK(lv.p[i] > 0.0);
        CHECK(lv.p[i] <= 1.0);
    }
}
