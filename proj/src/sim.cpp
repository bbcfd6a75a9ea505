#include "rttloc/sim.hpp"

#include "rttloc/errors.hpp"
#include "rttloc/ftm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace rttloc {

namespace {

constexpr std::uint64_t kOffsetStream = 0x6f6666;
constexpr std::uint64_t kScanStream = 0x7363616e;

double normal(Rng& rng, double mean, double stddev) {
    if (stddev == 0.0) return mean;
    return std::normal_distribution<double>(mean, stddev)(rng);
}

// Point at arc length s along the rectangle boundary, counter-clockwise from (0,0).
Point2 perimeter_point(double w, double h, double s) {
    const double p = 2.0 * (w + h);
    s = std::fmod(s, p);
    if (s < w) return {s, 0.0};
    s -= w;
    if (s < h) return {w, s};
    s -= h;
    if (s < w) return {w - s, h};
    s -= w;
    return {0.0, h - s};
}

// n devices spread uniformly over half of the perimeter, starting at arc length `start`.
std::vector<Point2> perimeter_devices(double w, double h, std::size_t n, double start) {
    std::vector<Point2> out;
    const double step = (w + h) / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(perimeter_point(w, h, start + (static_cast<double>(i) + 0.5) * step));
    return out;
}

Testbed grid_testbed(double w, double h, std::size_t n_tx, std::size_t n_rx, std::size_t cols, std::size_t rows,
                     std::span<const std::size_t> test_cells) {
    Testbed tb;
    tb.width = w;
    tb.height = h;
    // Transmitters on the bottom and right walls, receivers on the top and left
    // walls, so every link crosses the room.
    tb.transmitters = perimeter_devices(w, h, n_tx, 0.0);
    tb.receivers = perimeter_devices(w, h, n_rx, w + h);
    int next_ref = 0;
    int next_test = 100;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const Point2 p{(static_cast<double>(c) + 0.5) * w / static_cast<double>(cols),
                           (static_cast<double>(r) + 0.5) * h / static_cast<double>(rows)};
            const std::size_t cell = r * cols + c;
            if (std::find(test_cells.begin(), test_cells.end(), cell) != test_cells.end())
                tb.test_points.push_back({next_test++, p});
            else
                tb.reference_points.push_back({next_ref++, p});
        }
    return tb;
}

}  // namespace

void SimConfig::validate() const {
    testbed.validate();
    const std::array<double, 6> nonneg{body_radius,       nlos_excess_std,    device_offset_std,
                                       thermal_noise_std, p_missed_detection, latency_spike_prob};
    for (double v : nonneg)
        if (!(v >= 0.0)) throw ValidationError("simulator std/probability fields must be non-negative");
    if (p_missed_detection > 1.0 || latency_spike_prob > 1.0)
        throw ValidationError("simulator probabilities must not exceed 1");
}

SimConfig SimConfig::noiseless() const {
    SimConfig c = *this;
    c.nlos_excess_std = 0.0;
    c.device_offset_std = 0.0;
    c.thermal_noise_std = 0.0;
    c.p_missed_detection = 0.0;
    c.latency_spike_prob = 0.0;
    return c;
}

Testbed preset_testbed(const std::string& name) {
    if (name == "testbed1") {
        // 3 x 6 grid = 18 locations: 14 training + 4 testing.
        static constexpr std::array<std::size_t, 4> test{4, 9, 11, 13};
        return grid_testbed(5.8, 8.3, 9, 7, 3, 6, test);
    }
    if (name == "testbed2") {
        // 6 x 4 grid = 24 locations: 14 training + 10 testing.
        static constexpr std::array<std::size_t, 10> test{1, 4, 6, 8, 11, 14, 15, 17, 19, 22};
        return grid_testbed(17.3, 10.9, 9, 9, 6, 4, test);
    }
    throw ValidationError("unknown preset '" + name + "' (expected testbed1 or testbed2)");
}

double segment_distance(const Point2& p, const Point2& a, const Point2& b) noexcept {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

bool is_blocked(const Point2& tx, const Point2& rx, std::span<const Point2> persons, double body_radius) {
    return std::any_of(persons.begin(), persons.end(),
                       [&](const Point2& p) { return segment_distance(p, tx, rx) < body_radius; });
}

Simulator::Simulator(SimConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    Rng rng = make_rng(cfg_.seed, {kOffsetStream});
    for (std::size_t r = 0; r < cfg_.testbed.receivers.size(); ++r)
        offsets_.push_back(normal(rng, 0.0, cfg_.device_offset_std));
}

StateVector Simulator::scan(std::span<const Point2> persons, Rng& rng) const {
    const Testbed& tb = cfg_.testbed;
    PartialScan raw;
    raw.pair_count = tb.pair_count();
    for (std::size_t t = 0; t < tb.transmitters.size(); ++t)
        for (std::size_t r = 0; r < tb.receivers.size(); ++r) {
            const Point2& tx = tb.transmitters[t];
            const Point2& rx = tb.receivers[r];
            double rtt = distance_to_rtt(distance(tx, rx));
            if (is_blocked(tx, rx, persons, cfg_.body_radius))
                rtt += distance_to_rtt(std::max(0.0, normal(rng, cfg_.nlos_excess_mean, cfg_.nlos_excess_std)));
            rtt += normal(rng, 0.0, cfg_.thermal_noise_std) + offsets_[r];
            if (bernoulli(rng, cfg_.latency_spike_prob)) rtt += cfg_.latency_spike_ns;
            if (bernoulli(rng, cfg_.p_missed_detection)) continue;
            raw.measured.emplace(tb.pair_index(t, r), rtt);
        }
    return fill_undetected(raw);
}

Point2 Simulator::sway(const Point2& p, Rng& rng) const {
    const double r = cfg_.body_radius * std::sqrt(uniform01(rng));
    const double a = 2.0 * 3.14159265358979323846 * uniform01(rng);
    return {std::clamp(p.x + r * std::cos(a), 0.0, cfg_.testbed.width),
            std::clamp(p.y + r * std::sin(a), 0.0, cfg_.testbed.height)};
}

StateVector simulate_scan(const SimConfig& cfg, std::span<const Point2> persons) {
    const Simulator sim(cfg);
    Rng rng = make_rng(cfg.seed, {kScanStream});
    return sim.scan(persons, rng);
}

StateVector quantize(StateVector s) {
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s.detected[i]) s.values[i] = std::round(s.values[i]);
    return s;
}

std::vector<ScanRecord> generate_dataset(const SimConfig& cfg, std::size_t scans_per_point, std::uint64_t stream,
                                         std::span<const ReferencePoint> points) {
    if (scans_per_point < 1) throw ValidationError("scans_per_point must be >= 1");
    const Simulator sim(cfg);
    if (points.empty()) points = cfg.testbed.reference_points;
    std::vector<ScanRecord> out;
    out.reserve(points.size() * scans_per_point);
    for (const auto& rp : points)
        for (std::size_t j = 0; j < scans_per_point; ++j) {
            Rng rng = make_rng(cfg.seed, {kScanStream, stream, static_cast<std::uint64_t>(rp.id), j});
            const Point2 where = sim.sway(rp.location, rng);
            const std::array<Point2, 1> persons{where};
            out.push_back({rp.id, where, quantize(sim.scan(persons, rng))});
        }
    return out;
}

std::vector<TestInstance> generate_single_instances(const SimConfig& cfg, std::size_t per_point,
                                                    std::size_t scans_per_instance, std::uint64_t stream,
                                                    std::span<const ReferencePoint> points) {
    if (scans_per_instance < 1) throw ValidationError("scans_per_instance must be >= 1");
    const Simulator sim(cfg);
    if (points.empty()) points = cfg.testbed.reference_points;
    std::vector<TestInstance> out;
    for (const auto& rp : points)
        for (std::size_t j = 0; j < per_point; ++j) {
            Rng rng = make_rng(cfg.seed, {kScanStream, stream, static_cast<std::uint64_t>(rp.id), j});
            TestInstance inst;
            inst.truth_ids.push_back(rp.id);
            inst.truths.push_back(sim.sway(rp.location, rng));
            for (std::size_t s = 0; s < scans_per_instance; ++s) inst.scans.push_back(quantize(sim.scan(inst.truths, rng)));
            out.push_back(std::move(inst));
        }
    return out;
}

std::vector<TestInstance> generate_multi_instances(const SimConfig& cfg, std::size_t persons, double min_separation,
                                                   std::size_t count, std::size_t scans_per_instance,
                                                   std::uint64_t stream) {
    if (scans_per_instance < 1) throw ValidationError("scans_per_instance must be >= 1");
    const Simulator sim(cfg);
    const auto& pts = cfg.testbed.reference_points;
    if (persons < 1 || persons > pts.size()) throw ValidationError("person count must lie in [1, M]");
    std::vector<TestInstance> out;
    for (std::size_t j = 0; j < count; ++j) {
        Rng rng = make_rng(cfg.seed, {kScanStream, stream, 0x6d756c7469ULL, j});
        std::vector<std::size_t> chosen;
        // Rejection sampling; fall back to the farthest-apart candidate set seen.
        std::vector<std::size_t> best;
        double best_gap = -1.0;
        for (int attempt = 0; attempt < 1000; ++attempt) {
            std::vector<std::size_t> idx(pts.size());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            std::shuffle(idx.begin(), idx.end(), rng);
            idx.resize(persons);
            double gap = std::numeric_limits<double>::infinity();
            for (std::size_t a = 0; a < idx.size(); ++a)
                for (std::size_t b = a + 1; b < idx.size(); ++b)
                    gap = std::min(gap, distance(pts[idx[a]].location, pts[idx[b]].location));
            if (gap > best_gap) {
                best_gap = gap;
                best = idx;
            }
            if (gap >= min_separation) break;
        }
        chosen = best;
        std::sort(chosen.begin(), chosen.end());
        TestInstance inst;
        for (auto i : chosen) {
            inst.truth_ids.push_back(pts[i].id);
            inst.truths.push_back(sim.sway(pts[i].location, rng));
        }
        for (std::size_t s = 0; s < scans_per_instance; ++s) inst.scans.push_back(quantize(sim.scan(inst.truths, rng)));
        out.push_back(std::move(inst));
    }
    return out;
}

std::vector<ScanRecord> instances_to_records(std::span<const TestInstance> instances) {
    std::vector<ScanRecord> out;
    for (const auto& inst : instances)
        for (const auto& s : inst.scans) out.push_back({inst.truth_ids.front(), inst.truths.front(), s});
    return out;
}

}  // namespace rttloc
