#pragma once

// Geometric RTT simulator. A person is a disc; a transmitter-receiver link is
// blocked when the disc touches the straight segment between the devices, in
// which case the signal takes a longer NLoS path.

#include "rttloc/fingerprint.hpp"
#include "rttloc/rng.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace rttloc {

struct SimConfig {
    Testbed testbed;
    double body_radius = 0.3;        ///< m
    double nlos_excess_mean = 3.0;   ///< m
    double nlos_excess_std = 1.0;    ///< m
    double device_offset_std = 10.0; ///< ns, one draw per receiver per world
    double thermal_noise_std = 5.0;  ///< ns
    double p_missed_detection = 0.002;
    double latency_spike_prob = 0.001;
    double latency_spike_ns = 100.0;
    std::uint64_t seed = 0;

    void validate() const;
    /// Same geometry with every noise/anomaly source switched off.
    SimConfig noiseless() const;
};

/// Named deployments: "testbed1" (5.8 x 8.3 m, 9 TX, 7 RX) and "testbed2" (17.3 x 10.9 m, 9 TX, 9 RX).
/// Devices sit on the perimeter at uniform spacing; reference and test points
/// come from one regular grid.
Testbed preset_testbed(const std::string& name);

/// True iff some person disc comes closer than `body_radius` to the segment tx-rx.
bool is_blocked(const Point2& tx, const Point2& rx, std::span<const Point2> persons, double body_radius);

double segment_distance(const Point2& p, const Point2& a, const Point2& b) noexcept;

class Simulator {
public:
    explicit Simulator(SimConfig cfg);

    const SimConfig& config() const noexcept { return cfg_; }
    const std::vector<double>& receiver_offsets() const noexcept { return offsets_; }

    /// One scan with real-valued RTTs.
    StateVector scan(std::span<const Point2> persons, Rng& rng) const;

    /// Uniform position inside the body disc around `p`, clamped to the testbed.
    Point2 sway(const Point2& p, Rng& rng) const;

private:
    SimConfig cfg_;
    std::vector<double> offsets_;
};

/// Single scan drawn from the stream fixed by cfg.seed.
StateVector simulate_scan(const SimConfig& cfg, std::span<const Point2> persons);

/// Rounds detected RTTs to whole nanoseconds.
StateVector quantize(StateVector s);

/// `scans_per_point` labeled rows per reference point (one person, swaying per
/// scan), RTTs quantized to ns. `stream` separates independent draws (e.g. train
/// vs. held-out) taken from the same world.
std::vector<ScanRecord> generate_dataset(const SimConfig& cfg, std::size_t scans_per_point, std::uint64_t stream = 0,
                                         std::span<const ReferencePoint> points = {});

/// A localization query: n scans of one fixed placement of one or more persons.
struct TestInstance {
    std::vector<int> truth_ids;  ///< reference/test point each person stands on
    std::vector<Point2> truths;
    std::vector<StateVector> scans;
};

/// `per_point` instances at each of `points` (all reference points when empty).
std::vector<TestInstance> generate_single_instances(const SimConfig& cfg, std::size_t per_point,
                                                    std::size_t scans_per_instance, std::uint64_t stream,
                                                    std::span<const ReferencePoint> points = {});

/// `count` instances with `persons` people on distinct reference points whose
/// pairwise separation is at least `min_separation`.
std::vector<TestInstance> generate_multi_instances(const SimConfig& cfg, std::size_t persons, double min_separation,
                                                   std::size_t count, std::size_t scans_per_instance,
                                                   std::uint64_t stream);

/// Flattens instances into CSV rows: every scan of an instance carries its
/// first person's id and position.
std::vector<ScanRecord> instances_to_records(std::span<const TestInstance> instances);

}  // namespace rttloc
