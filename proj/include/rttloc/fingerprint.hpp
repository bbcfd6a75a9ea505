#pragma once

// Fingerprint data model and preprocessing.

#include <Eigen/Core>

#include <compare>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

namespace rttloc {

/// RTT written into every undetected slot: 0.2e-3 ms = 200 ns (30 m of range).
inline constexpr double kPlaceholderRttNs = 200.0;

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

double distance(const Point2& a, const Point2& b) noexcept;

struct ReferencePoint {
    int id = 0;
    Point2 location;

    friend bool operator==(const ReferencePoint&, const ReferencePoint&) = default;
};

/// Deployment geometry. Pairs are ordered transmitter-major: pair(t, r) = t * N_R + r.
struct Testbed {
    double width = 0.0;
    double height = 0.0;
    std::vector<Point2> transmitters;
    std::vector<Point2> receivers;
    std::vector<ReferencePoint> reference_points;
    /// Extra evaluation-only locations (may be empty).
    std::vector<ReferencePoint> test_points;

    std::size_t pair_count() const noexcept { return transmitters.size() * receivers.size(); }
    std::size_t pair_index(std::size_t tx, std::size_t rx) const noexcept {
        return tx * receivers.size() + rx;
    }
    bool contains(const Point2& p) const noexcept;
    const ReferencePoint& reference_point(int id) const;
    double diagonal() const noexcept;

    /// Throws ValidationError on out-of-bounds devices/points, K == 0, M == 0 or duplicate ids.
    void validate() const;

    friend bool operator==(const Testbed&, const Testbed&) = default;
};

/// K RTT values (ns) plus a detection flag per slot.
struct StateVector {
    std::vector<double> values;
    std::vector<bool> detected;

    std::size_t size() const noexcept { return values.size(); }

    friend bool operator==(const StateVector&, const StateVector&) = default;
};

/// A scan as reported by the receivers: only the pairs that produced a range.
struct PartialScan {
    std::size_t pair_count = 0;
    std::map<std::size_t, double> measured;  ///< pair index -> rtt (ns)
};

/// Placeholder for every missing pair; measured values (negative included) pass through.
StateVector fill_undetected(const PartialScan& raw);

/// Re-applies the placeholder to slots flagged undetected. Idempotent.
StateVector fill_undetected(StateVector s);

/// Per-dimension min/max fitted on training vectors.
struct NormParams {
    std::vector<double> min;
    std::vector<double> max;

    std::size_t size() const noexcept { return min.size(); }
    bool degenerate(std::size_t i) const noexcept { return !(min[i] < max[i]); }
    /// (v - min) / (max - min) clamped to [0, 1]; degenerate dimensions give 0.5.
    double apply(std::size_t i, double v) const noexcept;

    friend bool operator==(const NormParams&, const NormParams&) = default;
};

/// Componentwise extrema over every entry, placeholders included.
/// Throws ValidationError on an empty or ragged set.
NormParams fit_normalizer(std::span<const StateVector> training);

using NormalizedVector = Eigen::VectorXd;

/// Throws ValidationError on dimension mismatch.
NormalizedVector normalize(const StateVector& s, const NormParams& p);

/// Normalized image of the undetected placeholder, per dimension.
NormalizedVector placeholder_image(const NormParams& p);

/// A scan row: ground-truth position and reference-point label (-1 when unlabeled).
struct ScanRecord {
    int ref_id = -1;
    Point2 position;
    StateVector state;

    friend bool operator==(const ScanRecord&, const ScanRecord&) = default;
};

}  // namespace rttloc
