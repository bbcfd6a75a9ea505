#include "rttloc/fingerprint.hpp"

#include "rttloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace rttloc {

double distance(const Point2& a, const Point2& b) noexcept { return std::hypot(a.x - b.x, a.y - b.y); }

bool Testbed::contains(const Point2& p) const noexcept {
    return p.x >= 0.0 && p.x <= width && p.y >= 0.0 && p.y <= height;
}

const ReferencePoint& Testbed::reference_point(int id) const {
    for (const auto& rp : reference_points)
        if (rp.id == id) return rp;
    throw ValidationError("unknown reference point id " + std::to_string(id));
}

double Testbed::diagonal() const noexcept { return std::hypot(width, height); }

void Testbed::validate() const {
    if (!(width > 0.0) || !(height > 0.0)) throw ValidationError("testbed width and height must be positive");
    if (pair_count() == 0) throw ValidationError("testbed needs at least one transmitter and one receiver");
    if (reference_points.empty()) throw ValidationError("testbed needs at least one reference point");
    auto check = [&](const Point2& p, const std::string& what) {
        if (!contains(p))
            throw ValidationError(what + " (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                                  ") lies outside the testbed");
    };
    for (const auto& t : transmitters) check(t, "transmitter");
    for (const auto& r : receivers) check(r, "receiver");
    std::set<int> ids;
    for (const auto& rp : reference_points) {
        check(rp.location, "reference point " + std::to_string(rp.id));
        if (!ids.insert(rp.id).second)
            throw ValidationError("duplicate reference point id " + std::to_string(rp.id));
    }
    for (const auto& tp : test_points) check(tp.location, "test point " + std::to_string(tp.id));
}

StateVector fill_undetected(const PartialScan& raw) {
    StateVector s;
    s.values.assign(raw.pair_count, kPlaceholderRttNs);
    s.detected.assign(raw.pair_count, false);
    for (const auto& [pair, rtt] : raw.measured) {
        if (pair >= raw.pair_count)
            throw ValidationError("pair index " + std::to_string(pair) + " outside K = " +
                                  std::to_string(raw.pair_count));
        s.values[pair] = rtt;
        s.detected[pair] = true;
    }
    return s;
}

StateVector fill_undetected(StateVector s) {
    if (s.detected.size() != s.values.size()) throw ValidationError("state vector mask length mismatch");
    for (std::size_t i = 0; i < s.values.size(); ++i)
        if (!s.detected[i]) s.values[i] = kPlaceholderRttNs;
    return s;
}

double NormParams::apply(std::size_t i, double v) const noexcept {
    if (degenerate(i)) return 0.5;
    return std::clamp((v - min[i]) / (max[i] - min[i]), 0.0, 1.0);
}

NormParams fit_normalizer(std::span<const StateVector> training) {
    if (training.empty()) throw ValidationError("cannot fit a normalizer on an empty training set");
    const std::size_t k = training.front().size();
    NormParams p{training.front().values, training.front().values};
    for (const auto& s : training) {
        if (s.size() != k) throw ValidationError("training vectors have inconsistent dimension");
        for (std::size_t i = 0; i < k; ++i) {
            p.min[i] = std::min(p.min[i], s.values[i]);
            p.max[i] = std::max(p.max[i], s.values[i]);
        }
    }
    return p;
}

NormalizedVector normalize(const StateVector& s, const NormParams& p) {
    if (s.size() != p.size())
        throw ValidationError("dimension mismatch: scan has K = " + std::to_string(s.size()) +
                              ", normalizer has K = " + std::to_string(p.size()));
    NormalizedVector out(static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) out[static_cast<Eigen::Index>(i)] = p.apply(i, s.values[i]);
    return out;
}

NormalizedVector placeholder_image(const NormParams& p) {
    NormalizedVector out(static_cast<Eigen::Index>(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) out[static_cast<Eigen::Index>(i)] = p.apply(i, kPlaceholderRttNs);
    return out;
}

}  // namespace rttloc
