#include "rttloc/ftm.hpp"

#include "rttloc/errors.hpp"

#include <string>

namespace rttloc {

namespace {
// ns -> s and the 1/2 of the round trip folded together.
constexpr double kRoundTripNsPerSecond = 2.0e9;
}  // namespace

Burst::Burst(std::vector<FtmExchange> exchanges) : exchanges_(std::move(exchanges)) {
    if (exchanges_.empty()) throw ValidationError("burst must contain at least one exchange");
    for (const auto& x : exchanges_) validate(x);
}

void validate(const FtmExchange& x) {
    if (x.t4 < x.t1)
        throw ValidationError("invalid FTM exchange: t4 (" + std::to_string(x.t4) + ") < t1 (" +
                              std::to_string(x.t1) + ")");
    if (x.t3 < x.t2)
        throw ValidationError("invalid FTM exchange: t3 (" + std::to_string(x.t3) + ") < t2 (" +
                              std::to_string(x.t2) + ")");
}

Nanoseconds compute_rtt(const FtmExchange& x) {
    validate(x);
    return (x.t4 - x.t1) - (x.t3 - x.t2);
}

double average_rtt(std::span<const FtmExchange> exchanges) {
    if (exchanges.empty()) throw ValidationError("cannot average an empty burst");
    // Integer sum first so identical exchanges average back exactly.
    Nanoseconds sum = 0;
    for (const auto& x : exchanges) sum += compute_rtt(x);
    return static_cast<double>(sum) / static_cast<double>(exchanges.size());
}

double average_rtt(const Burst& b) { return average_rtt(b.exchanges()); }

double rtt_to_distance(double rtt_ns) noexcept {
    return rtt_ns * kSpeedOfLight / kRoundTripNsPerSecond;
}

double distance_to_rtt(double meters) noexcept {
    return meters * kRoundTripNsPerSecond / kSpeedOfLight;
}

}  // namespace rttloc
