#pragma once

// Fine Time Measurement round-trip arithmetic.
//
// Timestamps are integer nanoseconds. t1/t4 come from the responder clock and
// t2/t3 from the initiator clock; only differences on the same clock are used,
// so any constant offset between the two clocks cancels.

#include <cstdint>
#include <span>
#include <vector>

namespace rttloc {

using Nanoseconds = std::int64_t;

/// Propagation speed used for ranging, m/s (exactly 3e8).
inline constexpr double kSpeedOfLight = 3.0e8;

struct FtmExchange {
    Nanoseconds t1 = 0;  ///< FTM frame departure (responder)
    Nanoseconds t2 = 0;  ///< FTM frame arrival (initiator)
    Nanoseconds t3 = 0;  ///< ACK departure (initiator)
    Nanoseconds t4 = 0;  ///< ACK arrival (responder)
};

/// One burst of N exchanges. Construction validates N >= 1 and every exchange.
class Burst {
public:
    explicit Burst(std::vector<FtmExchange> exchanges);

    std::span<const FtmExchange> exchanges() const noexcept { return exchanges_; }
    std::size_t size() const noexcept { return exchanges_.size(); }

private:
    std::vector<FtmExchange> exchanges_;
};

struct RttMeasurement {
    double rtt_ns = 0.0;
    std::size_t transmitter = 0;
    std::size_t receiver = 0;
};

/// Throws ValidationError if t4 < t1 or t3 < t2.
void validate(const FtmExchange& x);

/// (t4 - t1) - (t3 - t2), exact.
Nanoseconds compute_rtt(const FtmExchange& x);

/// Mean RTT over the burst, in ns.
double average_rtt(const Burst& b);
double average_rtt(std::span<const FtmExchange> exchanges);

/// (rtt / 2) * c. Negative RTTs give negative distances.
double rtt_to_distance(double rtt_ns) noexcept;

/// 2 d / c, in ns.
double distance_to_rtt(double meters) noexcept;

}  // namespace rttloc
