#pragma once

// Training-time input corruption for the denoising autoencoders.

#include "rttloc/fingerprint.hpp"
#include "rttloc/rng.hpp"

#include <cstdint>

namespace rttloc {

enum class CorruptionMode {
    kOneOf,    ///< each sample gets either masking or Gaussian noise, chosen uniformly
    kCompose,  ///< Gaussian noise, then masking
};

struct CorruptionConfig {
    double p_silence = 0.1;
    double sigma_gauss = 0.1;
    CorruptionMode mode = CorruptionMode::kOneOf;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Each entry is replaced by `placeholder[i]` with probability p_silence.
NormalizedVector mask_corrupt(const NormalizedVector& v, const NormalizedVector& placeholder, double p_silence,
                              Rng& rng);

/// Adds iid N(0, sigma^2) noise. The result is not clamped.
NormalizedVector gauss_corrupt(const NormalizedVector& v, double sigma_gauss, Rng& rng);

/// Applies the configured corruption pipeline to one training sample.
class Corruptor {
public:
    Corruptor(CorruptionConfig cfg, NormalizedVector placeholder);

    NormalizedVector mask(const NormalizedVector& v, Rng& rng) const;
    NormalizedVector gauss(const NormalizedVector& v, Rng& rng) const;
    NormalizedVector operator()(const NormalizedVector& v, Rng& rng) const;

    const CorruptionConfig& config() const noexcept { return cfg_; }

private:
    CorruptionConfig cfg_;
    NormalizedVector placeholder_;
};

}  // namespace rttloc
