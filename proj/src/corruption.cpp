#include "rttloc/corruption.hpp"

#include "rttloc/errors.hpp"

namespace rttloc {

void CorruptionConfig::validate() const {
    if (!(p_silence >= 0.0 && p_silence <= 1.0)) throw ValidationError("p_silence must lie in [0, 1]");
    if (!(sigma_gauss >= 0.0)) throw ValidationError("sigma_gauss must be non-negative");
}

NormalizedVector mask_corrupt(const NormalizedVector& v, const NormalizedVector& placeholder, double p_silence,
                              Rng& rng) {
    if (placeholder.size() != v.size()) throw ValidationError("placeholder image has the wrong dimension");
    NormalizedVector out = v;
    for (Eigen::Index i = 0; i < v.size(); ++i)
        if (bernoulli(rng, p_silence)) out[i] = placeholder[i];
    return out;
}

NormalizedVector gauss_corrupt(const NormalizedVector& v, double sigma_gauss, Rng& rng) {
    if (sigma_gauss == 0.0) return v;
    std::normal_distribution<double> noise(0.0, sigma_gauss);
    NormalizedVector out = v;
    for (Eigen::Index i = 0; i < v.size(); ++i) out[i] += noise(rng);
    return out;
}

Corruptor::Corruptor(CorruptionConfig cfg, NormalizedVector placeholder)
    : cfg_(cfg), placeholder_(std::move(placeholder)) {
    cfg_.validate();
}

NormalizedVector Corruptor::mask(const NormalizedVector& v, Rng& rng) const {
    return mask_corrupt(v, placeholder_, cfg_.p_silence, rng);
}

NormalizedVector Corruptor::gauss(const NormalizedVector& v, Rng& rng) const {
    return gauss_corrupt(v, cfg_.sigma_gauss, rng);
}

NormalizedVector Corruptor::operator()(const NormalizedVector& v, Rng& rng) const {
    switch (cfg_.mode) {
        case CorruptionMode::kOneOf:
            return bernoulli(rng, 0.5) ? mask(v, rng) : gauss(v, rng);
        case CorruptionMode::kCompose:
            return mask(gauss(v, rng), rng);
    }
    return v;
}

}  // namespace rttloc
