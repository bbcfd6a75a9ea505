#pragma once

// Online multi-person localization on top of a trained model registry.

#include "rttloc/dae.hpp"
#include "rttloc/fingerprint.hpp"

#include <optional>
#include <span>
#include <vector>

namespace rttloc {

/// How the RBF kernel width is derived.
enum class SigmaMode {
    kOnlineStd,  ///< mean over dimensions of the per-dimension std of the online scans
    kOnlineVar,  ///< same, using the variance
    kFixed,      ///< LocalizerConfig::sigma_fixed
};

inline constexpr double kSigmaFloor = 1e-6;

struct LikelihoodVector {
    std::vector<double> p;      ///< P(s | l_i), in registry order
    std::vector<double> log_p;  ///< log P(s | l_i); finite even when p underflows
    std::size_t n_scans = 0;
    double sigma_rbf = 0.0;

    /// From plain likelihoods (log_p derived).
    static LikelihoodVector from_probabilities(std::vector<double> p);
};

struct PosteriorVector {
    std::vector<double> q;
};

struct Detection {
    int ref_point_id = 0;
    Point2 position;
    double score = 0.0;
};

struct LocalizationEstimate {
    std::vector<Detection> detected;
    double threshold_used = 0.0;
    std::size_t k_neighbors = 0;
    std::vector<double> posterior;  ///< full posterior, registry order
};

struct LocalizerConfig {
    std::optional<double> tau;  ///< default 1.5/M
    std::size_t k_neighbors = 3;
    std::optional<std::size_t> n_expected;  ///< caps the number of detections
    SigmaMode sigma_mode = SigmaMode::kOnlineStd;
    double sigma_fixed = 0.05;
};

/// Kernel width for a batch of online scans under `mode`, floored at kSigmaFloor.
double rbf_sigma(std::span<const NormalizedVector> scans, SigmaMode mode, double fixed = 0.0);

/// P(s|l_i) = mean_j exp(-||s_j - s_hat_ij||_2 / sigma).
LikelihoodVector likelihood(const ModelRegistry& registry, std::span<const NormalizedVector> scans,
                            SigmaMode mode = SigmaMode::kOnlineStd, double sigma_fixed = 0.0);

/// Same kernel applied to precomputed reconstruction distances: dist[i][j] for model i, scan j.
LikelihoodVector likelihood_from_distances(const std::vector<std::vector<double>>& dist, double sigma);

/// Uniform-prior Bayes normalization. Falls back to log-domain normalization
/// when some likelihoods underflowed to zero.
PosteriorVector posterior(const LikelihoodVector& lv);

/// Indices i with q_i > tau (strict).
std::vector<std::size_t> detect(const PosteriorVector& q, double tau);

struct Site {
    int id = 0;
    Point2 location;
};

/// Weighted centroid of the k sites nearest to `sites[detected]` (itself included),
/// weights q renormalized over that neighbourhood. Distance ties go to the lower id.
Point2 fine_localize(const PosteriorVector& q, std::size_t detected, std::span<const Site> sites,
                     std::size_t k_neighbors);

std::vector<Site> sites_of(const ModelRegistry& registry);

/// 1.5/M. A known person count only caps the detections; a threshold of
/// 1/(2N) discards the weaker of two well-separated persons too often.
double default_tau(std::size_t m);

/// likelihood -> posterior -> detect -> fine_localize. Scans must already be normalized.
LocalizationEstimate localize_multi(const ModelRegistry& registry, std::span<const NormalizedVector> scans,
                                    const LocalizerConfig& cfg);

/// Normalizes raw scans with the registry's normalizer, then localize_multi.
LocalizationEstimate localize_scans(const ModelRegistry& registry, std::span<const StateVector> scans,
                                    const LocalizerConfig& cfg);

}  // namespace rttloc
