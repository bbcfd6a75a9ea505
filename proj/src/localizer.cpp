#include "rttloc/localizer.hpp"

#include "rttloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace rttloc {

LikelihoodVector LikelihoodVector::from_probabilities(std::vector<double> p) {
    LikelihoodVector lv;
    lv.log_p.reserve(p.size());
    for (double x : p) lv.log_p.push_back(std::log(x));
    lv.p = std::move(p);
    lv.n_scans = 1;
    return lv;
}

double rbf_sigma(std::span<const NormalizedVector> scans, SigmaMode mode, double fixed) {
    if (mode == SigmaMode::kFixed) return std::max(fixed, kSigmaFloor);
    if (scans.empty()) throw ValidationError("sigma needs at least one scan");
    const Eigen::Index k = scans.front().size();
    const auto n = static_cast<double>(scans.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
    for (const auto& s : scans) mean += s;
    mean /= n;
    Eigen::VectorXd var = Eigen::VectorXd::Zero(k);
    for (const auto& s : scans) var += (s - mean).array().square().matrix();
    var /= n;
    double sigma = 0.0;
    if (mode == SigmaMode::kOnlineVar)
        sigma = var.mean();
    else
        sigma = var.array().sqrt().mean();
    return std::max(sigma, kSigmaFloor);
}

LikelihoodVector likelihood_from_distances(const std::vector<std::vector<double>>& dist, double sigma) {
    LikelihoodVector lv;
    lv.sigma_rbf = sigma;
    lv.n_scans = dist.empty() ? 0 : dist.front().size();
    if (lv.n_scans == 0) throw ValidationError("likelihood needs at least one scan");
    const double log_n = std::log(static_cast<double>(lv.n_scans));
    for (const auto& row : dist) {
        if (row.size() != lv.n_scans) throw ValidationError("ragged distance table");
        // log-mean-exp of -d/sigma
        double hi = -std::numeric_limits<double>::infinity();
        for (double d : row) hi = std::max(hi, -d / sigma);
        double acc = 0.0, direct = 0.0;
        for (double d : row) {
            acc += std::exp(-d / sigma - hi);
            direct += std::exp(-d / sigma);
        }
        lv.log_p.push_back(hi + std::log(acc) - log_n);
        lv.p.push_back(direct / static_cast<double>(lv.n_scans));
    }
    return lv;
}

LikelihoodVector likelihood(const ModelRegistry& registry, std::span<const NormalizedVector> scans, SigmaMode mode,
                            double sigma_fixed) {
    if (scans.empty()) throw ValidationError("likelihood needs at least one scan");
    const double sigma = rbf_sigma(scans, mode, sigma_fixed);
    std::vector<std::vector<double>> dist;
    dist.reserve(registry.size());
    for (const auto& [id, m] : registry.models()) {
        std::vector<double> row;
        row.reserve(scans.size());
        for (const auto& s : scans) row.push_back((s - forward(m, s).s_hat).norm());
        dist.push_back(std::move(row));
    }
    return likelihood_from_distances(dist, sigma);
}

PosteriorVector posterior(const LikelihoodVector& lv) {
    PosteriorVector out;
    const auto& p = lv.p;
    if (p.empty()) throw ValidationError("posterior of an empty likelihood vector");
    const bool direct = std::all_of(p.begin(), p.end(), [](double x) { return x > 0.0 && std::isfinite(x); });
    if (direct) {
        const double total = std::accumulate(p.begin(), p.end(), 0.0);
        out.q.reserve(p.size());
        for (double x : p) out.q.push_back(x / total);
        return out;
    }
    if (lv.log_p.size() != p.size() ||
        std::none_of(lv.log_p.begin(), lv.log_p.end(), [](double x) { return std::isfinite(x); }))
        throw ValidationError("posterior: all likelihoods are zero");
    const double hi = *std::max_element(lv.log_p.begin(), lv.log_p.end());
    double total = 0.0;
    for (double lp : lv.log_p) {
        out.q.push_back(std::exp(lp - hi));
        total += out.q.back();
    }
    for (double& x : out.q) x /= total;
    return out;
}

std::vector<std::size_t> detect(const PosteriorVector& q, double tau) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < q.q.size(); ++i)
        if (q.q[i] > tau) out.push_back(i);
    return out;
}

Point2 fine_localize(const PosteriorVector& q, std::size_t detected, std::span<const Site> sites,
                     std::size_t k_neighbors) {
    if (sites.size() != q.q.size()) throw ValidationError("posterior and site list differ in length");
    if (detected >= sites.size()) throw ValidationError("detected index out of range");
    if (k_neighbors < 1 || k_neighbors > sites.size())
        throw ValidationError("k_neighbors must lie in [1, M] (M = " + std::to_string(sites.size()) + ")");
    const Point2 centre = sites[detected].location;
    std::vector<std::size_t> order(sites.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double da = distance(sites[a].location, centre), db = distance(sites[b].location, centre);
        if (da != db) return da < db;
        if (a == detected || b == detected) return a == detected;
        return sites[a].id < sites[b].id;
    });
    order.resize(k_neighbors);
    double mass = 0.0;
    for (auto i : order) mass += q.q[i];
    if (!(mass > 0.0)) return centre;
    Point2 out{0.0, 0.0};
    for (auto i : order) {
        const double w = q.q[i] / mass;
        out.x += w * sites[i].location.x;
        out.y += w * sites[i].location.y;
    }
    return out;
}

std::vector<Site> sites_of(const ModelRegistry& registry) {
    std::vector<Site> sites;
    sites.reserve(registry.size());
    for (const auto& [id, m] : registry.models()) sites.push_back({id, m.location});
    return sites;
}

double default_tau(std::size_t m) { return 1.5 / static_cast<double>(m); }

LocalizationEstimate localize_multi(const ModelRegistry& registry, std::span<const NormalizedVector> scans,
                                    const LocalizerConfig& cfg) {
    if (registry.size() == 0) throw ValidationError("empty model registry");
    const double tau = cfg.tau.value_or(default_tau(registry.size()));
    if (!(tau >= 0.0 && tau < 1.0)) throw ValidationError("tau must lie in [0, 1)");
    const std::vector<Site> sites = sites_of(registry);
    const PosteriorVector q = posterior(likelihood(registry, scans, cfg.sigma_mode, cfg.sigma_fixed));

    std::vector<std::size_t> hits = detect(q, tau);
    if (cfg.n_expected && hits.size() > *cfg.n_expected) {
        std::stable_sort(hits.begin(), hits.end(), [&](std::size_t a, std::size_t b) { return q.q[a] > q.q[b]; });
        hits.resize(*cfg.n_expected);
    }

    LocalizationEstimate est;
    est.threshold_used = tau;
    est.k_neighbors = cfg.k_neighbors;
    est.posterior = q.q;
    for (auto i : hits)
        est.detected.push_back({sites[i].id, fine_localize(q, i, sites, cfg.k_neighbors), q.q[i]});
    return est;
}

LocalizationEstimate localize_scans(const ModelRegistry& registry, std::span<const StateVector> scans,
                                    const LocalizerConfig& cfg) {
    std::vector<NormalizedVector> xs;
    xs.reserve(scans.size());
    for (const auto& s : scans) xs.push_back(normalize(s, registry.norm()));
    return localize_multi(registry, xs, cfg);
}

}  // namespace rttloc
