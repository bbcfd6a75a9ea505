#include "rttloc/eval.hpp"

#include "rttloc/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace rttloc {

using nlohmann::json;

double percentile_nearest_rank(std::span<const double> values, double p) {
    if (values.empty()) throw ValidationError("percentile of an empty set");
    if (!(p >= 0.0 && p <= 100.0)) throw ValidationError("percentile must lie in [0, 100]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    // p * n first: exact for integral p, so multiples of 100 do not round up
    auto rank = static_cast<std::size_t>(std::ceil(p * n / 100.0));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

ErrorReport make_report(std::vector<double> errors) {
    if (errors.empty()) throw ValidationError("no errors to summarize");
    ErrorReport r;
    r.errors = std::move(errors);
    std::vector<double> sorted = r.errors;
    std::sort(sorted.begin(), sorted.end());
    r.summary.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
    r.summary.p25 = percentile_nearest_rank(sorted, 25);
    r.summary.median = percentile_nearest_rank(sorted, 50);
    r.summary.p75 = percentile_nearest_rank(sorted, 75);
    r.summary.max = sorted.back();
    const auto n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double frac = static_cast<double>(i + 1) / n;
        if (!r.cdf.empty() && r.cdf.back().first == sorted[i])
            r.cdf.back().second = frac;
        else
            r.cdf.emplace_back(sorted[i], frac);
    }
    return r;
}

Assignment assign_min_cost(std::span<const Point2> truths, std::span<const Point2> estimates, double miss_cost) {
    const std::size_t n = truths.size(), m = estimates.size();
    if (m > 20) throw ValidationError("assignment supports at most 20 estimates");
    const std::size_t states = std::size_t{1} << m;
    constexpr double inf = std::numeric_limits<double>::infinity();
    // cost[t][mask]: best cost for truths t.. given estimates in `mask` already used.
    std::vector<std::vector<double>> cost(n + 1, std::vector<double>(states, inf));
    std::fill(cost[n].begin(), cost[n].end(), 0.0);
    for (std::size_t t = n; t-- > 0;)
        for (std::size_t mask = 0; mask < states; ++mask) {
            double best = miss_cost + cost[t + 1][mask];
            for (std::size_t e = 0; e < m; ++e)
                if (!(mask >> e & 1U))
                    best = std::min(best, distance(truths[t], estimates[e]) + cost[t + 1][mask | (std::size_t{1} << e)]);
            cost[t][mask] = best;
        }

    Assignment a;
    a.total = cost[0][0];
    std::size_t mask = 0;
    for (std::size_t t = 0; t < n; ++t) {
        std::optional<std::size_t> pick;
        double err = miss_cost;
        double best = miss_cost + cost[t + 1][mask];
        for (std::size_t e = 0; e < m; ++e)
            if (!(mask >> e & 1U)) {
                const double d = distance(truths[t], estimates[e]);
                const double c = d + cost[t + 1][mask | (std::size_t{1} << e)];
                if (c < best) {
                    best = c;
                    pick = e;
                    err = d;
                }
            }
        if (pick) mask |= std::size_t{1} << *pick;
        a.estimate_of.push_back(pick);
        a.errors.push_back(err);
    }
    return a;
}

ErrorReport evaluate_instances(const ModelRegistry& registry, std::span<const TestInstance> instances,
                               const LocalizerConfig& cfg, double miss_cost) {
    std::vector<double> errors;
    std::size_t missed = 0, estimates = 0;
    for (const auto& inst : instances) {
        const LocalizationEstimate est = localize_scans(registry, inst.scans, cfg);
        std::vector<Point2> where;
        for (const auto& d : est.detected) where.push_back(d.position);
        estimates += where.size();
        const Assignment a = assign_min_cost(inst.truths, where, miss_cost);
        for (std::size_t t = 0; t < a.errors.size(); ++t) {
            errors.push_back(a.errors[t]);
            if (!a.estimate_of[t]) ++missed;
        }
    }
    ErrorReport r = make_report(std::move(errors));
    r.instances = instances.size();
    r.missed = missed;
    r.estimates = estimates;
    return r;
}

std::vector<TestInstance> group_records(std::span<const ScanRecord> rows, std::size_t window) {
    std::vector<TestInstance> out;
    const ScanRecord* prev = nullptr;
    for (const auto& r : rows) {
        const bool same = prev && prev->ref_id == r.ref_id && prev->position == r.position;
        if (!same || (window > 0 && out.back().scans.size() >= window)) {
            TestInstance inst;
            inst.truth_ids.push_back(r.ref_id);
            inst.truths.push_back(r.position);
            out.push_back(std::move(inst));
        }
        out.back().scans.push_back(r.state);
        prev = &r;
    }
    return out;
}

json report_to_json(const ErrorReport& r) {
    json cdf = json::array();
    for (const auto& [e, f] : r.cdf) cdf.push_back({e, f});
    return {{"summary",
             {{"mean", r.summary.mean},
              {"p25", r.summary.p25},
              {"median", r.summary.median},
              {"p75", r.summary.p75},
              {"max", r.summary.max}}},
            {"instances", r.instances},
            {"missed", r.missed},
            {"estimates", r.estimates},
            {"errors", r.errors},
            {"cdf", cdf}};
}

std::string report_table(const ErrorReport& r, const std::string& title) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "  %-10s %-10s %-10s %-10s %-10s\n"
                  "  %-10.2f %-10.2f %-10.2f %-10.2f %-10.2f\n"
                  "  (errors in m over %zu truths, %zu instances, %zu missed)\n",
                  "Average", "25th", "Median", "75th", "Max", r.summary.mean, r.summary.p25,
                  r.summary.median, r.summary.p75, r.summary.max, r.errors.size(), r.instances, r.missed);
    return title + "\n" + buf;
}

std::string cdf_csv(const ErrorReport& r) {
    std::string out = "error_m,cum_fraction\n";
    char buf[64];
    for (const auto& [e, f] : r.cdf) {
        auto p = std::to_chars(buf, buf + sizeof buf, e).ptr;
        out.append(buf, p);
        out += ',';
        p = std::to_chars(buf, buf + sizeof buf, f).ptr;
        out.append(buf, p);
        out += '\n';
    }
    return out;
}

ExperimentConfig default_experiment(const std::string& preset) {
    ExperimentConfig cfg;
    cfg.sim.testbed = preset_testbed(preset);
    cfg.train.dropout_rate = preset == "testbed2" ? 0.10 : 0.30;
    return cfg;
}

namespace {
// Evenly spread subset of n out of the deployed devices.
std::vector<Point2> spread_subset(const std::vector<Point2>& all, std::size_t n, const char* what) {
    if (n == 0) return all;
    if (n > all.size()) throw ValidationError(std::string("more ") + what + " requested than deployed");
    std::vector<Point2> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(all[i * all.size() / n]);
    return out;
}
}  // namespace

Testbed reduce_devices(const Testbed& tb, std::size_t n_tx, std::size_t n_rx) {
    Testbed out = tb;
    out.transmitters = spread_subset(tb.transmitters, n_tx, "transmitters");
    out.receivers = spread_subset(tb.receivers, n_rx, "receivers");
    return out;
}

SimConfig experiment_sim(const ExperimentConfig& cfg) {
    SimConfig sim = cfg.sim;
    sim.testbed = reduce_devices(cfg.sim.testbed, cfg.n_transmitters, cfg.n_receivers);
    sim.seed = derive_seed(cfg.seed, {0x73696dULL});
    return sim;
}

TrainConfig experiment_train(const ExperimentConfig& cfg) {
    TrainConfig train = cfg.train;
    train.seed = derive_seed(cfg.seed, {0x747261696eULL});
    return train;
}

std::vector<int> experiment_ids(const ExperimentConfig& cfg, const Testbed& testbed) {
    std::vector<int> ids;
    for (const auto& rp : testbed.reference_points) ids.push_back(rp.id);
    if (cfg.n_reference_points > 0 && cfg.n_reference_points < ids.size()) {
        Rng rng = make_rng(cfg.seed, {0x737562ULL});
        std::shuffle(ids.begin(), ids.end(), rng);
        ids.resize(cfg.n_reference_points);
        std::sort(ids.begin(), ids.end());
    }
    return ids;
}

std::vector<TestInstance> experiment_tests(const ExperimentConfig& cfg, const SimConfig& sim) {
    if (cfg.persons > 1)
        return generate_multi_instances(sim, cfg.persons, cfg.min_separation, cfg.multi_instances,
                                        cfg.scans_per_instance, 1);
    std::span<const ReferencePoint> where;
    if (cfg.test_locations == TestLocations::kTestPoints) {
        if (sim.testbed.test_points.empty()) throw ValidationError("testbed has no test points");
        where = sim.testbed.test_points;
    }
    return generate_single_instances(sim, cfg.test_per_point, cfg.scans_per_instance, 1, where);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    const SimConfig sim = experiment_sim(cfg);
    const auto training = generate_dataset(sim, cfg.scans_per_point, 0);
    const auto ids = experiment_ids(cfg, sim.testbed);
    ModelRegistry registry = train_registry(sim.testbed, training, experiment_train(cfg), ids, cfg.threads);

    const auto tests = experiment_tests(cfg, sim);
    LocalizerConfig loc = cfg.localizer;
    if (cfg.persons > 1 && !loc.n_expected) loc.n_expected = cfg.persons;
    ErrorReport report = evaluate_instances(registry, tests, loc, sim.testbed.diagonal());
    return {std::move(registry), std::move(report)};
}

AblationAxis parse_axis(const std::string& name) {
    if (name == "sigma_gauss") return AblationAxis::kSigmaGauss;
    if (name == "p_silence") return AblationAxis::kPSilence;
    if (name == "dropout") return AblationAxis::kDropout;
    if (name == "transmitters") return AblationAxis::kTransmitters;
    if (name == "receivers") return AblationAxis::kReceivers;
    if (name == "reference_points") return AblationAxis::kReferencePoints;
    if (name == "persons") return AblationAxis::kPersons;
    throw ValidationError("unknown ablation axis '" + name + "'");
}

std::string axis_name(AblationAxis axis) {
    switch (axis) {
        case AblationAxis::kSigmaGauss: return "sigma_gauss";
        case AblationAxis::kPSilence: return "p_silence";
        case AblationAxis::kDropout: return "dropout";
        case AblationAxis::kTransmitters: return "transmitters";
        case AblationAxis::kReceivers: return "receivers";
        case AblationAxis::kReferencePoints: return "reference_points";
        case AblationAxis::kPersons: return "persons";
    }
    return "?";
}

void apply_axis(ExperimentConfig& cfg, AblationAxis axis, double value) {
    auto count = [&] {
        if (!(value >= 1.0) || value != std::floor(value))
            throw ValidationError(axis_name(axis) + " values must be positive integers");
        return static_cast<std::size_t>(value);
    };
    switch (axis) {
        case AblationAxis::kSigmaGauss: cfg.train.corruption.sigma_gauss = value; break;
        case AblationAxis::kPSilence: cfg.train.corruption.p_silence = value; break;
        case AblationAxis::kDropout: cfg.train.dropout_rate = value; break;
        case AblationAxis::kTransmitters: cfg.n_transmitters = count(); break;
        case AblationAxis::kReceivers: cfg.n_receivers = count(); break;
        case AblationAxis::kReferencePoints: cfg.n_reference_points = count(); break;
        case AblationAxis::kPersons: cfg.persons = count(); break;
    }
}

std::vector<AblationPoint> run_ablation(const ExperimentConfig& base, AblationAxis axis, std::span<const double> values,
                                        std::size_t runs) {
    if (values.empty()) throw ValidationError("ablation needs at least one value");
    if (runs < 1) throw ValidationError("ablation needs at least one run per value");
    std::vector<AblationPoint> out;
    for (double v : values) {
        AblationPoint pt;
        pt.value = v;
        std::vector<double> medians;
        for (std::size_t r = 0; r < runs; ++r) {
            ExperimentConfig cfg = base;
            apply_axis(cfg, axis, v);
            cfg.seed = derive_seed(base.seed, {r});
            pt.runs.push_back(run_experiment(cfg).report);
            medians.push_back(pt.runs.back().summary.median);
        }
        std::sort(medians.begin(), medians.end());
        // nearest-rank median, consistent with the per-run summaries
        pt.median_of_medians = percentile_nearest_rank(medians, 50);
        out.push_back(std::move(pt));
    }
    return out;
}

json ablation_to_json(AblationAxis axis, std::span<const AblationPoint> points) {
    json j;
    j["axis"] = axis_name(axis);
    j["points"] = json::array();
    for (const auto& p : points) {
        json runs = json::array();
        for (const auto& r : p.runs) runs.push_back(report_to_json(r)["summary"]);
        j["points"].push_back({{"value", p.value}, {"median_of_medians", p.median_of_medians}, {"runs", runs}});
    }
    return j;
}

}  // namespace rttloc
