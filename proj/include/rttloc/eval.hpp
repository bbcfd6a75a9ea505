#pragma once

// Error metrics, multi-person matching, and the simulate -> train -> evaluate
// experiment loop used by the CLI and the acceptance suite.

#include "rttloc/dae.hpp"
#include "rttloc/localizer.hpp"
#include "rttloc/sim.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace rttloc {

struct ErrorSummary {
    double mean = 0.0;
    double p25 = 0.0;
    double median = 0.0;
    double p75 = 0.0;
    double max = 0.0;
};

struct ErrorReport {
    std::vector<double> errors;  ///< per truth, in evaluation order
    ErrorSummary summary;
    std::vector<std::pair<double, double>> cdf;  ///< (error, cumulative fraction)
    std::size_t instances = 0;
    std::size_t missed = 0;     ///< truths left unmatched
    std::size_t estimates = 0;  ///< total detections emitted
};

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value (p = 0 -> minimum).
double percentile_nearest_rank(std::span<const double> values, double p);

/// Throws ValidationError on an empty error list.
ErrorReport make_report(std::vector<double> errors);

/// Minimum-cost one-to-one matching of truths to estimates. Each truth is either
/// matched to a distinct estimate (cost = Euclidean distance) or left unmatched
/// (cost = `miss_cost`). Exact; at most 20 estimates.
struct Assignment {
    std::vector<std::optional<std::size_t>> estimate_of;  ///< per truth
    std::vector<double> errors;                           ///< per truth
    double total = 0.0;
};
Assignment assign_min_cost(std::span<const Point2> truths, std::span<const Point2> estimates, double miss_cost);

/// Localizes every instance and scores it against its truths.
ErrorReport evaluate_instances(const ModelRegistry& registry, std::span<const TestInstance> instances,
                               const LocalizerConfig& cfg, double miss_cost);

/// Groups CSV rows into instances: maximal runs of consecutive rows sharing
/// (ref_id, x, y), split into chunks of at most `window` rows (0 = unlimited).
std::vector<TestInstance> group_records(std::span<const ScanRecord> rows, std::size_t window);

nlohmann::json report_to_json(const ErrorReport& r);
std::string report_table(const ErrorReport& r, const std::string& title);
std::string cdf_csv(const ErrorReport& r);

/// Where single-person test instances are placed.
enum class TestLocations {
    kReferencePoints,  ///< held-out scans at the training locations
    kTestPoints,       ///< the testbed's separate evaluation locations
};

/// Everything one simulated run needs.
struct ExperimentConfig {
    SimConfig sim;
    TrainConfig train;
    LocalizerConfig localizer;
    std::size_t scans_per_point = 100;
    std::size_t test_per_point = 15;      ///< single-person instances per location
    TestLocations test_locations = TestLocations::kReferencePoints;
    std::size_t scans_per_instance = 5;   ///< online scans aggregated per estimate
    std::size_t persons = 1;
    std::size_t multi_instances = 100;    ///< instances when persons > 1
    double min_separation = 4.0;          ///< m, between persons
    std::size_t n_transmitters = 0;       ///< 0 = all of the testbed's
    std::size_t n_receivers = 0;
    std::size_t n_reference_points = 0;   ///< 0 = all; otherwise a seeded random subset is trained
    unsigned threads = 1;
    std::uint64_t seed = 0;               ///< drives sim, training and subsets
};

/// Preset geometry with all library defaults; dropout follows the preset
/// (0.30 for testbed1, 0.10 for testbed2).
ExperimentConfig default_experiment(const std::string& preset);

struct ExperimentResult {
    ModelRegistry registry;
    ErrorReport report;
};

/// Keeps an evenly spread subset of n transmitters/receivers (n = 0 keeps all).
Testbed reduce_devices(const Testbed& tb, std::size_t n_tx, std::size_t n_rx);

/// The pieces of run_experiment, exposed so file-based pipelines reproduce it:
/// simulator config (reduced devices, derived seed), training config (derived
/// seed), and the trained reference-point ids.
SimConfig experiment_sim(const ExperimentConfig& cfg);
TrainConfig experiment_train(const ExperimentConfig& cfg);
std::vector<int> experiment_ids(const ExperimentConfig& cfg, const Testbed& testbed);
/// Single- or multi-person test instances drawn from stream 1 of `sim`.
std::vector<TestInstance> experiment_tests(const ExperimentConfig& cfg, const SimConfig& sim);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

enum class AblationAxis { kSigmaGauss, kPSilence, kDropout, kTransmitters, kReceivers, kReferencePoints, kPersons };

AblationAxis parse_axis(const std::string& name);
std::string axis_name(AblationAxis axis);
void apply_axis(ExperimentConfig& cfg, AblationAxis axis, double value);

struct AblationPoint {
    double value = 0.0;
    std::vector<ErrorReport> runs;
    double median_of_medians = 0.0;
};

/// One experiment per (value, run); run r uses seed derive_seed(cfg.seed, {r}).
std::vector<AblationPoint> run_ablation(const ExperimentConfig& base, AblationAxis axis, std::span<const double> values,
                                        std::size_t runs);

nlohmann::json ablation_to_json(AblationAxis axis, std::span<const AblationPoint> points);

}  // namespace rttloc
