// rttloc: simulate | train | localize | evaluate | ablate
//
// Exit codes: 0 success, 2 usage error, 3 data/validation error.

#include "rttloc/config.hpp"
#include "rttloc/errors.hpp"
#include "rttloc/eval.hpp"
#include "rttloc/io.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace rttloc;

namespace {

constexpr int kUsage = 2;
constexpr int kData = 3;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Options shared by every subcommand; flags win over the config file.
struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> preset;
    std::optional<unsigned> threads;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "JSON run config")->envname(kConfigEnv);
    cmd->add_option("--seed", c.seed, "master seed, overrides the config everywhere");
    cmd->add_option("--preset", c.preset, "testbed preset")->check(CLI::IsMember({"testbed1", "testbed2"}));
    cmd->add_option("--threads", c.threads, "training threads (0 = all cores)");
    cmd->add_option("--set", c.overrides, "config override, section.key=value (repeatable)");
}

ExperimentConfig resolve(const Common& c) {
    json doc = json::object();
    if (!c.config.empty()) {
        try {
            doc = json::parse(read_text(c.config));
        } catch (const json::parse_error& e) {
            throw ParseError(c.config, 0, "json", e.what());
        }
    }
    if (c.preset) doc["preset"] = *c.preset;
    for (const auto& o : c.overrides) apply_override(doc, o);
    ExperimentConfig cfg = config_from_json(doc);
    if (c.seed) cfg.seed = *c.seed;
    if (c.threads) cfg.threads = *c.threads;
    return cfg;
}

void require_file(const std::string& path, const char* what) {
    if (!fs::is_regular_file(path)) throw ValidationError(std::string(what) + " not found: " + path);
}

json detections_json(const LocalizationEstimate& est) {
    json d = json::array();
    for (const auto& det : est.detected)
        d.push_back({{"ref_point_id", det.ref_point_id},
                     {"x", det.position.x},
                     {"y", det.position.y},
                     {"score", det.score}});
    return d;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateArgs {
    Common common;
    std::string out;
    std::optional<std::size_t> scans_per_point, test_per_point, scans_per_instance;
    std::optional<std::string> test_locations;
};

int cmd_simulate(const SimulateArgs& a) {
    ExperimentConfig cfg = resolve(a.common);
    if (a.scans_per_point) cfg.scans_per_point = *a.scans_per_point;
    if (a.test_per_point) cfg.test_per_point = *a.test_per_point;
    if (a.scans_per_instance) cfg.scans_per_instance = *a.scans_per_instance;
    if (a.test_locations)
        cfg.test_locations =
            *a.test_locations == "test_points" ? TestLocations::kTestPoints : TestLocations::kReferencePoints;
    if (cfg.persons > 1)
        throw UsageError("the scan CSV holds one truth per row; evaluate multi-person runs in-process "
                         "(evaluate without --store)");

    const SimConfig sim = experiment_sim(cfg);
    const std::size_t k = sim.testbed.pair_count();
    const auto train = generate_dataset(sim, cfg.scans_per_point, 0);
    const auto tests = instances_to_records(experiment_tests(cfg, sim));

    const fs::path dir(a.out);
    save_testbed(dir / "testbed.json", sim.testbed);
    save_scans(dir / "train.csv", train, k);
    save_scans(dir / "test.csv", tests, k);
    write_text(dir / "config.json", dump_json(config_to_json(cfg)));
    std::cerr << "wrote " << train.size() << " training and " << tests.size() << " test scans (K = " << k
              << ") to " << dir.string() << "\n";
    return 0;
}

// ---- train ------------------------------------------------------------------

struct TrainArgs {
    Common common;
    std::string scans, testbed, out;
    std::vector<int> points;
    std::optional<std::size_t> n_points;
    std::optional<double> dropout, sigma_gauss, p_silence, lr;
    std::optional<int> epochs, patience;
    std::optional<std::size_t> hidden, depth;
};

int cmd_train(const TrainArgs& a) {
    ExperimentConfig cfg = resolve(a.common);
    if (a.n_points) cfg.n_reference_points = *a.n_points;
    TrainConfig& t = cfg.train;
    if (a.dropout) t.dropout_rate = *a.dropout;
    if (a.sigma_gauss) t.corruption.sigma_gauss = *a.sigma_gauss;
    if (a.p_silence) t.corruption.p_silence = *a.p_silence;
    if (a.lr) t.learning_rate = *a.lr;
    if (a.epochs) t.max_epochs = *a.epochs;
    if (a.patience) t.patience = *a.patience;
    if (a.hidden) t.hidden_dim = *a.hidden;
    if (a.depth) t.stack_depth = *a.depth;

    require_file(a.scans, "scan file");
    require_file(a.testbed, "testbed file");
    const Testbed tb = load_testbed(a.testbed);
    const auto rows = load_scans(a.scans, tb.pair_count());
    if (rows.empty()) throw ValidationError("no training scans in " + a.scans);

    std::vector<int> ids = a.points;
    if (ids.empty()) ids = experiment_ids(cfg, tb);
    const ModelRegistry reg = train_registry(tb, rows, experiment_train(cfg), ids, cfg.threads);
    save_model_store(a.out, reg);
    std::cerr << "trained " << reg.size() << " models (K = " << reg.input_dim() << ") -> " << a.out << "\n";
    return 0;
}

// ---- localize ---------------------------------------------------------------

struct LocalizeArgs {
    Common common;
    std::string store, scans, out;
    std::optional<double> tau;
    std::optional<std::size_t> k, n_expected, window;
};

LocalizerConfig localizer_from(const ExperimentConfig& cfg, std::optional<double> tau, std::optional<std::size_t> k,
                               std::optional<std::size_t> n_expected) {
    LocalizerConfig loc = cfg.localizer;
    if (tau) loc.tau = *tau;
    if (k) loc.k_neighbors = *k;
    if (n_expected) loc.n_expected = *n_expected;
    return loc;
}

int cmd_localize(const LocalizeArgs& a) {
    const ExperimentConfig cfg = resolve(a.common);
    const LocalizerConfig loc = localizer_from(cfg, a.tau, a.k, a.n_expected);
    require_file(a.store, "model store");
    require_file(a.scans, "scan file");
    const ModelRegistry reg = load_model_store(a.store);
    const auto rows = load_scans(a.scans, reg.input_dim());
    const auto groups = group_records(rows, a.window.value_or(cfg.scans_per_instance));

    std::ofstream file;
    if (!a.out.empty()) {
        if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
        file.open(a.out);
        if (!file) throw ValidationError("cannot write " + a.out);
    }
    std::ostream& os = a.out.empty() ? std::cout : file;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const auto est = localize_scans(reg, groups[i].scans, loc);
        json line{{"instance", i},
                  {"n_scans", groups[i].scans.size()},
                  {"threshold", est.threshold_used},
                  {"detections", detections_json(est)}};
        if (groups[i].truth_ids.front() >= 0) line["truth_id"] = groups[i].truth_ids.front();
        os << line.dump() << "\n";
    }
    return 0;
}

// ---- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
    Common common;
    std::string store, test, testbed, out = ".";
    std::optional<double> tau;
    std::optional<std::size_t> k, n_expected, window, persons;
};

int cmd_evaluate(const EvaluateArgs& a) {
    ExperimentConfig cfg = resolve(a.common);
    if (a.persons) cfg.persons = *a.persons;
    cfg.localizer = localizer_from(cfg, a.tau, a.k, a.n_expected);
    if (a.store.empty() != a.test.empty()) throw UsageError("--store and --test go together");

    ErrorReport report;
    std::string title;
    if (a.store.empty()) {
        report = run_experiment(cfg).report;
        title = "simulated run, " + std::to_string(cfg.persons) + " person(s), seed " + std::to_string(cfg.seed);
    } else {
        require_file(a.store, "model store");
        require_file(a.test, "test scan file");
        const ModelRegistry reg = load_model_store(a.store);
        const auto rows = load_scans(a.test, reg.input_dim());
        if (rows.empty()) throw ValidationError("no test scans in " + a.test);
        for (const auto& r : rows)
            if (r.ref_id < 0) throw ValidationError("test scans must carry ground truth (ref_id >= 0)");
        double miss_cost = cfg.sim.testbed.diagonal();
        if (!a.testbed.empty()) {
            require_file(a.testbed, "testbed file");
            miss_cost = load_testbed(a.testbed).diagonal();
        }
        const auto groups = group_records(rows, a.window.value_or(cfg.scans_per_instance));
        report = evaluate_instances(reg, groups, cfg.localizer, miss_cost);
        title = fs::path(a.test).filename().string();
    }

    std::cout << report_table(report, title);
    const fs::path dir(a.out);
    write_text(dir / "report.json", dump_json(report_to_json(report)));
    write_text(dir / "cdf.csv", cdf_csv(report));
    return 0;
}

// ---- ablate -----------------------------------------------------------------

struct AblateArgs {
    Common common;
    std::string axis, out;
    std::vector<std::string> values;
    std::size_t runs = 5;
};

int cmd_ablate(const AblateArgs& a) {
    std::vector<double> values;
    for (const auto& v : a.values) {
        double x = 0.0;
        const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
        if (v.empty() || ec != std::errc() || end != v.data() + v.size())
            throw UsageError("--values: '" + v + "' is not a number");
        values.push_back(x);
    }
    if (values.empty()) throw UsageError("--values needs at least one value");
    const ExperimentConfig cfg = resolve(a.common);
    const AblationAxis axis = parse_axis(a.axis);
    const auto points = run_ablation(cfg, axis, values, a.runs);

    std::cout << std::left << std::setw(18) << axis_name(axis) << "median of " << a.runs << " run medians (m)\n";
    for (const auto& p : points) {
        std::ostringstream v;
        v << p.value;
        std::cout << std::left << std::setw(18) << v.str() << std::fixed << std::setprecision(3)
                  << p.median_of_medians << "\n";
        std::cout.unsetf(std::ios::floatfield);
    }
    if (!a.out.empty()) write_text(fs::path(a.out) / "ablation.json", dump_json(ablation_to_json(axis, points)));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Device-free multi-person localization from WiFi round-trip times"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "generate a synthetic training/test dataset");
    add_common(c_sim, sim.common);
    c_sim->add_option("--out", sim.out, "output directory")->required();
    c_sim->add_option("--scans-per-point", sim.scans_per_point)->check(CLI::PositiveNumber);
    c_sim->add_option("--test-per-point", sim.test_per_point)->check(CLI::PositiveNumber);
    c_sim->add_option("--scans-per-instance", sim.scans_per_instance)->check(CLI::PositiveNumber);
    c_sim->add_option("--test-locations", sim.test_locations)
        ->check(CLI::IsMember({"reference_points", "test_points"}));

    TrainArgs tr;
    auto* c_train = app.add_subcommand("train", "train one denoising autoencoder per reference point");
    add_common(c_train, tr.common);
    c_train->add_option("--scans", tr.scans, "labeled training scans (CSV)")->required();
    c_train->add_option("--testbed", tr.testbed, "testbed JSON")->required();
    c_train->add_option("--out", tr.out, "model store to write")->required();
    auto* pts = c_train->add_option("--points", tr.points, "reference point ids to train")->delimiter(',');
    c_train->add_option("--n-points", tr.n_points, "train a seeded random subset of this size")
        ->check(CLI::PositiveNumber)
        ->excludes(pts);
    c_train->add_option("--dropout", tr.dropout)->check(CLI::Range(0.0, 1.0));
    c_train->add_option("--sigma-gauss", tr.sigma_gauss)->check(CLI::NonNegativeNumber);
    c_train->add_option("--p-silence", tr.p_silence)->check(CLI::Range(0.0, 1.0));
    c_train->add_option("--lr", tr.lr)->check(CLI::PositiveNumber);
    c_train->add_option("--epochs", tr.epochs)->check(CLI::PositiveNumber);
    c_train->add_option("--patience", tr.patience)->check(CLI::PositiveNumber);
    c_train->add_option("--hidden", tr.hidden)->check(CLI::PositiveNumber);
    c_train->add_option("--depth", tr.depth)->check(CLI::PositiveNumber);

    LocalizeArgs lo;
    auto* c_loc = app.add_subcommand("localize", "estimate positions, one JSON line per scan group");
    add_common(c_loc, lo.common);
    c_loc->add_option("--store", lo.store, "model store")->required();
    c_loc->add_option("--scans", lo.scans, "scans to localize (CSV)")->required();
    c_loc->add_option("--out", lo.out, "write JSON lines here instead of stdout");
    c_loc->add_option("--tau", lo.tau, "posterior threshold (default 1.5/M)")->check(CLI::Range(0.0, 1.0));
    c_loc->add_option("--k", lo.k, "neighbours for fine localization")->check(CLI::PositiveNumber);
    c_loc->add_option("--n-expected", lo.n_expected, "cap on the number of detections")->check(CLI::PositiveNumber);
    c_loc->add_option("--window", lo.window, "scans per estimate (0 = whole run)");

    EvaluateArgs ev;
    auto* c_eval = app.add_subcommand("evaluate", "score estimates against ground truth");
    add_common(c_eval, ev.common);
    c_eval->add_option("--store", ev.store, "model store (omit to simulate, train and test in-process)");
    c_eval->add_option("--test", ev.test, "labeled test scans (CSV)");
    c_eval->add_option("--testbed", ev.testbed, "testbed JSON, for the miss cost");
    c_eval->add_option("--out", ev.out, "directory for report.json and cdf.csv");
    c_eval->add_option("--tau", ev.tau)->check(CLI::Range(0.0, 1.0));
    c_eval->add_option("--k", ev.k)->check(CLI::PositiveNumber);
    c_eval->add_option("--n-expected", ev.n_expected)->check(CLI::PositiveNumber);
    c_eval->add_option("--window", ev.window, "scans per instance (0 = whole run)");
    c_eval->add_option("--persons", ev.persons, "persons per instance (in-process runs)")->check(CLI::PositiveNumber);

    AblateArgs ab;
    auto* c_abl = app.add_subcommand("ablate", "sweep one knob over several seeded runs");
    add_common(c_abl, ab.common);
    c_abl->add_option("--axis", ab.axis)
        ->required()
        ->check(CLI::IsMember(
            {"sigma_gauss", "p_silence", "dropout", "transmitters", "receivers", "reference_points", "persons"}));
    c_abl->add_option("--values", ab.values, "comma-separated values")->required()->delimiter(',');
    c_abl->add_option("--runs", ab.runs, "seeded runs per value")->check(CLI::PositiveNumber);
    c_abl->add_option("--out", ab.out, "directory for ablation.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*c_sim) return cmd_simulate(sim);
        if (*c_train) return cmd_train(tr);
        if (*c_loc) return cmd_localize(lo);
        if (*c_eval) return cmd_evaluate(ev);
        if (*c_abl) return cmd_ablate(ab);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsage;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kData;
    }
    return kUsage;
}
