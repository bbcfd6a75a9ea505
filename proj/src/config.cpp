#include "rttloc/config.hpp"

#include "rttloc/errors.hpp"
#include "rttloc/io.hpp"

#include <functional>
#include <map>
#include <set>

namespace rttloc {

using json = nlohmann::json;

namespace {

// key -> setter for one section
using Setters = std::map<std::string, std::function<void(const json&)>>;

template <class T>
std::function<void(const json&)> set(T& field) {
    return [&field](const json& v) { field = v.get<T>(); };
}

template <class T>
std::function<void(const json&)> set_opt(std::optional<T>& field) {
    return [&field](const json& v) {
        if (v.is_null())
            field.reset();
        else
            field = v.get<T>();
    };
}

void apply_section(const json& j, const std::string& name, const Setters& setters) {
    if (!j.contains(name)) return;
    const json& sec = j.at(name);
    if (!sec.is_object()) throw ValidationError("config section '" + name + "' must be an object");
    for (const auto& [key, value] : sec.items()) {
        auto it = setters.find(key);
        if (it == setters.end()) throw ValidationError("unknown config key '" + name + "." + key + "'");
        try {
            it->second(value);
        } catch (const json::exception& e) {
            throw ValidationError("config key '" + name + "." + key + "': " + e.what());
        }
    }
}

std::string mode_name(CorruptionMode m) { return m == CorruptionMode::kCompose ? "compose" : "one_of"; }

CorruptionMode parse_mode(const std::string& s) {
    if (s == "one_of") return CorruptionMode::kOneOf;
    if (s == "compose") return CorruptionMode::kCompose;
    throw ValidationError("corruption.mode must be 'one_of' or 'compose'");
}

std::string sigma_name(SigmaMode m) {
    switch (m) {
        case SigmaMode::kOnlineStd: return "online_std";
        case SigmaMode::kOnlineVar: return "online_var";
        case SigmaMode::kFixed: return "fixed";
    }
    return "?";
}

SigmaMode parse_sigma(const std::string& s) {
    if (s == "online_std") return SigmaMode::kOnlineStd;
    if (s == "online_var") return SigmaMode::kOnlineVar;
    if (s == "fixed") return SigmaMode::kFixed;
    throw ValidationError("localizer.sigma_mode must be 'online_std', 'online_var' or 'fixed'");
}

TestLocations parse_locations(const std::string& s) {
    if (s == "reference_points") return TestLocations::kReferencePoints;
    if (s == "test_points") return TestLocations::kTestPoints;
    throw ValidationError("experiment.test_locations must be 'reference_points' or 'test_points'");
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
    if (!j.is_object()) throw ValidationError("config must be a JSON object");
    static const std::set<std::string> top{"preset", "seed",       "testbed",   "sim",
                                           "train",  "corruption", "localizer", "experiment"};
    for (const auto& [key, _] : j.items())
        if (!top.count(key)) throw ValidationError("unknown config key '" + key + "'");

    std::string preset = "testbed1";
    if (j.contains("preset")) {
        if (!j["preset"].is_string()) throw ValidationError("config key 'preset' must be a string");
        preset = j["preset"].get<std::string>();
    }
    ExperimentConfig cfg = default_experiment(preset);
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ValidationError("config key 'seed' must be a non-negative integer");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("testbed")) cfg.sim.testbed = testbed_from_json(j["testbed"]);

    SimConfig& s = cfg.sim;
    apply_section(j, "sim", {{"body_radius", set(s.body_radius)},
                             {"nlos_excess_mean", set(s.nlos_excess_mean)},
                             {"nlos_excess_std", set(s.nlos_excess_std)},
                             {"device_offset_std", set(s.device_offset_std)},
                             {"thermal_noise_std", set(s.thermal_noise_std)},
                             {"p_missed_detection", set(s.p_missed_detection)},
                             {"latency_spike_prob", set(s.latency_spike_prob)},
                             {"latency_spike_ns", set(s.latency_spike_ns)}});
    TrainConfig& t = cfg.train;
    apply_section(j, "train", {{"max_epochs", set(t.max_epochs)},
                               {"patience", set(t.patience)},
                               {"dropout_rate", set(t.dropout_rate)},
                               {"learning_rate", set(t.learning_rate)},
                               {"val_fraction", set(t.val_fraction)},
                               {"hidden_dim", set(t.hidden_dim)},
                               {"stack_depth", set(t.stack_depth)}});
    CorruptionConfig& c = t.corruption;
    apply_section(j, "corruption", {{"p_silence", set(c.p_silence)},
                                    {"sigma_gauss", set(c.sigma_gauss)},
                                    {"mode", [&c](const json& v) { c.mode = parse_mode(v.get<std::string>()); }}});
    LocalizerConfig& l = cfg.localizer;
    apply_section(j, "localizer",
                  {{"tau", set_opt(l.tau)},
                   {"k_neighbors", set(l.k_neighbors)},
                   {"n_expected", set_opt(l.n_expected)},
                   {"sigma_mode", [&l](const json& v) { l.sigma_mode = parse_sigma(v.get<std::string>()); }},
                   {"sigma_fixed", set(l.sigma_fixed)}});
    apply_section(j, "experiment",
                  {{"scans_per_point", set(cfg.scans_per_point)},
                   {"test_per_point", set(cfg.test_per_point)},
                   {"test_locations",
                    [&cfg](const json& v) { cfg.test_locations = parse_locations(v.get<std::string>()); }},
                   {"scans_per_instance", set(cfg.scans_per_instance)},
                   {"persons", set(cfg.persons)},
                   {"multi_instances", set(cfg.multi_instances)},
                   {"min_separation", set(cfg.min_separation)},
                   {"n_transmitters", set(cfg.n_transmitters)},
                   {"n_receivers", set(cfg.n_receivers)},
                   {"n_reference_points", set(cfg.n_reference_points)},
                   {"threads", set(cfg.threads)}});

    cfg.sim.validate();
    cfg.train.validate();
    if (cfg.scans_per_point < 1) throw ValidationError("experiment.scans_per_point must be >= 1");
    if (cfg.scans_per_instance < 1) throw ValidationError("experiment.scans_per_instance must be >= 1");
    if (cfg.persons < 1) throw ValidationError("experiment.persons must be >= 1");
    if (cfg.localizer.k_neighbors < 1) throw ValidationError("localizer.k_neighbors must be >= 1");
    return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
    const SimConfig& s = cfg.sim;
    const TrainConfig& t = cfg.train;
    const CorruptionConfig& c = t.corruption;
    const LocalizerConfig& l = cfg.localizer;
    json j;
    j["seed"] = cfg.seed;
    j["testbed"] = testbed_to_json(s.testbed);
    j["sim"] = {{"body_radius", s.body_radius},
                {"nlos_excess_mean", s.nlos_excess_mean},
                {"nlos_excess_std", s.nlos_excess_std},
                {"device_offset_std", s.device_offset_std},
                {"thermal_noise_std", s.thermal_noise_std},
                {"p_missed_detection", s.p_missed_detection},
                {"latency_spike_prob", s.latency_spike_prob},
                {"latency_spike_ns", s.latency_spike_ns}};
    j["train"] = {{"max_epochs", t.max_epochs},     {"patience", t.patience},
                  {"dropout_rate", t.dropout_rate}, {"learning_rate", t.learning_rate},
                  {"val_fraction", t.val_fraction}, {"hidden_dim", t.hidden_dim},
                  {"stack_depth", t.stack_depth}};
    j["corruption"] = {{"p_silence", c.p_silence}, {"sigma_gauss", c.sigma_gauss}, {"mode", mode_name(c.mode)}};
    j["localizer"] = {{"tau", l.tau ? json(*l.tau) : json(nullptr)},
                      {"k_neighbors", l.k_neighbors},
                      {"n_expected", l.n_expected ? json(*l.n_expected) : json(nullptr)},
                      {"sigma_mode", sigma_name(l.sigma_mode)},
                      {"sigma_fixed", l.sigma_fixed}};
    j["experiment"] = {
        {"scans_per_point", cfg.scans_per_point},
        {"test_per_point", cfg.test_per_point},
        {"test_locations",
         cfg.test_locations == TestLocations::kTestPoints ? "test_points" : "reference_points"},
        {"scans_per_instance", cfg.scans_per_instance},
        {"persons", cfg.persons},
        {"multi_instances", cfg.multi_instances},
        {"min_separation", cfg.min_separation},
        {"n_transmitters", cfg.n_transmitters},
        {"n_receivers", cfg.n_receivers},
        {"n_reference_points", cfg.n_reference_points},
        {"threads", cfg.threads}};
    return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ParseError(path.string(), 0, "json", e.what());
    }
    return config_from_json(j);
}

void apply_override(json& doc, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("override must look like key=value or section.key=value");
    const std::string path = assignment.substr(0, eq);
    const std::string text = assignment.substr(eq + 1);
    json value = json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    const auto dot = path.find('.');
    if (dot == std::string::npos) {
        doc[path] = value;
    } else {
        json& sec = doc[path.substr(0, dot)];
        if (sec.is_null()) sec = json::object();
        sec[path.substr(dot + 1)] = value;
    }
}

}  // namespace rttloc
