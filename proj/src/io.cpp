#include "rttloc/io.hpp"

#include "rttloc/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace rttloc {

using nlohmann::json;

namespace {

void append_number(std::string& out, double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string::size_type start = 0;
    while (true) {
        auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    for (auto& f : out) {
        while (!f.empty() && (f.back() == ' ' || f.back() == '\r')) f.pop_back();
        while (!f.empty() && f.front() == ' ') f.erase(f.begin());
    }
    return out;
}

double parse_double(const std::string& s, const std::string& source, std::size_t line, const std::string& field) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw ParseError(source, line, field, "expected a number, got '" + s + "'");
    return v;
}

long long parse_int(const std::string& s, const std::string& source, std::size_t line, const std::string& field) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw ParseError(source, line, field, "expected an integer, got '" + s + "'");
    return v;
}

std::string expected_header(std::size_t k) {
    std::string h = "ref_id,x,y";
    for (std::size_t i = 0; i < k; ++i) h += ",rtt_" + std::to_string(i);
    for (std::size_t i = 0; i < k; ++i) h += ",mask_" + std::to_string(i);
    return h;
}

json point_json(const Point2& p) { return json::array({p.x, p.y}); }

Point2 point_from(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2) throw ParseError("testbed", 0, what, "expected [x, y]");
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

json vector_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Eigen::VectorXd vector_from(const json& j, Eigen::Index n, const std::string& field) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != n)
        throw ParseError("model store", 0, field, "expected " + std::to_string(n) + " numbers");
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
    return v;
}

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index rows, Eigen::Index cols, const std::string& field) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
        throw ParseError("model store", 0, field, "expected " + std::to_string(rows) + " rows");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) m.row(r) = vector_from(j.at(static_cast<std::size_t>(r)), cols, field).transpose();
    return m;
}

json layer_json(const DaeLayer& l) {
    return {{"W", matrix_json(l.W)}, {"b_enc", vector_json(l.b_enc)}, {"b_dec", vector_json(l.b_dec)}};
}

DaeLayer layer_from(const json& j, Eigen::Index out, Eigen::Index in) {
    return {matrix_from(j.at("W"), out, in, "W"), vector_from(j.at("b_enc"), out, "b_enc"),
            vector_from(j.at("b_dec"), in, "b_dec")};
}

}  // namespace

void write_scans(std::ostream& out, std::span<const ScanRecord> rows, std::size_t k) {
    out << expected_header(k) << '\n';
    std::string line;
    for (const auto& r : rows) {
        if (r.state.size() != k || r.state.detected.size() != k)
            throw ValidationError("scan row has K = " + std::to_string(r.state.size()) + ", expected " +
                                  std::to_string(k));
        line = std::to_string(r.ref_id);
        line += ',';
        append_number(line, r.position.x);
        line += ',';
        append_number(line, r.position.y);
        for (double v : r.state.values) {
            line += ',';
            append_number(line, v);
        }
        for (bool d : r.state.detected) line += d ? ",1" : ",0";
        out << line << '\n';
    }
}

void save_scans(const std::filesystem::path& path, std::span<const ScanRecord> rows, std::size_t k) {
    std::ostringstream os;
    write_scans(os, rows, k);
    write_text(path, os.str());
}

std::vector<ScanRecord> read_scans(std::istream& in, const std::string& source, std::optional<std::size_t> expected_k) {
    std::vector<ScanRecord> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t k = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (!have_header) {
            if (fields.size() < 3 || fields[0] != "ref_id" || fields[1] != "x" || fields[2] != "y" ||
                (fields.size() - 3) % 2 != 0)
                throw ParseError(source, line_no, "header", "expected ref_id,x,y,rtt_*,mask_*");
            k = (fields.size() - 3) / 2;
            if (line != expected_header(k)) throw ParseError(source, line_no, "header", "malformed column names");
            if (expected_k && *expected_k != k)
                throw ParseError(source, line_no, "header",
                                 "file has K = " + std::to_string(k) + ", expected " + std::to_string(*expected_k));
            have_header = true;
            continue;
        }
        if (fields.size() != 3 + 2 * k)
            throw ParseError(source, line_no, "row",
                             "expected " + std::to_string(3 + 2 * k) + " fields, got " + std::to_string(fields.size()));
        ScanRecord r;
        r.ref_id = static_cast<int>(parse_int(fields[0], source, line_no, "ref_id"));
        if (r.ref_id < -1) throw ParseError(source, line_no, "ref_id", "must be >= -1");
        r.position = {parse_double(fields[1], source, line_no, "x"), parse_double(fields[2], source, line_no, "y")};
        r.state.values.resize(k);
        r.state.detected.resize(k);
        for (std::size_t i = 0; i < k; ++i) {
            r.state.values[i] = parse_double(fields[3 + i], source, line_no, "rtt_" + std::to_string(i));
            const auto m = parse_int(fields[3 + k + i], source, line_no, "mask_" + std::to_string(i));
            if (m != 0 && m != 1) throw ParseError(source, line_no, "mask_" + std::to_string(i), "mask must be 0 or 1");
            r.state.detected[i] = m == 1;
        }
        r.state = fill_undetected(r.state);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<ScanRecord> load_scans(const std::filesystem::path& path, std::optional<std::size_t> expected_k) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open scan file " + path.string());
    return read_scans(in, path.string(), expected_k);
}

json testbed_to_json(const Testbed& tb) {
    json j;
    j["width"] = tb.width;
    j["height"] = tb.height;
    j["transmitters"] = json::array();
    for (const auto& p : tb.transmitters) j["transmitters"].push_back(point_json(p));
    j["receivers"] = json::array();
    for (const auto& p : tb.receivers) j["receivers"].push_back(point_json(p));
    auto points = [](const std::vector<ReferencePoint>& v) {
        json a = json::array();
        for (const auto& rp : v) a.push_back({{"id", rp.id}, {"x", rp.location.x}, {"y", rp.location.y}});
        return a;
    };
    j["reference_points"] = points(tb.reference_points);
    j["test_points"] = points(tb.test_points);
    return j;
}

Testbed testbed_from_json(const json& j) {
    try {
        Testbed tb;
        tb.width = j.at("width").get<double>();
        tb.height = j.at("height").get<double>();
        for (const auto& p : j.at("transmitters")) tb.transmitters.push_back(point_from(p, "transmitters"));
        for (const auto& p : j.at("receivers")) tb.receivers.push_back(point_from(p, "receivers"));
        for (const auto& p : j.at("reference_points"))
            tb.reference_points.push_back({p.at("id").get<int>(), {p.at("x").get<double>(), p.at("y").get<double>()}});
        if (j.contains("test_points"))
            for (const auto& p : j.at("test_points"))
                tb.test_points.push_back({p.at("id").get<int>(), {p.at("x").get<double>(), p.at("y").get<double>()}});
        tb.validate();
        return tb;
    } catch (const json::exception& e) {
        throw ParseError("testbed", 0, "json", e.what());
    }
}

void save_testbed(const std::filesystem::path& path, const Testbed& tb) { write_text(path, dump_json(testbed_to_json(tb))); }

Testbed load_testbed(const std::filesystem::path& path) {
    try {
        return testbed_from_json(json::parse(read_text(path)));
    } catch (const json::parse_error& e) {
        throw ParseError(path.string(), 0, "json", e.what());
    }
}

json store_to_json(const ModelRegistry& registry) {
    json j;
    const std::size_t k = registry.input_dim();
    const DaeModel* first = registry.models().empty() ? nullptr : &registry.models().begin()->second;
    j["K"] = k;
    j["hidden_dim"] = first ? first->hidden_dim() : 0;
    j["activation"] = "sigmoid";
    j["stack_depth"] = first ? first->depth() : 1;
    j["norm_params"] = {{"min", registry.norm().min}, {"max", registry.norm().max}};
    j["models"] = json::array();
    for (const auto& [id, m] : registry.models()) {
        json mj = layer_json(m.layers.front());
        mj["ref_point_id"] = id;
        mj["x"] = m.location.x;
        mj["y"] = m.location.y;
        mj["train_meta"] = {{"epochs_run", m.train_meta.epochs_run},
                            {"best_epoch", m.train_meta.best_epoch},
                            {"final_train_mse", m.train_meta.final_train_mse},
                            {"final_val_mse", m.train_meta.final_val_mse}};
        if (m.depth() > 1) {
            json deeper = json::array();
            for (std::size_t l = 1; l < m.depth(); ++l) deeper.push_back(layer_json(m.layers[l]));
            mj["deeper_layers"] = std::move(deeper);
        }
        j["models"].push_back(std::move(mj));
    }
    return j;
}

ModelRegistry store_from_json(const json& j) {
    try {
        if (j.at("activation").get<std::string>() != "sigmoid")
            throw ParseError("model store", 0, "activation", "only 'sigmoid' is supported");
        const auto k = j.at("K").get<std::size_t>();
        NormParams norm{j.at("norm_params").at("min").get<std::vector<double>>(),
                        j.at("norm_params").at("max").get<std::vector<double>>()};
        if (norm.min.size() != k || norm.max.size() != k)
            throw ParseError("model store", 0, "norm_params", "length differs from K");
        const auto hidden = j.at("hidden_dim").get<std::size_t>();
        ModelRegistry registry(std::move(norm));
        for (const auto& mj : j.at("models")) {
            DaeModel m;
            m.ref_point_id = mj.at("ref_point_id").get<int>();
            m.location = {mj.at("x").get<double>(), mj.at("y").get<double>()};
            m.layers.push_back(layer_from(mj, static_cast<Eigen::Index>(hidden), static_cast<Eigen::Index>(k)));
            if (mj.contains("deeper_layers")) {
                for (const auto& lj : mj.at("deeper_layers")) {
                    const auto in = m.layers.back().W.rows();
                    const auto out = static_cast<Eigen::Index>(lj.at("b_enc").size());
                    m.layers.push_back(layer_from(lj, out, in));
                }
            }
            const auto& tm = mj.at("train_meta");
            m.train_meta = {tm.at("epochs_run").get<int>(), tm.at("best_epoch").get<int>(),
                            tm.at("final_train_mse").get<double>(), tm.at("final_val_mse").get<double>()};
            if (!m.all_finite()) throw ParseError("model store", 0, "models", "non-finite parameter");
            registry.add(std::move(m));
        }
        return registry;
    } catch (const json::exception& e) {
        throw ParseError("model store", 0, "json", e.what());
    }
}

void save_model_store(const std::filesystem::path& path, const ModelRegistry& registry) {
    write_text(path, dump_json(store_to_json(registry)));
}

ModelRegistry load_model_store(const std::filesystem::path& path) {
    try {
        return store_from_json(json::parse(read_text(path)));
    } catch (const json::parse_error& e) {
        throw ParseError(path.string(), 0, "json", e.what());
    }
}

std::string dump_json(const json& j) { return j.dump(1) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace rttloc
