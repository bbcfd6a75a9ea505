#include "rttloc/dae.hpp"

#include "rttloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

namespace rttloc {

namespace {

Eigen::VectorXd sigmoid(const Eigen::VectorXd& z) {
    return z.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

void check_dim(const DaeModel& m, Eigen::Index n, const char* what) {
    if (m.layers.empty()) throw ValidationError("model has no layers");
    if (static_cast<std::size_t>(n) != m.input_dim())
        throw ValidationError(std::string(what) + " has dimension " + std::to_string(n) + ", model expects " +
                              std::to_string(m.input_dim()));
}

double mse_over(const DaeModel& m, std::span<const NormalizedVector> xs, std::span<const std::size_t> idx) {
    if (idx.empty()) return 0.0;
    double sum = 0.0;
    for (auto i : idx) sum += loss(forward(m, xs[i]).s_hat, xs[i]);
    return sum / static_cast<double>(idx.size());
}

}  // namespace

std::size_t DaeModel::input_dim() const noexcept {
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().W.cols());
}

std::size_t DaeModel::hidden_dim() const noexcept {
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().W.rows());
}

bool DaeModel::all_finite() const {
    return std::all_of(layers.begin(), layers.end(), [](const DaeLayer& l) {
        return l.W.allFinite() && l.b_enc.allFinite() && l.b_dec.allFinite();
    });
}

DaeModel DaeModel::zeros(std::size_t input_dim, std::span<const std::size_t> hidden) {
    if (input_dim == 0 || hidden.empty()) throw ValidationError("model needs K >= 1 and at least one hidden layer");
    DaeModel m;
    std::size_t in = input_dim;
    for (auto out : hidden) {
        if (out == 0) throw ValidationError("hidden layer width must be >= 1");
        const auto o = static_cast<Eigen::Index>(out), i = static_cast<Eigen::Index>(in);
        m.layers.push_back({Eigen::MatrixXd::Zero(o, i), Eigen::VectorXd::Zero(o), Eigen::VectorXd::Zero(i)});
        in = out;
    }
    return m;
}

DaeModel DaeModel::random(std::size_t input_dim, std::span<const std::size_t> hidden, Rng& rng) {
    DaeModel m = zeros(input_dim, hidden);
    for (auto& l : m.layers) {
        const double bound = std::sqrt(6.0 / static_cast<double>(l.W.rows() + l.W.cols()));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (Eigen::Index c = 0; c < l.W.cols(); ++c)
            for (Eigen::Index r = 0; r < l.W.rows(); ++r) l.W(r, c) = u(rng);
    }
    return m;
}

std::vector<std::size_t> hidden_layout(std::size_t input_dim, std::size_t first_hidden, std::size_t depth) {
    if (depth == 0) throw ValidationError("stack depth must be >= 1");
    std::vector<std::size_t> widths;
    std::size_t w = first_hidden ? first_hidden : (input_dim + 1) / 2;
    for (std::size_t l = 0; l < depth; ++l) {
        widths.push_back(std::max<std::size_t>(w, 1));
        w = (widths.back() + 1) / 2;
    }
    return widths;
}

Dropout Dropout::sample(const DaeModel& m, double rate, Rng& rng) {
    Dropout d;
    d.rate = rate;
    for (const auto& l : m.layers) {
        Eigen::VectorXd keep(l.W.rows());
        for (Eigen::Index i = 0; i < keep.size(); ++i) keep[i] = bernoulli(rng, rate) ? 0.0 : 1.0;
        d.keep.push_back(std::move(keep));
    }
    return d;
}

Dropout Dropout::all_kept(const DaeModel& m, double rate) {
    Dropout d;
    d.rate = rate;
    for (const auto& l : m.layers) d.keep.push_back(Eigen::VectorXd::Ones(l.W.rows()));
    return d;
}

ForwardResult forward(const DaeModel& m, const NormalizedVector& v, const Dropout* dropout) {
    check_dim(m, v.size(), "input");
    if (dropout && dropout->keep.size() != m.layers.size())
        throw ValidationError("dropout mask count does not match model depth");
    ForwardResult r;
    Eigen::VectorXd a = v;
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
        const auto& layer = m.layers[l];
        Eigen::VectorXd h = sigmoid(layer.W * a + layer.b_enc);
        r.encoder_pre_dropout.push_back(h);
        if (dropout) {
            if (dropout->keep[l].size() != h.size()) throw ValidationError("dropout mask has the wrong width");
            h = h.cwiseProduct(dropout->keep[l]) / (1.0 - dropout->rate);
        }
        r.encoder_out.push_back(h);
        a = std::move(h);
    }
    r.h = a;
    r.decoder_out.resize(m.layers.size());
    for (std::size_t l = m.layers.size(); l-- > 0;) {
        const auto& layer = m.layers[l];
        a = sigmoid(layer.W.transpose() * a + layer.b_dec);
        r.decoder_out[l] = a;
    }
    r.s_hat = std::move(a);
    return r;
}

double loss(const Eigen::VectorXd& s_hat, const Eigen::VectorXd& s_clean) {
    if (s_hat.size() != s_clean.size()) throw ValidationError("loss: length mismatch");
    if (s_hat.size() == 0) return 0.0;
    return (s_hat - s_clean).squaredNorm() / static_cast<double>(s_hat.size());
}

Gradients backward(const DaeModel& m, const NormalizedVector& v_corrupt, const NormalizedVector& s_clean,
                   const Dropout* dropout) {
    const ForwardResult f = forward(m, v_corrupt, dropout);
    if (s_clean.size() != f.s_hat.size()) throw ValidationError("backward: target length mismatch");
    const std::size_t depth = m.layers.size();

    Gradients g;
    g.layers.reserve(depth);
    for (const auto& l : m.layers)
        g.layers.push_back({Eigen::MatrixXd::Zero(l.W.rows(), l.W.cols()), Eigen::VectorXd::Zero(l.b_enc.size()),
                            Eigen::VectorXd::Zero(l.b_dec.size())});

    // Decoder: layer 0 produces s_hat from the output of layer 1's decoder (or the code).
    Eigen::VectorXd delta = (2.0 / static_cast<double>(f.s_hat.size())) * (f.s_hat - s_clean);
    for (std::size_t l = 0; l < depth; ++l) {
        const Eigen::VectorXd& out = f.decoder_out[l];
        const Eigen::VectorXd& in = (l + 1 < depth) ? f.decoder_out[l + 1] : f.h;
        const Eigen::VectorXd dpre = delta.cwiseProduct(out.cwiseProduct((1.0 - out.array()).matrix()));
        g.layers[l].b_dec = dpre;
        g.layers[l].W.noalias() += in * dpre.transpose();
        delta = m.layers[l].W * dpre;
    }

    // Encoder, deepest layer first.
    for (std::size_t l = depth; l-- > 0;) {
        Eigen::VectorXd dh = delta;
        if (dropout) dh = dh.cwiseProduct(dropout->keep[l]) / (1.0 - dropout->rate);
        const Eigen::VectorXd& h = f.encoder_pre_dropout[l];
        const Eigen::VectorXd dz = dh.cwiseProduct(h.cwiseProduct((1.0 - h.array()).matrix()));
        const Eigen::VectorXd& in = l > 0 ? f.encoder_out[l - 1] : v_corrupt;
        g.layers[l].b_enc = dz;
        g.layers[l].W.noalias() += dz * in.transpose();
        delta = m.layers[l].W.transpose() * dz;
    }
    return g;
}

void TrainConfig::validate() const {
    if (max_epochs < 1) throw ValidationError("max_epochs must be >= 1");
    if (patience < 1 || patience > max_epochs) throw ValidationError("patience must lie in [1, max_epochs]");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ValidationError("dropout_rate must lie in [0, 1)");
    if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ValidationError("val_fraction must lie in (0, 1)");
    if (stack_depth < 1) throw ValidationError("stack_depth must be >= 1");
    corruption.validate();
}

DaeModel train(std::span<const NormalizedVector> scans, const TrainConfig& cfg, const NormalizedVector& placeholder) {
    cfg.validate();
    if (scans.size() < 2) throw ValidationError("training needs at least 2 scans for a validation split");
    const auto k = static_cast<std::size_t>(scans.front().size());
    for (const auto& s : scans)
        if (static_cast<std::size_t>(s.size()) != k) throw ValidationError("training scans have inconsistent K");

    Rng rng = make_rng(cfg.seed);
    std::vector<std::size_t> order(scans.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    auto n_val = static_cast<std::size_t>(std::lround(cfg.val_fraction * static_cast<double>(scans.size())));
    n_val = std::clamp<std::size_t>(n_val, 1, scans.size() - 1);
    const std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> fit(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

    const auto widths = hidden_layout(k, cfg.hidden_dim, cfg.stack_depth);
    DaeModel model = DaeModel::random(k, widths, rng);
    const Corruptor corrupt(cfg.corruption, placeholder);
    Rng noise = make_rng(cfg.seed, {1});

    DaeModel best = model;
    double best_val = mse_over(model, scans, val);
    int best_epoch = 0;
    int stale = 0;
    int epoch = 0;
    while (epoch < cfg.max_epochs && stale < cfg.patience) {
        ++epoch;
        std::shuffle(fit.begin(), fit.end(), rng);
        for (auto i : fit) {
            const NormalizedVector noisy = corrupt(scans[i], noise);
            const Dropout drop = Dropout::sample(model, cfg.dropout_rate, noise);
            const Gradients g = backward(model, noisy, scans[i], &drop);
            for (std::size_t l = 0; l < model.layers.size(); ++l) {
                model.layers[l].W -= cfg.learning_rate * g.layers[l].W;
                model.layers[l].b_enc -= cfg.learning_rate * g.layers[l].b_enc;
                model.layers[l].b_dec -= cfg.learning_rate * g.layers[l].b_dec;
            }
        }
        const double v = mse_over(model, scans, val);
        if (v < best_val) {
            best_val = v;
            best = model;
            best_epoch = epoch;
            stale = 0;
        } else {
            ++stale;
        }
    }
    best.train_meta.epochs_run = epoch;
    best.train_meta.best_epoch = best_epoch;
    best.train_meta.final_val_mse = best_val;
    best.train_meta.final_train_mse = mse_over(best, scans, fit);
    return best;
}

void ModelRegistry::add(DaeModel m) {
    if (models_.contains(m.ref_point_id))
        throw ValidationError("duplicate model for reference point " + std::to_string(m.ref_point_id));
    put(std::move(m));
}

void ModelRegistry::put(DaeModel m) {
    if (m.input_dim() != norm_.size())
        throw ValidationError("model K = " + std::to_string(m.input_dim()) + " does not match registry K = " +
                              std::to_string(norm_.size()));
    const int id = m.ref_point_id;
    models_.insert_or_assign(id, std::move(m));
}

const DaeModel& ModelRegistry::at(int id) const {
    auto it = models_.find(id);
    if (it == models_.end()) throw ValidationError("no model for reference point " + std::to_string(id));
    return it->second;
}

std::uint64_t model_seed(std::uint64_t seed, int ref_point_id) {
    return derive_seed(seed, {0x6d6f64656cULL, static_cast<std::uint64_t>(static_cast<std::int64_t>(ref_point_id))});
}

ModelRegistry train_registry(const Testbed& testbed, std::span<const ScanRecord> training, const TrainConfig& cfg,
                             std::span<const int> ids, unsigned threads) {
    cfg.validate();
    std::vector<StateVector> states;
    states.reserve(training.size());
    for (const auto& r : training) {
        if (r.state.size() != testbed.pair_count())
            throw ValidationError("scan K = " + std::to_string(r.state.size()) + " does not match testbed K = " +
                                  std::to_string(testbed.pair_count()));
        states.push_back(r.state);
    }
    ModelRegistry registry(fit_normalizer(states));
    const NormalizedVector placeholder = placeholder_image(registry.norm());

    std::vector<int> selected(ids.begin(), ids.end());
    if (selected.empty())
        for (const auto& rp : testbed.reference_points) selected.push_back(rp.id);

    std::vector<DaeModel> trained(selected.size());
    auto job = [&](std::size_t j) {
        const ReferencePoint& rp = testbed.reference_point(selected[j]);
        std::vector<NormalizedVector> xs;
        for (const auto& r : training)
            if (r.ref_id == rp.id) xs.push_back(normalize(r.state, registry.norm()));
        TrainConfig local = cfg;
        local.seed = model_seed(cfg.seed, rp.id);
        DaeModel m = train(xs, local, placeholder);
        m.ref_point_id = rp.id;
        m.location = rp.location;
        trained[j] = std::move(m);
    };

    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min<unsigned>(threads, static_cast<unsigned>(selected.size()));
    if (threads <= 1) {
        for (std::size_t j = 0; j < selected.size(); ++j) job(j);
    } else {
        std::vector<std::exception_ptr> errors(threads);
        {
            std::vector<std::jthread> pool;
            for (unsigned t = 0; t < threads; ++t)
                pool.emplace_back([&, t] {
                    try {
                        for (std::size_t j = t; j < selected.size(); j += threads) job(j);
                    } catch (...) {
                        errors[t] = std::current_exception();
                    }
                });
        }
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    for (auto& m : trained) registry.add(std::move(m));
    return registry;
}

std::vector<double> reconstruction_errors(const ModelRegistry& registry, const NormalizedVector& s) {
    std::vector<double> out;
    out.reserve(registry.size());
    for (const auto& [id, m] : registry.models()) out.push_back(loss(forward(m, s).s_hat, s));
    return out;
}

}  // namespace rttloc
