#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mmstock/error.hpp"
#include "mmstock/features.hpp"

namespace mmstock {

struct LstmConfig {
    std::size_t hidden_units = 256;
    double learning_rate = 0.001;
    std::size_t batch_size = 128;
    std::size_t epochs = 100;
    std::size_t lookback = 30;
    std::uint64_t seed = 42;
    double grad_clip_norm = 5.0;  // <= 0 disables clipping

    void validate() const {
        if (hidden_units == 0 || batch_size == 0 || epochs == 0 || lookback == 0)
            throw InputError("LSTM hidden_units, batch_size, epochs and lookback must be positive");
        if (!(learning_rate > 0.0)) throw InputError("learning rate must be positive");
    }
};

/// Gate order used throughout: input, forget, output, candidate.
enum class Gate : std::size_t { input = 0, forget = 1, output = 2, cell = 3 };

inline constexpr std::array<Gate, 4> kGates = {Gate::input, Gate::forget, Gate::output, Gate::cell};

/// All trainable parameters in one flat buffer. Layout, in order:
///   W_i W_f W_o W_g   each n_features x hidden, row-major
///   U_i U_f U_o U_g   each hidden x hidden, row-major
///   b_i b_f b_o b_g   each hidden
///   w_out             hidden
///   b_out             1
/// Gradients share this type and layout.
class LstmWeights {
public:
    LstmWeights() = default;
    LstmWeights(std::size_t n_features, std::size_t hidden)
        : n_features_(n_features), hidden_(hidden), params_(parameter_count(n_features, hidden), 0.0) {}

    static std::size_t parameter_count(std::size_t n_features, std::size_t hidden) {
        return 4 * n_features * hidden + 4 * hidden * hidden + 4 * hidden + hidden + 1;
    }

    std::size_t n_features() const noexcept { return n_features_; }
    std::size_t hidden() const noexcept { return hidden_; }
    std::size_t size() const noexcept { return params_.size(); }

    std::span<double> params() noexcept { return params_; }
    std::span<const double> params() const noexcept { return params_; }

    std::span<double> W(Gate g) { return block(w_offset(g), n_features_ * hidden_); }
    std::span<const double> W(Gate g) const { return block(w_offset(g), n_features_ * hidden_); }
    std::span<double> U(Gate g) { return block(u_offset(g), hidden_ * hidden_); }
    std::span<const double> U(Gate g) const { return block(u_offset(g), hidden_ * hidden_); }
    std::span<double> b(Gate g) { return block(b_offset(g), hidden_); }
    std::span<const double> b(Gate g) const { return block(b_offset(g), hidden_); }
    std::span<double> w_out() { return block(out_offset(), hidden_); }
    std::span<const double> w_out() const { return block(out_offset(), hidden_); }
    double& b_out() { return params_.back(); }
    double b_out() const { return params_.back(); }

    // Contiguous views over all four gates, used by the hot loops.
    std::span<const double> W_all() const { return block(0, 4 * n_features_ * hidden_); }
    std::span<const double> U_all() const { return block(u_offset(Gate::input), 4 * hidden_ * hidden_); }
    std::span<const double> b_all() const { return block(b_offset(Gate::input), 4 * hidden_); }

    friend bool operator==(const LstmWeights&, const LstmWeights&) = default;

private:
    std::size_t w_offset(Gate g) const { return static_cast<std::size_t>(g) * n_features_ * hidden_; }
    std::size_t u_offset(Gate g) const { return 4 * n_features_ * hidden_ + static_cast<std::size_t>(g) * hidden_ * hidden_; }
    std::size_t b_offset(Gate g) const {
        return 4 * n_features_ * hidden_ + 4 * hidden_ * hidden_ + static_cast<std::size_t>(g) * hidden_;
    }
    std::size_t out_offset() const { return 4 * n_features_ * hidden_ + 4 * hidden_ * hidden_ + 4 * hidden_; }

    std::span<double> block(std::size_t off, std::size_t n) { return {params_.data() + off, n}; }
    std::span<const double> block(std::size_t off, std::size_t n) const { return {params_.data() + off, n}; }

    std::size_t n_features_ = 0;
    std::size_t hidden_ = 0;
    std::vector<double> params_;
};

using LstmGradients = LstmWeights;

// ---- randomness -------------------------------------------------------------

namespace detail {

inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        const std::uint64_t r = rng();
        if (r >= threshold) return r % bound;
    }
}

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace detail

inline constexpr double kInitialOutputBias = 0.5;

/// Uniform in [-1/sqrt(hidden), 1/sqrt(hidden)] for every parameter, then the
/// forget-gate bias set to 1 and the output bias set to kInitialOutputBias.
inline LstmWeights init_weights(const LstmConfig& config, std::size_t n_features) {
    config.validate();
    if (n_features == 0) throw InputError("need at least one input feature");
    LstmWeights w(n_features, config.hidden_units);
    std::mt19937_64 rng(config.seed);
    const double k = 1.0 / std::sqrt(static_cast<double>(config.hidden_units));
    for (double& p : w.params()) p = (2.0 * detail::uniform01(rng) - 1.0) * k;
    std::fill(w.b(Gate::forget).begin(), w.b(Gate::forget).end(), 1.0);
    w.b_out() = kInitialOutputBias;
    return w;
}

// ---- forward ----------------------------------------------------------------

/// Activations kept by lstm_forward for backward(). Per-step arrays are
/// steps x hidden, row-major; `c` and `h` hold steps + 1 rows with the zero
/// initial state in row 0.
struct LstmCache {
    std::size_t steps = 0;
    std::size_t hidden = 0;
    std::span<const double> inputs;
    std::vector<double> i, f, o, g;
    std::vector<double> c, tanh_c, h;
    double head_preactivation = 0.0;
    double prediction = 0.0;

    std::span<const double> h_at(std::size_t t) const { return {h.data() + t * hidden, hidden}; }
    std::span<const double> c_at(std::size_t t) const { return {c.data() + t * hidden, hidden}; }
};

namespace detail {

// z[g*H + j] = b_g[j] + sum_k x[k] W_g[k][j] + sum_m h[m] U_g[m][j]
inline void gate_preactivations(const LstmWeights& w, std::span<const double> x, std::span<const double> h_prev,
                                std::vector<double>& z) {
    const std::size_t H = w.hidden(), F = w.n_features();
    z.assign(4 * H, 0.0);
    for (std::size_t g = 0; g < 4; ++g) {
        double* zg = z.data() + g * H;
        const auto b = w.b(static_cast<Gate>(g));
        std::copy(b.begin(), b.end(), zg);
        const double* W = w.W(static_cast<Gate>(g)).data();
        for (std::size_t k = 0; k < F; ++k) {
            const double xk = x[k];
            if (xk == 0.0) continue;
            const double* row = W + k * H;
            for (std::size_t j = 0; j < H; ++j) zg[j] += xk * row[j];
        }
        const double* U = w.U(static_cast<Gate>(g)).data();
        for (std::size_t m = 0; m < H; ++m) {
            const double hm = h_prev[m];
            if (hm == 0.0) continue;
            const double* row = U + m * H;
            for (std::size_t j = 0; j < H; ++j) zg[j] += hm * row[j];
        }
    }
}

inline void check_input(const LstmWeights& w, std::span<const double> x) {
    if (w.n_features() == 0 || x.size() % w.n_features() != 0 || x.empty())
        throw InputError("input of " + std::to_string(x.size()) + " values does not fit " +
                         std::to_string(w.n_features()) + " features");
}

}  // namespace detail

/// Runs the cell over `x` (steps x n_features, row-major) from h0 = c0 = 0 and
/// applies the ReLU dense head to the last hidden state.
inline LstmCache lstm_forward(const LstmWeights& w, std::span<const double> x) {
    detail::check_input(w, x);
    const std::size_t H = w.hidden(), F = w.n_features(), T = x.size() / F;
    LstmCache cache;
    cache.steps = T;
    cache.hidden = H;
    cache.inputs = x;
    cache.i.resize(T * H);
    cache.f.resize(T * H);
    cache.o.resize(T * H);
    cache.g.resize(T * H);
    cache.tanh_c.resize(T * H);
    cache.c.assign((T + 1) * H, 0.0);
    cache.h.assign((T + 1) * H, 0.0);

    std::vector<double> z;
    for (std::size_t t = 0; t < T; ++t) {
        detail::gate_preactivations(w, x.subspan(t * F, F), cache.h_at(t), z);
        for (std::size_t j = 0; j < H; ++j) {
            const double ig = detail::logistic(z[j]);
            const double fg = detail::logistic(z[H + j]);
            const double og = detail::logistic(z[2 * H + j]);
            const double gg = std::tanh(z[3 * H + j]);
            const double c = fg * cache.c[t * H + j] + ig * gg;
            const double tc = std::tanh(c);
            cache.i[t * H + j] = ig;
            cache.f[t * H + j] = fg;
            cache.o[t * H + j] = og;
            cache.g[t * H + j] = gg;
            cache.c[(t + 1) * H + j] = c;
            cache.tanh_c[t * H + j] = tc;
            cache.h[(t + 1) * H + j] = og * tc;
        }
    }
    const auto h_last = cache.h_at(T);
    const auto w_out = w.w_out();
    double pre = w.b_out();
    for (std::size_t j = 0; j < H; ++j) pre += w_out[j] * h_last[j];
    if (!std::isfinite(pre)) throw NonFiniteActivation("non-finite output pre-activation");
    cache.head_preactivation = pre;
    cache.prediction = pre > 0.0 ? pre : 0.0;
    return cache;
}

/// Inference-only forward pass; keeps just the running state.
inline double lstm_predict(const LstmWeights& w, std::span<const double> x) {
    detail::check_input(w, x);
    const std::size_t H = w.hidden(), F = w.n_features(), T = x.size() / F;
    std::vector<double> h(H, 0.0), c(H, 0.0), z;
    for (std::size_t t = 0; t < T; ++t) {
        detail::gate_preactivations(w, x.subspan(t * F, F), h, z);
        for (std::size_t j = 0; j < H; ++j) {
            c[j] = detail::logistic(z[H + j]) * c[j] + detail::logistic(z[j]) * std::tanh(z[3 * H + j]);
            h[j] = detail::logistic(z[2 * H + j]) * std::tanh(c[j]);
        }
    }
    double pre = w.b_out();
    const auto w_out = w.w_out();
    for (std::size_t j = 0; j < H; ++j) pre += w_out[j] * h[j];
    if (!std::isfinite(pre)) throw NonFiniteActivation("non-finite output pre-activation");
    return pre > 0.0 ? pre : 0.0;
}

// ---- loss and gradients -----------------------------------------------------

inline double mse_loss(std::span<const double> predictions, std::span<const double> targets) {
    if (predictions.size() != targets.size()) throw LengthMismatch(predictions.size(), targets.size());
    if (predictions.empty()) throw InputError("MSE of an empty series");
    double s = 0.0;
    for (std::size_t k = 0; k < predictions.size(); ++k) {
        const double r = predictions[k] - targets[k];
        s += r * r;
    }
    return s / static_cast<double>(predictions.size());
}

/// BPTT through one cached forward pass. Adds d(loss)/d(params) into `grads`
/// given d(loss)/d(prediction). The ReLU subgradient is 0 at and below zero.
inline void accumulate_gradients(const LstmWeights& w, const LstmCache& cache, double dloss_dpred,
                                 LstmGradients& grads) {
    const std::size_t H = cache.hidden, T = cache.steps, F = w.n_features();
    if (cache.head_preactivation <= 0.0 || dloss_dpred == 0.0) return;
    const double dpre = dloss_dpred;

    auto gw_out = grads.w_out();
    const auto h_last = cache.h_at(T);
    for (std::size_t j = 0; j < H; ++j) gw_out[j] += dpre * h_last[j];
    grads.b_out() += dpre;

    std::vector<double> dh(H), dc(H, 0.0), dz(4 * H), dh_prev(H);
    const auto w_out = w.w_out();
    for (std::size_t j = 0; j < H; ++j) dh[j] = dpre * w_out[j];

    for (std::size_t step = T; step-- > 0;) {
        const std::size_t off = step * H;
        for (std::size_t j = 0; j < H; ++j) {
            const double ig = cache.i[off + j], fg = cache.f[off + j], og = cache.o[off + j], gg = cache.g[off + j];
            const double tc = cache.tanh_c[off + j];
            const double c_prev = cache.c[off + j];
            const double d_o = dh[j] * tc;
            dc[j] += dh[j] * og * (1.0 - tc * tc);
            const double d_i = dc[j] * gg;
            const double d_g = dc[j] * ig;
            const double d_f = dc[j] * c_prev;
            dz[j] = d_i * ig * (1.0 - ig);
            dz[H + j] = d_f * fg * (1.0 - fg);
            dz[2 * H + j] = d_o * og * (1.0 - og);
            dz[3 * H + j] = d_g * (1.0 - gg * gg);
            dc[j] *= fg;
        }

        const auto x = cache.inputs.subspan(step * F, F);
        const auto h_prev = cache.h_at(step);
        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        for (std::size_t gi = 0; gi < 4; ++gi) {
            const Gate gate = static_cast<Gate>(gi);
            const double* dzg = dz.data() + gi * H;
            auto gb = grads.b(gate);
            for (std::size_t j = 0; j < H; ++j) gb[j] += dzg[j];

            double* gW = grads.W(gate).data();
            for (std::size_t k = 0; k < F; ++k) {
                const double xk = x[k];
                if (xk == 0.0) continue;
                double* row = gW + k * H;
                for (std::size_t j = 0; j < H; ++j) row[j] += xk * dzg[j];
            }
            double* gU = grads.U(gate).data();
            const double* U = w.U(gate).data();
            for (std::size_t m = 0; m < H; ++m) {
                const double hm = h_prev[m];
                double* grow = gU + m * H;
                const double* urow = U + m * H;
                double acc = 0.0;
                for (std::size_t j = 0; j < H; ++j) {
                    grow[j] += hm * dzg[j];
                    acc += urow[j] * dzg[j];
                }
                dh_prev[m] += acc;
            }
        }
        dh.swap(dh_prev);
    }
}

/// Gradient of the single-sample squared error (prediction - target)^2.
inline LstmGradients backward(const LstmWeights& w, const LstmCache& cache, double target) {
    LstmGradients g(w.n_features(), w.hidden());
    accumulate_gradients(w, cache, 2.0 * (cache.prediction - target), g);
    return g;
}

/// Scales `grads` so its global L2 norm is at most `max_norm`. Returns the norm before scaling.
inline double clip_global_norm(LstmGradients& grads, double max_norm) {
    double sq = 0.0;
    for (double v : grads.params()) sq += v * v;
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double s = max_norm / norm;
        for (double& v : grads.params()) v *= s;
    }
    return norm;
}

// ---- Adam -------------------------------------------------------------------

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Bias-corrected Adam update in place; increments `state.t`.
inline void adam_step(LstmWeights& w, const LstmGradients& grads, AdamState& state, double lr) {
    if (grads.size() != w.size() || state.m.size() != w.size() || state.v.size() != w.size())
        throw LengthMismatch(w.size(), grads.size());
    ++state.t;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
    auto p = w.params();
    auto g = grads.params();
    for (std::size_t k = 0; k < p.size(); ++k) {
        state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g[k];
        state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g[k] * g[k];
        const double m_hat = state.m[k] / c1;
        const double v_hat = state.v[k] / c2;
        p[k] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
}

// ---- training ---------------------------------------------------------------

struct TrainResult {
    LstmWeights weights;
    std::vector<double> loss_history;  // mean per-sample squared error seen in each epoch
};

/// Mini-batch BPTT with Adam on MSE. Each epoch visits the samples in a
/// seed-determined permutation; the final batch may be short.
inline TrainResult train(const WindowedDataset& data, const LstmConfig& config) {
    config.validate();
    if (data.empty()) throw InputError("training needs at least one sample");
    TrainResult result{init_weights(config, data.n_features), {}};
    auto& w = result.weights;
    AdamState adam(w.size());
    LstmGradients grads(w.n_features(), w.hidden());
    std::mt19937_64 shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    result.loss_history.reserve(config.epochs);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t k = order.size(); k > 1; --k)
            std::swap(order[k - 1], order[detail::bounded(shuffle_rng, k)]);

        double sq_sum = 0.0;
        try {
            for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
                const std::size_t end = std::min(order.size(), start + config.batch_size);
                const double scale = 2.0 / static_cast<double>(end - start);
                std::fill(grads.params().begin(), grads.params().end(), 0.0);
                for (std::size_t k = start; k < end; ++k) {
                    const std::size_t s = order[k];
                    auto cache = lstm_forward(w, data.sample(s));
                    const double r = cache.prediction - data.targets[s];
                    sq_sum += r * r;
                    accumulate_gradients(w, cache, scale * r, grads);
                }
                clip_global_norm(grads, config.grad_clip_norm);
                adam_step(w, grads, adam, config.learning_rate);
            }
        } catch (const NonFiniteActivation&) {
            throw TrainingDiverged(epoch);
        }
        const double loss = sq_sum / static_cast<double>(data.size());
        if (!std::isfinite(loss)) throw TrainingDiverged(epoch);
        result.loss_history.push_back(loss);
    }
    return result;
}

inline std::vector<double> predict(const LstmWeights& w, const WindowedDataset& data) {
    std::vector<double> out;
    out.reserve(data.size());
    for (std::size_t s = 0; s < data.size(); ++s) out.push_back(lstm_predict(w, data.sample(s)));
    return out;
}

// ---- checkpoints ------------------------------------------------------------

inline constexpr const char* kCheckpointFormat = "mmstock-lstm-checkpoint";
inline constexpr int kCheckpointVersion = 1;

/// JSON container: config echo, seed, shapes, the parameter layout names and
/// the flat parameter array in that layout. Doubles are written in shortest
/// round-trip form.
inline nlohmann::json checkpoint_to_json(const LstmWeights& w, const LstmConfig& config) {
    using nlohmann::json;
    json params = json::array();
    for (double v : w.params()) params.push_back(v);
    return json{
        {"format", kCheckpointFormat},
        {"version", kCheckpointVersion},
        {"config",
         {{"hidden_units", config.hidden_units},
          {"learning_rate", config.learning_rate},
          {"batch_size", config.batch_size},
          {"epochs", config.epochs},
          {"lookback", config.lookback},
          {"seed", config.seed},
          {"grad_clip_norm", config.grad_clip_norm}}},
        {"seed", config.seed},
        {"n_features", w.n_features()},
        {"hidden_units", w.hidden()},
        {"layout", {"W_i", "W_f", "W_o", "W_g", "U_i", "U_f", "U_o", "U_g", "b_i", "b_f", "b_o", "b_g", "w_out", "b_out"}},
        {"params", params},
    };
}

struct Checkpoint {
    LstmWeights weights;
    LstmConfig config;
};

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format").get<std::string>() != kCheckpointFormat) throw InputError("not an LSTM checkpoint");
        if (j.at("version").get<int>() != kCheckpointVersion) throw InputError("unsupported checkpoint version");
        const auto& c = j.at("config");
        Checkpoint cp;
        cp.config.hidden_units = c.at("hidden_units").get<std::size_t>();
        cp.config.learning_rate = c.at("learning_rate").get<double>();
        cp.config.batch_size = c.at("batch_size").get<std::size_t>();
        cp.config.epochs = c.at("epochs").get<std::size_t>();
        cp.config.lookback = c.at("lookback").get<std::size_t>();
        cp.config.seed = c.at("seed").get<std::uint64_t>();
        cp.config.grad_clip_norm = c.at("grad_clip_norm").get<double>();
        cp.weights = LstmWeights(j.at("n_features").get<std::size_t>(), j.at("hidden_units").get<std::size_t>());
        const auto& params = j.at("params");
        if (params.size() != cp.weights.size()) throw InputError("checkpoint parameter count does not match its shapes");
        auto p = cp.weights.params();
        for (std::size_t k = 0; k < p.size(); ++k) p[k] = params[k].get<double>();
        return cp;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed checkpoint: ") + e.what());
    }
}

inline void save_checkpoint(const std::string& path, const LstmWeights& w, const LstmConfig& config) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << checkpoint_to_json(w, config).dump() << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
    auto in = detail::open_input(path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("malformed checkpoint '" + path + "': " + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace mmstock
