#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tempnet/dataset.hpp"
#include "tempnet/random.hpp"

namespace tempnet {

// Fully connected net, tanh on every layer including the output. The output
// layer being bounded is why labels are affinely squeezed into (-1, 1).
struct MlpArchitecture {
    std::size_t input_dim = 32;
    std::vector<std::size_t> hidden = {20};
    std::size_t output_dim = 1;

    std::vector<std::size_t> dims() const {
        std::vector<std::size_t> d;
        d.push_back(input_dim);
        d.insert(d.end(), hidden.begin(), hidden.end());
        d.push_back(output_dim);
        return d;
    }

    std::size_t layer_count() const { return hidden.size() + 1; }

    std::size_t param_count() const {
        const auto d = dims();
        std::size_t n = 0;
        for (std::size_t l = 0; l + 1 < d.size(); ++l) n += d[l] * d[l + 1] + d[l + 1];
        return n;
    }
};

inline void check_architecture(const MlpArchitecture& arch) {
    if (arch.input_dim < 1) {
        throw std::invalid_argument("architecture: layer widths must be >= 1");
    }
    for (std::size_t w : arch.hidden) {
        if (w < 1) throw std::invalid_argument("architecture: layer widths must be >= 1");
    }
    // scalar regression head; losses and labels are scalar throughout
    if (arch.output_dim != 1) {
        throw std::invalid_argument("architecture: output_dim must be 1");
    }
}

// All weights and biases in one flat buffer, packed per layer as
// [W row-major (out x in) | b]. Keeps Adam, finite differences and
// persistence trivial.
struct MlpParams {
    std::vector<double> values;
};

struct Scaler {
    std::vector<double> means;  // per feature, degC
    std::vector<double> stds;
    double label_offset_c = 37.5;
    double label_scale_c = 10.0;

    std::vector<double> normalize(const std::vector<double>& readings) const {
        std::vector<double> out(readings.size());
        for (std::size_t i = 0; i < readings.size(); ++i) {
            out[i] = (readings[i] - means[i]) / stds[i];
        }
        return out;
    }

    std::vector<double> denormalize(const std::vector<double>& features) const {
        std::vector<double> out(features.size());
        for (std::size_t i = 0; i < features.size(); ++i) {
            out[i] = features[i] * stds[i] + means[i];
        }
        return out;
    }

    double normalize_label(double label_c) const { return (label_c - label_offset_c) / label_scale_c; }
    double denormalize_label(double y) const { return y * label_scale_c + label_offset_c; }
};

inline Scaler fit_scaler(const Dataset& train) {
    if (train.samples.empty()) throw std::invalid_argument("scaler: training set is empty");
    const std::size_t width = train.width();
    const double n = static_cast<double>(train.samples.size());
    Scaler s;
    s.means.assign(width, 0.0);
    s.stds.assign(width, 0.0);
    for (const Sample& smp : train.samples) {
        for (std::size_t i = 0; i < width; ++i) s.means[i] += smp.readings[i];
    }
    for (double& m : s.means) m /= n;
    for (const Sample& smp : train.samples) {
        for (std::size_t i = 0; i < width; ++i) {
            const double d = smp.readings[i] - s.means[i];
            s.stds[i] += d * d;
        }
    }
    for (std::size_t i = 0; i < width; ++i) {
        s.stds[i] = std::sqrt(s.stds[i] / n);
        if (!(s.stds[i] > 0.0)) {
            throw std::runtime_error("scaler: feature " + std::to_string(i) +
                                     " has zero variance on the training set");
        }
    }
    return s;
}

// Glorot-style uniform init, zero biases.
inline MlpParams init_params(const MlpArchitecture& arch, std::uint64_t seed) {
    check_architecture(arch);
    const auto d = arch.dims();
    MlpParams p;
    p.values.reserve(arch.param_count());
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < d.size(); ++l) {
        const double bound = std::sqrt(6.0 / static_cast<double>(d[l] + d[l + 1]));
        for (std::size_t i = 0; i < d[l] * d[l + 1]; ++i) {
            p.values.push_back(rng.uniform(-bound, bound));
        }
        for (std::size_t i = 0; i < d[l + 1]; ++i) p.values.push_back(0.0);
    }
    return p;
}

// Post-activations per layer, [0] = input. tanh' = 1 - a^2, so these are all
// backward needs.
struct ForwardCache {
    std::vector<std::vector<double>> activations;
};

inline double forward(const MlpParams& params, const MlpArchitecture& arch,
                      std::span<const double> x, ForwardCache* cache = nullptr) {
    const auto d = arch.dims();
    if (x.size() != d.front()) {
        throw std::invalid_argument("forward: input has " + std::to_string(x.size()) +
                                    " components, architecture expects " +
                                    std::to_string(d.front()));
    }
    std::vector<double> a(x.begin(), x.end());
    if (cache) {
        cache->activations.clear();
        cache->activations.push_back(a);
    }
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < d.size(); ++l) {
        const std::size_t fan_in = d[l];
        const std::size_t fan_out = d[l + 1];
        const double* w = params.values.data() + offset;
        const double* b = w + fan_in * fan_out;
        std::vector<double> next(fan_out);
        for (std::size_t j = 0; j < fan_out; ++j) {
            double z = b[j];
            const double* row = w + j * fan_in;
            for (std::size_t i = 0; i < fan_in; ++i) z += row[i] * a[i];
            next[j] = std::tanh(z);
        }
        a = std::move(next);
        if (cache) cache->activations.push_back(a);
        offset += fan_in * fan_out + fan_out;
    }
    return a.front();
}

enum class LossKind { mse, mae, rmse, msle };

inline std::string loss_name(LossKind k) {
    switch (k) {
        case LossKind::mse: return "mse";
        case LossKind::mae: return "mae";
        case LossKind::rmse: return "rmse";
        case LossKind::msle: return "msle";
    }
    return "?";
}

inline LossKind loss_from_name(const std::string& name) {
    if (name == "mse") return LossKind::mse;
    if (name == "mae") return LossKind::mae;
    if (name == "rmse") return LossKind::rmse;
    if (name == "msle") return LossKind::msle;
    throw std::invalid_argument("unknown loss '" + name + "' (expected mse|mae|rmse|msle)");
}

inline double loss(LossKind kind, std::span<const double> predictions,
                   std::span<const double> labels) {
    if (predictions.size() != labels.size() || predictions.empty()) {
        throw std::invalid_argument("loss: predictions and labels must have equal nonzero length");
    }
    const double n = static_cast<double>(predictions.size());
    double acc = 0.0;
    switch (kind) {
        case LossKind::mse:
        case LossKind::rmse:
            for (std::size_t i = 0; i < predictions.size(); ++i) {
                const double d = predictions[i] - labels[i];
                acc += d * d;
            }
            return kind == LossKind::mse ? acc / n : std::sqrt(acc / n);
        case LossKind::mae:
            for (std::size_t i = 0; i < predictions.size(); ++i) {
                acc += std::abs(predictions[i] - labels[i]);
            }
            return acc / n;
        case LossKind::msle:
            for (std::size_t i = 0; i < predictions.size(); ++i) {
                // strictly below -1 is outside the ln(1+y) domain; exactly -1
                // (a saturated tanh output) yields an infinite loss instead,
                // which the training loop reports as divergence
                if (predictions[i] < -1.0 || labels[i] < -1.0) {
                    throw std::domain_error("msle: values must stay above -1");
                }
                const double d = std::log1p(predictions[i]) - std::log1p(labels[i]);
                acc += d * d;
            }
            return acc / n;
    }
    throw std::invalid_argument("loss: unknown kind");
}

namespace detail {

// d(per-sample loss)/d(prediction). For a single sample rmse reduces to the
// absolute error, so it shares mae's sign derivative (subgradient 0 at zero
// residual by convention).
inline double loss_derivative(LossKind kind, double prediction, double label) {
    const double r = prediction - label;
    switch (kind) {
        case LossKind::mse:
            return 2.0 * r;
        case LossKind::mae:
        case LossKind::rmse:
            return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
        case LossKind::msle:
            if (prediction < -1.0 || label < -1.0) {
                throw std::domain_error("msle: values must stay above -1");
            }
            return 2.0 * (std::log1p(prediction) - std::log1p(label)) / (1.0 + prediction);
    }
    throw std::invalid_argument("loss: unknown kind");
}

}  // namespace detail

// Analytic chain rule for the per-sample loss; the batch gradient is the
// mean of per-sample gradients.
inline MlpParams backward(const MlpParams& params, const MlpArchitecture& arch,
                          const ForwardCache& cache, double label, LossKind kind) {
    const auto d = arch.dims();
    if (cache.activations.size() != d.size()) {
        throw std::invalid_argument("backward: cache does not match architecture");
    }
    MlpParams grads;
    grads.values.assign(params.values.size(), 0.0);

    const double y_hat = cache.activations.back().front();
    std::vector<double> delta{detail::loss_derivative(kind, y_hat, label) *
                              (1.0 - y_hat * y_hat)};

    // layer offsets for the packed buffer
    std::vector<std::size_t> offsets(arch.layer_count());
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < d.size(); ++l) {
        offsets[l] = off;
        off += d[l] * d[l + 1] + d[l + 1];
    }

    for (std::size_t l = arch.layer_count(); l-- > 0;) {
        const std::size_t fan_in = d[l];
        const std::size_t fan_out = d[l + 1];
        const std::vector<double>& a_in = cache.activations[l];
        const double* w = params.values.data() + offsets[l];
        double* gw = grads.values.data() + offsets[l];
        double* gb = gw + fan_in * fan_out;
        for (std::size_t j = 0; j < fan_out; ++j) {
            for (std::size_t i = 0; i < fan_in; ++i) gw[j * fan_in + i] = delta[j] * a_in[i];
            gb[j] = delta[j];
        }
        if (l == 0) break;
        std::vector<double> delta_prev(fan_in, 0.0);
        for (std::size_t i = 0; i < fan_in; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < fan_out; ++j) acc += w[j * fan_in + i] * delta[j];
            delta_prev[i] = acc * (1.0 - a_in[i] * a_in[i]);
        }
        delta = std::move(delta_prev);
    }
    return grads;
}

// Central differences over every packed parameter; the independent check for
// backward.
inline MlpParams finite_diff_gradient(const MlpParams& params, const MlpArchitecture& arch,
                                      std::span<const double> x, double label, LossKind kind,
                                      double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_diff_gradient: h must be positive");
    MlpParams grads;
    grads.values.assign(params.values.size(), 0.0);
    MlpParams probe = params;
    for (std::size_t i = 0; i < params.values.size(); ++i) {
        const double original = params.values[i];
        probe.values[i] = original + h;
        const double up = forward(probe, arch, x);
        probe.values[i] = original - h;
        const double down = forward(probe, arch, x);
        probe.values[i] = original;
        const double loss_up = loss(kind, std::span(&up, 1), std::span(&label, 1));
        const double loss_down = loss(kind, std::span(&down, 1), std::span(&label, 1));
        grads.values[i] = (loss_up - loss_down) / (2.0 * h);
    }
    return grads;
}

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;
};

inline AdamState make_adam_state(std::size_t param_count) {
    return {std::vector<double>(param_count, 0.0), std::vector<double>(param_count, 0.0), 0};
}

inline void adam_step(std::vector<double>& params, const std::vector<double>& grads,
                      AdamState& state, double lr, double beta1, double beta2, double epsilon) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw std::invalid_argument("adam_step: shape mismatch");
    }
    state.t += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grads[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / bc1;
        const double v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + epsilon);
    }
}

struct TrainConfig {
    LossKind loss_kind = LossKind::mse;
    double learning_rate = 0.01;
    std::size_t epochs = 300;
    std::size_t batch_size = 32;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t init_seed = 1;
    std::uint64_t shuffle_seed = 2;
};

inline std::vector<std::string> train_config_violations(const TrainConfig& c) {
    std::vector<std::string> v;
    if (!(c.learning_rate > 0.0)) v.push_back("train: learning_rate must be positive");
    if (!(c.epochs >= 1)) v.push_back("train: epochs must be >= 1");
    if (!(c.batch_size >= 1)) v.push_back("train: batch_size must be >= 1");
    if (!(c.beta1 >= 0.0 && c.beta1 < 1.0)) v.push_back("train: beta1 must lie in [0, 1)");
    if (!(c.beta2 >= 0.0 && c.beta2 < 1.0)) v.push_back("train: beta2 must lie in [0, 1)");
    if (!(c.epsilon > 0.0)) v.push_back("train: epsilon must be positive");
    return v;
}

struct TrainHistory {
    std::vector<double> train_loss;  // normalized space, one entry per epoch
    std::vector<double> test_loss;
};

struct DivergenceError : std::runtime_error {
    DivergenceError(std::size_t epoch_no, const std::string& what)
        : std::runtime_error(what), epoch(epoch_no) {}
    std::size_t epoch;
};

struct TrainedModel {
    MlpParams params;
    Scaler scaler;
    TrainHistory history;
};

namespace detail {

inline std::vector<double> predict_normalized(const MlpParams& params,
                                              const MlpArchitecture& arch,
                                              const std::vector<std::vector<double>>& inputs) {
    std::vector<double> out;
    out.reserve(inputs.size());
    for (const auto& x : inputs) out.push_back(forward(params, arch, x));
    return out;
}

}  // namespace detail

// Mini-batch Adam over seeded reshuffles. Sequential and single-threaded by
// contract: (dataset, config, seeds) fully determine the result bit for bit.
inline TrainedModel train(const Dataset& train_ds, const Dataset& test_ds,
                          const MlpArchitecture& arch, const TrainConfig& config) {
    check_architecture(arch);
    {
        const auto violations = train_config_violations(config);
        if (!violations.empty()) throw std::invalid_argument(violations.front());
    }
    if (train_ds.samples.empty() || test_ds.samples.empty()) {
        throw std::invalid_argument("train: datasets must be non-empty");
    }
    if (train_ds.width() != arch.input_dim) {
        throw std::invalid_argument("train: dataset width " + std::to_string(train_ds.width()) +
                                    " does not match input_dim " +
                                    std::to_string(arch.input_dim));
    }
    if (config.batch_size > train_ds.samples.size()) {
        throw std::invalid_argument("train: batch_size exceeds training set size");
    }

    TrainedModel model;
    model.scaler = fit_scaler(train_ds);

    const std::size_t n = train_ds.samples.size();
    std::vector<std::vector<double>> x_train(n), x_test(test_ds.samples.size());
    std::vector<double> y_train(n), y_test(test_ds.samples.size());
    for (std::size_t i = 0; i < n; ++i) {
        x_train[i] = model.scaler.normalize(train_ds.samples[i].readings);
        y_train[i] = model.scaler.normalize_label(train_ds.samples[i].label_c);
    }
    for (std::size_t i = 0; i < test_ds.samples.size(); ++i) {
        x_test[i] = model.scaler.normalize(test_ds.samples[i].readings);
        y_test[i] = model.scaler.normalize_label(test_ds.samples[i].label_c);
    }

    model.params = init_params(arch, config.init_seed);
    AdamState adam = make_adam_state(model.params.values.size());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> batch_grad(model.params.values.size());
    ForwardCache cache;

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        // per-epoch stream so a longer run replays a shorter run's prefix
        Rng rng(derive_seed(config.shuffle_seed, epoch));
        shuffle(order, rng);
        for (std::size_t start = 0; start < n; start += config.batch_size) {
            const std::size_t stop = std::min(n, start + config.batch_size);
            std::fill(batch_grad.begin(), batch_grad.end(), 0.0);
            for (std::size_t i = start; i < stop; ++i) {
                const std::size_t idx = order[i];
                forward(model.params, arch, x_train[idx], &cache);
                const MlpParams g = backward(model.params, arch, cache, y_train[idx],
                                             config.loss_kind);
                for (std::size_t j = 0; j < batch_grad.size(); ++j) batch_grad[j] += g.values[j];
            }
            const double inv = 1.0 / static_cast<double>(stop - start);
            for (double& g : batch_grad) g *= inv;
            adam_step(model.params.values, batch_grad, adam, config.learning_rate, config.beta1,
                      config.beta2, config.epsilon);
        }
        const std::vector<double> p_train = detail::predict_normalized(model.params, arch, x_train);
        const std::vector<double> p_test = detail::predict_normalized(model.params, arch, x_test);
        const double lt = loss(config.loss_kind, p_train, y_train);
        const double lv = loss(config.loss_kind, p_test, y_test);
        if (!std::isfinite(lt) || !std::isfinite(lv)) {
            throw DivergenceError(epoch, "training diverged at epoch " + std::to_string(epoch));
        }
        model.history.train_loss.push_back(lt);
        model.history.test_loss.push_back(lv);
    }
    return model;
}

struct Metrics {
    double mae_c = 0.0;
    double rmse_c = 0.0;
    double max_abs_err_c = 0.0;
    double mse_normalized = 0.0;
    std::map<double, double> per_setpoint_mean_prediction_c;
};

inline std::vector<double> predict_celsius(const MlpParams& params, const Scaler& scaler,
                                           const MlpArchitecture& arch, const Dataset& ds) {
    std::vector<double> out;
    out.reserve(ds.samples.size());
    for (const Sample& s : ds.samples) {
        out.push_back(scaler.denormalize_label(forward(params, arch, scaler.normalize(s.readings))));
    }
    return out;
}

inline Metrics evaluate(const MlpParams& params, const Scaler& scaler,
                        const MlpArchitecture& arch, const Dataset& test) {
    if (test.samples.empty()) throw std::invalid_argument("evaluate: test set is empty");
    Metrics m;
    std::map<double, std::pair<double, std::size_t>> per_setpoint;
    double se_c = 0.0, se_norm = 0.0;
    for (const Sample& s : test.samples) {
        const double y_norm = forward(params, arch, scaler.normalize(s.readings));
        const double pred_c = scaler.denormalize_label(y_norm);
        const double err_c = pred_c - s.label_c;
        const double err_norm = y_norm - scaler.normalize_label(s.label_c);
        m.mae_c += std::abs(err_c);
        se_c += err_c * err_c;
        se_norm += err_norm * err_norm;
        m.max_abs_err_c = std::max(m.max_abs_err_c, std::abs(err_c));
        auto& [sum, count] = per_setpoint[s.label_c];
        sum += pred_c;
        ++count;
    }
    const double n = static_cast<double>(test.samples.size());
    m.mae_c /= n;
    m.rmse_c = std::sqrt(se_c / n);
    m.mse_normalized = se_norm / n;
    for (const auto& [label, sum_count] : per_setpoint) {
        m.per_setpoint_mean_prediction_c[label] =
            sum_count.first / static_cast<double>(sum_count.second);
    }
    return m;
}

}  // namespace tempnet
