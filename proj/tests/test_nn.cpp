#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "tempnet/config.hpp"
#include "tempnet/model_io.hpp"
#include "tempnet/nn.hpp"

using namespace tempnet;

namespace {

Dataset seed42_dataset() {
    const RunConfig cfg;
    return generate(build_array(cfg.array_seed, cfg.array_defaults), cfg.profile, cfg.protocol,
                    coefficients_from(cfg), cfg.dataset_seed);
}

Dataset tiny_dataset(int per_setpoint = 6) {
    const RunConfig cfg;
    Protocol protocol = cfg.protocol;
    protocol.end_c = 33.0;
    protocol.samples_per_setpoint = per_setpoint;
    return generate(build_array(cfg.array_seed, cfg.array_defaults), cfg.profile, protocol,
                    coefficients_from(cfg), 3);
}

}  // namespace

TEST_CASE("fit_scaler standardizes the training set") {
    const Dataset ds = tiny_dataset();
    const Scaler scaler = fit_scaler(ds);
    const std::size_t width = ds.width();
    std::vector<double> mean(width, 0.0), var(width, 0.0);
    for (const Sample& s : ds.samples) {
        const auto z = scaler.normalize(s.readings);
        for (std::size_t i = 0; i < width; ++i) mean[i] += z[i];
    }
    for (double& m : mean) m /= static_cast<double>(ds.samples.size());
    for (const Sample& s : ds.samples) {
        const auto z = scaler.normalize(s.readings);
        for (std::size_t i = 0; i < width; ++i) var[i] += (z[i] - mean[i]) * (z[i] - mean[i]);
    }
    for (std::size_t i = 0; i < width; ++i) {
        REQUIRE(std::abs(mean[i]) < 1e-9);
        REQUIRE(std::abs(std::sqrt(var[i] / static_cast<double>(ds.samples.size())) - 1.0) < 1e-9);
    }
}

TEST_CASE("scaler label map and inverses") {
    const Scaler scaler = fit_scaler(tiny_dataset());
    REQUIRE(scaler.normalize_label(37.5) == 0.0);
    REQUIRE(scaler.normalize_label(45.0) == 0.75);
    REQUIRE(scaler.normalize_label(30.0) == -0.75);
    REQUIRE(scaler.denormalize_label(scaler.normalize_label(33.7)) == 33.7);

    const std::vector<double> x = tiny_dataset().samples[0].readings;
    const auto back = scaler.denormalize(scaler.normalize(x));
    for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(std::abs(back[i] - x[i]) < 1e-12);
}

TEST_CASE("fit_scaler rejects zero-variance features") {
    Dataset ds = tiny_dataset();
    for (Sample& s : ds.samples) s.readings[7] = 1.0;
    REQUIRE_THROWS_AS(fit_scaler(ds), std::runtime_error);
    REQUIRE_THROWS_AS(fit_scaler(Dataset{}), std::invalid_argument);
}

TEST_CASE("init_params is deterministic with zero biases and bounded weights") {
    const MlpArchitecture arch{32, {20}, 1};
    const MlpParams a = init_params(arch, 1);
    const MlpParams b = init_params(arch, 1);
    REQUIRE(a.values == b.values);
    REQUIRE(init_params(arch, 2).values != a.values);
    REQUIRE(a.values.size() == arch.param_count());
    REQUIRE(arch.param_count() == 32 * 20 + 20 + 20 + 1);

    const double bound = std::sqrt(6.0 / 52.0);
    REQUIRE_THAT(bound, Catch::Matchers::WithinAbs(0.3397, 1e-4));
    for (std::size_t i = 0; i < 640; ++i) REQUIRE(std::abs(a.values[i]) < bound);
    for (std::size_t i = 640; i < 660; ++i) REQUIRE(a.values[i] == 0.0);  // hidden biases
    REQUIRE(a.values.back() == 0.0);                                      // output bias
}

TEST_CASE("forward hand cases") {
    {
        MlpArchitecture arch{32, {20}, 1};
        MlpParams zeros;
        zeros.values.assign(arch.param_count(), 0.0);
        std::vector<double> x(32, 0.7);
        REQUIRE(forward(zeros, arch, x) == 0.0);
        Scaler s = fit_scaler(tiny_dataset());
        REQUIRE(s.denormalize_label(forward(zeros, arch, x)) == 37.5);
    }
    {
        // 1 -> 1 -> 1 with unit weights and zero biases at x = 0
        MlpArchitecture arch{1, {1}, 1};
        MlpParams p;
        p.values = {1.0, 0.0, 1.0, 0.0};
        const double x = 0.0;
        REQUIRE(forward(p, arch, std::span(&x, 1)) == 0.0);
    }
    {
        // single layer, w = 1, b = 0, x = 1
        MlpArchitecture arch{1, {}, 1};
        MlpParams p;
        p.values = {1.0, 0.0};
        const double x = 1.0;
        REQUIRE_THAT(forward(p, arch, std::span(&x, 1)),
                     Catch::Matchers::WithinAbs(0.761594, 1e-6));
        REQUIRE(forward(p, arch, std::span(&x, 1)) == std::tanh(1.0));
    }
}

TEST_CASE("loss hand cases") {
    const std::vector<double> preds{1.0, 2.0};
    const std::vector<double> labels{1.0, 4.0};
    REQUIRE(loss(LossKind::mse, preds, labels) == 2.0);
    REQUIRE(loss(LossKind::mae, preds, labels) == 1.0);
    REQUIRE(loss(LossKind::rmse, preds, labels) == std::sqrt(2.0));

    for (LossKind kind : {LossKind::mse, LossKind::mae, LossKind::rmse, LossKind::msle}) {
        REQUIRE(loss(kind, preds, preds) == 0.0);
    }

    const std::vector<double> p0{0.0};
    const std::vector<double> le{std::exp(1.0) - 1.0};
    REQUIRE_THAT(loss(LossKind::msle, p0, le), Catch::Matchers::WithinAbs(1.0, 1e-12));

    const std::vector<double> bad{-2.0};
    REQUIRE_THROWS_AS(loss(LossKind::msle, p0, bad), std::domain_error);
    REQUIRE_THROWS_AS(loss(LossKind::mse, p0, preds), std::invalid_argument);
}

TEST_CASE("loss consistency properties") {
    Rng rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> p(10), l(10);
        for (int i = 0; i < 10; ++i) {
            p[static_cast<std::size_t>(i)] = rng.uniform(-0.9, 0.9);
            l[static_cast<std::size_t>(i)] = rng.uniform(-0.9, 0.9);
        }
        const double mse = loss(LossKind::mse, p, l);
        const double rmse = loss(LossKind::rmse, p, l);
        REQUIRE(std::abs(rmse * rmse - mse) <= 1e-12 * std::max(1.0, mse));
        for (LossKind kind : {LossKind::mse, LossKind::mae, LossKind::rmse}) {
            REQUIRE(loss(kind, p, l) >= 0.0);
            REQUIRE((loss(kind, p, l) == 0.0) == (p == l));
        }
    }
}

TEST_CASE("backward hand case: single tanh unit at the origin") {
    MlpArchitecture arch{1, {}, 1};
    MlpParams p;
    p.values = {0.0, 0.0};
    const double x = 1.0;
    const double label = 0.3;
    ForwardCache cache;
    forward(p, arch, std::span(&x, 1), &cache);
    const MlpParams g = backward(p, arch, cache, label, LossKind::mse);
    // d loss / d b = 2 (tanh(0) - y) (1 - tanh(0)^2) = -2y, d/dw scales by x
    REQUIRE(g.values[1] == -2.0 * label);
    REQUIRE(g.values[0] == -2.0 * label * x);
}

TEST_CASE("backward returns zeros at zero residual under mse") {
    MlpArchitecture arch{3, {4}, 1};
    MlpParams p = init_params(arch, 8);
    const std::vector<double> x{0.2, -0.4, 0.6};
    ForwardCache cache;
    const double y = forward(p, arch, x, &cache);
    const MlpParams g = backward(p, arch, cache, y, LossKind::mse);
    for (double v : g.values) REQUIRE(v == 0.0);
}

TEST_CASE("adam first step matches the hand computation") {
    std::vector<double> theta{0.0};
    const std::vector<double> grad{2.0};
    AdamState state = make_adam_state(1);
    adam_step(theta, grad, state, 0.01, 0.9, 0.999, 1e-8);
    REQUIRE(state.t == 1);
    REQUIRE_THAT(state.m[0], Catch::Matchers::WithinAbs(0.2, 1e-15));
    REQUIRE_THAT(state.v[0], Catch::Matchers::WithinAbs(0.004, 1e-15));
    REQUIRE_THAT(theta[0], Catch::Matchers::WithinAbs(-0.00999999995, 1e-12));
}

TEST_CASE("adam leaves parameters alone on zero gradient") {
    std::vector<double> theta{1.5, -2.5};
    AdamState state = make_adam_state(2);
    adam_step(theta, {0.0, 0.0}, state, 0.01, 0.9, 0.999, 1e-8);
    REQUIRE(theta == std::vector<double>{1.5, -2.5});
}

TEST_CASE("adam first-step magnitude is about the learning rate") {
    for (double g : {1e-4, 0.3, 2.0, 50.0, -7.0}) {
        std::vector<double> theta{0.0};
        AdamState state = make_adam_state(1);
        adam_step(theta, {g}, state, 0.01, 0.9, 0.999, 1e-8);
        // exactly lr * |g| / (|g| + eps): the epsilon dent grows as g shrinks
        const double expected = 0.01 * std::abs(g) / (std::abs(g) + 1e-8);
        REQUIRE_THAT(std::abs(theta[0]), Catch::Matchers::WithinAbs(expected, 1e-15));
        REQUIRE_THAT(std::abs(theta[0]), Catch::Matchers::WithinRel(0.01, 1e-3));
        REQUIRE((theta[0] < 0.0) == (g > 0.0));
    }
}

TEST_CASE("train is deterministic and validates its inputs") {
    const Dataset ds = tiny_dataset();
    const auto [tr, te] = split(ds, 0.8, 7);
    const MlpArchitecture arch{32, {20}, 1};
    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 8;  // tiny training set
    const TrainedModel a = train(tr, te, arch, cfg);
    const TrainedModel b = train(tr, te, arch, cfg);
    REQUIRE(a.params.values == b.params.values);
    REQUIRE(a.history.train_loss == b.history.train_loss);
    REQUIRE(a.history.test_loss == b.history.test_loss);
    REQUIRE(a.history.train_loss.size() == 30);

    TrainConfig one = cfg;
    one.epochs = 1;
    REQUIRE(train(tr, te, arch, one).history.train_loss.size() == 1);

    TrainConfig zero = cfg;
    zero.epochs = 0;
    REQUIRE_THROWS_AS(train(tr, te, arch, zero), std::invalid_argument);

    TrainConfig fat = cfg;
    fat.batch_size = tr.samples.size() + 1;
    REQUIRE_THROWS_AS(train(tr, te, arch, fat), std::invalid_argument);

    REQUIRE_THROWS_AS(train(Dataset{}, te, arch, cfg), std::invalid_argument);
    const MlpArchitecture wrong{16, {20}, 1};
    REQUIRE_THROWS_AS(train(tr, te, wrong, cfg), std::invalid_argument);
    REQUIRE_THROWS_AS(init_params(MlpArchitecture{32, {20}, 2}, 1), std::invalid_argument);
    REQUIRE_THROWS_AS(init_params(MlpArchitecture{32, {0}, 1}, 1), std::invalid_argument);
}

TEST_CASE("training diverges loudly when the loss leaves the reals") {
    // msle saturates tanh toward -1 under an absurd learning rate when every
    // label sits at the bottom of the range
    Dataset ds;
    Rng r(5);
    for (int i = 0; i < 40; ++i) {
        Sample s;
        for (int j = 0; j < 8; ++j) s.readings.push_back(30.0 + r.uniform(-1.0, 1.0));
        s.label_c = 30.0;
        s.sample_index = i;
        ds.samples.push_back(s);
    }
    const auto [tr, te] = split(ds, 0.8, 3);
    TrainConfig cfg;
    cfg.loss_kind = LossKind::msle;
    cfg.learning_rate = 50.0;
    cfg.epochs = 20;
    cfg.batch_size = 8;
    try {
        train(tr, te, MlpArchitecture{8, {4}, 1}, cfg);
        FAIL("expected DivergenceError");
    } catch (const DivergenceError& e) {
        REQUIRE(e.epoch >= 1);
        REQUIRE(std::string(e.what()).find("epoch") != std::string::npos);
    }
}

TEST_CASE("baseline training on the seed-42 dataset converges") {
    const Dataset ds = seed42_dataset();
    const auto [tr, te] = split(ds, 0.8, 7);
    const MlpArchitecture arch{32, {20}, 1};
    const TrainedModel model = train(tr, te, arch, TrainConfig{});
    REQUIRE(model.history.test_loss.back() < 1e-3);
    // at least 10x progress from the first epoch
    REQUIRE(model.history.train_loss.back() * 10.0 < model.history.train_loss.front());

    const Metrics m = evaluate(model.params, model.scaler, arch, te);
    REQUIRE(m.mae_c <= 0.3);
    REQUIRE(m.per_setpoint_mean_prediction_c.size() == 16);

    // predictions denormalize inside the tanh image of the label map
    for (double p : predict_celsius(model.params, model.scaler, arch, te)) {
        REQUIRE(p > 27.5);
        REQUIRE(p < 47.5);
    }
}

TEST_CASE("evaluate on stub predictors") {
    // zero parameters predict 37.5 degC everywhere
    const MlpArchitecture arch{32, {20}, 1};
    MlpParams zeros;
    zeros.values.assign(arch.param_count(), 0.0);

    Dataset at_375;
    for (int i = 0; i < 10; ++i) {
        Sample s;
        s.readings.assign(32, 35.0 + i * 0.3);
        s.label_c = 37.5;
        s.sample_index = i;
        at_375.samples.push_back(s);
    }
    const Scaler scaler = fit_scaler(tiny_dataset());
    const Metrics perfect = evaluate(zeros, scaler, arch, at_375);
    REQUIRE(perfect.mae_c == 0.0);
    REQUIRE(perfect.rmse_c == 0.0);
    REQUIRE(perfect.max_abs_err_c == 0.0);
    REQUIRE(perfect.mse_normalized == 0.0);

    // constant 37.5 against the full staircase: max error 7.5 at both ends
    Dataset staircase;
    for (int sp = 0; sp < 16; ++sp) {
        for (int i = 0; i < 50; ++i) {
            Sample s;
            s.readings.assign(32, 30.0 + sp + 0.01 * i);
            s.label_c = 30.0 + sp;
            s.setpoint_index = sp;
            s.sample_index = i;
            staircase.samples.push_back(s);
        }
    }
    const Metrics constant = evaluate(zeros, scaler, arch, staircase);
    REQUIRE_THAT(constant.max_abs_err_c, Catch::Matchers::WithinAbs(7.5, 1e-12));
    REQUIRE_THAT(constant.mae_c, Catch::Matchers::WithinAbs(4.0, 1e-12));

    REQUIRE_THROWS_AS(evaluate(zeros, scaler, arch, Dataset{}), std::invalid_argument);
}

TEST_CASE("model document save/load reproduces evaluation exactly") {
    const Dataset ds = tiny_dataset();
    const auto [tr, te] = split(ds, 0.8, 7);
    const MlpArchitecture arch{32, {20}, 1};
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.batch_size = 8;
    const TrainedModel model = train(tr, te, arch, cfg);
    const Metrics before = evaluate(model.params, model.scaler, arch, te);

    const auto path = std::filesystem::temp_directory_path() / "tempnet_model_test.json";
    save_model_file({arch, model.params, model.scaler}, path.string());
    const ModelDocument doc = load_model_file(path.string());
    std::filesystem::remove(path);

    REQUIRE(doc.arch.hidden == arch.hidden);
    const Metrics after = evaluate(doc.params, doc.scaler, doc.arch, te);
    REQUIRE(std::abs(after.mae_c - before.mae_c) < 1e-9);
    REQUIRE(std::abs(after.rmse_c - before.rmse_c) < 1e-9);
    REQUIRE(std::abs(after.mse_normalized - before.mse_normalized) < 1e-9);
}
