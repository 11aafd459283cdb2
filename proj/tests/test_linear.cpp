#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "robustgen/data.hpp"
#include "robustgen/errors.hpp"
#include "robustgen/linear.hpp"
#include "robustgen/model_io.hpp"

using namespace robustgen;

TEST_CASE("binary adversarial value on the pinned case") {
    const std::vector<double> w{1.0, -1.0};
    const std::vector<double> x{0.5, 0.2};
    CHECK(binary_adv_value(w, x, 1, 0.1) == doctest::Approx(0.1));
    CHECK(binary_adv_value(w, x, 1, 0.0) == doctest::Approx(dot(w, x)));
    const std::vector<double> zero{0.0, 0.0};
    CHECK(binary_adv_value(zero, x, -1, 0.7) == doctest::Approx(0.0));
}

TEST_CASE("binary adversarial value equals the corner minimum") {
    SplitMix64 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t d = 1 + rng.uniform_index(10);
        const auto w = testutil::random_vector(d, rng.next_u64());
        const auto x = testutil::random_vector(d, rng.next_u64());
        const int y = rng.sign();
        const double eps = rng.uniform(0.0, 0.5);
        const double closed = binary_adv_value(w, x, y, eps);
        const double brute = testutil::corner_min_binary(w, x, y, eps);
        CHECK(closed == doctest::Approx(brute).epsilon(1e-12));
    }
}

TEST_CASE("binary adversarial example achieves the value") {
    const std::vector<double> w{1.0, -1.0};
    const std::vector<double> x{0.5, 0.2};
    const auto xadv = binary_adv_example(w, x, 1, 0.1);
    CHECK(xadv[0] == doctest::Approx(0.4));
    CHECK(xadv[1] == doctest::Approx(0.3));
    CHECK(dot(w, xadv) == doctest::Approx(binary_adv_value(w, x, 1, 0.1)));

    const auto same = binary_adv_example(w, x, 1, 0.0);
    CHECK(same == x);

    const std::vector<double> w0{0.0, 2.0};
    const auto keep = binary_adv_example(w0, x, 1, 0.3);
    CHECK(keep[0] == x[0]);  // sgn(0) = 0 leaves the coordinate alone
}

TEST_CASE("multiclass adversarial margin on the pinned case") {
    Matrix w(2, 2);
    w(0, 0) = 1.0;
    w(1, 1) = 1.0;
    const std::vector<double> x{1.0, 0.0};
    const AdvMargin m = multiclass_adv_margin(w, x, 1, 0.25);
    CHECK(m.value == doctest::Approx(0.5));
    CHECK(m.argmin_class == 2);

    const auto xadv = multiclass_adv_example(w, x, 1, 0.25);
    CHECK(xadv[0] == doctest::Approx(0.75));
    CHECK(xadv[1] == doctest::Approx(0.25));
    CHECK(dot(w.row(0), xadv) - dot(w.row(1), xadv) == doctest::Approx(0.5));
}

TEST_CASE("multiclass adversarial margin equals the corner enumeration") {
    SplitMix64 rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = 1 + rng.uniform_index(8);
        const std::size_t k = 2 + rng.uniform_index(3);
        const Matrix w = testutil::random_matrix(k, d, rng.next_u64());
        const auto x = testutil::random_vector(d, rng.next_u64());
        const int y = 1 + static_cast<int>(rng.uniform_index(k));
        const double eps = rng.uniform(0.0, 0.4);
        const AdvMargin m = multiclass_adv_margin(w, x, y, eps);
        CHECK(m.value == doctest::Approx(testutil::corner_min_multiclass(w, x, y, eps))
                             .epsilon(1e-12));
        // The analytic example attains the margin and stays in the ball.
        const auto xadv = multiclass_adv_example(w, x, y, eps);
        double linf = 0.0;
        for (std::size_t j = 0; j < d; ++j) linf = std::max(linf, std::abs(xadv[j] - x[j]));
        CHECK(linf <= eps + 1e-15);
        const double achieved =
            dot(w.row(static_cast<std::size_t>(y - 1)), xadv) -
            dot(w.row(static_cast<std::size_t>(m.argmin_class - 1)), xadv);
        CHECK(achieved == doctest::Approx(m.value).epsilon(1e-12));
    }
}

TEST_CASE("multiclass margin edge cases") {
    Matrix w(3, 2);
    for (std::size_t c = 0; c < 3; ++c) {
        w(c, 0) = 0.5;
        w(c, 1) = -0.5;
    }
    const std::vector<double> x{2.0, 1.0};
    const AdvMargin m = multiclass_adv_margin(w, x, 2, 0.3);
    CHECK(m.value == doctest::Approx(0.0));  // all rows equal
    CHECK(m.argmin_class == 1);              // tie -> smallest class index

    CHECK(multiclass_adv_margin(w, x, 2, 0.0).value ==
          doctest::Approx(margin(matvec(w, x), 2)));

    Matrix single(1, 2);
    CHECK_THROWS_AS(multiclass_adv_margin(single, x, 1, 0.1), InvalidConfigError);
}

TEST_CASE("ramp and margin scale with the weights") {
    SplitMix64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix w = testutil::random_matrix(3, 4, rng.next_u64());
        const auto x = testutil::random_vector(4, rng.next_u64());
        const int y = 1 + static_cast<int>(rng.uniform_index(3));
        const double eps = rng.uniform(0.0, 0.3);
        const double alpha = rng.uniform(0.1, 3.0);
        Matrix scaled = w;
        for (double& v : scaled.data()) v *= alpha;
        const double m1 = multiclass_adv_margin(w, x, y, eps).value;
        const double m2 = multiclass_adv_margin(scaled, x, y, eps).value;
        CHECK(m2 == doctest::Approx(alpha * m1).epsilon(1e-10));
        const double nat1 = multiclass_adv_margin(w, x, y, 0.0).value;
        const double nat2 = multiclass_adv_margin(scaled, x, y, 0.0).value;
        CHECK((nat1 <= 0.0) == (nat2 <= 0.0));
        // Adversarial ramp dominates the natural ramp pointwise.
        CHECK(ramp_loss(m1, 1.0) >= ramp_loss(nat1, 1.0) - 1e-15);
    }
}

TEST_CASE("training hits low error on separable data") {
    const Dataset ds = synth_gaussian(10, 2, 400, 2.0, 1.0, 21);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.seed = 3;
    const auto result = train_linear(ds, cfg);
    CHECK(eval_linear(result.model, ds, 0.0).natural_error <= 0.01);
    for (double v : result.loss_trace) CHECK(std::isfinite(v));
    CHECK(result.loss_trace.back() <= result.loss_trace.front());
}

TEST_CASE("huge l1 penalty kills all weights") {
    const Dataset ds = synth_gaussian(6, 2, 50, 1.0, 0.5, 23);
    TrainConfig cfg;
    cfg.lambda = 1e3;
    cfg.epochs = 10;
    const auto result = train_linear(ds, cfg);
    double l1 = 0.0;
    for (double v : result.model.weights.data()) l1 += std::abs(v);
    CHECK(l1 <= 1e-6);
}

TEST_CASE("training is bit-reproducible under a fixed seed") {
    const Dataset ds = synth_gaussian(6, 3, 60, 1.5, 0.8, 29);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.epsilon = 0.05;
    cfg.lambda = 1e-3;
    cfg.seed = 1234;
    const auto a = train_linear(ds, cfg);
    const auto b = train_linear(ds, cfg);
    CHECK(a.model.weights.data() == b.model.weights.data());
    CHECK(linear_model_to_json(a.model) == linear_model_to_json(b.model));
}

TEST_CASE("evaluation is monotone in epsilon and matches at zero") {
    const Dataset ds = synth_gaussian(8, 3, 80, 1.5, 0.8, 31);
    TrainConfig cfg;
    cfg.epochs = 20;
    const LinearModel model = train_linear(ds, cfg).model;

    const LinearMetrics base = eval_linear(model, ds, 0.0);
    CHECK(base.adversarial_error == doctest::Approx(base.natural_error));

    double prev = -1.0;
    for (double eps : {0.0, 0.05, 0.1, 0.2}) {
        const LinearMetrics m = eval_linear(model, ds, eps);
        CHECK(m.adversarial_error >= prev - 1e-12);
        prev = m.adversarial_error;
    }
}

TEST_CASE("a hugely separated classifier has zero adversarial error") {
    // Two classes at +/- 100 along the first axis, weights bounded.
    Dataset ds;
    ds.d = 4;
    ds.num_classes = 2;
    ds.features = Matrix(20, 4);
    ds.labels.resize(20);
    for (std::size_t i = 0; i < 20; ++i) {
        ds.features(i, 0) = i % 2 == 0 ? 100.0 : -100.0;
        ds.labels[i] = i % 2 == 0 ? 1 : 2;
    }
    LinearModel model;
    model.weights = Matrix(2, 4);
    model.weights(0, 0) = 1.0;
    model.weights(1, 0) = -1.0;
    model.constraint = NormConstraint{NormExponent::infinity(), 1.0, true};
    const LinearMetrics m = eval_linear(model, ds, 0.5);
    CHECK(m.adversarial_error == 0.0);
}

TEST_CASE("lp ball projection lands inside and fixes interior points") {
    SplitMix64 rng(37);
    const NormExponent ps[] = {NormExponent::finite(1.0), NormExponent::finite(2.0),
                               NormExponent::infinity()};
    for (const auto& p : ps) {
        for (int trial = 0; trial < 30; ++trial) {
            auto v = testutil::random_vector(6, rng.next_u64(), -2.0, 2.0);
            const auto orig = v;
            project_lp_ball(v, p, 1.0);
            CHECK(lp_norm(v, p) <= 1.0 + 1e-10);
            if (lp_norm(orig, p) <= 1.0) CHECK(v == orig);
        }
    }
    // l1 projection: the result is the closest point, so it beats scaling.
    std::vector<double> v{1.0, 0.5, -0.25};
    const auto orig = v;
    project_lp_ball(v, NormExponent::finite(1.0), 1.0);
    double proj_dist = 0.0, scale_dist = 0.0;
    const double norm1 = lp_norm(orig, NormExponent::finite(1.0));
    for (std::size_t j = 0; j < v.size(); ++j) {
        proj_dist += (v[j] - orig[j]) * (v[j] - orig[j]);
        const double scaled = orig[j] / norm1;
        scale_dist += (scaled - orig[j]) * (scaled - orig[j]);
    }
    CHECK(proj_dist <= scale_dist + 1e-12);
}

TEST_CASE("enforced constraint keeps rows inside the ball during training") {
    const Dataset ds = synth_gaussian(6, 2, 60, 2.0, 0.6, 41);
    TrainConfig cfg;
    cfg.epochs = 15;
    NormConstraint constraint{NormExponent::finite(2.0), 0.5, true};
    const LinearModel model = train_linear(ds, cfg, constraint).model;
    for (std::size_t c = 0; c < model.num_classes(); ++c)
        CHECK(lp_norm(model.weights.row(c), constraint.p) <= constraint.bound + 1e-9);
}

TEST_CASE("model JSON round trip") {
    LinearModel model;
    model.weights = testutil::random_matrix(3, 5, 43);
    model.constraint = NormConstraint{NormExponent::infinity(), 2.5, true};
    const std::string text = linear_model_to_json(model);
    const LinearModel back = linear_model_from_json(text);
    CHECK(back.weights.data() == model.weights.data());
    CHECK(back.constraint.p.is_infinite());
    CHECK(back.constraint.bound == model.constraint.bound);
    CHECK(back.constraint.enforced == model.constraint.enforced);
}
