#include "mfuse/nn/adam.hpp"
#include "mfuse/nn/gradcheck.hpp"
#include "mfuse/nn/layers.hpp"
#include "mfuse/nn/ops.hpp"
#include "mfuse/nn/serialize.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

using namespace mfuse;
using namespace mfuse::nn;
using mfuse::testing::leaf;
using mfuse::testing::project;
using mfuse::testing::random_tensor;

namespace {

constexpr double step = 1e-4;

// Keeps values away from the relu kink so central differences are valid.
Tensor away_from_zero(Shape s, std::uint64_t seed)
{
    Tensor t = random_tensor(s, seed, true);
    for (double& v : t.values())
        v = v >= 0 ? v + 0.05 : v - 0.05;
    return t;
}

} // namespace

TEST(Conv2d, CountingTapsAndDelta)
{
    const Tensor ones = Tensor::filled(Shape{1, 1, 3, 3}, 1.0);
    const Tensor out = conv2d(ones, Tensor::filled(Shape{1, 1, 3, 3}, 1.0), Tensor());
    EXPECT_EQ(out.values()[4], 9.0);
    for (std::size_t corner : {0u, 2u, 6u, 8u})
        EXPECT_EQ(out.values()[corner], 4.0);
    EXPECT_EQ(out.values()[1], 6.0);

    Tensor delta = Tensor::zeros(Shape{1, 1, 3, 3});
    delta.values()[4] = 1.0;
    const Tensor x = random_tensor(Shape{2, 1, 5, 4}, 1);
    const Tensor y = conv2d(x, delta, Tensor::zeros(Shape{1, 1, 1, 1}));
    EXPECT_TRUE(std::equal(x.values().begin(), x.values().end(), y.values().begin()));
}

TEST(Conv2d, ShapeErrors)
{
    const Tensor x = random_tensor(Shape{1, 2, 4, 4}, 1);
    EXPECT_THROW(conv2d(x, random_tensor(Shape{3, 1, 3, 3}, 2), Tensor()), std::invalid_argument);
    EXPECT_THROW(conv2d(x, random_tensor(Shape{3, 2, 2, 2}, 2), Tensor()), std::invalid_argument);
}

TEST(Conv2d, GradientCheck)
{
    const Tensor x = random_tensor(Shape{2, 3, 5, 4}, 1, true);
    const Tensor w = random_tensor(Shape{4, 3, 3, 3}, 2, true);
    const Tensor b = random_tensor(Shape{1, 4, 1, 1}, 3, true);
    const auto report =
        gradient_check([&] { return project(conv2d(x, w, b), 9); }, {leaf("x", x), leaf("w", w), leaf("b", b)}, step);
    EXPECT_LT(report.max_rel_error, 1e-4) << report.worst;
    EXPECT_EQ(report.checked, x.numel() + w.numel() + b.numel());
}

TEST(BatchNorm, ConstantChannelAndNormalization)
{
    BatchNorm2d bn(2);
    const Tensor flat = Tensor::filled(Shape{3, 2, 4, 4}, 0.7);
    const Tensor normed = bn(flat, BatchNormMode::train);
    for (double v : normed.values())
        EXPECT_NEAR(v, 0.0, 1e-9);

    BatchNorm2d bn2(3);
    const Tensor x = random_tensor(Shape{4, 3, 5, 5}, 4, false, -2.0, 5.0);
    const Tensor y = bn2(x, BatchNormMode::train);
    const std::size_t hw = 25;
    for (std::size_t c = 0; c < 3; ++c) {
        double mean = 0.0;
        double sq = 0.0;
        for (std::size_t b = 0; b < 4; ++b)
            for (std::size_t i = 0; i < hw; ++i) {
                const double v = y.values()[(b * 3 + c) * hw + i];
                mean += v;
                sq += v * v;
            }
        mean /= 100.0;
        sq /= 100.0;
        EXPECT_NEAR(mean, 0.0, 1e-6);
        // eps = 1e-5 slightly shrinks the variance.
        EXPECT_NEAR(sq - mean * mean, 1.0, 1e-4);
    }
}

TEST(BatchNorm, RunningStatisticsByMode)
{
    BatchNorm2d bn(1);
    const Tensor x(Shape{2, 1, 1, 2}, {1.0, 2.0, 3.0, 4.0});
    bn(x, BatchNormMode::train_keep_stats);
    EXPECT_EQ(bn.running_mean[0], 0.0);
    EXPECT_EQ(bn.running_var[0], 1.0);
    bn(x, BatchNormMode::train);
    // mean 2.5, unbiased variance 5/3
    EXPECT_NEAR(bn.running_mean[0], 0.25, 1e-15);
    EXPECT_NEAR(bn.running_var[0], 0.9 + 0.1 * 5.0 / 3.0, 1e-15);

    const Tensor y = bn.infer(x);
    const double expected = (1.0 - 0.25) / std::sqrt(bn.running_var[0] + 1e-5);
    EXPECT_NEAR(y.values()[0], expected, 1e-12);
    bn(x, BatchNormMode::eval);
    EXPECT_NEAR(bn.running_mean[0], 0.25, 1e-15);
}

TEST(BatchNorm, GradientCheckBothModes)
{
    BatchNorm2d bn(3);
    const Tensor x = random_tensor(Shape{3, 3, 4, 4}, 5, true, -1.0, 2.0);
    bn.gamma.values()[1] = 1.7;
    bn.beta.values()[2] = -0.3;
    ParamList inputs{leaf("x", x), leaf("gamma", bn.gamma), leaf("beta", bn.beta)};
    const auto train = gradient_check([&] { return project(bn(x, BatchNormMode::train_keep_stats), 10); }, inputs, step);
    EXPECT_LT(train.max_rel_error, 1e-4) << train.worst;
    bn.running_mean = {0.1, -0.2, 0.3};
    bn.running_var = {0.5, 1.5, 2.0};
    const auto eval = gradient_check([&] { return project(bn(x, BatchNormMode::eval), 11); }, inputs, step);
    EXPECT_LT(eval.max_rel_error, 1e-4) << eval.worst;
}

TEST(Activations, ValuesAndGradients)
{
    const Tensor x(Shape{1, 1, 1, 3}, {-1.0, 0.0, 2.0}, true);
    const Tensor r = relu(x);
    EXPECT_EQ(std::vector<double>(r.values().begin(), r.values().end()), (std::vector<double>{0, 0, 2}));
    sum(r).backward();
    EXPECT_EQ(x.grad()[1], 0.0);
    EXPECT_EQ(x.grad()[2], 1.0);
    EXPECT_EQ(sigmoid(Tensor::scalar(0.0)).item(), 0.5);
    EXPECT_NEAR(sigmoid(Tensor::scalar(-800.0)).item(), 0.0, 1e-300);

    const Tensor a = away_from_zero(Shape{2, 3, 3, 3}, 6);
    const auto rr = gradient_check([&] { return project(relu(a), 12); }, {leaf("a", a)}, step);
    EXPECT_LT(rr.max_rel_error, 1e-4) << rr.worst;
    const auto sr = gradient_check([&] { return project(sigmoid(a), 13); }, {leaf("a", a)}, step);
    EXPECT_LT(sr.max_rel_error, 1e-4) << sr.worst;
}

TEST(Softmax, ClosedFormsAndStability)
{
    const Tensor eq = softmax_channels(Tensor(Shape{1, 2, 1, 1}, {0.3, 0.3}));
    EXPECT_DOUBLE_EQ(eq.values()[0], 0.5);
    const Tensor ln2 = softmax_channels(Tensor(Shape{1, 2, 1, 1}, {std::log(2.0), 0.0}));
    EXPECT_NEAR(ln2.values()[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(ln2.values()[1], 1.0 / 3.0, 1e-15);
    const Tensor big = softmax_channels(Tensor(Shape{1, 2, 1, 1}, {50.0, 0.0}));
    EXPECT_NEAR(big.values()[0], 1.0, 1e-15);
    EXPECT_GT(big.values()[1], 0.0);
    const Tensor huge = softmax_channels(Tensor(Shape{1, 2, 1, 1}, {1000.0, 0.0}));
    EXPECT_TRUE(std::isfinite(huge.values()[0]));

    const Tensor x = random_tensor(Shape{2, 4, 3, 2}, 7, true, -3.0, 3.0);
    const auto report = gradient_check([&] { return project(softmax_channels(x), 14); }, {leaf("x", x)}, step);
    EXPECT_LT(report.max_rel_error, 1e-4) << report.worst;
}

TEST(Pooling, AverageAndGradient)
{
    const Tensor x(Shape{1, 1, 2, 2}, {1, 3, 5, 7});
    EXPECT_EQ(global_avg_pool(x).item(), 4.0);
    EXPECT_EQ(global_avg_pool(Tensor::filled(Shape{1, 1, 3, 3}, 2.5)).item(), 2.5);
    const Tensor r = random_tensor(Shape{2, 3, 4, 5}, 8, true);
    const auto report = gradient_check([&] { return project(global_avg_pool(r), 15); }, {leaf("r", r)}, step);
    EXPECT_LT(report.max_rel_error, 1e-4) << report.worst;
}

TEST(Dense, PassthroughConstantAndGradient)
{
    Tensor eye = Tensor::zeros(Shape{3, 3, 1, 1});
    for (std::size_t i = 0; i < 3; ++i)
        eye.values()[i * 3 + i] = 1.0;
    const Tensor x(Shape{2, 3, 1, 1}, {1, 2, 3, 4, 5, 6});
    const Tensor y = dense(x, eye, Tensor::zeros(Shape{1, 3, 1, 1}));
    EXPECT_TRUE(std::equal(x.values().begin(), x.values().end(), y.values().begin()));
    const Tensor c = dense(x, Tensor::zeros(Shape{2, 3, 1, 1}), Tensor(Shape{1, 2, 1, 1}, {0.5, -1.0}));
    EXPECT_EQ(c.values()[2], 0.5);
    EXPECT_EQ(c.values()[3], -1.0);
    EXPECT_THROW(dense(x, Tensor::zeros(Shape{2, 4, 1, 1}), Tensor()), std::invalid_argument);

    const Tensor xi = random_tensor(Shape{3, 4, 1, 1}, 9, true);
    const Tensor w = random_tensor(Shape{2, 4, 1, 1}, 10, true);
    const Tensor b = random_tensor(Shape{1, 2, 1, 1}, 11, true);
    const auto report = gradient_check([&] { return project(dense(xi, w, b), 16); },
                                       {leaf("x", xi), leaf("w", w), leaf("b", b)}, step);
    EXPECT_LT(report.max_rel_error, 1e-4) << report.worst;
}

TEST(Combine, ConvexCombinationAndGradients)
{
    const Tensor x = random_tensor(Shape{2, 3, 4, 4}, 12, true, 0.0, 1.0);
    const Tensor logits = random_tensor(Shape{2, 3, 4, 4}, 13, true, -2.0, 2.0);
    const Tensor cl = random_tensor(Shape{2, 3, 1, 1}, 14, true, -2.0, 2.0);
    const auto spatial =
        gradient_check([&] { return project(convex_combine(softmax_channels(logits), x), 17); },
                       {leaf("x", x), leaf("logits", logits)}, step);
    EXPECT_LT(spatial.max_rel_error, 1e-4) << spatial.worst;
    const auto channel = gradient_check([&] { return project(convex_combine(softmax_channels(cl), x), 18); },
                                        {leaf("x", x), leaf("cl", cl)}, step);
    EXPECT_LT(channel.max_rel_error, 1e-4) << channel.worst;

    // Matches sum_n w_n x_n directly.
    const Tensor w = softmax_channels(logits);
    const Tensor out = convex_combine(w, x);
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t p = 0; p < 16; ++p) {
            double direct = 0.0;
            for (std::size_t n = 0; n < 3; ++n)
                direct += w.values()[(b * 3 + n) * 16 + p] * x.values()[(b * 3 + n) * 16 + p];
            EXPECT_NEAR(out.values()[b * 16 + p], direct, 1e-14);
        }
}

TEST(Concat, LayoutAndGradient)
{
    const Tensor a = random_tensor(Shape{2, 1, 2, 3}, 15, true);
    const Tensor b = random_tensor(Shape{2, 2, 2, 3}, 16, true);
    const std::vector parts{a, b};
    const Tensor c = concat_channels(parts);
    EXPECT_EQ(c.shape(), (Shape{2, 3, 2, 3}));
    EXPECT_EQ(c.values()[18], a.values()[6]);
    EXPECT_EQ(c.values()[24], b.values()[12]);
    const auto report = gradient_check([&] { return project(concat_channels(parts), 19); },
                                       {leaf("a", a), leaf("b", b)}, step);
    EXPECT_LT(report.max_rel_error, 1e-4) << report.worst;
}

TEST(Elementwise, GradientChecks)
{
    const Tensor a = away_from_zero(Shape{1, 2, 3, 3}, 17);
    const Tensor b = random_tensor(Shape{1, 2, 3, 3}, 18, true);
    const ParamList both{leaf("a", a), leaf("b", b)};
    for (const auto& [name, fn] : std::vector<std::pair<std::string, std::function<Tensor()>>>{
             {"add", [&] { return project(add(a, b), 20); }},
             {"sub", [&] { return project(sub(a, b), 21); }},
             {"mul", [&] { return project(mul(a, b), 22); }},
             {"scale", [&] { return project(scale(a, -1.7), 23); }},
             {"square", [&] { return project(square(a), 24); }},
             {"abs", [&] { return project(abs(a), 25); }},
             {"mean", [&] { return mean(mul(a, b)); }},
         }) {
        const auto report = gradient_check(fn, both, step);
        EXPECT_LT(report.max_rel_error, 1e-4) << name << " " << report.worst;
    }
}

TEST(Mse, ClosedFormAndGradient)
{
    const Tensor t = random_tensor(Shape{1, 1, 2, 2}, 19);
    EXPECT_EQ(mse_loss(t, t).item(), 0.0);
    const Tensor p = Tensor::scalar(0.0, true);
    const Tensor loss = mse_loss(p, Tensor::scalar(1.0));
    EXPECT_EQ(loss.item(), 1.0);
    loss.backward();
    EXPECT_EQ(p.grad()[0], -2.0);
    EXPECT_THROW(mse_loss(t, Tensor::scalar(1.0)), std::invalid_argument);

    const Tensor x = random_tensor(Shape{2, 1, 3, 3}, 20, true);
    const Tensor y = random_tensor(Shape{2, 1, 3, 3}, 21, true);
    const auto report = gradient_check([&] { return mse_loss(x, y); }, {leaf("x", x), leaf("y", y)}, step);
    EXPECT_LT(report.max_rel_error, 1e-6) << report.worst;
}

TEST(Tape, BackwardAccumulatesAndNoGrad)
{
    const Tensor x = random_tensor(Shape{1, 1, 2, 2}, 22, true);
    const Tensor loss = sum(square(x));
    loss.backward();
    std::vector<double> once(x.grad().begin(), x.grad().end());
    loss.backward();
    for (std::size_t i = 0; i < once.size(); ++i) {
        EXPECT_DOUBLE_EQ(once[i], 2.0 * x.values()[i]);
        EXPECT_DOUBLE_EQ(x.grad()[i], 2.0 * once[i]);
    }
    {
        NoGradGuard guard;
        EXPECT_FALSE(grad_enabled());
        EXPECT_FALSE(square(x).requires_grad());
    }
    EXPECT_TRUE(grad_enabled());
    EXPECT_FALSE(x.detached().requires_grad());
}

TEST(GradCheck, LinearIsExact)
{
    const Tensor x = random_tensor(Shape{1, 1, 4, 4}, 23, true);
    const Tensor w = random_tensor(Shape{1, 1, 4, 4}, 24);
    const auto report = gradient_check([&] { return sum(mul(x, w)); }, {leaf("x", x)}, 1e-3);
    EXPECT_LT(report.max_rel_error, 1e-8);
    for (double g : x.grad())
        EXPECT_EQ(g, 0.0);
}

TEST(GradCheck, FlagsKinkInsideStep)
{
    // |x| at x = 3e-4 with step 1e-3: the wide difference straddles zero.
    const Tensor x(Shape{1, 1, 1, 2}, {3e-4, 0.7}, true);
    const auto plain = gradient_check([&] { return sum(abs(x)); }, {leaf("x", x)}, 1e-3);
    EXPECT_GT(plain.max_rel_error, 0.1);
    const auto skipping = gradient_check([&] { return sum(abs(x)); }, {leaf("x", x)}, 1e-3, 1e-6, true);
    EXPECT_EQ(skipping.skipped, 1u);
    EXPECT_EQ(skipping.checked, 1u);
    EXPECT_LT(skipping.max_rel_error, 1e-8);

    const Tensor y = random_tensor(Shape{1, 2, 3, 3}, 25, true);
    const auto smooth = gradient_check([&] { return sum(sigmoid(y)); }, {leaf("y", y)}, 1e-5, 1e-6, true);
    EXPECT_EQ(smooth.skipped, 0u);
}

TEST(Adam, ZeroGradientLeavesParameters)
{
    CounterRng rng(1);
    Conv2d conv(1, 2, 3, rng);
    ParamList params;
    conv.append_params(params, "c");
    const std::vector<double> before(conv.weight.values().begin(), conv.weight.values().end());
    Adam adam(params);
    adam.step(0.1);
    EXPECT_EQ(adam.steps(), 1u);
    EXPECT_TRUE(std::equal(before.begin(), before.end(), conv.weight.values().begin()));
}

TEST(Adam, FirstStepClosedForm)
{
    const Tensor p(Shape{1, 1, 1, 3}, {0.0, 1.0, -2.0}, true);
    const std::vector<double> g{0.5, -3.0, 1e-3};
    std::copy(g.begin(), g.end(), p.node().grad.begin());
    Adam adam({leaf("p", p)});
    adam.step(0.01);
    const std::vector<double> start{0.0, 1.0, -2.0};
    for (std::size_t i = 0; i < 3; ++i) {
        // t = 1: m_hat = g, v_hat = g^2
        const double expected = start[i] - 0.01 * g[i] / (std::abs(g[i]) + 1e-8);
        EXPECT_NEAR(p.values()[i], expected, 1e-15);
        EXPECT_EQ(p.grad()[i], 0.0);
    }
}

TEST(Adam, TwoStepsShrinkQuadratic)
{
    const Tensor x = Tensor::scalar(1.0, true);
    Adam adam({leaf("x", x)});
    double m = 0.0;
    double v = 0.0;
    double ref = 1.0;
    for (int t = 1; t <= 2; ++t) {
        const Tensor loss = square(x);
        loss.backward();
        const double g = 2.0 * ref;
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        ref -= 0.1 * (m / (1.0 - std::pow(0.9, t))) / (std::sqrt(v / (1.0 - std::pow(0.999, t))) + 1e-8);
        adam.step(0.1);
        EXPECT_NEAR(x.item(), ref, 1e-15);
    }
    EXPECT_LT(x.item() * x.item(), 1.0);
}

TEST(Adam, NonFiniteGradientNamesParameter)
{
    const Tensor p = Tensor::zeros(Shape{1, 1, 1, 2}, true);
    p.node().grad[1] = std::nan("");
    Adam adam({leaf("layer.weight", p)});
    try {
        adam.step(0.1);
        FAIL();
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("layer.weight"), std::string::npos);
    }
    EXPECT_EQ(p.values()[0], 0.0);
}

TEST(Schedule, StepDecay)
{
    EXPECT_DOUBLE_EQ(fusion_schedule.at(1), 0.01);
    EXPECT_DOUBLE_EQ(fusion_schedule.at(50), 0.01);
    EXPECT_NEAR(fusion_schedule.at(51), 0.006, 1e-15);
    EXPECT_NEAR(fusion_schedule.at(80), 0.006, 1e-15);
    EXPECT_NEAR(fusion_schedule.at(81), 0.0036, 1e-15);
    EXPECT_NEAR(fusion_schedule.at(100), 0.0036, 1e-15);
    EXPECT_DOUBLE_EQ(denoiser_schedule.at(10), 1e-3);
    EXPECT_DOUBLE_EQ(denoiser_schedule.at(11), 5e-4);
    EXPECT_DOUBLE_EQ(denoiser_schedule.at(50), 1e-3 / 16.0);
}

TEST(Init, GlorotBoundsAndZeroBias)
{
    CounterRng rng(3);
    Conv2d conv(4, 6, 3, rng);
    const double limit = std::sqrt(6.0 / (4 * 9 + 6 * 9));
    for (double v : conv.weight.values())
        EXPECT_LE(std::abs(v), limit);
    for (double v : conv.bias.values())
        EXPECT_EQ(v, 0.0);
    EXPECT_THROW(Conv2d(1, 1, 4, rng), std::invalid_argument);
}

TEST(Serialize, RoundTripAndManifestChecks)
{
    CounterRng rng(4);
    Conv2d conv(2, 3, 3, rng);
    BatchNorm2d bn(3);
    bn.running_mean = {0.1, 0.2, 0.3};
    Dense fc(3, 2, rng);
    ParamList params;
    conv.append_params(params, "conv");
    bn.append_params(params, "bn");
    fc.append_params(params, "fc");
    std::stringstream buf;
    save_params(buf, params);
    const std::string bytes = buf.str();
    EXPECT_EQ(bytes.substr(0, 8), "MFUSEPRM");

    CounterRng other(99);
    Conv2d conv2(2, 3, 3, other);
    BatchNorm2d bn2(3);
    Dense fc2(3, 2, other);
    ParamList params2;
    conv2.append_params(params2, "conv");
    bn2.append_params(params2, "bn");
    fc2.append_params(params2, "fc");
    std::stringstream in(bytes);
    load_params(in, params2);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto a = params[i].values();
        const auto b = params2[i].values();
        EXPECT_TRUE(std::equal(a.begin(), a.end(), b.begin(), b.end())) << params[i].name;
    }

    ParamList wrong;
    conv2.append_params(wrong, "conv");
    std::stringstream in2(bytes);
    EXPECT_THROW(load_params(in2, wrong), std::runtime_error);
    std::stringstream truncated(bytes.substr(0, bytes.size() - 5));
    EXPECT_THROW(load_params(truncated, params2), std::runtime_error);
}
