#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "alphagan/discriminator.hpp"
#include "helpers.hpp"

using namespace alphagan;

namespace {

nn::Tensor<float> rand_stack(int h, int w, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    nn::Tensor<float> t(1, 4, h, w);
    for (auto& v : t.v) v = u(rng);
    return t;
}

}  // namespace

TEST_CASE("analytic receptive field is 70") {
    CHECK(discriminator_receptive_field() == 70);
}

TEST_CASE("patch grid arithmetic") {
    DiscriminatorConfig cfg;
    cfg.base_width = 16;
    Discriminator<float> d(cfg);
    d.init(1);
    d.set_training(false);
    nn::Tensor<float> y = d.forward(rand_stack(128, 128, 2));
    // 128 -> 64 -> 32 -> 16 -> 15 -> 14 under strides 2,2,2,1,1 with k=4 p=1.
    CHECK(y.c == 1);
    CHECK(y.h == 14);
    CHECK(y.w == 14);
    for (float v : y.v) {
        CHECK(v > 0.f);
        CHECK(v < 1.f);
    }
}

TEST_CASE("inputs below the receptive field are rejected") {
    DiscriminatorConfig cfg;
    cfg.base_width = 16;
    Discriminator<float> d(cfg);
    d.init(1);
    CHECK_THROWS(d.forward(rand_stack(64, 64, 3)));
}

TEST_CASE("empirical gradient footprint of one patch score fits in 70x70") {
    DiscriminatorConfig cfg;
    cfg.base_width = 16;
    Discriminator<float> d(cfg);
    d.init(5);
    d.set_training(false);
    nn::Tensor<float> x = rand_stack(96, 96, 6);
    nn::Tensor<float> y = d.forward(x);
    nn::Tensor<float> dy(y.n, y.c, y.h, y.w);
    int py = y.h / 2, px = y.w / 2;
    dy.at(0, 0, py, px) = 1.f;
    d.params().zero_grad();
    nn::Tensor<float> dx = d.backward(dy);
    int ymin = 96, ymax = -1, xmin = 96, xmax = -1;
    for (int c = 0; c < 4; ++c)
        for (int yy = 0; yy < 96; ++yy)
            for (int xx = 0; xx < 96; ++xx)
                if (dx.at(0, c, yy, xx) != 0.f) {
                    ymin = std::min(ymin, yy);
                    ymax = std::max(ymax, yy);
                    xmin = std::min(xmin, xx);
                    xmax = std::max(xmax, xx);
                }
    REQUIRE(ymax >= 0);
    CHECK(ymax - ymin + 1 <= 70);
    CHECK(xmax - xmin + 1 <= 70);
}

TEST_CASE("real and fake stacks follow the compositing equation") {
    Rng rng(7);
    TrainingSample s = testutil::make_synthetic_sample(32, rng, 4);
    nn::Tensor<float> real = real_stack<float>(s);
    size_t plane = s.composite.plane_size();
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < plane; ++i)
            CHECK(real.v[c * plane + i] == doctest::Approx(s.composite.data[c * plane + i]));
    AlphaMatte tp = trimap_plane(s.trimap);
    for (size_t i = 0; i < plane; ++i) CHECK(real.v[3 * plane + i] == tp.data[i]);

    AlphaMatte half(32, 32, 0.5f);
    nn::Tensor<float> fake = fake_stack<float>(s, half);
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < plane; ++i) {
            float want = 0.5f * s.foreground.data[c * plane + i] +
                         0.5f * s.background.data[c * plane + i];
            CHECK(fake.v[c * plane + i] == doctest::Approx(want));
        }
}

TEST_CASE("alpha gradient through the fake stack matches finite differences") {
    Rng rng(8);
    TrainingSample s = testutil::make_synthetic_sample(16, rng, 3);
    size_t plane = s.composite.plane_size();
    std::mt19937_64 prng(9);
    std::uniform_real_distribution<double> u(0.1, 0.9);
    nn::Tensor<double> alpha(1, 1, 16, 16);
    for (auto& v : alpha.v) v = u(prng);

    // Random linear functional over the stack stands in for the network.
    nn::Tensor<double> proj(1, 4, 16, 16);
    for (auto& v : proj.v) v = u(prng) - 0.5;
    auto loss = [&]() {
        nn::Tensor<double> stack(1, 4, 16, 16);
        fill_fake_stack(stack, 0, s, alpha, 0);
        double sum = 0;
        for (size_t i = 0; i < stack.size(); ++i) sum += stack.v[i] * proj.v[i];
        return sum;
    };
    nn::Tensor<double> dalpha(1, 1, 16, 16);
    fake_stack_backward_alpha(proj, 0, s, dalpha, 0);
    const double h = 1e-6;
    for (size_t i = 0; i < plane; i += 17) {
        double keep = alpha.v[i];
        alpha.v[i] = keep + h;
        double lp = loss();
        alpha.v[i] = keep - h;
        double lm = loss();
        alpha.v[i] = keep;
        CHECK((lp - lm) / (2 * h) == doctest::Approx(dalpha.v[i]).epsilon(1e-5));
    }
}

TEST_CASE("discriminator parameter gradients in double precision") {
    DiscriminatorConfig cfg;
    cfg.base_width = 8;
    Discriminator<double> d(cfg);
    d.init(11);
    d.set_training(false);
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    nn::Tensor<double> x(1, 4, 80, 80);
    for (auto& v : x.v) v = u(rng);
    nn::Tensor<double> y = d.forward(x);
    nn::Tensor<double> proj(y.n, y.c, y.h, y.w);
    for (auto& v : proj.v) v = u(rng) - 0.5;
    auto loss = [&]() {
        nn::Tensor<double> s = d.forward(x);
        double sum = 0;
        for (size_t i = 0; i < s.size(); ++i) sum += s.v[i] * proj.v[i];
        return sum;
    };
    loss();
    d.params().zero_grad();
    d.backward(proj);
    const double h = 1e-5;
    for (const char* name : {"d.c1.weight", "d.c3.weight", "d.bn3.weight", "d.c5.bias"}) {
        auto* p = d.params().find(name);
        REQUIRE(p != nullptr);
        std::uniform_int_distribution<size_t> pick(0, p->size() - 1);
        for (int probe = 0; probe < 4; ++probe) {
            size_t i = pick(rng);
            double keep = p->value[i];
            p->value[i] = keep + h;
            double lp = loss();
            p->value[i] = keep - h;
            double lm = loss();
            p->value[i] = keep;
            double fd = (lp - lm) / (2 * h);
            double scale = std::max({1.0, std::abs(fd), std::abs(p->grad[i])});
            CHECK(std::abs(fd - p->grad[i]) / scale <= 1e-5);
        }
    }
}
