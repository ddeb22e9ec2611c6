#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>

#include "alphagan/generator.hpp"
#include "helpers.hpp"

using namespace alphagan;

namespace {

GeneratorConfig small_cfg(int output_stride = 8) {
    GeneratorConfig cfg;
    cfg.width_multiplier = 0.25;
    cfg.output_stride = output_stride;
    return cfg;
}

nn::Tensor<float> rand_input(int h, int w, int c, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    nn::Tensor<float> t(1, c, h, w);
    for (auto& v : t.v) v = u(rng);
    return t;
}

}  // namespace

TEST_CASE("config validation") {
    GeneratorConfig cfg;
    cfg.output_stride = 12;
    CHECK_THROWS(cfg.validate());
    cfg = GeneratorConfig{};
    cfg.width_multiplier = 0.0;
    CHECK_THROWS(cfg.validate());
    cfg = GeneratorConfig{};
    cfg.use_multigrid = true;
    CHECK_THROWS_WITH(cfg.validate(), "multigrid variant is unsupported");
    cfg = GeneratorConfig{};
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("width scaling rule") {
    GeneratorConfig cfg;
    cfg.width_multiplier = 0.25;
    CHECK(cfg.scaled(64) == 16);
    CHECK(cfg.scaled(256) == 64);
    CHECK(cfg.scaled(48) == 16);  // 12 rounds up to the next multiple of 8
    CHECK(cfg.scaled(32) == 8);
    CHECK(cfg.scaled(8) == 8);  // floor at 8
    cfg.width_multiplier = 1.0;
    CHECK(cfg.scaled(2048) == 2048);
}

TEST_CASE("forward shapes at both output strides") {
    for (int os : {8, 16}) {
        Generator<float> g(small_cfg(os));
        g.init(1);
        g.set_training(false);
        nn::Tensor<float> x4 = rand_input(64, 96, 4, 2);
        nn::Tensor<float> rgb = rand_input(64, 96, 3, 3);
        nn::Tensor<float> y = g.forward(x4, rgb);
        CHECK(y.n == 1);
        CHECK(y.c == 1);
        CHECK(y.h == 64);
        CHECK(y.w == 96);
        for (float v : y.v) {
            CHECK(v >= 0.f);
            CHECK(v <= 1.f);
        }
        CHECK(g.encoder.forward(x4).bottleneck.h == 64 / os);
    }
}

TEST_CASE("input not divisible by 32 is rejected") {
    Generator<float> g(small_cfg());
    g.init(1);
    nn::Tensor<float> x4 = rand_input(48, 48, 4, 2);
    nn::Tensor<float> rgb = rand_input(48, 48, 3, 3);
    CHECK_THROWS(g.forward(x4, rgb));
}

TEST_CASE("manifest mirrors standard residual-classifier names") {
    Generator<float> g(small_cfg());
    std::set<std::string> names;
    for (auto& [name, shape] : g.manifest()) names.insert(name);
    CHECK(names.count("encoder.conv1.weight"));
    CHECK(names.count("encoder.bn1.weight"));
    CHECK(names.count("encoder.bn1.running_mean"));
    CHECK(names.count("encoder.layer1.0.conv1.weight"));
    CHECK(names.count("encoder.layer1.0.downsample.0.weight"));
    CHECK(names.count("encoder.layer4.2.bn3.running_var"));
    CHECK(names.count("decoder.out.weight"));
    CHECK(names.count("decoder.out.bias"));
    // layer counts: 3 + 4 + 6 + 3 bottlenecks
    CHECK(names.count("encoder.layer2.3.conv1.weight"));
    CHECK(!names.count("encoder.layer2.4.conv1.weight"));
    CHECK(names.count("encoder.layer3.5.conv1.weight"));
    CHECK(!names.count("encoder.layer3.6.conv1.weight"));
}

TEST_CASE("pretrained load widens conv1 with a zero fourth channel") {
    Generator<float> donor(small_cfg());
    donor.init(7);
    NamedTensors src;
    for (auto* p : donor.params().items) {
        if (p->name.rfind("encoder.", 0) != 0) continue;
        std::string key = p->name.substr(8);
        if (key == "conv1.weight") {
            // Strip to the 3-channel layout a classifier checkpoint would have.
            int out = p->shape[0];
            std::vector<float> w3(static_cast<size_t>(out) * 3 * 49);
            for (int o = 0; o < out; ++o)
                for (int c = 0; c < 3; ++c)
                    for (int i = 0; i < 49; ++i)
                        w3[(static_cast<size_t>(o) * 3 + c) * 49 + i] =
                            p->value[(static_cast<size_t>(o) * 4 + c) * 49 + i] + 0.01f;
            src[key] = {{out, 3, 7, 7}, std::move(w3)};
        } else {
            std::vector<float> v(p->value.begin(), p->value.end());
            src[key] = {p->shape, std::move(v)};
        }
    }

    Generator<float> g(small_cfg());
    g.init(99);
    g.apply_pretrained(src);
    auto* conv1 = g.params().find("encoder.conv1.weight");
    REQUIRE(conv1 != nullptr);
    int out = conv1->shape[0];
    for (int o = 0; o < out; ++o)
        for (int i = 0; i < 49; ++i)
            CHECK(conv1->value[(static_cast<size_t>(o) * 4 + 3) * 49 + i] == 0.f);

    // With the fourth channel zeroed, inputs differing only in the trimap
    // plane produce identical outputs.
    g.set_training(false);
    nn::Tensor<float> x4a = rand_input(64, 64, 4, 5);
    nn::Tensor<float> rgb = rand_input(64, 64, 3, 6);
    nn::Tensor<float> x4b = x4a;
    for (int i = 0; i < 64 * 64; ++i) x4b.v[3 * 64 * 64 + i] = 1.f - x4b.v[3 * 64 * 64 + i];
    nn::Tensor<float> ya = g.forward(x4a, rgb);
    nn::Tensor<float> yb = g.forward(x4b, rgb);
    for (size_t i = 0; i < ya.size(); ++i) CHECK(ya.v[i] == yb.v[i]);

    // Missing tensors are an error.
    src.erase("layer1.0.conv2.weight");
    Generator<float> g2(small_cfg());
    CHECK_THROWS(g2.apply_pretrained(src));
}

TEST_CASE("ablation variants run forward and backward") {
    for (auto [aspp, skips] : {std::pair{false, true}, {true, false}, {false, false}}) {
        GeneratorConfig cfg = small_cfg();
        cfg.use_aspp = aspp;
        cfg.use_skips = skips;
        Generator<float> g(cfg);
        g.init(3);
        g.set_training(true);
        nn::Tensor<float> x4 = rand_input(64, 64, 4, 8);
        nn::Tensor<float> rgb = rand_input(64, 64, 3, 9);
        nn::Tensor<float> y = g.forward(x4, rgb);
        CHECK(y.h == 64);
        nn::Tensor<float> dy(1, 1, 64, 64);
        for (auto& v : dy.v) v = 1e-3f;
        g.params().zero_grad();
        CHECK_NOTHROW(g.backward(dy));
    }
}

TEST_CASE("whole-generator gradient check in double precision") {
    GeneratorConfig cfg = small_cfg();
    Generator<double> g(cfg);
    g.init(17);
    g.set_training(false);  // freeze batch statistics for clean differences

    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    nn::Tensor<double> x4(1, 4, 32, 32), rgb(1, 3, 32, 32), proj(1, 1, 32, 32);
    for (auto& v : x4.v) v = u(rng);
    for (auto& v : rgb.v) v = u(rng);
    for (auto& v : proj.v) v = u(rng) - 0.5;

    auto loss = [&]() {
        nn::Tensor<double> y = g.forward(x4, rgb);
        double s = 0;
        for (size_t i = 0; i < y.size(); ++i) s += y.v[i] * proj.v[i];
        return s;
    };
    loss();
    g.params().zero_grad();
    g.backward(proj);

    // A small step keeps the centered difference away from relu kinks.
    const double h = 1e-6;
    std::vector<std::string> probe_params = {
        "encoder.conv1.weight", "encoder.layer3.0.conv2.weight", "aspp.b2.conv.weight",
        "decoder.deconv.weight", "decoder.out.bias"};
    for (const auto& name : probe_params) {
        auto* p = g.params().find(name);
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
