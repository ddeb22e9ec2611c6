#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>
#include <random>

#include "alphagan/nn/adam.hpp"
#include "alphagan/nn/layers.hpp"
#include "alphagan/nn/tensor.hpp"

using namespace alphagan::nn;
using D = double;

namespace {

std::mt19937_64 g_rng(42);

Tensor<D> randn(int n, int c, int h, int w, double scale = 1.0) {
    std::normal_distribution<double> dist(0.0, scale);
    Tensor<D> t(n, c, h, w);
    for (auto& v : t.v) v = dist(g_rng);
    return t;
}

double project(const Tensor<D>& y, const Tensor<D>& r) {
    double s = 0;
    for (size_t i = 0; i < y.size(); ++i) s += y.v[i] * r.v[i];
    return s;
}

// Central finite differences against the analytic input gradient at a sample
// of coordinates.
void check_input_grad(Tensor<D>& x, const std::function<Tensor<D>(const Tensor<D>&)>& fwd,
                      const Tensor<D>& dx, const Tensor<D>& r, double h = 1e-5,
                      double tol = 1e-6, int probes = 24) {
    std::uniform_int_distribution<size_t> pick(0, x.size() - 1);
    for (int p = 0; p < probes; ++p) {
        size_t i = pick(g_rng);
        double keep = x.v[i];
        x.v[i] = keep + h;
        double lp = project(fwd(x), r);
        x.v[i] = keep - h;
        double lm = project(fwd(x), r);
        x.v[i] = keep;
        double fd = (lp - lm) / (2 * h);
        double scale = std::max({1.0, std::abs(fd), std::abs(dx.v[i])});
        CHECK(std::abs(fd - dx.v[i]) / scale <= tol);
    }
}

void check_param_grad(Param<D>& p, Tensor<D>& x,
                      const std::function<Tensor<D>(const Tensor<D>&)>& fwd, const Tensor<D>& r,
                      double h = 1e-5, double tol = 1e-6, int probes = 16) {
    std::uniform_int_distribution<size_t> pick(0, p.size() - 1);
    for (int q = 0; q < probes; ++q) {
        size_t i = pick(g_rng);
        double keep = p.value[i];
        p.value[i] = keep + h;
        double lp = project(fwd(x), r);
        p.value[i] = keep - h;
        double lm = project(fwd(x), r);
        p.value[i] = keep;
        double fd = (lp - lm) / (2 * h);
        double scale = std::max({1.0, std::abs(fd), std::abs(p.grad[i])});
        CHECK(std::abs(fd - p.grad[i]) / scale <= tol);
    }
}

}  // namespace

TEST_CASE("conv2d gradients, strided dilated biased") {
    Conv2d<D> conv(3, 4, 3, 2, 1, 2, true);
    conv.init(g_rng);
    Tensor<D> x = randn(2, 3, 9, 8);
    auto fwd = [&](const Tensor<D>& in) { return conv.forward(in); };
    Tensor<D> y = fwd(x);
    CHECK(y.h == conv_out_dim(9, 3, 2, 1, 2));
    Tensor<D> r = randn(y.n, y.c, y.h, y.w);
    conv.weight.grad.assign(conv.weight.size(), 0);
    conv.bias.grad.assign(conv.bias.size(), 0);
    fwd(x);
    Tensor<D> dx = conv.backward(r);
    check_input_grad(x, fwd, dx, r);
    check_param_grad(conv.weight, x, fwd, r);
    check_param_grad(conv.bias, x, fwd, r);
}

TEST_CASE("conv transpose gradients and output size") {
    ConvTranspose2d<D> dc(3, 2, 3, 2, 1, 1);
    dc.init(g_rng);
    Tensor<D> x = randn(2, 3, 5, 6);
    auto fwd = [&](const Tensor<D>& in) { return dc.forward(in); };
    Tensor<D> y = fwd(x);
    CHECK(y.h == 10);
    CHECK(y.w == 12);
    Tensor<D> r = randn(y.n, y.c, y.h, y.w);
    dc.weight.grad.assign(dc.weight.size(), 0);
    fwd(x);
    Tensor<D> dx = dc.backward(r);
    check_input_grad(x, fwd, dx, r);
    check_param_grad(dc.weight, x, fwd, r);
}

TEST_CASE("batchnorm training mode gradients and running stats") {
    BatchNorm2d<D> bn(3);
    bn.training = true;
    std::normal_distribution<double> nd(0.0, 1.0);
    for (auto& v : bn.gamma.value) v = 1.0 + 0.1 * nd(g_rng);
    for (auto& v : bn.beta.value) v = 0.1 * nd(g_rng);
    Tensor<D> x = randn(2, 3, 4, 5);
    auto fwd = [&](const Tensor<D>& in) { return bn.forward(in); };
    Tensor<D> y = fwd(x);
    // Per-channel output statistics are normalized to gamma/beta.
    size_t m = 2 * 4 * 5;
    for (int c = 0; c < 3; ++c) {
        double mean = 0, var = 0;
        for (int n = 0; n < 2; ++n)
            for (int i = 0; i < 20; ++i) mean += y.v[(n * 3 + c) * 20 + i];
        mean /= m;
        for (int n = 0; n < 2; ++n)
            for (int i = 0; i < 20; ++i) {
                double d = y.v[(n * 3 + c) * 20 + i] - mean;
                var += d * d;
            }
        var /= m;
        CHECK(mean == doctest::Approx(bn.beta.value[c]).epsilon(1e-8));
        CHECK(var == doctest::Approx(bn.gamma.value[c] * bn.gamma.value[c]).epsilon(1e-3));
    }
    Tensor<D> r = randn(y.n, y.c, y.h, y.w);
    bn.gamma.grad.assign(3, 0);
    bn.beta.grad.assign(3, 0);
    fwd(x);
    Tensor<D> dx = bn.backward(r);
    check_input_grad(x, fwd, dx, r, 1e-5, 1e-5);
    check_param_grad(bn.gamma, x, fwd, r, 1e-5, 1e-5);
    check_param_grad(bn.beta, x, fwd, r, 1e-5, 1e-5);
}

TEST_CASE("batchnorm eval mode uses running statistics") {
    BatchNorm2d<D> bn(2);
    bn.running_mean.value = {0.3, -0.2};
    bn.running_var.value = {0.5, 2.0};
    bn.training = false;
    Tensor<D> x = randn(1, 2, 3, 3);
    auto fwd = [&](const Tensor<D>& in) { return bn.forward(in); };
    Tensor<D> y = fwd(x);
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < 9; ++i) {
            double want = (x.v[c * 9 + i] - bn.running_mean.value[c]) /
                          std::sqrt(bn.running_var.value[c] + bn.eps);
            CHECK(y.v[c * 9 + i] == doctest::Approx(want).epsilon(1e-10));
        }
    Tensor<D> r = randn(1, 2, 3, 3);
    bn.gamma.grad.assign(2, 0);
    bn.beta.grad.assign(2, 0);
    fwd(x);
    Tensor<D> dx = bn.backward(r);
    check_input_grad(x, fwd, dx, r);
}

TEST_CASE("activation gradients") {
    Tensor<D> x = randn(2, 3, 4, 4);
    Tensor<D> r = randn(2, 3, 4, 4);

    ReLU<D> relu;
    auto f1 = [&](const Tensor<D>& in) { return relu.forward(in); };
    f1(x);
    check_input_grad(x, f1, relu.backward(r), r);

    LeakyReLU<D> lrelu;
    auto f2 = [&](const Tensor<D>& in) { return lrelu.forward(in); };
    f2(x);
    check_input_grad(x, f2, lrelu.backward(r), r);

    Sigmoid<D> sig;
    auto f3 = [&](const Tensor<D>& in) { return sig.forward(in); };
    f3(x);
    check_input_grad(x, f3, sig.backward(r), r);
}

TEST_CASE("maxpool/unpool round trip and gradients") {
    MaxPool2d<D> pool(3, 2, 1);
    Tensor<D> x = randn(2, 2, 7, 7);
    PoolIndices pi;
    Tensor<D> y = pool.forward(x, pi);
    CHECK(y.h == 4);
    CHECK(y.w == 4);

    MaxUnpool2d<D> unpool;
    Tensor<D> up = unpool.forward(y, pi);
    CHECK(up.h == 7);
    // Every pooled value reappears at its argmax position.
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < 2; ++c)
            for (int i = 0; i < 16; ++i) {
                int flat = pi.idx[(n * 2 + c) * 16 + i];
                CHECK(up.v[(n * 2 + c) * 49 + flat] == y.v[(n * 2 + c) * 16 + i]);
            }

    Tensor<D> r = randn(2, 2, 4, 4);
    auto fpool = [&](const Tensor<D>& in) {
        PoolIndices tmp;
        return pool.forward(in, tmp);
    };
    pool.forward(x, pi);
    check_input_grad(x, fpool, pool.backward(r), r);

    // Strictly increasing input gives every window a distinct argmax, so the
    // unpool scatter is injective and differentiable.
    Tensor<D> ramp(2, 2, 7, 7);
    for (size_t i = 0; i < ramp.v.size(); ++i) ramp.v[i] = D(i) * 0.01;
    PoolIndices pj;
    Tensor<D> yr = pool.forward(ramp, pj);
    Tensor<D> r2 = randn(2, 2, 7, 7);
    auto funpool = [&](const Tensor<D>& in) { return unpool.forward(in, pj); };
    funpool(yr);
    check_input_grad(yr, funpool, unpool.backward(r2), r2);
}

TEST_CASE("bilinear 2x upsample: exact values and gradients") {
    UpsampleBilinear2x<D> up;
    Tensor<D> x = randn(1, 2, 4, 5);
    auto fwd = [&](const Tensor<D>& in) { return up.forward(in); };
    Tensor<D> y = fwd(x);
    CHECK(y.h == 8);
    CHECK(y.w == 10);
    // Half-pixel mapping oracle at a few coordinates.
    for (int c = 0; c < 2; ++c)
        for (int oy : {0, 3, 7})
            for (int ox : {0, 4, 9}) {
                double sy = std::clamp((oy + 0.5) / 2 - 0.5, 0.0, 3.0);
                double sx = std::clamp((ox + 0.5) / 2 - 0.5, 0.0, 4.0);
                int y0 = int(sy), x0 = int(sx);
                int y1 = std::min(y0 + 1, 3), x1 = std::min(x0 + 1, 4);
                double fy = sy - y0, fx = sx - x0;
                double want = (1 - fy) * ((1 - fx) * x.at(0, c, y0, x0) + fx * x.at(0, c, y0, x1)) +
                              fy * ((1 - fx) * x.at(0, c, y1, x0) + fx * x.at(0, c, y1, x1));
                CHECK(y.at(0, c, oy, ox) == doctest::Approx(want).epsilon(1e-12));
            }
    Tensor<D> r = randn(1, 2, 8, 10);
    check_input_grad(x, fwd, up.backward(r), r);
}

TEST_CASE("global average pool and broadcast gradients") {
    GlobalAvgPool<D> gap;
    Tensor<D> x = randn(2, 3, 4, 4);
    auto f1 = [&](const Tensor<D>& in) { return gap.forward(in); };
    Tensor<D> y = f1(x);
    CHECK(y.h == 1);
    Tensor<D> r = randn(2, 3, 1, 1);
    check_input_grad(x, f1, gap.backward(r), r);

    Broadcast2d<D> bc;
    auto f2 = [&](const Tensor<D>& in) { return bc.forward(in, 5, 6); };
    Tensor<D> b = f2(y);
    CHECK(b.h == 5);
    Tensor<D> r2 = randn(2, 3, 5, 6);
    check_input_grad(y, f2, bc.backward(r2), r2);
}

TEST_CASE("concat and split are inverse") {
    Tensor<D> a = randn(2, 3, 4, 4), b = randn(2, 2, 4, 4);
    Tensor<D> cat = concat_channels<D>({&a, &b});
    CHECK(cat.c == 5);
    auto parts = split_channels(cat, {3, 2});
    CHECK(parts[0].v == a.v);
    CHECK(parts[1].v == b.v);
}

TEST_CASE("adam reference step") {
    // One parameter, constant gradient g: after the first step the update is
    // exactly -lr * g / (|g| + eps) by bias correction.
    Param<D> p;
    p.resize({1});
    p.value[0] = 1.0;
    p.grad[0] = 0.4;
    ParamRegistry<D> reg;
    reg.add("p", p);
    Adam<D> opt;
    opt.lr = 0.01;
    opt.step(reg);
    double want = 1.0 - 0.01 * 0.4 / (0.4 + opt.eps);
    CHECK(p.value[0] == doctest::Approx(want).epsilon(1e-10));
    CHECK(opt.t == 1);

    // Second step against an independent two-step oracle.
    p.grad[0] = -0.1;
    opt.step(reg);
    double m = 0.5 * (0.5 * 0.4) + 0.5 * -0.1;
    double v = 0.999 * (0.001 * 0.16) + 0.001 * 0.01;
    double mhat = m / (1 - 0.25), vhat = v / (1 - 0.999 * 0.999);
    double want2 = want - 0.01 * mhat / (std::sqrt(vhat) + opt.eps);
    CHECK(p.value[0] == doctest::Approx(want2).epsilon(1e-9));
}
