#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "alphagan/nn/tensor.hpp"

namespace alphagan::nn {

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using CMatMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

inline int conv_out_dim(int in, int k, int stride, int pad, int dil) {
    return (in + 2 * pad - dil * (k - 1) - 1) / stride + 1;
}

// col is (C*k*k) x (oh*ow), row-major.
template <typename T>
void im2col(const T* src, int C, int H, int W, int k, int stride, int pad, int dil,
            int oh, int ow, T* col) {
    for (int c = 0; c < C; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                T* row = col + (static_cast<size_t>(c) * k * k + ky * k + kx) * oh * ow;
                const T* plane = src + static_cast<size_t>(c) * H * W;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride - pad + ky * dil;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride - pad + kx * dil;
                        row[oy * ow + ox] =
                            (iy >= 0 && iy < H && ix >= 0 && ix < W) ? plane[iy * W + ix] : T(0);
                    }
                }
            }
}

// Scatter-add transpose of im2col.
template <typename T>
void col2im(const T* col, int C, int H, int W, int k, int stride, int pad, int dil,
            int oh, int ow, T* dst) {
    for (int c = 0; c < C; ++c)
        for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
                const T* row = col + (static_cast<size_t>(c) * k * k + ky * k + kx) * oh * ow;
                T* plane = dst + static_cast<size_t>(c) * H * W;
                for (int oy = 0; oy < oh; ++oy) {
                    int iy = oy * stride - pad + ky * dil;
                    if (iy < 0 || iy >= H) continue;
                    for (int ox = 0; ox < ow; ++ox) {
                        int ix = ox * stride - pad + kx * dil;
                        if (ix >= 0 && ix < W) plane[iy * W + ix] += row[oy * ow + ox];
                    }
                }
            }
}

template <typename T>
void fanin_uniform(Param<T>& p, size_t fan_in, std::mt19937_64& rng) {
    double bound = std::sqrt(6.0 / static_cast<double>(std::max<size_t>(fan_in, 1)));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : p.value) v = static_cast<T>(dist(rng));
}

template <typename T>
class Conv2d {
public:
    int in_ch, out_ch, k, stride, pad, dil;
    bool has_bias;
    Param<T> weight, bias;

    Conv2d(int in, int out, int k_, int stride_ = 1, int pad_ = 0, int dil_ = 1, bool bias_ = false)
        : in_ch(in), out_ch(out), k(k_), stride(stride_), pad(pad_), dil(dil_), has_bias(bias_) {
        weight.resize({out_ch, in_ch, k, k});
        if (has_bias) bias.resize({out_ch});
    }

    void reg(ParamRegistry<T>& r, const std::string& prefix) {
        r.add(prefix + ".weight", weight);
        if (has_bias) r.add(prefix + ".bias", bias);
    }

    void init(std::mt19937_64& rng) {
        fanin_uniform(weight, static_cast<size_t>(in_ch) * k * k, rng);
        if (has_bias) std::fill(bias.value.begin(), bias.value.end(), T(0));
    }

    Tensor<T> forward(const Tensor<T>& x) {
        if (x.c != in_ch) throw std::runtime_error("conv channel mismatch");
        x_ = x;
        int oh = conv_out_dim(x.h, k, stride, pad, dil);
        int ow = conv_out_dim(x.w, k, stride, pad, dil);
        Tensor<T> y(x.n, out_ch, oh, ow);
        int K = in_ch * k * k, L = oh * ow;
        col_.resize(static_cast<size_t>(K) * L);
        CMatMap<T> W(weight.value.data(), out_ch, K);
        for (int b = 0; b < x.n; ++b) {
            im2col(x.data() + static_cast<size_t>(b) * in_ch * x.h * x.w, in_ch, x.h, x.w,
                   k, stride, pad, dil, oh, ow, col_.data());
            CMatMap<T> C(col_.data(), K, L);
            MatMap<T> Y(y.data() + static_cast<size_t>(b) * out_ch * L, out_ch, L);
            Y.noalias() = W * C;
            if (has_bias)
                for (int oc = 0; oc < out_ch; ++oc) Y.row(oc).array() += bias.value[oc];
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const Tensor<T>& x = x_;
        int oh = dy.h, ow = dy.w;
        int K = in_ch * k * k, L = oh * ow;
        Tensor<T> dx(x.n, in_ch, x.h, x.w);
        col_.resize(static_cast<size_t>(K) * L);
        colgrad_.resize(static_cast<size_t>(K) * L);
        CMatMap<T> W(weight.value.data(), out_ch, K);
        MatMap<T> dW(weight.grad.data(), out_ch, K);
        for (int b = 0; b < x.n; ++b) {
            CMatMap<T> DY(dy.data() + static_cast<size_t>(b) * out_ch * L, out_ch, L);
            im2col(x.data() + static_cast<size_t>(b) * in_ch * x.h * x.w, in_ch, x.h, x.w,
                   k, stride, pad, dil, oh, ow, col_.data());
            CMatMap<T> C(col_.data(), K, L);
            dW.noalias() += DY * C.transpose();
            MatMap<T> CG(colgrad_.data(), K, L);
            CG.noalias() = W.transpose() * DY;
            col2im(colgrad_.data(), in_ch, x.h, x.w, k, stride, pad, dil, oh, ow,
                   dx.data() + static_cast<size_t>(b) * in_ch * x.h * x.w);
            if (has_bias)
                for (int oc = 0; oc < out_ch; ++oc) bias.grad[oc] += DY.row(oc).sum();
        }
        return dx;
    }

private:
    Tensor<T> x_;
    std::vector<T> col_, colgrad_;
};

// Fractionally-strided convolution; weight layout (in_ch, out_ch, k, k).
template <typename T>
class ConvTranspose2d {
public:
    int in_ch, out_ch, k, stride, pad, outpad;
    Param<T> weight;

    ConvTranspose2d(int in, int out, int k_, int stride_, int pad_, int outpad_)
        : in_ch(in), out_ch(out), k(k_), stride(stride_), pad(pad_), outpad(outpad_) {
        weight.resize({in_ch, out_ch, k, k});
    }

    void reg(ParamRegistry<T>& r, const std::string& prefix) { r.add(prefix + ".weight", weight); }
    void init(std::mt19937_64& rng) {
        fanin_uniform(weight, static_cast<size_t>(in_ch) * k * k, rng);
    }

    int out_dim(int in) const { return (in - 1) * stride - 2 * pad + k + outpad; }

    Tensor<T> forward(const Tensor<T>& x) {
        if (x.c != in_ch) throw std::runtime_error("convT channel mismatch");
        x_ = x;
        int oh = out_dim(x.h), ow = out_dim(x.w);
        Tensor<T> y(x.n, out_ch, oh, ow);
        int K = out_ch * k * k, L = x.h * x.w;
        col_.resize(static_cast<size_t>(K) * L);
        CMatMap<T> W(weight.value.data(), in_ch, K);
        for (int b = 0; b < x.n; ++b) {
            CMatMap<T> X(x.data() + static_cast<size_t>(b) * in_ch * L, in_ch, L);
            MatMap<T> C(col_.data(), K, L);
            C.noalias() = W.transpose() * X;
            col2im(col_.data(), out_ch, oh, ow, k, stride, pad, 1, x.h, x.w,
                   y.data() + static_cast<size_t>(b) * out_ch * oh * ow);
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const Tensor<T>& x = x_;
        int K = out_ch * k * k, L = x.h * x.w;
        Tensor<T> dx(x.n, in_ch, x.h, x.w);
        col_.resize(static_cast<size_t>(K) * L);
        CMatMap<T> W(weight.value.data(), in_ch, K);
        MatMap<T> dW(weight.grad.data(), in_ch, K);
        for (int b = 0; b < x.n; ++b) {
            im2col(dy.data() + static_cast<size_t>(b) * out_ch * dy.h * dy.w, out_ch, dy.h, dy.w,
                   k, stride, pad, 1, x.h, x.w, col_.data());
            CMatMap<T> C(col_.data(), K, L);
            CMatMap<T> X(x.data() + static_cast<size_t>(b) * in_ch * L, in_ch, L);
            dW.noalias() += X * C.transpose();
            MatMap<T> DX(dx.data() + static_cast<size_t>(b) * in_ch * L, in_ch, L);
            DX.noalias() = W * C;
        }
        return dx;
    }

private:
    Tensor<T> x_;
    std::vector<T> col_;
};

template <typename T>
class BatchNorm2d {
public:
    int ch;
    double momentum = 0.1, eps = 1e-5;
    bool training = false;
    Param<T> gamma, beta, running_mean, running_var;

    explicit BatchNorm2d(int ch_) : ch(ch_) {
        gamma.resize({ch});
        beta.resize({ch});
        running_mean.resize({ch});
        running_var.resize({ch});
        running_mean.trainable = false;
        running_var.trainable = false;
        std::fill(gamma.value.begin(), gamma.value.end(), T(1));
        std::fill(running_var.value.begin(), running_var.value.end(), T(1));
    }

    void reg(ParamRegistry<T>& r, const std::string& prefix) {
        r.add(prefix + ".weight", gamma);
        r.add(prefix + ".bias", beta);
        r.add(prefix + ".running_mean", running_mean);
        r.add(prefix + ".running_var", running_var);
    }

    Tensor<T> forward(const Tensor<T>& x) {
        if (x.c != ch) throw std::runtime_error("bn channel mismatch");
        size_t m = static_cast<size_t>(x.n) * x.h * x.w;
        xhat_ = Tensor<T>(x.n, x.c, x.h, x.w);
        invstd_.assign(ch, T(0));
        used_training_ = training;
        Tensor<T> y(x.n, x.c, x.h, x.w);
        size_t plane = static_cast<size_t>(x.h) * x.w;
        for (int c = 0; c < ch; ++c) {
            double mean, var;
            if (training) {
                double sum = 0, sumsq = 0;
                for (int b = 0; b < x.n; ++b) {
                    const T* p = x.data() + (static_cast<size_t>(b) * ch + c) * plane;
                    for (size_t i = 0; i < plane; ++i) { sum += p[i]; sumsq += double(p[i]) * p[i]; }
                }
                mean = sum / m;
                var = sumsq / m - mean * mean;
                if (var < 0) var = 0;
                double unbiased = m > 1 ? var * m / double(m - 1) : var;
                running_mean.value[c] = T((1 - momentum) * running_mean.value[c] + momentum * mean);
                running_var.value[c] = T((1 - momentum) * running_var.value[c] + momentum * unbiased);
            } else {
                mean = running_mean.value[c];
                var = running_var.value[c];
            }
            T istd = T(1.0 / std::sqrt(var + eps));
            invstd_[c] = istd;
            for (int b = 0; b < x.n; ++b) {
                const T* p = x.data() + (static_cast<size_t>(b) * ch + c) * plane;
                T* xh = xhat_.data() + (static_cast<size_t>(b) * ch + c) * plane;
                T* py = y.data() + (static_cast<size_t>(b) * ch + c) * plane;
                for (size_t i = 0; i < plane; ++i) {
                    xh[i] = (p[i] - T(mean)) * istd;
                    py[i] = gamma.value[c] * xh[i] + beta.value[c];
                }
            }
        }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        size_t m = static_cast<size_t>(dy.n) * dy.h * dy.w;
        size_t plane = static_cast<size_t>(dy.h) * dy.w;
        Tensor<T> dx(dy.n, dy.c, dy.h, dy.w);
        for (int c = 0; c < ch; ++c) {
            double sum_dy = 0, sum_dy_xhat = 0;
            for (int b = 0; b < dy.n; ++b) {
                const T* pdy = dy.data() + (static_cast<size_t>(b) * ch + c) * plane;
                const T* xh = xhat_.data() + (static_cast<size_t>(b) * ch + c) * plane;
                for (size_t i = 0; i < plane; ++i) {
                    sum_dy += pdy[i];
                    sum_dy_xhat += double(pdy[i]) * xh[i];
                }
            }
            gamma.grad[c] += T(sum_dy_xhat);
            beta.grad[c] += T(sum_dy);
            T g = gamma.value[c], istd = invstd_[c];
            for (int b = 0; b < dy.n; ++b) {
                const T* pdy = dy.data() + (static_cast<size_t>(b) * ch + c) * plane;
                const T* xh = xhat_.data() + (static_cast<size_t>(b) * ch + c) * plane;
                T* pdx = dx.data() + (static_cast<size_t>(b) * ch + c) * plane;
                if (used_training_) {
                    for (size_t i = 0; i < plane; ++i)
                        pdx[i] = T(double(g) * istd / double(m) *
                                   (double(m) * pdy[i] - sum_dy - double(xh[i]) * sum_dy_xhat));
                } else {
                    for (size_t i = 0; i < plane; ++i) pdx[i] = g * istd * pdy[i];
                }
            }
        }
        return dx;
    }

private:
    Tensor<T> xhat_;
    std::vector<T> invstd_;
    bool used_training_ = false;
};

template <typename T>
class ReLU {
public:
    Tensor<T> forward(const Tensor<T>& x) {
        mask_.assign(x.size(), 0);
        Tensor<T> y = x;
        for (size_t i = 0; i < x.size(); ++i)
            if (x.v[i] > T(0)) mask_[i] = 1; else y.v[i] = T(0);
        return y;
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx = dy;
        for (size_t i = 0; i < dy.size(); ++i)
            if (!mask_[i]) dx.v[i] = T(0);
        return dx;
    }

private:
    std::vector<uint8_t> mask_;
};

template <typename T>
class LeakyReLU {
public:
    explicit LeakyReLU(double slope = 0.2) : slope_(slope) {}
    Tensor<T> forward(const Tensor<T>& x) {
        x_ = x;
        Tensor<T> y = x;
        for (auto& v : y.v)
            if (v < T(0)) v *= T(slope_);
        return y;
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx = dy;
        for (size_t i = 0; i < dy.size(); ++i)
            if (x_.v[i] < T(0)) dx.v[i] *= T(slope_);
        return dx;
    }

private:
    double slope_;
    Tensor<T> x_;
};

template <typename T>
class Sigmoid {
public:
    Tensor<T> forward(const Tensor<T>& x) {
        y_ = x;
        for (auto& v : y_.v) v = T(1) / (T(1) + std::exp(-v));
        return y_;
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx = dy;
        for (size_t i = 0; i < dy.size(); ++i) dx.v[i] *= y_.v[i] * (T(1) - y_.v[i]);
        return dx;
    }

private:
    Tensor<T> y_;
};

// Indices map each pooled element to a flat (y*W+x) position in its input plane.
struct PoolIndices {
    int in_h = 0, in_w = 0;
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<int> idx;
};

template <typename T>
class MaxPool2d {
public:
    int k, stride, pad;
    MaxPool2d(int k_, int stride_, int pad_) : k(k_), stride(stride_), pad(pad_) {}

    Tensor<T> forward(const Tensor<T>& x, PoolIndices& out_idx) {
        int oh = conv_out_dim(x.h, k, stride, pad, 1);
        int ow = conv_out_dim(x.w, k, stride, pad, 1);
        Tensor<T> y(x.n, x.c, oh, ow);
        out_idx = PoolIndices{x.h, x.w, x.n, x.c, oh, ow, {}};
        out_idx.idx.assign(y.size(), -1);
        size_t plane = static_cast<size_t>(x.h) * x.w;
        size_t oplane = static_cast<size_t>(oh) * ow;
        for (int b = 0; b < x.n; ++b)
            for (int c = 0; c < x.c; ++c) {
                const T* src = x.data() + (static_cast<size_t>(b) * x.c + c) * plane;
                T* dst = y.data() + (static_cast<size_t>(b) * x.c + c) * oplane;
                int* id = out_idx.idx.data() + (static_cast<size_t>(b) * x.c + c) * oplane;
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) {
                        T best = -std::numeric_limits<T>::infinity();
                        int bi = -1;
                        for (int ky = 0; ky < k; ++ky) {
                            int iy = oy * stride - pad + ky;
                            if (iy < 0 || iy >= x.h) continue;
                            for (int kx = 0; kx < k; ++kx) {
                                int ix = ox * stride - pad + kx;
                                if (ix < 0 || ix >= x.w) continue;
                                T v = src[iy * x.w + ix];
                                if (v > best) { best = v; bi = iy * x.w + ix; }
                            }
                        }
                        dst[oy * ow + ox] = best;
                        id[oy * ow + ox] = bi;
                    }
            }
        saved_ = out_idx;
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const PoolIndices& pi = saved_;
        Tensor<T> dx(pi.n, pi.c, pi.in_h, pi.in_w);
        size_t plane = static_cast<size_t>(pi.in_h) * pi.in_w;
        size_t oplane = static_cast<size_t>(pi.h) * pi.w;
        for (int b = 0; b < pi.n; ++b)
            for (int c = 0; c < pi.c; ++c) {
                const T* pdy = dy.data() + (static_cast<size_t>(b) * pi.c + c) * oplane;
                const int* id = pi.idx.data() + (static_cast<size_t>(b) * pi.c + c) * oplane;
                T* pdx = dx.data() + (static_cast<size_t>(b) * pi.c + c) * plane;
                for (size_t i = 0; i < oplane; ++i)
                    if (id[i] >= 0) pdx[id[i]] += pdy[i];
            }
        return dx;
    }

private:
    PoolIndices saved_;
};

// Places each value at its recorded argmax position; zeros elsewhere.
template <typename T>
class MaxUnpool2d {
public:
    Tensor<T> forward(const Tensor<T>& x, const PoolIndices& pi) {
        if (x.n != pi.n || x.c != pi.c || x.h != pi.h || x.w != pi.w)
            throw std::runtime_error("unpool shape mismatch with saved indices");
        saved_ = pi;
        Tensor<T> y(x.n, x.c, pi.in_h, pi.in_w);
        size_t plane = static_cast<size_t>(pi.in_h) * pi.in_w;
        size_t oplane = static_cast<size_t>(pi.h) * pi.w;
        for (int b = 0; b < x.n; ++b)
            for (int c = 0; c < x.c; ++c) {
                const T* src = x.data() + (static_cast<size_t>(b) * x.c + c) * oplane;
                const int* id = pi.idx.data() + (static_cast<size_t>(b) * x.c + c) * oplane;
                T* dst = y.data() + (static_cast<size_t>(b) * x.c + c) * plane;
                for (size_t i = 0; i < oplane; ++i)
                    if (id[i] >= 0) dst[id[i]] = src[i];
            }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        const PoolIndices& pi = saved_;
        Tensor<T> dx(pi.n, pi.c, pi.h, pi.w);
        size_t plane = static_cast<size_t>(pi.in_h) * pi.in_w;
        size_t oplane = static_cast<size_t>(pi.h) * pi.w;
        // Overlapping pool windows can share an argmax; the forward scatter
        // keeps the last writer, so only that element receives the gradient.
        std::vector<int> winner(plane);
        for (int b = 0; b < pi.n; ++b)
            for (int c = 0; c < pi.c; ++c) {
                const T* pdy = dy.data() + (static_cast<size_t>(b) * pi.c + c) * plane;
                const int* id = pi.idx.data() + (static_cast<size_t>(b) * pi.c + c) * oplane;
                T* pdx = dx.data() + (static_cast<size_t>(b) * pi.c + c) * oplane;
                std::fill(winner.begin(), winner.end(), -1);
                for (size_t i = 0; i < oplane; ++i)
                    if (id[i] >= 0) winner[id[i]] = int(i);
                for (size_t i = 0; i < oplane; ++i)
                    if (id[i] >= 0 && winner[id[i]] == int(i)) pdx[i] = pdy[id[i]];
            }
        return dx;
    }

private:
    PoolIndices saved_;
};

// Factor-2 bilinear upsampling, half-pixel-centered sampling.
template <typename T>
class UpsampleBilinear2x {
public:
    Tensor<T> forward(const Tensor<T>& x) {
        in_h_ = x.h; in_w_ = x.w; n_ = x.n; c_ = x.c;
        int oh = x.h * 2, ow = x.w * 2;
        Tensor<T> y(x.n, x.c, oh, ow);
        size_t plane = static_cast<size_t>(x.h) * x.w;
        size_t oplane = static_cast<size_t>(oh) * ow;
        for (int b = 0; b < x.n; ++b)
            for (int c = 0; c < x.c; ++c) {
                const T* src = x.data() + (static_cast<size_t>(b) * x.c + c) * plane;
                T* dst = y.data() + (static_cast<size_t>(b) * x.c + c) * oplane;
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) {
                        auto [y0, y1, fy] = coords(oy, x.h);
                        auto [x0, x1, fx] = coords(ox, x.w);
                        dst[oy * ow + ox] =
                            T((1 - fy) * ((1 - fx) * src[y0 * x.w + x0] + fx * src[y0 * x.w + x1]) +
                              fy * ((1 - fx) * src[y1 * x.w + x0] + fx * src[y1 * x.w + x1]));
                    }
            }
        return y;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx(n_, c_, in_h_, in_w_);
        int oh = in_h_ * 2, ow = in_w_ * 2;
        size_t plane = static_cast<size_t>(in_h_) * in_w_;
        size_t oplane = static_cast<size_t>(oh) * ow;
        for (int b = 0; b < n_; ++b)
            for (int c = 0; c < c_; ++c) {
                const T* pdy = dy.data() + (static_cast<size_t>(b) * c_ + c) * oplane;
                T* pdx = dx.data() + (static_cast<size_t>(b) * c_ + c) * plane;
                for (int oy = 0; oy < oh; ++oy)
                    for (int ox = 0; ox < ow; ++ox) {
                        auto [y0, y1, fy] = coords(oy, in_h_);
                        auto [x0, x1, fx] = coords(ox, in_w_);
                        T g = pdy[oy * ow + ox];
                        pdx[y0 * in_w_ + x0] += T((1 - fy) * (1 - fx)) * g;
                        pdx[y0 * in_w_ + x1] += T((1 - fy) * fx) * g;
                        pdx[y1 * in_w_ + x0] += T(fy * (1 - fx)) * g;
                        pdx[y1 * in_w_ + x1] += T(fy * fx) * g;
                    }
            }
        return dx;
    }

private:
    static std::tuple<int, int, double> coords(int o, int in) {
        double s = (o + 0.5) / 2.0 - 0.5;
        if (s < 0) s = 0;
        if (s > in - 1) s = in - 1;
        int i0 = static_cast<int>(std::floor(s));
        int i1 = std::min(i0 + 1, in - 1);
        return {i0, i1, s - i0};
    }
    int in_h_ = 0, in_w_ = 0, n_ = 0, c_ = 0;
};

template <typename T>
class GlobalAvgPool {
public:
    Tensor<T> forward(const Tensor<T>& x) {
        h_ = x.h; w_ = x.w;
        Tensor<T> y(x.n, x.c, 1, 1);
        size_t plane = static_cast<size_t>(x.h) * x.w;
        for (int b = 0; b < x.n; ++b)
            for (int c = 0; c < x.c; ++c) {
                const T* p = x.data() + (static_cast<size_t>(b) * x.c + c) * plane;
                double s = 0;
                for (size_t i = 0; i < plane; ++i) s += p[i];
                y.at(b, c, 0, 0) = T(s / plane);
            }
        return y;
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx(dy.n, dy.c, h_, w_);
        size_t plane = static_cast<size_t>(h_) * w_;
        for (int b = 0; b < dy.n; ++b)
            for (int c = 0; c < dy.c; ++c) {
                T g = dy.at(b, c, 0, 0) / T(plane);
                T* p = dx.data() + (static_cast<size_t>(b) * dy.c + c) * plane;
                for (size_t i = 0; i < plane; ++i) p[i] = g;
            }
        return dx;
    }

private:
    int h_ = 0, w_ = 0;
};

// Broadcast of a 1x1 map back to (h, w); bilinear interpolation of a constant.
template <typename T>
class Broadcast2d {
public:
    Tensor<T> forward(const Tensor<T>& x, int h, int w) {
        h_ = h; w_ = w;
        Tensor<T> y(x.n, x.c, h, w);
        for (int b = 0; b < x.n; ++b)
            for (int c = 0; c < x.c; ++c) {
                T v = x.at(b, c, 0, 0);
                T* p = y.data() + (static_cast<size_t>(b) * x.c + c) * static_cast<size_t>(h) * w;
                std::fill(p, p + static_cast<size_t>(h) * w, v);
            }
        return y;
    }
    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> dx(dy.n, dy.c, 1, 1);
        size_t plane = static_cast<size_t>(h_) * w_;
        for (int b = 0; b < dy.n; ++b)
            for (int c = 0; c < dy.c; ++c) {
                const T* p = dy.data() + (static_cast<size_t>(b) * dy.c + c) * plane;
                double s = 0;
                for (size_t i = 0; i < plane; ++i) s += p[i];
                dx.at(b, c, 0, 0) = T(s);
            }
        return dx;
    }

private:
    int h_ = 0, w_ = 0;
};

template <typename T>
Tensor<T> concat_channels(const std::vector<const Tensor<T>*>& parts) {
    int n = parts[0]->n, h = parts[0]->h, w = parts[0]->w, c = 0;
    for (auto* p : parts) {
        if (p->n != n || p->h != h || p->w != w)
            throw std::runtime_error("concat spatial mismatch");
        c += p->c;
    }
    Tensor<T> y(n, c, h, w);
    size_t plane = static_cast<size_t>(h) * w;
    for (int b = 0; b < n; ++b) {
        size_t off = 0;
        for (auto* p : parts) {
            std::copy(p->data() + static_cast<size_t>(b) * p->c * plane,
                      p->data() + static_cast<size_t>(b + 1) * p->c * plane,
                      y.data() + (static_cast<size_t>(b) * c) * plane + off);
            off += static_cast<size_t>(p->c) * plane;
        }
    }
    return y;
}

template <typename T>
std::vector<Tensor<T>> split_channels(const Tensor<T>& dy, const std::vector<int>& sizes) {
    std::vector<Tensor<T>> out;
    size_t plane = static_cast<size_t>(dy.h) * dy.w;
    int c0 = 0;
    for (int sc : sizes) {
        Tensor<T> t(dy.n, sc, dy.h, dy.w);
        for (int b = 0; b < dy.n; ++b)
            std::copy(dy.data() + (static_cast<size_t>(b) * dy.c + c0) * plane,
                      dy.data() + (static_cast<size_t>(b) * dy.c + c0 + sc) * plane,
                      t.data() + static_cast<size_t>(b) * sc * plane);
        out.push_back(std::move(t));
        c0 += sc;
    }
    return out;
}

}  // namespace alphagan::nn
