#pragma once

#include <cassert>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

namespace alphagan::nn {

// NCHW dense tensor.
template <typename T>
struct Tensor {
    int n = 0, c = 0, h = 0, w = 0;
    std::vector<T> v;

    Tensor() = default;
    Tensor(int n_, int c_, int h_, int w_)
        : n(n_), c(c_), h(h_), w(w_), v(static_cast<size_t>(n_) * c_ * h_ * w_, T(0)) {}

    size_t size() const { return v.size(); }
    T* data() { return v.data(); }
    const T* data() const { return v.data(); }

    T& at(int in, int ic, int iy, int ix) {
        return v[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
    }
    T at(int in, int ic, int iy, int ix) const {
        return v[((static_cast<size_t>(in) * c + ic) * h + iy) * w + ix];
    }
    bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
    void zero() { std::fill(v.begin(), v.end(), T(0)); }
};

// A named parameter (or non-trainable buffer such as running statistics).
template <typename T>
struct Param {
    std::string name;  // filled during registration
    std::vector<int> shape;
    std::vector<T> value;
    std::vector<T> grad;
    bool trainable = true;

    void resize(std::vector<int> s) {
        shape = std::move(s);
        size_t n = 1;
        for (int d : shape) n *= d;
        value.assign(n, T(0));
        grad.assign(n, T(0));
    }
    size_t size() const { return value.size(); }
};

template <typename T>
struct ParamRegistry {
    std::vector<Param<T>*> items;

    void add(const std::string& name, Param<T>& p) {
        p.name = name;
        items.push_back(&p);
    }
    Param<T>* find(const std::string& name) {
        for (auto* p : items)
            if (p->name == name) return p;
        return nullptr;
    }
    void zero_grad() {
        for (auto* p : items) std::fill(p->grad.begin(), p->grad.end(), T(0));
    }
};

}  // namespace alphagan::nn
