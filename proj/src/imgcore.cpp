#include "alphagan/imgcore.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

namespace alphagan {

namespace {

cv::Mat read_png(const std::string& path) {
    cv::Mat m = cv::imread(path, cv::IMREAD_UNCHANGED);
    if (m.empty())
        throw std::runtime_error("unsupported/corrupt image or missing file: " + path);
    if (m.rows < 1 || m.cols < 1)
        throw std::runtime_error("zero-sized image: " + path);
    int depth = m.depth();
    if (depth != CV_8U && depth != CV_16U)
        throw std::runtime_error("unsupported bit depth (want 8 or 16): " + path);
    return m;
}

inline float scale_of(const cv::Mat& m) {
    return m.depth() == CV_16U ? 65535.f : 255.f;
}

inline uint8_t to8bit(const cv::Mat& m, int y, int x, int c) {
    if (m.depth() == CV_16U) {
        const uint16_t* p = m.ptr<uint16_t>(y);
        return static_cast<uint8_t>(p[x * m.channels() + c] >> 8);
    }
    const uint8_t* p = m.ptr<uint8_t>(y);
    return p[x * m.channels() + c];
}

inline float unit_value(const cv::Mat& m, int y, int x, int c) {
    if (m.depth() == CV_16U) {
        const uint16_t* p = m.ptr<uint16_t>(y);
        return p[x * m.channels() + c] / 65535.f;
    }
    const uint8_t* p = m.ptr<uint8_t>(y);
    return p[x * m.channels() + c] / 255.f;
}

inline uint16_t quantize(float v, int bit_depth) {
    float maxv = bit_depth == 16 ? 65535.f : 255.f;
    float q = std::floor(v * maxv + 0.5f);  // round half up
    if (q < 0.f) q = 0.f;
    if (q > maxv) q = maxv;
    return static_cast<uint16_t>(q);
}

}  // namespace

size_t RegionMask::count() const {
    size_t n = 0;
    for (uint8_t b : bits) n += b;
    return n;
}

RegionMask fg_mask(const Trimap& t) {
    RegionMask m(t.height, t.width);
    for (size_t i = 0; i < t.labels.size(); ++i) m.bits[i] = t.labels[i] == TriLabel::Foreground;
    return m;
}

RegionMask bg_mask(const Trimap& t) {
    RegionMask m(t.height, t.width);
    for (size_t i = 0; i < t.labels.size(); ++i) m.bits[i] = t.labels[i] == TriLabel::Background;
    return m;
}

RegionMask unk_mask(const Trimap& t) {
    RegionMask m(t.height, t.width);
    for (size_t i = 0; i < t.labels.size(); ++i) m.bits[i] = t.labels[i] == TriLabel::Unknown;
    return m;
}

RgbImage load_rgb(const std::string& path) {
    cv::Mat m = read_png(path);
    int ch = m.channels();
    if (ch != 3 && ch != 4) {
        if (ch == 1) {
            // grayscale promoted to RGB
            RgbImage img(m.rows, m.cols);
            for (int y = 0; y < m.rows; ++y)
                for (int x = 0; x < m.cols; ++x) {
                    float v = unit_value(m, y, x, 0);
                    img.at(0, y, x) = img.at(1, y, x) = img.at(2, y, x) = v;
                }
            return img;
        }
        throw std::runtime_error("unsupported channel count: " + path);
    }
    if (ch == 4)
        std::fprintf(stderr, "warning: ignoring alpha channel of %s\n", path.c_str());
    // OpenCV loads BGR(A)
    RgbImage img(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) {
            img.at(0, y, x) = unit_value(m, y, x, 2);
            img.at(1, y, x) = unit_value(m, y, x, 1);
            img.at(2, y, x) = unit_value(m, y, x, 0);
        }
    return img;
}

AlphaMatte load_alpha(const std::string& path) {
    cv::Mat m = read_png(path);
    int ch = m.channels();
    if (ch != 1 && ch != 3)
        throw std::runtime_error("alpha must be 1-channel or equal-channel RGB: " + path);
    AlphaMatte a(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) {
            float v = unit_value(m, y, x, 0);
            if (ch == 3) {
                float g = unit_value(m, y, x, 1), r = unit_value(m, y, x, 2);
                if (g != v || r != v)
                    throw std::runtime_error("multi-channel image with unequal channels is not an alpha: " + path);
            }
            a.at(y, x) = v;
        }
    return a;
}

void save_rgb(const RgbImage& img, const std::string& path, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16) throw std::runtime_error("bit_depth must be 8 or 16");
    int type = bit_depth == 16 ? CV_16UC3 : CV_8UC3;
    cv::Mat m(img.height, img.width, type);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < 3; ++c) {
                uint16_t q = quantize(img.at(2 - c, y, x), bit_depth);  // store BGR
                if (bit_depth == 16)
                    m.ptr<uint16_t>(y)[x * 3 + c] = q;
                else
                    m.ptr<uint8_t>(y)[x * 3 + c] = static_cast<uint8_t>(q);
            }
    if (!cv::imwrite(path, m)) throw std::runtime_error("failed to write " + path);
}

void save_alpha(const AlphaMatte& matte, const std::string& path, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16) throw std::runtime_error("bit_depth must be 8 or 16");
    int type = bit_depth == 16 ? CV_16UC1 : CV_8UC1;
    cv::Mat m(matte.height, matte.width, type);
    for (int y = 0; y < matte.height; ++y)
        for (int x = 0; x < matte.width; ++x) {
            uint16_t q = quantize(matte.at(y, x), bit_depth);
            if (bit_depth == 16)
                m.ptr<uint16_t>(y)[x] = q;
            else
                m.ptr<uint8_t>(y)[x] = static_cast<uint8_t>(q);
        }
    if (!cv::imwrite(path, m)) throw std::runtime_error("failed to write " + path);
}

Trimap load_trimap(const std::string& path) {
    cv::Mat m = read_png(path);
    Trimap t(m.rows, m.cols);
    for (int y = 0; y < m.rows; ++y)
        for (int x = 0; x < m.cols; ++x) {
            int v = to8bit(m, y, x, 0);
            if (v <= 8)
                t.at(y, x) = TriLabel::Background;
            else if (v >= 120 && v <= 136)
                t.at(y, x) = TriLabel::Unknown;
            else if (v >= 247)
                t.at(y, x) = TriLabel::Foreground;
            else
                throw std::runtime_error("not a trimap (pixel value " + std::to_string(v) + "): " + path);
        }
    return t;
}

void save_trimap(const Trimap& t, const std::string& path) {
    cv::Mat m(t.height, t.width, CV_8UC1);
    for (int y = 0; y < t.height; ++y)
        for (int x = 0; x < t.width; ++x) {
            uint8_t v = 0;
            switch (t.at(y, x)) {
                case TriLabel::Background: v = 0; break;
                case TriLabel::Unknown: v = 128; break;
                case TriLabel::Foreground: v = 255; break;
            }
            m.ptr<uint8_t>(y)[x] = v;
        }
    if (!cv::imwrite(path, m)) throw std::runtime_error("failed to write " + path);
}

AlphaMatte trimap_plane(const Trimap& t) {
    AlphaMatte p(t.height, t.width);
    for (size_t i = 0; i < t.labels.size(); ++i) {
        switch (t.labels[i]) {
            case TriLabel::Background: p.data[i] = 0.f; break;
            case TriLabel::Unknown: p.data[i] = 0.5f; break;
            case TriLabel::Foreground: p.data[i] = 1.f; break;
        }
    }
    return p;
}

}  // namespace alphagan
