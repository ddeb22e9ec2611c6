#include "alphagan/datapipe.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace alphagan {

namespace {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

void check_dims(int h1, int w1, int h2, int w2, const char* what) {
    if (h1 != h2 || w1 != w2)
        throw std::runtime_error(std::string("dimension mismatch in ") + what);
}

inline float clamp01(float v) { return v < 0.f ? 0.f : (v > 1.f ? 1.f : v); }

// Bilinear sample with out-of-bounds reads returning 0.
float sample_zero(const float* plane, int h, int w, double sy, double sx) {
    int y0 = static_cast<int>(std::floor(sy));
    int x0 = static_cast<int>(std::floor(sx));
    double fy = sy - y0, fx = sx - x0;
    auto px = [&](int y, int x) -> double {
        if (y < 0 || y >= h || x < 0 || x >= w) return 0.0;
        return plane[static_cast<size_t>(y) * w + x];
    };
    return static_cast<float>((1 - fy) * ((1 - fx) * px(y0, x0) + fx * px(y0, x0 + 1)) +
                              fy * ((1 - fx) * px(y0 + 1, x0) + fx * px(y0 + 1, x0 + 1)));
}

void rotate_plane(const float* src, float* dst, int h, int w, double degrees) {
    double rad = degrees * M_PI / 180.0;
    double c = std::cos(rad), s = std::sin(rad);
    double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            // inverse rotation about the center
            double dy = y - cy, dx = x - cx;
            double sy = cy + c * dy + s * dx;
            double sx = cx - s * dy + c * dx;
            dst[static_cast<size_t>(y) * w + x] = sample_zero(src, h, w, sy, sx);
        }
}

// k x k square dilation, window rows [i-lo, i+hi] with lo=(k-1)/2, hi=k/2.
// Separable two-pass running max.
std::vector<uint8_t> dilate_square(const std::vector<uint8_t>& m, int h, int w, int k) {
    int lo = (k - 1) / 2, hi = k / 2;
    std::vector<uint8_t> tmp(m.size(), 0), out(m.size(), 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            uint8_t v = 0;
            for (int dx = -lo; dx <= hi && !v; ++dx) {
                int xx = x + dx;
                if (xx >= 0 && xx < w) v = m[static_cast<size_t>(y) * w + xx];
            }
            tmp[static_cast<size_t>(y) * w + x] = v;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            uint8_t v = 0;
            for (int dy = -lo; dy <= hi && !v; ++dy) {
                int yy = y + dy;
                if (yy >= 0 && yy < h) v = tmp[static_cast<size_t>(yy) * w + x];
            }
            out[static_cast<size_t>(y) * w + x] = v;
        }
    return out;
}

cv::Mat plane_mat(const float* data, int h, int w) {
    return cv::Mat(h, w, CV_32F, const_cast<float*>(data));
}

std::vector<std::string> png_stems(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
    std::vector<std::string> stems;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png")
            stems.push_back(e.path().stem().string());
    std::sort(stems.begin(), stems.end());
    return stems;
}

}  // namespace

void AugmentConfig::validate() const {
    if (dilation_kmin < 1 || dilation_kmin > dilation_kmax)
        throw std::runtime_error("invalid dilation kernel range");
    if (crop_min > crop_max || crop_min < 1) throw std::runtime_error("invalid crop range");
    if (out_size % 32 != 0) throw std::runtime_error("out_size must be divisible by 32");
    if (flip_prob < 0 || flip_prob > 1) throw std::runtime_error("invalid flip_prob");
}

Rng sample_rng(uint64_t master_seed, uint64_t sample_index) {
    return Rng(splitmix64(master_seed ^ splitmix64(sample_index)));
}

RgbImage composite(const RgbImage& fg, const RgbImage& bg, const AlphaMatte& alpha) {
    check_dims(fg.height, fg.width, bg.height, bg.width, "composite");
    check_dims(fg.height, fg.width, alpha.height, alpha.width, "composite");
    RgbImage out(fg.height, fg.width);
    size_t n = fg.plane_size();
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < n; ++i) {
            float a = alpha.data[i];
            out.data[c * n + i] = clamp01(a * fg.data[c * n + i] + (1.f - a) * bg.data[c * n + i]);
        }
    return out;
}

SourceItem rotate_fg_alpha(const SourceItem& item, double degrees) {
    check_dims(item.foreground.height, item.foreground.width, item.alpha.height,
               item.alpha.width, "rotate_fg_alpha");
    int h = item.foreground.height, w = item.foreground.width;
    SourceItem out{RgbImage(h, w), AlphaMatte(h, w)};
    size_t n = out.foreground.plane_size();
    for (int c = 0; c < 3; ++c)
        rotate_plane(item.foreground.data.data() + c * n, out.foreground.data.data() + c * n, h, w, degrees);
    rotate_plane(item.alpha.data.data(), out.alpha.data.data(), h, w, degrees);
    for (float& v : out.alpha.data) v = clamp01(v);
    for (float& v : out.foreground.data) v = clamp01(v);
    return out;
}

Trimap synthesize_trimap(const AlphaMatte& alpha, int k) {
    if (k < 2) throw std::runtime_error("dilation kernel must be >= 2");
    int h = alpha.height, w = alpha.width;
    std::vector<uint8_t> seed(alpha.data.size(), 0);
    bool any = false;
    for (size_t i = 0; i < alpha.data.size(); ++i) {
        float a = alpha.data[i];
        if (a > 0.f && a < 1.f) { seed[i] = 1; any = true; }
    }
    if (!any) {
        // hard-edge fallback: pixels whose 3x3 neighborhood holds both 0 and 1
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                bool has0 = false, has1 = false;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        int yy = y + dy, xx = x + dx;
                        if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                        float a = alpha.at(yy, xx);
                        if (a == 0.f) has0 = true;
                        if (a == 1.f) has1 = true;
                    }
                if (has0 && has1) { seed[static_cast<size_t>(y) * w + x] = 1; any = true; }
            }
    }
    if (!any) throw std::runtime_error("degenerate alpha: no boundary exists");
    std::vector<uint8_t> unk = dilate_square(seed, h, w, k);
    Trimap t(h, w);
    for (size_t i = 0; i < unk.size(); ++i) {
        if (unk[i])
            t.labels[i] = TriLabel::Unknown;
        else if (alpha.data[i] == 1.f)
            t.labels[i] = TriLabel::Foreground;
        else
            t.labels[i] = TriLabel::Background;
    }
    return t;
}

CropWindow choose_crop(const Trimap& trimap, int size, Rng& rng) {
    int h = trimap.height, w = trimap.width;
    int m = std::min(h, w);
    if (size > m) {
        std::fprintf(stderr, "warning: crop size %d exceeds image side %d, shrinking\n", size, m);
        size = m;
    }
    std::vector<int> unk;
    for (int i = 0; i < h * w; ++i)
        if (trimap.labels[i] == TriLabel::Unknown) unk.push_back(i);
    if (unk.empty()) throw std::runtime_error("empty unknown region");
    int idx = unk[std::uniform_int_distribution<size_t>(0, unk.size() - 1)(rng)];
    int cy = idx / w, cx = idx % w;
    CropWindow win;
    win.size = size;
    win.y0 = std::clamp(cy - size / 2, 0, h - size);
    win.x0 = std::clamp(cx - size / 2, 0, w - size);
    return win;
}

RgbImage crop(const RgbImage& img, const CropWindow& w) {
    RgbImage out(w.size, w.size);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < w.size; ++y)
            for (int x = 0; x < w.size; ++x)
                out.at(c, y, x) = img.at(c, w.y0 + y, w.x0 + x);
    return out;
}

AlphaMatte crop(const AlphaMatte& a, const CropWindow& w) {
    AlphaMatte out(w.size, w.size);
    for (int y = 0; y < w.size; ++y)
        for (int x = 0; x < w.size; ++x) out.at(y, x) = a.at(w.y0 + y, w.x0 + x);
    return out;
}

Trimap crop(const Trimap& t, const CropWindow& w) {
    Trimap out(w.size, w.size);
    for (int y = 0; y < w.size; ++y)
        for (int x = 0; x < w.size; ++x) out.at(y, x) = t.at(w.y0 + y, w.x0 + x);
    return out;
}

RgbImage resize_bilinear(const RgbImage& img, int out_h, int out_w) {
    RgbImage out(out_h, out_w);
    size_t n_in = img.plane_size(), n_out = out.plane_size();
    for (int c = 0; c < 3; ++c) {
        cv::Mat src = plane_mat(img.data.data() + c * n_in, img.height, img.width);
        cv::Mat dst(out_h, out_w, CV_32F, out.data.data() + c * n_out);
        cv::resize(src, dst, dst.size(), 0, 0, cv::INTER_LINEAR);
    }
    for (float& v : out.data) v = clamp01(v);
    return out;
}

AlphaMatte resize_bilinear(const AlphaMatte& a, int out_h, int out_w) {
    AlphaMatte out(out_h, out_w);
    cv::Mat src = plane_mat(a.data.data(), a.height, a.width);
    cv::Mat dst(out_h, out_w, CV_32F, out.data.data());
    cv::resize(src, dst, dst.size(), 0, 0, cv::INTER_LINEAR);
    for (float& v : out.data) v = clamp01(v);
    return out;
}

Trimap resize_nearest(const Trimap& t, int out_h, int out_w) {
    cv::Mat src(t.height, t.width, CV_8U, const_cast<TriLabel*>(t.labels.data()));
    Trimap out(out_h, out_w);
    cv::Mat dst(out_h, out_w, CV_8U, out.labels.data());
    cv::resize(src, dst, dst.size(), 0, 0, cv::INTER_NEAREST);
    return out;
}

RgbImage hflip(const RgbImage& img) {
    RgbImage out(img.height, img.width);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) out.at(c, y, x) = img.at(c, y, img.width - 1 - x);
    return out;
}

AlphaMatte hflip(const AlphaMatte& a) {
    AlphaMatte out(a.height, a.width);
    for (int y = 0; y < a.height; ++y)
        for (int x = 0; x < a.width; ++x) out.at(y, x) = a.at(y, a.width - 1 - x);
    return out;
}

Trimap hflip(const Trimap& t) {
    Trimap out(t.height, t.width);
    for (int y = 0; y < t.height; ++y)
        for (int x = 0; x < t.width; ++x) out.at(y, x) = t.at(y, t.width - 1 - x);
    return out;
}

RgbImage prepare_background(const RgbImage& bg, int h, int w) {
    if (bg.height == h && bg.width == w) return bg;
    double scale = std::max(static_cast<double>(h) / bg.height, static_cast<double>(w) / bg.width);
    int rh = std::max(h, static_cast<int>(std::ceil(bg.height * scale)));
    int rw = std::max(w, static_cast<int>(std::ceil(bg.width * scale)));
    RgbImage scaled = resize_bilinear(bg, rh, rw);
    CropWindow win;
    win.y0 = (rh - h) / 2;
    win.x0 = (rw - w) / 2;
    win.size = 0;  // unused; crop manually below for non-square windows
    RgbImage out(h, w);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(c, y, x) = scaled.at(c, win.y0 + y, win.x0 + x);
    return out;
}

TrainingSample make_training_sample(const SourceItem& item, const RgbImage& bg,
                                    const AugmentConfig& cfg, Rng& rng) {
    cfg.validate();
    RgbImage bg_fit = prepare_background(bg, item.foreground.height, item.foreground.width);

    double degrees = 0.0;
    if (cfg.rotation_std_deg > 0.0)
        degrees = std::normal_distribution<double>(0.0, cfg.rotation_std_deg)(rng);
    SourceItem rotated = rotate_fg_alpha(item, degrees);

    int k = std::uniform_int_distribution<int>(cfg.dilation_kmin, cfg.dilation_kmax)(rng);
    Trimap trimap = synthesize_trimap(rotated.alpha, k);

    int size = std::uniform_int_distribution<int>(cfg.crop_min, cfg.crop_max)(rng);
    CropWindow win = choose_crop(trimap, size, rng);
    RgbImage fg_c = crop(rotated.foreground, win);
    AlphaMatte a_c = crop(rotated.alpha, win);
    Trimap t_c = crop(trimap, win);
    RgbImage bg_c = crop(bg_fit, win);

    TrainingSample s;
    s.foreground = resize_bilinear(fg_c, cfg.out_size, cfg.out_size);
    s.alpha_gt = resize_bilinear(a_c, cfg.out_size, cfg.out_size);
    s.trimap = resize_nearest(t_c, cfg.out_size, cfg.out_size);
    s.background = resize_bilinear(bg_c, cfg.out_size, cfg.out_size);

    if (unk_mask(s.trimap).count() == 0)
        s.trimap.at(cfg.out_size / 2, cfg.out_size / 2) = TriLabel::Unknown;

    if (std::bernoulli_distribution(cfg.flip_prob)(rng)) {
        s.foreground = hflip(s.foreground);
        s.alpha_gt = hflip(s.alpha_gt);
        s.trimap = hflip(s.trimap);
        s.background = hflip(s.background);
    }
    s.composite = composite(s.foreground, s.background, s.alpha_gt);
    return s;
}

void build_composition_set(const std::string& fg_dir, const std::string& alpha_dir,
                           const std::string& bg_dir, const std::string& out_dir,
                           int per_fg, uint64_t seed) {
    std::vector<std::string> fg_stems = png_stems(fg_dir);
    std::vector<std::string> alpha_stems = png_stems(alpha_dir);
    if (fg_stems != alpha_stems)
        throw std::runtime_error("foreground and alpha directories do not align by stem");
    if (fg_stems.empty()) throw std::runtime_error("no foregrounds in " + fg_dir);
    std::vector<std::string> bg_files;
    for (const auto& e : fs::directory_iterator(bg_dir))
        if (e.is_regular_file() && e.path().extension() == ".png")
            bg_files.push_back(e.path().filename().string());
    std::sort(bg_files.begin(), bg_files.end());
    if (bg_files.empty()) throw std::runtime_error("empty background pool: " + bg_dir);

    for (const char* sub : {"composite", "trimap", "alpha", "fg", "bg"})
        fs::create_directories(fs::path(out_dir) / sub);

    json manifest;
    manifest["version"] = 1;
    manifest["seed"] = seed;
    manifest["per_fg"] = per_fg;
    manifest["samples"] = json::array();

    for (size_t fi = 0; fi < fg_stems.size(); ++fi) {
        RgbImage fg = load_rgb((fs::path(fg_dir) / (fg_stems[fi] + ".png")).string());
        AlphaMatte alpha = load_alpha((fs::path(alpha_dir) / (fg_stems[fi] + ".png")).string());
        check_dims(fg.height, fg.width, alpha.height, alpha.width, "composition set");
        for (int j = 0; j < per_fg; ++j) {
            Rng rng = sample_rng(seed, fi * static_cast<uint64_t>(per_fg) + j);
            size_t bi = std::uniform_int_distribution<size_t>(0, bg_files.size() - 1)(rng);
            int k = std::uniform_int_distribution<int>(2, 20)(rng);
            RgbImage bg = prepare_background(load_rgb((fs::path(bg_dir) / bg_files[bi]).string()),
                                             fg.height, fg.width);
            Trimap trimap = synthesize_trimap(alpha, k);
            RgbImage comp = composite(fg, bg, alpha);

            std::string name = fg_stems[fi] + "_" + std::to_string(j);
            save_rgb(comp, (fs::path(out_dir) / "composite" / (name + ".png")).string());
            save_trimap(trimap, (fs::path(out_dir) / "trimap" / (name + ".png")).string());
            save_alpha(alpha, (fs::path(out_dir) / "alpha" / (name + ".png")).string());
            save_rgb(fg, (fs::path(out_dir) / "fg" / (name + ".png")).string());
            save_rgb(bg, (fs::path(out_dir) / "bg" / (name + ".png")).string());

            manifest["samples"].push_back({{"name", name},
                                           {"fg", fg_stems[fi]},
                                           {"bg", bg_files[bi]},
                                           {"k", k}});
        }
    }
    std::ofstream out(fs::path(out_dir) / "manifest.json");
    out << manifest.dump(2) << "\n";
}

}  // namespace alphagan
