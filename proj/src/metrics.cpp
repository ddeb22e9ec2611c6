#include "alphagan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace alphagan {

namespace {

void check_pair(const AlphaMatte& a, const AlphaMatte& b, const RegionMask& m) {
    if (a.height != b.height || a.width != b.width || a.height != m.height || a.width != m.width)
        throw std::runtime_error("metric dimension mismatch");
}

inline int reflect(int i, int n) {
    if (n == 1) return 0;
    while (i < 0 || i >= n) {
        if (i < 0) i = -i;
        if (i >= n) i = 2 * n - 2 - i;
    }
    return i;
}

// Separable convolution, horizontal kernel kx then vertical ky, reflect borders.
std::vector<double> conv_sep(const AlphaMatte& a, const std::vector<double>& kx,
                             const std::vector<double>& ky) {
    int h = a.height, w = a.width;
    int rx = (static_cast<int>(kx.size()) - 1) / 2;
    int ry = (static_cast<int>(ky.size()) - 1) / 2;
    std::vector<double> tmp(static_cast<size_t>(h) * w), out(static_cast<size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0;
            for (int k = -rx; k <= rx; ++k) s += kx[k + rx] * a.at(y, reflect(x + k, w));
            tmp[static_cast<size_t>(y) * w + x] = s;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0;
            for (int k = -ry; k <= ry; ++k) s += ky[k + ry] * tmp[static_cast<size_t>(reflect(y + k, h)) * w + x];
            out[static_cast<size_t>(y) * w + x] = s;
        }
    return out;
}

void gauss_kernels(double sigma, std::vector<double>& g, std::vector<double>& d) {
    int r = static_cast<int>(std::ceil(3.0 * sigma));
    g.assign(2 * r + 1, 0.0);
    d.assign(2 * r + 1, 0.0);
    double sum = 0;
    for (int i = -r; i <= r; ++i) {
        g[i + r] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += g[i + r];
    }
    for (int i = -r; i <= r; ++i) {
        g[i + r] /= sum;
        d[i + r] = -i / (sigma * sigma) * g[i + r];
    }
}

// Per-pixel largest level at which the pixel is 4-connected to omega in the
// binarization {alpha >= level}. Levels walked from high to low.
std::vector<double> connectivity_levels(const AlphaMatte& a, const std::vector<uint8_t>& omega,
                                        const std::vector<double>& levels) {
    int h = a.height, w = a.width;
    size_t n = static_cast<size_t>(h) * w;
    std::vector<double> l(n, 0.0);
    std::vector<uint8_t> assigned(n, 0);
    std::vector<uint8_t> visited(n);
    std::deque<int> queue;
    for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
        double t = *it;
        std::fill(visited.begin(), visited.end(), 0);
        queue.clear();
        for (size_t i = 0; i < n; ++i)
            if (omega[i] && a.data[i] >= t) { visited[i] = 1; queue.push_back(static_cast<int>(i)); }
        while (!queue.empty()) {
            int i = queue.front();
            queue.pop_front();
            int y = i / w, x = i % w;
            const int dy[] = {-1, 1, 0, 0}, dx[] = {0, 0, -1, 1};
            for (int k = 0; k < 4; ++k) {
                int yy = y + dy[k], xx = x + dx[k];
                if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                int j = yy * w + xx;
                if (!visited[j] && a.data[j] >= t) { visited[j] = 1; queue.push_back(j); }
            }
        }
        for (size_t i = 0; i < n; ++i)
            if (visited[i] && !assigned[i]) { l[i] = t; assigned[i] = 1; }
    }
    return l;
}

// Largest 4-connected region of {pred=1 and gt=1}; ties broken by the
// smallest row-major first-pixel index.
std::vector<uint8_t> largest_mutual_region(const AlphaMatte& pred, const AlphaMatte& gt) {
    int h = pred.height, w = pred.width;
    size_t n = static_cast<size_t>(h) * w;
    std::vector<uint8_t> inter(n, 0);
    for (size_t i = 0; i < n; ++i) inter[i] = pred.data[i] >= 1.f && gt.data[i] >= 1.f;
    std::vector<int> label(n, -1);
    std::vector<uint8_t> best;
    size_t best_count = 0;
    std::deque<int> queue;
    int next = 0;
    for (size_t s = 0; s < n; ++s) {
        if (!inter[s] || label[s] >= 0) continue;
        std::vector<int> comp;
        label[s] = next;
        queue.assign(1, static_cast<int>(s));
        while (!queue.empty()) {
            int i = queue.front();
            queue.pop_front();
            comp.push_back(i);
            int y = i / w, x = i % w;
            const int dy[] = {-1, 1, 0, 0}, dx[] = {0, 0, -1, 1};
            for (int k = 0; k < 4; ++k) {
                int yy = y + dy[k], xx = x + dx[k];
                if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                int j = yy * w + xx;
                if (inter[j] && label[j] < 0) { label[j] = next; queue.push_back(j); }
            }
        }
        if (comp.size() > best_count) {
            best_count = comp.size();
            best.assign(n, 0);
            for (int i : comp) best[i] = 1;
        }
        ++next;
    }
    if (best.empty()) best.assign(n, 0);
    return best;
}

std::string stem_of(const fs::path& p) { return p.stem().string(); }

}  // namespace

double sad(const AlphaMatte& pred, const AlphaMatte& gt, const RegionMask& unknown) {
    check_pair(pred, gt, unknown);
    double s = 0;
    for (size_t i = 0; i < pred.data.size(); ++i)
        if (unknown.bits[i]) s += std::abs(double(pred.data[i]) - double(gt.data[i]));
    return s;
}

double mse(const AlphaMatte& pred, const AlphaMatte& gt, const RegionMask& unknown) {
    check_pair(pred, gt, unknown);
    double s = 0;
    size_t cnt = 0;
    for (size_t i = 0; i < pred.data.size(); ++i)
        if (unknown.bits[i]) {
            double d = double(pred.data[i]) - double(gt.data[i]);
            s += d * d;
            ++cnt;
        }
    if (cnt == 0) throw std::runtime_error("empty unknown region");
    return s / cnt;
}

double gradient_error(const AlphaMatte& pred, const AlphaMatte& gt, const RegionMask& unknown,
                      double sigma) {
    check_pair(pred, gt, unknown);
    std::vector<double> g, d;
    gauss_kernels(sigma, g, d);
    auto mag = [&](const AlphaMatte& a) {
        std::vector<double> gx = conv_sep(a, d, g);
        std::vector<double> gy = conv_sep(a, g, d);
        std::vector<double> m(gx.size());
        for (size_t i = 0; i < m.size(); ++i) m[i] = std::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
        return m;
    };
    std::vector<double> mp = mag(pred), mg = mag(gt);
    double s = 0;
    for (size_t i = 0; i < mp.size(); ++i)
        if (unknown.bits[i]) {
            double dd = mp[i] - mg[i];
            s += dd * dd;
        }
    return s;
}

double connectivity_error(const AlphaMatte& pred, const AlphaMatte& gt, const RegionMask& unknown,
                          double theta, double delta, bool* degenerate) {
    check_pair(pred, gt, unknown);
    if (degenerate) *degenerate = false;
    std::vector<uint8_t> omega = largest_mutual_region(pred, gt);
    bool any = std::any_of(omega.begin(), omega.end(), [](uint8_t v) { return v != 0; });
    if (!any) {
        if (degenerate) *degenerate = true;
        return 0.0;
    }
    std::vector<double> levels;
    for (int j = 0; j * delta <= 1.0 + 1e-12; ++j) levels.push_back(j * delta);
    std::vector<double> lp = connectivity_levels(pred, omega, levels);
    std::vector<double> lg = connectivity_levels(gt, omega, levels);
    double s = 0;
    for (size_t i = 0; i < pred.data.size(); ++i) {
        if (!unknown.bits[i]) continue;
        double dp = double(pred.data[i]) - lp[i];
        double dg = double(gt.data[i]) - lg[i];
        double phip = 1.0 - (dp >= theta ? dp : 0.0);
        double phig = 1.0 - (dg >= theta ? dg : 0.0);
        s += std::abs(phip - phig);
    }
    return s;
}

ImageMetrics evaluate_pair(const std::string& name, const AlphaMatte& pred, const AlphaMatte& gt,
                           const RegionMask& unknown, const MetricParams& p) {
    ImageMetrics m;
    m.name = name;
    m.unknown = unknown.count();
    m.sad_raw = sad(pred, gt, unknown);
    m.sad = m.sad_raw / p.sad_scale;
    m.mse = mse(pred, gt, unknown);
    m.grad = gradient_error(pred, gt, unknown, p.grad_sigma);
    m.conn = connectivity_error(pred, gt, unknown, p.conn_theta, p.conn_delta, &m.conn_degenerate);
    return m;
}

MetricReport evaluate_dirs(const std::string& pred_dir, const std::string& gt_dir,
                           const std::string& trimap_dir, const MetricParams& p) {
    MetricReport r;
    r.params = p;
    std::vector<std::string> stems;
    for (const auto& e : fs::directory_iterator(gt_dir))
        if (e.is_regular_file() && e.path().extension() == ".png") stems.push_back(stem_of(e.path()));
    std::sort(stems.begin(), stems.end());
    for (const auto& s : stems) {
        fs::path pp = fs::path(pred_dir) / (s + ".png");
        fs::path tp = fs::path(trimap_dir) / (s + ".png");
        if (!fs::exists(pp)) { r.warnings.push_back("missing prediction for " + s); continue; }
        if (!fs::exists(tp)) { r.warnings.push_back("missing trimap for " + s); continue; }
        AlphaMatte pred = load_alpha(pp.string());
        AlphaMatte gt = load_alpha((fs::path(gt_dir) / (s + ".png")).string());
        Trimap trimap = load_trimap(tp.string());
        r.per_image.push_back(evaluate_pair(s, pred, gt, unk_mask(trimap), p));
    }
    ImageMetrics agg;
    agg.name = "mean";
    for (const auto& m : r.per_image) {
        agg.sad_raw += m.sad_raw;
        agg.sad += m.sad;
        agg.mse += m.mse;
        agg.grad += m.grad;
        agg.conn += m.conn;
        agg.unknown += m.unknown;
    }
    if (!r.per_image.empty()) {
        double n = static_cast<double>(r.per_image.size());
        agg.sad_raw /= n;
        agg.sad /= n;
        agg.mse /= n;
        agg.grad /= n;
        agg.conn /= n;
    }
    r.aggregate = agg;
    return r;
}

namespace {

json metrics_json(const ImageMetrics& m, bool thousands_scale) {
    return json{{"name", m.name},
                {"sad", thousands_scale ? m.sad : m.sad_raw},
                {"sad_raw", m.sad_raw},
                {"mse", m.mse},
                {"grad", m.grad},
                {"conn", m.conn},
                {"unknown", m.unknown},
                {"conn_degenerate", m.conn_degenerate}};
}

}  // namespace

void write_report_json(const MetricReport& r, const std::string& path, bool thousands_scale) {
    json j;
    j["params"] = {{"grad_sigma", r.params.grad_sigma},
                   {"conn_theta", r.params.conn_theta},
                   {"conn_delta", r.params.conn_delta},
                   {"sad_scale", r.params.sad_scale},
                   {"scale", thousands_scale ? "thousands" : "raw"}};
    j["per_image"] = json::array();
    for (const auto& m : r.per_image) j["per_image"].push_back(metrics_json(m, thousands_scale));
    j["aggregate"] = metrics_json(r.aggregate, thousands_scale);
    j["warnings"] = r.warnings;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

void write_report_csv(const MetricReport& r, const std::string& path, bool thousands_scale) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "name,sad,mse,grad,conn,unknown\n";
    for (const auto& m : r.per_image)
        out << m.name << "," << (thousands_scale ? m.sad : m.sad_raw) << "," << m.mse << ","
            << m.grad << "," << m.conn << "," << m.unknown << "\n";
}

}  // namespace alphagan
