#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "alphagan/datapipe.hpp"
#include "helpers.hpp"

using namespace alphagan;
namespace fs = std::filesystem;

namespace {

// Independent O(n*k^2) square dilation with window rows [i-lo, i+hi],
// lo=(k-1)/2, hi=k/2.
std::vector<uint8_t> brute_dilate(const std::vector<uint8_t>& m, int h, int w, int k) {
    int lo = (k - 1) / 2, hi = k / 2;
    std::vector<uint8_t> out(m.size(), 0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            for (int dy = -lo; dy <= hi; ++dy)
                for (int dx = -lo; dx <= hi; ++dx) {
                    int yy = y + dy, xx = x + dx;
                    if (yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
                    if (m[static_cast<size_t>(yy) * w + xx]) out[static_cast<size_t>(y) * w + x] = 1;
                }
        }
    return out;
}

std::vector<uint8_t> fractional_set(const AlphaMatte& a) {
    std::vector<uint8_t> m(a.data.size());
    for (size_t i = 0; i < a.data.size(); ++i) m[i] = (a.data[i] > 0.f && a.data[i] < 1.f) ? 1 : 0;
    return m;
}

}  // namespace

TEST_CASE("compositing identity and clamping") {
    Rng rng(11);
    RgbImage fg = testutil::random_smooth_rgb(16, 16, rng);
    RgbImage bg = testutil::random_smooth_rgb(16, 16, rng);
    AlphaMatte a = testutil::random_blob_alpha(16, 16, rng);
    RgbImage c = composite(fg, bg, a);
    size_t plane = fg.plane_size();
    for (int ch = 0; ch < 3; ++ch)
        for (size_t i = 0; i < plane; ++i) {
            float want = a.data[i] * fg.data[ch * plane + i] +
                         (1.f - a.data[i]) * bg.data[ch * plane + i];
            CHECK(std::abs(c.data[ch * plane + i] - std::clamp(want, 0.f, 1.f)) <= 1e-7f);
        }
}

TEST_CASE("rotation by zero degrees is the identity") {
    Rng rng(12);
    SourceItem item{testutil::random_smooth_rgb(20, 24, rng),
                    testutil::random_blob_alpha(20, 24, rng)};
    SourceItem r = rotate_fg_alpha(item, 0.0);
    for (size_t i = 0; i < item.alpha.data.size(); ++i)
        CHECK(r.alpha.data[i] == doctest::Approx(item.alpha.data[i]).epsilon(1e-6));
}

TEST_CASE("trimap synthesis matches the brute-force dilation oracle") {
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        AlphaMatte a = testutil::random_blob_alpha(24, 28, rng);
        std::vector<uint8_t> frac = fractional_set(a);
        for (int k : {2, 3, 5, 8, 13, 20}) {
            Trimap t = synthesize_trimap(a, k);
            std::vector<uint8_t> want = brute_dilate(frac, 24, 28, k);
            RegionMask u = unk_mask(t);
            for (size_t i = 0; i < want.size(); ++i) CHECK(u.bits[i] == want[i]);
        }
    }
}

TEST_CASE("trimap soundness and dilation monotonicity") {
    Rng rng(14);
    for (int trial = 0; trial < 5; ++trial) {
        AlphaMatte a = testutil::random_blob_alpha(32, 32, rng);
        RegionMask prev;
        for (int k = 2; k <= 20; ++k) {
            Trimap t = synthesize_trimap(a, k);
            RegionMask u = unk_mask(t);
            for (size_t i = 0; i < a.data.size(); ++i) {
                if (a.data[i] > 0.f && a.data[i] < 1.f) CHECK(u.bits[i] == 1);
                if (t.labels[i] == TriLabel::Foreground) CHECK(a.data[i] == 1.f);
                if (t.labels[i] == TriLabel::Background) CHECK(a.data[i] == 0.f);
                if (k > 2) CHECK(u.bits[i] >= prev.bits[i]);
            }
            prev = u;
        }
    }
}

TEST_CASE("binary alpha falls back to the hard edge") {
    AlphaMatte a(12, 12);
    for (int y = 4; y < 8; ++y)
        for (int x = 4; x < 8; ++x) a.at(y, x) = 1.f;
    Trimap t = synthesize_trimap(a, 3);
    RegionMask u = unk_mask(t);
    CHECK(u.count() > 0);
    // The block corner sits on the edge between 0 and 1 neighborhoods.
    CHECK(u.at(4, 4));
    // Far corners stay background.
    CHECK(t.at(0, 0) == TriLabel::Background);
}

TEST_CASE("degenerate constant alpha is rejected") {
    AlphaMatte a(8, 8, 0.f);
    CHECK_THROWS(synthesize_trimap(a, 3));
}

TEST_CASE("choose_crop centers on unknown pixels and stays in bounds") {
    Rng rng(15);
    AlphaMatte a = testutil::random_blob_alpha(40, 40, rng);
    Trimap t = synthesize_trimap(a, 4);
    for (int trial = 0; trial < 20; ++trial) {
        CropWindow w = choose_crop(t, 24, rng);
        CHECK(w.size == 24);
        CHECK(w.y0 >= 0);
        CHECK(w.x0 >= 0);
        CHECK(w.y0 + w.size <= 40);
        CHECK(w.x0 + w.size <= 40);
        bool has_unknown = false;
        for (int y = w.y0; y < w.y0 + w.size && !has_unknown; ++y)
            for (int x = w.x0; x < w.x0 + w.size && !has_unknown; ++x)
                has_unknown = t.at(y, x) == TriLabel::Unknown;
        CHECK(has_unknown);
    }
    // Oversized request shrinks to the image.
    CropWindow w = choose_crop(t, 100, rng);
    CHECK(w.size == 40);
}

TEST_CASE("hflip is an involution") {
    Rng rng(16);
    RgbImage img = testutil::random_smooth_rgb(10, 13, rng);
    RgbImage twice = hflip(hflip(img));
    for (size_t i = 0; i < img.data.size(); ++i) CHECK(twice.data[i] == img.data[i]);
}

TEST_CASE("resize to the same size is near-identity") {
    Rng rng(17);
    AlphaMatte a = testutil::random_blob_alpha(18, 18, rng);
    AlphaMatte r = resize_bilinear(a, 18, 18);
    for (size_t i = 0; i < a.data.size(); ++i)
        CHECK(r.data[i] == doctest::Approx(a.data[i]).epsilon(1e-6));
}

TEST_CASE("per-sample rng streams are deterministic and independent") {
    Rng a1 = sample_rng(7, 0), a2 = sample_rng(7, 0), b = sample_rng(7, 1);
    CHECK(a1() == a2());
    Rng a3 = sample_rng(7, 0);
    CHECK(a3() != b());
}

TEST_CASE("make_training_sample output contract") {
    Rng master(18);
    AugmentConfig cfg;
    cfg.crop_min = 48;
    cfg.crop_max = 72;
    cfg.out_size = 64;
    SourceItem item{testutil::random_smooth_rgb(96, 96, master),
                    testutil::random_blob_alpha(96, 96, master)};
    RgbImage bg = testutil::random_smooth_rgb(120, 100, master);
    Rng rng = sample_rng(cfg.seed, 0);
    TrainingSample s = make_training_sample(item, bg, cfg, rng);
    CHECK(s.composite.height == 64);
    CHECK(s.composite.width == 64);
    CHECK(s.trimap.height == 64);
    CHECK(s.alpha_gt.height == 64);
    CHECK(unk_mask(s.trimap).count() > 0);
    size_t plane = s.composite.plane_size();
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < plane; ++i) {
            float want = s.alpha_gt.data[i] * s.foreground.data[c * plane + i] +
                         (1.f - s.alpha_gt.data[i]) * s.background.data[c * plane + i];
            CHECK(std::abs(s.composite.data[c * plane + i] - std::clamp(want, 0.f, 1.f)) <= 1e-6f);
        }

    // Same rng state reproduces the sample bit for bit.
    Rng rng2 = sample_rng(cfg.seed, 0);
    TrainingSample s2 = make_training_sample(item, bg, cfg, rng2);
    CHECK(s2.composite.data == s.composite.data);
    CHECK(s2.trimap.labels == s.trimap.labels);
}

TEST_CASE("build_composition_set is deterministic in the seed") {
    Rng rng(19);
    fs::path root = fs::temp_directory_path() / "alphagan_compose_test";
    fs::remove_all(root);
    for (const char* sub : {"fg", "alpha", "bg"}) fs::create_directories(root / sub);
    for (int i = 0; i < 2; ++i) {
        std::string stem = "item" + std::to_string(i);
        save_rgb(testutil::random_smooth_rgb(48, 48, rng), (root / "fg" / (stem + ".png")).string());
        save_alpha(testutil::random_blob_alpha(48, 48, rng),
                   (root / "alpha" / (stem + ".png")).string(), 8);
    }
    for (int i = 0; i < 3; ++i)
        save_rgb(testutil::random_smooth_rgb(64, 56, rng),
                 (root / "bg" / ("bg" + std::to_string(i) + ".png")).string());

    auto slurp = [](const fs::path& p) {
        std::ifstream f(p);
        return std::string(std::istreambuf_iterator<char>(f), {});
    };
    build_composition_set((root / "fg").string(), (root / "alpha").string(),
                          (root / "bg").string(), (root / "out1").string(), 2, 5);
    build_composition_set((root / "fg").string(), (root / "alpha").string(),
                          (root / "bg").string(), (root / "out2").string(), 2, 5);
    CHECK(slurp(root / "out1" / "manifest.json") == slurp(root / "out2" / "manifest.json"));
    int composites = 0;
    for (const auto& e : fs::directory_iterator(root / "out1" / "composite")) {
        (void)e;
        ++composites;
    }
    CHECK(composites == 4);
}
