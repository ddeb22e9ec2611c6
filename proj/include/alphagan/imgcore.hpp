#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace alphagan {

// All raster data is real-valued in [0,1]; quantization happens only at the
// PNG boundary. Storage is planar (CHW), row-major within a plane.

struct RgbImage {
    int height = 0;
    int width = 0;
    std::vector<float> data;  // 3 * height * width, planes R,G,B

    RgbImage() = default;
    RgbImage(int h, int w, float fill = 0.f)
        : height(h), width(w), data(static_cast<size_t>(3) * h * w, fill) {}

    float& at(int c, int y, int x) { return data[(static_cast<size_t>(c) * height + y) * width + x]; }
    float at(int c, int y, int x) const { return data[(static_cast<size_t>(c) * height + y) * width + x]; }
    size_t plane_size() const { return static_cast<size_t>(height) * width; }
};

struct AlphaMatte {
    int height = 0;
    int width = 0;
    std::vector<float> data;  // height * width

    AlphaMatte() = default;
    AlphaMatte(int h, int w, float fill = 0.f)
        : height(h), width(w), data(static_cast<size_t>(h) * w, fill) {}

    float& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    float at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
};

enum class TriLabel : uint8_t { Background = 0, Unknown = 1, Foreground = 2 };

struct Trimap {
    int height = 0;
    int width = 0;
    std::vector<TriLabel> labels;

    Trimap() = default;
    Trimap(int h, int w, TriLabel fill = TriLabel::Background)
        : height(h), width(w), labels(static_cast<size_t>(h) * w, fill) {}

    TriLabel& at(int y, int x) { return labels[static_cast<size_t>(y) * width + x]; }
    TriLabel at(int y, int x) const { return labels[static_cast<size_t>(y) * width + x]; }
};

struct RegionMask {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> bits;

    RegionMask() = default;
    RegionMask(int h, int w, bool fill = false)
        : height(h), width(w), bits(static_cast<size_t>(h) * w, fill ? 1 : 0) {}

    bool at(int y, int x) const { return bits[static_cast<size_t>(y) * width + x] != 0; }
    void set(int y, int x, bool v) { bits[static_cast<size_t>(y) * width + x] = v ? 1 : 0; }
    size_t count() const;
};

// Region selectors; the three masks of a trimap partition the pixel set.
RegionMask fg_mask(const Trimap& t);
RegionMask bg_mask(const Trimap& t);
RegionMask unk_mask(const Trimap& t);

// PNG I/O. 8- or 16-bit; values scaled to [0,1] by the bit-depth maximum.
RgbImage load_rgb(const std::string& path);
AlphaMatte load_alpha(const std::string& path);
void save_rgb(const RgbImage& img, const std::string& path, int bit_depth = 8);
void save_alpha(const AlphaMatte& matte, const std::string& path, int bit_depth = 16);

// Trimap PNG bytes are {0,128,255} with +-8 snapping tolerance.
Trimap load_trimap(const std::string& path);
void save_trimap(const Trimap& t, const std::string& path);

// Lowers a trimap to a network input plane: BACKGROUND->0, UNKNOWN->0.5,
// FOREGROUND->1.
AlphaMatte trimap_plane(const Trimap& t);

}  // namespace alphagan
