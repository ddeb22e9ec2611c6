#include "alphagan/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <zlib.h>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace alphagan {

namespace {

uint32_t crc_of(const void* data, size_t bytes) {
    return static_cast<uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(data), static_cast<uInt>(bytes)));
}

}  // namespace

void write_tensor_archive(const std::string& dir, const std::vector<TensorEntry>& tensors) {
    fs::create_directories(dir);
    json manifest;
    manifest["format_version"] = 1;
    manifest["tensors"] = json::array();
    std::ofstream bin(fs::path(dir) / "weights.bin", std::ios::binary);
    if (!bin) throw std::runtime_error("cannot write weights.bin in " + dir);
    uint64_t offset = 0;
    for (const auto& t : tensors) {
        size_t bytes = t.data.size() * sizeof(float);
        bin.write(reinterpret_cast<const char*>(t.data.data()), bytes);
        manifest["tensors"].push_back({{"name", t.name},
                                       {"shape", t.shape},
                                       {"dtype", "f32"},
                                       {"offset", offset},
                                       {"crc32", crc_of(t.data.data(), bytes)}});
        offset += bytes;
    }
    std::ofstream mf(fs::path(dir) / "manifest.json");
    mf << manifest.dump(2) << "\n";
}

TensorMap read_tensor_archive(const std::string& dir) {
    std::ifstream mf(fs::path(dir) / "manifest.json");
    if (!mf) throw std::runtime_error("missing manifest.json in " + dir);
    json manifest = json::parse(mf);
    std::ifstream bin(fs::path(dir) / "weights.bin", std::ios::binary);
    if (!bin) throw std::runtime_error("missing weights.bin in " + dir);
    TensorMap out;
    for (const auto& rec : manifest.at("tensors")) {
        std::string name = rec.at("name");
        std::vector<int> shape = rec.at("shape").get<std::vector<int>>();
        uint64_t offset = rec.at("offset");
        uint32_t crc = rec.at("crc32");
        size_t count = 1;
        for (int d : shape) count *= d;
        std::vector<float> data(count);
        bin.seekg(static_cast<std::streamoff>(offset));
        bin.read(reinterpret_cast<char*>(data.data()), count * sizeof(float));
        if (!bin) throw std::runtime_error("truncated weights.bin reading " + name);
        if (crc_of(data.data(), count * sizeof(float)) != crc)
            throw std::runtime_error("checksum mismatch for tensor " + name);
        out[name] = {std::move(shape), std::move(data)};
    }
    return out;
}

uint32_t manifest_hash(const std::vector<std::pair<std::string, std::vector<int>>>& manifest) {
    uLong crc = crc32(0L, Z_NULL, 0);
    for (const auto& [name, shape] : manifest) {
        crc = crc32(crc, reinterpret_cast<const Bytef*>(name.data()),
                    static_cast<uInt>(name.size()));
        crc = crc32(crc, reinterpret_cast<const Bytef*>(shape.data()),
                    static_cast<uInt>(shape.size() * sizeof(int)));
    }
    return static_cast<uint32_t>(crc);
}

}  // namespace alphagan
