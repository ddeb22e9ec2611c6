#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace alphagan {

// name -> (shape, data); the on-disk format is manifest.json (ordered tensor
// records: name, shape, dtype, byte offset, CRC) + weights.bin (little-endian
// 32-bit floats concatenated in manifest order).
using TensorMap = std::map<std::string, std::pair<std::vector<int>, std::vector<float>>>;

struct TensorEntry {
    std::string name;
    std::vector<int> shape;
    std::vector<float> data;
};

void write_tensor_archive(const std::string& dir, const std::vector<TensorEntry>& tensors);

// Verifies per-tensor CRCs; throws on corruption.
TensorMap read_tensor_archive(const std::string& dir);

// Architecture fingerprint over (name, shape) pairs in order.
uint32_t manifest_hash(const std::vector<std::pair<std::string, std::vector<int>>>& manifest);

}  // namespace alphagan
