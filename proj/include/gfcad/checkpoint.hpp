#pragma once

#include <map>
#include <string>
#include <vector>

#include "gfcad/tensor.hpp"

namespace gfcad {

// Named-tensor container, magic "GFT1", little-endian. Header table entries:
// {name, dtype, shape, byte offset into the data section}. dtype 0 = f32,
// 1 = f64, 2 = u64 (raw counters such as RNG state).
struct CheckpointEntry {
    std::vector<int> shape;
    std::vector<double> values;   // dtype f32/f64
    std::vector<std::uint64_t> raw;  // dtype u64
    bool is_raw = false;
};

using Checkpoint = std::map<std::string, CheckpointEntry>;

std::vector<std::uint8_t> checkpoint_to_bytes(const Checkpoint& ckpt);
Checkpoint checkpoint_from_bytes(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace gfcad
