#pragma once

#include <string>
#include <vector>

#include "gfcad/cad_types.hpp"
#include "gfcad/geometry.hpp"

namespace gfcad {

// JSON forms are byte-stable: keys are emitted in sorted order and arrays
// carry the full padded length.
std::string sequence_to_json(const CadSequence& seq);
CadSequence sequence_from_json(const std::string& text);

std::string tree_to_json(const CadTree& tree);  // canonical preorder numbering
CadTree tree_from_json(const std::string& text);

// binary token stream: "GFC1", u32 pair count, then little-endian u16 per
// TokenId, pairs interleaved; flags and valid_len are re-derived on load
std::vector<std::uint8_t> sequence_to_binary(const CadSequence& seq);
CadSequence sequence_from_binary(const std::vector<std::uint8_t>& bytes, int max_tokens);

// rebuild type/step flags and valid_len from raw token pairs
CadSequence sequence_from_tokens(std::vector<TokenPair> tokens, int max_tokens);

// point cloud exports
std::string pointcloud_to_obj(const PointCloud& pc);
std::vector<std::uint8_t> pointcloud_to_f32(const PointCloud& pc);

// voxel grid: "GFV1", u32 resolution, 6 x f64 bounds, byte-RLE payload
std::vector<std::uint8_t> voxelgrid_to_rle(const VoxelGrid& grid);
VoxelGrid voxelgrid_from_rle(const std::vector<std::uint8_t>& bytes);

// file helpers
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);
std::vector<std::uint8_t> read_binary_file(const std::string& path);
void write_binary_file(const std::string& path, const std::vector<std::uint8_t>& bytes);

}  // namespace gfcad
