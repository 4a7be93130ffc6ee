#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "gfcad/cad_types.hpp"
#include "gfcad/common.hpp"

namespace gfcad {

struct Vec3 {
    double x = 0, y = 0, z = 0;
};

struct Box3 {
    Vec3 lo{-1, -1, -1};
    Vec3 hi{1, 1, 1};
};

// Dense occupancy over an axis-aligned box, one bit per cell.
class VoxelGrid {
public:
    VoxelGrid() = default;
    VoxelGrid(int resolution, Box3 bounds);

    int resolution() const { return res_; }
    const Box3& bounds() const { return bounds_; }

    bool get(int i, int j, int k) const {
        std::size_t idx = index(i, j, k);
        return (words_[idx >> 6] >> (idx & 63)) & 1u;
    }
    void set(int i, int j, int k, bool v) {
        std::size_t idx = index(i, j, k);
        std::uint64_t bit = 1ULL << (idx & 63);
        if (v) words_[idx >> 6] |= bit;
        else words_[idx >> 6] &= ~bit;
    }

    std::size_t cell_count() const {
        return static_cast<std::size_t>(res_) * res_ * res_;
    }
    std::size_t occupied_count() const;
    bool empty() const { return occupied_count() == 0; }

    // world coordinates of cell center
    Vec3 cell_center(int i, int j, int k) const;
    double cell_size() const { return (bounds_.hi.x - bounds_.lo.x) / res_; }
    double cell_volume() const;

    // bit-exact boolean algebra; grids must share resolution and bounds
    VoxelGrid unite(const VoxelGrid& other) const;
    VoxelGrid subtract(const VoxelGrid& other) const;
    VoxelGrid intersect(const VoxelGrid& other) const;

    bool operator==(const VoxelGrid& other) const {
        return res_ == other.res_ && words_ == other.words_;
    }

    // occupied cells with at least one empty 6-neighbor (out of bounds counts
    // as empty)
    std::vector<std::array<int, 3>> surface_cells() const;

    // non-empty and the empty region reachable from the grid boundary is a
    // single 6-connected component
    bool watertight() const;

    const std::vector<std::uint64_t>& words() const { return words_; }
    std::vector<std::uint64_t>& words() { return words_; }

private:
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(k) * res_ + j) * res_ + i;
    }
    int res_ = 0;
    Box3 bounds_;
    std::vector<std::uint64_t> words_;
};

struct PointCloud {
    std::vector<Vec3> points;
};

// Per-token geometric descriptors: local scale s (model units), hierarchy
// depth d (0..5), curvature r (1/model-units, 0 for lines and control
// tokens). Arrays are aligned with the sequence tokens.
struct GeomDescriptors {
    std::vector<double> s;
    std::vector<int> d;
    std::vector<double> r;

    int size() const { return static_cast<int>(s.size()); }
};

// Per-token hierarchical anchors: parent node type (0 = none, then
// NodeType + 1), sibling index clamped to [0,31], and the token class as
// relational role. Derived structurally from the sequence alone.
struct HierarchyInfo {
    std::vector<int> parent_type;   // 0..6
    std::vector<int> sibling;       // 0..31
    std::vector<int> role;          // TokenClass
};
inline constexpr int kParentTypeCount = 7;
inline constexpr int kSiblingClamp = 31;

// Rasterizes and sweeps each design step on its plane, combining with the
// accumulator per the step's boolean op (New/Join union, Cut subtracts,
// Intersect intersects). World bounds are fixed at [-1,1]^3. Throws when the
// final occupancy is empty.
VoxelGrid execute(const CadTree& tree, int resolution);

// n uniform samples from occupied surface cells, deterministic per seed.
PointCloud sample_points(const VoxelGrid& grid, int n, std::uint64_t seed);

GeomDescriptors descriptors(const CadTree& tree, const CadSequence& seq);

HierarchyInfo hierarchy_info(const CadSequence& seq);
HierarchyInfo neutral_hierarchy(int n_tokens);

}  // namespace gfcad
