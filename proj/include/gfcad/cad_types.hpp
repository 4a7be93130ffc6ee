#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gfcad/tokens.hpp"

namespace gfcad {

// A 2-dimensional token. Coordinates carry (p_x, p_y), both in [11,266];
// scalar tokens carry (value, pad); structural tokens carry (id, pad).
struct TokenPair {
    TokenId a = tok::kPad;
    TokenId b = tok::kPad;

    bool operator==(const TokenPair&) const = default;
};

inline constexpr int kDefaultMaxTokens = 256;  // covers 240 design tokens + delimiters

// Flat sketch-extrusion program. tokens/type_flags/step_flags are aligned
// index-for-index; positions >= valid_len are (pad, pad).
struct CadSequence {
    std::vector<TokenPair> tokens;
    std::vector<std::uint8_t> type_flags;   // TokenClass values, [0, n_f)
    std::vector<std::uint16_t> step_flags;  // design-step index, 0 outside steps
    int valid_len = 0;

    int size() const { return static_cast<int>(tokens.size()); }

    bool operator==(const CadSequence&) const = default;
};

enum class CurveKind : std::uint8_t { Line = 0, Arc = 1, Circle = 2 };

// Quantized 2D point in sketch space.
struct QPoint {
    TokenId x = tok::kValueMin;
    TokenId y = tok::kValueMin;

    bool operator==(const QPoint&) const = default;
};

// Line: start/end. Arc: start/mid/end (non-collinear). Circle: center +
// perimeter point. All coordinates are quantized token ids.
struct SketchPrimitive {
    CurveKind kind = CurveKind::Line;
    QPoint p0;  // line start / arc start / circle center
    QPoint p1;  // line end   / arc mid   / circle perimeter point
    QPoint p2;  // arc end (unused otherwise)

    bool operator==(const SketchPrimitive&) const = default;
};

enum class BooleanOp : std::uint8_t { New = 0, Cut = 1, Join = 2, Intersect = 3 };

// beta is carried as a scalar token with value quantize(beta_index / 3)
inline TokenId beta_to_token(BooleanOp b) {
    return quantize(static_cast<double>(static_cast<int>(b)) / 3.0);
}
inline BooleanOp beta_from_token(TokenId t) {
    double u = dequantize(t);
    int idx = static_cast<int>(std::floor(u * 3.0 + 0.5));
    check(idx >= 0 && idx <= 3, ErrorKind::Validation, "beta token out of range");
    return static_cast<BooleanOp>(idx);
}

// All fields quantized; serialization order is theta, phi, gamma, tau_x,
// tau_y, tau_z, sigma, d_plus, d_minus, beta.
struct ExtrusionParams {
    TokenId theta = tok::kValueMin;
    TokenId phi = tok::kValueMin;
    TokenId gamma = tok::kValueMin;
    TokenId tau_x = quantize(0.5);
    TokenId tau_y = quantize(0.5);
    TokenId tau_z = quantize(0.5);
    TokenId sigma = quantize(0.5);
    TokenId d_plus = tok::kValueMin;
    TokenId d_minus = tok::kValueMin;
    BooleanOp beta = BooleanOp::New;

    bool operator==(const ExtrusionParams&) const = default;
};
inline constexpr int kExtrusionScalarCount = 9;  // theta..d_minus, beta handled separately

enum class NodeType : std::uint8_t {
    Solid = 0,
    Sketch = 1,
    Face = 2,
    Loop = 3,
    Curve = 4,
    Extrusion = 5,
};

struct TreeNode {
    NodeType node_type = NodeType::Solid;
    std::optional<SketchPrimitive> curve;     // set iff node_type == Curve
    std::optional<ExtrusionParams> extrusion; // set iff node_type == Extrusion
    std::vector<int> children;                // ordered, design order
    int parent = -1;
};

// Solid -> {Sketch, Extrusion} alternating per design step; Sketch -> Face
// -> Loop -> Curve. Single root, acyclic.
struct CadTree {
    std::vector<TreeNode> nodes;
    int root = 0;

    const TreeNode& node(int i) const { return nodes.at(static_cast<std::size_t>(i)); }
    TreeNode& node(int i) { return nodes.at(static_cast<std::size_t>(i)); }
    int add_node(TreeNode n) {
        nodes.push_back(std::move(n));
        return static_cast<int>(nodes.size()) - 1;
    }
};

// Structural equality (type/params/children recursively from the roots);
// node indices are allowed to differ.
bool trees_equal(const CadTree& a, const CadTree& b);

// Canonical depth-first preorder renumbering; serialization and JSON output
// are defined over this form.
CadTree canonicalize(const CadTree& tree);

}  // namespace gfcad
