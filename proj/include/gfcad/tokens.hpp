#pragma once

#include <cstdint>

#include "gfcad/common.hpp"

namespace gfcad {

// Token vocabulary. Ids 0..10 are reserved structural/control ids, 11..266
// are the 256 quantization levels for continuous values. Reserved ids are
// all distinct (pad/cls/end and the per-level terminators each get one id;
// 9 and 10 are unassigned).
using TokenId = std::uint16_t;

namespace tok {
inline constexpr TokenId kPad = 0;
inline constexpr TokenId kCls = 1;
inline constexpr TokenId kEnd = 2;
inline constexpr TokenId kEndSolid = 3;
inline constexpr TokenId kEndSketch = 4;
inline constexpr TokenId kEndFace = 5;
inline constexpr TokenId kEndLoop = 6;
inline constexpr TokenId kEndCurve = 7;
inline constexpr TokenId kEndExtrusion = 8;

inline constexpr TokenId kValueMin = 11;
inline constexpr TokenId kValueMax = 266;
inline constexpr int kVocabSize = 267;  // V: ids 0..266
}  // namespace tok

inline bool is_reserved(TokenId t) { return t < tok::kValueMin; }
inline bool is_value(TokenId t) { return t >= tok::kValueMin && t <= tok::kValueMax; }

// x in [0,1] -> 11 + round(x*255), round-half-up.
inline TokenId quantize(double x) {
    check(x >= 0.0 && x <= 1.0, ErrorKind::Validation,
          "quantize: input outside [0,1]: " + std::to_string(x));
    int level = static_cast<int>(std::floor(x * 255.0 + 0.5));
    return static_cast<TokenId>(tok::kValueMin + level);
}

// inverse map into [0,1]; reserved ids are a domain error
inline double dequantize(TokenId t) {
    check(is_value(t), ErrorKind::Validation,
          "dequantize: reserved or out-of-range token id " + std::to_string(t));
    return static_cast<double>(t - tok::kValueMin) / 255.0;
}

// Token-type flag classes (C_type). One class per structural family plus
// coord / extrusion-scalar / beta; n_f = 12.
enum class TokenClass : std::uint8_t {
    Pad = 0,
    Cls = 1,
    End = 2,
    EndSolid = 3,
    EndSketch = 4,
    EndFace = 5,
    EndLoop = 6,
    EndCurve = 7,
    EndExtrusion = 8,
    Coord = 9,
    ExtScalar = 10,
    Beta = 11,
};
inline constexpr int kNumTokenClasses = 12;

// structural classes 0..8 carry their own token id
inline TokenId structural_token_for_class(TokenClass c) {
    return static_cast<TokenId>(c);
}

// Normalization conventions used before quantization (callers of quantize()
// map raw model values into [0,1] with these).
namespace norm {
inline constexpr double kTwoPi = 6.283185307179586476925286766559;

inline double coord_to_unit(double v) { return (v + 1.0) * 0.5; }      // [-1,1] -> [0,1]
inline double unit_to_coord(double u) { return u * 2.0 - 1.0; }
inline double angle_to_unit(double a) { return a / kTwoPi; }           // [0,2pi) -> [0,1)
inline double unit_to_angle(double u) { return u * kTwoPi; }
inline double scale_to_unit(double s) { return s * 0.5; }              // (0,2] -> (0,1]
inline double unit_to_scale(double u) { return u * 2.0; }
// depths are already in [0,1]
}  // namespace norm

}  // namespace gfcad
