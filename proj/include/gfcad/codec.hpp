#pragma once

#include <string>

#include "gfcad/cad_types.hpp"

namespace gfcad {

// Tree -> flat sequence. Depth-first: cls, then per design step the sketch
// tokens (each curve's coordinate pairs followed by e_c, loops closed by
// e_l, faces by e_f, the sketch by e_s) and the extrusion scalars ending
// with e_e; the solid closes with e_solid then end, padded to max_tokens.
// Throws a Validation error naming the offending node on open loops, empty
// sketches, or missing extrusions.
CadSequence serialize_tree(const CadTree& tree, int max_tokens = kDefaultMaxTokens);

// Inverse of serialize_tree: a single left-to-right pass driven by the
// terminator tokens. Throws a Validation error carrying the token index on
// unmatched terminators, unknown ids, or extrusion tokens inside a sketch.
CadTree deserialize_sequence(const CadSequence& seq);

// dataset filter report; never throws
struct ValidationReport {
    bool has_sketch_and_extrusion = false;
    bool loops_closed = false;
    bool executes_to_solid = false;
    std::string detail;

    bool all() const { return has_sketch_and_extrusion && loops_closed && executes_to_solid; }
};

// Third criterion executes the geometry at this resolution.
inline constexpr int kValidationResolution = 32;

ValidationReport validate_sequence(const CadSequence& seq);

// Design-token count: valid tokens excluding cls, e_solid, end and padding.
int design_token_count(const CadSequence& seq);

// Alternative counting: one unit per curve plus one per extrusion.
int command_unit_count(const CadSequence& seq);

}  // namespace gfcad
