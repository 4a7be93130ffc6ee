#pragma once

#include <array>
#include <string>
#include <vector>

#include "gfcad/cad_types.hpp"

namespace gfcad {

// Random valid sketch-extrusion programs: 1-6 design steps, 1-3 faces per
// sketch, loops from closed line/arc chains or single circles. Every output
// serializes, round-trips, passes the filters, and executes to a non-empty
// solid; design-token length lands inside [min_len, max_len].
std::vector<CadTree> generate(int n, int min_len, int max_len, std::uint64_t seed);

// length bins 1-40, 40-60, 60-80, 80-160, 160-240 (percent)
struct CorpusStats {
    int total = 0;
    double avg_length = 0;
    std::array<double, 5> bins{};
};

CorpusStats stats(const std::vector<CadSequence>& corpus, bool count_command_units = false);

int sequence_length(const CadSequence& seq, bool count_command_units = false);

// reference row echoed into stats reports for comparison
struct ReferenceStats {
    const char* dataset;
    double total;
    double avg_length;
    std::array<double, 5> bins;
};
inline constexpr ReferenceStats kDeepCad240Reference{
    "DeepCAD-240", 215914, 36.2, {76.6, 12.0, 5.9, 5.2, 0.21}};

std::string stats_to_csv(const CorpusStats& s);

struct SplitIndices {
    std::vector<int> train, val, test;
};

// disjoint, exhaustive, seeded; stratified by length bin
SplitIndices split(const std::vector<int>& lengths, const std::array<double, 3>& ratios,
                   std::uint64_t seed);

}  // namespace gfcad
