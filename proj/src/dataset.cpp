#include "gfcad/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gfcad/codec.hpp"
#include "gfcad/geometry.hpp"

namespace gfcad {

namespace {

constexpr int kMinProgramTokens = 17;  // single circle step incl. terminators

struct Pt {
    double x, y;
};

QPoint quantize_point(Pt p) {
    auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };
    return {quantize(clamp01(norm::coord_to_unit(p.x))),
            quantize(clamp01(norm::coord_to_unit(p.y)))};
}

// token cost bookkeeping (design tokens)
constexpr int kLineCost = 3, kArcCost = 4, kCircleCost = 3;
constexpr int kExtrusionCost = 11;

struct LoopPlan {
    std::vector<SketchPrimitive> curves;
    int cost = 0;  // curves + e_l
};

LoopPlan make_circle_loop(Rng& rng, Pt center, double max_r) {
    double r = rng.range_real(0.12, std::max(0.13, max_r));
    LoopPlan loop;
    SketchPrimitive c;
    c.kind = CurveKind::Circle;
    c.p0 = quantize_point(center);
    c.p1 = quantize_point({center.x + r, center.y});
    loop.curves.push_back(c);
    loop.cost = kCircleCost + 1;
    return loop;
}

LoopPlan make_chain_loop(Rng& rng, Pt center, double max_r, int budget) {
    // star-shaped polygon; some edges become arcs when the budget allows
    int max_v = std::min(6, (budget - 1) / kLineCost);
    int nv = rng.range_int(3, std::max(3, max_v));
    double R = rng.range_real(0.2, std::max(0.21, max_r));

    std::vector<double> angles(static_cast<std::size_t>(nv));
    for (int tries = 0; tries < 32; ++tries) {
        for (double& a : angles) a = rng.uniform() * norm::kTwoPi;
        std::sort(angles.begin(), angles.end());
        double min_gap = angles[0] + norm::kTwoPi - angles.back();
        for (std::size_t i = 1; i < angles.size(); ++i) {
            min_gap = std::min(min_gap, angles[i] - angles[i - 1]);
        }
        if (min_gap > 0.45) break;
    }

    std::vector<QPoint> verts;
    for (double a : angles) {
        double rho = rng.range_real(0.6 * R, R);
        verts.push_back(quantize_point({center.x + rho * std::cos(a),
                                        center.y + rho * std::sin(a)}));
    }

    LoopPlan loop;
    int arc_budget = budget - 1 - nv * kLineCost;  // extra token per arc
    for (int i = 0; i < nv; ++i) {
        QPoint a = verts[static_cast<std::size_t>(i)];
        QPoint b = verts[static_cast<std::size_t>((i + 1) % nv)];
        SketchPrimitive c;
        double ax = norm::unit_to_coord(dequantize(a.x)), ay = norm::unit_to_coord(dequantize(a.y));
        double bx = norm::unit_to_coord(dequantize(b.x)), by = norm::unit_to_coord(dequantize(b.y));
        double ex = bx - ax, ey = by - ay;
        double chord = std::hypot(ex, ey);
        bool want_arc = arc_budget > 0 && chord > 0.14 && rng.uniform() < 0.35;
        if (want_arc) {
            // outward bulge, large enough to stay non-collinear after quantization
            double nx = ey / chord, ny = -ex / chord;
            double mx = (ax + bx) * 0.5, my = (ay + by) * 0.5;
            if (nx * (mx - center.x) + ny * (my - center.y) < 0) {
                nx = -nx;
                ny = -ny;
            }
            double bulge = rng.range_real(0.06, 0.06 + 0.2 * chord);
            QPoint mid = quantize_point({std::clamp(mx + nx * bulge, -0.99, 0.99),
                                         std::clamp(my + ny * bulge, -0.99, 0.99)});
            long cross = (static_cast<long>(mid.x) - a.x) * (static_cast<long>(b.y) - a.y) -
                         (static_cast<long>(mid.y) - a.y) * (static_cast<long>(b.x) - a.x);
            if (cross != 0 && mid != a && mid != b) {
                c.kind = CurveKind::Arc;
                c.p0 = a;
                c.p1 = mid;
                c.p2 = b;
                loop.curves.push_back(c);
                loop.cost += kArcCost;
                --arc_budget;
                continue;
            }
        }
        c.kind = CurveKind::Line;
        c.p0 = a;
        c.p1 = b;
        loop.curves.push_back(c);
        loop.cost += kLineCost;
    }
    loop.cost += 1;  // e_l

    // degenerate after quantization (duplicate vertices) voids the loop
    for (std::size_t i = 0; i < loop.curves.size(); ++i) {
        const auto& cu = loop.curves[i];
        QPoint s = cu.p0;
        QPoint e = cu.kind == CurveKind::Arc ? cu.p2 : cu.p1;
        if (s == e) {
            loop.curves.clear();
            return loop;
        }
    }
    return loop;
}

ExtrusionParams random_extrusion(Rng& rng, bool first_step) {
    ExtrusionParams e;
    auto qangle = [&](double frac) { return quantize(frac); };
    if (rng.uniform() < 0.7) {
        e.theta = qangle(0.0);
        e.phi = qangle(0.0);
        e.gamma = qangle(0.0);
    } else {
        e.theta = quantize(rng.uniform() * 0.999);
        e.phi = quantize(rng.uniform() * 0.999);
        e.gamma = quantize(rng.uniform() * 0.999);
    }
    e.tau_x = quantize(norm::coord_to_unit(rng.range_real(-0.25, 0.25)));
    e.tau_y = quantize(norm::coord_to_unit(rng.range_real(-0.25, 0.25)));
    e.tau_z = quantize(norm::coord_to_unit(rng.range_real(-0.25, 0.25)));
    e.sigma = quantize(norm::scale_to_unit(rng.range_real(0.5, 1.2)));
    e.d_plus = quantize(rng.range_real(0.15, 0.6));
    e.d_minus = rng.uniform() < 0.5 ? quantize(0.0) : quantize(rng.range_real(0.05, 0.3));
    if (first_step) {
        e.beta = BooleanOp::New;
    } else {
        double u = rng.uniform();
        e.beta = u < 0.40   ? BooleanOp::New
                 : u < 0.70 ? BooleanOp::Join
                 : u < 0.95 ? BooleanOp::Cut
                            : BooleanOp::Intersect;
    }
    return e;
}

const Pt kFaceCenters[3] = {{-0.45, -0.45}, {0.45, -0.45}, {-0.45, 0.45}};

// returns the step's token cost, or 0 when construction degenerated
int build_step(CadTree& tree, int solid, Rng& rng, int budget, bool first_step) {
    int sketch = tree.add_node({NodeType::Sketch, {}, {}, {}, solid});
    tree.node(solid).children.push_back(sketch);

    int sketch_budget = budget - kExtrusionCost - 1;  // minus e_s
    int max_faces = std::min(3, sketch_budget / (kCircleCost + 2));
    int n_faces = rng.range_int(1, std::max(1, max_faces));
    int cost = kExtrusionCost + 1;

    int per_face = sketch_budget / n_faces;
    for (int f = 0; f < n_faces; ++f) {
        int face = tree.add_node({NodeType::Face, {}, {}, {}, sketch});
        tree.node(sketch).children.push_back(face);
        Pt center = kFaceCenters[f];
        int face_budget = per_face - 1;  // minus e_f
        cost += 1;

        bool add_hole = face_budget >= 2 * (kCircleCost + 1) + kLineCost && rng.uniform() < 0.3;
        int outer_budget = add_hole ? face_budget - (kCircleCost + 1) : face_budget;

        LoopPlan outer;
        if (outer_budget < kLineCost * 3 + 1 || rng.uniform() < 0.4) {
            outer = make_circle_loop(rng, center, 0.4);
        } else {
            outer = make_chain_loop(rng, center, 0.42, outer_budget);
            if (outer.curves.empty()) outer = make_circle_loop(rng, center, 0.4);
        }
        int outer_loop = tree.add_node({NodeType::Loop, {}, {}, {}, face});
        tree.node(face).children.push_back(outer_loop);
        for (const auto& c : outer.curves) {
            int ci = tree.add_node({NodeType::Curve, c, {}, {}, outer_loop});
            tree.node(outer_loop).children.push_back(ci);
        }
        cost += outer.cost;

        if (add_hole) {
            LoopPlan hole = make_circle_loop(rng, center, 0.09);
            int hole_loop = tree.add_node({NodeType::Loop, {}, {}, {}, face});
            tree.node(face).children.push_back(hole_loop);
            for (const auto& c : hole.curves) {
                int ci = tree.add_node({NodeType::Curve, c, {}, {}, hole_loop});
                tree.node(hole_loop).children.push_back(ci);
            }
            cost += hole.cost;
        }
    }

    int ext = tree.add_node({NodeType::Extrusion, {}, {}, {}, solid});
    tree.node(solid).children.push_back(ext);
    tree.node(ext).extrusion = random_extrusion(rng, first_step);
    return cost;
}

CadTree build_random_tree(Rng& rng, int min_len, int max_len) {
    CadTree tree;
    int solid = tree.add_node({NodeType::Solid, {}, {}, {}, -1});
    tree.root = solid;

    int target = rng.range_int(std::max(min_len, kMinProgramTokens), max_len);
    int cur = 0;
    int steps = 0;
    while (steps < 6 && cur + kMinProgramTokens <= target) {
        int remaining = target - cur;
        int cap = remaining;
        if (steps < 5 && remaining > 2 * kMinProgramTokens && rng.uniform() < 0.6) {
            cap = rng.range_int(kMinProgramTokens, remaining - kMinProgramTokens);
        }
        cur += build_step(tree, solid, rng, cap, steps == 0);
        ++steps;
        if (cur >= min_len && rng.uniform() < 0.35) break;
    }
    return tree;
}

}  // namespace

std::vector<CadTree> generate(int n, int min_len, int max_len, std::uint64_t seed) {
    check(n >= 1, ErrorKind::Validation, "generate: n must be >= 1");
    check(min_len >= 2 && min_len <= max_len && max_len <= 240, ErrorKind::Validation,
          "generate: length range must satisfy 2 <= min <= max <= 240");
    check(max_len >= kMinProgramTokens, ErrorKind::Validation,
          "generate: infeasible range, minimal valid program is " +
              std::to_string(kMinProgramTokens) + " design tokens");

    std::vector<CadTree> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(i)));
        bool done = false;
        for (int attempt = 0; attempt < 256 && !done; ++attempt) {
            CadTree tree = build_random_tree(rng, min_len, max_len);
            try {
                CadSequence seq = serialize_tree(tree);
                int len = design_token_count(seq);
                if (len < min_len || len > max_len) continue;
                execute(tree, kValidationResolution);  // throws when empty
                out.push_back(std::move(tree));
                done = true;
            } catch (const Error&) {
            }
        }
        check(done, ErrorKind::Validation,
              "generate: failed to build a valid tree for item " + std::to_string(i));
    }
    return out;
}

int sequence_length(const CadSequence& seq, bool count_command_units) {
    return count_command_units ? command_unit_count(seq) : design_token_count(seq);
}

namespace {

int length_bin(int len) {
    if (len < 40) return 0;
    if (len < 60) return 1;
    if (len < 80) return 2;
    if (len < 160) return 3;
    return 4;
}

}  // namespace

CorpusStats stats(const std::vector<CadSequence>& corpus, bool count_command_units) {
    check(!corpus.empty(), ErrorKind::Validation, "stats: empty corpus");
    CorpusStats s;
    s.total = static_cast<int>(corpus.size());
    double sum = 0;
    std::array<int, 5> counts{};
    for (const CadSequence& seq : corpus) {
        int len = sequence_length(seq, count_command_units);
        sum += len;
        ++counts[static_cast<std::size_t>(length_bin(len))];
    }
    s.avg_length = sum / s.total;
    for (std::size_t b = 0; b < 5; ++b) {
        s.bins[b] = 100.0 * counts[b] / s.total;
    }
    return s;
}

std::string stats_to_csv(const CorpusStats& s) {
    std::ostringstream os;
    os.precision(6);
    os << "dataset,total,avg_length,bin_1_40,bin_40_60,bin_60_80,bin_80_160,bin_160_240\n";
    os << "corpus," << s.total << "," << s.avg_length;
    for (double b : s.bins) os << "," << b;
    os << "\n";
    const ReferenceStats& r = kDeepCad240Reference;
    os << r.dataset << "," << r.total << "," << r.avg_length;
    for (double b : r.bins) os << "," << b;
    os << "\n";
    return os.str();
}

SplitIndices split(const std::vector<int>& lengths, const std::array<double, 3>& ratios,
                   std::uint64_t seed) {
    check(!lengths.empty(), ErrorKind::Validation, "split: empty corpus");
    double sum = ratios[0] + ratios[1] + ratios[2];
    check(std::abs(sum - 1.0) < 1e-9 && ratios[0] >= 0 && ratios[1] >= 0 && ratios[2] >= 0,
          ErrorKind::Validation, "split: ratios must be non-negative and sum to 1");

    int n = static_cast<int>(lengths.size());
    // global largest-remainder targets
    std::array<int, 3> target{};
    std::array<double, 3> frac{};
    int assigned = 0;
    for (int k = 0; k < 3; ++k) {
        double exact = ratios[static_cast<std::size_t>(k)] * n;
        target[static_cast<std::size_t>(k)] = static_cast<int>(std::floor(exact));
        frac[static_cast<std::size_t>(k)] = exact - target[static_cast<std::size_t>(k)];
        assigned += target[static_cast<std::size_t>(k)];
    }
    while (assigned < n) {
        int best = 0;
        for (int k = 1; k < 3; ++k) {
            if (frac[static_cast<std::size_t>(k)] > frac[static_cast<std::size_t>(best)]) best = k;
        }
        ++target[static_cast<std::size_t>(best)];
        frac[static_cast<std::size_t>(best)] = -1;
        ++assigned;
    }

    // per-bin shuffled queues
    std::array<std::vector<int>, 5> bins;
    for (int i = 0; i < n; ++i) {
        bins[static_cast<std::size_t>(length_bin(lengths[static_cast<std::size_t>(i)]))]
            .push_back(i);
    }
    Rng rng(seed ^ 0x5157ULL);
    for (auto& bin : bins) {
        for (std::size_t i = bin.size(); i > 1; --i) {
            std::size_t j = rng.below(i);
            std::swap(bin[i - 1], bin[j]);
        }
    }

    // deal each bin proportionally, then fix drift against the global targets
    SplitIndices out;
    std::array<std::vector<int>*, 3> splits{&out.train, &out.val, &out.test};
    for (auto& bin : bins) {
        int bn = static_cast<int>(bin.size());
        std::array<int, 3> btarget{};
        std::array<double, 3> bfrac{};
        int bassigned = 0;
        for (int k = 0; k < 3; ++k) {
            double exact = ratios[static_cast<std::size_t>(k)] * bn;
            btarget[static_cast<std::size_t>(k)] = static_cast<int>(std::floor(exact));
            bfrac[static_cast<std::size_t>(k)] = exact - btarget[static_cast<std::size_t>(k)];
            bassigned += btarget[static_cast<std::size_t>(k)];
        }
        while (bassigned < bn) {
            int best = 0;
            for (int k = 1; k < 3; ++k) {
                if (bfrac[static_cast<std::size_t>(k)] > bfrac[static_cast<std::size_t>(best)])
                    best = k;
            }
            ++btarget[static_cast<std::size_t>(best)];
            bfrac[static_cast<std::size_t>(best)] = -1;
            ++bassigned;
        }
        std::size_t pos = 0;
        for (int k = 0; k < 3; ++k) {
            for (int c = 0; c < btarget[static_cast<std::size_t>(k)]; ++c) {
                splits[static_cast<std::size_t>(k)]->push_back(bin[pos++]);
            }
        }
    }

    // drift fixup: move items between splits until global targets hold
    for (int k = 0; k < 3; ++k) {
        while (static_cast<int>(splits[static_cast<std::size_t>(k)]->size()) >
               target[static_cast<std::size_t>(k)]) {
            int dst = 0;
            for (int m = 0; m < 3; ++m) {
                if (static_cast<int>(splits[static_cast<std::size_t>(m)]->size()) <
                    target[static_cast<std::size_t>(m)]) {
                    dst = m;
                    break;
                }
            }
            splits[static_cast<std::size_t>(dst)]->push_back(
                splits[static_cast<std::size_t>(k)]->back());
            splits[static_cast<std::size_t>(k)]->pop_back();
        }
    }
    for (auto* s : splits) std::sort(s->begin(), s->end());
    return out;
}

}  // namespace gfcad
