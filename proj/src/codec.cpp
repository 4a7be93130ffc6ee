#include "gfcad/codec.hpp"

#include <algorithm>

#include "gfcad/geometry.hpp"

namespace gfcad {

namespace {

struct Emitter {
    CadSequence seq;
    int step = 0;

    void emit(TokenPair p, TokenClass c) {
        seq.tokens.push_back(p);
        seq.type_flags.push_back(static_cast<std::uint8_t>(c));
        seq.step_flags.push_back(static_cast<std::uint16_t>(step));
    }
    void emit_structural(TokenClass c) {
        emit({structural_token_for_class(c), tok::kPad}, c);
    }
    void emit_coord(QPoint p) { emit({p.x, p.y}, TokenClass::Coord); }
    void emit_scalar(TokenId v) { emit({v, tok::kPad}, TokenClass::ExtScalar); }
};

void require(bool cond, int node, const std::string& what) {
    check(cond, ErrorKind::Validation,
          "serialize_tree: " + what + " (node " + std::to_string(node) + ")");
}

QPoint curve_start(const SketchPrimitive& c) {
    return c.kind == CurveKind::Circle ? c.p0 : c.p0;
}
QPoint curve_end(const SketchPrimitive& c) {
    switch (c.kind) {
        case CurveKind::Line: return c.p1;
        case CurveKind::Arc: return c.p2;
        case CurveKind::Circle: return c.p0;  // closed on itself
    }
    return c.p0;
}

bool collinear(QPoint a, QPoint b, QPoint c) {
    long ax = a.x, ay = a.y, bx = b.x, by = b.y, cx = c.x, cy = c.y;
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax) == 0;
}

void check_loop_closed(const CadTree& tree, int loop_idx) {
    const TreeNode& loop = tree.node(loop_idx);
    require(!loop.children.empty(), loop_idx, "empty loop");
    std::vector<const SketchPrimitive*> curves;
    for (int ci : loop.children) {
        const TreeNode& cn = tree.node(ci);
        require(cn.node_type == NodeType::Curve && cn.curve.has_value(), ci,
                "loop child is not a curve");
        curves.push_back(&*cn.curve);
    }
    if (curves.size() == 1) {
        require(curves[0]->kind == CurveKind::Circle, loop.children[0],
                "single-curve loop must be a circle");
        require(curves[0]->p1 != curves[0]->p0, loop.children[0],
                "circle perimeter point equals center");
        return;
    }
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const SketchPrimitive* cur = curves[i];
        const SketchPrimitive* nxt = curves[(i + 1) % curves.size()];
        require(cur->kind != CurveKind::Circle, loop.children[i],
                "circle inside a multi-curve loop");
        if (cur->kind == CurveKind::Arc) {
            require(!collinear(cur->p0, cur->p1, cur->p2), loop.children[i],
                    "collinear arc must be encoded as a line");
        }
        require(curve_end(*cur) == curve_start(*nxt), loop.children[i], "open loop");
    }
}

void emit_curve(Emitter& em, const SketchPrimitive& c) {
    switch (c.kind) {
        case CurveKind::Line:
            em.emit_coord(c.p0);
            em.emit_coord(c.p1);
            break;
        case CurveKind::Arc:
            em.emit_coord(c.p0);
            em.emit_coord(c.p1);
            em.emit_coord(c.p2);
            break;
        case CurveKind::Circle:
            em.emit_coord(c.p0);
            em.emit_coord(c.p1);
            break;
    }
    em.emit_structural(TokenClass::EndCurve);
}

}  // namespace

CadSequence serialize_tree(const CadTree& tree, int max_tokens) {
    check(!tree.nodes.empty(), ErrorKind::Validation, "serialize_tree: empty tree");
    const TreeNode& root = tree.node(tree.root);
    require(root.node_type == NodeType::Solid, tree.root, "root is not a solid");
    require(!root.children.empty(), tree.root, "empty solid");
    require(root.children.size() % 2 == 0, tree.root,
            "solid children must be sketch-extrusion pairs");

    Emitter em;
    em.emit_structural(TokenClass::Cls);

    int n_steps = static_cast<int>(root.children.size()) / 2;
    for (int j = 0; j < n_steps; ++j) {
        int sketch_idx = root.children[2 * j];
        int ext_idx = root.children[2 * j + 1];
        const TreeNode& sketch = tree.node(sketch_idx);
        const TreeNode& ext = tree.node(ext_idx);
        require(sketch.node_type == NodeType::Sketch, sketch_idx,
                "expected sketch at even child slot");
        require(ext.node_type == NodeType::Extrusion && ext.extrusion.has_value(), ext_idx,
                "missing extrusion");
        require(!sketch.children.empty(), sketch_idx, "empty sketch");

        em.step = j + 1;
        for (int fi : sketch.children) {
            const TreeNode& face = tree.node(fi);
            require(face.node_type == NodeType::Face, fi, "sketch child is not a face");
            require(!face.children.empty(), fi, "empty face");
            for (int li : face.children) {
                const TreeNode& loop = tree.node(li);
                require(loop.node_type == NodeType::Loop, li, "face child is not a loop");
                check_loop_closed(tree, li);
                for (int ci : loop.children) emit_curve(em, *tree.node(ci).curve);
                em.emit_structural(TokenClass::EndLoop);
            }
            em.emit_structural(TokenClass::EndFace);
        }
        em.emit_structural(TokenClass::EndSketch);

        const ExtrusionParams& e = *ext.extrusion;
        require(e.d_plus > tok::kValueMin || e.d_minus > tok::kValueMin, ext_idx,
                "extrusion has zero depth both ways");
        for (TokenId v : {e.theta, e.phi, e.gamma, e.tau_x, e.tau_y, e.tau_z,
                          e.sigma, e.d_plus, e.d_minus}) {
            em.emit_scalar(v);
        }
        em.emit({beta_to_token(e.beta), tok::kPad}, TokenClass::Beta);
        em.emit_structural(TokenClass::EndExtrusion);
    }

    // closing tokens keep the last step index so step_flags stay non-decreasing
    em.step = n_steps;
    em.emit_structural(TokenClass::EndSolid);
    em.emit_structural(TokenClass::End);

    CadSequence& seq = em.seq;
    seq.valid_len = static_cast<int>(seq.tokens.size());
    check(seq.valid_len <= max_tokens, ErrorKind::Validation,
          "serialize_tree: sequence length " + std::to_string(seq.valid_len) +
              " exceeds max_tokens " + std::to_string(max_tokens));
    seq.tokens.resize(static_cast<std::size_t>(max_tokens));
    seq.type_flags.resize(static_cast<std::size_t>(max_tokens),
                          static_cast<std::uint8_t>(TokenClass::Pad));
    seq.step_flags.resize(static_cast<std::size_t>(max_tokens),
                          static_cast<std::uint16_t>(n_steps));
    return seq;
}

namespace {

class Parser {
public:
    explicit Parser(const CadSequence& seq) : seq_(seq) {}

    CadTree parse() {
        expect_structural(TokenClass::Cls, "cls");
        CadTree tree;
        int solid = tree.add_node({NodeType::Solid, {}, {}, {}, -1});
        tree.root = solid;

        bool any_step = false;
        while (true) {
            if (pos_ >= seq_.valid_len || peek_class() == TokenClass::Pad) {
                fail(any_step ? "missing e_solid" : "empty solid");
            }
            if (peek_class() == TokenClass::EndSolid) break;
            parse_step(tree, solid);
            any_step = true;
        }
        fail_if(!any_step, "empty solid");
        expect_structural(TokenClass::EndSolid, "e_solid");
        expect_structural(TokenClass::End, "end");
        fail_if(pos_ < seq_.valid_len, "trailing tokens after end");
        return tree;
    }

private:
    const CadSequence& seq_;
    int pos_ = 0;

    [[noreturn]] void fail(const std::string& what) const {
        throw Error(ErrorKind::Validation, "deserialize_sequence: " + what +
                                               " at token " + std::to_string(pos_));
    }
    void fail_if(bool cond, const std::string& what) const {
        if (cond) fail(what);
    }

    TokenPair cur() const {
        if (pos_ >= seq_.valid_len || pos_ >= seq_.size()) {
            throw Error(ErrorKind::Validation,
                        "deserialize_sequence: unexpected end of sequence at token " +
                            std::to_string(pos_));
        }
        return seq_.tokens[static_cast<std::size_t>(pos_)];
    }

    // classify from the token pair itself; flags are advisory
    TokenClass peek_class() const {
        TokenPair p = cur();
        if (is_reserved(p.a)) {
            fail_if(p.b != tok::kPad, "structural token with nonzero second component");
            fail_if(p.a > tok::kEndExtrusion, "unknown reserved token id");
            return static_cast<TokenClass>(p.a);
        }
        return p.b == tok::kPad ? TokenClass::ExtScalar : TokenClass::Coord;
    }

    void advance() { ++pos_; }

    void expect_structural(TokenClass c, const std::string& name) {
        fail_if(peek_class() != c, "missing " + name);
        advance();
    }

    QPoint read_coord() {
        TokenPair p = cur();
        fail_if(!is_value(p.a) || !is_value(p.b), "expected coordinate pair");
        advance();
        return {p.a, p.b};
    }

    TokenId read_scalar() {
        TokenPair p = cur();
        fail_if(!is_value(p.a), "expected scalar value token");
        fail_if(p.b != tok::kPad, "scalar token with nonzero second component");
        advance();
        return p.a;
    }

    void parse_step(CadTree& tree, int solid) {
        int sketch = tree.add_node({NodeType::Sketch, {}, {}, {}, solid});
        tree.node(solid).children.push_back(sketch);

        bool any_face = false;
        while (peek_class() == TokenClass::Coord) {
            parse_face(tree, sketch);
            any_face = true;
        }
        fail_if(!any_face, "sketch with no faces");
        expect_structural(TokenClass::EndSketch, "e_s");

        int ext = tree.add_node({NodeType::Extrusion, {}, {}, {}, solid});
        tree.node(solid).children.push_back(ext);
        ExtrusionParams e;
        TokenId* slots[kExtrusionScalarCount] = {&e.theta, &e.phi, &e.gamma,
                                                 &e.tau_x, &e.tau_y, &e.tau_z,
                                                 &e.sigma, &e.d_plus, &e.d_minus};
        for (auto* s : slots) {
            fail_if(peek_class() == TokenClass::Coord, "coordinate token inside extrusion");
            *s = read_scalar();
        }
        e.beta = beta_from_token(read_scalar());
        expect_structural(TokenClass::EndExtrusion, "e_e");
        fail_if(e.d_plus == tok::kValueMin && e.d_minus == tok::kValueMin,
                "extrusion has zero depth both ways");
        tree.node(ext).extrusion = e;
    }

    void parse_face(CadTree& tree, int sketch) {
        int face = tree.add_node({NodeType::Face, {}, {}, {}, sketch});
        tree.node(sketch).children.push_back(face);
        bool any_loop = false;
        while (peek_class() == TokenClass::Coord) {
            parse_loop(tree, face);
            any_loop = true;
        }
        fail_if(!any_loop, "face with no loops");
        expect_structural(TokenClass::EndFace, "e_f");
    }

    void parse_loop(CadTree& tree, int face) {
        int loop = tree.add_node({NodeType::Loop, {}, {}, {}, face});
        tree.node(face).children.push_back(loop);

        std::vector<SketchPrimitive> curves;
        std::vector<std::vector<QPoint>> raw;
        while (peek_class() == TokenClass::Coord) {
            std::vector<QPoint> pts;
            while (peek_class() == TokenClass::Coord) {
                pts.push_back(read_coord());
                fail_if(pts.size() > 3, "curve with more than three coordinate pairs");
            }
            fail_if(peek_class() == TokenClass::ExtScalar,
                    "extrusion token inside sketch region");
            expect_structural(TokenClass::EndCurve, "e_c");
            fail_if(pts.size() < 2, "curve with fewer than two coordinate pairs");
            raw.push_back(std::move(pts));
        }
        expect_structural(TokenClass::EndLoop, "e_l");
        fail_if(raw.empty(), "loop with no curves");

        if (raw.size() == 1 && raw[0].size() == 2) {
            // a lone two-point curve cannot close as a line; it is a circle
            SketchPrimitive c;
            c.kind = CurveKind::Circle;
            c.p0 = raw[0][0];
            c.p1 = raw[0][1];
            fail_if(c.p1 == c.p0, "circle perimeter point equals center");
            curves.push_back(c);
        } else {
            for (auto& pts : raw) {
                SketchPrimitive c;
                if (pts.size() == 2) {
                    c.kind = CurveKind::Line;
                    c.p0 = pts[0];
                    c.p1 = pts[1];
                } else {
                    c.kind = CurveKind::Arc;
                    c.p0 = pts[0];
                    c.p1 = pts[1];
                    c.p2 = pts[2];
                    fail_if(collinear(c.p0, c.p1, c.p2), "collinear arc");
                }
                curves.push_back(c);
            }
            for (std::size_t i = 0; i < curves.size(); ++i) {
                const SketchPrimitive& cu = curves[i];
                const SketchPrimitive& nx = curves[(i + 1) % curves.size()];
                fail_if(curve_end(cu) != curve_start(nx), "open loop");
            }
        }
        for (auto& c : curves) {
            int ci = tree.add_node({NodeType::Curve, c, {}, {}, loop});
            tree.node(loop).children.push_back(ci);
        }
    }
};

bool scan_loops_closed(const CadSequence& seq) {
    // lenient scan: group coordinate runs into curves per loop, require every
    // loop chain to close and every sketch to own at least one closed loop;
    // used by validate_sequence so a broken loop does not abort the report
    int n = std::min(seq.valid_len, seq.size());
    std::vector<std::vector<QPoint>> loop_curves;
    std::vector<QPoint> pts;
    bool ok = true;
    int sketches = 0;
    int closed_in_sketch = 0;
    auto close_loop = [&]() {
        if (loop_curves.empty()) return;
        bool closed = true;
        if (loop_curves.size() == 1 && loop_curves[0].size() == 2) {
            closed = loop_curves[0][0] != loop_curves[0][1];  // circle, center != rim
        } else {
            for (std::size_t k = 0; k < loop_curves.size(); ++k) {
                const auto& cu = loop_curves[k];
                const auto& nx = loop_curves[(k + 1) % loop_curves.size()];
                if (cu.size() < 2 || cu.back() != nx.front()) closed = false;
            }
        }
        if (closed) ++closed_in_sketch; else ok = false;
        loop_curves.clear();
    };
    for (int i = 0; i < n; ++i) {
        TokenPair p = seq.tokens[static_cast<std::size_t>(i)];
        if (!is_reserved(p.a) && is_value(p.b)) {
            pts.push_back({p.a, p.b});
            continue;
        }
        if (is_reserved(p.a)) {
            if (p.a == tok::kEndCurve) {
                if (pts.size() < 2) ok = false;
                loop_curves.push_back(pts);
                pts.clear();
            } else if (p.a == tok::kEndLoop) {
                if (!pts.empty()) { ok = false; pts.clear(); }
                if (loop_curves.empty()) ok = false;
                close_loop();
            } else if (p.a == tok::kEndSketch) {
                ++sketches;
                if (closed_in_sketch == 0) ok = false;
                closed_in_sketch = 0;
            }
        } else {
            pts.clear();  // scalar token: extrusion region
        }
    }
    return ok && sketches > 0;
}

}  // namespace

CadTree deserialize_sequence(const CadSequence& seq) {
    check(seq.valid_len >= 1 && seq.valid_len <= seq.size(), ErrorKind::Validation,
          "deserialize_sequence: invalid valid_len");
    return Parser(seq).parse();
}

ValidationReport validate_sequence(const CadSequence& seq) {
    ValidationReport rep;
    int sketches = 0, extrusions = 0;
    int n = std::min(seq.valid_len, seq.size());
    for (int i = 0; i < n; ++i) {
        TokenId a = seq.tokens[static_cast<std::size_t>(i)].a;
        if (a == tok::kEndSketch) ++sketches;
        if (a == tok::kEndExtrusion) ++extrusions;
    }
    rep.has_sketch_and_extrusion = sketches > 0 && extrusions > 0 && sketches == extrusions;
    rep.loops_closed = scan_loops_closed(seq);

    try {
        CadTree tree = deserialize_sequence(seq);
        VoxelGrid grid = execute(tree, kValidationResolution);
        rep.executes_to_solid = grid.occupied_count() > 0;
    } catch (const Error& e) {
        rep.executes_to_solid = false;
        rep.detail = e.what();
    }
    return rep;
}

int design_token_count(const CadSequence& seq) {
    int n = std::min(seq.valid_len, seq.size());
    int count = 0;
    for (int i = 0; i < n; ++i) {
        TokenId a = seq.tokens[static_cast<std::size_t>(i)].a;
        if (a == tok::kPad || a == tok::kCls || a == tok::kEnd || a == tok::kEndSolid) continue;
        ++count;
    }
    return count;
}

int command_unit_count(const CadSequence& seq) {
    int n = std::min(seq.valid_len, seq.size());
    int count = 0;
    for (int i = 0; i < n; ++i) {
        TokenId a = seq.tokens[static_cast<std::size_t>(i)].a;
        if (a == tok::kEndCurve || a == tok::kEndExtrusion) ++count;
    }
    return count;
}

}  // namespace gfcad
