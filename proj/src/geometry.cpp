#include "gfcad/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "gfcad/codec.hpp"

namespace gfcad {

namespace {

struct Vec2 {
    double x = 0, y = 0;
};

Vec2 point_model(QPoint p) {
    return {norm::unit_to_coord(dequantize(p.x)), norm::unit_to_coord(dequantize(p.y))};
}

double dist(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

constexpr double kDegenerateArea = 1e-12;

// circumcircle of three points; returns false when (near-)collinear
bool circumcircle(Vec2 a, Vec2 b, Vec2 c, Vec2& center, double& radius) {
    double d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    if (std::abs(d) < kDegenerateArea) return false;
    double a2 = a.x * a.x + a.y * a.y;
    double b2 = b.x * b.x + b.y * b.y;
    double c2 = c.x * c.x + c.y * c.y;
    center.x = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
    center.y = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
    radius = dist(center, a);
    return true;
}

double wrap_ccw(double ang) {
    double w = std::fmod(ang, norm::kTwoPi);
    if (w < 0) w += norm::kTwoPi;
    return w;
}

// arc parameterization from start/mid/end
struct ArcGeom {
    Vec2 center;
    double radius = 0;
    double start_angle = 0;
    double sweep = 0;   // positive magnitude of the swept angle
    bool ccw = true;
    bool degenerate = false;  // collinear; treat as chord line

    bool contains_angle(double theta) const {
        double rel = wrap_ccw(theta - start_angle);
        return ccw ? rel <= sweep + 1e-12 : rel >= norm::kTwoPi - sweep - 1e-12;
    }
};

ArcGeom arc_geometry(Vec2 s, Vec2 m, Vec2 e) {
    ArcGeom g;
    if (!circumcircle(s, m, e, g.center, g.radius)) {
        g.degenerate = true;
        return g;
    }
    double as = std::atan2(s.y - g.center.y, s.x - g.center.x);
    double am = std::atan2(m.y - g.center.y, m.x - g.center.x);
    double ae = std::atan2(e.y - g.center.y, e.x - g.center.x);
    double to_m = wrap_ccw(am - as);
    double to_e = wrap_ccw(ae - as);
    g.start_angle = as;
    if (to_m <= to_e) {
        g.ccw = true;
        g.sweep = to_e;
    } else {
        g.ccw = false;
        g.sweep = norm::kTwoPi - to_e;
    }
    return g;
}

// resolved curve in model units
struct CurveGeom {
    CurveKind kind;
    Vec2 a, b, c;   // line a-b / arc a(start) b(mid) c(end) / circle a(center) b(rim)
    ArcGeom arc;    // valid for arcs
    double circle_r = 0;
};

CurveGeom resolve_curve(const SketchPrimitive& p) {
    CurveGeom g;
    g.kind = p.kind;
    g.a = point_model(p.p0);
    g.b = point_model(p.p1);
    g.c = point_model(p.p2);
    if (p.kind == CurveKind::Arc) {
        g.arc = arc_geometry(g.a, g.b, g.c);
        if (g.arc.degenerate) {
            g.kind = CurveKind::Line;  // near-collinear arcs degrade to chords
            g.b = g.c;
        }
    } else if (p.kind == CurveKind::Circle) {
        g.circle_r = dist(g.a, g.b);
    }
    return g;
}

// horizontal +x ray crossing count parity helpers
int ray_crossings_line(Vec2 p, Vec2 a, Vec2 b) {
    if ((a.y > p.y) == (b.y > p.y)) return 0;
    double x_int = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
    return x_int > p.x ? 1 : 0;
}

int ray_crossings_circle(Vec2 p, Vec2 c, double r) {
    double dy = p.y - c.y;
    double disc = r * r - dy * dy;
    if (disc <= 0) return 0;
    double dx = std::sqrt(disc);
    int n = 0;
    if (c.x - dx > p.x) ++n;
    if (c.x + dx > p.x) ++n;
    return n;
}

int ray_crossings_arc(Vec2 p, const ArcGeom& g) {
    double dy = p.y - g.center.y;
    double disc = g.radius * g.radius - dy * dy;
    if (disc <= 0) return 0;
    double dx = std::sqrt(disc);
    int n = 0;
    for (double xi : {g.center.x - dx, g.center.x + dx}) {
        if (xi <= p.x) continue;
        double theta = std::atan2(dy, xi - g.center.x);
        if (g.contains_angle(theta)) ++n;
    }
    return n;
}

// fixed perturbation keeps the ray away from quantized vertices/tangencies
constexpr double kRayNudge = 1.1920928955078125e-7;

struct FaceGeom {
    std::vector<CurveGeom> curves;  // all loops flattened; parity is even-odd

    bool inside(Vec2 q) const {
        q.y += kRayNudge;
        int crossings = 0;
        for (const CurveGeom& c : curves) {
            switch (c.kind) {
                case CurveKind::Line: crossings += ray_crossings_line(q, c.a, c.b); break;
                case CurveKind::Arc: crossings += ray_crossings_arc(q, c.arc); break;
                case CurveKind::Circle: crossings += ray_crossings_circle(q, c.a, c.circle_r); break;
            }
        }
        return (crossings & 1) != 0;
    }
};

struct Box2 {
    double lo_x = std::numeric_limits<double>::infinity();
    double lo_y = std::numeric_limits<double>::infinity();
    double hi_x = -std::numeric_limits<double>::infinity();
    double hi_y = -std::numeric_limits<double>::infinity();

    void grow(Vec2 p) {
        lo_x = std::min(lo_x, p.x);
        lo_y = std::min(lo_y, p.y);
        hi_x = std::max(hi_x, p.x);
        hi_y = std::max(hi_y, p.y);
    }
    void grow(const Box2& o) {
        lo_x = std::min(lo_x, o.lo_x);
        lo_y = std::min(lo_y, o.lo_y);
        hi_x = std::max(hi_x, o.hi_x);
        hi_y = std::max(hi_y, o.hi_y);
    }
    bool valid() const { return lo_x <= hi_x; }
    double diag() const { return valid() ? std::hypot(hi_x - lo_x, hi_y - lo_y) : 0.0; }
};

Box2 curve_bbox(const CurveGeom& g) {
    Box2 b;
    switch (g.kind) {
        case CurveKind::Line:
            b.grow(g.a);
            b.grow(g.b);
            break;
        case CurveKind::Arc: {
            b.grow(g.a);
            b.grow(g.c);
            // axis extremes that lie on the arc
            const double axes[4] = {0.0, 1.5707963267948966, 3.141592653589793,
                                    4.71238898038469};
            for (double t : axes) {
                if (g.arc.contains_angle(t)) {
                    b.grow(Vec2{g.arc.center.x + g.arc.radius * std::cos(t),
                                g.arc.center.y + g.arc.radius * std::sin(t)});
                }
            }
            break;
        }
        case CurveKind::Circle:
            b.grow(Vec2{g.a.x - g.circle_r, g.a.y - g.circle_r});
            b.grow(Vec2{g.a.x + g.circle_r, g.a.y + g.circle_r});
            break;
    }
    return b;
}

double curve_length(const CurveGeom& g) {
    switch (g.kind) {
        case CurveKind::Line: return dist(g.a, g.b);
        case CurveKind::Arc: return g.arc.radius * g.arc.sweep;
        case CurveKind::Circle: return norm::kTwoPi * g.circle_r;
    }
    return 0.0;
}

double curve_curvature(const CurveGeom& g) {
    switch (g.kind) {
        case CurveKind::Line: return 0.0;
        case CurveKind::Arc: return g.arc.radius > 0 ? 1.0 / g.arc.radius : 0.0;
        case CurveKind::Circle: return g.circle_r > 0 ? 1.0 / g.circle_r : 0.0;
    }
    return 0.0;
}

struct Mat3 {
    double m[3][3];

    Vec3 apply(Vec3 v) const {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }
    Vec3 apply_transposed(Vec3 v) const {
        return {m[0][0] * v.x + m[1][0] * v.y + m[2][0] * v.z,
                m[0][1] * v.x + m[1][1] * v.y + m[2][1] * v.z,
                m[0][2] * v.x + m[1][2] * v.y + m[2][2] * v.z};
    }
};

// intrinsic Z-Y-X: yaw gamma, pitch phi, roll theta
Mat3 rotation_zyx(double theta, double phi, double gamma) {
    double cz = std::cos(gamma), sz = std::sin(gamma);
    double cy = std::cos(phi), sy = std::sin(phi);
    double cx = std::cos(theta), sx = std::sin(theta);
    Mat3 r;
    r.m[0][0] = cz * cy;
    r.m[0][1] = cz * sy * sx - sz * cx;
    r.m[0][2] = cz * sy * cx + sz * sx;
    r.m[1][0] = sz * cy;
    r.m[1][1] = sz * sy * sx + cz * cx;
    r.m[1][2] = sz * sy * cx - cz * sx;
    r.m[2][0] = -sy;
    r.m[2][1] = cy * sx;
    r.m[2][2] = cy * cx;
    return r;
}

struct StepGeom {
    std::vector<FaceGeom> faces;
    Box2 sketch_bbox;
    Mat3 rot;
    Vec3 trans;
    double sigma = 1.0;
    double d_plus = 0.0;
    double d_minus = 0.0;
    BooleanOp op = BooleanOp::New;

    bool contains(Vec3 w) const {
        Vec3 local = rot.apply_transposed({w.x - trans.x, w.y - trans.y, w.z - trans.z});
        if (local.z < -d_minus || local.z > d_plus) return false;
        if (sigma <= 0) return false;
        Vec2 q{local.x / sigma, local.y / sigma};
        for (const FaceGeom& f : faces) {
            if (f.inside(q)) return true;
        }
        return false;
    }

    Box3 world_bbox() const {
        Box3 out;
        out.lo = {std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity(),
                  std::numeric_limits<double>::infinity()};
        out.hi = {-out.lo.x, -out.lo.y, -out.lo.z};
        double xs[2] = {sigma * sketch_bbox.lo_x, sigma * sketch_bbox.hi_x};
        double ys[2] = {sigma * sketch_bbox.lo_y, sigma * sketch_bbox.hi_y};
        double zs[2] = {-d_minus, d_plus};
        for (double x : xs)
            for (double y : ys)
                for (double z : zs) {
                    Vec3 w = rot.apply({x, y, z});
                    w = {w.x + trans.x, w.y + trans.y, w.z + trans.z};
                    out.lo.x = std::min(out.lo.x, w.x);
                    out.lo.y = std::min(out.lo.y, w.y);
                    out.lo.z = std::min(out.lo.z, w.z);
                    out.hi.x = std::max(out.hi.x, w.x);
                    out.hi.y = std::max(out.hi.y, w.y);
                    out.hi.z = std::max(out.hi.z, w.z);
                }
        return out;
    }
};

StepGeom resolve_step(const CadTree& tree, int sketch_idx, const ExtrusionParams& e) {
    StepGeom sg;
    const TreeNode& sketch = tree.node(sketch_idx);
    for (int fi : sketch.children) {
        FaceGeom fg;
        for (int li : tree.node(fi).children) {
            for (int ci : tree.node(li).children) {
                fg.curves.push_back(resolve_curve(*tree.node(ci).curve));
            }
        }
        for (const CurveGeom& c : fg.curves) sg.sketch_bbox.grow(curve_bbox(c));
        sg.faces.push_back(std::move(fg));
    }
    sg.rot = rotation_zyx(norm::unit_to_angle(dequantize(e.theta)),
                          norm::unit_to_angle(dequantize(e.phi)),
                          norm::unit_to_angle(dequantize(e.gamma)));
    sg.trans = {norm::unit_to_coord(dequantize(e.tau_x)),
                norm::unit_to_coord(dequantize(e.tau_y)),
                norm::unit_to_coord(dequantize(e.tau_z))};
    sg.sigma = norm::unit_to_scale(dequantize(e.sigma));
    sg.d_plus = dequantize(e.d_plus);
    sg.d_minus = dequantize(e.d_minus);
    sg.op = e.beta;
    return sg;
}

}  // namespace

VoxelGrid::VoxelGrid(int resolution, Box3 bounds) : res_(resolution), bounds_(bounds) {
    check(resolution > 0, ErrorKind::Validation, "VoxelGrid: non-positive resolution");
    words_.assign((cell_count() + 63) / 64, 0);
}

std::size_t VoxelGrid::occupied_count() const {
    std::size_t n = 0;
    for (std::uint64_t w : words_) n += static_cast<std::size_t>(__builtin_popcountll(w));
    return n;
}

Vec3 VoxelGrid::cell_center(int i, int j, int k) const {
    double hx = (bounds_.hi.x - bounds_.lo.x) / res_;
    double hy = (bounds_.hi.y - bounds_.lo.y) / res_;
    double hz = (bounds_.hi.z - bounds_.lo.z) / res_;
    return {bounds_.lo.x + hx * (i + 0.5), bounds_.lo.y + hy * (j + 0.5),
            bounds_.lo.z + hz * (k + 0.5)};
}

double VoxelGrid::cell_volume() const {
    double hx = (bounds_.hi.x - bounds_.lo.x) / res_;
    double hy = (bounds_.hi.y - bounds_.lo.y) / res_;
    double hz = (bounds_.hi.z - bounds_.lo.z) / res_;
    return hx * hy * hz;
}

VoxelGrid VoxelGrid::unite(const VoxelGrid& other) const {
    check(res_ == other.res_, ErrorKind::Validation, "voxel boolean: resolution mismatch");
    VoxelGrid out = *this;
    for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] |= other.words_[i];
    return out;
}

VoxelGrid VoxelGrid::subtract(const VoxelGrid& other) const {
    check(res_ == other.res_, ErrorKind::Validation, "voxel boolean: resolution mismatch");
    VoxelGrid out = *this;
    for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] &= ~other.words_[i];
    return out;
}

VoxelGrid VoxelGrid::intersect(const VoxelGrid& other) const {
    check(res_ == other.res_, ErrorKind::Validation, "voxel boolean: resolution mismatch");
    VoxelGrid out = *this;
    for (std::size_t i = 0; i < words_.size(); ++i) out.words_[i] &= other.words_[i];
    return out;
}

std::vector<std::array<int, 3>> VoxelGrid::surface_cells() const {
    std::vector<std::array<int, 3>> cells;
    auto occupied = [&](int i, int j, int k) {
        if (i < 0 || j < 0 || k < 0 || i >= res_ || j >= res_ || k >= res_) return false;
        return get(i, j, k);
    };
    for (int k = 0; k < res_; ++k)
        for (int j = 0; j < res_; ++j)
            for (int i = 0; i < res_; ++i) {
                if (!get(i, j, k)) continue;
                if (!occupied(i - 1, j, k) || !occupied(i + 1, j, k) ||
                    !occupied(i, j - 1, k) || !occupied(i, j + 1, k) ||
                    !occupied(i, j, k - 1) || !occupied(i, j, k + 1)) {
                    cells.push_back({i, j, k});
                }
            }
    return cells;
}

bool VoxelGrid::watertight() const {
    if (occupied_count() == 0) return false;
    // collect empty boundary cells; the outside region must be one component
    std::vector<std::uint8_t> seen(cell_count(), 0);
    auto id = [&](int i, int j, int k) {
        return (static_cast<std::size_t>(k) * res_ + j) * res_ + i;
    };
    std::vector<std::array<int, 3>> boundary;
    for (int k = 0; k < res_; ++k)
        for (int j = 0; j < res_; ++j)
            for (int i = 0; i < res_; ++i) {
                bool on_boundary = i == 0 || j == 0 || k == 0 || i == res_ - 1 ||
                                   j == res_ - 1 || k == res_ - 1;
                if (on_boundary && !get(i, j, k)) boundary.push_back({i, j, k});
            }
    if (boundary.empty()) return true;  // solid fills the shell; no outside region
    std::deque<std::array<int, 3>> queue{boundary.front()};
    seen[id(boundary[0][0], boundary[0][1], boundary[0][2])] = 1;
    while (!queue.empty()) {
        auto [i, j, k] = queue.front();
        queue.pop_front();
        const int d[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
        for (auto& dd : d) {
            int ni = i + dd[0], nj = j + dd[1], nk = k + dd[2];
            if (ni < 0 || nj < 0 || nk < 0 || ni >= res_ || nj >= res_ || nk >= res_) continue;
            if (get(ni, nj, nk) || seen[id(ni, nj, nk)]) continue;
            seen[id(ni, nj, nk)] = 1;
            queue.push_back({ni, nj, nk});
        }
    }
    for (auto& c : boundary) {
        if (!seen[id(c[0], c[1], c[2])]) return false;
    }
    return true;
}

VoxelGrid execute(const CadTree& tree, int resolution) {
    check(resolution >= 16 && resolution <= 256, ErrorKind::Validation,
          "execute: resolution must be in [16,256]");
    check(!tree.nodes.empty(), ErrorKind::Validation, "execute: empty tree");
    const TreeNode& root = tree.node(tree.root);
    check(root.node_type == NodeType::Solid && root.children.size() >= 2 &&
              root.children.size() % 2 == 0,
          ErrorKind::Validation, "execute: malformed solid");

    Box3 world;  // fixed [-1,1]^3
    VoxelGrid acc(resolution, world);
    double h = acc.cell_size();

    int n_steps = static_cast<int>(root.children.size()) / 2;
    for (int s = 0; s < n_steps; ++s) {
        const TreeNode& ext = tree.node(root.children[2 * s + 1]);
        check(ext.node_type == NodeType::Extrusion && ext.extrusion.has_value(),
              ErrorKind::Validation, "execute: missing extrusion");
        StepGeom sg = resolve_step(tree, root.children[2 * s], *ext.extrusion);

        VoxelGrid body(resolution, world);
        Box3 bb = sg.world_bbox();
        auto clamp_idx = [&](double v) {
            return std::clamp(static_cast<int>(std::floor((v + 1.0) / h)), 0, resolution - 1);
        };
        int i0 = clamp_idx(bb.lo.x), i1 = clamp_idx(bb.hi.x);
        int j0 = clamp_idx(bb.lo.y), j1 = clamp_idx(bb.hi.y);
        int k0 = clamp_idx(bb.lo.z), k1 = clamp_idx(bb.hi.z);
        for (int k = k0; k <= k1; ++k)
            for (int j = j0; j <= j1; ++j)
                for (int i = i0; i <= i1; ++i) {
                    if (sg.contains(acc.cell_center(i, j, k))) body.set(i, j, k, true);
                }

        switch (sg.op) {
            case BooleanOp::New:
            case BooleanOp::Join: acc = acc.unite(body); break;
            case BooleanOp::Cut: acc = acc.subtract(body); break;
            case BooleanOp::Intersect: acc = acc.intersect(body); break;
        }
    }

    check(acc.occupied_count() > 0, ErrorKind::Validation,
          "execute: empty solid after execution (non-watertight/empty)");
    return acc;
}

PointCloud sample_points(const VoxelGrid& grid, int n, std::uint64_t seed) {
    check(n >= 1, ErrorKind::Validation, "sample_points: n must be >= 1");
    check(grid.occupied_count() > 0, ErrorKind::Validation, "sample_points: empty grid");
    auto cells = grid.surface_cells();
    check(!cells.empty(), ErrorKind::Validation, "sample_points: no surface cells");

    Rng rng(seed);
    double h = grid.cell_size();
    PointCloud pc;
    pc.points.reserve(static_cast<std::size_t>(n));
    for (int s = 0; s < n; ++s) {
        const auto& c = cells[rng.below(cells.size())];
        Vec3 lo{grid.bounds().lo.x + h * c[0], grid.bounds().lo.y + h * c[1],
                grid.bounds().lo.z + h * c[2]};
        pc.points.push_back({lo.x + h * rng.uniform(), lo.y + h * rng.uniform(),
                             lo.z + h * rng.uniform()});
    }
    return pc;
}

GeomDescriptors descriptors(const CadTree& tree, const CadSequence& seq) {
    CadSequence expect = serialize_tree(tree, seq.size());
    check(expect == seq, ErrorKind::Validation, "descriptors: tree/sequence mismatch");

    GeomDescriptors out;
    int n = seq.size();
    out.s.assign(static_cast<std::size_t>(n), 0.0);
    out.d.assign(static_cast<std::size_t>(n), 0);
    out.r.assign(static_cast<std::size_t>(n), 0.0);

    int pos = 0;
    auto put = [&](double s, int d, double r) {
        out.s[static_cast<std::size_t>(pos)] = s;
        out.d[static_cast<std::size_t>(pos)] = d;
        out.r[static_cast<std::size_t>(pos)] = r;
        ++pos;
    };

    put(0.0, 0, 0.0);  // cls
    const TreeNode& root = tree.node(tree.root);
    int n_steps = static_cast<int>(root.children.size()) / 2;
    for (int j = 0; j < n_steps; ++j) {
        int sketch_idx = root.children[2 * j];
        const TreeNode& sketch = tree.node(sketch_idx);
        const ExtrusionParams& e = *tree.node(root.children[2 * j + 1]).extrusion;

        Box2 sketch_bb;
        for (int fi : sketch.children) {
            Box2 face_bb;
            for (int li : tree.node(fi).children) {
                Box2 loop_bb;
                for (int ci : tree.node(li).children) {
                    CurveGeom g = resolve_curve(*tree.node(ci).curve);
                    double len = curve_length(g);
                    double curv = curve_curvature(g);
                    int n_coords = tree.node(ci).curve->kind == CurveKind::Arc ? 3 : 2;
                    for (int q = 0; q < n_coords; ++q) put(len, 5, curv);
                    put(len, 4, curv);  // e_c
                    loop_bb.grow(curve_bbox(g));
                }
                put(loop_bb.diag(), 3, 0.0);  // e_l
                face_bb.grow(loop_bb);
            }
            put(face_bb.diag(), 2, 0.0);  // e_f
            sketch_bb.grow(face_bb);
        }
        put(sketch_bb.diag(), 1, 0.0);  // e_s

        StepGeom sg = resolve_step(tree, sketch_idx, e);
        Box3 bb = sg.world_bbox();
        double ext_diag = std::sqrt((bb.hi.x - bb.lo.x) * (bb.hi.x - bb.lo.x) +
                                    (bb.hi.y - bb.lo.y) * (bb.hi.y - bb.lo.y) +
                                    (bb.hi.z - bb.lo.z) * (bb.hi.z - bb.lo.z));
        for (int q = 0; q < kExtrusionScalarCount + 1; ++q) put(ext_diag, 1, 0.0);  // scalars + beta
        put(ext_diag, 1, 0.0);  // e_e
    }
    put(0.0, 0, 0.0);  // e_solid
    put(0.0, 0, 0.0);  // end
    // padding stays (0, 0, 0)
    return out;
}

HierarchyInfo hierarchy_info(const CadSequence& seq) {
    int n = seq.size();
    HierarchyInfo out;
    out.parent_type.assign(static_cast<std::size_t>(n), 0);
    out.sibling.assign(static_cast<std::size_t>(n), 0);
    out.role.assign(static_cast<std::size_t>(n), static_cast<int>(TokenClass::Pad));

    // parent-type codes: 0 none, then NodeType + 1
    constexpr int kSolid = 1, kSketch = 2, kFace = 3, kLoop = 4, kCurve = 5, kExtrusion = 6;

    int step = 0;        // 0-based design step
    int face_in_sketch = 0, loop_in_face = 0, curve_in_loop = 0, coord_in_curve = 0;
    int ext_slot = 0;
    bool in_extrusion = false;

    int limit = std::min(seq.valid_len, n);
    for (int i = 0; i < limit; ++i) {
        TokenPair p = seq.tokens[static_cast<std::size_t>(i)];
        TokenClass cls;
        if (is_reserved(p.a)) {
            cls = p.a <= tok::kEndExtrusion ? static_cast<TokenClass>(p.a) : TokenClass::Pad;
        } else {
            cls = is_value(p.b) ? TokenClass::Coord
                                : (in_extrusion ? (ext_slot == kExtrusionScalarCount
                                                       ? TokenClass::Beta
                                                       : TokenClass::ExtScalar)
                                                : TokenClass::ExtScalar);
        }
        out.role[static_cast<std::size_t>(i)] = static_cast<int>(cls);
        auto set = [&](int parent, int sib) {
            out.parent_type[static_cast<std::size_t>(i)] = parent;
            out.sibling[static_cast<std::size_t>(i)] = std::min(sib, kSiblingClamp);
        };
        switch (cls) {
            case TokenClass::Coord:
                set(kCurve, coord_in_curve);
                ++coord_in_curve;
                break;
            case TokenClass::EndCurve:
                set(kLoop, curve_in_loop);
                ++curve_in_loop;
                coord_in_curve = 0;
                break;
            case TokenClass::EndLoop:
                set(kFace, loop_in_face);
                ++loop_in_face;
                curve_in_loop = 0;
                break;
            case TokenClass::EndFace:
                set(kSketch, face_in_sketch);
                ++face_in_sketch;
                loop_in_face = 0;
                break;
            case TokenClass::EndSketch:
                set(kSolid, 2 * step);
                face_in_sketch = 0;
                in_extrusion = true;
                ext_slot = 0;
                break;
            case TokenClass::ExtScalar:
            case TokenClass::Beta:
                set(kExtrusion, ext_slot);
                ++ext_slot;
                break;
            case TokenClass::EndExtrusion:
                set(kSolid, 2 * step + 1);
                in_extrusion = false;
                ++step;
                break;
            default:
                set(0, 0);  // cls/end/e_solid/pad
                break;
        }
    }
    return out;
}

HierarchyInfo neutral_hierarchy(int n_tokens) {
    HierarchyInfo out;
    out.parent_type.assign(static_cast<std::size_t>(n_tokens), 0);
    out.sibling.assign(static_cast<std::size_t>(n_tokens), 0);
    out.role.assign(static_cast<std::size_t>(n_tokens), static_cast<int>(TokenClass::Pad));
    return out;
}

}  // namespace gfcad
