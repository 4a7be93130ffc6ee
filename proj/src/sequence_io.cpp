#include "gfcad/sequence_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gfcad {

using nlohmann::json;

namespace {

const char* kCurveKindNames[] = {"line", "arc", "circle"};
const char* kBetaNames[] = {"new", "cut", "join", "intersect"};

template <typename T, std::size_t N>
int name_index(const T& name, const char* const (&names)[N], const char* what) {
    for (std::size_t i = 0; i < N; ++i) {
        if (name == names[i]) return static_cast<int>(i);
    }
    throw Error(ErrorKind::Validation, std::string("unknown ") + what + ": " + std::string(name));
}

const char* kNodeTypeNames[] = {"solid", "sketch", "face", "loop", "curve", "extrusion"};

void push_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void push_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}
std::uint16_t read_u16(const std::vector<std::uint8_t>& b, std::size_t& off) {
    check(off + 2 <= b.size(), ErrorKind::Io, "binary stream truncated");
    std::uint16_t v = static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
    off += 2;
    return v;
}
std::uint32_t read_u32(const std::vector<std::uint8_t>& b, std::size_t& off) {
    check(off + 4 <= b.size(), ErrorKind::Io, "binary stream truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[off + i]) << (8 * i);
    off += 4;
    return v;
}

}  // namespace

CadSequence sequence_from_tokens(std::vector<TokenPair> tokens, int max_tokens) {
    check(static_cast<int>(tokens.size()) <= max_tokens, ErrorKind::Validation,
          "sequence_from_tokens: too many tokens");
    tokens.resize(static_cast<std::size_t>(max_tokens));

    CadSequence seq;
    seq.tokens = std::move(tokens);
    seq.type_flags.assign(seq.tokens.size(), static_cast<std::uint8_t>(TokenClass::Pad));
    seq.step_flags.assign(seq.tokens.size(), 0);

    // valid region: through the first `end`, else up to the first pad
    int n = seq.size();
    int valid = n;
    for (int i = 0; i < n; ++i) {
        TokenPair p = seq.tokens[static_cast<std::size_t>(i)];
        if (p.a == tok::kEnd && p.b == tok::kPad) {
            valid = i + 1;
            break;
        }
        if (p.a == tok::kPad && p.b == tok::kPad) {
            valid = i;
            break;
        }
    }
    seq.valid_len = valid;
    for (int i = valid; i < n; ++i) seq.tokens[static_cast<std::size_t>(i)] = {};

    int completed_steps = 0;
    bool in_extrusion = false;
    int ext_slot = 0;
    for (int i = 0; i < valid; ++i) {
        TokenPair p = seq.tokens[static_cast<std::size_t>(i)];
        TokenClass cls;
        int step;
        if (is_reserved(p.a)) {
            cls = p.a <= tok::kEndExtrusion ? static_cast<TokenClass>(p.a) : TokenClass::Pad;
            switch (cls) {
                case TokenClass::Cls: step = 0; break;
                case TokenClass::End:
                case TokenClass::EndSolid:
                case TokenClass::Pad: step = completed_steps; break;
                case TokenClass::EndSketch:
                    in_extrusion = true;
                    ext_slot = 0;
                    step = completed_steps + 1;
                    break;
                case TokenClass::EndExtrusion:
                    in_extrusion = false;
                    step = ++completed_steps;
                    break;
                default: step = completed_steps + 1; break;
            }
        } else if (is_value(p.b)) {
            cls = TokenClass::Coord;
            step = completed_steps + 1;
        } else {
            cls = in_extrusion && ext_slot == kExtrusionScalarCount ? TokenClass::Beta
                                                                    : TokenClass::ExtScalar;
            if (in_extrusion) ++ext_slot;
            step = completed_steps + 1;
        }
        seq.type_flags[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(cls);
        seq.step_flags[static_cast<std::size_t>(i)] = static_cast<std::uint16_t>(step);
    }
    for (int i = valid; i < n; ++i) {
        seq.step_flags[static_cast<std::size_t>(i)] = static_cast<std::uint16_t>(completed_steps);
    }
    return seq;
}

std::string sequence_to_json(const CadSequence& seq) {
    json j;
    j["version"] = 1;
    j["valid_len"] = seq.valid_len;
    json toks = json::array();
    for (const TokenPair& p : seq.tokens) toks.push_back({p.a, p.b});
    j["tokens"] = std::move(toks);
    j["type_flags"] = seq.type_flags;
    j["step_flags"] = seq.step_flags;
    return j.dump();
}

CadSequence sequence_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Io, std::string("sequence JSON parse failure: ") + e.what());
    }
    try {
        check(j.at("version").get<int>() == 1, ErrorKind::Io, "unsupported sequence version");
        CadSequence seq;
        for (const auto& t : j.at("tokens")) {
            check(t.is_array() && t.size() == 2, ErrorKind::Io, "token entry must be a pair");
            seq.tokens.push_back({t[0].get<TokenId>(), t[1].get<TokenId>()});
        }
        seq.type_flags = j.at("type_flags").get<std::vector<std::uint8_t>>();
        seq.step_flags = j.at("step_flags").get<std::vector<std::uint16_t>>();
        seq.valid_len = j.at("valid_len").get<int>();
        check(seq.type_flags.size() == seq.tokens.size() &&
                  seq.step_flags.size() == seq.tokens.size(),
              ErrorKind::Io, "sequence JSON: flag arrays misaligned with tokens");
        check(seq.valid_len >= 0 && seq.valid_len <= seq.size(), ErrorKind::Io,
              "sequence JSON: valid_len out of range");
        return seq;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Io, std::string("sequence JSON schema failure: ") + e.what());
    }
}

std::string tree_to_json(const CadTree& tree) {
    CadTree canon = canonicalize(tree);
    json j;
    j["version"] = 1;
    j["root"] = canon.root;
    json nodes = json::array();
    for (const TreeNode& n : canon.nodes) {
        json jn;
        jn["node_type"] = kNodeTypeNames[static_cast<int>(n.node_type)];
        jn["children"] = n.children;
        jn["parent"] = n.parent;
        if (n.curve) {
            json jc;
            jc["kind"] = kCurveKindNames[static_cast<int>(n.curve->kind)];
            json pts = json::array();
            pts.push_back({n.curve->p0.x, n.curve->p0.y});
            pts.push_back({n.curve->p1.x, n.curve->p1.y});
            if (n.curve->kind == CurveKind::Arc) pts.push_back({n.curve->p2.x, n.curve->p2.y});
            jc["points"] = std::move(pts);
            jn["curve"] = std::move(jc);
        }
        if (n.extrusion) {
            const ExtrusionParams& e = *n.extrusion;
            json je;
            je["theta"] = e.theta;
            je["phi"] = e.phi;
            je["gamma"] = e.gamma;
            je["tau_x"] = e.tau_x;
            je["tau_y"] = e.tau_y;
            je["tau_z"] = e.tau_z;
            je["sigma"] = e.sigma;
            je["d_plus"] = e.d_plus;
            je["d_minus"] = e.d_minus;
            je["beta"] = kBetaNames[static_cast<int>(e.beta)];
            jn["extrusion"] = std::move(je);
        }
        nodes.push_back(std::move(jn));
    }
    j["nodes"] = std::move(nodes);
    return j.dump();
}

CadTree tree_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Io, std::string("tree JSON parse failure: ") + e.what());
    }
    try {
        check(j.at("version").get<int>() == 1, ErrorKind::Io, "unsupported tree version");
        CadTree tree;
        tree.root = j.at("root").get<int>();
        for (const auto& jn : j.at("nodes")) {
            TreeNode n;
            n.node_type = static_cast<NodeType>(
                name_index(jn.at("node_type").get<std::string>(), kNodeTypeNames, "node_type"));
            n.children = jn.at("children").get<std::vector<int>>();
            n.parent = jn.at("parent").get<int>();
            if (jn.contains("curve")) {
                const auto& jc = jn.at("curve");
                SketchPrimitive c;
                c.kind = static_cast<CurveKind>(
                    name_index(jc.at("kind").get<std::string>(), kCurveKindNames, "curve kind"));
                const auto& pts = jc.at("points");
                check(pts.size() == (c.kind == CurveKind::Arc ? 3u : 2u), ErrorKind::Io,
                      "curve point count mismatch");
                c.p0 = {pts[0][0].get<TokenId>(), pts[0][1].get<TokenId>()};
                c.p1 = {pts[1][0].get<TokenId>(), pts[1][1].get<TokenId>()};
                if (c.kind == CurveKind::Arc) c.p2 = {pts[2][0].get<TokenId>(), pts[2][1].get<TokenId>()};
                n.curve = c;
            }
            if (jn.contains("extrusion")) {
                const auto& je = jn.at("extrusion");
                ExtrusionParams e;
                e.theta = je.at("theta").get<TokenId>();
                e.phi = je.at("phi").get<TokenId>();
                e.gamma = je.at("gamma").get<TokenId>();
                e.tau_x = je.at("tau_x").get<TokenId>();
                e.tau_y = je.at("tau_y").get<TokenId>();
                e.tau_z = je.at("tau_z").get<TokenId>();
                e.sigma = je.at("sigma").get<TokenId>();
                e.d_plus = je.at("d_plus").get<TokenId>();
                e.d_minus = je.at("d_minus").get<TokenId>();
                e.beta = static_cast<BooleanOp>(
                    name_index(je.at("beta").get<std::string>(), kBetaNames, "beta"));
                n.extrusion = e;
            }
            tree.nodes.push_back(std::move(n));
        }
        check(!tree.nodes.empty() && tree.root >= 0 &&
                  tree.root < static_cast<int>(tree.nodes.size()),
              ErrorKind::Io, "tree JSON: bad root index");
        return tree;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::Io, std::string("tree JSON schema failure: ") + e.what());
    }
}

std::vector<std::uint8_t> sequence_to_binary(const CadSequence& seq) {
    std::vector<std::uint8_t> out{'G', 'F', 'C', '1'};
    push_u32(out, static_cast<std::uint32_t>(seq.tokens.size()));
    for (const TokenPair& p : seq.tokens) {
        push_u16(out, p.a);
        push_u16(out, p.b);
    }
    return out;
}

CadSequence sequence_from_binary(const std::vector<std::uint8_t>& bytes, int max_tokens) {
    check(bytes.size() >= 8 && bytes[0] == 'G' && bytes[1] == 'F' && bytes[2] == 'C' &&
              bytes[3] == '1',
          ErrorKind::Io, "bad token stream magic (want GFC1)");
    std::size_t off = 4;
    std::uint32_t n = read_u32(bytes, off);
    std::vector<TokenPair> tokens;
    tokens.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        TokenId a = read_u16(bytes, off);
        TokenId b = read_u16(bytes, off);
        tokens.push_back({a, b});
    }
    return sequence_from_tokens(std::move(tokens), std::max(max_tokens, static_cast<int>(n)));
}

std::string pointcloud_to_obj(const PointCloud& pc) {
    std::ostringstream os;
    os.precision(9);
    for (const Vec3& p : pc.points) os << "v " << p.x << " " << p.y << " " << p.z << "\n";
    return os.str();
}

std::vector<std::uint8_t> pointcloud_to_f32(const PointCloud& pc) {
    std::vector<std::uint8_t> out;
    out.reserve(pc.points.size() * 12);
    auto push_f32 = [&](double v) {
        float f = static_cast<float>(v);
        std::uint32_t bits;
        static_assert(sizeof(bits) == sizeof(f));
        std::memcpy(&bits, &f, 4);
        push_u32(out, bits);
    };
    for (const Vec3& p : pc.points) {
        push_f32(p.x);
        push_f32(p.y);
        push_f32(p.z);
    }
    return out;
}

std::vector<std::uint8_t> voxelgrid_to_rle(const VoxelGrid& grid) {
    std::vector<std::uint8_t> out{'G', 'F', 'V', '1'};
    push_u32(out, static_cast<std::uint32_t>(grid.resolution()));
    auto push_f64 = [&](double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        push_u32(out, static_cast<std::uint32_t>(bits & 0xffffffffu));
        push_u32(out, static_cast<std::uint32_t>(bits >> 32));
    };
    const Box3& b = grid.bounds();
    for (double v : {b.lo.x, b.lo.y, b.lo.z, b.hi.x, b.hi.y, b.hi.z}) push_f64(v);

    int res = grid.resolution();
    std::uint8_t cur = 0;
    std::uint32_t run = 0;
    auto flush = [&]() {
        if (run == 0) return;
        out.push_back(cur);
        push_u32(out, run);
        run = 0;
    };
    for (int k = 0; k < res; ++k)
        for (int j = 0; j < res; ++j)
            for (int i = 0; i < res; ++i) {
                std::uint8_t v = grid.get(i, j, k) ? 1 : 0;
                if (run > 0 && v != cur) flush();
                cur = v;
                ++run;
            }
    flush();
    return out;
}

VoxelGrid voxelgrid_from_rle(const std::vector<std::uint8_t>& bytes) {
    check(bytes.size() >= 8 && bytes[0] == 'G' && bytes[1] == 'F' && bytes[2] == 'V' &&
              bytes[3] == '1',
          ErrorKind::Io, "bad voxel grid magic (want GFV1)");
    std::size_t off = 4;
    int res = static_cast<int>(read_u32(bytes, off));
    double vals[6];
    for (double& v : vals) {
        std::uint64_t lo = read_u32(bytes, off);
        std::uint64_t hi = read_u32(bytes, off);
        std::uint64_t bits = lo | (hi << 32);
        std::memcpy(&v, &bits, 8);
    }
    Box3 b{{vals[0], vals[1], vals[2]}, {vals[3], vals[4], vals[5]}};
    VoxelGrid grid(res, b);
    std::size_t cell = 0, total = grid.cell_count();
    while (off < bytes.size()) {
        std::uint8_t v = bytes[off++];
        std::uint32_t run = read_u32(bytes, off);
        for (std::uint32_t c = 0; c < run; ++c) {
            check(cell < total, ErrorKind::Io, "voxel RLE overruns grid");
            if (v) {
                int i = static_cast<int>(cell % res);
                int j = static_cast<int>((cell / res) % res);
                int k = static_cast<int>(cell / (static_cast<std::size_t>(res) * res));
                grid.set(i, j, k, true);
            }
            ++cell;
        }
    }
    check(cell == total, ErrorKind::Io, "voxel RLE does not cover the grid");
    return grid;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    check(in.good(), ErrorKind::Io, "cannot open for read: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    check(out.good(), ErrorKind::Io, "cannot open for write: " + path);
    out << content;
    check(out.good(), ErrorKind::Io, "write failed: " + path);
}

std::vector<std::uint8_t> read_binary_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    check(in.good(), ErrorKind::Io, "cannot open for read: " + path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>());
}

void write_binary_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    check(out.good(), ErrorKind::Io, "cannot open for write: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    check(out.good(), ErrorKind::Io, "write failed: " + path);
}

}  // namespace gfcad
