#include "gfcad/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "gfcad/codec.hpp"

namespace gfcad {

namespace {

double min_sq_dist(const Vec3& p, const PointCloud& cloud) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& q : cloud.points) {
        double dx = p.x - q.x, dy = p.y - q.y, dz = p.z - q.z;
        double d = dx * dx + dy * dy + dz * dz;
        if (d < best) best = d;
    }
    return best;
}

}  // namespace

double chamfer(const PointCloud& a, const PointCloud& b) {
    check(!a.points.empty() && !b.points.empty(), ErrorKind::Validation,
          "chamfer: empty point cloud");
    double sum_ab = 0.0;
    for (const Vec3& p : a.points) sum_ab += min_sq_dist(p, b);
    double sum_ba = 0.0;
    for (const Vec3& q : b.points) sum_ba += min_sq_dist(q, a);
    return sum_ab / static_cast<double>(a.points.size()) +
           sum_ba / static_cast<double>(b.points.size());
}

std::pair<double, double> cov_mmd(const std::vector<PointCloud>& gen,
                                  const std::vector<PointCloud>& ref) {
    check(!gen.empty() && !ref.empty(), ErrorKind::Validation, "cov_mmd: empty cloud set");
    std::size_t ng = gen.size(), nr = ref.size();
    // full pairwise CD matrix; exact nearest neighbors at desk scale
    std::vector<double> cd(ng * nr);
    for (std::size_t i = 0; i < ng; ++i)
        for (std::size_t j = 0; j < nr; ++j) cd[i * nr + j] = chamfer(gen[i], ref[j]);

    std::vector<std::uint8_t> covered(nr, 0);
    for (std::size_t i = 0; i < ng; ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < nr; ++j) {
            if (cd[i * nr + j] < cd[i * nr + best]) best = j;
        }
        covered[best] = 1;
    }
    std::size_t n_cov = 0;
    for (auto c : covered) n_cov += c;
    double cov = 100.0 * static_cast<double>(n_cov) / static_cast<double>(nr);

    double mmd = 0.0;
    for (std::size_t j = 0; j < nr; ++j) {
        double best = cd[j];
        for (std::size_t i = 1; i < ng; ++i) best = std::min(best, cd[i * nr + j]);
        mmd += best;
    }
    mmd /= static_cast<double>(nr);
    return {cov, mmd};
}

namespace {

std::vector<double> occupancy_distribution(const std::vector<PointCloud>& set, int grid) {
    std::vector<double> counts(static_cast<std::size_t>(grid) * grid * grid, 0.0);
    double total = 0.0;
    for (const PointCloud& pc : set) {
        for (const Vec3& p : pc.points) {
            auto cell = [&](double v) {
                int c = static_cast<int>(std::floor((v + 1.0) * 0.5 * grid));
                return std::clamp(c, 0, grid - 1);
            };
            std::size_t idx = (static_cast<std::size_t>(cell(p.z)) * grid + cell(p.y)) * grid +
                              cell(p.x);
            counts[idx] += 1.0;
            total += 1.0;
        }
    }
    if (total > 0) {
        for (double& c : counts) c /= total;
    }
    return counts;
}

}  // namespace

double jsd(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& ref, int grid) {
    check(!gen.empty() && !ref.empty(), ErrorKind::Validation, "jsd: empty cloud set");
    std::vector<double> p = occupancy_distribution(gen, grid);
    std::vector<double> q = occupancy_distribution(ref, grid);
    double out = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0) out += 0.5 * p[i] * std::log(p[i] / m);
        if (q[i] > 0) out += 0.5 * q[i] * std::log(q[i] / m);
    }
    return out;
}

namespace {

std::string sequence_key(const CadSequence& seq) {
    std::string key;
    key.reserve(static_cast<std::size_t>(seq.valid_len) * 4);
    for (int i = 0; i < seq.valid_len && i < seq.size(); ++i) {
        TokenPair p = seq.tokens[static_cast<std::size_t>(i)];
        key.push_back(static_cast<char>(p.a & 0xff));
        key.push_back(static_cast<char>(p.a >> 8));
        key.push_back(static_cast<char>(p.b & 0xff));
        key.push_back(static_cast<char>(p.b >> 8));
    }
    return key;
}

struct PrimCounts {
    std::int64_t line = 0, arc = 0, circle = 0, extrusion = 0;
};

PrimCounts count_primitives(const std::vector<CadSequence>& set) {
    PrimCounts pc;
    for (const CadSequence& seq : set) {
        std::vector<PrimOwner> owners = token_primitives(seq);
        int n = std::min(seq.valid_len, seq.size());
        for (int i = 0; i < n; ++i) {
            if (seq.tokens[static_cast<std::size_t>(i)].a == tok::kEndCurve) {
                switch (owners[static_cast<std::size_t>(i)]) {
                    case PrimOwner::Line: ++pc.line; break;
                    case PrimOwner::Arc: ++pc.arc; break;
                    case PrimOwner::Circle: ++pc.circle; break;
                    default: break;
                }
            }
            if (seq.tokens[static_cast<std::size_t>(i)].a == tok::kEndExtrusion) ++pc.extrusion;
        }
    }
    return pc;
}

double f1_from_counts(std::int64_t gen_count, std::int64_t ref_count) {
    if (gen_count == 0 || ref_count == 0) return 0.0;
    double matched = static_cast<double>(std::min(gen_count, ref_count));
    double precision = matched / static_cast<double>(gen_count);
    double recall = matched / static_cast<double>(ref_count);
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

MetricsReport cad_metrics(const std::vector<CadSequence>& gen,
                          const std::vector<CadSequence>& train,
                          const std::vector<CadSequence>& ref) {
    MetricsReport rep;
    if (gen.empty()) return rep;
    double n_gen = static_cast<double>(gen.size());

    // novelty: share of gen absent from the training set
    std::unordered_map<std::string, int> train_keys;
    for (const CadSequence& s : train) ++train_keys[sequence_key(s)];
    std::int64_t novel = 0;
    std::unordered_map<std::string, int> gen_keys;
    for (const CadSequence& s : gen) {
        std::string key = sequence_key(s);
        if (!train_keys.count(key)) ++novel;
        ++gen_keys[key];
    }
    if (!train.empty()) rep.novelty = 100.0 * static_cast<double>(novel) / n_gen;

    // uniqueness: share of gen occurring exactly once
    std::int64_t unique = 0;
    for (const CadSequence& s : gen) {
        if (gen_keys[sequence_key(s)] == 1) ++unique;
    }
    rep.uniqueness = 100.0 * static_cast<double>(unique) / n_gen;

    // valid ratio: executes to a non-empty watertight occupancy
    std::int64_t valid = 0;
    for (const CadSequence& s : gen) {
        try {
            CadTree tree = deserialize_sequence(s);
            VoxelGrid grid = execute(tree, kValidationResolution);
            if (grid.watertight()) ++valid;
        } catch (const Error&) {
        }
    }
    rep.valid_ratio = 100.0 * static_cast<double>(valid) / n_gen;

    // per-type F1 from occurrence multisets
    if (!ref.empty()) {
        PrimCounts g = count_primitives(gen);
        PrimCounts r = count_primitives(ref);
        rep.f1_per_type["line"] = f1_from_counts(g.line, r.line);
        rep.f1_per_type["arc"] = f1_from_counts(g.arc, r.arc);
        rep.f1_per_type["circle"] = f1_from_counts(g.circle, r.circle);
        rep.f1_per_type["extrusion"] = f1_from_counts(g.extrusion, r.extrusion);
    }
    return rep;
}

namespace {

void emit(std::ostringstream& header, std::ostringstream& row, const char* name,
          const std::optional<double>& v) {
    if (!v) return;
    if (header.tellp() > 0) {
        header << ",";
        row << ",";
    }
    header << name;
    row << *v;
}

}  // namespace

std::string MetricsReport::to_csv() const {
    std::ostringstream header, row;
    row.precision(6);
    emit(header, row, "cov", cov);
    emit(header, row, "mmd_x100", mmd);
    emit(header, row, "jsd_x100", jsd);
    for (const auto& [name, v] : f1_per_type) emit(header, row, ("f1_" + name).c_str(), v);
    emit(header, row, "novelty", novelty);
    emit(header, row, "uniqueness", uniqueness);
    emit(header, row, "valid_ratio", valid_ratio);
    emit(header, row, "acc_cmd", acc_cmd);
    emit(header, row, "acc_param", acc_param);
    emit(header, row, "acc_line", acc_line);
    emit(header, row, "acc_arc", acc_arc);
    emit(header, row, "acc_circle", acc_circle);
    emit(header, row, "acc_ext", acc_ext);
    return header.str() + "\n" + row.str() + "\n";
}

std::string MetricsReport::to_json() const {
    nlohmann::json j;
    auto put = [&](const char* name, const std::optional<double>& v) {
        if (v) j[name] = *v;
    };
    put("cov", cov);
    put("mmd_x100", mmd);
    put("jsd_x100", jsd);
    if (!f1_per_type.empty()) j["f1_per_type"] = f1_per_type;
    put("novelty", novelty);
    put("uniqueness", uniqueness);
    put("valid_ratio", valid_ratio);
    put("acc_cmd", acc_cmd);
    put("acc_param", acc_param);
    put("acc_line", acc_line);
    put("acc_arc", acc_arc);
    put("acc_circle", acc_circle);
    put("acc_ext", acc_ext);
    return j.dump();
}

}  // namespace gfcad
