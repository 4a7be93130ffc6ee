#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gfcad/codec.hpp"
#include "gfcad/metrics.hpp"
#include "test_helpers.hpp"

using namespace gfcad;
using gfcad::testing::circle_tree;

namespace {

PointCloud cloud(std::initializer_list<Vec3> pts) {
    PointCloud pc;
    pc.points = pts;
    return pc;
}

PointCloud random_cloud(Rng& rng, int n) {
    PointCloud pc;
    for (int i = 0; i < n; ++i) {
        pc.points.push_back({rng.range_real(-1, 1), rng.range_real(-1, 1), rng.range_real(-1, 1)});
    }
    return pc;
}

// brute-force chamfer, written independently of the library path
double chamfer_oracle(const PointCloud& a, const PointCloud& b) {
    auto one_way = [](const PointCloud& from, const PointCloud& to) {
        double sum = 0;
        for (const Vec3& p : from.points) {
            double best = 1e300;
            for (const Vec3& q : to.points) {
                double d = (p.x - q.x) * (p.x - q.x) + (p.y - q.y) * (p.y - q.y) +
                           (p.z - q.z) * (p.z - q.z);
                best = std::min(best, d);
            }
            sum += best;
        }
        return sum / static_cast<double>(from.points.size());
    };
    return one_way(a, b) + one_way(b, a);
}

// lines/arcs tree for the F1 hand example
CadTree triangle_tree(bool arc_edge) {
    CadTree tree;
    int solid = tree.add_node({NodeType::Solid, {}, {}, {}, -1});
    tree.root = solid;
    int sketch = tree.add_node({NodeType::Sketch, {}, {}, {}, solid});
    tree.node(solid).children.push_back(sketch);
    int face = tree.add_node({NodeType::Face, {}, {}, {}, sketch});
    tree.node(sketch).children.push_back(face);
    int loop = tree.add_node({NodeType::Loop, {}, {}, {}, face});
    tree.node(face).children.push_back(loop);
    QPoint a{100, 100}, b{180, 100}, c{140, 180};
    SketchPrimitive e1;
    e1.kind = CurveKind::Line;
    e1.p0 = a;
    e1.p1 = b;
    SketchPrimitive e2;
    if (arc_edge) {
        e2.kind = CurveKind::Arc;
        e2.p0 = b;
        e2.p1 = {175, 145};
        e2.p2 = c;
    } else {
        e2.kind = CurveKind::Line;
        e2.p0 = b;
        e2.p1 = c;
    }
    SketchPrimitive e3;
    e3.kind = CurveKind::Line;
    e3.p0 = c;
    e3.p1 = a;
    for (const auto& cu : {e1, e2, e3}) {
        int ci = tree.add_node({NodeType::Curve, cu, {}, {}, loop});
        tree.node(loop).children.push_back(ci);
    }
    int ext = tree.add_node({NodeType::Extrusion, {}, {}, {}, solid});
    tree.node(solid).children.push_back(ext);
    ExtrusionParams e;
    e.theta = e.phi = e.gamma = 11;
    e.tau_x = e.tau_y = e.tau_z = 139;
    e.sigma = 139;
    e.d_plus = 139;
    e.d_minus = 11;
    tree.node(ext).extrusion = e;
    return tree;
}

}  // namespace

TEST_SUITE("chamfer") {
    TEST_CASE("identical clouds have zero distance") {
        Rng rng(1);
        PointCloud a = random_cloud(rng, 20);
        CHECK(chamfer(a, a) == 0.0);
    }

    TEST_CASE("hand example: unit separation costs one each way") {
        PointCloud a = cloud({{0, 0, 0}});
        PointCloud b = cloud({{1, 0, 0}});
        CHECK(chamfer(a, b) == doctest::Approx(2.0));
    }

    TEST_CASE("matches the brute-force oracle on random clouds") {
        Rng rng(2);
        for (int rep = 0; rep < 10; ++rep) {
            PointCloud a = random_cloud(rng, 32);
            PointCloud b = random_cloud(rng, 32);
            CHECK(chamfer(a, b) == chamfer_oracle(a, b));
            CHECK(chamfer(a, b) == chamfer(b, a));
        }
    }

    TEST_CASE("empty cloud is an error") {
        PointCloud a = cloud({{0, 0, 0}});
        PointCloud empty;
        CHECK_THROWS_AS(chamfer(a, empty), Error);
    }
}

TEST_SUITE("cov_mmd") {
    TEST_CASE("self comparison covers everything at zero distance") {
        Rng rng(3);
        std::vector<PointCloud> set;
        for (int i = 0; i < 5; ++i) set.push_back(random_cloud(rng, 16));
        auto [cov, mmd] = cov_mmd(set, set);
        CHECK(cov == 100.0);
        CHECK(mmd == 0.0);
    }

    TEST_CASE("single generated cloud covers half of two refs") {
        Rng rng(4);
        PointCloud g = random_cloud(rng, 8);
        PointCloud r1 = random_cloud(rng, 8);
        PointCloud r2 = random_cloud(rng, 8);
        auto [cov, mmd] = cov_mmd({g}, {r1, r2});
        CHECK(cov == 50.0);
    }

    TEST_CASE("matches the exhaustive assignment oracle on 8x8 sets") {
        Rng rng(5);
        std::vector<PointCloud> gen, ref;
        for (int i = 0; i < 8; ++i) {
            gen.push_back(random_cloud(rng, 12));
            ref.push_back(random_cloud(rng, 12));
        }
        auto [cov, mmd] = cov_mmd(gen, ref);
        // oracle: recompute from scratch with plain loops
        double cd[8][8];
        for (int i = 0; i < 8; ++i)
            for (int j = 0; j < 8; ++j) cd[i][j] = chamfer_oracle(gen[static_cast<std::size_t>(i)],
                                                                  ref[static_cast<std::size_t>(j)]);
        bool covered[8] = {};
        for (int i = 0; i < 8; ++i) {
            int best = 0;
            for (int j = 1; j < 8; ++j) {
                if (cd[i][j] < cd[i][best]) best = j;
            }
            covered[best] = true;
        }
        int n_cov = 0;
        for (bool c : covered) n_cov += c ? 1 : 0;
        double mmd_oracle = 0;
        for (int j = 0; j < 8; ++j) {
            double best = cd[0][j];
            for (int i = 1; i < 8; ++i) best = std::min(best, cd[i][j]);
            mmd_oracle += best / 8.0;
        }
        CHECK(cov == 100.0 * n_cov / 8.0);
        CHECK(mmd == doctest::Approx(mmd_oracle).epsilon(1e-12));
    }

    TEST_CASE("adding a perfect match never increases mmd") {
        Rng rng(6);
        std::vector<PointCloud> gen, ref;
        for (int i = 0; i < 4; ++i) {
            gen.push_back(random_cloud(rng, 10));
            ref.push_back(random_cloud(rng, 10));
        }
        auto [cov0, mmd0] = cov_mmd(gen, ref);
        gen.push_back(ref[2]);
        auto [cov1, mmd1] = cov_mmd(gen, ref);
        CHECK(mmd1 <= mmd0);
        CHECK(cov1 >= cov0);
    }
}

TEST_SUITE("jsd") {
    TEST_CASE("identical sets diverge by zero") {
        Rng rng(7);
        std::vector<PointCloud> set{random_cloud(rng, 64)};
        CHECK(jsd(set, set) == doctest::Approx(0.0).epsilon(1e-12));
    }

    TEST_CASE("disjoint supports reach ln 2") {
        std::vector<PointCloud> a{cloud({{-0.9, -0.9, -0.9}})};
        std::vector<PointCloud> b{cloud({{0.9, 0.9, 0.9}})};
        CHECK(jsd(a, b) == doctest::Approx(std::log(2.0)));
    }

    TEST_CASE("three-cell hand computation") {
        // P = (1/2, 1/2, 0), Q = (0, 1/2, 1/2) over three distinct cells
        double w = 2.0 / 28.0;
        auto center = [&](int c) { return -1.0 + w * (c + 0.5); };
        std::vector<PointCloud> p{cloud({{center(1), center(0), center(0)},
                                         {center(5), center(0), center(0)}})};
        std::vector<PointCloud> q{cloud({{center(5), center(0), center(0)},
                                         {center(9), center(0), center(0)}})};
        // by hand: 0.5*[0.5*ln2 + 0] + 0.5*[0.5*ln2 + 0] = 0.5*ln2
        CHECK(jsd(p, q) == doctest::Approx(0.5 * std::log(2.0)));
    }

    TEST_CASE("symmetry and the ln 2 bound") {
        Rng rng(8);
        std::vector<PointCloud> a{random_cloud(rng, 50), random_cloud(rng, 30)};
        std::vector<PointCloud> b{random_cloud(rng, 40)};
        double ab = jsd(a, b);
        CHECK(std::abs(ab - jsd(b, a)) < 1e-12);
        CHECK(ab >= 0.0);
        CHECK(ab <= std::log(2.0) + 1e-12);
    }
}

TEST_SUITE("cad_metrics") {
    TEST_CASE("novelty zero when generations are memorized") {
        std::vector<CadSequence> gen{serialize_tree(circle_tree()),
                                     serialize_tree(circle_tree(139, 139, 80))};
        std::vector<CadSequence> train = gen;
        MetricsReport rep = cad_metrics(gen, train, gen);
        REQUIRE(rep.novelty.has_value());
        CHECK(*rep.novelty == 0.0);
    }

    TEST_CASE("uniqueness covers only singletons") {
        CadSequence a = serialize_tree(circle_tree());
        CadSequence b = serialize_tree(circle_tree(139, 139, 80));
        std::vector<CadSequence> gen{a, a, b};
        MetricsReport rep = cad_metrics(gen, {}, gen);
        REQUIRE(rep.uniqueness.has_value());
        CHECK(*rep.uniqueness == doctest::Approx(100.0 / 3.0));
    }

    TEST_CASE("valid ratio runs the geometry") {
        CadSequence good = serialize_tree(circle_tree());
        CadSequence broken = good;
        broken.tokens[4] = {tok::kEndFace, 0};  // kills the parse
        std::vector<CadSequence> gen{good, broken};
        MetricsReport rep = cad_metrics(gen, {}, gen);
        REQUIRE(rep.valid_ratio.has_value());
        CHECK(*rep.valid_ratio == 50.0);
    }

    TEST_CASE("line F1 hand example equals 0.8") {
        // gen: 3 lines; ref: 2 lines + 1 arc
        std::vector<CadSequence> gen{serialize_tree(triangle_tree(false))};
        std::vector<CadSequence> ref{serialize_tree(triangle_tree(true))};
        MetricsReport rep = cad_metrics(gen, {}, ref);
        REQUIRE(rep.f1_per_type.count("line"));
        CHECK(rep.f1_per_type.at("line") == doctest::Approx(0.8));
        CHECK(rep.f1_per_type.at("arc") == 0.0);          // gen has none
        CHECK(rep.f1_per_type.at("extrusion") == 1.0);    // one each
    }

    TEST_CASE("csv and json carry the populated fields") {
        std::vector<CadSequence> gen{serialize_tree(circle_tree())};
        MetricsReport rep = cad_metrics(gen, gen, gen);
        rep.cov = 100.0;
        rep.mmd = 0.0;
        rep.jsd = 0.0;
        std::string csv = rep.to_csv();
        CHECK(csv.find("cov") != std::string::npos);
        CHECK(csv.find("novelty") != std::string::npos);
        CHECK(rep.to_json().find("valid_ratio") != std::string::npos);
    }
}
