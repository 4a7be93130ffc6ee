#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gfcad/cad_types.hpp"
#include "gfcad/geometry.hpp"
#include "gfcad/trainer.hpp"

namespace gfcad {

// symmetric Chamfer distance: mean-of-min squared distances, both directions
double chamfer(const PointCloud& a, const PointCloud& b);

// COV (% of refs matched by some gen's nearest assignment) and MMD (mean over
// refs of the min CD to any gen); MMD is returned in raw Chamfer units
std::pair<double, double> cov_mmd(const std::vector<PointCloud>& gen,
                                  const std::vector<PointCloud>& ref);

// Jensen-Shannon divergence (natural log) between voxel-occupancy frequency
// distributions at grid^3 over [-1,1]^3
double jsd(const std::vector<PointCloud>& gen, const std::vector<PointCloud>& ref,
           int grid = 28);

// Table-style report. mmd/jsd carry the x100 scaling; everything else is a
// percentage in [0,100].
struct MetricsReport {
    std::optional<double> cov;
    std::optional<double> mmd;
    std::optional<double> jsd;
    std::map<std::string, double> f1_per_type;
    std::optional<double> novelty;
    std::optional<double> uniqueness;
    std::optional<double> valid_ratio;
    std::optional<double> acc_cmd, acc_param, acc_line, acc_arc, acc_circle, acc_ext;

    std::string to_csv() const;
    std::string to_json() const;
};

// novelty / uniqueness / valid ratio / per-type F1 over sequence sets
MetricsReport cad_metrics(const std::vector<CadSequence>& gen,
                          const std::vector<CadSequence>& train,
                          const std::vector<CadSequence>& ref);

}  // namespace gfcad
