#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "gsattack/splat.hpp"

namespace gsattack {

using Point3 = std::array<double, 3>;

struct ClusterAssignment {
    std::size_t k = 0;
    std::vector<std::size_t> labels;  // one per point, each < k
    std::vector<Point3> centroids;
    double wcss = 0.0;
    std::vector<double> wcss_trace;  // after every Lloyd iteration
    std::size_t iterations = 0;
};

inline constexpr std::size_t kMaxLloydIterations = 100;
inline constexpr double kCentroidTolerance = 1e-6;

/// k-means++ seeding followed by Lloyd iterations. Stops when no centroid
/// moves by 1e-6 or more, or after 100 iterations. An empty cluster takes
/// over the point farthest from its current centroid. Throws ArgumentError
/// when k == 0 or k exceeds the point count. WCSS is checked to be
/// non-increasing at every iteration (StateError otherwise).
ClusterAssignment kmeans(const std::vector<Point3>& positions, std::size_t k, std::uint64_t seed);

std::vector<Point3> kernel_positions(const SplatModel& model);

/// A sub-model with the original index of each of its kernels.
struct SubModel {
    SplatModel model;
    std::vector<std::size_t> indices;  // ascending, indices.size() == model.size()
};

/// Sub-model i holds the kernels labelled i in their original order.
std::vector<SubModel> partition(const SplatModel& model, const ClusterAssignment& assignment);

/// Reassembles sub-models in ascending original index. Indices missing
/// from every part (pruned kernels) are simply absent. Throws
/// ArgumentError on overlapping index sets.
SplatModel merge(const std::vector<SubModel>& parts);

/// kernel_index,label rows.
void write_assignment_csv(const ClusterAssignment& assignment, const std::filesystem::path& path);

}  // namespace gsattack
