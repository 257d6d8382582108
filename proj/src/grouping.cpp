#include "gsattack/grouping.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>

#include "gsattack/error.hpp"
#include "gsattack/random.hpp"

namespace gsattack {

namespace {

double squared_distance(const Point3& a, const Point3& b) {
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    return dx * dx + dy * dy + dz * dz;
}

std::vector<Point3> seed_plus_plus(const std::vector<Point3>& points, std::size_t k, Rng& rng) {
    std::vector<Point3> centroids;
    centroids.reserve(k);
    centroids.push_back(points[rng.index(points.size())]);

    std::vector<double> nearest(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) nearest[i] = squared_distance(points[i], centroids[0]);

    while (centroids.size() < k) {
        double total = 0.0;
        for (double d : nearest) total += d;
        std::size_t chosen = 0;
        if (total > 0.0) {
            const double target = rng.uniform() * total;
            double running = 0.0;
            chosen = points.size() - 1;
            for (std::size_t i = 0; i < points.size(); ++i) {
                running += nearest[i];
                if (running > target) {
                    chosen = i;
                    break;
                }
            }
        } else {
            // All points coincide with existing centroids.
            chosen = rng.index(points.size());
        }
        centroids.push_back(points[chosen]);
        for (std::size_t i = 0; i < points.size(); ++i) {
            nearest[i] = std::min(nearest[i], squared_distance(points[i], centroids.back()));
        }
    }
    return centroids;
}

}  // namespace

std::vector<Point3> kernel_positions(const SplatModel& model) {
    std::vector<Point3> out;
    out.reserve(model.size());
    for (const auto& k : model.kernels) out.push_back({k.position[0], k.position[1], k.position[2]});
    return out;
}

ClusterAssignment kmeans(const std::vector<Point3>& positions, std::size_t k, std::uint64_t seed) {
    if (k == 0) throw ArgumentError("kmeans requires k >= 1");
    if (k > positions.size()) {
        throw ArgumentError("kmeans: k = " + std::to_string(k) + " exceeds point count " +
                            std::to_string(positions.size()));
    }
    Rng rng(seed);
    const std::size_t n = positions.size();

    ClusterAssignment result;
    result.k = k;
    result.centroids = seed_plus_plus(positions, k, rng);
    result.labels.assign(n, 0);
    std::vector<std::size_t> counts(k);

    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t iter = 0; iter < kMaxLloydIterations; ++iter) {
        // Assignment step; ties keep the lowest cluster id.
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = squared_distance(positions[i], result.centroids[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = squared_distance(positions[i], result.centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            result.labels[i] = best;
        }

        std::fill(counts.begin(), counts.end(), 0);
        for (auto label : result.labels) ++counts[label];
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            // Empty-cluster repair: steal the worst-fitting point from a
            // cluster that can spare it.
            std::size_t worst = n;
            double worst_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                if (counts[result.labels[i]] < 2) continue;
                const double d = squared_distance(positions[i], result.centroids[result.labels[i]]);
                if (d > worst_d) {
                    worst_d = d;
                    worst = i;
                }
            }
            --counts[result.labels[worst]];
            result.labels[worst] = c;
            counts[c] = 1;
            result.centroids[c] = positions[worst];
        }

        // Update step.
        std::vector<Point3> sums(k, Point3{0.0, 0.0, 0.0});
        for (std::size_t i = 0; i < n; ++i) {
            for (int a = 0; a < 3; ++a) sums[result.labels[i]][a] += positions[i][a];
        }
        double movement = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            Point3 mean{};
            for (int a = 0; a < 3; ++a) mean[a] = sums[c][a] / static_cast<double>(counts[c]);
            movement = std::max(movement, std::sqrt(squared_distance(mean, result.centroids[c])));
            result.centroids[c] = mean;
        }

        double wcss = 0.0;
        for (std::size_t i = 0; i < n; ++i) wcss += squared_distance(positions[i], result.centroids[result.labels[i]]);
        // Lloyd never increases WCSS; allow only summation rounding.
        if (wcss > previous * (1.0 + 1e-12) + 1e-300) {
            throw StateError("kmeans: WCSS increased from " + std::to_string(previous) + " to " + std::to_string(wcss));
        }
        result.wcss_trace.push_back(wcss);
        result.wcss = wcss;
        previous = wcss;
        result.iterations = iter + 1;
        if (movement < kCentroidTolerance) break;
    }
    return result;
}

std::vector<SubModel> partition(const SplatModel& model, const ClusterAssignment& assignment) {
    if (assignment.labels.size() != model.size()) {
        throw ArgumentError("partition: assignment has " + std::to_string(assignment.labels.size()) +
                            " labels for a model of " + std::to_string(model.size()) + " kernels");
    }
    std::vector<SubModel> parts(assignment.k);
    for (std::size_t i = 0; i < parts.size(); ++i) parts[i].model.source_tag = model.source_tag + "#group" + std::to_string(i);
    for (std::size_t i = 0; i < model.size(); ++i) {
        const auto label = assignment.labels[i];
        if (label >= assignment.k) throw ArgumentError("partition: label out of range");
        parts[label].model.kernels.push_back(model.kernels[i]);
        parts[label].indices.push_back(i);
    }
    return parts;
}

SplatModel merge(const std::vector<SubModel>& parts) {
    std::vector<std::pair<std::size_t, const GaussianKernel*>> entries;
    for (const auto& part : parts) {
        if (part.indices.size() != part.model.size()) {
            throw ArgumentError("merge: sub-model carries " + std::to_string(part.model.size()) + " kernels but " +
                                std::to_string(part.indices.size()) + " indices");
        }
        for (std::size_t j = 0; j < part.indices.size(); ++j) entries.emplace_back(part.indices[j], &part.model.kernels[j]);
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    SplatModel out;
    if (!parts.empty()) {
        const auto& tag = parts.front().model.source_tag;
        out.source_tag = tag.substr(0, tag.rfind("#group"));
    }
    out.kernels.reserve(entries.size());
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (i > 0 && entries[i].first == entries[i - 1].first) {
            throw ArgumentError("merge: index " + std::to_string(entries[i].first) + " appears in more than one part");
        }
        out.kernels.push_back(*entries[i].second);
    }
    return out;
}

void write_assignment_csv(const ClusterAssignment& assignment, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "kernel_index,label\n";
    for (std::size_t i = 0; i < assignment.labels.size(); ++i) out << i << ',' << assignment.labels[i] << '\n';
}

}  // namespace gsattack
