#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "gsattack/splat.hpp"

namespace gsattack {

/// Pinhole camera. Camera space follows the usual splatting convention:
/// +x right, +y down, +z forward. `world_to_camera` is a rotation.
struct Camera {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();
    Eigen::Matrix3d world_to_camera = Eigen::Matrix3d::Identity();
    double fov_y = 0.8726646259971648;  // 50 degrees
    int width = 128;
    int height = 128;
    double near_plane = 0.01;

    /// Throws ArgumentError unless fov in (0, pi), size >= 1, near > 0.
    void validate() const;

    double focal() const;  // pixels, identical on both axes
    Eigen::Vector2d principal_point() const { return {0.5 * width, 0.5 * height}; }

    static Camera look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, double fov_y, int width,
                          int height, double near_plane = 0.01);
};

/// Camera orbiting `center` at `distance`; azimuth measured in the xy
/// plane from +x, elevation from the xy plane toward +z (world up).
Camera orbit_camera(const Eigen::Vector3d& center, double distance, double azimuth, double elevation, double fov_y,
                    int width, int height);

struct BoundingSphere {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double radius = 1.0;
};

/// Bounding-box centre and farthest-kernel distance; unit sphere at the
/// origin for an empty model.
BoundingSphere bounding_sphere(const SplatModel& model);

enum class ViewMode { sphere, arc };

const char* to_string(ViewMode mode);
ViewMode parse_view_mode(const std::string& text);

struct ViewSet {
    std::vector<Camera> cameras;
    std::uint64_t resample_seed = 0;
};

/// Where fitness cameras are drawn from.
struct ViewSampling {
    ViewMode mode = ViewMode::sphere;
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double distance = 2.5;
    double fov_y = 0.8726646259971648;
    int width = 128;
    int height = 128;

    static ViewSampling fit(const SplatModel& model, ViewMode mode, int resolution);
};

/// `count` cameras from the seeded stream. Sphere mode samples directions
/// uniformly on the upper hemisphere below 80 degrees elevation; arc mode
/// sweeps azimuth in [-30, 30] degrees at 15 degrees elevation.
ViewSet sample_views(const ViewSampling& sampling, std::size_t count, std::uint64_t seed);

/// Four cameras at azimuth 0/90/180/270 degrees, elevation 30 degrees,
/// distance 2.5 x bounding radius.
std::vector<Camera> report_views(const SplatModel& model, int resolution);

}  // namespace gsattack
