#include "gsattack/camera.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Geometry>

#include "gsattack/error.hpp"
#include "gsattack/random.hpp"

namespace gsattack {

namespace {

constexpr double kDegree = std::numbers::pi / 180.0;
constexpr double kReportDistanceScale = 2.5;
constexpr double kReportElevation = 30.0 * kDegree;
constexpr double kDefaultFov = 50.0 * kDegree;

}  // namespace

void Camera::validate() const {
    if (!(fov_y > 0.0 && fov_y < std::numbers::pi)) throw ArgumentError("camera fov must lie in (0, pi)");
    if (width < 1 || height < 1) throw ArgumentError("camera width and height must be >= 1");
    if (!(near_plane > 0.0)) throw ArgumentError("camera near plane must be positive");
}

double Camera::focal() const { return 0.5 * height / std::tan(0.5 * fov_y); }

Camera Camera::look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, double fov_y, int width,
                       int height, double near_plane) {
    const Eigen::Vector3d forward = (target - eye).normalized();
    Eigen::Vector3d up(0.0, 0.0, 1.0);
    if (std::abs(forward.dot(up)) > 0.999) up = Eigen::Vector3d(0.0, 1.0, 0.0);
    const Eigen::Vector3d right = forward.cross(up).normalized();
    const Eigen::Vector3d down = forward.cross(right);

    Camera cam;
    cam.position = eye;
    cam.world_to_camera.row(0) = right.transpose();
    cam.world_to_camera.row(1) = down.transpose();
    cam.world_to_camera.row(2) = forward.transpose();
    cam.fov_y = fov_y;
    cam.width = width;
    cam.height = height;
    cam.near_plane = near_plane;
    cam.validate();
    return cam;
}

Camera orbit_camera(const Eigen::Vector3d& center, double distance, double azimuth, double elevation, double fov_y,
                    int width, int height) {
    const Eigen::Vector3d dir(std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
                              std::sin(elevation));
    return Camera::look_at(center + distance * dir, center, fov_y, width, height);
}

BoundingSphere bounding_sphere(const SplatModel& model) {
    BoundingSphere sphere;
    if (model.empty()) return sphere;

    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    for (const auto& k : model.kernels) {
        const Eigen::Vector3d p(k.position[0], k.position[1], k.position[2]);
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    sphere.center = 0.5 * (lo + hi);
    double radius = 0.0;
    for (const auto& k : model.kernels) {
        const Eigen::Vector3d p(k.position[0], k.position[1], k.position[2]);
        radius = std::max(radius, (p - sphere.center).norm());
    }
    sphere.radius = radius > 1e-6 ? radius : 1.0;
    return sphere;
}

const char* to_string(ViewMode mode) { return mode == ViewMode::sphere ? "sphere" : "arc"; }

ViewMode parse_view_mode(const std::string& text) {
    if (text == "sphere") return ViewMode::sphere;
    if (text == "arc") return ViewMode::arc;
    throw ArgumentError("unknown view mode '" + text + "' (expected sphere or arc)");
}

ViewSampling ViewSampling::fit(const SplatModel& model, ViewMode mode, int resolution) {
    const auto sphere = bounding_sphere(model);
    ViewSampling sampling;
    sampling.mode = mode;
    sampling.center = sphere.center;
    sampling.distance = kReportDistanceScale * sphere.radius;
    sampling.fov_y = kDefaultFov;
    sampling.width = resolution;
    sampling.height = resolution;
    return sampling;
}

ViewSet sample_views(const ViewSampling& sampling, std::size_t count, std::uint64_t seed) {
    ViewSet views;
    views.resample_seed = seed;
    views.cameras.reserve(count);
    Rng rng(seed);
    const double max_sin = std::sin(80.0 * kDegree);
    for (std::size_t i = 0; i < count; ++i) {
        double azimuth = 0.0;
        double elevation = 0.0;
        if (sampling.mode == ViewMode::sphere) {
            // Uniform on the spherical cap: sin(elevation) uniform.
            azimuth = rng.uniform(0.0, 2.0 * std::numbers::pi);
            elevation = std::asin(rng.uniform(0.0, max_sin));
        } else {
            azimuth = rng.uniform(-30.0 * kDegree, 30.0 * kDegree);
            elevation = 15.0 * kDegree;
        }
        views.cameras.push_back(orbit_camera(sampling.center, sampling.distance, azimuth, elevation, sampling.fov_y,
                                             sampling.width, sampling.height));
    }
    return views;
}

std::vector<Camera> report_views(const SplatModel& model, int resolution) {
    const auto sphere = bounding_sphere(model);
    std::vector<Camera> cams;
    for (int i = 0; i < 4; ++i) {
        cams.push_back(orbit_camera(sphere.center, kReportDistanceScale * sphere.radius, i * 90.0 * kDegree,
                                    kReportElevation, kDefaultFov, resolution, resolution));
    }
    return cams;
}

}  // namespace gsattack
