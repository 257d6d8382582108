#pragma once

#include <filesystem>
#include <optional>

#include <Eigen/Core>

#include "gsattack/camera.hpp"
#include "gsattack/splat.hpp"

namespace gsattack {

/// Screen-space footprint of one kernel.
struct Splat2D {
    Eigen::Vector2d mean2d = Eigen::Vector2d::Zero();  // pixels
    Eigen::Matrix2d cov2d = Eigen::Matrix2d::Identity();  // pixels^2, dilated
    double depth = 0.0;
    Eigen::Vector3d color = Eigen::Vector3d::Zero();  // clamped to [0, 1]
    double alpha_peak = 0.0;
};

inline constexpr double kLowPassDilation = 0.3;
inline constexpr double kMaxAlpha = 0.99;
inline constexpr double kMinAlpha = 1.0 / 255.0;
inline constexpr double kMinTransmittance = 1e-4;

/// EWA projection: cov2d = J W Sigma W^T J^T + dilation * I. Returns
/// nothing for kernels at or in front of the near plane.
std::optional<Splat2D> project_gaussian(const GaussianKernel& kernel, const Camera& camera);

/// Front-to-back alpha compositing over a black background. Rows are
/// computed in parallel; the output is bit-identical to render_serial.
ImageBuffer render(const SplatModel& model, const Camera& camera);

/// Pixel-by-pixel reference rasterizer, kept for tests and benchmarks.
ImageBuffer render_serial(const SplatModel& model, const Camera& camera);

/// 8-bit RGB PNG, rounding half away from zero.
void write_png(const ImageBuffer& image, const std::filesystem::path& path);

/// Box-filter downsampling by an integer factor.
ImageBuffer downsample(const ImageBuffer& image, int factor);

}  // namespace gsattack
