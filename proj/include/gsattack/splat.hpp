#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace gsattack {

/// One 3D Gaussian primitive, stored in the pre-activation form used by
/// exported splat files: scales as logarithms, opacity as a logit.
struct GaussianKernel {
    std::array<float, 3> position{0.0f, 0.0f, 0.0f};
    std::array<float, 3> log_scale{0.0f, 0.0f, 0.0f};
    std::array<float, 4> rotation{1.0f, 0.0f, 0.0f, 0.0f};  // (w, x, y, z)
    float opacity_logit = 0.0f;
    std::array<float, 3> dc_color{0.0f, 0.0f, 0.0f};  // RGB, unclamped

    double opacity() const { return 1.0 / (1.0 + std::exp(-static_cast<double>(opacity_logit))); }
    double scale(std::size_t axis) const { return std::exp(static_cast<double>(log_scale[axis])); }

    bool operator==(const GaussianKernel&) const = default;
};

double logit(double probability);

/// Ordered kernel collection. Kernel indices are stable; grouping and
/// watermark bookkeeping refer to them.
struct SplatModel {
    std::vector<GaussianKernel> kernels;
    std::string source_tag;

    std::size_t size() const { return kernels.size(); }
    bool empty() const { return kernels.empty(); }

    bool same_kernels(const SplatModel& other) const { return kernels == other.kernels; }
};

/// Row-major H x W x 3 image with values in [0, 1].
struct ImageBuffer {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    ImageBuffer() = default;
    ImageBuffer(int w, int h, double fill = 0.0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, fill) {}

    double& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    double at(int x, int y, int c) const { return pixels[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

    std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
    bool same_shape(const ImageBuffer& other) const { return width == other.width && height == other.height; }

    bool operator==(const ImageBuffer&) const = default;
};

}  // namespace gsattack
