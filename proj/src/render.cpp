#include "gsattack/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <numeric>

#include <Eigen/Geometry>
#include <png.h>

#include "gsattack/error.hpp"

namespace gsattack {

namespace {

// Projected splat with its inverse covariance and pixel bounding box.
struct PreparedSplat {
    double mx, my;
    double conic_a, conic_b, conic_c;  // inverse covariance (a b; b c)
    double r, g, b;
    double alpha_peak;
    double power_cutoff;  // beyond this alpha is below kMinAlpha
    double depth;
    std::size_t index;
    int x0, x1, y0, y1;  // inclusive
};

Eigen::Matrix3d rotation_matrix(const std::array<float, 4>& q) {
    Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
    quat.normalize();
    return quat.toRotationMatrix();
}

// Sorted by depth, ties by kernel index.
std::vector<PreparedSplat> prepare(const SplatModel& model, const Camera& camera) {
    std::vector<PreparedSplat> splats;
    splats.reserve(model.size());
    for (std::size_t i = 0; i < model.size(); ++i) {
        auto s = project_gaussian(model.kernels[i], camera);
        if (!s) continue;
        const Eigen::Matrix2d& cov = s->cov2d;
        const double det = cov.determinant();
        if (!(det > 0.0)) continue;

        const double mid = 0.5 * (cov(0, 0) + cov(1, 1));
        const double lambda_max = mid + std::sqrt(std::max(0.1, mid * mid - det));
        const double radius = std::ceil(3.0 * std::sqrt(lambda_max));

        PreparedSplat p;
        p.mx = s->mean2d.x();
        p.my = s->mean2d.y();
        p.conic_a = cov(1, 1) / det;
        p.conic_b = -cov(0, 1) / det;
        p.conic_c = cov(0, 0) / det;
        p.r = s->color.x();
        p.g = s->color.y();
        p.b = s->color.z();
        p.alpha_peak = s->alpha_peak;
        p.power_cutoff = std::log(p.alpha_peak / kMinAlpha) + 1e-9;
        p.depth = s->depth;
        p.index = i;
        // Pixel centres sit at integer + 0.5.
        const double fx0 = std::floor(p.mx - radius - 0.5);
        const double fx1 = std::ceil(p.mx + radius - 0.5);
        const double fy0 = std::floor(p.my - radius - 0.5);
        const double fy1 = std::ceil(p.my + radius - 0.5);
        if (fx1 < 0.0 || fy1 < 0.0 || fx0 > camera.width - 1 || fy0 > camera.height - 1) continue;
        p.x0 = static_cast<int>(std::max(0.0, fx0));
        p.x1 = static_cast<int>(std::min<double>(camera.width - 1, fx1));
        p.y0 = static_cast<int>(std::max(0.0, fy0));
        p.y1 = static_cast<int>(std::min<double>(camera.height - 1, fy1));
        splats.push_back(p);
    }
    std::stable_sort(splats.begin(), splats.end(), [](const PreparedSplat& a, const PreparedSplat& b) {
        if (a.depth != b.depth) return a.depth < b.depth;
        return a.index < b.index;
    });
    return splats;
}

// Both rasterizers call this so their per-pixel arithmetic is identical.
inline double splat_alpha(const PreparedSplat& s, int x, int y) {
    const double dx = (x + 0.5) - s.mx;
    const double dy = (y + 0.5) - s.my;
    const double power = 0.5 * (s.conic_a * dx * dx + s.conic_c * dy * dy) + s.conic_b * dx * dy;
    if (power < 0.0 || power > s.power_cutoff) return 0.0;
    return std::min(kMaxAlpha, s.alpha_peak * std::exp(-power));
}

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

std::optional<Splat2D> project_gaussian(const GaussianKernel& kernel, const Camera& camera) {
    const Eigen::Vector3d world(kernel.position[0], kernel.position[1], kernel.position[2]);
    const Eigen::Vector3d t = camera.world_to_camera * (world - camera.position);
    if (!(t.z() > camera.near_plane)) return std::nullopt;

    const double f = camera.focal();
    const Eigen::Vector2d c = camera.principal_point();
    const double inv_z = 1.0 / t.z();

    Splat2D out;
    out.mean2d = Eigen::Vector2d(f * t.x() * inv_z + c.x(), f * t.y() * inv_z + c.y());
    out.depth = t.z();

    const Eigen::Matrix3d rot = rotation_matrix(kernel.rotation);
    const Eigen::Vector3d scale(kernel.scale(0), kernel.scale(1), kernel.scale(2));
    const Eigen::Matrix3d m = rot * scale.asDiagonal();
    const Eigen::Matrix3d sigma = m * m.transpose();

    Eigen::Matrix<double, 2, 3> jacobian;
    jacobian << f * inv_z, 0.0, -f * t.x() * inv_z * inv_z,
                0.0, f * inv_z, -f * t.y() * inv_z * inv_z;
    const Eigen::Matrix<double, 2, 3> jw = jacobian * camera.world_to_camera;
    Eigen::Matrix2d cov = jw * sigma * jw.transpose();
    cov(0, 1) = cov(1, 0) = 0.5 * (cov(0, 1) + cov(1, 0));
    cov(0, 0) += kLowPassDilation;
    cov(1, 1) += kLowPassDilation;
    out.cov2d = cov;

    out.color = Eigen::Vector3d(clamp01(kernel.dc_color[0]), clamp01(kernel.dc_color[1]), clamp01(kernel.dc_color[2]));
    out.alpha_peak = kernel.opacity();
    return out;
}

ImageBuffer render(const SplatModel& model, const Camera& camera) {
    camera.validate();
    const auto splats = prepare(model, camera);
    ImageBuffer image(camera.width, camera.height);
    const int width = camera.width;

    #pragma omp parallel for schedule(dynamic, 4)
    for (int y = 0; y < camera.height; ++y) {
        std::vector<double> color(static_cast<std::size_t>(width) * 3, 0.0);
        std::vector<double> transmittance(width, 1.0);
        int live = width;
        for (const auto& s : splats) {
            if (live == 0) break;
            if (y < s.y0 || y > s.y1) continue;
            for (int x = s.x0; x <= s.x1; ++x) {
                double& t = transmittance[x];
                if (t < kMinTransmittance) continue;
                const double alpha = splat_alpha(s, x, y);
                if (alpha < kMinAlpha) continue;
                const double w = alpha * t;
                color[3 * x + 0] += s.r * w;
                color[3 * x + 1] += s.g * w;
                color[3 * x + 2] += s.b * w;
                t *= 1.0 - alpha;
                if (t < kMinTransmittance) --live;
            }
        }
        for (int x = 0; x < width; ++x) {
            for (int ch = 0; ch < 3; ++ch) image.at(x, y, ch) = clamp01(color[3 * x + ch]);
        }
    }
    return image;
}

ImageBuffer render_serial(const SplatModel& model, const Camera& camera) {
    camera.validate();
    const auto splats = prepare(model, camera);
    ImageBuffer image(camera.width, camera.height);
    for (int y = 0; y < camera.height; ++y) {
        for (int x = 0; x < camera.width; ++x) {
            double r = 0.0, g = 0.0, b = 0.0, t = 1.0;
            for (const auto& s : splats) {
                if (t < kMinTransmittance) break;
                if (x < s.x0 || x > s.x1 || y < s.y0 || y > s.y1) continue;
                const double alpha = splat_alpha(s, x, y);
                if (alpha < kMinAlpha) continue;
                const double w = alpha * t;
                r += s.r * w;
                g += s.g * w;
                b += s.b * w;
                t *= 1.0 - alpha;
            }
            image.at(x, y, 0) = clamp01(r);
            image.at(x, y, 1) = clamp01(g);
            image.at(x, y, 2) = clamp01(b);
        }
    }
    return image;
}

void write_png(const ImageBuffer& image, const std::filesystem::path& path) {
    if (image.width < 1 || image.height < 1) throw ArgumentError("cannot write an empty image");
    std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!file) throw IoError("cannot open '" + path.string() + "' for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialisation failed");
    }
    std::vector<png_byte> row(static_cast<std::size_t>(image.width) * 3);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed writing PNG '" + path.string() + "'");
    }
    png_init_io(png, file.get());
    png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < image.height; ++y) {
        for (int x = 0; x < image.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                row[3 * x + c] = static_cast<png_byte>(std::lround(clamp01(image.at(x, y, c)) * 255.0));
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

ImageBuffer downsample(const ImageBuffer& image, int factor) {
    if (factor < 1 || image.width % factor != 0 || image.height % factor != 0) {
        throw ArgumentError("downsample factor must divide both image dimensions");
    }
    ImageBuffer out(image.width / factor, image.height / factor);
    const double norm = 1.0 / (factor * factor);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            for (int c = 0; c < 3; ++c) {
                double sum = 0.0;
                for (int dy = 0; dy < factor; ++dy) {
                    for (int dx = 0; dx < factor; ++dx) sum += image.at(x * factor + dx, y * factor + dy, c);
                }
                out.at(x, y, c) = sum * norm;
            }
        }
    }
    return out;
}

}  // namespace gsattack
