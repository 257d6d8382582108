#include "gsattack/scene.hpp"

#include <cmath>
#include <numbers>

#include "gsattack/random.hpp"

namespace gsattack {

constexpr double kSceneScale = 0.07;

double logit(double probability) { return std::log(probability / (1.0 - probability)); }

SplatModel make_synthetic_scene(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    SplatModel model;
    model.source_tag = "synthetic:" + std::to_string(count) + ":" + std::to_string(seed);
    model.kernels.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        // Uniform direction, radius jittered inside a thin shell.
        const double z = rng.uniform(-1.0, 1.0);
        const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double r = 1.0 - 0.15 * rng.uniform();
        const double s = std::sqrt(1.0 - z * z);
        const double x = r * s * std::cos(phi);
        const double y = r * s * std::sin(phi);

        GaussianKernel k;
        k.position = {static_cast<float>(x), static_cast<float>(y), static_cast<float>(r * z)};
        const double base = std::log(kSceneScale);
        for (auto& ls : k.log_scale) ls = static_cast<float>(base + 0.25 * rng.uniform(-1.0, 1.0));
        double q[4] = {1.0 + rng.uniform(), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
        const double norm = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
        for (int c = 0; c < 4; ++c) k.rotation[c] = static_cast<float>(q[c] / norm);
        k.opacity_logit = static_cast<float>(logit(0.8 + 0.15 * rng.uniform()));
        const double field[3] = {0.5 + 0.25 * std::sin(2.5 * x + 1.0), 0.5 + 0.25 * std::sin(2.0 * y - 0.5 * z),
                                 0.5 + 0.25 * std::cos(2.2 * z + x)};
        for (int c = 0; c < 3; ++c) k.dc_color[c] = static_cast<float>(field[c] + rng.uniform(-0.1, 0.1));
        model.kernels.push_back(k);
    }
    return model;
}

SplatModel make_random_model(std::size_t count, std::uint64_t seed) {
    Rng rng(seed);
    SplatModel model;
    model.source_tag = "random:" + std::to_string(count) + ":" + std::to_string(seed);
    model.kernels.resize(count);
    for (auto& k : model.kernels) {
        for (auto& p : k.position) p = static_cast<float>(rng.uniform(-5.0, 5.0));
        for (auto& s : k.log_scale) s = static_cast<float>(rng.uniform(-5.0, 0.0));
        double q[4];
        double norm2 = 0.0;
        for (auto& c : q) {
            c = rng.uniform(-1.0, 1.0);
            norm2 += c * c;
        }
        const double norm = std::sqrt(norm2);
        for (int c = 0; c < 4; ++c) k.rotation[c] = static_cast<float>(q[c] / norm);
        k.opacity_logit = static_cast<float>(rng.uniform(-4.0, 4.0));
        for (auto& c : k.dc_color) c = static_cast<float>(rng.uniform(-0.2, 1.2));
    }
    return model;
}

}  // namespace gsattack
