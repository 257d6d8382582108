#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsattack/splat.hpp"

namespace gsattack {

/// Both objectives are minimised.
struct ObjectivePair {
    double f1 = 0.0;  // visual loss
    double f2 = 0.0;  // feature dispersion

    bool operator==(const ObjectivePair&) const = default;
};

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;

/// Mean SSIM under an 11x11 Gaussian window (sigma 1.5, zero padding),
/// averaged over the three channels.
double ssim(const ImageBuffer& a, const ImageBuffer& b);

/// Mean absolute difference over all pixels and channels.
double l1_distance(const ImageBuffer& a, const ImageBuffer& b);

/// Mean over views of lambda * L1 + (1 - lambda) * (1 - SSIM).
double f1_visual_loss(std::span<const ImageBuffer> adv, std::span<const ImageBuffer> ref, double lambda);

struct ConvLayerSpec {
    int in_channels = 3;
    int out_channels = 8;
    bool relu = true;
};

/// Architecture and seed of the built-in feature extractor: 3x3 kernels,
/// stride 2, valid padding, no bias. Weights are drawn from the seed and
/// each 3x3 slice is shifted to sum to zero.
struct FeatureExtractorSpec {
    std::uint64_t seed = 42;
    std::vector<ConvLayerSpec> layers{{3, 8, true}, {8, 16, false}};

    nlohmann::json to_json() const;
    static FeatureExtractorSpec from_json(const nlohmann::json& j);
};

struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;  // channel-major

    std::span<const double> channel(int c) const {
        return {data.data() + static_cast<std::size_t>(c) * height * width, static_cast<std::size_t>(height) * width};
    }
};

class FeatureExtractor {
public:
    static constexpr int kKernel = 3;
    static constexpr int kStride = 2;

    explicit FeatureExtractor(FeatureExtractorSpec spec = {});

    /// Explicit weights, laid out [layer][out][in][3][3]. Every 3x3 slice
    /// must sum to zero (ArgumentError otherwise).
    FeatureExtractor(FeatureExtractorSpec spec, std::vector<std::vector<double>> weights);

    const FeatureExtractorSpec& spec() const { return spec_; }
    const std::vector<double>& weights(std::size_t layer) const { return weights_[layer]; }
    int output_channels() const { return spec_.layers.back().out_channels; }

    /// Smallest square input accepted.
    int min_input_size() const { return 8; }

    /// Output channels are computed in parallel; bit-identical to
    /// extract_serial.
    FeatureMap extract(const ImageBuffer& image) const;
    FeatureMap extract_serial(const ImageBuffer& image) const;

private:
    FeatureMap run(const ImageBuffer& image, bool parallel) const;

    FeatureExtractorSpec spec_;
    std::vector<std::vector<double>> weights_;
};

FeatureMap extract_features(const ImageBuffer& image, const FeatureExtractor& extractor);

/// Population standard deviation (1 / n normalisation).
double channel_std(std::span<const double> values);

/// Mean over images and channels of channel_std(features).
double f2_watermark_destruction(std::span<const ImageBuffer> images, const FeatureExtractor& extractor);

}  // namespace gsattack
