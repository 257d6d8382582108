#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsattack/camera.hpp"
#include "gsattack/splat.hpp"

namespace gsattack {

struct BitString {
    std::vector<std::uint8_t> bits;

    std::size_t size() const { return bits.size(); }
    bool operator==(const BitString&) const = default;

    /// Parses '0'/'1' characters; commas, spaces and underscores are ignored.
    static BitString parse(const std::string& text);
    std::string to_string() const;
    BitString complemented() const;
};

/// The 48-bit copyright message used by the 1D watermark experiments.
BitString default_message();

/// Fraction of matching bits. Throws ArgumentError on length mismatch or
/// empty strings.
double bar(const BitString& extracted, const BitString& original);

/// 1 - 2 |bar - 0.5|. Throws ArgumentError outside [0, 1].
double wus(double bar_value);

/// Positive class = bit 1 in the original message.
struct ConfusionCounts {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;

    std::size_t total() const { return tp + tn + fp + fn; }
    static ConfusionCounts tally(const BitString& extracted, const BitString& original);
};

/// Matthews correlation; 0 when any marginal is empty.
double mcc(const ConfusionCounts& counts);

/// 1 - |MCC|.
double ids(const ConfusionCounts& counts);

struct PsnrMse {
    double psnr = 0.0;  // dB, +inf when mse == 0
    double mse = 0.0;
};

PsnrMse psnr_mse(const ImageBuffer& a, const ImageBuffer& b);

struct WatermarkReport {
    double bar = 1.0;
    double wus = 0.0;
    double ids = 0.0;
    double psnr = 0.0;
    double ssim = 1.0;
    double mse = 0.0;
    bool has_bits = false;  // bar/wus/ids meaningful

    nlohmann::json to_json() const;
};

/// Bits from a confusion of extracted vs embedded.
WatermarkReport bit_scores(const BitString& extracted, const BitString& embedded);

/// Black-box stand-in watermark. Bit i shifts the green DC colour of every
/// kernel whose centre projects into grid cell i of the first decode view.
/// The grid spans the image-space bounding box of projected centres.
struct ToyWatermark {
    BitString bits;  // requested message, length L <= rows * cols
    int rows = 4;
    int cols = 4;
    double delta = 0.05;
    std::vector<Camera> decode_views;

    // Filled by embed_toy_watermark.
    double grid_x0 = 0.0, grid_y0 = 0.0, grid_x1 = 0.0, grid_y1 = 0.0;
    std::vector<bool> embeddable;  // per requested bit
    std::vector<double> reference;  // per requested bit: mean green before embedding

    bool embedded() const { return !embeddable.empty(); }

    /// The embeddable subset of `bits`, in order.
    BitString embedded_bits() const;

    nlohmann::json to_json() const;
    static ToyWatermark from_json(const nlohmann::json& j);
};

/// Decode views for a model: the first report view at `resolution`.
std::vector<Camera> default_decode_views(const SplatModel& model, int resolution);

/// Throws ArgumentError if rows * cols < L or there are no decode views.
SplatModel embed_toy_watermark(const SplatModel& model, ToyWatermark& wm);

/// Never consulted by the attack.
BitString decode_toy_watermark(const SplatModel& model, const ToyWatermark& wm);

nlohmann::json camera_to_json(const Camera& camera);
Camera camera_from_json(const nlohmann::json& j);

}  // namespace gsattack
