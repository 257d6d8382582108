#include "gsattack/objectives.hpp"

#include <algorithm>
#include <cmath>

#include "gsattack/error.hpp"
#include "gsattack/random.hpp"

namespace gsattack {

namespace {

std::array<double, kSsimWindow> gaussian_window() {
    std::array<double, kSsimWindow> g{};
    double sum = 0.0;
    for (int i = 0; i < kSsimWindow; ++i) {
        const double d = i - kSsimWindow / 2;
        g[i] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += g[i];
    }
    for (auto& v : g) v /= sum;
    return g;
}

// Separable "same" Gaussian filter with zero padding.
void blur(const std::vector<double>& src, int w, int h, const std::array<double, kSsimWindow>& g,
          std::vector<double>& tmp, std::vector<double>& out) {
    constexpr int half = kSsimWindow / 2;
    tmp.assign(src.size(), 0.0);
    out.assign(src.size(), 0.0);
    for (int y = 0; y < h; ++y) {
        const double* row = src.data() + static_cast<std::size_t>(y) * w;
        for (int x = 0; x < w; ++x) {
            const int i0 = std::max(0, half - x);
            const int i1 = std::min(kSsimWindow, w - x + half);
            double acc = 0.0;
            for (int i = i0; i < i1; ++i) acc += g[i] * row[x + i - half];
            tmp[static_cast<std::size_t>(y) * w + x] = acc;
        }
    }
    for (int y = 0; y < h; ++y) {
        const int i0 = std::max(0, half - y);
        const int i1 = std::min(kSsimWindow, h - y + half);
        double* dst = out.data() + static_cast<std::size_t>(y) * w;
        for (int i = i0; i < i1; ++i) {
            const double* row = tmp.data() + static_cast<std::size_t>(y + i - half) * w;
            for (int x = 0; x < w; ++x) dst[x] += g[i] * row[x];
        }
    }
}

void require_same_shape(const ImageBuffer& a, const ImageBuffer& b, const char* what) {
    if (!a.same_shape(b)) throw ArgumentError(std::string(what) + ": image dimensions differ");
}

}  // namespace

double ssim(const ImageBuffer& a, const ImageBuffer& b) {
    require_same_shape(a, b, "ssim");
    if (a.pixel_count() == 0) throw ArgumentError("ssim: empty image");
    static const auto g = gaussian_window();
    const int w = a.width;
    const int h = a.height;
    const std::size_t n = a.pixel_count();

    double total = 0.0;
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n), tmp;
    std::vector<double> mu_x, mu_y, e_xx, e_yy, e_xy;
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = a.pixels[3 * i + c];
            y[i] = b.pixels[3 * i + c];
            xx[i] = x[i] * x[i];
            yy[i] = y[i] * y[i];
            xy[i] = x[i] * y[i];
        }
        blur(x, w, h, g, tmp, mu_x);
        blur(y, w, h, g, tmp, mu_y);
        blur(xx, w, h, g, tmp, e_xx);
        blur(yy, w, h, g, tmp, e_yy);
        blur(xy, w, h, g, tmp, e_xy);
        double channel_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double mx2 = mu_x[i] * mu_x[i];
            const double my2 = mu_y[i] * mu_y[i];
            const double mxy = mu_x[i] * mu_y[i];
            const double sx = e_xx[i] - mx2;
            const double sy = e_yy[i] - my2;
            const double sxy = e_xy[i] - mxy;
            channel_sum += ((2.0 * mxy + kSsimC1) * (2.0 * sxy + kSsimC2)) / ((mx2 + my2 + kSsimC1) * (sx + sy + kSsimC2));
        }
        total += channel_sum / static_cast<double>(n);
    }
    return total / 3.0;
}

double l1_distance(const ImageBuffer& a, const ImageBuffer& b) {
    require_same_shape(a, b, "l1_distance");
    if (a.pixels.empty()) throw ArgumentError("l1_distance: empty image");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) sum += std::abs(a.pixels[i] - b.pixels[i]);
    return sum / static_cast<double>(a.pixels.size());
}

double f1_visual_loss(std::span<const ImageBuffer> adv, std::span<const ImageBuffer> ref, double lambda) {
    if (adv.empty() || ref.empty()) throw ArgumentError("f1_visual_loss: empty view sequence");
    if (adv.size() != ref.size()) throw ArgumentError("f1_visual_loss: view counts differ");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ArgumentError("f1_visual_loss: lambda must lie in [0, 1]");
    double sum = 0.0;
    for (std::size_t v = 0; v < adv.size(); ++v) {
        const double l1 = l1_distance(adv[v], ref[v]);
        sum += lambda * l1 + (1.0 - lambda) * (1.0 - ssim(adv[v], ref[v]));
    }
    return sum / static_cast<double>(adv.size());
}

nlohmann::json FeatureExtractorSpec::to_json() const {
    nlohmann::json layers_json = nlohmann::json::array();
    for (const auto& l : layers) {
        layers_json.push_back({{"in_channels", l.in_channels}, {"out_channels", l.out_channels}, {"relu", l.relu},
                               {"kernel", FeatureExtractor::kKernel}, {"stride", FeatureExtractor::kStride}});
    }
    return {{"seed", seed}, {"padding", "valid"}, {"bias", false}, {"zero_sum_kernels", true}, {"layers", layers_json}};
}

FeatureExtractorSpec FeatureExtractorSpec::from_json(const nlohmann::json& j) {
    FeatureExtractorSpec spec;
    spec.seed = j.at("seed").get<std::uint64_t>();
    spec.layers.clear();
    for (const auto& l : j.at("layers")) {
        spec.layers.push_back({l.at("in_channels").get<int>(), l.at("out_channels").get<int>(), l.at("relu").get<bool>()});
    }
    return spec;
}

FeatureExtractor::FeatureExtractor(FeatureExtractorSpec spec) : spec_(std::move(spec)) {
    if (spec_.layers.empty()) throw ArgumentError("feature extractor needs at least one layer");
    if (spec_.layers.front().in_channels != 3) throw ArgumentError("first layer must take 3 input channels");
    Rng rng(spec_.seed);
    for (const auto& layer : spec_.layers) {
        const int fan_in = layer.in_channels * kKernel * kKernel;
        const double scale = std::sqrt(2.0 / fan_in);
        std::vector<double> w(static_cast<std::size_t>(layer.out_channels) * fan_in);
        for (auto& v : w) v = rng.uniform(-scale, scale);
        // Zero-sum per 3x3 slice.
        for (std::size_t s = 0; s < w.size(); s += kKernel * kKernel) {
            double mean = 0.0;
            for (int t = 0; t < kKernel * kKernel; ++t) mean += w[s + t];
            mean /= kKernel * kKernel;
            for (int t = 0; t < kKernel * kKernel; ++t) w[s + t] -= mean;
        }
        weights_.push_back(std::move(w));
    }
}

FeatureExtractor::FeatureExtractor(FeatureExtractorSpec spec, std::vector<std::vector<double>> weights)
    : spec_(std::move(spec)), weights_(std::move(weights)) {
    if (spec_.layers.empty() || weights_.size() != spec_.layers.size()) {
        throw ArgumentError("feature extractor: one weight block per layer required");
    }
    for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
        const auto expected = static_cast<std::size_t>(spec_.layers[l].out_channels) * spec_.layers[l].in_channels *
                              kKernel * kKernel;
        if (weights_[l].size() != expected) throw ArgumentError("feature extractor: weight block has wrong size");
        for (std::size_t k = 0; k < expected; k += kKernel * kKernel) {
            double sum = 0.0, mag = 0.0;
            for (int t = 0; t < kKernel * kKernel; ++t) {
                sum += weights_[l][k + t];
                mag += std::abs(weights_[l][k + t]);
            }
            if (std::abs(sum) > 1e-12 * std::max(1.0, mag)) {
                throw ArgumentError("feature extractor: every 3x3 weight slice must sum to zero");
            }
        }
        if (l > 0 && spec_.layers[l].in_channels != spec_.layers[l - 1].out_channels) {
            throw ArgumentError("feature extractor: layer channel counts do not chain");
        }
    }
}

FeatureMap FeatureExtractor::run(const ImageBuffer& image, bool parallel) const {
    if (image.width < min_input_size() || image.height < min_input_size()) {
        throw ArgumentError("extract_features: image must be at least 8x8");
    }
    FeatureMap current;
    current.channels = 3;
    current.height = image.height;
    current.width = image.width;
    current.data.resize(3 * image.pixel_count());
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < image.pixel_count(); ++i) current.data[c * image.pixel_count() + i] = image.pixels[3 * i + c];
    }

    for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
        const auto& layer = spec_.layers[l];
        const auto& w = weights_[l];
        FeatureMap next;
        next.channels = layer.out_channels;
        next.height = (current.height - kKernel) / kStride + 1;
        next.width = (current.width - kKernel) / kStride + 1;
        next.data.assign(static_cast<std::size_t>(next.channels) * next.height * next.width, 0.0);
        const std::size_t in_plane = static_cast<std::size_t>(current.height) * current.width;
        const std::size_t out_plane = static_cast<std::size_t>(next.height) * next.width;

        // Each slice sums to zero, so sum(w * x) == sum(w * (x - centre));
        // the centred form returns exact zeros on constant input.
        auto compute_channel = [&](int o) {
            for (int oy = 0; oy < next.height; ++oy) {
                for (int ox = 0; ox < next.width; ++ox) {
                    double acc = 0.0;
                    for (int i = 0; i < layer.in_channels; ++i) {
                        const double* plane = current.data.data() + i * in_plane;
                        const double* wk = w.data() + (static_cast<std::size_t>(o) * layer.in_channels + i) * 9;
                        const int y0 = oy * kStride;
                        const int x0 = ox * kStride;
                        const double centre = plane[static_cast<std::size_t>(y0 + 1) * current.width + x0 + 1];
                        for (int ky = 0; ky < kKernel; ++ky) {
                            const double* row = plane + static_cast<std::size_t>(y0 + ky) * current.width + x0;
                            for (int kx = 0; kx < kKernel; ++kx) acc += wk[ky * kKernel + kx] * (row[kx] - centre);
                        }
                    }
                    if (layer.relu) acc = std::max(acc, 0.0);
                    next.data[o * out_plane + static_cast<std::size_t>(oy) * next.width + ox] = acc;
                }
            }
        };
        if (parallel) {
            #pragma omp parallel for schedule(static)
            for (int o = 0; o < next.channels; ++o) compute_channel(o);
        } else {
            for (int o = 0; o < next.channels; ++o) compute_channel(o);
        }
        current = std::move(next);
    }
    return current;
}

FeatureMap FeatureExtractor::extract(const ImageBuffer& image) const { return run(image, true); }
FeatureMap FeatureExtractor::extract_serial(const ImageBuffer& image) const { return run(image, false); }

FeatureMap extract_features(const ImageBuffer& image, const FeatureExtractor& extractor) { return extractor.extract(image); }

double channel_std(std::span<const double> values) {
    if (values.empty()) throw ArgumentError("channel_std: empty channel");
    // Shifted two-pass: exact zero for constant channels.
    const double shift = values[0];
    double mean = 0.0;
    for (double v : values) mean += v - shift;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) {
        const double d = (v - shift) - mean;
        var += d * d;
    }
    return std::sqrt(var / static_cast<double>(values.size()));
}

double f2_watermark_destruction(std::span<const ImageBuffer> images, const FeatureExtractor& extractor) {
    if (images.empty()) throw ArgumentError("f2_watermark_destruction: empty view sequence");
    double sum = 0.0;
    for (const auto& image : images) {
        const auto features = extractor.extract(image);
        double per_view = 0.0;
        for (int c = 0; c < features.channels; ++c) per_view += channel_std(features.channel(c));
        sum += per_view / features.channels;
    }
    return sum / static_cast<double>(images.size());
}

}  // namespace gsattack
