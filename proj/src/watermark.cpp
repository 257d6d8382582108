#include "gsattack/watermark.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gsattack/error.hpp"
#include "gsattack/render.hpp"

namespace gsattack {

BitString BitString::parse(const std::string& text) {
    BitString out;
    for (char c : text) {
        if (c == '0' || c == '1') {
            out.bits.push_back(static_cast<std::uint8_t>(c - '0'));
        } else if (c != ',' && c != ' ' && c != '_') {
            throw ArgumentError(std::string("invalid bit character '") + c + "'");
        }
    }
    return out;
}

std::string BitString::to_string() const {
    std::string s;
    for (auto b : bits) s.push_back(b ? '1' : '0');
    return s;
}

BitString BitString::complemented() const {
    BitString out = *this;
    for (auto& b : out.bits) b = b ? 0 : 1;
    return out;
}

BitString default_message() {
    return BitString::parse("11101011,01010000,01010111,01001101,01000100,00100111");
}

double bar(const BitString& extracted, const BitString& original) {
    if (extracted.size() != original.size()) throw ArgumentError("bar: bit strings differ in length");
    if (original.size() == 0) throw ArgumentError("bar: empty bit string");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < original.size(); ++i) correct += extracted.bits[i] == original.bits[i] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(original.size());
}

double wus(double bar_value) {
    if (!(bar_value >= 0.0 && bar_value <= 1.0)) throw ArgumentError("wus: bar must lie in [0, 1]");
    return 1.0 - 2.0 * std::abs(bar_value - 0.5);
}

ConfusionCounts ConfusionCounts::tally(const BitString& extracted, const BitString& original) {
    if (extracted.size() != original.size()) throw ArgumentError("confusion: bit strings differ in length");
    ConfusionCounts c;
    for (std::size_t i = 0; i < original.size(); ++i) {
        const bool truth = original.bits[i] != 0;
        const bool guess = extracted.bits[i] != 0;
        if (truth && guess) ++c.tp;
        else if (!truth && !guess) ++c.tn;
        else if (!truth && guess) ++c.fp;
        else ++c.fn;
    }
    return c;
}

double mcc(const ConfusionCounts& counts) {
    const double tp = static_cast<double>(counts.tp);
    const double tn = static_cast<double>(counts.tn);
    const double fp = static_cast<double>(counts.fp);
    const double fn = static_cast<double>(counts.fn);
    const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (denom == 0.0) return 0.0;
    return (tp * tn - fp * fn) / std::sqrt(denom);
}

double ids(const ConfusionCounts& counts) { return 1.0 - std::abs(mcc(counts)); }

PsnrMse psnr_mse(const ImageBuffer& a, const ImageBuffer& b) {
    if (!a.same_shape(b)) throw ArgumentError("psnr_mse: image dimensions differ");
    if (a.pixels.empty()) throw ArgumentError("psnr_mse: empty image");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        const double d = a.pixels[i] - b.pixels[i];
        sum += d * d;
    }
    PsnrMse out;
    out.mse = sum / static_cast<double>(a.pixels.size());
    out.psnr = out.mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / out.mse);
    return out;
}

namespace {

// JSON has no infinity; a lossless PSNR is written as null.
nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

nlohmann::json WatermarkReport::to_json() const {
    nlohmann::json j = {{"psnr", finite_or_null(psnr)}, {"ssim", ssim}, {"mse", mse}};
    if (has_bits) {
        j["bar"] = bar;
        j["wus"] = wus;
        j["ids"] = ids;
    }
    return j;
}

WatermarkReport bit_scores(const BitString& extracted, const BitString& embedded) {
    WatermarkReport r;
    r.has_bits = true;
    r.bar = bar(extracted, embedded);
    r.wus = wus(r.bar);
    r.ids = ids(ConfusionCounts::tally(extracted, embedded));
    return r;
}

BitString ToyWatermark::embedded_bits() const {
    BitString out;
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (i < embeddable.size() && embeddable[i]) out.bits.push_back(bits.bits[i]);
    }
    return out;
}

std::vector<Camera> default_decode_views(const SplatModel& model, int resolution) {
    return {report_views(model, resolution).front()};
}

namespace {

// Cell holding (px, py), or -1. With `core` < 1 only the central fraction
// of each cell counts, which keeps neighbouring footprints out.
int cell_of(const ToyWatermark& wm, double px, double py, double core = 1.0) {
    const double w = wm.grid_x1 - wm.grid_x0;
    const double h = wm.grid_y1 - wm.grid_y0;
    if (!(w > 0.0 && h > 0.0)) return -1;
    if (px < wm.grid_x0 || px > wm.grid_x1 || py < wm.grid_y0 || py > wm.grid_y1) return -1;
    const double u = (px - wm.grid_x0) / w * wm.cols;
    const double v = (py - wm.grid_y0) / h * wm.rows;
    const int col = std::min(wm.cols - 1, static_cast<int>(u));
    const int row = std::min(wm.rows - 1, static_cast<int>(v));
    const double margin = 0.5 * (1.0 - core);
    const double fu = u - col, fv = v - row;
    if (fu < margin || fu > 1.0 - margin || fv < margin || fv > 1.0 - margin) return -1;
    return row * wm.cols + col;
}

constexpr double kDecodeCore = 0.5;

// Per-bit mean green over the pixels of each cell, averaged over views.
std::vector<double> cell_green_means(const SplatModel& model, const ToyWatermark& wm) {
    const std::size_t n_bits = wm.bits.size();
    std::vector<double> mean(n_bits, 0.0);
    for (const auto& cam : wm.decode_views) {
        const auto image = render(model, cam);
        std::vector<double> sum(n_bits, 0.0);
        std::vector<std::size_t> count(n_bits, 0);
        for (int y = 0; y < image.height; ++y) {
            for (int x = 0; x < image.width; ++x) {
                const int cell = cell_of(wm, x + 0.5, y + 0.5, kDecodeCore);
                if (cell < 0 || static_cast<std::size_t>(cell) >= n_bits) continue;
                sum[cell] += image.at(x, y, 1);
                ++count[cell];
            }
        }
        for (std::size_t i = 0; i < n_bits; ++i) mean[i] += count[i] ? sum[i] / static_cast<double>(count[i]) : 0.0;
    }
    for (auto& m : mean) m /= static_cast<double>(wm.decode_views.size());
    return mean;
}

}  // namespace

SplatModel embed_toy_watermark(const SplatModel& model, ToyWatermark& wm) {
    if (wm.bits.size() == 0) throw ArgumentError("toy watermark: empty message");
    if (wm.rows < 1 || wm.cols < 1 || static_cast<std::size_t>(wm.rows * wm.cols) < wm.bits.size()) {
        throw ArgumentError("toy watermark: rows * cols must be at least the message length");
    }
    if (wm.decode_views.empty()) throw ArgumentError("toy watermark: no decode views");
    const Camera& first = wm.decode_views.front();

    std::vector<std::optional<Eigen::Vector2d>> centres(model.size());
    double x0 = std::numeric_limits<double>::infinity(), y0 = x0;
    double x1 = -x0, y1 = -x0;
    for (std::size_t i = 0; i < model.size(); ++i) {
        auto s = project_gaussian(model.kernels[i], first);
        if (!s) continue;
        const auto& m = s->mean2d;
        if (m.x() < 0.0 || m.y() < 0.0 || m.x() > first.width || m.y() > first.height) continue;
        centres[i] = m;
        x0 = std::min(x0, m.x());
        y0 = std::min(y0, m.y());
        x1 = std::max(x1, m.x());
        y1 = std::max(y1, m.y());
    }
    wm.grid_x0 = x0;
    wm.grid_y0 = y0;
    wm.grid_x1 = x1;
    wm.grid_y1 = y1;

    std::vector<int> cell(model.size(), -1);
    std::vector<std::size_t> members(wm.bits.size(), 0);
    for (std::size_t i = 0; i < model.size(); ++i) {
        if (!centres[i]) continue;
        const int c = cell_of(wm, centres[i]->x(), centres[i]->y());
        if (c >= 0 && static_cast<std::size_t>(c) < wm.bits.size()) {
            cell[i] = c;
            ++members[c];
        }
    }
    wm.embeddable.assign(wm.bits.size(), false);
    for (std::size_t b = 0; b < wm.bits.size(); ++b) wm.embeddable[b] = members[b] > 0;
    wm.reference = cell_green_means(model, wm);

    SplatModel out = model;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (cell[i] < 0) continue;
        const double shift = wm.bits.bits[cell[i]] ? wm.delta : -wm.delta;
        auto& green = out.kernels[i].dc_color[1];
        green = static_cast<float>(static_cast<double>(green) + shift);
    }
    return out;
}

BitString decode_toy_watermark(const SplatModel& model, const ToyWatermark& wm) {
    if (!wm.embedded()) throw StateError("toy watermark has not been embedded");
    const auto means = cell_green_means(model, wm);
    BitString out;
    for (std::size_t b = 0; b < wm.bits.size(); ++b) {
        if (!wm.embeddable[b]) continue;
        out.bits.push_back(means[b] - wm.reference[b] > 0.0 ? 1 : 0);
    }
    return out;
}

nlohmann::json camera_to_json(const Camera& camera) {
    nlohmann::json rot = nlohmann::json::array();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) rot.push_back(camera.world_to_camera(r, c));
    }
    return {{"position", {camera.position.x(), camera.position.y(), camera.position.z()}},
            {"world_to_camera", rot},
            {"fov_y", camera.fov_y},
            {"width", camera.width},
            {"height", camera.height},
            {"near", camera.near_plane}};
}

Camera camera_from_json(const nlohmann::json& j) {
    Camera cam;
    const auto& p = j.at("position");
    cam.position = Eigen::Vector3d(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
    const auto& rot = j.at("world_to_camera");
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) cam.world_to_camera(r, c) = rot.at(3 * r + c).get<double>();
    }
    cam.fov_y = j.at("fov_y").get<double>();
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
    cam.near_plane = j.at("near").get<double>();
    cam.validate();
    return cam;
}

nlohmann::json ToyWatermark::to_json() const {
    nlohmann::json views = nlohmann::json::array();
    for (const auto& cam : decode_views) views.push_back(camera_to_json(cam));
    nlohmann::json j = {{"bits", bits.to_string()}, {"rows", rows},   {"cols", cols},
                        {"delta", delta},           {"decode_views", views},
                        {"grid", {grid_x0, grid_y0, grid_x1, grid_y1}}};
    j["embeddable"] = embeddable;
    j["reference"] = reference;
    return j;
}

ToyWatermark ToyWatermark::from_json(const nlohmann::json& j) {
    ToyWatermark wm;
    wm.bits = BitString::parse(j.at("bits").get<std::string>());
    wm.rows = j.at("rows").get<int>();
    wm.cols = j.at("cols").get<int>();
    wm.delta = j.at("delta").get<double>();
    for (const auto& v : j.at("decode_views")) wm.decode_views.push_back(camera_from_json(v));
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        wm.grid_x0 = g.at(0).get<double>();
        wm.grid_y0 = g.at(1).get<double>();
        wm.grid_x1 = g.at(2).get<double>();
        wm.grid_y1 = g.at(3).get<double>();
    }
    if (j.contains("embeddable")) wm.embeddable = j.at("embeddable").get<std::vector<bool>>();
    if (j.contains("reference")) wm.reference = j.at("reference").get<std::vector<double>>();
    if (wm.embedded() && (wm.embeddable.size() != wm.bits.size() || wm.reference.size() != wm.bits.size())) {
        throw ArgumentError("toy watermark JSON: embeddable/reference length does not match bits");
    }
    return wm;
}

}  // namespace gsattack
