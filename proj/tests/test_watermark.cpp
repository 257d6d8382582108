#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gsattack/camera.hpp"
#include "gsattack/error.hpp"
#include "gsattack/lemma.hpp"
#include "gsattack/random.hpp"
#include "gsattack/scene.hpp"
#include "gsattack/watermark.hpp"

using namespace gsattack;

namespace {

ToyWatermark toy(const SplatModel& m, const std::string& bits, double delta = 0.05) {
    ToyWatermark wm;
    wm.bits = BitString::parse(bits);
    wm.delta = delta;
    wm.decode_views = default_decode_views(m, 64);
    return wm;
}

BitString random_bits(Rng& rng, std::size_t n) {
    BitString b;
    for (std::size_t i = 0; i < n; ++i) b.bits.push_back(static_cast<std::uint8_t>(rng.index(2)));
    return b;
}

}  // namespace

TEST_CASE("bit accuracy and uncertainty") {
    const auto a = BitString::parse("1010");
    CHECK(bar(a, a) == 1.0);
    CHECK(bar(a.complemented(), a) == 0.0);
    CHECK(bar(BitString::parse("1000"), a) == 0.75);
    CHECK(wus(0.5) == 1.0);
    CHECK(wus(1.0) == 0.0);
    CHECK(wus(0.0) == 0.0);
    // Chair row of the comparison table: BAR 67.44 -> WUS 65.12.
    CHECK(std::abs(wus(0.6744) - 0.6512) <= 1e-4);
    CHECK_THROWS_AS(wus(1.2), ArgumentError);
    CHECK_THROWS_AS(bar(a, BitString::parse("10")), ArgumentError);
    CHECK_THROWS_AS(bar(BitString{}, BitString{}), ArgumentError);
    CHECK_THROWS_AS(BitString::parse("10x"), ArgumentError);
    CHECK(BitString::parse("1_0, 1").to_string() == "101");
    CHECK(default_message().size() == 48);
}

TEST_CASE("identification score") {
    const auto a = BitString::parse("1100");
    CHECK(ids(ConfusionCounts::tally(a, a)) == doctest::Approx(0.0));
    CHECK(ids(ConfusionCounts::tally(a.complemented(), a)) == doctest::Approx(0.0));
    // Constant guess: MCC undefined, reported as 0.
    CHECK(ids(ConfusionCounts::tally(BitString::parse("1111"), a)) == 1.0);
    const auto c = ConfusionCounts::tally(BitString::parse("1010"), a);
    CHECK(c.tp == 1);
    CHECK(c.fn == 1);
    CHECK(c.fp == 1);
    CHECK(c.tn == 1);
    CHECK(mcc(c) == 0.0);
}

TEST_CASE("psnr and mse") {
    ImageBuffer a(4, 4, 0.5), b(4, 4, 0.5);
    auto r = psnr_mse(a, b);
    CHECK(r.mse == 0.0);
    CHECK(std::isinf(r.psnr));
    b = ImageBuffer(4, 4, 0.6);
    r = psnr_mse(a, b);
    CHECK(r.mse == doctest::Approx(0.01));
    CHECK(r.psnr == doctest::Approx(20.0));
    CHECK_THROWS_AS(psnr_mse(a, ImageBuffer(3, 4)), ArgumentError);
    const auto j = bit_scores(BitString::parse("10"), BitString::parse("11")).to_json();
    CHECK(j.at("bar") == 0.5);
    CHECK(j.at("wus") == 1.0);
}

TEST_CASE("zero-strength watermark changes nothing") {
    const SplatModel m = make_synthetic_scene(500, 1);
    ToyWatermark wm = toy(m, "1011001110001111", 0.0);
    CHECK(embed_toy_watermark(m, wm).same_kernels(m));
}

TEST_CASE("all-ones message raises green of embedded kernels by delta") {
    const SplatModel m = make_synthetic_scene(500, 2);
    ToyWatermark wm = toy(m, std::string(16, '1'));
    const SplatModel w = embed_toy_watermark(m, wm);
    std::size_t shifted = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto& a = m.kernels[i];
        const auto& b = w.kernels[i];
        CHECK(a.dc_color[0] == b.dc_color[0]);
        CHECK(a.dc_color[2] == b.dc_color[2]);
        CHECK(a.position == b.position);
        if (a.dc_color[1] != b.dc_color[1]) {
            CHECK(b.dc_color[1] == float(double(a.dc_color[1]) + 0.05));
            ++shifted;
        }
    }
    CHECK(shifted > 0);
}

TEST_CASE("embedded messages decode back") {
    Rng rng(3);
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
        const SplatModel m = make_synthetic_scene(500, seed);
        ToyWatermark wm = toy(m, random_bits(rng, 16).to_string());
        const SplatModel w = embed_toy_watermark(m, wm);
        const BitString truth = wm.embedded_bits();
        CHECK(truth.size() == 16);
        CHECK(bar(decode_toy_watermark(w, wm), truth) == 1.0);
    }
}

TEST_CASE("unwatermarked model decodes at chance") {
    const SplatModel m = make_synthetic_scene(500, 4);
    Rng rng(4);
    double sum = 0.0;
    for (int i = 0; i < 20; ++i) {
        ToyWatermark wm = toy(m, random_bits(rng, 16).to_string());
        embed_toy_watermark(m, wm);
        sum += bar(decode_toy_watermark(m, wm), wm.embedded_bits());
    }
    CHECK(std::abs(sum / 20.0 - 0.5) < 0.1);
}

TEST_CASE("black model decodes to zeros and misuse") {
    const SplatModel m = make_synthetic_scene(200, 5);
    ToyWatermark wm = toy(m, "10110011");
    embed_toy_watermark(m, wm);
    SplatModel black = m;
    for (auto& k : black.kernels) k.dc_color = {0.0f, 0.0f, 0.0f};
    // Residuals are all -reference.
    for (double r : wm.reference) CHECK(r > 0.0);
    CHECK(decode_toy_watermark(black, wm).to_string() == std::string(8, '0'));

    ToyWatermark fresh = toy(m, "1011");
    CHECK_THROWS_AS(decode_toy_watermark(m, fresh), StateError);
    ToyWatermark too_long = toy(m, std::string(17, '1'));
    CHECK_THROWS_AS(embed_toy_watermark(m, too_long), ArgumentError);
    ToyWatermark no_views = toy(m, "1");
    no_views.decode_views.clear();
    CHECK_THROWS_AS(embed_toy_watermark(m, no_views), ArgumentError);
}

TEST_CASE("watermark JSON round trip decodes identically") {
    const SplatModel m = make_synthetic_scene(300, 6);
    ToyWatermark wm = toy(m, "1100101011110000");
    const SplatModel w = embed_toy_watermark(m, wm);
    const ToyWatermark back = ToyWatermark::from_json(nlohmann::json::parse(wm.to_json().dump()));
    CHECK(back.embeddable == wm.embeddable);
    CHECK(decode_toy_watermark(w, back) == decode_toy_watermark(w, wm));
}

TEST_CASE("entropy bound is zero at 1 / (2 pi e)") {
    const double v = 1.0 / (2.0 * std::numbers::pi * std::numbers::e);
    CHECK(gaussian_entropy_bound(v) == 0.0);
}

TEST_CASE("Gaussian estimate matches the integrated entropy") {
    // -integral of g ln g by the midpoint rule over +-12 sigma.
    const double s2 = 1.0;
    const int n = 200000;
    const double lo = -12.0, step = 24.0 / n;
    double h = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = lo + (i + 0.5) * step;
        const double g = std::exp(-x * x / (2 * s2)) / std::sqrt(2 * std::numbers::pi * s2);
        h -= g * std::log(g) * step;
    }
    CHECK(std::abs(h - gaussian_entropy_bound(s2)) < 1e-9);
    const double est = knn_entropy(sample_family(Family::gaussian, s2, 1000000, 7));
    CHECK(std::abs(est - h) < 5e-3);
}

TEST_CASE("uniform estimate sits below the bound by the analytic gap") {
    // Variance 1 uniform on +-sqrt(3): entropy ln(2 sqrt 3).
    const double exact = std::log(2.0 * std::sqrt(3.0));
    const double est = knn_entropy(sample_family(Family::uniform, 1.0, 1000000, 8));
    CHECK(std::abs(est - exact) < 5e-3);
    CHECK(gaussian_entropy_bound(1.0) - exact == doctest::Approx(0.1765).epsilon(1e-3));
}

TEST_CASE("lemma validation rejects bad input") {
    CHECK_THROWS_AS(validate_lemma({-1.0}, 100000, 1), ArgumentError);
    CHECK_THROWS_AS(validate_lemma({1.0}, 10, 1), ArgumentError);
    CHECK_THROWS_AS(validate_lemma({}, 100000, 1), ArgumentError);
    CHECK_THROWS_AS(knn_entropy({1.0, 2.0}), ArgumentError);
}

TEST_CASE("lemma report on a small sweep") {
    const auto r = validate_lemma({0.5, 2.0}, 200000, 9, 1e-2);
    CHECK(r.rows.size() == 6);
    CHECK(r.passed());
    for (const auto& d : r.derivatives) CHECK(d.relative_error < 1e-4);
}
