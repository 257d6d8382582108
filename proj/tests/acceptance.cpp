// Acceptance gate. One line per criterion:
//
//   [PASS] C01 metric arithmetic | wus(0.6744)=0.651200 ...
//
// `acceptance --only N` runs a single criterion; the exit status is
// nonzero if any criterion run failed.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <mutex>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gsattack/attack.hpp"
#include "gsattack/grouping.hpp"
#include "gsattack/lemma.hpp"
#include "gsattack/objectives.hpp"
#include "gsattack/ply.hpp"
#include "gsattack/scene.hpp"
#include "gsattack/watermark.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace gsattack;
using Clock = std::chrono::steady_clock;

namespace {

// ---- tolerances -----------------------------------------------------------

constexpr double kWusTol = 1e-4;
constexpr double kSortSeconds = 5.0;
constexpr double kCrowdTol = 1e-9;
constexpr double kSbxMeanTol = 1e-12;
constexpr double kMutBiasFrac = 1e-3;
constexpr double kF1Tol = 1e-9;
constexpr double kOffsetTol = 1e-9;
constexpr double kLemmaGap = 0.1;
constexpr double kLemmaGaussTol = 5e-3;
constexpr double kLemmaDerivTol = 1e-4;
constexpr double kLemmaSeconds = 30.0;
constexpr double kGroupingSeconds = 2.0;
constexpr double kBarMax = 0.8;
constexpr double kSsimMin = 0.90;
constexpr int kSeedsNeeded = 4;
constexpr double kE2eSeconds = 300.0;
constexpr double kTimingNoise = 0.05;

// Desk attack fixture shared by C09-C11.
constexpr std::size_t kSceneKernels = 500;
constexpr std::size_t kDeskGroups = 2;
constexpr std::size_t kDeskPop = 20;
constexpr std::size_t kDeskGenerations = 60;
constexpr std::size_t kDeskViews = 4;
constexpr int kDeskResolution = 64;
constexpr int kDeskSeeds = 5;
constexpr double kWatermarkDelta = 0.05;
constexpr std::size_t kWatermarkBits = 16;

// C12: generations per group for the timing comparison.
constexpr std::size_t kTimingGenerations = 10;
constexpr int kTimingRepeats = 3;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::vector<ObjectivePair> random_points(Rng& rng, std::size_t n, bool ties) {
    std::vector<ObjectivePair> pts(n);
    for (auto& p : pts) p = ties ? ObjectivePair{double(rng.index(4)), double(rng.index(4))}
                                 : ObjectivePair{rng.uniform(), rng.uniform()};
    return pts;
}

ImageBuffer random_image(Rng& rng, int w, int h, double lo, double hi) {
    ImageBuffer img(w, h);
    for (auto& v : img.pixels) v = rng.uniform(lo, hi);
    return img;
}

// ---- C01 ------------------------------------------------------------------

Outcome c01() {
    const double w = wus(0.6744);
    const bool pass = std::abs(w - 0.6512) <= kWusTol && wus(0.5) == 1.0 && wus(1.0) == 0.0;
    return {pass, fmt("wus(0.6744)=%.6f (0.6512 +- %g)  wus(0.5)=%g  wus(1)=%g", w, kWusTol, wus(0.5), wus(1.0))};
}

// ---- C02 ------------------------------------------------------------------

Outcome c02() {
    const auto t0 = Clock::now();
    Rng rng(2002);
    int agree = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto pts = random_points(rng, 2 + rng.index(63), trial % 2 == 1);
        agree += fast_nondominated_sort(pts) == oracle::fronts(pts);
    }
    const double secs = seconds_since(t0);
    return {agree == 200 && secs < kSortSeconds, fmt("%d/200 populations agree  %.3fs (< %gs)", agree, secs, kSortSeconds)};
}

// ---- C03 ------------------------------------------------------------------

Outcome c03() {
    const double inf = std::numeric_limits<double>::infinity();
    const auto d = crowding_distance(std::vector<ObjectivePair>{{0, 1}, {0.5, 0.4}, {1, 0}});
    const bool ends = d[0] == inf && d[2] == inf;
    const bool interior = std::abs(d[1] - 2.0) <= kCrowdTol;
    // f2 constant: only f1 gaps; zero-range contributes exactly nothing.
    const auto flat = crowding_distance(std::vector<ObjectivePair>{{0, 5}, {0.25, 5}, {1, 5}});
    const bool zero_range = flat[1] == 1.0 && flat[0] == inf && flat[2] == inf;
    const auto none = crowding_distance(std::vector<ObjectivePair>{{1, 1}, {1, 1}, {1, 1}});
    const bool all_flat = none[0] == 0.0 && none[1] == 0.0 && none[2] == 0.0;
    return {ends && interior && zero_range && all_flat,
            fmt("ends=%s interior=%.12f (2 +- %g) flat-f2 interior=%g (1) all-flat=%g,%g,%g",
                ends ? "sentinel" : "WRONG", d[1], kCrowdTol, flat[1], none[0], none[1], none[2])};
}

// ---- C04 ------------------------------------------------------------------

Outcome c04() {
    Rng rng(2004);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
        const auto [lo, hi] = sbx_pair(a, b, sbx_spread_factor(rng.uniform(), 1.0));
        worst = std::max(worst, std::abs(0.5 * (lo + hi) - 0.5 * (a + b)));
    }
    const Genome g = Genome::random_initial(64, 50.0 / 255.0, rng);
    bool same = true;
    for (int i = 0; i < 100; ++i) {
        const auto [c1, c2] = sbx_crossover(g, g, 1.0, rng);
        same = same && c1 == g && c2 == g;
    }
    return {worst <= kSbxMeanTol && same,
            fmt("max |child mean - parent mean| = %.3g (<= %g) over 1e4 pairs; a=b -> children=a: %s", worst,
                kSbxMeanTol, same ? "yes" : "NO")};
}

// ---- C05 ------------------------------------------------------------------

Outcome c05() {
    Rng rng(2005);
    const double eps = 50.0 / 255.0;
    const Genome start = Genome::random_initial(100, eps, rng);
    const bool identity = polynomial_mutation(start, 0.0, 20.0, rng) == start;

    // Colour genes start at the centre of their range so clipping never
    // biases the perturbation; mask genes start anywhere.
    Genome centre = start;
    for (std::size_t j = centre.kernel_count(); j < centre.size(); ++j) centre.genes()[j] = 0.0;
    std::size_t draws = 0, inside = 0;
    double bias = 0.0;
    std::size_t colour_draws = 0;
    while (draws < 1000000) {
        const Genome child = polynomial_mutation(centre, 1.0, 20.0, rng);
        for (std::size_t j = 0; j < child.size(); ++j) {
            const double v = child.genes()[j];
            inside += v >= child.lower(j) && v <= child.upper(j);
            if (j >= child.kernel_count()) {
                bias += v - centre.genes()[j];
                ++colour_draws;
            }
        }
        draws += child.size();
    }
    bias /= static_cast<double>(colour_draws);
    const double range = 2.0 * eps;
    const bool pass = identity && inside == draws && std::abs(bias) < kMutBiasFrac * range;
    return {pass, fmt("p_m=0 identity=%s  in-bounds %zu/%zu  bias=%.3g (|.| < %.3g)", identity ? "yes" : "NO", inside,
                      draws, bias, kMutBiasFrac * range)};
}

// ---- C06 ------------------------------------------------------------------

Outcome c06() {
    Rng rng(2006);
    const FeatureExtractor extractor{};
    std::vector<ImageBuffer> views;
    for (int v = 0; v < 4; ++v) views.push_back(random_image(rng, 64, 64, 0.0, 0.6));
    double f1 = 0.0;
    for (double lambda : {0.0, 0.85, 1.0}) f1 = std::max(f1, std::abs(f1_visual_loss(views, views, lambda)));

    double f2_const = 0.0;
    for (double c : {0.0, 0.3, 1.0}) {
        const std::vector<ImageBuffer> flat{ImageBuffer(64, 64, c), ImageBuffer(40, 72, c)};
        f2_const = std::max(f2_const, std::abs(f2_watermark_destruction(flat, extractor)));
    }

    auto shifted = views;
    for (auto& img : shifted)
        for (auto& v : img.pixels) v += 0.35;
    const double a = f2_watermark_destruction(views, extractor);
    const double b = f2_watermark_destruction(shifted, extractor);
    const bool pass = f1 <= kF1Tol && f2_const == 0.0 && std::abs(a - b) <= kOffsetTol;
    return {pass, fmt("max|F1(x,x)|=%.3g (<= %g)  F2(const)=%g (0 exact)  |F2(x)-F2(x+0.35)|=%.3g (<= %g)", f1,
                      kF1Tol, f2_const, std::abs(a - b), kOffsetTol)};
}

// ---- C07 ------------------------------------------------------------------

Outcome c07() {
    const auto t0 = Clock::now();
    const LemmaReport r = validate_lemma({0.25, 1.0, 4.0}, 1000000, 2007, kLemmaGaussTol);
    const double secs = seconds_since(t0);
    double min_gap = std::numeric_limits<double>::infinity(), gauss_err = 0.0, deriv_err = 0.0;
    std::string gaps;
    for (const auto& row : r.rows) {
        if (row.family == Family::gaussian) {
            gauss_err = std::max(gauss_err, std::abs(row.margin));
        } else {
            min_gap = std::min(min_gap, row.margin);
            gaps += fmt(" %s@%g=%.4f", to_string(row.family), row.variance, row.margin);
        }
    }
    for (const auto& d : r.derivatives) deriv_err = std::max(deriv_err, d.relative_error);
    const double zero = gaussian_entropy_bound(1.0 / (2.0 * std::numbers::pi * std::numbers::e));
    const bool pass = min_gap >= kLemmaGap && gauss_err <= kLemmaGaussTol && deriv_err <= kLemmaDerivTol &&
                      zero == 0.0 && secs < kLemmaSeconds;
    return {pass, fmt("min gap %.4f (>= %g)%s; gaussian |est-bound| %.2e (<= %g); d/dv rel err %.1e (<= %g); "
                      "bound(1/2pie)=%g; %.1fs (< %gs)",
                      min_gap, kLemmaGap, gaps.c_str(), gauss_err, kLemmaGaussTol, deriv_err, kLemmaDerivTol, zero,
                      secs, kLemmaSeconds)};
}

// ---- C08 ------------------------------------------------------------------

std::vector<Point3> two_blobs(Rng& rng, std::size_t per_blob) {
    std::vector<Point3> pts;
    for (int b = 0; b < 2; ++b) {
        for (std::size_t i = 0; i < per_blob; ++i)
            pts.push_back({rng.uniform(-1, 1) + 50.0 * b, rng.uniform(-1, 1), rng.uniform(-1, 1)});
    }
    return pts;
}

Outcome c08() {
    const auto t0 = Clock::now();
    const SplatModel model = make_random_model(500, 2008);
    bool monotone = true;
    std::size_t traces = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        for (std::size_t k : {2, 5, 10, 25}) {
            const auto a = kmeans(kernel_positions(model), k, seed);
            for (std::size_t t = 1; t < a.wcss_trace.size(); ++t) monotone = monotone && a.wcss_trace[t] <= a.wcss_trace[t - 1];
            ++traces;
        }
    }
    const auto assignment = kmeans(kernel_positions(model), 7, 1);
    const SplatModel back = merge(partition(model, assignment));
    const bool identity = back.same_kernels(model);

    Rng rng(2008);
    int separated = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const auto pts = two_blobs(rng, 50);
        const auto a = kmeans(pts, 2, trial);
        bool ok = a.labels[0] != a.labels[50];
        for (std::size_t i = 0; i < 100; ++i) ok = ok && a.labels[i] == a.labels[i < 50 ? 0 : 50];
        separated += ok;
    }
    const double secs = seconds_since(t0);
    return {monotone && identity && separated == 10 && secs < kGroupingSeconds,
            fmt("WCSS non-increasing over %zu traces: %s; merge(partition) identity: %s; blobs separated %d/10; "
                "%.2fs (< %gs)",
                traces, monotone ? "yes" : "NO", identity ? "yes" : "NO", separated, secs, kGroupingSeconds)};
}

// ---- desk fixture ---------------------------------------------------------

struct Desk {
    SplatModel marked;
    ToyWatermark wm;
    double pre_bar = 0.0;
};

Desk desk_fixture(int seed) {
    Desk d;
    const SplatModel scene = make_synthetic_scene(kSceneKernels, 1000 + seed);
    Rng rng(Rng::derive(7000, seed));
    for (std::size_t i = 0; i < kWatermarkBits; ++i) d.wm.bits.bits.push_back(static_cast<std::uint8_t>(rng.index(2)));
    d.wm.delta = kWatermarkDelta;
    d.wm.decode_views = default_decode_views(scene, kDeskResolution);
    d.marked = embed_toy_watermark(scene, d.wm);
    d.pre_bar = bar(decode_toy_watermark(d.marked, d.wm), d.wm.embedded_bits());
    return d;
}

EvolutionConfig desk_config(int seed) {
    EvolutionConfig cfg;
    cfg.n_pop = kDeskPop;
    cfg.generations = kDeskGenerations;
    cfg.n_views = kDeskViews;
    cfg.seed = static_cast<std::uint64_t>(seed);
    return cfg;
}

AttackOptions desk_options() {
    AttackOptions opt;
    opt.k = kDeskGroups;
    opt.resolution = kDeskResolution;
    opt.report_resolution = kDeskResolution;
    opt.policy = SelectionPolicy::balanced;
    opt.workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    return opt;
}

// ---- C09 ------------------------------------------------------------------

int run_cli(const std::string& args) {
    const std::string cmd = std::string(GSATTACK_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome c09() {
    const fs::path work = fs::path(ACCEPTANCE_WORKDIR) / "c09";
    fs::remove_all(work);
    fs::create_directories(work);
    save_ply(desk_fixture(0).marked, work / "fixture.ply");
    const std::string common = (work / "fixture.ply").string() +
                               fmt(" --k %zu --pop %zu --generations %zu --views %zu --resolution %d "
                                   "--report-resolution %d --seed 7 --out ",
                                   kDeskGroups, kDeskPop, kDeskGenerations, kDeskViews, kDeskResolution,
                                   kDeskResolution);
    const auto t0 = Clock::now();
    const int s1 = run_cli("attack " + common + (work / "a").string());
    const int s2 = run_cli("attack " + common + (work / "b").string());
    const double secs = seconds_since(t0);
    if (s1 != 0 || s2 != 0) return {false, fmt("attack exited with %d / %d", s1, s2)};

    std::vector<std::string> differ;
    std::vector<std::string> files = {"attacked.ply"};
    for (std::size_t g = 0; g < kDeskGroups; ++g) files.push_back(fmt("convergence_group%zu.csv", g));
    for (const auto& f : files)
        if (slurp(work / "a" / f) != slurp(work / "b" / f)) differ.push_back(f);
    auto m1 = nlohmann::json::parse(slurp(work / "a" / "manifest.json"));
    auto m2 = nlohmann::json::parse(slurp(work / "b" / "manifest.json"));
    m1.erase("timestamp");
    m2.erase("timestamp");
    if (m1 != m2) differ.push_back("manifest.json");
    std::string list;
    for (const auto& f : differ) list += " " + f;
    return {differ.empty(), fmt("two seeded runs (%.1fs total): %s%s", secs,
                                differ.empty() ? "PLY, convergence CSVs and manifests identical" : "differ:",
                                list.c_str())};
}

// ---- C10 ------------------------------------------------------------------

Outcome c10() {
    const auto t0 = Clock::now();
    int good = 0;
    bool pre_ok = true;
    std::string rows;
    for (int s = 0; s < kDeskSeeds; ++s) {
        const Desk d = desk_fixture(s);
        pre_ok = pre_ok && d.pre_bar == 1.0;
        const AttackResult r = run_attack(d.marked, desk_config(s), desk_options());
        const double post = bar(decode_toy_watermark(r.model, d.wm), d.wm.embedded_bits());
        const bool ok = post <= kBarMax && r.fidelity.ssim >= kSsimMin;
        good += ok;
        rows += fmt(" s%d:bar %.3f->%.3f ssim %.3f%s", s, d.pre_bar, post, r.fidelity.ssim, ok ? "" : "x");
    }
    const double secs = seconds_since(t0);
    return {pre_ok && good >= kSeedsNeeded && secs < kE2eSeconds,
            fmt("%d/%d seeds with BAR <= %g and SSIM >= %g (need %d);%s; %.0fs (< %gs)", good, kDeskSeeds, kBarMax,
                kSsimMin, kSeedsNeeded, rows.c_str(), secs, kE2eSeconds)};
}

// ---- C11 ------------------------------------------------------------------

Outcome c11() {
    std::vector<double> first, last;
    std::mutex mu;
    std::size_t checked = 0, violations = 0;
    for (int s = 0; s < kDeskSeeds; ++s) {
        const Desk d = desk_fixture(s);
        AttackOptions opt = desk_options();
        // Independent elitism check: first front of R_t by brute force.
        opt.observer = [&](std::size_t, const GenerationSnapshot& snap) {
            std::vector<ObjectivePair> pts;
            for (const auto& m : snap.pool->members) pts.push_back(*m.fitness);
            const auto f1 = oracle::fronts(pts)[0];
            bool ok = true;
            if (f1.size() <= snap.survivors->size()) {
                for (auto i : f1) {
                    ok = ok && std::any_of(snap.survivors->members.begin(), snap.survivors->members.end(),
                                           [&](const Individual& m) { return m.genome == snap.pool->members[i].genome; });
                }
            }
            std::lock_guard lock(mu);
            ++checked;
            violations += !ok;
        };
        const AttackResult r = run_attack(d.marked, desk_config(s), opt);
        // Per seed: mean over groups of the generation's best f2.
        double a = 0.0, b = 0.0;
        for (const auto& g : r.groups) {
            a += g.evolution.history.front().best_f2;
            b += g.evolution.history.back().best_f2;
            for (const auto& h : g.evolution.history) violations += !h.elitism_held;
        }
        first.push_back(a / static_cast<double>(r.groups.size()));
        last.push_back(b / static_cast<double>(r.groups.size()));
    }
    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v[v.size() / 2];
    };
    const double m0 = median(first), mT = median(last);
    std::string rows;
    for (int s = 0; s < kDeskSeeds; ++s) rows += fmt(" s%d:%.5f->%.5f", s, first[s], last[s]);
    return {mT < m0 && violations == 0 && checked == kDeskSeeds * kDeskGroups * kDeskGenerations,
            fmt("median best-f2 T=0 %.5f, T=%zu %.5f (strictly below);%s; elitism %zu generations checked, %zu "
                "violations",
                m0, kDeskGenerations, mT, rows.c_str(), checked, violations)};
}

// ---- C12 ------------------------------------------------------------------

Outcome c12() {
    const Desk d = desk_fixture(0);
    EvolutionConfig cfg = desk_config(0);
    cfg.generations = kTimingGenerations;
    auto best_time = [&](std::size_t k) {
        AttackOptions opt = desk_options();
        opt.k = k;
        opt.workers = 5;  // same worker budget for both
        double best = std::numeric_limits<double>::infinity();
        for (int rep = 0; rep < kTimingRepeats; ++rep) {
            const auto t0 = Clock::now();
            run_attack(d.marked, cfg, opt);
            best = std::min(best, seconds_since(t0));
        }
        return best;
    };
    const double t1 = best_time(1), t5 = best_time(5);
    return {t5 <= t1 * (1.0 + kTimingNoise),
            fmt("best of %d, %zu generations/group, 5 workers, %u hardware threads: k=5 %.2fs vs k=1 %.2fs "
                "(need <= %.2fs)",
                kTimingRepeats, kTimingGenerations, std::thread::hardware_concurrency(), t5, t1,
                t1 * (1.0 + kTimingNoise))};
}

struct Criterion {
    const char* name;
    std::function<Outcome()> run;
};

const std::vector<Criterion> kCriteria = {
    {"metric arithmetic", c01},  {"sorting oracle", c02},       {"crowding distance", c03},
    {"SBX mean preservation", c04}, {"mutation contract", c05}, {"objective identities", c06},
    {"entropy bound validation", c07}, {"grouping", c08},       {"determinism", c09},
    {"end-to-end desk attack", c10}, {"convergence trend", c11}, {"group-count timing", c12},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance gate"};
    int only = 0;
    app.add_option("--only", only, "run a single criterion (1-12)")->check(CLI::Range(1, 12));
    CLI11_PARSE(app, argc, argv);

    int failed = 0;
    for (std::size_t i = 0; i < kCriteria.size(); ++i) {
        if (only != 0 && static_cast<std::size_t>(only) != i + 1) continue;
        Outcome o;
        try {
            o = kCriteria[i].run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("[%s] C%02zu %s | %s\n", o.pass ? "PASS" : "FAIL", i + 1, kCriteria[i].name, o.detail.c_str());
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
