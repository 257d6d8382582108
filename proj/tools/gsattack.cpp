// gsattack: command-line driver.
//
//   gsattack attack  MODEL --out DIR [--config FILE] [flags]
//   gsattack render  MODEL --camera AZ,EL[,DIST_SCALE[,FOV]] --out FILE.png
//   gsattack metrics ORIGINAL ATTACKED [--watermark FILE] [--bar] [--out FILE.json]
//   gsattack lemma   [--variances LIST] [--samples N] [--seed S] [--out FILE.csv]
//   gsattack synth   --count N --seed S --out FILE.ply
//
// Exit status: 0 on success, 1 on a runtime failure, 2 on a usage error.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gsattack/attack.hpp"
#include "gsattack/error.hpp"
#include "gsattack/lemma.hpp"
#include "gsattack/objectives.hpp"
#include "gsattack/ply.hpp"
#include "gsattack/render.hpp"
#include "gsattack/report.hpp"
#include "gsattack/scene.hpp"
#include "gsattack/watermark.hpp"

namespace fs = std::filesystem;
using namespace gsattack;
using nlohmann::json;

namespace {

struct UsageError : Error {
    using Error::Error;
};

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Flat run configuration. Keys of the JSON config file use these names.
struct RunConfig {
    std::string input;
    std::string out = "gsattack_out";
    std::uint64_t seed = 0;
    std::size_t k = 10;
    std::size_t generations = 200;
    std::size_t pop = 50;
    std::size_t views = 8;
    int resolution = 128;
    int report_resolution = 128;
    std::string policy = "balanced";
    std::string view_mode = "sphere";
    int workers = 1;
    double eta_c = 1.0;
    double p_m = 0.1;
    double eta_m = 20.0;
    double epsilon = 50.0 / 255.0;
    double lambda = 0.85;
    std::uint64_t extractor_seed = 42;
    std::string watermark;  // existing toy watermark JSON
    std::string embed_bits;  // embed a toy watermark before attacking
    double embed_delta = 0.05;
};

template <class T>
void take(const json& j, const char* key, T& field) {
    if (j.contains(key)) field = j.at(key).get<T>();
}

void apply_config_file(const std::string& path, RunConfig& c) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw UsageError("config " + path + ": " + e.what());
    }
    if (!j.is_object()) throw UsageError("config " + path + ": expected a JSON object");
    static const std::vector<std::string> known = {
        "input",  "out",     "seed",   "k",          "generations", "pop",           "views",
        "resolution", "report_resolution", "policy", "view_mode", "workers", "eta_c", "p_m",
        "eta_m",  "epsilon", "lambda", "extractor_seed", "watermark", "embed_bits", "embed_delta"};
    for (const auto& [key, _] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw UsageError("config " + path + ": unknown key '" + key + "'");
    }
    try {
        take(j, "input", c.input);
        take(j, "out", c.out);
        take(j, "seed", c.seed);
        take(j, "k", c.k);
        take(j, "generations", c.generations);
        take(j, "pop", c.pop);
        take(j, "views", c.views);
        take(j, "resolution", c.resolution);
        take(j, "report_resolution", c.report_resolution);
        take(j, "policy", c.policy);
        take(j, "view_mode", c.view_mode);
        take(j, "workers", c.workers);
        take(j, "eta_c", c.eta_c);
        take(j, "p_m", c.p_m);
        take(j, "eta_m", c.eta_m);
        take(j, "epsilon", c.epsilon);
        take(j, "lambda", c.lambda);
        take(j, "extractor_seed", c.extractor_seed);
        take(j, "watermark", c.watermark);
        take(j, "embed_bits", c.embed_bits);
        take(j, "embed_delta", c.embed_delta);
    } catch (const json::exception& e) {
        throw UsageError("config " + path + ": " + e.what());
    }
}

std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError(std::string("bad ") + what + " '" + text + "'");
        }
    }
    return out;
}

BitString decode_bar_bits(const SplatModel& model, const ToyWatermark& wm, double* bar_out) {
    const BitString got = decode_toy_watermark(model, wm);
    *bar_out = bar(got, wm.embedded_bits());
    return got;
}

ToyWatermark load_watermark(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open watermark " + path);
    const ToyWatermark wm = ToyWatermark::from_json(json::parse(in));
    if (!wm.embedded()) throw UsageError("watermark " + path + " has not been embedded");
    return wm;
}

int cmd_attack(RunConfig c) {
    if (c.input.empty()) throw UsageError("attack: no input model");
    if (!c.watermark.empty() && !c.embed_bits.empty())
        throw UsageError("attack: --watermark and --embed are mutually exclusive");

    EvolutionConfig cfg;
    cfg.n_pop = c.pop;
    cfg.generations = c.generations;
    cfg.eta_c = c.eta_c;
    cfg.p_m = c.p_m;
    cfg.eta_m = c.eta_m;
    cfg.epsilon = c.epsilon;
    cfg.lambda = c.lambda;
    cfg.n_views = c.views;
    cfg.seed = c.seed;
    AttackOptions opt;
    opt.k = c.k;
    try {
        opt.policy = parse_policy(c.policy);
        opt.view_mode = parse_view_mode(c.view_mode);
        cfg.validate();
    } catch (const ArgumentError& e) {
        throw UsageError(e.what());
    }
    opt.resolution = c.resolution;
    opt.report_resolution = c.report_resolution;
    opt.extractor.seed = c.extractor_seed;
    opt.workers = c.workers;

    const fs::path out = c.out;
    fs::create_directories(out);

    SplatModel model = load_ply(c.input);
    std::optional<ToyWatermark> wm;
    if (!c.watermark.empty()) wm = load_watermark(c.watermark);
    if (!c.embed_bits.empty()) {
        ToyWatermark fresh;
        fresh.bits = BitString::parse(c.embed_bits);
        fresh.delta = c.embed_delta;
        fresh.rows = fresh.cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(fresh.bits.size()))));
        fresh.decode_views = default_decode_views(model, 64);
        model = embed_toy_watermark(model, fresh);
        save_ply(model, out / "watermarked.ply");
        write_json(fresh.to_json(), out / "watermark.json");
        wm = fresh;
    }

    const AttackResult result = run_attack(model, cfg, opt);

    save_ply(result.model, out / "attacked.ply");
    for (std::size_t g = 0; g < result.groups.size(); ++g) {
        const auto& evo = result.groups[g].evolution;
        write_pareto_csv(evo, out / ("pareto_group" + std::to_string(g) + ".csv"));
        write_convergence_csv(evo, out / ("convergence_group" + std::to_string(g) + ".csv"));
    }
    const auto views = report_views(model, opt.report_resolution);
    for (std::size_t v = 0; v < views.size(); ++v) {
        write_png(render(model, views[v]), out / ("before_view" + std::to_string(v) + ".png"));
        write_png(render(result.model, views[v]), out / ("after_view" + std::to_string(v) + ".png"));
    }

    json manifest = attack_manifest(result, cfg, opt, c.input, utc_timestamp());
    if (wm) {
        double pre = 0.0, post = 0.0;
        decode_bar_bits(model, *wm, &pre);
        const BitString got = decode_bar_bits(result.model, *wm, &post);
        manifest["watermark"] = {{"bits", wm->embedded_bits().to_string()},
                                 {"delta", wm->delta},
                                 {"pre_bar", pre},
                                 {"post_bar", post},
                                 {"post_report", bit_scores(got, wm->embedded_bits()).to_json()}};
        std::cout << "bar " << pre << " -> " << post << "\n";
    }
    write_json(manifest, out / "manifest.json");
    std::cout << "kernels " << model.size() << " -> " << result.model.size() << "  ssim " << result.fidelity.ssim
              << "\n";
    return 0;
}

Camera parse_camera(const std::string& text, const SplatModel& model, int resolution) {
    const auto v = parse_list(text, "camera");
    if (v.size() < 2 || v.size() > 4) throw UsageError("camera must be AZ,EL[,DIST_SCALE[,FOV]] in degrees");
    const double deg = std::numbers::pi / 180.0;
    const double scale = v.size() > 2 ? v[2] : 2.5;
    const double fov = v.size() > 3 ? v[3] : 50.0;
    if (!(scale > 0.0) || !(fov > 0.0 && fov < 180.0)) throw UsageError("camera: bad distance scale or fov");
    const auto sphere = bounding_sphere(model);
    return orbit_camera(sphere.center, scale * sphere.radius, v[0] * deg, v[1] * deg, fov * deg, resolution,
                        resolution);
}

void report_line(const char* name, double v) { std::cout << name << " " << v << "\n"; }

int cmd_metrics(const std::string& original, const std::string& attacked, const std::string& watermark,
                bool want_bar, int resolution, const std::string& out) {
    if (want_bar && watermark.empty()) throw UsageError("metrics: --bar needs --watermark");
    const SplatModel a = load_ply(original);
    const SplatModel b = load_ply(attacked);
    const Fidelity f = measure_fidelity(a, b, resolution);
    WatermarkReport r;
    if (!watermark.empty()) {
        const ToyWatermark wm = load_watermark(watermark);
        r = bit_scores(decode_toy_watermark(b, wm), wm.embedded_bits());
    }
    r.ssim = f.ssim;
    r.mse = f.mse;
    r.psnr = f.psnr;
    if (r.has_bits) {
        report_line("bar", r.bar);
        report_line("wus", r.wus);
        report_line("ids", r.ids);
    }
    report_line("ssim", r.ssim);
    report_line("psnr", r.psnr);
    report_line("mse", r.mse);
    if (!out.empty()) write_json(r.to_json(), out);
    return 0;
}

int cmd_lemma(const std::string& variances, std::size_t samples, std::uint64_t seed, const std::string& out) {
    const auto list = parse_list(variances, "variance list");
    for (double v : list) {
        if (!(v > 0.0)) throw UsageError("lemma: variances must be positive");
    }
    if (samples < 100000) throw UsageError("lemma: at least 100000 samples");
    const LemmaReport report = validate_lemma(list, samples, seed);
    std::cout << std::setprecision(10);
    std::cout << "variance family estimate bound margin\n";
    for (const auto& row : report.rows) {
        std::cout << row.variance << " " << to_string(row.family) << " " << row.estimate << " " << row.bound << " "
                  << row.margin << "\n";
    }
    if (!out.empty()) write_lemma_csv(report, out);
    for (const auto& f : report.failures()) std::cerr << "lemma: " << f << "\n";
    return report.passed() ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Group-based multi-objective attack on watermarked Gaussian splats"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    RunConfig rc;
    std::string config_path;
    auto* attack = app.add_subcommand("attack", "evolve an attacked copy of a model");
    attack->add_option("model", rc.input, "input PLY");
    attack->add_option("--config", config_path, "flat JSON config; flags override it");
    auto* o_out = attack->add_option("--out", rc.out, "output directory");
    auto* o_seed = attack->add_option("--seed", rc.seed);
    auto* o_k = attack->add_option("--k", rc.k, "group count");
    auto* o_gen = attack->add_option("--generations", rc.generations);
    auto* o_pop = attack->add_option("--pop", rc.pop, "population size");
    auto* o_views = attack->add_option("--views", rc.views, "fitness views per generation");
    auto* o_res = attack->add_option("--resolution", rc.resolution, "fitness render size");
    auto* o_rres = attack->add_option("--report-resolution", rc.report_resolution);
    auto* o_policy = attack->add_option("--policy", rc.policy, "quality|attack|balanced|identity");
    auto* o_mode = attack->add_option("--view-mode", rc.view_mode, "sphere|arc");
    auto* o_workers = attack->add_option("--workers", rc.workers, "concurrent group evolutions");
    auto* o_wm = attack->add_option("--watermark", rc.watermark, "toy watermark JSON of the input");
    auto* o_embed = attack->add_option("--embed", rc.embed_bits, "embed this bit string first");
    auto* o_delta = attack->add_option("--embed-delta", rc.embed_delta);

    std::string model_path, camera_text, png_out;
    int render_res = 128;
    auto* rnd = app.add_subcommand("render", "render one view to PNG");
    rnd->add_option("model", model_path)->required();
    rnd->add_option("--camera", camera_text, "AZ,EL[,DIST_SCALE[,FOV]] in degrees")->required();
    rnd->add_option("--resolution", render_res);
    rnd->add_option("--out", png_out)->required();

    std::string original, attacked, watermark, metrics_out;
    bool want_bar = false;
    int metrics_res = 128;
    auto* met = app.add_subcommand("metrics", "fidelity and watermark scores of an attacked model");
    met->add_option("original", original)->required();
    met->add_option("attacked", attacked)->required();
    met->add_option("--watermark", watermark);
    met->add_flag("--bar", want_bar, "require bit scores");
    met->add_option("--resolution", metrics_res);
    met->add_option("--out", metrics_out, "report JSON");

    std::string variances = "0.25,1,4", lemma_out;
    std::size_t samples = 1000000;
    std::uint64_t lemma_seed = 0;
    auto* lem = app.add_subcommand("lemma", "numerical check of the Gaussian entropy bound");
    lem->add_option("--variances", variances, "comma separated");
    lem->add_option("--samples", samples);
    lem->add_option("--seed", lemma_seed);
    lem->add_option("--out", lemma_out, "CSV");

    std::size_t synth_count = 500;
    std::uint64_t synth_seed = 0;
    std::string synth_out;
    auto* syn = app.add_subcommand("synth", "write the synthetic test scene");
    syn->add_option("--count", synth_count);
    syn->add_option("--seed", synth_seed);
    syn->add_option("--out", synth_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*attack) {
            if (!config_path.empty()) {
                // Flags given on the command line win over the file.
                RunConfig flags = rc;
                apply_config_file(config_path, rc);
                if (!flags.input.empty()) rc.input = flags.input;
                if (o_out->count()) rc.out = flags.out;
                if (o_seed->count()) rc.seed = flags.seed;
                if (o_k->count()) rc.k = flags.k;
                if (o_gen->count()) rc.generations = flags.generations;
                if (o_pop->count()) rc.pop = flags.pop;
                if (o_views->count()) rc.views = flags.views;
                if (o_res->count()) rc.resolution = flags.resolution;
                if (o_rres->count()) rc.report_resolution = flags.report_resolution;
                if (o_policy->count()) rc.policy = flags.policy;
                if (o_mode->count()) rc.view_mode = flags.view_mode;
                if (o_workers->count()) rc.workers = flags.workers;
                if (o_wm->count()) rc.watermark = flags.watermark;
                if (o_embed->count()) rc.embed_bits = flags.embed_bits;
                if (o_delta->count()) rc.embed_delta = flags.embed_delta;
            }
            return cmd_attack(rc);
        }
        if (*rnd) {
            if (render_res < 1) throw UsageError("render: resolution must be positive");
            const SplatModel m = load_ply(model_path);
            write_png(render(m, parse_camera(camera_text, m, render_res)), png_out);
            return 0;
        }
        if (*met) return cmd_metrics(original, attacked, watermark, want_bar, metrics_res, metrics_out);
        if (*lem) return cmd_lemma(variances, samples, lemma_seed, lemma_out);
        if (*syn) {
            save_ply(make_synthetic_scene(synth_count, synth_seed), synth_out);
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "gsattack: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "gsattack: " << e.what() << "\n";
        return kExitFailure;
    }
    return 0;
}
