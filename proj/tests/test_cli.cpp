#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gsattack/ply.hpp"
#include "gsattack/scene.hpp"

namespace fs = std::filesystem;
using namespace gsattack;

namespace {

const fs::path kWork = fs::path(GSATTACK_TEST_WORKDIR) / "cli";

int run(const std::string& args, const std::string& capture = "") {
    std::string cmd = std::string(GSATTACK_BIN) + " " + args;
    cmd += capture.empty() ? " >/dev/null 2>&1" : " >" + (kWork / capture).string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::string p(const std::string& name) { return (kWork / name).string(); }

struct Workdir {
    Workdir() {
        fs::remove_all(kWork);
        fs::create_directories(kWork);
        save_ply(make_synthetic_scene(120, 3), kWork / "scene.ply");
        save_ply(SplatModel{}, kWork / "empty.ply");
    }
};

const Workdir& workdir() {
    static Workdir w;
    return w;
}

const std::string kSmall = " --k 2 --pop 4 --generations 2 --views 2 --resolution 24 --report-resolution 24";

}  // namespace

TEST_CASE("zero generations writes the input model back") {
    workdir();
    REQUIRE(run("attack " + p("scene.ply") + " --out " + p("t0") + " --generations 0 --k 3") == 0);
    // Only the source comment in the header may differ.
    CHECK(load_ply(p("t0/attacked.ply")).same_kernels(load_ply(p("scene.ply"))));
    for (int g = 0; g < 3; ++g)
        CHECK(slurp(p("t0/convergence_group" + std::to_string(g) + ".csv")) ==
              "generation,best_f1,best_f2,mean_f1,mean_f2\n");
    for (int v = 0; v < 4; ++v) {
        CHECK(fs::exists(p("t0/before_view" + std::to_string(v) + ".png")));
        CHECK(slurp(p("t0/before_view" + std::to_string(v) + ".png")) ==
              slurp(p("t0/after_view" + std::to_string(v) + ".png")));
    }
}

TEST_CASE("attack runs are reproducible") {
    workdir();
    REQUIRE(run("attack " + p("scene.ply") + " --out " + p("r1") + kSmall + " --seed 7") == 0);
    REQUIRE(run("attack " + p("scene.ply") + " --out " + p("r2") + kSmall + " --seed 7") == 0);
    CHECK(slurp(p("r1/attacked.ply")) == slurp(p("r2/attacked.ply")));
    for (const char* f : {"convergence_group0.csv", "convergence_group1.csv", "pareto_group0.csv"})
        CHECK(slurp(p(std::string("r1/") + f)) == slurp(p(std::string("r2/") + f)));
    auto m1 = nlohmann::json::parse(slurp(p("r1/manifest.json")));
    auto m2 = nlohmann::json::parse(slurp(p("r2/manifest.json")));
    CHECK(m1.at("seeds").at("master") == 7);
    CHECK(m1.at("tool").at("version").is_string());
    m1.erase("timestamp");
    m2.erase("timestamp");
    CHECK(m1 == m2);
}

TEST_CASE("config file with flag override") {
    workdir();
    std::ofstream(p("cfg.json")) << R"({"input": ")" << p("scene.ply") << R"(", "out": ")" << p("cfgrun")
                                 << R"(", "k": 3, "generations": 0, "seed": 11})";
    REQUIRE(run("attack --config " + p("cfg.json") + " --k 2") == 0);
    const auto m = nlohmann::json::parse(slurp(p("cfgrun/manifest.json")));
    CHECK(m.at("groups").size() == 2);
    CHECK(m.at("seeds").at("master") == 11);
    std::ofstream(p("bad.json")) << R"({"kk": 3})";
    CHECK(run("attack " + p("scene.ply") + " --config " + p("bad.json")) == 2);
}

TEST_CASE("embedded watermark is reported") {
    workdir();
    REQUIRE(run("attack " + p("scene.ply") + " --out " + p("wm") + kSmall + " --embed 1011") == 0);
    const auto m = nlohmann::json::parse(slurp(p("wm/manifest.json")));
    CHECK(m.at("watermark").at("pre_bar") == 1.0);
    CHECK(m.at("watermark").contains("post_bar"));
    REQUIRE(run("metrics " + p("wm/watermarked.ply") + " " + p("wm/watermarked.ply") + " --watermark " +
                p("wm/watermark.json") + " --out " + p("wm/same.json")) == 0);
    const auto r = nlohmann::json::parse(slurp(p("wm/same.json")));
    CHECK(r.at("bar") == 1.0);
    CHECK(r.at("ssim") == 1.0);
    CHECK(r.at("mse") == 0.0);
    CHECK(r.at("psnr").is_null());
}

TEST_CASE("render") {
    workdir();
    REQUIRE(run("render " + p("scene.ply") + " --camera 30,20 --resolution 32 --out " + p("a.png")) == 0);
    REQUIRE(run("render " + p("scene.ply") + " --camera 30,20 --resolution 32 --out " + p("b.png")) == 0);
    CHECK(slurp(p("a.png")) == slurp(p("b.png")));
    REQUIRE(run("render " + p("empty.ply") + " --camera 0,0,3,40 --resolution 8 --out " + p("e.png")) == 0);
    CHECK(fs::file_size(p("e.png")) > 0);
    CHECK(run("render " + p("scene.ply") + " --camera 30 --out " + p("c.png")) == 2);
    CHECK(run("render " + p("scene.ply") + " --camera a,b --out " + p("c.png")) == 2);
    CHECK(run("render " + p("missing.ply") + " --camera 0,0 --out " + p("c.png")) == 1);
}

TEST_CASE("usage errors") {
    workdir();
    CHECK(run("metrics " + p("scene.ply") + " " + p("scene.ply") + " --bar") == 2);
    CHECK(run("lemma --variances 1,-4") == 2);
    CHECK(run("attack " + p("scene.ply") + " --policy greedy --out " + p("x")) == 2);
    CHECK(run("attack " + p("scene.ply") + " --pop 1 --out " + p("x")) == 2);
    CHECK(run("") == 2);
    CHECK(run("bogus") == 2);
}

TEST_CASE("lemma prints a zero bound at 1 / (2 pi e)") {
    workdir();
    std::ostringstream v;
    v.precision(17);
    v << 1.0 / (2.0 * std::numbers::pi * std::numbers::e);
    REQUIRE(run("lemma --samples 100000 --variances " + v.str() + " --out " + p("lemma.csv")) == 0);
    std::istringstream csv(slurp(p("lemma.csv")));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "variance,family,entropy_estimate,bound,margin");
    int rows = 0;
    while (std::getline(csv, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        REQUIRE(cells.size() == 5);
        CHECK(std::stod(cells[3]) == 0.0);
        ++rows;
    }
    CHECK(rows == 3);
}
