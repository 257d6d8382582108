#include "gsattack/report.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>

#include "gsattack/error.hpp"

namespace gsattack {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << std::setprecision(17);
    return out;
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

}  // namespace

void write_convergence_csv(const EvolutionResult& evolution, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "generation,best_f1,best_f2,mean_f1,mean_f2\n";
    for (const auto& s : evolution.history) {
        out << s.generation << ',' << s.best_f1 << ',' << s.best_f2 << ',' << s.mean_f1 << ',' << s.mean_f2 << '\n';
    }
}

void write_pareto_csv(const EvolutionResult& evolution, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "f1,f2\n";
    for (const auto& m : evolution.front) {
        if (!m.fitness) throw StateError("pareto export: front member without fitness");
        out << m.fitness->f1 << ',' << m.fitness->f2 << '\n';
    }
}

nlohmann::json attack_manifest(const AttackResult& result, const EvolutionConfig& cfg, const AttackOptions& options,
                               const std::string& input, const std::string& timestamp) {
    nlohmann::json j;
    j["tool"] = {{"name", "gsattack"}, {"version", kToolVersion}};
    j["timestamp"] = timestamp;
    j["input"] = input;
    j["config"] = cfg.to_json();
    j["options"] = {{"k", options.k},
                    {"policy", to_string(options.policy)},
                    {"view_mode", to_string(options.view_mode)},
                    {"resolution", options.resolution},
                    {"report_resolution", options.report_resolution},
                    {"workers", options.workers}};
    j["extractor"] = options.extractor.to_json();
    j["seeds"] = {{"master", cfg.seed}, {"kmeans", result.kmeans_seed}};
    j["kmeans"] = {{"iterations", result.assignment.iterations}, {"wcss", result.assignment.wcss}};

    nlohmann::json groups = nlohmann::json::array();
    for (std::size_t g = 0; g < result.groups.size(); ++g) {
        const auto& outcome = result.groups[g];
        nlohmann::json front = nlohmann::json::array();
        for (const auto& m : outcome.evolution.front) {
            if (m.fitness) front.push_back({m.fitness->f1, m.fitness->f2});
        }
        groups.push_back({{"group", g},
                          {"stream", g + 1},
                          {"kernels", outcome.indices.size()},
                          {"kept", outcome.kept},
                          {"chosen", outcome.evolution.front.empty() ? nlohmann::json(nullptr) : nlohmann::json(outcome.chosen)},
                          {"front", front}});
    }
    j["groups"] = groups;
    j["result"] = {{"kernels_in", result.assignment.labels.size()},
                   {"kernels_out", result.model.size()},
                   {"ssim", result.fidelity.ssim},
                   {"mse", result.fidelity.mse},
                   {"psnr", finite_or_null(result.fidelity.psnr)}};
    return j;
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << '\n';
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buf;
}

}  // namespace gsattack
