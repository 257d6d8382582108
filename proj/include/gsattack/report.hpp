#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "gsattack/attack.hpp"

namespace gsattack {

inline constexpr const char* kToolVersion = "0.1.0";

/// generation,best_f1,best_f2,mean_f1,mean_f2. An unevolved group writes
/// the header only.
void write_convergence_csv(const EvolutionResult& evolution, const std::filesystem::path& path);

/// f1,f2 per first-front member.
void write_pareto_csv(const EvolutionResult& evolution, const std::filesystem::path& path);

/// Everything needed to rerun an attack. `timestamp` is the only field
/// that differs between identical runs.
nlohmann::json attack_manifest(const AttackResult& result, const EvolutionConfig& cfg, const AttackOptions& options,
                               const std::string& input, const std::string& timestamp);

/// Pretty-printed with a trailing newline.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);

/// UTC, second resolution.
std::string utc_timestamp();

}  // namespace gsattack
