#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gsattack/camera.hpp"
#include "gsattack/evolution.hpp"
#include "gsattack/grouping.hpp"
#include "gsattack/objectives.hpp"

namespace gsattack {

enum class SelectionPolicy { quality, attack, balanced, identity };

const char* to_string(SelectionPolicy policy);
SelectionPolicy parse_policy(const std::string& text);

struct GenerationStats {
    std::size_t generation = 0;
    double best_f1 = 0.0;
    double best_f2 = 0.0;
    double mean_f1 = 0.0;
    double mean_f2 = 0.0;
    std::size_t front_size = 0;
    // |F1(R_t)| <= n_pop implies F1(R_t) survived into P_{t+1}.
    bool elitism_held = true;
};

/// What one generation looked like, for observers in tests and tools.
struct GenerationSnapshot {
    std::size_t generation = 0;
    const Population* pool = nullptr;  // R_t = P_t followed by Q_t, evaluated
    const Population* survivors = nullptr;  // P_{t+1}
};

using GenerationObserver = std::function<void(const GenerationSnapshot&)>;

struct EvolutionResult {
    Population population;  // final, ranked
    std::vector<Individual> front;  // first front of `population`
    std::vector<GenerationStats> history;  // generation 0..T
};

/// Renders the candidate in every view and scores it against `references`.
ObjectivePair evaluate_candidate(const SplatModel& candidate, const ViewSet& views,
                                 const std::vector<ImageBuffer>& references, const FeatureExtractor& extractor,
                                 double lambda);

/// NSGA-II style evolution of prune/colour perturbations on one
/// sub-model. Fitness views are redrawn each generation and shared by
/// every member of that generation's pool; parents are re-scored with the
/// offspring. `stream` separates the random streams of sibling groups.
/// Individual evaluations use up to `threads` threads.
EvolutionResult evolve_submodel(const SplatModel& sub, const EvolutionConfig& cfg, const ViewSampling& sampling,
                                const FeatureExtractor& extractor, std::uint64_t stream, int threads = 1,
                                const GenerationObserver& observer = {});

/// Index into `front` of the chosen member. quality: min f1; attack: min
/// f2; balanced: min of min-max scaled f1 + f2. Ties go to the lower
/// index. Throws ArgumentError for an empty front or the identity policy.
std::size_t select_solution(const std::vector<Individual>& front, SelectionPolicy policy);

struct AttackOptions {
    std::size_t k = 10;
    SelectionPolicy policy = SelectionPolicy::balanced;
    ViewMode view_mode = ViewMode::sphere;
    int resolution = 128;  // fitness renders
    int report_resolution = 128;
    FeatureExtractorSpec extractor{};
    int workers = 1;
    // Called with the group index; may run on several threads at once.
    std::function<void(std::size_t, const GenerationSnapshot&)> observer;
};

struct GroupOutcome {
    std::vector<std::size_t> indices;  // original kernel indices of the group
    EvolutionResult evolution;
    std::size_t chosen = 0;  // into evolution.front; unused for identity
    Genome genome;
    std::size_t kept = 0;
};

struct Fidelity {
    double ssim = 1.0;  // mean over report views
    double mse = 0.0;  // mean over report views
    double psnr = 0.0;  // from the mean MSE; +inf when zero
};

/// SSIM / MSE / PSNR of `attacked` against `reference` over the four
/// report views of `reference`.
Fidelity measure_fidelity(const SplatModel& reference, const SplatModel& attacked, int resolution);

struct AttackResult {
    SplatModel model;
    ClusterAssignment assignment;
    std::vector<GroupOutcome> groups;
    Fidelity fidelity;
    std::uint64_t kmeans_seed = 0;
};

/// Cluster -> partition -> evolve every group -> pick one solution per
/// group -> decode -> merge. With zero generations, or the identity
/// policy, every group keeps its identity genome.
AttackResult run_attack(const SplatModel& model, const EvolutionConfig& cfg, const AttackOptions& options);

}  // namespace gsattack
