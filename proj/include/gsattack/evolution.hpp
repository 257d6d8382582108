#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gsattack/grouping.hpp"
#include "gsattack/objectives.hpp"
#include "gsattack/random.hpp"

namespace gsattack {

struct EvolutionConfig {
    std::size_t n_pop = 50;
    std::size_t generations = 200;
    double eta_c = 1.0;
    double p_m = 0.1;
    double eta_m = 20.0;
    double epsilon = 50.0 / 255.0;
    double lambda = 0.85;
    std::size_t n_views = 8;
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
};

inline constexpr double kMaskThreshold = 0.5;

/// Decision vector [mask genes | colour genes]. Mask genes live in [0, 1]
/// and keep a kernel when >= 0.5; colour genes live in [-epsilon, epsilon]
/// and are added to the RGB DC colour, three per kernel.
class Genome {
public:
    Genome() = default;

    /// Identity genome: every kernel kept, no colour shift.
    Genome(std::size_t kernel_count, double epsilon);

    /// Mask genes uniform in [0.5, 1], colour genes uniform in
    /// [-epsilon / 10, epsilon / 10].
    static Genome random_initial(std::size_t kernel_count, double epsilon, Rng& rng);

    std::size_t kernel_count() const { return kernel_count_; }
    double epsilon() const { return epsilon_; }
    std::size_t size() const { return genes_.size(); }

    std::vector<double>& genes() { return genes_; }
    const std::vector<double>& genes() const { return genes_; }
    std::span<const double> mask_genes() const { return {genes_.data(), kernel_count_}; }
    std::span<const double> color_genes() const { return {genes_.data() + kernel_count_, 3 * kernel_count_}; }

    double lower(std::size_t j) const { return j < kernel_count_ ? 0.0 : -epsilon_; }
    double upper(std::size_t j) const { return j < kernel_count_ ? 1.0 : epsilon_; }

    bool keeps(std::size_t kernel) const { return genes_[kernel] >= kMaskThreshold; }
    std::size_t kept_count() const;

    bool within_bounds() const;
    void clip();

    bool operator==(const Genome&) const = default;

private:
    std::size_t kernel_count_ = 0;
    double epsilon_ = 0.0;
    std::vector<double> genes_;
};

struct Individual {
    Genome genome;
    std::optional<ObjectivePair> fitness;
    std::optional<std::size_t> rank;  // 0 = first front
    std::optional<double> density;
};

struct Population {
    std::vector<Individual> members;
    std::size_t generation = 0;

    std::size_t size() const { return members.size(); }
};

/// Drops kernels whose mask gene is below 0.5 and adds the colour genes to
/// the survivors. Other kernel fields and the original indices are kept.
/// Throws ArgumentError if the genome is sized for a different model.
SubModel decode_genome(const Genome& genome, const SubModel& sub);
SplatModel decode_genome(const Genome& genome, const SplatModel& sub);

/// SBX spread factor for a uniform draw u in [0, 1).
double sbx_spread_factor(double u, double eta_c);

/// Unclipped children 0.5 [(a + b) -/+ beta |b - a|].
std::pair<double, double> sbx_pair(double a, double b, double beta);

/// Per-gene SBX with an independent spread factor for every gene. The
/// first child takes the minus form, the second the plus form.
/// Children are clipped to the gene bounds.
std::pair<Genome, Genome> sbx_crossover(const Genome& a, const Genome& b, double eta_c, Rng& rng);

/// Polynomial-mutation perturbation in [-1, 1] for a uniform draw u.
double polynomial_delta(double u, double eta_m);

/// Each gene is perturbed with probability p_m by delta * (ub - lb), then
/// clipped.
Genome polynomial_mutation(const Genome& genome, double p_m, double eta_m, Rng& rng);

/// a dominates b: no worse in both objectives, strictly better in one.
bool dominates(const ObjectivePair& a, const ObjectivePair& b);

/// Fronts of member indices, each front in ascending index order.
std::vector<std::vector<std::size_t>> fast_nondominated_sort(std::span<const ObjectivePair> points);

/// Throws StateError if any member lacks fitness.
std::vector<std::vector<std::size_t>> fast_nondominated_sort(const std::vector<Individual>& members);

inline constexpr double kBoundaryDensity = std::numeric_limits<double>::infinity();

/// Crowding density per member of one front. Extremes along each
/// objective receive kBoundaryDensity; an objective with zero range on
/// the front contributes nothing.
std::vector<double> crowding_distance(std::span<const ObjectivePair> front);
std::vector<double> crowding_distance(const std::vector<Individual>& front);

/// Elitist survival over parents followed by offspring. Whole fronts are
/// admitted while they fit; the last one is truncated by descending
/// density, ties by pool position. Survivors carry rank and density.
Population environmental_selection(const Population& parents, const Population& offspring, std::size_t n_pop);

/// Index of the better of two uniformly drawn members: lower rank, then
/// higher density, then lower index.
std::size_t binary_tournament(const Population& population, Rng& rng);

/// Assigns rank and density to every member in place.
void rank_population(Population& population);

}  // namespace gsattack
