#include "gsattack/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gsattack/error.hpp"

namespace gsattack {

void EvolutionConfig::validate() const {
    if (n_pop < 2) throw ArgumentError("population size must be at least 2");
    if (!(eta_c >= 0.0)) throw ArgumentError("eta_c must be non-negative");
    if (!(eta_m >= 0.0)) throw ArgumentError("eta_m must be non-negative");
    if (!(p_m >= 0.0 && p_m <= 1.0)) throw ArgumentError("p_m must lie in [0, 1]");
    if (!(epsilon >= 0.0)) throw ArgumentError("epsilon must be non-negative");
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw ArgumentError("lambda must lie in [0, 1]");
    if (n_views < 1) throw ArgumentError("at least one view is required");
}

nlohmann::json EvolutionConfig::to_json() const {
    return {{"n_pop", n_pop}, {"generations", generations}, {"eta_c", eta_c}, {"p_m", p_m},     {"eta_m", eta_m},
            {"epsilon", epsilon}, {"lambda", lambda},       {"n_views", n_views}, {"seed", seed}};
}

Genome::Genome(std::size_t kernel_count, double epsilon)
    : kernel_count_(kernel_count), epsilon_(epsilon), genes_(4 * kernel_count, 0.0) {
    std::fill(genes_.begin(), genes_.begin() + static_cast<std::ptrdiff_t>(kernel_count), 1.0);
}

Genome Genome::random_initial(std::size_t kernel_count, double epsilon, Rng& rng) {
    Genome g(kernel_count, epsilon);
    for (std::size_t j = 0; j < kernel_count; ++j) g.genes_[j] = rng.uniform(0.5, 1.0);
    for (std::size_t j = kernel_count; j < g.genes_.size(); ++j) g.genes_[j] = rng.uniform(-0.1 * epsilon, 0.1 * epsilon);
    return g;
}

std::size_t Genome::kept_count() const {
    std::size_t kept = 0;
    for (std::size_t j = 0; j < kernel_count_; ++j) kept += keeps(j) ? 1 : 0;
    return kept;
}

bool Genome::within_bounds() const {
    for (std::size_t j = 0; j < genes_.size(); ++j) {
        if (!(genes_[j] >= lower(j) && genes_[j] <= upper(j))) return false;
    }
    return true;
}

void Genome::clip() {
    for (std::size_t j = 0; j < genes_.size(); ++j) genes_[j] = std::clamp(genes_[j], lower(j), upper(j));
}

SubModel decode_genome(const Genome& genome, const SubModel& sub) {
    if (sub.indices.size() != sub.model.size()) throw ArgumentError("decode_genome: sub-model index list is inconsistent");
    SubModel out;
    out.model = decode_genome(genome, sub.model);
    out.indices.reserve(out.model.size());
    for (std::size_t j = 0; j < sub.model.size(); ++j) {
        if (genome.keeps(j)) out.indices.push_back(sub.indices[j]);
    }
    return out;
}

SplatModel decode_genome(const Genome& genome, const SplatModel& sub) {
    if (genome.kernel_count() != sub.size() || genome.size() != 4 * sub.size()) {
        throw ArgumentError("decode_genome: genome sized for " + std::to_string(genome.kernel_count()) +
                            " kernels, model has " + std::to_string(sub.size()));
    }
    SplatModel out;
    out.source_tag = sub.source_tag;
    out.kernels.reserve(sub.size());
    const auto color = genome.color_genes();
    for (std::size_t j = 0; j < sub.size(); ++j) {
        if (!genome.keeps(j)) continue;
        GaussianKernel k = sub.kernels[j];
        for (int c = 0; c < 3; ++c) {
            k.dc_color[c] = static_cast<float>(static_cast<double>(k.dc_color[c]) + color[3 * j + c]);
        }
        out.kernels.push_back(k);
    }
    return out;
}

double sbx_spread_factor(double u, double eta_c) {
    const double exponent = 1.0 / (eta_c + 1.0);
    if (u < 0.5) return std::pow(2.0 * u, exponent);
    return std::pow(1.0 / (2.0 * (1.0 - u)), exponent);
}

std::pair<double, double> sbx_pair(double a, double b, double beta) {
    const double sum = a + b;
    const double spread = beta * std::abs(b - a);
    return {0.5 * (sum - spread), 0.5 * (sum + spread)};
}

std::pair<Genome, Genome> sbx_crossover(const Genome& a, const Genome& b, double eta_c, Rng& rng) {
    if (a.size() != b.size() || a.kernel_count() != b.kernel_count() || a.epsilon() != b.epsilon()) {
        throw ArgumentError("sbx_crossover: parents have different lengths or bounds");
    }
    Genome c1 = a;
    Genome c2 = b;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double beta = sbx_spread_factor(rng.uniform(), eta_c);
        const auto [lo, hi] = sbx_pair(a.genes()[j], b.genes()[j], beta);
        c1.genes()[j] = lo;
        c2.genes()[j] = hi;
    }
    c1.clip();
    c2.clip();
    return {std::move(c1), std::move(c2)};
}

double polynomial_delta(double u, double eta_m) {
    const double exponent = 1.0 / (eta_m + 1.0);
    if (u < 0.5) return std::pow(2.0 * u, exponent) - 1.0;
    return 1.0 - std::pow(2.0 * (1.0 - u), exponent);
}

Genome polynomial_mutation(const Genome& genome, double p_m, double eta_m, Rng& rng) {
    Genome out = genome;
    auto& genes = out.genes();
    for (std::size_t j = 0; j < genes.size(); ++j) {
        if (!(rng.uniform() < p_m)) continue;
        const double delta = polynomial_delta(rng.uniform(), eta_m);
        genes[j] = std::clamp(genes[j] + delta * (out.upper(j) - out.lower(j)), out.lower(j), out.upper(j));
    }
    return out;
}

bool dominates(const ObjectivePair& a, const ObjectivePair& b) {
    return a.f1 <= b.f1 && a.f2 <= b.f2 && (a.f1 < b.f1 || a.f2 < b.f2);
}

std::vector<std::vector<std::size_t>> fast_nondominated_sort(std::span<const ObjectivePair> points) {
    const std::size_t n = points.size();
    std::vector<std::vector<std::size_t>> dominated(n);
    std::vector<std::size_t> domination_count(n, 0);
    std::vector<std::vector<std::size_t>> fronts;
    std::vector<std::size_t> current;
    for (std::size_t p = 0; p < n; ++p) {
        for (std::size_t q = 0; q < n; ++q) {
            if (p == q) continue;
            if (dominates(points[p], points[q])) {
                dominated[p].push_back(q);
            } else if (dominates(points[q], points[p])) {
                ++domination_count[p];
            }
        }
        if (domination_count[p] == 0) current.push_back(p);
    }
    while (!current.empty()) {
        std::vector<std::size_t> next;
        for (auto p : current) {
            for (auto q : dominated[p]) {
                if (--domination_count[q] == 0) next.push_back(q);
            }
        }
        std::sort(next.begin(), next.end());
        fronts.push_back(std::move(current));
        current = std::move(next);
    }
    return fronts;
}

namespace {

std::vector<ObjectivePair> fitness_of(const std::vector<Individual>& members) {
    std::vector<ObjectivePair> points;
    points.reserve(members.size());
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (!members[i].fitness) throw StateError("member " + std::to_string(i) + " has not been evaluated");
        points.push_back(*members[i].fitness);
    }
    return points;
}

}  // namespace

std::vector<std::vector<std::size_t>> fast_nondominated_sort(const std::vector<Individual>& members) {
    const auto points = fitness_of(members);
    return fast_nondominated_sort(std::span<const ObjectivePair>(points));
}

std::vector<double> crowding_distance(std::span<const ObjectivePair> front) {
    const std::size_t n = front.size();
    std::vector<double> density(n, 0.0);
    if (n <= 2) {
        std::fill(density.begin(), density.end(), kBoundaryDensity);
        return density;
    }
    std::vector<std::size_t> order(n);
    for (int objective = 0; objective < 2; ++objective) {
        auto value = [&](std::size_t i) { return objective == 0 ? front[i].f1 : front[i].f2; };
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return value(a) < value(b); });
        const double range = value(order.back()) - value(order.front());
        if (!(range > 0.0)) continue;
        density[order.front()] = kBoundaryDensity;
        density[order.back()] = kBoundaryDensity;
        for (std::size_t r = 1; r + 1 < n; ++r) {
            density[order[r]] += (value(order[r + 1]) - value(order[r - 1])) / range;
        }
    }
    return density;
}

std::vector<double> crowding_distance(const std::vector<Individual>& front) {
    const auto points = fitness_of(front);
    return crowding_distance(std::span<const ObjectivePair>(points));
}

void rank_population(Population& population) {
    const auto points = fitness_of(population.members);
    const auto fronts = fast_nondominated_sort(std::span<const ObjectivePair>(points));
    for (std::size_t f = 0; f < fronts.size(); ++f) {
        std::vector<ObjectivePair> front_points;
        for (auto i : fronts[f]) front_points.push_back(points[i]);
        const auto density = crowding_distance(std::span<const ObjectivePair>(front_points));
        for (std::size_t r = 0; r < fronts[f].size(); ++r) {
            auto& m = population.members[fronts[f][r]];
            m.rank = f;
            m.density = density[r];
        }
    }
}

Population environmental_selection(const Population& parents, const Population& offspring, std::size_t n_pop) {
    Population pool;
    pool.generation = parents.generation;
    pool.members.reserve(parents.size() + offspring.size());
    pool.members.insert(pool.members.end(), parents.members.begin(), parents.members.end());
    pool.members.insert(pool.members.end(), offspring.members.begin(), offspring.members.end());

    const auto points = fitness_of(pool.members);
    const auto fronts = fast_nondominated_sort(std::span<const ObjectivePair>(points));

    Population next;
    next.generation = parents.generation + 1;
    next.members.reserve(n_pop);
    for (std::size_t f = 0; f < fronts.size() && next.size() < n_pop; ++f) {
        const auto& front = fronts[f];
        std::vector<ObjectivePair> front_points;
        for (auto i : front) front_points.push_back(points[i]);
        const auto density = crowding_distance(std::span<const ObjectivePair>(front_points));

        std::vector<std::size_t> order(front.size());
        std::iota(order.begin(), order.end(), 0);
        if (next.size() + front.size() > n_pop) {
            std::stable_sort(order.begin(), order.end(),
                             [&](std::size_t a, std::size_t b) { return density[a] > density[b]; });
            order.resize(n_pop - next.size());
        }
        for (auto r : order) {
            Individual member = pool.members[front[r]];
            member.rank = f;
            member.density = density[r];
            next.members.push_back(std::move(member));
        }
    }
    return next;
}

std::size_t binary_tournament(const Population& population, Rng& rng) {
    if (population.members.empty()) throw ArgumentError("binary_tournament: empty population");
    const std::size_t a = rng.index(population.size());
    const std::size_t b = rng.index(population.size());
    const auto& ma = population.members[a];
    const auto& mb = population.members[b];
    if (!ma.rank || !mb.rank || !ma.density || !mb.density) throw StateError("binary_tournament: population is not ranked");
    if (*ma.rank != *mb.rank) return *ma.rank < *mb.rank ? a : b;
    if (*ma.density != *mb.density) return *ma.density > *mb.density ? a : b;
    return std::min(a, b);
}

}  // namespace gsattack
