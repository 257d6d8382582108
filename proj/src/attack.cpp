#include "gsattack/attack.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>

#if defined(_OPENMP)
#include <omp.h>
#endif

#include "gsattack/error.hpp"
#include "gsattack/render.hpp"
#include "gsattack/watermark.hpp"

namespace gsattack {

namespace {

constexpr std::uint64_t kKmeansStream = 0x6b6d65616e73ULL;
constexpr std::uint64_t kViewStream = 0x76696577ULL;

std::vector<ImageBuffer> render_views(const SplatModel& model, const ViewSet& views) {
    std::vector<ImageBuffer> images;
    images.reserve(views.cameras.size());
    for (const auto& cam : views.cameras) images.push_back(render(model, cam));
    return images;
}

void evaluate_members(Population& population, const SplatModel& sub, const ViewSet& views,
                      const std::vector<ImageBuffer>& references, const FeatureExtractor& extractor, double lambda,
                      int threads) {
    const auto n = static_cast<std::ptrdiff_t>(population.size());
    std::vector<std::exception_ptr> errors(population.size());
    #pragma omp parallel for schedule(dynamic, 1) num_threads(std::max(1, threads)) if (threads > 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            auto& member = population.members[i];
            member.fitness = evaluate_candidate(decode_genome(member.genome, sub), views, references, extractor, lambda);
            member.rank.reset();
            member.density.reset();
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

GenerationStats summarize(const Population& population, std::size_t generation) {
    GenerationStats s;
    s.generation = generation;
    s.best_f1 = std::numeric_limits<double>::infinity();
    s.best_f2 = std::numeric_limits<double>::infinity();
    for (const auto& m : population.members) {
        s.best_f1 = std::min(s.best_f1, m.fitness->f1);
        s.best_f2 = std::min(s.best_f2, m.fitness->f2);
        s.mean_f1 += m.fitness->f1;
        s.mean_f2 += m.fitness->f2;
        if (m.rank && *m.rank == 0) ++s.front_size;
    }
    s.mean_f1 /= static_cast<double>(population.size());
    s.mean_f2 /= static_cast<double>(population.size());
    return s;
}

std::vector<Individual> first_front(const Population& population) {
    std::vector<Individual> front;
    for (const auto& m : population.members) {
        if (m.rank && *m.rank == 0) front.push_back(m);
    }
    return front;
}

// Multiset containment of the pool's first-front fitness in the survivors.
bool first_front_survived(const Population& pool, const Population& survivors, std::size_t n_pop) {
    const auto fronts = fast_nondominated_sort(pool.members);
    if (fronts.empty() || fronts.front().size() > n_pop) return true;
    std::map<std::pair<double, double>, int> remaining;
    for (const auto& m : survivors.members) ++remaining[{m.fitness->f1, m.fitness->f2}];
    for (auto i : fronts.front()) {
        const auto key = std::make_pair(pool.members[i].fitness->f1, pool.members[i].fitness->f2);
        auto it = remaining.find(key);
        if (it == remaining.end() || it->second == 0) return false;
        --it->second;
    }
    return true;
}

}  // namespace

const char* to_string(SelectionPolicy policy) {
    switch (policy) {
        case SelectionPolicy::quality: return "quality";
        case SelectionPolicy::attack: return "attack";
        case SelectionPolicy::balanced: return "balanced";
        case SelectionPolicy::identity: return "identity";
    }
    return "?";
}

SelectionPolicy parse_policy(const std::string& text) {
    if (text == "quality") return SelectionPolicy::quality;
    if (text == "attack") return SelectionPolicy::attack;
    if (text == "balanced") return SelectionPolicy::balanced;
    if (text == "identity") return SelectionPolicy::identity;
    throw ArgumentError("unknown policy '" + text + "' (expected quality, attack or balanced)");
}

ObjectivePair evaluate_candidate(const SplatModel& candidate, const ViewSet& views,
                                 const std::vector<ImageBuffer>& references, const FeatureExtractor& extractor,
                                 double lambda) {
    const auto images = render_views(candidate, views);
    return {f1_visual_loss(images, references, lambda), f2_watermark_destruction(images, extractor)};
}

EvolutionResult evolve_submodel(const SplatModel& sub, const EvolutionConfig& cfg, const ViewSampling& sampling,
                                const FeatureExtractor& extractor, std::uint64_t stream, int threads,
                                const GenerationObserver& observer) {
    if (sub.empty()) throw ArgumentError("evolve_submodel: empty sub-model");
    cfg.validate();

    const std::uint64_t task_seed = Rng::derive(cfg.seed, stream);
    Rng rng(task_seed);
    auto views_for = [&](std::size_t generation) {
        return sample_views(sampling, cfg.n_views, Rng::derive(task_seed ^ kViewStream, generation));
    };

    EvolutionResult result;
    Population population;
    population.generation = 0;
    for (std::size_t i = 0; i < cfg.n_pop; ++i) {
        population.members.push_back({Genome::random_initial(sub.size(), cfg.epsilon, rng), {}, {}, {}});
    }
    {
        const auto views = views_for(0);
        const auto references = render_views(sub, views);
        evaluate_members(population, sub, views, references, extractor, cfg.lambda, threads);
        rank_population(population);
        result.history.push_back(summarize(population, 0));
    }

    for (std::size_t t = 1; t <= cfg.generations; ++t) {
        Population offspring;
        offspring.generation = t;
        while (offspring.size() < cfg.n_pop) {
            const auto& pa = population.members[binary_tournament(population, rng)].genome;
            const auto& pb = population.members[binary_tournament(population, rng)].genome;
            auto [c1, c2] = sbx_crossover(pa, pb, cfg.eta_c, rng);
            offspring.members.push_back({polynomial_mutation(c1, cfg.p_m, cfg.eta_m, rng), {}, {}, {}});
            if (offspring.size() < cfg.n_pop) {
                offspring.members.push_back({polynomial_mutation(c2, cfg.p_m, cfg.eta_m, rng), {}, {}, {}});
            }
        }

        // Parents are re-scored under this generation's views.
        const auto views = views_for(t);
        const auto references = render_views(sub, views);
        evaluate_members(population, sub, views, references, extractor, cfg.lambda, threads);
        evaluate_members(offspring, sub, views, references, extractor, cfg.lambda, threads);

        Population next = environmental_selection(population, offspring, cfg.n_pop);
        next.generation = t;

        Population pool;
        pool.generation = t;
        pool.members = population.members;
        pool.members.insert(pool.members.end(), offspring.members.begin(), offspring.members.end());

        auto stats = summarize(next, t);
        stats.elitism_held = first_front_survived(pool, next, cfg.n_pop);
        result.history.push_back(stats);
        if (observer) observer(GenerationSnapshot{t, &pool, &next});
        population = std::move(next);
    }

    result.front = first_front(population);
    result.population = std::move(population);
    return result;
}

std::size_t select_solution(const std::vector<Individual>& front, SelectionPolicy policy) {
    if (front.empty()) throw ArgumentError("select_solution: empty front");
    if (policy == SelectionPolicy::identity) throw ArgumentError("select_solution: identity policy does not pick from a front");
    for (const auto& m : front) {
        if (!m.fitness) throw StateError("select_solution: unevaluated member");
    }
    double lo1 = std::numeric_limits<double>::infinity(), hi1 = -lo1, lo2 = lo1, hi2 = -lo1;
    for (const auto& m : front) {
        lo1 = std::min(lo1, m.fitness->f1);
        hi1 = std::max(hi1, m.fitness->f1);
        lo2 = std::min(lo2, m.fitness->f2);
        hi2 = std::max(hi2, m.fitness->f2);
    }
    auto score = [&](const ObjectivePair& f) {
        switch (policy) {
            case SelectionPolicy::quality: return f.f1;
            case SelectionPolicy::attack: return f.f2;
            default: {
                const double s1 = hi1 > lo1 ? (f.f1 - lo1) / (hi1 - lo1) : 0.0;
                const double s2 = hi2 > lo2 ? (f.f2 - lo2) / (hi2 - lo2) : 0.0;
                return s1 + s2;
            }
        }
    };
    std::size_t best = 0;
    double best_score = score(*front[0].fitness);
    for (std::size_t i = 1; i < front.size(); ++i) {
        const double s = score(*front[i].fitness);
        if (s < best_score) {
            best_score = s;
            best = i;
        }
    }
    return best;
}

Fidelity measure_fidelity(const SplatModel& reference, const SplatModel& attacked, int resolution) {
    const auto cams = report_views(reference, resolution);
    Fidelity f;
    f.ssim = 0.0;
    for (const auto& cam : cams) {
        const auto a = render(reference, cam);
        const auto b = render(attacked, cam);
        f.ssim += ssim(a, b);
        f.mse += psnr_mse(a, b).mse;
    }
    f.ssim /= static_cast<double>(cams.size());
    f.mse /= static_cast<double>(cams.size());
    f.psnr = f.mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(1.0 / f.mse);
    return f;
}

AttackResult run_attack(const SplatModel& model, const EvolutionConfig& cfg, const AttackOptions& options) {
    if (model.empty()) throw ArgumentError("run_attack: empty model");
    if (options.k < 1 || options.k > model.size()) throw ArgumentError("run_attack: k must lie in [1, model size]");
    cfg.validate();

    AttackResult result;
    result.kmeans_seed = Rng::derive(cfg.seed, kKmeansStream);
    result.assignment = kmeans(kernel_positions(model), options.k, result.kmeans_seed);
    const auto parts = partition(model, result.assignment);

    const FeatureExtractor extractor(options.extractor);
    ViewSampling sampling = ViewSampling::fit(model, options.view_mode, options.resolution);
    const bool identity = cfg.generations == 0 || options.policy == SelectionPolicy::identity;

    result.groups.resize(parts.size());
    const int workers = std::max(1, options.workers);
    const int outer = std::max(1, std::min<int>(workers, static_cast<int>(parts.size())));
    const int inner = std::max(1, workers / outer);
#if defined(_OPENMP)
    omp_set_max_active_levels(2);
#endif
    std::vector<std::exception_ptr> errors(parts.size());
    const auto n_parts = static_cast<std::ptrdiff_t>(parts.size());
    #pragma omp parallel for schedule(dynamic, 1) num_threads(outer) if (outer > 1)
    for (std::ptrdiff_t i = 0; i < n_parts; ++i) {
        try {
            auto& group = result.groups[i];
            const auto& part = parts[i];
            group.indices = part.indices;
            if (part.model.empty()) {
                group.genome = Genome(0, cfg.epsilon);
                continue;
            }
            if (identity) {
                group.genome = Genome(part.model.size(), cfg.epsilon);
            } else {
                GenerationObserver watch;
                if (options.observer) {
                    watch = [&options, i](const GenerationSnapshot& s) { options.observer(static_cast<std::size_t>(i), s); };
                }
                group.evolution = evolve_submodel(part.model, cfg, sampling, extractor,
                                                  static_cast<std::uint64_t>(i) + 1, inner, watch);
                group.chosen = select_solution(group.evolution.front, options.policy);
                group.genome = group.evolution.front[group.chosen].genome;
            }
            group.kept = group.genome.kept_count();
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::vector<SubModel> decoded;
    decoded.reserve(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i) decoded.push_back(decode_genome(result.groups[i].genome, parts[i]));
    result.model = merge(decoded);
    result.model.source_tag = model.source_tag;
    result.fidelity = measure_fidelity(model, result.model, options.report_resolution);
    return result;
}

}  // namespace gsattack
