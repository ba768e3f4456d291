#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "chromosome.hpp"
#include "common.hpp"
#include "data.hpp"
#include "objectives.hpp"
#include "pareto.hpp"

namespace moeliga {

enum class ReplacementStrategy { Parent, Complete, Selection };

inline std::string to_string(ReplacementStrategy s) {
    switch (s) {
        case ReplacementStrategy::Parent: return "parent";
        case ReplacementStrategy::Complete: return "complete";
        case ReplacementStrategy::Selection: return "selection";
    }
    return "parent";
}

inline ReplacementStrategy replacement_from_string(const std::string& s) {
    if (s == "parent" || s == "PR") return ReplacementStrategy::Parent;
    if (s == "complete" || s == "CR") return ReplacementStrategy::Complete;
    if (s == "selection" || s == "SR") return ReplacementStrategy::Selection;
    throw ConfigError("replacement_strategy", "unknown strategy '" + s + "' (parent, complete, selection)");
}

/// One segment of the staggered initial population.
struct InitTier {
    double population_fraction;
    double active_fraction;
};

struct GAConfig {
    std::size_t pop_size = 90;
    std::size_t generations = 300;
    double crossover_rate = 0.9;
    double mutation_rate = 0.15;
    std::size_t elite_count = 10;
    std::size_t generational_gap = 10;
    std::vector<InitTier> tiers{{0.55, 0.03}, {0.30, 0.15}, {0.15, 0.35}};
    std::size_t sub_pop_size = 50;
    std::size_t sub_generations = 70;
    std::size_t n_subordinate = 3;
    std::size_t sub_every = 5;
    ReplacementStrategy replacement = ReplacementStrategy::Parent;
    /// When set, subordinate generations count against `generations`.
    bool subordinate_consumes_budget = false;
    std::uint64_t seed = 0;

    void validate() const {
        if (pop_size < 2) throw ConfigError("pop_size", "must be >= 2");
        if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) throw ConfigError("crossover_rate", "must be in [0, 1]");
        if (!(mutation_rate >= 0.0 && mutation_rate <= 1.0)) throw ConfigError("mutation_rate", "must be in [0, 1]");
        if (elite_count + generational_gap > pop_size)
            throw ConfigError("elite_count", "elite_count + generational_gap must not exceed pop_size");
        if (tiers.empty()) throw ConfigError("tiers", "at least one initialization tier is required");
        double total = 0.0;
        for (const auto& t : tiers) {
            if (!(t.population_fraction >= 0.0) || !(t.active_fraction >= 0.0 && t.active_fraction <= 1.0))
                throw ConfigError("tiers", "fractions must be in [0, 1]");
            total += t.population_fraction;
        }
        if (std::abs(total - 1.0) > 1e-9) throw ConfigError("tiers", "population fractions must sum to 1");
        if (n_subordinate > 0) {
            if (sub_pop_size < 2) throw ConfigError("sub_pop_size", "must be >= 2");
            if (elite_count + generational_gap > sub_pop_size)
                throw ConfigError("sub_pop_size", "must hold elite_count + generational_gap individuals");
            if (sub_every == 0) throw ConfigError("sub_every", "must be >= 1");
            if (n_subordinate > pop_size) throw ConfigError("n_subordinate", "must not exceed pop_size");
        }
    }
};

/// Per-generation statistics.
struct TraceRecord {
    std::size_t generation = 0;
    double best_uar = 0.0;
    double median_uar = 0.0;
    std::size_t best_n_selected = 0;  // fewest features on the population front
    std::size_t front_size = 0;
    std::size_t evals_cumulative = 0;
    std::size_t subordinate_generations_cumulative = 0;
    double wall_seconds = 0.0;
};

struct RunTrace {
    std::vector<TraceRecord> records;
};

// ---------------------------------------------------------------------------
// Variation and selection operators

/// Staggered initialization: tier sizes are floor(fraction * N) with the
/// remainder going to the last tier; each chromosome of a tier gets
/// round(active_fraction * n_features) distinct active bits (at least one).
inline std::vector<Chromosome> staggered_init(std::size_t n_features, std::size_t pop_size,
                                              const std::vector<InitTier>& tiers, Rng& rng) {
    if (n_features == 0) throw DataError("no features to select from");
    std::vector<std::size_t> sizes;
    std::size_t assigned = 0;
    for (std::size_t t = 0; t + 1 < tiers.size(); ++t) {
        const auto s = static_cast<std::size_t>(std::floor(tiers[t].population_fraction * static_cast<double>(pop_size)));
        sizes.push_back(s);
        assigned += s;
    }
    sizes.push_back(pop_size - std::min(assigned, pop_size));

    std::vector<Chromosome> pop;
    pop.reserve(pop_size);
    std::vector<std::size_t> positions(n_features);
    for (std::size_t t = 0; t < tiers.size(); ++t) {
        const auto active = std::clamp<std::size_t>(
            static_cast<std::size_t>(std::llround(tiers[t].active_fraction * static_cast<double>(n_features))), 1,
            n_features);
        for (std::size_t k = 0; k < sizes[t]; ++k) {
            std::iota(positions.begin(), positions.end(), std::size_t{0});
            // Partial Fisher-Yates: the first `active` slots are a uniform sample.
            for (std::size_t i = 0; i < active; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, n_features - 1);
                std::swap(positions[i], positions[pick(rng)]);
            }
            Chromosome c(n_features);
            for (std::size_t i = 0; i < active; ++i) c.set(positions[i]);
            pop.push_back(std::move(c));
        }
    }
    return pop;
}

inline std::vector<Chromosome> staggered_init(std::size_t n_features, const GAConfig& cfg, Rng& rng) {
    return staggered_init(n_features, cfg.pop_size, cfg.tiers, rng);
}

/// k independent fitness-proportional draws (with replacement).
inline std::vector<std::size_t> roulette_select(const std::vector<double>& weights, std::size_t k, Rng& rng) {
    if (k == 0) return {};
    if (weights.empty()) throw Error("roulette selection over an empty population");
    std::vector<double> cumulative(weights.size());
    double total = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) throw Error("roulette selection needs positive fitness");
        total += weights[i];
        cumulative[i] = total;
    }
    std::uniform_real_distribution<double> spin(0.0, total);
    std::vector<std::size_t> out(k);
    for (auto& o : out) {
        const double r = spin(rng);
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
        o = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), weights.size() - 1);
    }
    return out;
}

inline std::vector<double> normalized_fitness_of(const Population& pop) {
    std::vector<double> w;
    w.reserve(pop.size());
    for (const auto& ind : pop) w.push_back(ind.normalized_fitness);
    return w;
}

inline std::vector<std::size_t> roulette_select(const Population& pop, std::size_t k, Rng& rng) {
    return roulette_select(normalized_fitness_of(pop), k, rng);
}

/// k fitness-proportional draws without replacement.
inline std::vector<std::size_t> roulette_select_distinct(std::vector<double> weights, std::size_t k, Rng& rng) {
    if (k > weights.size()) throw Error("cannot draw more distinct individuals than exist");
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t n = 0; n < k; ++n) {
        double total = 0.0;
        for (double w : weights) total += w;
        std::uniform_real_distribution<double> spin(0.0, total);
        const double r = spin(rng);
        double acc = 0.0;
        std::size_t chosen = weights.size();
        for (std::size_t i = 0; i < weights.size(); ++i) {
            if (weights[i] <= 0.0) continue;
            acc += weights[i];
            chosen = i;
            if (r < acc) break;
        }
        out.push_back(chosen);
        weights[chosen] = 0.0;
    }
    return out;
}

/// Single-point crossover applied with probability `rate`; the cut is
/// uniform in [1, N-1]. Children are repaired to keep one active bit.
inline std::pair<Chromosome, Chromosome> crossover(const Chromosome& a, const Chromosome& b, double rate, Rng& rng) {
    if (a.size() != b.size()) throw Error("crossover needs equal chromosome lengths");
    std::pair<Chromosome, Chromosome> children{a, b};
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (a.size() >= 2 && coin(rng) < rate) {
        std::uniform_int_distribution<std::size_t> cut_dist(1, a.size() - 1);
        const std::size_t cut = cut_dist(rng);
        for (std::size_t i = cut; i < a.size(); ++i) {
            children.first.set(i, b.test(i));
            children.second.set(i, a.test(i));
        }
    }
    repair(children.first, rng);
    repair(children.second, rng);
    return children;
}

/// With probability `rate` the chromosome is mutated: every bit flips
/// independently with probability 1/N. Repaired afterwards.
inline Chromosome mutate(Chromosome x, double rate, Rng& rng) {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (!x.empty() && coin(rng) < rate) {
        const double p = 1.0 / static_cast<double>(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            if (coin(rng) < p) x.flip(i);
    }
    repair(x, rng);
    return x;
}

/// Indices of `pop` ordered by descending normalized fitness, ties by index.
inline std::vector<std::size_t> order_by_normalized_fitness(const Population& pop) {
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return pop[a].normalized_fitness > pop[b].normalized_fitness;
    });
    return order;
}

/// Elitist replacement: the `elite` best of `old` by normalized fitness,
/// `gap` roulette picks from `old`, then offspring fill the remaining slots.
inline Population elitist_replace(const Population& old, const Population& offspring, std::size_t pop_size,
                                  std::size_t elite, std::size_t gap, Rng& rng) {
    if (elite + gap > pop_size) throw ConfigError("elite_count", "elite + gap exceeds the population size");
    const std::size_t n_off = pop_size - elite - gap;
    if (offspring.size() < n_off) throw Error("not enough offspring to refill the population");
    if (elite > old.size()) throw Error("population smaller than the elite");
    Population next;
    next.reserve(pop_size);
    const auto order = order_by_normalized_fitness(old);
    for (std::size_t i = 0; i < elite; ++i) next.push_back(old[order[i]]);
    for (std::size_t i : roulette_select(old, gap, rng)) next.push_back(old[i]);
    for (std::size_t i = 0; i < n_off; ++i) next.push_back(offspring[i]);
    return next;
}

inline Population elitist_replace(const Population& old, const Population& offspring, const GAConfig& cfg, Rng& rng) {
    return elitist_replace(old, offspring, cfg.pop_size, cfg.elite_count, cfg.generational_gap, rng);
}

// ---------------------------------------------------------------------------
// Subordinate populations

/// Maps a reduced-space chromosome back to full length: bit i of `sub`
/// stands for the i-th active feature of `tmpl`.
inline Chromosome decode(const Chromosome& sub, const Chromosome& tmpl) {
    const auto active = tmpl.active_indices();
    if (sub.size() != active.size()) throw Error("subordinate chromosome does not match its template");
    Chromosome full(tmpl.size());
    for (std::size_t i = 0; i < active.size(); ++i)
        if (sub.test(i)) full.set(active[i]);
    return full;
}

/// Random subordinate population over the template's active features. Each
/// bit is on with probability 1/2; member 0 is the template itself (all ones).
inline std::vector<Chromosome> spawn_subordinate(const Chromosome& tmpl, std::size_t sub_size, Rng& rng) {
    const std::size_t n = tmpl.count();
    if (n == 0) throw DataError("template selects no features");
    std::vector<Chromosome> pop;
    pop.reserve(sub_size);
    if (sub_size == 0) return pop;
    pop.emplace_back(n, true);
    std::bernoulli_distribution coin(0.5);
    while (pop.size() < sub_size) {
        Chromosome c(n);
        for (std::size_t i = 0; i < n; ++i) c.set(i, coin(rng));
        repair(c, rng);
        pop.push_back(std::move(c));
    }
    return pop;
}

/// R-hat-1 style score of validation UAR and raw cardinality ratio.
inline double ideal_point_score(double uar_value, double cr) {
    return 1.0 - std::sqrt((1.0 - uar_value) * (1.0 - uar_value) + (1.0 - cr) * (1.0 - cr));
}

/// Index of the best individual by ideal_point_score; ties go to fewer
/// features, then the lexicographically smaller bitmask.
inline std::size_t best_by_ideal_point(const Population& pop) {
    if (pop.empty()) throw Error("empty population");
    std::size_t best = 0;
    double best_score = -1e300;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        const auto& ind = pop[i];
        const double s = ideal_point_score(ind.objectives.uar, cardinality_ratio(ind.chromosome));
        const auto& b = pop[best];
        if (i == 0 || s > best_score ||
            (s == best_score && (ind.objectives.n_selected < b.objectives.n_selected ||
                                 (ind.objectives.n_selected == b.objectives.n_selected && ind.chromosome < b.chromosome)))) {
            best = i;
            best_score = s;
        }
    }
    return best;
}

struct SubordinateResult {
    EvaluatedIndividual best;      // decoded to full length
    Population final_population;   // decoded to full length
    std::size_t generations = 0;
};

namespace detail {

struct LoopShape {
    std::size_t pop_size;
    double crossover_rate;
    double mutation_rate;
    std::size_t elite;
    std::size_t gap;
};

using BatchEvaluator = std::function<std::vector<ObjectiveVector>(const std::vector<Chromosome>&)>;

inline Population evaluate_into(const std::vector<Chromosome>& chromosomes, const BatchEvaluator& eval) {
    const auto objectives = eval(chromosomes);
    Population pop(chromosomes.size());
    for (std::size_t i = 0; i < chromosomes.size(); ++i) {
        pop[i].chromosome = chromosomes[i];
        pop[i].objectives = objectives[i];
    }
    return pop;
}

/// select -> crossover -> mutate -> replace -> evaluate.
inline Population next_generation(const Population& pop, const LoopShape& shape, const BatchEvaluator& eval,
                                  const SharingConfig& sharing, const ObjectiveMask& mask, Rng& rng) {
    const std::size_t n_off = shape.pop_size - shape.elite - shape.gap;
    const auto parents = roulette_select(pop, n_off + (n_off % 2), rng);
    std::vector<Chromosome> children;
    children.reserve(parents.size());
    for (std::size_t i = 0; i + 1 < parents.size(); i += 2) {
        auto [c1, c2] = crossover(pop[parents[i]].chromosome, pop[parents[i + 1]].chromosome, shape.crossover_rate, rng);
        children.push_back(mutate(std::move(c1), shape.mutation_rate, rng));
        children.push_back(mutate(std::move(c2), shape.mutation_rate, rng));
    }
    children.resize(n_off);
    const auto offspring = evaluate_into(children, eval);
    auto next = elitist_replace(pop, offspring, shape.pop_size, shape.elite, shape.gap, rng);
    assign_fitness(next, sharing, mask);
    return next;
}

}  // namespace detail

/// Evolves a subordinate population in the template's reduced space using the
/// main loop's operators, then decodes the final population.
inline SubordinateResult evolve_subordinate(const Chromosome& tmpl, Evaluator& evaluator, const GAConfig& cfg,
                                            const SharingConfig& sharing, Rng& rng) {
    const ObjectiveMask mask = evaluator.mask();
    const detail::BatchEvaluator eval = [&](const std::vector<Chromosome>& reduced) {
        std::vector<Chromosome> full;
        full.reserve(reduced.size());
        for (const auto& r : reduced) full.push_back(decode(r, tmpl));
        return evaluator.evaluate_batch(full);
    };
    const detail::LoopShape shape{cfg.sub_pop_size, cfg.crossover_rate, cfg.mutation_rate, cfg.elite_count,
                                  cfg.generational_gap};

    auto pop = detail::evaluate_into(spawn_subordinate(tmpl, cfg.sub_pop_size, rng), eval);
    assign_fitness(pop, sharing, mask);
    for (std::size_t g = 0; g < cfg.sub_generations; ++g) pop = detail::next_generation(pop, shape, eval, sharing, mask, rng);

    SubordinateResult result;
    result.generations = cfg.sub_generations;
    result.final_population = pop;
    for (auto& ind : result.final_population) ind.chromosome = decode(ind.chromosome, tmpl);
    result.best = result.final_population[best_by_ideal_point(result.final_population)];
    return result;
}

/// Picks the parents for local improvement: distinct bit patterns ordered by
/// normalized fitness (desc), fewer features, then index.
inline std::vector<std::size_t> select_local_parents(const Population& pop, std::size_t count) {
    std::vector<std::size_t> order(pop.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (pop[a].normalized_fitness != pop[b].normalized_fitness)
            return pop[a].normalized_fitness > pop[b].normalized_fitness;
        return pop[a].objectives.n_selected < pop[b].objectives.n_selected;
    });
    std::vector<std::size_t> out;
    std::unordered_set<Chromosome, ChromosomeHash> seen;
    for (std::size_t i : order) {
        if (out.size() == count) break;
        if (seen.insert(pop[i].chromosome).second) out.push_back(i);
    }
    return out;
}

/// True when `candidate` improves accuracy or feature count without
/// degrading the other.
inline bool improves_parent(const ObjectiveVector& candidate, const ObjectiveVector& parent) {
    const bool no_worse = candidate.uar >= parent.uar && candidate.n_selected <= parent.n_selected;
    const bool better = candidate.uar > parent.uar || candidate.n_selected < parent.n_selected;
    return no_worse && better;
}

/// Merges subordinate results into the main population. Fitness of the
/// returned population is recomputed.
inline Population apply_replacement(const Population& main, const std::vector<std::size_t>& parents,
                                    const std::vector<SubordinateResult>& results, ReplacementStrategy strategy,
                                    const SharingConfig& sharing, const ObjectiveMask& mask, Rng& rng) {
    if (parents.size() != results.size()) throw Error("one subordinate result per parent is required");
    Population next;
    if (strategy == ReplacementStrategy::Parent) {
        next = main;
        for (std::size_t k = 0; k < parents.size(); ++k) {
            if (improves_parent(results[k].best.objectives, main[parents[k]].objectives))
                next[parents[k]] = results[k].best;
        }
    } else {
        Population pool = main;
        for (const auto& r : results) pool.insert(pool.end(), r.final_population.begin(), r.final_population.end());
        assign_fitness(pool, sharing, mask);
        if (strategy == ReplacementStrategy::Complete) {
            const auto order = order_by_normalized_fitness(pool);
            for (std::size_t i = 0; i < main.size(); ++i) next.push_back(pool[order[i]]);
        } else {
            for (std::size_t i : roulette_select_distinct(normalized_fitness_of(pool), main.size(), rng))
                next.push_back(pool[i]);
        }
    }
    assign_fitness(next, sharing, mask);
    return next;
}

// ---------------------------------------------------------------------------
// Archive and engine

/// All-time non-dominated set, one entry per distinct bit pattern.
class ParetoArchive {
public:
    explicit ParetoArchive(ObjectiveMask mask = {}) : mask_(mask) {}

    /// Returns true when the candidate entered the archive.
    bool offer(const EvaluatedIndividual& candidate) {
        for (const auto& m : members_) {
            if (m.chromosome == candidate.chromosome) return false;
            if (dominates(m.objectives, candidate.objectives, mask_)) return false;
        }
        std::erase_if(members_, [&](const EvaluatedIndividual& m) { return dominates(candidate.objectives, m.objectives, mask_); });
        members_.push_back(candidate);
        return true;
    }

    void offer_all(const Population& pop) {
        for (const auto& ind : pop) offer(ind);
    }

    /// Members sorted by feature count, then bitmask.
    Population sorted_members() const {
        Population out = members_;
        std::sort(out.begin(), out.end(), [](const EvaluatedIndividual& a, const EvaluatedIndividual& b) {
            if (a.objectives.n_selected != b.objectives.n_selected) return a.objectives.n_selected < b.objectives.n_selected;
            return a.chromosome < b.chromosome;
        });
        return out;
    }

    const Population& members() const noexcept { return members_; }
    std::size_t size() const noexcept { return members_.size(); }

private:
    ObjectiveMask mask_;
    Population members_;
};

struct RunResult {
    Population final_population;
    Population population_front;  // rank-1 members of the final population
    Population archive;           // all-time non-dominated solutions
    RunTrace trace;
    std::size_t generations_run = 0;
    std::size_t subordinate_generations = 0;
};

/// Seed of the subordinate run for the k-th improved parent at generation g.
inline std::uint64_t subordinate_seed(std::uint64_t seed, std::size_t generation, std::size_t k) {
    return derive_seed(seed, 0x5ab0u, generation, k);
}

/// Main loop: staggered init, then per generation select / vary / replace /
/// evaluate, with local improvement of the best individuals every
/// `sub_every` generations.
inline RunResult run(Evaluator& evaluator, const GAConfig& cfg, const SharingConfig& sharing) {
    cfg.validate();
    sharing.validate();
    const auto start = std::chrono::steady_clock::now();
    const ObjectiveMask mask = evaluator.mask();
    const std::size_t n_features = evaluator.data().feature_count();
    Rng rng(derive_seed(cfg.seed, 0x9a1u));

    const detail::BatchEvaluator eval = [&](const std::vector<Chromosome>& batch) { return evaluator.evaluate_batch(batch); };
    const detail::LoopShape shape{cfg.pop_size, cfg.crossover_rate, cfg.mutation_rate, cfg.elite_count,
                                  cfg.generational_gap};

    auto pop = detail::evaluate_into(staggered_init(n_features, cfg, rng), eval);
    assign_fitness(pop, sharing, mask);
    ParetoArchive archive(mask);
    archive.offer_all(pop);

    RunResult result;
    std::size_t sub_generations = 0;
    std::size_t g = 0;
    while (g < cfg.generations) {
        if (cfg.subordinate_consumes_budget && g + sub_generations >= cfg.generations) break;
        ++g;
        pop = detail::next_generation(pop, shape, eval, sharing, mask, rng);
        archive.offer_all(pop);

        if (cfg.n_subordinate > 0 && g % cfg.sub_every == 0) {
            const auto parents = select_local_parents(pop, cfg.n_subordinate);
            std::vector<SubordinateResult> results;
            results.reserve(parents.size());
            for (std::size_t k = 0; k < parents.size(); ++k) {
                Rng sub_rng(subordinate_seed(cfg.seed, g, k));
                results.push_back(evolve_subordinate(pop[parents[k]].chromosome, evaluator, cfg, sharing, sub_rng));
                archive.offer_all(results.back().final_population);
                sub_generations += results.back().generations;
            }
            pop = apply_replacement(pop, parents, results, cfg.replacement, sharing, mask, rng);
        }

        TraceRecord rec;
        rec.generation = g;
        std::vector<double> uars;
        for (const auto& ind : pop) uars.push_back(ind.objectives.uar);
        rec.best_uar = *std::max_element(uars.begin(), uars.end());
        rec.median_uar = median(uars);
        rec.best_n_selected = n_features;
        for (const auto& ind : pop) {
            if (ind.rank != 1) continue;
            ++rec.front_size;
            rec.best_n_selected = std::min(rec.best_n_selected, ind.objectives.n_selected);
        }
        rec.evals_cumulative = evaluator.requested();
        rec.subordinate_generations_cumulative = sub_generations;
        rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.trace.records.push_back(rec);
    }

    result.generations_run = g;
    result.subordinate_generations = sub_generations;
    for (const auto& ind : pop)
        if (ind.rank == 1) result.population_front.push_back(ind);
    result.final_population = std::move(pop);
    result.archive = archive.sorted_members();
    return result;
}

inline RunResult run(const Dataset& data, const GAConfig& ga, const ObjectiveConfig& objectives,
                     const SharingConfig& sharing, std::size_t threads = 1) {
    ga.validate();
    Evaluator evaluator(data, objectives, threads);
    return run(evaluator, ga, sharing);
}

}  // namespace moeliga
