#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <iterator>
#include <numeric>
#include <vector>

#include "chromosome.hpp"
#include "common.hpp"
#include "objectives.hpp"

namespace moeliga {

struct EvaluatedIndividual {
    Chromosome chromosome;
    ObjectiveVector objectives;
    int rank = 0;
    double fitness = 0.0;
    double shared_fitness = 0.0;
    double normalized_fitness = 0.0;
};

using Population = std::vector<EvaluatedIndividual>;

/// Pareto dominance for maximized objectives: `a` is no worse everywhere and
/// strictly better somewhere.
template <typename RangeA, typename RangeB>
bool dominates(const RangeA& a, const RangeB& b) {
    auto ia = std::begin(a);
    auto ib = std::begin(b);
    bool strictly_better = false;
    for (; ia != std::end(a) && ib != std::end(b); ++ia, ++ib) {
        if (*ia < *ib) return false;
        if (*ia > *ib) strictly_better = true;
    }
    return strictly_better;
}

inline bool dominates(const ObjectiveVector& a, const ObjectiveVector& b, const ObjectiveMask& mask) {
    return dominates(active_values(a, mask), active_values(b, mask));
}

/// rank = 1 + number of points that dominate the point.
template <typename Point>
std::vector<int> dominance_ranks(const std::vector<Point>& points) {
    const std::size_t n = points.size();
    std::vector<int> ranks(n, 1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            if (dominates(points[i], points[j])) ++ranks[j];
            else if (dominates(points[j], points[i])) ++ranks[i];
        }
    return ranks;
}

inline void assign_ranks(Population& pop, const ObjectiveMask& mask) {
    std::vector<std::vector<double>> points;
    points.reserve(pop.size());
    for (const auto& ind : pop) points.push_back(active_values(ind.objectives, mask));
    const auto ranks = dominance_ranks(points);
    for (std::size_t i = 0; i < pop.size(); ++i) pop[i].rank = ranks[i];
}

/// Rank-based fitness: N - (individuals in better ranks) - (n_r - 1)/2.
inline std::vector<double> rank_fitness_values(const std::vector<int>& ranks) {
    const std::size_t n = ranks.size();
    if (n == 0) return {};
    const int max_rank = *std::max_element(ranks.begin(), ranks.end());
    std::vector<std::size_t> per_rank(static_cast<std::size_t>(max_rank) + 1, 0);
    for (int r : ranks) {
        if (r < 1) throw Error("ranks start at 1");
        ++per_rank[static_cast<std::size_t>(r)];
    }
    std::vector<double> better(per_rank.size(), 0.0);  // individuals strictly above rank k
    for (std::size_t k = 2; k < per_rank.size(); ++k) better[k] = better[k - 1] + static_cast<double>(per_rank[k - 1]);
    std::vector<double> fitness(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<std::size_t>(ranks[i]);
        fitness[i] = static_cast<double>(n) - better[r] - (static_cast<double>(per_rank[r]) - 1.0) / 2.0;
    }
    return fitness;
}

inline void rank_fitness(Population& pop) {
    std::vector<int> ranks;
    ranks.reserve(pop.size());
    for (const auto& ind : pop) ranks.push_back(ind.rank);
    const auto f = rank_fitness_values(ranks);
    for (std::size_t i = 0; i < pop.size(); ++i) pop[i].fitness = f[i];
}

enum class SharingSpace { Objective, Decision };

struct SharingConfig {
    double sigma = 0.0025;
    double alpha = 1.0;
    SharingSpace space = SharingSpace::Decision;

    void validate() const {
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma", "must be > 0");
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha", "must be > 0");
    }
};

/// Observed per-objective range over a generation, used to normalize
/// objective-space distances.
struct ObjectiveBounds {
    std::vector<double> lo;
    std::vector<double> hi;

    static ObjectiveBounds of(const std::vector<std::vector<double>>& points) {
        ObjectiveBounds b;
        if (points.empty()) return b;
        b.lo = points.front();
        b.hi = points.front();
        for (const auto& p : points)
            for (std::size_t j = 0; j < p.size(); ++j) {
                b.lo[j] = std::min(b.lo[j], p[j]);
                b.hi[j] = std::max(b.hi[j], p[j]);
            }
        return b;
    }
};

/// Euclidean distance between min-max normalized objective vectors.
/// Objectives with a degenerate range contribute nothing.
inline double objective_distance(const std::vector<double>& a, const std::vector<double>& b, const ObjectiveBounds& bounds) {
    double ss = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double range = bounds.hi[j] - bounds.lo[j];
        if (!(range > 0.0)) continue;
        const double d = (a[j] - b[j]) / range;
        ss += d * d;
    }
    return std::sqrt(ss);
}

/// Root mean squared bit difference, i.e. sqrt(hamming / length).
inline double decision_distance(const Chromosome& a, const Chromosome& b) {
    if (a.size() != b.size()) throw Error("decision distance needs equal chromosome lengths");
    if (a.empty()) return 0.0;
    return std::sqrt(static_cast<double>(a.hamming(b)) / static_cast<double>(a.size()));
}

struct Cluster {
    std::size_t centroid = 0;
    std::vector<std::size_t> members;
};

/// Leader clustering. Individuals are visited by descending fitness (ties by
/// index); each joins every existing cluster whose centroid lies closer than
/// sigma, and founds a new cluster when it joins none.
template <typename DistanceFn>
std::vector<Cluster> leader_clusters(const std::vector<double>& fitness, DistanceFn&& distance, double sigma) {
    std::vector<std::size_t> order(fitness.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness[a] > fitness[b]; });
    std::vector<Cluster> clusters;
    for (std::size_t i : order) {
        bool joined = false;
        for (auto& c : clusters) {
            if (distance(i, c.centroid) < sigma) {
                c.members.push_back(i);
                joined = true;
            }
        }
        if (!joined) clusters.push_back({i, {i}});
    }
    return clusters;
}

/// Lower bound on a single crowding factor so duplicates of a centroid keep a
/// strictly positive fitness.
inline constexpr double kMinSharingFactor = 1e-6;

/// Shared fitness by sequential multiplicative penalization: for each cluster
/// containing i (own cluster excepted), f' *= (d(i, centroid) / sigma)^alpha.
template <typename DistanceFn>
std::vector<double> shared_fitness_values(const std::vector<double>& fitness, const std::vector<Cluster>& clusters,
                                          DistanceFn&& distance, const SharingConfig& cfg) {
    std::vector<double> shared = fitness;
    for (const auto& c : clusters) {
        for (std::size_t i : c.members) {
            if (i == c.centroid) continue;
            const double factor = std::pow(distance(i, c.centroid) / cfg.sigma, cfg.alpha);
            shared[i] *= std::max(factor, kMinSharingFactor);
        }
    }
    return shared;
}

/// f'' = f * f' / (sum of f' over the same rank).
inline std::vector<double> normalized_fitness_values(const std::vector<int>& ranks, const std::vector<double>& fitness,
                                                     const std::vector<double>& shared) {
    const int max_rank = ranks.empty() ? 0 : *std::max_element(ranks.begin(), ranks.end());
    std::vector<double> rank_sum(static_cast<std::size_t>(max_rank) + 1, 0.0);
    for (std::size_t i = 0; i < ranks.size(); ++i) rank_sum[static_cast<std::size_t>(ranks[i])] += shared[i];
    std::vector<double> out(ranks.size());
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        const double total = rank_sum[static_cast<std::size_t>(ranks[i])];
        if (!(total > 0.0)) throw Error("shared fitness of a rank sums to zero");
        out[i] = fitness[i] * shared[i] / total;
    }
    return out;
}

namespace detail {

/// Distance between population members in the configured sharing space.
class SharingDistance {
public:
    SharingDistance(const Population& pop, const SharingConfig& cfg, const ObjectiveMask& mask)
        : pop_(pop), space_(cfg.space) {
        if (space_ == SharingSpace::Objective) {
            points_.reserve(pop.size());
            for (const auto& ind : pop) points_.push_back(active_values(ind.objectives, mask));
            bounds_ = ObjectiveBounds::of(points_);
        }
    }

    double operator()(std::size_t a, std::size_t b) const {
        if (space_ == SharingSpace::Objective) return objective_distance(points_[a], points_[b], bounds_);
        return decision_distance(pop_[a].chromosome, pop_[b].chromosome);
    }

private:
    const Population& pop_;
    SharingSpace space_;
    std::vector<std::vector<double>> points_;
    ObjectiveBounds bounds_;
};

inline std::vector<double> fitness_of(const Population& pop) {
    std::vector<double> f;
    f.reserve(pop.size());
    for (const auto& ind : pop) f.push_back(ind.fitness);
    return f;
}

}  // namespace detail

inline std::vector<Cluster> form_clusters(const Population& pop, const SharingConfig& cfg, const ObjectiveMask& mask) {
    return leader_clusters(detail::fitness_of(pop), detail::SharingDistance(pop, cfg, mask), cfg.sigma);
}

inline void shared_fitness(Population& pop, const std::vector<Cluster>& clusters, const SharingConfig& cfg,
                           const ObjectiveMask& mask) {
    const auto shared =
        shared_fitness_values(detail::fitness_of(pop), clusters, detail::SharingDistance(pop, cfg, mask), cfg);
    for (std::size_t i = 0; i < pop.size(); ++i) pop[i].shared_fitness = shared[i];
}

inline void normalize_fitness(Population& pop) {
    std::vector<int> ranks;
    std::vector<double> f, shared;
    for (const auto& ind : pop) {
        ranks.push_back(ind.rank);
        f.push_back(ind.fitness);
        shared.push_back(ind.shared_fitness);
    }
    const auto norm = normalized_fitness_values(ranks, f, shared);
    for (std::size_t i = 0; i < pop.size(); ++i) pop[i].normalized_fitness = norm[i];
}

/// Full fitness pipeline over evaluated objectives: ranks, rank fitness,
/// clustering, shared fitness, normalized fitness.
inline void assign_fitness(Population& pop, const SharingConfig& cfg, const ObjectiveMask& mask) {
    if (pop.empty()) return;
    assign_ranks(pop, mask);
    rank_fitness(pop);
    const auto clusters = form_clusters(pop, cfg, mask);
    shared_fitness(pop, clusters, cfg, mask);
    normalize_fitness(pop);
}

/// Members of `pop` that no other member dominates.
inline std::vector<std::size_t> nondominated_indices(const Population& pop, const ObjectiveMask& mask) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < pop.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < pop.size() && !dominated; ++j)
            dominated = j != i && dominates(pop[j].objectives, pop[i].objectives, mask);
        if (!dominated) out.push_back(i);
    }
    return out;
}

}  // namespace moeliga
