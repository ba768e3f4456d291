#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <mutex>
#include <optional>
#include <unordered_map>
#include <vector>

#include "chromosome.hpp"
#include "classifier.hpp"
#include "common.hpp"
#include "data.hpp"

namespace moeliga {

struct ObjectiveConfig {
    int n_tests = 3;
    double validation_fraction = 0.30;
    /// Sigmoid slope for the compactness objective; nullopt uses the raw
    /// cardinality ratio.
    std::optional<double> lambda = 0.5;
    double gamma = -0.5;
    /// Instances sampled for the separability objective; 0 means
    /// min(64, training-set size).
    std::size_t n_neighbor_samples = 0;
    bool use_objective3 = true;
    std::uint64_t base_seed = 0;
    int max_depth = 100;

    void validate() const {
        if (n_tests < 1) throw ConfigError("n_tests", "must be >= 1");
        if (!(validation_fraction > 0.0 && validation_fraction < 1.0))
            throw ConfigError("validation_fraction", "must be in (0, 1)");
        if (lambda && !(*lambda > 0.0) ) throw ConfigError("lambda", "must be > 0 (or null for the raw ratio)");
        if (!std::isfinite(gamma)) throw ConfigError("gamma", "must be finite");
        if (max_depth < 0) throw ConfigError("max_depth", "must be >= 0");
    }
};

/// Objective values of one chromosome; every component is maximized.
struct ObjectiveVector {
    double uar = 0.0;
    double cr_mapped = 0.0;
    double m_dist = 0.0;
    std::size_t n_selected = 0;

    friend bool operator==(const ObjectiveVector&, const ObjectiveVector&) = default;
};

/// Selects which objectives take part in dominance comparisons.
struct ObjectiveMask {
    bool uar = true;
    bool cardinality = true;
    bool distance = true;

    std::size_t size() const noexcept { return std::size_t{uar} + cardinality + distance; }
};

inline std::vector<double> active_values(const ObjectiveVector& v, const ObjectiveMask& mask) {
    std::vector<double> out;
    out.reserve(3);
    if (mask.uar) out.push_back(v.uar);
    if (mask.cardinality) out.push_back(v.cr_mapped);
    if (mask.distance) out.push_back(v.m_dist);
    return out;
}

inline ObjectiveMask mask_for(const ObjectiveConfig& cfg) { return {true, true, cfg.use_objective3}; }

inline double cardinality_ratio(std::size_t n_features, std::size_t n_selected) {
    if (n_features == 0) throw Error("cardinality ratio of an empty chromosome");
    return static_cast<double>(n_features - n_selected) / static_cast<double>(n_features);
}

inline double cardinality_ratio(const Chromosome& x) { return cardinality_ratio(x.size(), x.count()); }

inline double sigmoid_map(double cr, double lambda, double gamma) {
    return 1.0 / (1.0 + std::exp(-lambda * (cr + gamma)));
}

inline double objective2_sigmoid(const Chromosome& x, double lambda, double gamma) {
    return sigmoid_map(cardinality_ratio(x), lambda, gamma);
}

/// Compactness objective for a subset size: sigmoid-mapped ratio when lambda
/// is set, raw ratio otherwise.
inline double compactness(std::size_t n_features, std::size_t n_selected, std::optional<double> lambda, double gamma) {
    const double cr = cardinality_ratio(n_features, n_selected);
    return lambda ? sigmoid_map(cr, *lambda, gamma) : cr;
}

/// Seed of the i-th validation split for a given objective base seed.
inline std::uint64_t split_seed(std::uint64_t base_seed, int test_index) {
    return derive_seed(base_seed, 0x5f11u, static_cast<std::uint64_t>(test_index));
}

inline std::uint64_t neighbor_seed(std::uint64_t base_seed) { return derive_seed(base_seed, 0xd157u); }

/// UAR of a classifier trained on `train` and scored on `validation`, both
/// restricted to the chromosome's features.
inline double holdout_uar(const Chromosome& x, const Dataset& train, const Dataset& validation,
                          const ClassifierFactory& factory, std::uint64_t seed = 0) {
    auto clf = factory();
    clf->fit(project(train, x), seed);
    return uar(clf->predict(project(validation, x)), validation.labels(), validation.class_count());
}

/// Objective I: mean validation UAR over n_tests stratified random splits.
inline double objective1_uar(const Chromosome& x, const Dataset& d, const ObjectiveConfig& cfg,
                             const ClassifierFactory& factory) {
    if (x.none()) throw DataError("chromosome selects no features");
    double sum = 0.0;
    for (int t = 0; t < cfg.n_tests; ++t) {
        const auto split = stratified_split(d, {cfg.validation_fraction, split_seed(cfg.base_seed, t)});
        sum += holdout_uar(x, split.train, split.validation, factory, split_seed(cfg.base_seed, t));
    }
    return sum / static_cast<double>(cfg.n_tests);
}

inline double objective1_uar(const Chromosome& x, const Dataset& d, const ObjectiveConfig& cfg) {
    return objective1_uar(x, d, cfg, decision_tree_factory(cfg.max_depth));
}

/// Separability score over the given query rows (positions in `train`):
/// mean of (L1 to nearest miss - L1 to nearest hit) / subset size. Distance
/// ties go to the lowest row.
inline double objective3_distance_at(const Chromosome& x, const Dataset& train, const std::vector<std::size_t>& queries) {
    if (queries.empty()) throw ConfigError("n_neighbor_samples", "must be >= 1");
    const Dataset view = project(train, x);
    const std::size_t n = view.sample_count();
    const std::size_t k = view.feature_count();
    if (n < 2) throw DataError("separability needs at least two instances");

    std::vector<double> rows(n * k);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t f = 0; f < k; ++f) rows[i * k + f] = view.value(i, f);
    const auto labels = view.labels();

    double total = 0.0;
    for (std::size_t q : queries) {
        if (q >= n) throw DataError("query row out of range");
        double hit = std::numeric_limits<double>::infinity();
        double miss = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (j == q) continue;
            double dist = 0.0;
            for (std::size_t f = 0; f < k; ++f) dist += std::abs(rows[q * k + f] - rows[j * k + f]);
            if (labels[j] == labels[q]) hit = std::min(hit, dist);
            else miss = std::min(miss, dist);
        }
        if (!std::isfinite(hit)) throw DataError("sampled instance has no other member of its class");
        if (!std::isfinite(miss)) throw DataError("separability needs at least two classes");
        total += (miss - hit) / static_cast<double>(k);
    }
    return total / static_cast<double>(queries.size());
}

/// Objective III: separability over `n_samples` rows drawn uniformly with
/// replacement.
inline double objective3_distance(const Chromosome& x, const Dataset& train, std::size_t n_samples, std::uint64_t seed) {
    if (n_samples == 0) throw ConfigError("n_neighbor_samples", "must be >= 1");
    if (train.sample_count() < 2) throw DataError("separability needs at least two instances");
    Rng rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, train.sample_count() - 1);
    std::vector<std::size_t> queries(n_samples);
    for (auto& q : queries) q = pick(rng);
    return objective3_distance_at(x, train, queries);
}

/// All objectives for one chromosome. The separability term uses the
/// training partition of the first validation split.
inline ObjectiveVector evaluate_objectives(const Chromosome& x, const Dataset& d, const ObjectiveConfig& cfg,
                                           const ClassifierFactory& factory) {
    if (x.none()) throw DataError("chromosome selects no features");
    ObjectiveVector v;
    v.n_selected = x.count();
    v.uar = objective1_uar(x, d, cfg, factory);
    v.cr_mapped = compactness(x.size(), v.n_selected, cfg.lambda, cfg.gamma);
    if (cfg.use_objective3) {
        const auto split = stratified_split(d, {cfg.validation_fraction, split_seed(cfg.base_seed, 0)});
        const std::size_t n_samples =
            cfg.n_neighbor_samples ? cfg.n_neighbor_samples : std::min<std::size_t>(64, split.train.sample_count());
        v.m_dist = objective3_distance(x, split.train, n_samples, neighbor_seed(cfg.base_seed));
    }
    return v;
}

/// Memoizing batch evaluator. Objective values are a pure function of the
/// chromosome, so cached entries are exact and thread count never changes
/// results.
class Evaluator {
public:
    Evaluator(Dataset data, ObjectiveConfig cfg, std::size_t threads = 1, ClassifierFactory factory = {})
        : data_(std::move(data)), cfg_(cfg), threads_(std::max<std::size_t>(1, threads)),
          factory_(factory ? std::move(factory) : decision_tree_factory(cfg.max_depth)) {
        cfg_.validate();
    }

    const Dataset& data() const noexcept { return data_; }
    const ObjectiveConfig& config() const noexcept { return cfg_; }
    std::size_t threads() const noexcept { return threads_; }
    ObjectiveMask mask() const noexcept { return mask_for(cfg_); }

    ObjectiveVector evaluate(const Chromosome& x) { return evaluate_batch({x}).front(); }

    std::vector<ObjectiveVector> evaluate_batch(const std::vector<Chromosome>& batch) {
        requested_ += batch.size();
        std::vector<ObjectiveVector> out(batch.size());
        std::vector<std::size_t> missing;
        std::unordered_map<Chromosome, std::size_t, ChromosomeHash> first_seen;
        {
            std::lock_guard lock(mutex_);
            for (std::size_t i = 0; i < batch.size(); ++i) {
                if (auto it = cache_.find(batch[i]); it != cache_.end()) {
                    out[i] = it->second;
                } else if (first_seen.try_emplace(batch[i], i).second) {
                    missing.push_back(i);
                }
            }
        }
        std::vector<ObjectiveVector> fresh(missing.size());
        parallel_for(missing.size(), threads_, [&](std::size_t m) {
            fresh[m] = evaluate_objectives(batch[missing[m]], data_, cfg_, factory_);
        });
        std::lock_guard lock(mutex_);
        for (std::size_t m = 0; m < missing.size(); ++m) cache_.emplace(batch[missing[m]], fresh[m]);
        for (std::size_t i = 0; i < batch.size(); ++i)
            if (out[i].n_selected == 0) out[i] = cache_.at(batch[i]);
        computed_ += missing.size();
        return out;
    }

    /// Evaluations requested so far (cache hits included).
    std::size_t requested() const noexcept { return requested_; }
    /// Distinct chromosomes actually evaluated.
    std::size_t computed() const noexcept { return computed_; }

private:
    Dataset data_;
    ObjectiveConfig cfg_;
    std::size_t threads_;
    ClassifierFactory factory_;
    std::mutex mutex_;
    std::unordered_map<Chromosome, ObjectiveVector, ChromosomeHash> cache_;
    std::size_t requested_ = 0;
    std::size_t computed_ = 0;
};

}  // namespace moeliga
