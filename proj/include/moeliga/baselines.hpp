#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

#include "chromosome.hpp"
#include "classifier.hpp"
#include "common.hpp"
#include "data.hpp"
#include "objectives.hpp"

namespace moeliga {

// ---------------------------------------------------------------------------
// Planted-feature synthetic data

struct SyntheticSpec {
    std::size_t n_samples = 200;
    std::size_t n_features = 20;
    std::size_t n_informative = 3;
    std::size_t n_classes = 2;
    double noise_level = 0.1;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_features == 0) throw ConfigError("n_features", "must be >= 1");
        if (n_informative > n_features) throw ConfigError("n_informative", "must not exceed n_features");
        if (n_classes < 2) throw ConfigError("n_classes", "must be >= 2");
        if (n_samples < 2 * n_classes) throw ConfigError("n_samples", "need at least two samples per class");
        // Class means are one unit apart.
        if (!(noise_level >= 0.0) || 2.0 * noise_level > 1.0) throw ConfigError("noise_level", "must be in [0, 0.5]");
    }
};

struct SyntheticData {
    Dataset data;
    std::vector<std::size_t> informative;  // ascending
};

/// Balanced classes (sample i has class i mod C). Informative features are
/// N(class, noise_level^2); the rest are class-independent N(0, 1). The
/// informative positions are drawn from the seed.
inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::vector<std::size_t> positions(spec.n_features);
    std::iota(positions.begin(), positions.end(), std::size_t{0});
    std::shuffle(positions.begin(), positions.end(), rng);
    std::vector<std::size_t> informative(positions.begin(), positions.begin() + static_cast<std::ptrdiff_t>(spec.n_informative));
    std::sort(informative.begin(), informative.end());
    std::vector<bool> is_informative(spec.n_features, false);
    for (std::size_t j : informative) is_informative[j] = true;

    std::normal_distribution<double> standard(0.0, 1.0);
    std::vector<double> values(spec.n_samples * spec.n_features);
    std::vector<int> labels(spec.n_samples);
    for (std::size_t i = 0; i < spec.n_samples; ++i) {
        const auto cls = static_cast<int>(i % spec.n_classes);
        labels[i] = cls;
        for (std::size_t j = 0; j < spec.n_features; ++j) {
            const double z = standard(rng);
            values[i * spec.n_features + j] = is_informative[j] ? static_cast<double>(cls) + spec.noise_level * z : z;
        }
    }
    return {Dataset::from_flat(spec.n_samples, spec.n_features, std::move(values), std::move(labels)),
            std::move(informative)};
}

// ---------------------------------------------------------------------------
// Mutual-information ranking

/// Equal-frequency bin of every sample. Equal values share a bin (the bin of
/// their first sorted occurrence), so the binning depends only on ranks.
inline std::vector<int> equal_frequency_bins(const std::vector<double>& values, int bins) {
    if (bins < 2) throw ConfigError("bins", "must be >= 2");
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<int> out(n, 0);
    std::size_t first = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (k > 0 && values[order[k]] != values[order[k - 1]]) first = k;
        out[order[k]] = static_cast<int>(first * static_cast<std::size_t>(bins) / n);
    }
    return out;
}

/// Plug-in mutual information (nats) between two discrete variables.
inline double mutual_information(const std::vector<int>& x, const std::vector<int>& y) {
    if (x.size() != y.size() || x.empty()) throw Error("mutual information needs equal, non-empty samples");
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> px, py;
    for (std::size_t i = 0; i < x.size(); ++i) {
        joint[{x[i], y[i]}] += 1.0;
        px[x[i]] += 1.0;
        py[y[i]] += 1.0;
    }
    const double n = static_cast<double>(x.size());
    double mi = 0.0;
    for (const auto& [key, c] : joint) mi += (c / n) * std::log(c * n / (px[key.first] * py[key.second]));
    return std::max(0.0, mi);
}

struct FeatureScore {
    std::size_t feature;
    double score;
};

/// Features ordered by descending I(X_j; Y), ties by index.
inline std::vector<FeatureScore> mi_rank(const Dataset& d, int bins = 10) {
    const auto labels = d.labels();
    std::vector<FeatureScore> scores;
    std::vector<double> column(d.sample_count());
    for (std::size_t j = 0; j < d.feature_count(); ++j) {
        for (std::size_t i = 0; i < d.sample_count(); ++i) column[i] = d.value(i, j);
        scores.push_back({j, mutual_information(equal_frequency_bins(column, bins), labels)});
    }
    std::stable_sort(scores.begin(), scores.end(), [](const FeatureScore& a, const FeatureScore& b) { return a.score > b.score; });
    return scores;
}

// ---------------------------------------------------------------------------
// Greedy sequential forward selection

struct SfsStep {
    std::vector<std::size_t> subset;  // in order of addition
    double score = 0.0;
};

/// At each step adds the feature that maximizes the repeated-split UAR of the
/// augmented subset (ties by lowest index).
inline std::vector<SfsStep> sfs_greedy(const Dataset& d, std::size_t max_k, const ObjectiveConfig& cfg,
                                       std::size_t threads = 1) {
    const std::size_t n_features = d.feature_count();
    if (max_k > n_features) throw ConfigError("max_k", "must not exceed the feature count");
    const auto factory = decision_tree_factory(cfg.max_depth);
    std::vector<SfsStep> trace;
    Chromosome current(n_features);
    std::vector<std::size_t> chosen;
    for (std::size_t k = 0; k < max_k; ++k) {
        std::vector<std::size_t> candidates;
        for (std::size_t j = 0; j < n_features; ++j)
            if (!current.test(j)) candidates.push_back(j);
        std::vector<double> scores(candidates.size());
        parallel_for(candidates.size(), threads, [&](std::size_t c) {
            Chromosome trial = current;
            trial.set(candidates[c]);
            scores[c] = objective1_uar(trial, d, cfg, factory);
        });
        std::size_t best = 0;
        for (std::size_t c = 1; c < candidates.size(); ++c)
            if (scores[c] > scores[best]) best = c;
        current.set(candidates[best]);
        chosen.push_back(candidates[best]);
        trace.push_back({chosen, scores[best]});
    }
    return trace;
}

struct SizeSweep {
    std::size_t best_k = 0;
    double best_score = 0.0;
    std::vector<double> scores;  // scores[k-1] for prefix size k
};

/// Smallest prefix size attaining the maximum score.
inline SizeSweep smallest_argmax(std::vector<double> scores) {
    if (scores.empty()) throw Error("empty size sweep");
    SizeSweep s;
    s.best_k = 1;
    s.best_score = scores[0];
    for (std::size_t k = 1; k < scores.size(); ++k)
        if (scores[k] > s.best_score) {
            s.best_score = scores[k];
            s.best_k = k + 1;
        }
    s.scores = std::move(scores);
    return s;
}

/// Evaluates objective-I UAR for every prefix of `ordering` (up to max_k,
/// 0 = all) and keeps the smallest size reaching the best score.
inline SizeSweep optimal_size_sweep(const std::vector<std::size_t>& ordering, const Dataset& d, const ObjectiveConfig& cfg,
                                    std::size_t max_k = 0, std::size_t threads = 1) {
    if (ordering.empty()) throw Error("empty feature ordering");
    const std::size_t k_max = max_k == 0 ? ordering.size() : std::min(max_k, ordering.size());
    const auto factory = decision_tree_factory(cfg.max_depth);
    std::vector<double> scores(k_max);
    parallel_for(k_max, threads, [&](std::size_t k) {
        Chromosome prefix(d.feature_count());
        for (std::size_t i = 0; i <= k; ++i) prefix.set(ordering[i]);
        scores[k] = objective1_uar(prefix, d, cfg, factory);
    });
    return smallest_argmax(std::move(scores));
}

inline SizeSweep optimal_size_sweep(const std::vector<SfsStep>& trace) {
    std::vector<double> scores;
    for (const auto& s : trace) scores.push_back(s.score);
    return smallest_argmax(std::move(scores));
}

inline std::vector<std::size_t> ordering_of(const std::vector<FeatureScore>& ranking) {
    std::vector<std::size_t> out;
    for (const auto& r : ranking) out.push_back(r.feature);
    return out;
}

}  // namespace moeliga
