#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <utility>
#include <vector>

#include "common.hpp"
#include "data.hpp"

namespace moeliga {

/// Wrapper classifier used to score feature subsets.
class Classifier {
public:
    virtual ~Classifier() = default;
    virtual void fit(const Dataset& train, std::uint64_t seed) = 0;
    virtual std::vector<int> predict(const Dataset& view) const = 0;
};

using ClassifierFactory = std::function<std::unique_ptr<Classifier>()>;

struct TreeParams {
    int max_depth = 100;
    std::size_t min_samples_split = 2;
};

/// CART-style decision tree: Gini impurity, axis-aligned splits at midpoints
/// between consecutive distinct values, `x <= threshold` goes left.
/// Equal-impurity candidates resolve to the lowest feature, then the lowest
/// threshold; leaf ties resolve to the lowest class index.
class DecisionTree final : public Classifier {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        int label = 0;
        bool is_leaf() const noexcept { return feature < 0; }
    };

    explicit DecisionTree(TreeParams params = {}) : params_(params) {}

    /// The tree is fully deterministic; `seed` exists for interface parity
    /// with randomized learners.
    void fit(const Dataset& train, std::uint64_t /*seed*/ = 0) override {
        if (train.empty()) throw DataError("cannot train on an empty view");
        if (params_.max_depth < 0) throw ConfigError("max_depth", "must be >= 0");
        n_features_ = train.feature_count();
        n_classes_ = train.class_count();
        const std::size_t n = train.sample_count();
        columns_.assign(n_features_, std::vector<double>(n));
        for (std::size_t f = 0; f < n_features_; ++f)
            for (std::size_t i = 0; i < n; ++i) columns_[f][i] = train.value(i, f);
        labels_ = train.labels();
        nodes_.clear();
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        depth_ = 0;
        build(idx, 0);
        columns_.clear();
        columns_.shrink_to_fit();
        labels_.clear();
    }

    std::vector<int> predict(const Dataset& view) const override {
        if (nodes_.empty()) throw Error("tree is not trained");
        if (view.feature_count() != n_features_)
            throw DataError("view has " + std::to_string(view.feature_count()) + " columns, tree expects " +
                            std::to_string(n_features_));
        std::vector<int> out(view.sample_count());
        for (std::size_t i = 0; i < view.sample_count(); ++i) {
            int node = 0;
            while (!nodes_[static_cast<std::size_t>(node)].is_leaf()) {
                const auto& nd = nodes_[static_cast<std::size_t>(node)];
                node = view.value(i, static_cast<std::size_t>(nd.feature)) <= nd.threshold ? nd.left : nd.right;
            }
            out[i] = nodes_[static_cast<std::size_t>(node)].label;
        }
        return out;
    }

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    int depth() const noexcept { return depth_; }
    std::size_t feature_count() const noexcept { return n_features_; }

private:
    int build(const std::vector<std::size_t>& idx, int depth) {
        depth_ = std::max(depth_, depth);
        std::vector<std::size_t> counts(n_classes_, 0);
        for (std::size_t i : idx) ++counts[static_cast<std::size_t>(labels_[i])];
        const auto majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
        const auto present = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });

        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{-1, 0.0, -1, -1, majority});
        if (depth >= params_.max_depth || present <= 1 || idx.size() < params_.min_samples_split) return id;

        const double n_total = static_cast<double>(idx.size());
        double best_score = 0.0;
        int best_feature = -1;
        double best_threshold = 0.0;
        std::vector<std::pair<double, int>> sorted(idx.size());
        std::vector<double> left(n_classes_), right(n_classes_);
        for (std::size_t f = 0; f < n_features_; ++f) {
            const auto& col = columns_[f];
            for (std::size_t k = 0; k < idx.size(); ++k) sorted[k] = {col[idx[k]], labels_[idx[k]]};
            std::sort(sorted.begin(), sorted.end());
            if (sorted.front().first == sorted.back().first) continue;
            std::fill(left.begin(), left.end(), 0.0);
            for (std::size_t c = 0; c < n_classes_; ++c) right[c] = static_cast<double>(counts[c]);
            double sum_sq_left = 0.0;
            double sum_sq_right = 0.0;
            for (double r : right) sum_sq_right += r * r;
            for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
                const auto c = static_cast<std::size_t>(sorted[k].second);
                sum_sq_left += 2.0 * left[c] + 1.0;
                left[c] += 1.0;
                sum_sq_right -= 2.0 * right[c] - 1.0;
                right[c] -= 1.0;
                if (sorted[k].first == sorted[k + 1].first) continue;
                const double n_left = static_cast<double>(k + 1);
                const double n_right = n_total - n_left;
                // Sample-weighted Gini of the two children (lower is better).
                const double score = (n_left - sum_sq_left / n_left) + (n_right - sum_sq_right / n_right);
                if (best_feature < 0 || score < best_score) {
                    best_score = score;
                    best_feature = static_cast<int>(f);
                    const double lo = sorted[k].first;
                    const double hi = sorted[k + 1].first;
                    double mid = lo + 0.5 * (hi - lo);
                    if (!(mid < hi)) mid = lo;
                    best_threshold = mid;
                }
            }
        }
        if (best_feature < 0) return id;

        std::vector<std::size_t> left_idx, right_idx;
        const auto& col = columns_[static_cast<std::size_t>(best_feature)];
        for (std::size_t i : idx) (col[i] <= best_threshold ? left_idx : right_idx).push_back(i);

        nodes_[static_cast<std::size_t>(id)].feature = best_feature;
        nodes_[static_cast<std::size_t>(id)].threshold = best_threshold;
        const int l = build(left_idx, depth + 1);
        const int r = build(right_idx, depth + 1);
        nodes_[static_cast<std::size_t>(id)].left = l;
        nodes_[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    TreeParams params_;
    std::vector<Node> nodes_;
    std::size_t n_features_ = 0;
    std::size_t n_classes_ = 0;
    int depth_ = 0;
    // Scratch state, only alive during fit().
    std::vector<std::vector<double>> columns_;
    std::vector<int> labels_;
};

inline ClassifierFactory decision_tree_factory(int max_depth = 100) {
    return [max_depth] { return std::make_unique<DecisionTree>(TreeParams{max_depth, 2}); };
}

/// Per-class true positives and false negatives.
struct ConfusionTally {
    std::vector<std::size_t> true_positives;
    std::vector<std::size_t> false_negatives;

    std::size_t support(std::size_t cls) const { return true_positives[cls] + false_negatives[cls]; }
};

inline ConfusionTally tally(const std::vector<int>& predictions, const std::vector<int>& truth, std::size_t class_count) {
    if (predictions.size() != truth.size()) throw Error("prediction and truth lengths differ");
    if (truth.empty()) throw Error("cannot score empty label vectors");
    ConfusionTally t{std::vector<std::size_t>(class_count, 0), std::vector<std::size_t>(class_count, 0)};
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const int y = truth[i];
        const int p = predictions[i];
        if (y < 0 || static_cast<std::size_t>(y) >= class_count || p < 0 || static_cast<std::size_t>(p) >= class_count)
            throw Error("label out of range");
        if (p == y) ++t.true_positives[static_cast<std::size_t>(y)];
        else ++t.false_negatives[static_cast<std::size_t>(y)];
    }
    return t;
}

/// Unweighted average recall. Classes absent from `truth` are left out of
/// the average.
inline double uar(const ConfusionTally& t) {
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < t.true_positives.size(); ++c) {
        const std::size_t n = t.support(c);
        if (n == 0) continue;
        sum += static_cast<double>(t.true_positives[c]) / static_cast<double>(n);
        ++present;
    }
    return present == 0 ? 0.0 : sum / static_cast<double>(present);
}

inline double uar(const std::vector<int>& predictions, const std::vector<int>& truth, std::size_t class_count) {
    return uar(tally(predictions, truth, class_count));
}

}  // namespace moeliga
