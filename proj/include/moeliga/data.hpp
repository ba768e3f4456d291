#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numeric>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "chromosome.hpp"
#include "common.hpp"

namespace moeliga {

namespace detail {

struct DatasetStorage {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> values;  // row-major
    std::vector<int> labels;
    std::vector<std::string> feature_names;
    std::vector<std::string> class_names;
    std::size_t dropped_rows = 0;
};

}  // namespace detail

/// Immutable instance matrix with class labels. A Dataset is also a view:
/// row and column subsets share the parent's storage, so splitting and
/// projecting never copy feature values.
class Dataset {
public:
    Dataset() = default;

    /// Builds a dataset from row vectors and dense labels in [0, class_count).
    /// Empty name vectors get generated names.
    static Dataset from_rows(const std::vector<std::vector<double>>& rows, std::vector<int> labels,
                             std::vector<std::string> class_names = {},
                             std::vector<std::string> feature_names = {}) {
        if (rows.empty()) throw DataError("dataset has no rows");
        if (rows.size() != labels.size()) throw DataError("row and label counts differ");
        auto s = std::make_shared<detail::DatasetStorage>();
        s->n_rows = rows.size();
        s->n_cols = rows.front().size();
        s->values.reserve(s->n_rows * s->n_cols);
        for (const auto& r : rows) {
            if (r.size() != s->n_cols) throw DataError("ragged feature matrix");
            s->values.insert(s->values.end(), r.begin(), r.end());
        }
        s->labels = std::move(labels);
        s->class_names = std::move(class_names);
        s->feature_names = std::move(feature_names);
        return finish(std::move(s));
    }

    /// Same as from_rows but takes a row-major flat buffer.
    static Dataset from_flat(std::size_t n_rows, std::size_t n_cols, std::vector<double> values,
                             std::vector<int> labels, std::vector<std::string> class_names = {},
                             std::vector<std::string> feature_names = {}, std::size_t dropped_rows = 0) {
        if (n_rows == 0) throw DataError("dataset has no rows");
        if (values.size() != n_rows * n_cols) throw DataError("value buffer size mismatch");
        if (labels.size() != n_rows) throw DataError("row and label counts differ");
        auto s = std::make_shared<detail::DatasetStorage>();
        s->n_rows = n_rows;
        s->n_cols = n_cols;
        s->values = std::move(values);
        s->labels = std::move(labels);
        s->class_names = std::move(class_names);
        s->feature_names = std::move(feature_names);
        s->dropped_rows = dropped_rows;
        return finish(std::move(s));
    }

    std::size_t sample_count() const noexcept { return rows_.size(); }
    std::size_t feature_count() const noexcept { return cols_.size(); }
    /// Number of classes in the parent dataset (views keep the global label space).
    std::size_t class_count() const noexcept { return storage_ ? storage_->class_names.size() : 0; }
    bool empty() const noexcept { return rows_.empty(); }

    double value(std::size_t row, std::size_t col) const {
        return storage_->values[rows_[row] * storage_->n_cols + cols_[col]];
    }
    int label(std::size_t row) const { return storage_->labels[rows_[row]]; }

    std::vector<int> labels() const {
        std::vector<int> out(rows_.size());
        for (std::size_t i = 0; i < rows_.size(); ++i) out[i] = label(i);
        return out;
    }

    std::vector<std::size_t> class_counts() const {
        std::vector<std::size_t> counts(class_count(), 0);
        for (std::size_t i = 0; i < rows_.size(); ++i) ++counts[static_cast<std::size_t>(label(i))];
        return counts;
    }

    /// Number of distinct classes that actually occur in this view.
    std::size_t present_class_count() const {
        const auto counts = class_counts();
        return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
    }

    /// Parent row / column ids backing this view.
    const std::vector<std::size_t>& row_ids() const noexcept { return rows_; }
    const std::vector<std::size_t>& column_ids() const noexcept { return cols_; }

    const std::vector<std::string>& class_names() const { return storage_->class_names; }
    std::string feature_name(std::size_t col) const { return storage_->feature_names[cols_[col]]; }
    std::size_t dropped_rows() const noexcept { return storage_ ? storage_->dropped_rows : 0; }

    bool shares_storage_with(const Dataset& other) const noexcept { return storage_ == other.storage_; }

    /// View over a subset of this view's rows (positions relative to this view).
    Dataset select_rows(const std::vector<std::size_t>& positions) const {
        Dataset v;
        v.storage_ = storage_;
        v.cols_ = cols_;
        v.rows_.reserve(positions.size());
        for (std::size_t p : positions) {
            if (p >= rows_.size()) throw DataError("row position out of range");
            v.rows_.push_back(rows_[p]);
        }
        return v;
    }

    /// View over a subset of this view's columns (positions relative to this view).
    Dataset select_columns(const std::vector<std::size_t>& positions) const {
        Dataset v;
        v.storage_ = storage_;
        v.rows_ = rows_;
        v.cols_.reserve(positions.size());
        for (std::size_t p : positions) {
            if (p >= cols_.size()) throw DataError("column position out of range");
            v.cols_.push_back(cols_[p]);
        }
        return v;
    }

private:
    static Dataset finish(std::shared_ptr<detail::DatasetStorage> s) {
        if (s->n_cols == 0) throw DataError("dataset has no feature columns");
        int max_label = -1;
        for (int l : s->labels) {
            if (l < 0) throw DataError("negative class label");
            max_label = std::max(max_label, l);
        }
        const std::size_t n_classes = std::max<std::size_t>(static_cast<std::size_t>(max_label + 1), s->class_names.size());
        if (s->class_names.empty()) {
            for (std::size_t c = 0; c < n_classes; ++c) s->class_names.push_back(std::to_string(c));
        } else if (s->class_names.size() < n_classes) {
            throw DataError("label outside the declared class names");
        }
        if (s->feature_names.empty()) {
            for (std::size_t j = 0; j < s->n_cols; ++j) s->feature_names.push_back("f" + std::to_string(j));
        } else if (s->feature_names.size() != s->n_cols) {
            throw DataError("feature name count does not match column count");
        }
        for (double v : s->values)
            if (!std::isfinite(v)) throw DataError("non-finite feature value");
        std::vector<std::size_t> counts(s->class_names.size(), 0);
        for (int l : s->labels) ++counts[static_cast<std::size_t>(l)];
        for (std::size_t c = 0; c < counts.size(); ++c) {
            if (counts[c] < 2)
                throw DataError("class '" + s->class_names[c] + "' has fewer than 2 samples");
        }
        if (s->n_rows < s->class_names.size()) throw DataError("fewer samples than classes");

        Dataset d;
        d.rows_.resize(s->n_rows);
        std::iota(d.rows_.begin(), d.rows_.end(), std::size_t{0});
        d.cols_.resize(s->n_cols);
        std::iota(d.cols_.begin(), d.cols_.end(), std::size_t{0});
        d.storage_ = std::move(s);
        return d;
    }

    std::shared_ptr<const detail::DatasetStorage> storage_;
    std::vector<std::size_t> rows_;
    std::vector<std::size_t> cols_;
};

struct SplitSpec {
    double validation_fraction = 0.30;
    std::uint64_t seed = 0;
};

struct Split {
    Dataset train;
    Dataset validation;
};

/// Per-class validation size: round(fraction * n), clamped to [1, n-1].
inline std::size_t stratified_validation_size(std::size_t class_size, double fraction) {
    const auto raw = static_cast<long long>(std::llround(fraction * static_cast<double>(class_size)));
    const long long hi = static_cast<long long>(class_size) - 1;
    return static_cast<std::size_t>(std::clamp<long long>(raw, 1, hi));
}

/// Stratified random split. Each class present in `d` is shuffled with a
/// stream derived from the seed and its first round(fraction*n) members go to
/// validation. Both partitions keep the parent's row order.
inline Split stratified_split(const Dataset& d, const SplitSpec& spec) {
    if (!(spec.validation_fraction > 0.0 && spec.validation_fraction < 1.0))
        throw ConfigError("validation_fraction", "must be in (0, 1)");
    std::vector<std::vector<std::size_t>> by_class(d.class_count());
    for (std::size_t i = 0; i < d.sample_count(); ++i) by_class[static_cast<std::size_t>(d.label(i))].push_back(i);

    Rng rng(spec.seed);
    std::vector<std::size_t> train, validation;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& members = by_class[c];
        if (members.empty()) continue;
        if (members.size() < 2)
            throw DataError("class '" + d.class_names()[c] + "' is too small to stratify");
        std::shuffle(members.begin(), members.end(), rng);
        const std::size_t n_val = stratified_validation_size(members.size(), spec.validation_fraction);
        validation.insert(validation.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_val));
        train.insert(train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(validation.begin(), validation.end());
    return {d.select_rows(train), d.select_rows(validation)};
}

/// View exposing only the columns whose mask bit is set, ascending.
inline Dataset project(const Dataset& d, const Chromosome& mask) {
    if (mask.size() != d.feature_count())
        throw DataError("mask length " + std::to_string(mask.size()) + " does not match feature count " +
                        std::to_string(d.feature_count()));
    auto active = mask.active_indices();
    if (active.empty()) throw DataError("cannot project onto an empty feature subset");
    return d.select_columns(active);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r' || s.front() == '"'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

inline bool parse_double(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace detail

/// Column holding the class label: empty = last column, otherwise a header
/// name or an integer index (negative counts from the end).
struct LabelColumn {
    std::string selector;
};

/// Reads a UTF-8 CSV with a header row. Empty cells and "?" mark missing
/// values; rows with any missing value are dropped and counted. Class labels
/// are remapped to dense indices in order of first appearance.
inline Dataset load_csv(const std::string& path, const LabelColumn& label_column = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path + "' is empty");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
    const auto header_fields = detail::split_csv_line(line);
    std::vector<std::string> header(header_fields.begin(), header_fields.end());
    const std::size_t n_fields = header.size();
    if (n_fields < 2) throw DataError("CSV needs at least one feature column and a label column");

    std::size_t label_idx = n_fields - 1;
    if (!label_column.selector.empty()) {
        auto it = std::find(header.begin(), header.end(), label_column.selector);
        if (it != header.end()) {
            label_idx = static_cast<std::size_t>(it - header.begin());
        } else {
            long long idx = 0;
            const auto& sel = label_column.selector;
            const auto [ptr, ec] = std::from_chars(sel.data(), sel.data() + sel.size(), idx);
            if (ec != std::errc() || ptr != sel.data() + sel.size())
                throw DataError("label column '" + sel + "' not found in header");
            if (idx < 0) idx += static_cast<long long>(n_fields);
            if (idx < 0 || idx >= static_cast<long long>(n_fields))
                throw DataError("label column index out of range");
            label_idx = static_cast<std::size_t>(idx);
        }
    }

    std::vector<std::string> feature_names;
    for (std::size_t j = 0; j < n_fields; ++j)
        if (j != label_idx) feature_names.push_back(header[j]);

    std::vector<double> values;
    std::vector<int> labels;
    std::vector<std::string> class_names;
    std::unordered_map<std::string, int> class_ids;
    std::size_t dropped = 0;
    std::size_t line_no = 1;
    std::vector<double> row(n_fields - 1);
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != n_fields)
            throw DataError("line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                            " fields, expected " + std::to_string(n_fields));
        bool missing = false;
        std::size_t k = 0;
        for (std::size_t j = 0; j < n_fields; ++j) {
            const auto f = fields[j];
            if (f.empty() || f == "?") {
                missing = true;
                continue;
            }
            if (j == label_idx) continue;
            if (!detail::parse_double(f, row[k++]))
                throw DataError("line " + std::to_string(line_no) + ": '" + std::string(f) + "' is not a number");
        }
        if (missing) {
            ++dropped;
            continue;
        }
        const std::string label(fields[label_idx]);
        auto [it, inserted] = class_ids.try_emplace(label, static_cast<int>(class_names.size()));
        if (inserted) class_names.push_back(label);
        labels.push_back(it->second);
        values.insert(values.end(), row.begin(), row.end());
    }
    if (labels.empty()) throw DataError("'" + path + "' has no usable rows");
    if (class_names.size() < 2) throw DataError("'" + path + "' contains a single class");
    const std::size_t n_rows = labels.size();
    return Dataset::from_flat(n_rows, n_fields - 1, std::move(values), std::move(labels),
                              std::move(class_names), std::move(feature_names), dropped);
}

}  // namespace moeliga
