#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "baselines.hpp"
#include "common.hpp"
#include "data.hpp"
#include "evolution.hpp"
#include "frontier.hpp"
#include "objectives.hpp"
#include "pareto.hpp"

namespace moeliga {

struct CsvSource {
    std::string path;
    std::string label_column;
};

struct CompareConfig {
    int mi_bins = 10;
    /// Largest prefix evaluated for the MI ranking (0 = all features).
    std::size_t mi_max_k = 0;
    /// Largest subset grown by forward selection (0 = min(20, N_F)).
    std::size_t sfs_max_k = 0;
};

/// Sweep axes; each key maps to the list of values to try.
using SweepGrid = std::vector<std::pair<std::string, std::vector<nlohmann::json>>>;

struct ExperimentConfig {
    std::variant<CsvSource, SyntheticSpec> dataset = SyntheticSpec{};
    double test_fraction = 0.2;
    std::size_t replications = 5;
    std::uint64_t seed = 0;
    /// Evaluation threads; 0 lets the CLI pick (MOELIGA_THREADS or 1).
    std::size_t threads = 0;
    std::string output_dir = "moeliga_out";
    GAConfig ga;
    ObjectiveConfig objectives;
    SharingConfig sharing;
    CompareConfig compare;
    SweepGrid grid;

    void validate() const {
        if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction", "must be in (0, 1)");
        if (replications < 1) throw ConfigError("replications", "must be >= 1");
        if (compare.mi_bins < 2) throw ConfigError("compare.mi_bins", "must be >= 2");
        auto prefixed = [](const char* section, auto&& fn) {
            try {
                fn();
            } catch (const ConfigError& e) {
                throw ConfigError(std::string(section) + "." + e.key(), std::string(e.what()).substr(e.key().size() + 2));
            }
        };
        prefixed("ga", [&] { ga.validate(); });
        prefixed("objectives", [&] { objectives.validate(); });
        prefixed("sharing", [&] { sharing.validate(); });
        if (const auto* s = std::get_if<SyntheticSpec>(&dataset)) prefixed("dataset.synthetic", [&] { s->validate(); });
    }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, const std::string& section, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(section.empty() ? "config" : section, "must be an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError(section.empty() ? key : section + "." + key, "unknown key");
    }
}

template <typename T>
void read(const nlohmann::json& j, const std::string& section, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(section + "." + key, "has the wrong type");
    }
}

inline std::size_t read_count(const nlohmann::json& v, const std::string& key) {
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(key, "must be a non-negative integer");
    return v.get<std::size_t>();
}

template <typename T>
void read_size(const nlohmann::json& j, const std::string& section, const char* key, T& out) {
    if (j.contains(key)) out = static_cast<T>(read_count(j.at(key), section + "." + key));
}

inline std::optional<double> read_lambda(const nlohmann::json& v, const std::string& key) {
    if (v.is_null() || (v.is_string() && (v == "none" || v == "None"))) return std::nullopt;
    if (!v.is_number()) throw ConfigError(key, "must be a number or null");
    return v.get<double>();
}

inline SharingSpace sharing_space_from(const nlohmann::json& v, const std::string& key) {
    if (v == "decision") return SharingSpace::Decision;
    if (v == "objective") return SharingSpace::Objective;
    throw ConfigError(key, "must be \"decision\" or \"objective\"");
}

inline ReplacementStrategy strategy_from(const nlohmann::json& v, const std::string& key) {
    if (!v.is_string()) throw ConfigError(key, "must be a string");
    try {
        return replacement_from_string(v.get<std::string>());
    } catch (const ConfigError& e) {
        throw ConfigError(key, std::string(e.what()).substr(e.key().size() + 2));
    }
}

inline const std::vector<std::string>& sweep_keys() {
    static const std::vector<std::string> keys{"lambda", "gamma",   "sigma", "alpha", "n_tests", "use_objective3",
                                               "replacement_strategy", "n_subordinate"};
    return keys;
}

}  // namespace detail

/// Applies one sweep-axis value to a configuration.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const nlohmann::json& v) {
    const std::string path = "grid." + key;
    try {
        if (key == "lambda") cfg.objectives.lambda = detail::read_lambda(v, path);
        else if (key == "gamma") cfg.objectives.gamma = v.get<double>();
        else if (key == "sigma") cfg.sharing.sigma = v.get<double>();
        else if (key == "alpha") cfg.sharing.alpha = v.get<double>();
        else if (key == "n_tests") cfg.objectives.n_tests = v.get<int>();
        else if (key == "use_objective3") cfg.objectives.use_objective3 = v.get<bool>();
        else if (key == "replacement_strategy") cfg.ga.replacement = detail::strategy_from(v, path);
        else if (key == "n_subordinate") cfg.ga.n_subordinate = detail::read_count(v, path);
        else throw ConfigError(path, "is not a sweepable parameter");
    } catch (const nlohmann::json::exception&) {
        throw ConfigError(path, "has a value of the wrong type");
    }
}

/// Parses and validates an experiment description (JSON).
inline ExperimentConfig parse_experiment(const nlohmann::json& j) {
    using detail::read;
    using detail::read_size;
    detail::reject_unknown(j, "", {"dataset", "seed", "replications", "test_fraction", "threads", "output_dir", "ga",
                                   "objectives", "sharing", "compare", "grid"});
    ExperimentConfig cfg;
    if (j.contains("seed")) cfg.seed = detail::read_count(j.at("seed"), "seed");
    if (j.contains("replications")) cfg.replications = detail::read_count(j.at("replications"), "replications");
    if (j.contains("threads")) cfg.threads = detail::read_count(j.at("threads"), "threads");
    if (j.contains("test_fraction")) {
        if (!j.at("test_fraction").is_number()) throw ConfigError("test_fraction", "must be a number");
        cfg.test_fraction = j.at("test_fraction").get<double>();
    }
    if (j.contains("output_dir")) {
        if (!j.at("output_dir").is_string()) throw ConfigError("output_dir", "must be a string");
        cfg.output_dir = j.at("output_dir").get<std::string>();
    }

    if (!j.contains("dataset")) throw ConfigError("dataset", "is required");
    const auto& jd = j.at("dataset");
    detail::reject_unknown(jd, "dataset", {"csv", "label_column", "synthetic"});
    if (jd.contains("csv") == jd.contains("synthetic")) throw ConfigError("dataset", "needs exactly one of csv or synthetic");
    if (jd.contains("csv")) {
        CsvSource src;
        read(jd, "dataset", "csv", src.path);
        if (jd.contains("label_column")) {
            const auto& lc = jd.at("label_column");
            src.label_column = lc.is_number_integer() ? std::to_string(lc.get<long long>()) : lc.get<std::string>();
        }
        cfg.dataset = src;
    } else {
        const auto& js = jd.at("synthetic");
        const std::string sec = "dataset.synthetic";
        detail::reject_unknown(js, sec, {"n_samples", "n_features", "n_informative", "n_classes", "noise_level", "seed"});
        SyntheticSpec s;
        read_size(js, sec, "n_samples", s.n_samples);
        read_size(js, sec, "n_features", s.n_features);
        read_size(js, sec, "n_informative", s.n_informative);
        read_size(js, sec, "n_classes", s.n_classes);
        read(js, sec, "noise_level", s.noise_level);
        read_size(js, sec, "seed", s.seed);
        cfg.dataset = s;
    }

    if (j.contains("ga")) {
        const auto& jg = j.at("ga");
        const std::string sec = "ga";
        detail::reject_unknown(jg, sec, {"pop_size", "generations", "crossover_rate", "mutation_rate", "elite_count",
                                         "generational_gap", "tiers", "sub_pop_size", "sub_generations", "n_subordinate",
                                         "sub_every", "replacement_strategy", "subordinate_consumes_budget"});
        auto& g = cfg.ga;
        read_size(jg, sec, "pop_size", g.pop_size);
        read_size(jg, sec, "generations", g.generations);
        read(jg, sec, "crossover_rate", g.crossover_rate);
        read(jg, sec, "mutation_rate", g.mutation_rate);
        read_size(jg, sec, "elite_count", g.elite_count);
        read_size(jg, sec, "generational_gap", g.generational_gap);
        read_size(jg, sec, "sub_pop_size", g.sub_pop_size);
        read_size(jg, sec, "sub_generations", g.sub_generations);
        read_size(jg, sec, "n_subordinate", g.n_subordinate);
        read_size(jg, sec, "sub_every", g.sub_every);
        read(jg, sec, "subordinate_consumes_budget", g.subordinate_consumes_budget);
        if (jg.contains("replacement_strategy")) g.replacement = detail::strategy_from(jg.at("replacement_strategy"), "ga.replacement_strategy");
        if (jg.contains("tiers")) {
            g.tiers.clear();
            for (const auto& t : jg.at("tiers")) {
                if (!t.is_array() || t.size() != 2) throw ConfigError("ga.tiers", "entries must be [population_fraction, active_fraction]");
                g.tiers.push_back({t[0].get<double>(), t[1].get<double>()});
            }
        }
    }

    if (j.contains("objectives")) {
        const auto& jo = j.at("objectives");
        const std::string sec = "objectives";
        detail::reject_unknown(jo, sec, {"n_tests", "validation_fraction", "lambda", "gamma", "n_neighbor_samples",
                                         "use_objective3", "max_depth"});
        auto& o = cfg.objectives;
        read(jo, sec, "n_tests", o.n_tests);
        read(jo, sec, "validation_fraction", o.validation_fraction);
        if (jo.contains("lambda")) o.lambda = detail::read_lambda(jo.at("lambda"), "objectives.lambda");
        read(jo, sec, "gamma", o.gamma);
        read_size(jo, sec, "n_neighbor_samples", o.n_neighbor_samples);
        read(jo, sec, "use_objective3", o.use_objective3);
        read(jo, sec, "max_depth", o.max_depth);
    }

    if (j.contains("sharing")) {
        const auto& js = j.at("sharing");
        const std::string sec = "sharing";
        detail::reject_unknown(js, sec, {"sigma", "alpha", "space"});
        read(js, sec, "sigma", cfg.sharing.sigma);
        read(js, sec, "alpha", cfg.sharing.alpha);
        if (js.contains("space")) cfg.sharing.space = detail::sharing_space_from(js.at("space"), "sharing.space");
    }

    if (j.contains("compare")) {
        const auto& jc = j.at("compare");
        detail::reject_unknown(jc, "compare", {"mi_bins", "mi_max_k", "sfs_max_k"});
        read(jc, "compare", "mi_bins", cfg.compare.mi_bins);
        read_size(jc, "compare", "mi_max_k", cfg.compare.mi_max_k);
        read_size(jc, "compare", "sfs_max_k", cfg.compare.sfs_max_k);
    }

    if (j.contains("grid")) {
        const auto& jgrid = j.at("grid");
        if (!jgrid.is_object()) throw ConfigError("grid", "must be an object");
        for (const auto& [key, values] : jgrid.items()) {
            const auto& keys = detail::sweep_keys();
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError("grid." + key, "is not a sweepable parameter");
            if (!values.is_array() || values.empty()) throw ConfigError("grid." + key, "must be a non-empty list");
            cfg.grid.emplace_back(key, std::vector<nlohmann::json>(values.begin(), values.end()));
            ExperimentConfig probe = cfg;
            for (const auto& v : values) apply_setting(probe, key, v);
        }
    }

    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_experiment(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    auto cfg = parse_experiment(j);
    // Relative dataset paths are resolved against the config file's directory.
    if (auto* csv = std::get_if<CsvSource>(&cfg.dataset)) {
        const std::filesystem::path p = csv->path;
        if (p.is_relative() && path.has_parent_path()) csv->path = (path.parent_path() / p).string();
    }
    return cfg;
}

using Logger = std::function<void(const std::string&)>;

/// Optimization data and the held-out test set, carved once per experiment.
struct PreparedData {
    Dataset optimization;
    Dataset test;
    std::vector<std::size_t> planted;  // informative features of synthetic data
};

inline PreparedData prepare_data(const ExperimentConfig& cfg) {
    PreparedData p;
    Dataset full;
    if (const auto* csv = std::get_if<CsvSource>(&cfg.dataset)) {
        full = load_csv(csv->path, {csv->label_column});
    } else {
        auto syn = generate_synthetic(std::get<SyntheticSpec>(cfg.dataset));
        full = syn.data;
        p.planted = syn.informative;
    }
    auto split = stratified_split(full, {cfg.test_fraction, derive_seed(cfg.seed, 0x7e57u)});
    p.optimization = std::move(split.train);
    p.test = std::move(split.validation);
    return p;
}

inline std::uint64_t replication_seed(std::uint64_t experiment_seed, std::size_t replication) {
    return derive_seed(experiment_seed, 0x4e9u, replication);
}

struct ReplicationOutput {
    std::uint64_t seed = 0;
    ParetoFront front;             // archive of non-dominated solutions
    ParetoFront population_front;  // rank-1 members of the final population
    RunTrace trace;
};

inline ReplicationOutput run_replication(const ExperimentConfig& cfg, const PreparedData& data, std::size_t r) {
    ReplicationOutput out;
    out.seed = replication_seed(cfg.seed, r);
    GAConfig ga = cfg.ga;
    ga.seed = out.seed;
    ObjectiveConfig obj = cfg.objectives;
    obj.base_seed = derive_seed(out.seed, 0x0b1u);
    Evaluator evaluator(data.optimization, obj, cfg.threads);
    auto result = run(evaluator, ga, cfg.sharing);
    const std::string run_id = "rep" + std::to_string(r);
    const std::size_t nf = data.optimization.feature_count();
    out.front = ParetoFront::from_population(result.archive, run_id, result.generations_run, nf);
    out.population_front = ParetoFront::from_population(result.population_front, run_id, result.generations_run, nf);
    compute_test_uar(out.front, data.optimization, data.test, obj.max_depth);
    compute_test_uar(out.population_front, data.optimization, data.test, obj.max_depth);
    out.trace = std::move(result.trace);
    return out;
}

struct ExperimentResult {
    std::vector<ReplicationOutput> replications;
    ReplicationSummary summary;
    nlohmann::json summary_json;
};

/// Runs every replication; with an output directory, writes
/// rep_<i>/{front.csv,front.json,population_front.csv,trace.csv} as each
/// replication finishes, then summary.json.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir = {},
                                       const Logger& log = {}) {
    cfg.validate();
    const auto data = prepare_data(cfg);
    ExperimentResult res;
    std::vector<ParetoFront> fronts;
    std::vector<std::uint64_t> seeds;
    for (std::size_t r = 0; r < cfg.replications; ++r) {
        auto rep = run_replication(cfg, data, r);
        if (!out_dir.empty()) {
            const auto dir = out_dir / ("rep_" + std::to_string(r));
            export_front(rep.front, dir / "front.csv");
            export_front(rep.population_front, dir / "population_front.csv");
            write_file_atomic(dir / "trace.csv", trace_to_csv(rep.trace));
        }
        if (log) {
            const auto best = representative_r1hat(rep.front);
            const auto& m = rep.front.members[best.index];
            std::ostringstream msg;
            msg << "replication " << r << ": front " << rep.front.members.size() << " members, R1hat "
                << best.score << ", test UAR " << *m.test_uar << ", " << m.chromosome.count() << " features";
            log(msg.str());
        }
        fronts.push_back(rep.front);
        seeds.push_back(rep.seed);
        res.replications.push_back(std::move(rep));
    }
    res.summary = summarize_replications(fronts);
    res.summary_json = summary_to_json(res.summary, seeds);
    if (!out_dir.empty()) write_file_atomic(out_dir / "summary.json", res.summary_json.dump(2) + "\n");
    return res;
}

// ---------------------------------------------------------------------------
// Baseline comparison

struct CompareRow {
    std::size_t replication = 0;
    std::string method;
    double uar_test = 0.0;
    std::size_t n_selected = 0;
    double wall_seconds = 0.0;
    Chromosome subset;
};

struct CompareReport {
    std::vector<CompareRow> rows;

    /// Median test UAR / subset size per method across replications.
    nlohmann::json medians() const {
        nlohmann::json out = nlohmann::json::array();
        for (const char* method : {"moeliga", "mi", "sfs"}) {
            std::vector<double> u, n, t;
            for (const auto& r : rows)
                if (r.method == method) {
                    u.push_back(r.uar_test);
                    n.push_back(static_cast<double>(r.n_selected));
                    t.push_back(r.wall_seconds);
                }
            if (u.empty()) continue;
            out.push_back({{"method", method},
                           {"median_uar_test", median(u)},
                           {"median_n_selected", median(n)},
                           {"median_wall_seconds", median(t)}});
        }
        return out;
    }

    std::string to_csv() const {
        std::ostringstream out;
        out << "replication,method,uar_test,n_selected,wall_seconds,bitmask\n";
        for (const auto& r : rows)
            out << r.replication << ',' << r.method << ',' << format_double(r.uar_test) << ',' << r.n_selected << ','
                << format_double(r.wall_seconds) << ',' << r.subset.to_hex() << '\n';
        return out.str();
    }
};

/// MOELIGA, MI ranking + size sweep, and forward selection + size sweep on the
/// same optimization/test data. Subset sizes for the baselines are chosen by
/// the repeated-split validation UAR; all methods report held-out UAR.
inline CompareReport run_compare(const ExperimentConfig& cfg, const std::filesystem::path& out_dir = {},
                                 const Logger& log = {}) {
    cfg.validate();
    const auto data = prepare_data(cfg);
    const std::size_t nf = data.optimization.feature_count();
    CompareReport report;
    using clock = std::chrono::steady_clock;
    auto seconds_since = [](clock::time_point t0) { return std::chrono::duration<double>(clock::now() - t0).count(); };

    for (std::size_t r = 0; r < cfg.replications; ++r) {
        ObjectiveConfig obj = cfg.objectives;
        obj.base_seed = derive_seed(replication_seed(cfg.seed, r), 0x0b1u);
        const auto factory = decision_tree_factory(obj.max_depth);

        auto t0 = clock::now();
        auto rep = run_replication(cfg, data, r);
        const auto best = representative_r1hat(rep.front);
        const auto& m = rep.front.members[best.index];
        report.rows.push_back({r, "moeliga", *m.test_uar, m.chromosome.count(), seconds_since(t0), m.chromosome});
        if (!out_dir.empty()) export_front(rep.front, out_dir / ("rep_" + std::to_string(r)) / "front.csv");

        t0 = clock::now();
        const auto ranking = ordering_of(mi_rank(data.optimization, cfg.compare.mi_bins));
        const auto mi_sweep = optimal_size_sweep(ranking, data.optimization, obj, cfg.compare.mi_max_k, cfg.threads);
        Chromosome mi_subset(nf);
        for (std::size_t i = 0; i < mi_sweep.best_k; ++i) mi_subset.set(ranking[i]);
        const double mi_uar = holdout_uar(mi_subset, data.optimization, data.test, factory);
        report.rows.push_back({r, "mi", mi_uar, mi_sweep.best_k, seconds_since(t0), mi_subset});

        t0 = clock::now();
        const std::size_t sfs_k = cfg.compare.sfs_max_k ? std::min(cfg.compare.sfs_max_k, nf) : std::min<std::size_t>(20, nf);
        const auto trace = sfs_greedy(data.optimization, sfs_k, obj, cfg.threads);
        const auto sfs_sweep = optimal_size_sweep(trace);
        const auto sfs_subset = Chromosome::from_indices(nf, trace[sfs_sweep.best_k - 1].subset);
        const double sfs_uar = holdout_uar(sfs_subset, data.optimization, data.test, factory);
        report.rows.push_back({r, "sfs", sfs_uar, sfs_sweep.best_k, seconds_since(t0), sfs_subset});

        if (log) {
            std::ostringstream msg;
            msg << "replication " << r << ": moeliga " << m.chromosome.count() << " feat UAR " << *m.test_uar << " | mi "
                << mi_sweep.best_k << " feat UAR " << mi_uar << " | sfs " << sfs_sweep.best_k << " feat UAR " << sfs_uar;
            log(msg.str());
        }
    }
    if (!out_dir.empty()) {
        write_file_atomic(out_dir / "compare.csv", report.to_csv());
        write_file_atomic(out_dir / "compare_summary.json", report.medians().dump(2) + "\n");
    }
    return report;
}

// ---------------------------------------------------------------------------
// Hyperparameter sweep

struct SweepCell {
    std::vector<std::pair<std::string, nlohmann::json>> settings;
    ReplicationSummary summary;
};

inline std::size_t sweep_cell_count(const SweepGrid& grid) {
    std::size_t n = 1;
    for (const auto& [_, values] : grid) n *= values.size();
    return n;
}

/// Cartesian product of the grid; every cell is a full experiment written to
/// cell_<i>/. Writes sweep.csv with per-cell medians and deviations.
inline std::vector<SweepCell> run_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out_dir = {},
                                        const Logger& log = {}) {
    if (cfg.grid.empty()) throw ConfigError("grid", "sweep needs at least one grid axis");
    const std::size_t n_cells = sweep_cell_count(cfg.grid);
    std::vector<SweepCell> cells;
    for (std::size_t c = 0; c < n_cells; ++c) {
        ExperimentConfig cell_cfg = cfg;
        SweepCell cell;
        std::size_t rest = c;
        for (auto it = cfg.grid.rbegin(); it != cfg.grid.rend(); ++it) {
            const auto& [key, values] = *it;
            const auto& v = values[rest % values.size()];
            rest /= values.size();
            apply_setting(cell_cfg, key, v);
            cell.settings.insert(cell.settings.begin(), {key, v});
        }
        cell_cfg.validate();
        const auto cell_dir = out_dir.empty() ? std::filesystem::path{} : out_dir / ("cell_" + std::to_string(c));
        cell.summary = run_experiment(cell_cfg, cell_dir).summary;
        if (log) log("cell " + std::to_string(c + 1) + "/" + std::to_string(n_cells) + " median R1hat " +
                     format_double(cell.summary.median_r1hat));
        cells.push_back(std::move(cell));
    }
    if (!out_dir.empty()) {
        std::ostringstream csv;
        csv << "cell";
        for (const auto& [key, _] : cfg.grid) csv << ',' << key;
        csv << ",median_r1hat,std_r1hat,median_uar,std_uar,median_n_selected,std_n_selected\n";
        nlohmann::json j = nlohmann::json::array();
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const auto& s = cells[c].summary;
            csv << c;
            nlohmann::json settings;
            for (const auto& [key, v] : cells[c].settings) {
                csv << ',' << (v.is_string() ? v.get<std::string>() : v.dump());
                settings[key] = v;
            }
            csv << ',' << format_double(s.median_r1hat) << ',' << format_double(s.std_r1hat) << ','
                << format_double(s.median_uar) << ',' << format_double(s.std_uar) << ','
                << format_double(s.median_n_selected) << ',' << format_double(s.std_n_selected) << '\n';
            j.push_back({{"cell", c},
                         {"settings", settings},
                         {"median_r1hat", s.median_r1hat},
                         {"std_r1hat", s.std_r1hat},
                         {"median_uar", s.median_uar},
                         {"median_n_selected", s.median_n_selected}});
        }
        write_file_atomic(out_dir / "sweep.csv", csv.str());
        write_file_atomic(out_dir / "sweep.json", j.dump(2) + "\n");
    }
    return cells;
}

}  // namespace moeliga
