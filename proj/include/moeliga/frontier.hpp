#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chromosome.hpp"
#include "classifier.hpp"
#include "common.hpp"
#include "data.hpp"
#include "evolution.hpp"
#include "objectives.hpp"
#include "pareto.hpp"

namespace moeliga {

struct FrontMember {
    Chromosome chromosome;
    ObjectiveVector objectives;
    std::optional<double> test_uar;
};

struct ParetoFront {
    std::string run_id;
    std::size_t generation = 0;
    std::size_t n_features = 0;
    std::vector<FrontMember> members;

    static ParetoFront from_population(const Population& pop, std::string run_id, std::size_t generation,
                                       std::size_t n_features) {
        ParetoFront f{std::move(run_id), generation, n_features, {}};
        for (const auto& ind : pop) f.members.push_back({ind.chromosome, ind.objectives, std::nullopt});
        return f;
    }

    bool is_nondominated(const ObjectiveMask& mask) const {
        for (std::size_t i = 0; i < members.size(); ++i)
            for (std::size_t j = 0; j < members.size(); ++j)
                if (i != j && dominates(members[i].objectives, members[j].objectives, mask)) return false;
        return true;
    }
};

/// Distance-to-ideal score on validation UAR and the (optionally sigmoid
/// mapped) cardinality ratio.
inline double r1_score(const FrontMember& m, std::optional<double> lambda, double gamma) {
    return ideal_point_score(m.objectives.uar, compactness(m.chromosome.size(), m.chromosome.count(), lambda, gamma));
}

/// Distance-to-ideal score on held-out UAR and the raw cardinality ratio.
inline double r1hat_score(const FrontMember& m) {
    if (!m.test_uar) throw Error("member has no test UAR");
    return ideal_point_score(*m.test_uar, cardinality_ratio(m.chromosome));
}

struct Representative {
    std::size_t index = 0;
    double score = 0.0;
};

namespace detail {

template <typename ScoreFn>
Representative argmax_member(const ParetoFront& front, ScoreFn&& score) {
    if (front.members.empty()) throw Error("cannot pick a representative from an empty front");
    Representative best{0, score(front.members[0])};
    for (std::size_t i = 1; i < front.members.size(); ++i) {
        const double s = score(front.members[i]);
        const auto& a = front.members[i];
        const auto& b = front.members[best.index];
        const std::size_t na = a.chromosome.count();
        const std::size_t nb = b.chromosome.count();
        if (s > best.score || (s == best.score && (na < nb || (na == nb && a.chromosome < b.chromosome))))
            best = {i, s};
    }
    return best;
}

}  // namespace detail

inline Representative representative_r1(const ParetoFront& front, std::optional<double> lambda, double gamma) {
    return detail::argmax_member(front, [&](const FrontMember& m) { return r1_score(m, lambda, gamma); });
}

inline Representative representative_r1hat(const ParetoFront& front) {
    return detail::argmax_member(front, [](const FrontMember& m) { return r1hat_score(m); });
}

/// Fills each member's test UAR: a classifier trained on `train` (projected
/// onto the member's features) scored on `test`.
inline void compute_test_uar(ParetoFront& front, const Dataset& train, const Dataset& test, int max_depth = 100) {
    const auto factory = decision_tree_factory(max_depth);
    for (auto& m : front.members) m.test_uar = holdout_uar(m.chromosome, train, test, factory);
}

// ---------------------------------------------------------------------------
// Persistence

inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw Error("cannot format number");
    return std::string(buf, ptr);
}

inline double parse_number(const std::string& s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw Error("invalid number '" + s + "'");
    return v;
}

/// Writes through a temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out.flush()) throw Error("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline constexpr const char* kFrontCsvHeader =
    "run_id,generation,n_selected,uar_validation,uar_test,cr,cr_lambda,m_dist,r1hat,bitmask";

inline std::string front_to_csv(const ParetoFront& front) {
    std::ostringstream out;
    out << kFrontCsvHeader << '\n';
    for (const auto& m : front.members) {
        out << front.run_id << ',' << front.generation << ',' << m.objectives.n_selected << ','
            << format_double(m.objectives.uar) << ',' << (m.test_uar ? format_double(*m.test_uar) : "") << ','
            << format_double(cardinality_ratio(m.chromosome)) << ',' << format_double(m.objectives.cr_mapped) << ','
            << format_double(m.objectives.m_dist) << ',' << (m.test_uar ? format_double(r1hat_score(m)) : "") << ','
            << m.chromosome.to_hex() << '\n';
    }
    return out.str();
}

/// Parses front CSV text. The chromosome length is taken from `n_features`.
inline ParetoFront front_from_csv(const std::string& text, std::size_t n_features) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kFrontCsvHeader) throw Error("unexpected front CSV header");
    ParetoFront front;
    front.n_features = n_features;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) f.push_back(cell);
        if (!line.empty() && line.back() == ',') f.emplace_back();
        if (f.size() != 10) throw Error("front CSV row has " + std::to_string(f.size()) + " fields");
        front.run_id = f[0];
        front.generation = static_cast<std::size_t>(parse_number(f[1]));
        FrontMember m;
        m.chromosome = Chromosome::from_hex(f[9], n_features);
        m.objectives.n_selected = static_cast<std::size_t>(parse_number(f[2]));
        m.objectives.uar = parse_number(f[3]);
        if (!f[4].empty()) m.test_uar = parse_number(f[4]);
        m.objectives.cr_mapped = parse_number(f[6]);
        m.objectives.m_dist = parse_number(f[7]);
        if (m.objectives.n_selected != m.chromosome.count()) throw Error("n_selected disagrees with bitmask");
        front.members.push_back(std::move(m));
    }
    return front;
}

inline nlohmann::json front_to_json(const ParetoFront& front) {
    nlohmann::json members = nlohmann::json::array();
    for (const auto& m : front.members) {
        nlohmann::json j;
        j["n_selected"] = m.objectives.n_selected;
        j["uar_validation"] = m.objectives.uar;
        j["uar_test"] = m.test_uar ? nlohmann::json(*m.test_uar) : nlohmann::json(nullptr);
        j["cr"] = cardinality_ratio(m.chromosome);
        j["cr_lambda"] = m.objectives.cr_mapped;
        j["m_dist"] = m.objectives.m_dist;
        j["r1hat"] = m.test_uar ? nlohmann::json(r1hat_score(m)) : nlohmann::json(nullptr);
        j["bitmask"] = m.chromosome.to_hex();
        members.push_back(std::move(j));
    }
    return {{"run_id", front.run_id},
            {"generation", front.generation},
            {"n_features", front.n_features},
            {"members", std::move(members)}};
}

inline ParetoFront front_from_json(const nlohmann::json& j) {
    ParetoFront front;
    front.run_id = j.at("run_id").get<std::string>();
    front.generation = j.at("generation").get<std::size_t>();
    front.n_features = j.at("n_features").get<std::size_t>();
    for (const auto& jm : j.at("members")) {
        FrontMember m;
        m.chromosome = Chromosome::from_hex(jm.at("bitmask").get<std::string>(), front.n_features);
        m.objectives.n_selected = jm.at("n_selected").get<std::size_t>();
        m.objectives.uar = jm.at("uar_validation").get<double>();
        if (!jm.at("uar_test").is_null()) m.test_uar = jm.at("uar_test").get<double>();
        m.objectives.cr_mapped = jm.at("cr_lambda").get<double>();
        m.objectives.m_dist = jm.at("m_dist").get<double>();
        front.members.push_back(std::move(m));
    }
    return front;
}

inline void export_front(const ParetoFront& front, const std::filesystem::path& csv_path) {
    write_file_atomic(csv_path, front_to_csv(front));
    auto json_path = csv_path;
    json_path.replace_extension(".json");
    write_file_atomic(json_path, front_to_json(front).dump(2) + "\n");
}

inline ParetoFront import_front_csv(const std::filesystem::path& path, std::size_t n_features) {
    return front_from_csv(read_file(path), n_features);
}

inline ParetoFront import_front_json(const std::filesystem::path& path) {
    return front_from_json(nlohmann::json::parse(read_file(path)));
}

inline constexpr const char* kTraceCsvHeader =
    "generation,best_uar,median_uar,best_n_selected,front_size,evals_cumulative,subordinate_generations_cumulative";

inline std::string trace_to_csv(const RunTrace& trace) {
    std::ostringstream out;
    out << kTraceCsvHeader << '\n';
    for (const auto& r : trace.records)
        out << r.generation << ',' << format_double(r.best_uar) << ',' << format_double(r.median_uar) << ','
            << r.best_n_selected << ',' << r.front_size << ',' << r.evals_cumulative << ','
            << r.subordinate_generations_cumulative << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// Replications

struct ReplicationSummary {
    std::vector<FrontMember> representatives;
    std::vector<double> r1hat;
    double median_r1hat = 0.0;
    double std_r1hat = 0.0;
    double median_uar = 0.0;
    double std_uar = 0.0;
    double median_n_selected = 0.0;
    double std_n_selected = 0.0;
};

/// Picks each run's R-hat-1 representative and aggregates medians and sample
/// standard deviations across runs. Fronts must carry test UAR.
inline ReplicationSummary summarize_replications(const std::vector<ParetoFront>& runs) {
    if (runs.empty()) throw Error("no replications to summarize");
    ReplicationSummary s;
    std::vector<double> uars, sizes;
    for (const auto& front : runs) {
        const auto rep = representative_r1hat(front);
        const auto& m = front.members[rep.index];
        s.representatives.push_back(m);
        s.r1hat.push_back(rep.score);
        uars.push_back(*m.test_uar);
        sizes.push_back(static_cast<double>(m.chromosome.count()));
    }
    s.median_r1hat = median(s.r1hat);
    s.std_r1hat = sample_stddev(s.r1hat);
    s.median_uar = median(uars);
    s.std_uar = sample_stddev(uars);
    s.median_n_selected = median(sizes);
    s.std_n_selected = sample_stddev(sizes);
    return s;
}

inline nlohmann::json summary_to_json(const ReplicationSummary& s, const std::vector<std::uint64_t>& seeds = {}) {
    nlohmann::json runs = nlohmann::json::array();
    for (std::size_t i = 0; i < s.representatives.size(); ++i) {
        const auto& m = s.representatives[i];
        nlohmann::json r{{"replication", i},
                         {"r1hat", s.r1hat[i]},
                         {"uar_test", *m.test_uar},
                         {"uar_validation", m.objectives.uar},
                         {"n_selected", m.chromosome.count()},
                         {"bitmask", m.chromosome.to_hex()}};
        if (i < seeds.size()) r["seed"] = seeds[i];
        runs.push_back(std::move(r));
    }
    return {{"median_r1hat", s.median_r1hat},
            {"std_r1hat", s.std_r1hat},
            {"median_uar", s.median_uar},
            {"median_n_selected", s.median_n_selected},
            {"runs", std::move(runs)}};
}

}  // namespace moeliga
