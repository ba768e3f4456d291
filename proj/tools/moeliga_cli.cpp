// Command-line front end: run, compare, sweep.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <moeliga/experiment.hpp>

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kRuntimeError = 2 };

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::size_t> threads;
    bool quiet = false;
};

std::size_t default_threads() {
    if (const char* env = std::getenv("MOELIGA_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (...) {
        }
        std::cerr << "ignoring invalid MOELIGA_THREADS='" << env << "'\n";
    }
    return 1;
}

int dispatch(const std::string& command, const Options& opt) {
    moeliga::ExperimentConfig cfg;
    try {
        cfg = moeliga::load_experiment(opt.config);
        if (opt.seed) cfg.seed = *opt.seed;
        if (opt.out_dir) cfg.output_dir = *opt.out_dir;
        cfg.threads = opt.threads ? *opt.threads : (cfg.threads > 0 ? cfg.threads : default_threads());
        if (cfg.threads == 0) cfg.threads = 1;
        if (command == "sweep" && cfg.grid.empty()) throw moeliga::ConfigError("grid", "sweep needs at least one grid axis");
    } catch (const moeliga::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }

    const moeliga::Logger log = opt.quiet ? moeliga::Logger{} : moeliga::Logger{[](const std::string& m) { std::cerr << m << '\n'; }};
    try {
        const std::filesystem::path out = cfg.output_dir;
        if (command == "run") {
            const auto res = moeliga::run_experiment(cfg, out, log);
            if (!opt.quiet)
                std::cout << "median R1hat " << res.summary.median_r1hat << " (std " << res.summary.std_r1hat
                          << "), median test UAR " << res.summary.median_uar << ", median features "
                          << res.summary.median_n_selected << "\n";
        } else if (command == "compare") {
            const auto report = moeliga::run_compare(cfg, out, log);
            if (!opt.quiet) std::cout << report.medians().dump(2) << '\n';
        } else {
            const auto cells = moeliga::run_sweep(cfg, out, log);
            if (!opt.quiet) std::cout << cells.size() << " cells written to " << (out / "sweep.csv").string() << '\n';
        }
    } catch (const moeliga::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-objective genetic feature selection with evolutionary local improvement"};
    app.require_subcommand(1);
    Options opt;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::size_t threads = 0;

    for (const char* name : {"run", "compare", "sweep"}) {
        const char* help = std::string(name) == "run"       ? "Run replications and write fronts, traces and a summary"
                           : std::string(name) == "compare" ? "Compare against MI ranking and forward selection"
                                                            : "Run a hyperparameter grid";
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("config", opt.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Override the experiment seed");
        sub->add_option("--out-dir", out_dir, "Override the output directory");
        sub->add_option("--threads", threads, "Evaluation threads (default: $MOELIGA_THREADS or 1)")->check(CLI::PositiveNumber);
        sub->add_flag("--quiet", opt.quiet, "Suppress progress output");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    const auto* sub = app.get_subcommands().front();
    if (sub->count("--seed")) opt.seed = seed;
    if (sub->count("--out-dir")) opt.out_dir = out_dir;
    if (sub->count("--threads")) opt.threads = threads;
    return dispatch(sub->get_name(), opt);
}
