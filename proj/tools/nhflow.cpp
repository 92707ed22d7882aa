#include <nhflow/experiments.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

namespace ex = nhflow::experiments;

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> replicas;
    std::size_t threads = 1;
    std::string out;
    bool print_config = false;
};

ex::json read_document(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ex::ConfigError("config: cannot open '" + path + "'");
    // load_config reports syntax errors with line and column
    return ex::load_config(path).source;
}

int run(const std::string& experiment, const Options& opt) {
    ex::json doc = opt.config.empty() ? ex::default_document(experiment) : read_document(opt.config);
    if (doc.value("experiment", experiment) != experiment)
        throw ex::ConfigError("config: file describes '" + doc.value("experiment", std::string()) +
                              "', not '" + experiment + "'", "/experiment");
    doc["experiment"] = experiment;
    if (opt.seed) doc["seed"] = *opt.seed;
    if (opt.replicas) doc["replicas"] = *opt.replicas;
    auto cfg = ex::parse_config(doc);
    if (opt.print_config) {
        std::cout << doc.dump(2) << '\n';
        return 0;
    }
    cfg.threads = opt.threads;
    const auto result = ex::run_experiment(cfg);
    const std::string dir = opt.out.empty() ? "results/" + experiment : opt.out;
    ex::write_outputs(result, dir);
    ex::print_report(std::cout, result);
    std::cout << "outputs in " << dir << '\n';
    return result.passed() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo checks of space-time eigenvalue fluctuations for non-Hermitian random matrix flows"};
    app.require_subcommand(1);
    Options opt;
    std::string chosen;
    for (const auto& id : ex::experiment_ids()) {
        auto* sub = app.add_subcommand(id, "run the " + id + " experiment");
        sub->add_option("--config", opt.config, "JSON config file (default: built-in config)");
        sub->add_option("--seed", opt.seed, "base seed, overrides the config");
        sub->add_option("--replicas", opt.replicas, "replica count, overrides the config");
        sub->add_option("--threads", opt.threads, "worker threads (0: all cores)");
        sub->add_option("--out", opt.out, "output directory (default: results/<experiment>)");
        sub->add_flag("--print-config", opt.print_config, "print the effective config document and exit");
        sub->callback([&chosen, id] { chosen = id; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }
    try {
        return run(chosen, opt);
    } catch (const ex::ConfigError& e) {
        std::cerr << "error: " << e.what();
        if (!e.field().empty()) std::cerr << " (field " << e.field() << ')';
        if (e.line()) std::cerr << " (line " << e.line() << ", column " << e.column() << ')';
        std::cerr << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
