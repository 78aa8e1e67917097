// sipkit command-line front end.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "sipkit/harness.hpp"

namespace {

int validation_error(const std::string& where, const std::string& message) {
    const sipkit::Json err = {{"status", "validation-error"}, {"where", where}, {"message", message}};
    std::cerr << err.dump() << "\n";
    return sipkit::kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sipkit: coupling, Rosenthal and KMT experiments for stationary sequences"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::optional<std::uint64_t> seed;
    std::optional<int> workers;

    const std::vector<std::pair<std::string, std::string>> runs{
        {"coeffs", "estimate coupling coefficients against analytic bounds"},
        {"rosenthal", "dyadic decomposition and Rosenthal-type checks"},
        {"kmt", "KMT block pipeline and convergence conditions"},
        {"rates", "exponent calculus and feasibility certificates"},
        {"sigma2", "long-run variance estimators"},
        {"compare-bounds", "coupling estimates versus analytic bounds"},
    };
    std::map<std::string, CLI::App*> subs;
    for (const auto& [name, help] : runs) {
        auto* s = app.add_subcommand(name, help);
        s->add_option("--config", config_path, "experiment config (JSON)")->required();
        s->add_option("--seed", seed, "master seed (overrides the config)");
        s->add_option("--workers", workers, "worker threads (overrides the config)")
            ->check(CLI::Range(1, 1024));
        s->add_option("--out", out_dir, "output directory");
        subs[name] = s;
    }
    auto* report = app.add_subcommand("report", "summarize an output directory");
    report->add_option("--out", out_dir, "output directory to read");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : sipkit::kExitValidation;
    }

    if (report->parsed()) {
        std::string text;
        const auto r = sipkit::report_directory(out_dir, text);
        if (!r.error.empty()) return validation_error("/out", r.error);
        std::cout << text;
        return r.exit_code;
    }

    std::string sub;
    for (const auto& [name, s] : subs)
        if (s->parsed()) sub = name;

    sipkit::Json config;
    {
        std::ifstream f(config_path);
        if (!f) return validation_error("", "cannot open config '" + config_path + "'");
        try {
            config = sipkit::Json::parse(f);
        } catch (const sipkit::Json::parse_error& e) {
            return validation_error("", std::string("config is not valid JSON: ") + e.what());
        }
    }
    const auto kind = sipkit::kind_for_subcommand(sub);
    if (!config.is_object()) return validation_error("", "config must be a JSON object");
    if (!config.contains("kind")) config["kind"] = kind;
    if (config["kind"] != kind)
        return validation_error("/kind", "config kind " + config["kind"].dump() +
                                             " does not match subcommand '" + sub + "'");

    sipkit::RunOptions opts;
    opts.seed = seed;
    opts.workers = workers;
    opts.out = out_dir;
    sipkit::RunResult r;
    try {
        r = sipkit::run_experiment(config, opts);
    } catch (const std::exception& e) {
        std::cerr << sipkit::Json{{"status", "runtime-error"}, {"message", e.what()}}.dump() << "\n";
        return sipkit::kExitVerdict;
    }
    if (r.exit_code == sipkit::kExitValidation) {
        std::cerr << r.summary.dump() << "\n";
        return r.exit_code;
    }
    std::size_t pass = 0, total = 0;
    for (const auto& v : r.summary.value("verdicts", sipkit::Json::array())) {
        ++total;
        pass += v.value("holds", false);
    }
    std::cout << kind << ": " << pass << "/" << total << " verdicts hold; artifacts in " << out_dir
              << "\n";
    if (r.exit_code == sipkit::kExitVerdict) {
        if (!r.error.empty()) std::cerr << r.summary.dump() << "\n";
        else std::cerr << "verdict failed at " << r.failing_record << "\n";
    }
    return r.exit_code;
}
