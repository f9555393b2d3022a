// SPDX-License-Identifier: Apache-2.0
// jsdm <experiment> --config <path> --out <dir> [--seed S] [--trials T]
// jsdm validate --config <path>
#include "jsdm/experiments.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

namespace {

constexpr int kConfigError = 2;
constexpr int kNumericalFailure = 3;

void print_issues(const jsdm::ConfigErrors& e)
{
    std::cerr << "config errors:\n";
    for (const auto& i : e.issues())
        std::cerr << "  [" << jsdm::issue_kind_name(i.kind) << "] " << i.key << ": " << i.message << "\n";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"JSDM downlink simulator"};
    std::string experiment, config_path, out_dir = "results";
    std::string seed, trials;
    auto names = jsdm::experiment_names();
    names.push_back("validate");
    app.add_option("experiment", experiment, "experiment to run, or 'validate'")
        ->required()
        ->check(CLI::IsMember(names));
    app.add_option("--config", config_path, "key = value configuration file")->required();
    app.add_option("--out", out_dir, "output root directory");
    app.add_option("--seed", seed, "overrides the config seed");
    app.add_option("--trials", trials, "overrides the config trial count");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kConfigError;
    }

    std::map<std::string, std::string> overrides;
    if (experiment != "validate")
        overrides["experiment"] = experiment;
    if (!seed.empty())
        overrides["seed"] = seed;
    if (!trials.empty())
        overrides["trials"] = trials;

    try {
        const jsdm::ExperimentConfig cfg = jsdm::validate_config(config_path, overrides);
        if (experiment == "validate") {
            std::cout << cfg.normalized();
            for (const auto& k : cfg.defaulted())
                std::cout << "# default " << k << " = " << cfg.get(k) << "\n";
            std::cout << "# config_hash = " << cfg.hash_hex() << "\n";
            return 0;
        }
        for (const auto& k : cfg.defaulted())
            std::cerr << "default " << k << " = " << cfg.get(k) << "\n";
        const jsdm::ResultTable table = jsdm::run_experiment(cfg);
        const std::string dir = jsdm::write_results(cfg, table, out_dir);
        std::cout << dir << "\n";
        return 0;
    } catch (const jsdm::ConfigErrors& e) {
        print_issues(e);
        return kConfigError;
    } catch (const jsdm::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const jsdm::InvalidParameter& e) {
        std::cerr << "invalid parameter: " << e.what() << "\n";
        return kConfigError;
    } catch (const jsdm::NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const jsdm::Infeasible& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kNumericalFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
