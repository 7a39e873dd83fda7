#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "rbmle/harness.hpp"
#include "rbmle/verify.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
    CLI::App app{"RBMLE for average-reward constrained MDPs"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
    std::string run_config;
    run->add_option("config", run_config, "config file")->required()->check(CLI::ExistingFile);

    auto* sw = app.add_subcommand("sweep", "run a config once per parameter value");
    std::string sweep_config, param;
    std::vector<std::string> values;
    sw->add_option("config", sweep_config, "config file")->required()->check(CLI::ExistingFile);
    sw->add_option("--param", param, "dotted key or JSON pointer, e.g. agent.a")->required();
    sw->add_option("--values", values, "values to substitute")->required()->delimiter(',');

    auto* ver = app.add_subcommand("verify", "run the property-check suites");
    std::string suite = "all";
    std::uint64_t seed = 0;
    ver->add_option("--suite", suite, "core, lp, estimation, index, regret or all");
    ver->add_option("--seed", seed, "base seed");

    auto* plot = app.add_subcommand("plot-data", "rebuild the regret summary CSV from traces");
    std::string traces, out, manifest;
    plot->add_option("traces", traces, "trace file or directory")->required()->check(CLI::ExistingPath);
    plot->add_option("--out", out, "output CSV")->required();
    plot->add_option("--manifest", manifest, "manifest.json (default: next to the traces directory)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const auto cfg = rbmle::load_config(run_config);
            const auto res = rbmle::run_experiment(cfg);
            for (const auto& s : res.seeds) {
                if (s.ok) {
                    std::printf("seed %llu: R_r(T)=%.6g R_c(T)=%.6g fallback_episodes=%zu\n",
                                static_cast<unsigned long long>(s.seed), s.final_reward_regret, s.final_cost_regret,
                                s.fallback_episodes);
                } else {
                    std::printf("seed %llu: failed: %s\n", static_cast<unsigned long long>(s.seed), s.error.c_str());
                }
            }
            std::printf("outputs in %s\n", cfg.output_dir.string().c_str());
            return res.failures == res.seeds.size() ? 1 : 0;
        }
        if (*sw) {
            std::ifstream in(sweep_config);
            const auto j = nlohmann::json::parse(in);
            const fs::path base = fs::path(sweep_config).parent_path();
            const std::size_t failed = rbmle::sweep(j, base.empty() ? fs::path(".") : base, param, values);
            return failed == values.size() ? 1 : 0;
        }
        if (*ver) {
            const auto reports = rbmle::run_suite(suite, seed);
            std::cout << rbmle::format_reports(reports);
            for (const auto& r : reports) {
                if (!r.pass()) return 1;
            }
            return 0;
        }
        if (*plot) {
            fs::path m = manifest;
            if (m.empty()) {
                const fs::path t = fs::absolute(traces);
                const fs::path dir = fs::is_directory(t) ? t : t.parent_path();
                m = dir.parent_path() / "manifest.json";
            }
            rbmle::write_summary_csv(rbmle::plot_data(traces, m), out);
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
