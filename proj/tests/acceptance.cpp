// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <vector>

#include "rbmle/cmdp_lp.hpp"
#include "rbmle/harness.hpp"
#include "rbmle/param_space.hpp"
#include "rbmle/verify.hpp"

namespace fs = std::filesystem;
using namespace rbmle;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string describe(const CheckReport& r) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%zu trials, %zu violations, worst slack %.4g%s%s", r.trials, r.violations,
                  r.worst_slack, r.note.empty() ? "" : "; ", r.note.c_str());
    return buf;
}

Outcome from_report(const CheckReport& r) { return {r.pass() && !r.skipped && r.trials > 0, describe(r)}; }

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("rbmle_acceptance_" + name);
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Mean over seeds of f(trace at time T).
double mean_at(const ExperimentResult& res, std::uint64_t t, const std::function<double(double, double)>& f) {
    double s = 0.0;
    for (const auto& tr : res.traces) s += f(tr.reward_regret()[t - 1], tr.cost_regret()[t - 1]);
    return s / static_cast<double>(res.traces.size());
}

ExperimentResult run_fixture(const CmdpModel& m, const std::string& type, double a, double theta_epsilon,
                             double policy_epsilon, std::size_t initial_state, const std::string& tag) {
    nlohmann::json cfg;
    cfg["model"] = m;
    cfg["agent"] = {{"type", type}, {"a", a}, {"theta_epsilon", theta_epsilon}};
    cfg["policy_epsilon"] = policy_epsilon;
    cfg["horizon"] = 16384;
    cfg["num_seeds"] = 20;
    cfg["initial_state"] = initial_state;
    cfg["output_dir"] = scratch(tag).string();
    return run_experiment(parse_config(cfg));
}

constexpr std::uint64_t kGrowthTimes[3] = {1024, 4096, 16384};
constexpr double kBias = 50.0;

// max <= 2 min over the three horizons; all values must be >= 0.
bool within_factor_two(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo >= 0.0 && *hi <= 2.0 * *lo;
}

Outcome growth(const CmdpModel& m, double theta_epsilon, const std::string& tag) {
    const ExperimentResult res = run_fixture(m, "rbmle", kBias, theta_epsilon, 1.0, 0, tag);
    if (res.failures) return {false, tag + ": seed failures"};
    std::vector<double> rr, rc;
    for (auto t : kGrowthTimes) {
        const double lt = std::log(static_cast<double>(t));
        rr.push_back(mean_at(res, t, [](double r, double) { return r; }) / lt);
        rc.push_back(mean_at(res, t, [](double, double c) { return std::max(0.0, c); }) / lt);
    }
    const bool ok = within_factor_two(rr) && within_factor_two(rc);
    char buf[256];
    std::snprintf(buf, sizeof buf, " Rr/logT=[%.3f %.3f %.3f] max(0,Rc)/logT=[%.3f %.3f %.3f];", rr[0], rr[1], rr[2],
                  rc[0], rc[1], rc[2]);
    return {ok, tag + buf};
}

Outcome criterion_regret() {
    const Outcome two = growth(fixture_two_state(), 0.1, "two_state");
    const Outcome three = growth(fixture_three_state(), 0.25, "three_state");

    const CmdpModel trap = fixture_ce_trap();
    const ExperimentResult ce = run_fixture(trap, "ce", 0.0, 0.1, 1.0, 1, "trap_ce");
    const ExperimentResult rb = run_fixture(trap, "rbmle", kBias, 0.1, 1.0, 1, "trap_rbmle");
    std::vector<double> ce_rate, ce_lo;
    for (auto t : kGrowthTimes) {
        double s = 0.0, s2 = 0.0;
        for (const auto& tr : ce.traces) {
            const double v = tr.reward_regret()[t - 1] / static_cast<double>(t);
            s += v;
            s2 += v * v;
        }
        const double n = static_cast<double>(ce.traces.size());
        const double mean = s / n;
        const double sd = std::sqrt(std::max(0.0, s2 / n - mean * mean) * n / (n - 1.0));
        ce_rate.push_back(mean);
        ce_lo.push_back(mean - 1.96 * sd / std::sqrt(n));
    }
    const double rb_rate = mean_at(rb, 16384, [](double r, double) { return r; }) / 16384.0;
    // Bounded away from zero: every 95% lower bound is positive and the rate at 2^14 keeps at least half its 2^10 level.
    const bool ce_stuck = std::all_of(ce_lo.begin(), ce_lo.end(), [](double v) { return v > 0.0; }) &&
                          ce_rate[2] >= 0.5 * ce_rate[0];
    const bool ratio_ok = rb_rate <= ce_rate[2] / 3.0;
    char buf[256];
    std::snprintf(buf, sizeof buf, " ce_trap: CE Rr/T=[%.4f %.4f %.4f] RBMLE Rr/T(2^14)=%.4f", ce_rate[0], ce_rate[1],
                  ce_rate[2], rb_rate);
    return {two.pass && three.pass && ce_stuck && ratio_ok, two.detail + " " + three.detail + buf};
}

// Informational only: the same growth check with Pi_F at resolution 0.1, where Delta_min,c is tiny.
void regret_fine_grid_info() {
    for (int which = 0; which < 2; ++which) {
        const CmdpModel m = which == 0 ? fixture_two_state() : fixture_three_state();
        const ExperimentResult res =
            run_fixture(m, "rbmle", kBias, which == 0 ? 0.1 : 0.25, 0.1, 0, which == 0 ? "info2" : "info3");
        std::printf("  info: %s policy_epsilon=0.1 Delta_min,c=%.4g max(0,Rc)/logT=", which == 0 ? "two_state" : "three_state",
                    res.benchmark.cost_gap);
        for (auto t : kGrowthTimes) {
            std::printf("%.3f ", mean_at(res, t, [](double, double c) { return std::max(0.0, c); }) /
                                     std::log(static_cast<double>(t)));
        }
        std::printf("\n");
    }
}

Outcome criterion_determinism() {
    const CmdpModel m = fixture_three_state();
    std::vector<fs::path> dirs;
    for (int run = 0; run < 2; ++run) {
        nlohmann::json cfg;
        cfg["model"] = m;
        cfg["agent"] = {{"type", "rbmle"}, {"a", 5.0}, {"theta_epsilon", 0.25}};
        cfg["horizon"] = 4096;
        cfg["seeds"] = {3, 11};
        cfg["threads"] = run == 0 ? 1 : 2;
        cfg["output_dir"] = scratch("det" + std::to_string(run)).string();
        run_experiment(parse_config(cfg));
        dirs.push_back(cfg["output_dir"].get<std::string>());
    }
    std::size_t compared = 0;
    bool same = true;
    for (const char* f : {"traces/seed_3.jsonl", "traces/seed_11.jsonl", "summary.csv"}) {
        const std::string a = slurp(dirs[0] / f), b = slurp(dirs[1] / f);
        same = same && !a.empty() && a == b;
        ++compared;
    }
    return {same, std::to_string(compared) + " files compared byte for byte across two runs"};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double limit_seconds;  // 0 = no limit
        std::function<Outcome()> run;
    };
    const std::uint64_t seed = 2024;
    const std::vector<Criterion> criteria{
        {"1 lp_vs_brute_force", 120.0, [&] { return from_report(check_lp_vs_brute_force(50, 2, 1e-3, 2e-3, seed)); }},
        {"2 sensitivity_bound", 60.0, [&] { return from_report(check_sensitivity_suite(100, 0.05, seed)); }},
        {"3 lagrange_bound", 0.0, [&] { return from_report(check_lagrange_suite(100, 0.05, seed)); }},
        {"4 confidence_coverage", 180.0,
         [&] { return from_report(check_confidence_coverage(fixture_two_state(), 3.0, {64, 256, 1024}, 200, seed)); }},
        {"5 cho_meyer", 0.0, [&] { return from_report(check_cho_meyer(1000, 0.1, seed)); }},
        {"6 index_separation", 0.0,
         [&] {
             const CmdpModel m = fixture_two_state();
             const ThetaNet net =
                 build_theta_net(ParameterSpace::from_kernel(m.kernel, smallest_transition(m.kernel)), 0.1);
             return from_report(check_index_separation(m, net, 10.0, 100, seed));
         }},
        {"7 regret_growth", 1200.0, criterion_regret},
        {"8 discretization_error", 0.0,
         [&] { return from_report(check_discretization(20, {0.5, 0.25, 0.125}, 0.05, seed)); }},
        {"9 determinism", 0.0, criterion_determinism},
    };

    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = c.limit_seconds == 0.0 || secs <= c.limit_seconds;
        const bool pass = o.pass && in_time;
        if (!pass) ++failed;
        std::printf("%s criterion %s (%.1fs%s): %s\n", pass ? "PASS" : "FAIL", c.name, secs,
                    in_time ? "" : ", over time limit", o.detail.c_str());
        std::fflush(stdout);
        if (std::string(c.name) == "7 regret_growth") regret_fine_grid_info();
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
