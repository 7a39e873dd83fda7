#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rbmle/agent.hpp"
#include "rbmle/model.hpp"

namespace rbmle {

/// Benchmarks fixed once per model: r* from the LP and the cost gap over Pi_F.
struct Benchmark {
    double r_star = 0.0;
    double c_ub = 0.0;
    double cost_gap = 0.0;  // Delta_min,c over Pi_F; 0 when Pi_F has no infeasible member
    bool cost_gap_finite = false;
    double c_tilde = 0.0;  // c_ub + cost_gap
    double policy_epsilon = 0.0;
    double best_grid_reward = -kInfinity;  // best feasible Pi_F reward, the alternative benchmark
};

Benchmark compute_benchmark(const CmdpModel& model, double policy_epsilon,
                            std::size_t max_class_size = 2'000'000);

struct StepRecord {
    std::uint64_t t = 0;
    std::size_t x = 0;
    std::size_t u = 0;
    double r = 0.0;
    double c = 0.0;
    std::size_t episode = 0;
};

struct EpisodeRecord {
    std::size_t k = 0;
    std::uint64_t start = 0;
    std::uint64_t length = 0;  // nominal 2^k
    std::uint64_t played = 0;  // steps inside the horizon
    std::optional<std::size_t> theta_index;
    double objective = 0.0;
    bool fallback = false;
    std::vector<std::uint64_t> visits;  // per (x,u) within the episode
};

struct RegretTrace {
    std::uint64_t horizon = 0;
    std::uint64_t seed = 0;
    std::string agent;
    Benchmark benchmark;
    std::vector<StepRecord> steps;
    std::vector<EpisodeRecord> episodes;

    /// R_r(t) = r* t - sum_{s<=t} r(s), for t = 1..T at index t-1.
    std::vector<double> reward_regret() const;
    /// R_c(t) = sum_{s<=t} c(s) - t c_tilde.
    std::vector<double> cost_regret() const;
    /// Per-episode contributions; they sum to R_r(T) and R_c(T).
    std::vector<double> episode_reward_regret() const;
    std::vector<double> episode_cost_regret() const;
};

/// Runs `agent` for `horizon` steps on the true model from `initial_state`.
RegretTrace simulate(const CmdpModel& model, Agent& agent, std::uint64_t horizon, std::uint64_t seed,
                     const Benchmark& benchmark, std::size_t initial_state = 0);

struct AgentConfig {
    std::string type = "rbmle";  // rbmle | ce | oracle
    std::optional<double> a;
    double b = kDefaultB;
    double theta_epsilon = 0.25;
    bool enforce_p_min = false;
    std::optional<double> p_min;  // defaults to the smallest nonzero true transition probability
    std::string fallback = "uniform";
};

struct ExperimentConfig {
    nlohmann::json raw;
    CmdpModel model;
    AgentConfig agent;
    double policy_epsilon = 0.1;
    std::size_t max_net_size = kDefaultMaxNetSize;
    std::uint64_t horizon = 1024;
    std::vector<std::uint64_t> seeds{0};
    std::size_t initial_state = 0;
    std::filesystem::path output_dir = "out";
    unsigned threads = 1;
};

/// Relative model_file and output_dir entries resolve against base_dir.
ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = ".");
ExperimentConfig load_config(const std::filesystem::path& path);

/// Shared per-experiment state: the net and its LP values are built once for all seeds.
class AgentFactory {
public:
    explicit AgentFactory(const ExperimentConfig& config);
    std::unique_ptr<Agent> make() const;
    double bias_scale() const { return schedule_.a; }
    std::size_t net_size() const { return net_ ? net_->size() : 0; }

private:
    std::string type_;
    CmdpModel model_;
    BiasSchedule schedule_;
    std::shared_ptr<const ThetaNet> net_;
    std::shared_ptr<const NetValues> values_;
};

/// Smallest nonzero kernel entry.
double smallest_transition(const Kernel& kernel);

struct SeedOutcome {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double final_reward_regret = 0.0;
    double final_cost_regret = 0.0;
    std::size_t fallback_episodes = 0;
};

struct ExperimentResult {
    Benchmark benchmark;
    std::vector<SeedOutcome> seeds;
    std::vector<RegretTrace> traces;  // successful seeds only, in seed order
    std::size_t failures = 0;
};

/// Log-spaced grid: powers of two up to T, plus T.
std::vector<std::uint64_t> time_grid(std::uint64_t horizon);

struct SummaryRow {
    std::uint64_t t = 0;
    double mean_rr = 0.0, lo_rr = 0.0, hi_rr = 0.0;
    double mean_rc = 0.0, lo_rc = 0.0, hi_rc = 0.0;
};

/// Mean and mean +- 1.96 sd / sqrt(n) across runs; series[i][t-1] holds run i at time t.
std::vector<SummaryRow> summarize(const std::vector<std::vector<double>>& reward_regret,
                                  const std::vector<std::vector<double>>& cost_regret, std::uint64_t horizon);

void write_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path);
void write_trace_jsonl(const RegretTrace& trace, const std::filesystem::path& path);

/// Runs all seeds and writes traces/seed_<s>.jsonl, summary.csv and manifest.json under output_dir.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// One run per value with the parameter at `path` (dotted or JSON pointer) replaced;
/// outputs go to <output_dir>/<param>=<value>. Returns the number of runs where every seed failed.
std::size_t sweep(const nlohmann::json& config, const std::filesystem::path& base_dir, const std::string& path,
                  const std::vector<std::string>& values);

/// Rebuilds summary rows from trace files (a .jsonl file or a directory of them),
/// using r* and c_tilde from the manifest.
std::vector<SummaryRow> plot_data(const std::filesystem::path& traces, const std::filesystem::path& manifest);

}  // namespace rbmle
