#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbmle/estimation.hpp"
#include "rbmle/model.hpp"
#include "rbmle/param_space.hpp"
#include "rbmle/rng.hpp"

namespace rbmle {

struct BiasSchedule {
    double a = 1.0;
    double b = kDefaultB;
    std::size_t num_states = 1;
    std::size_t num_actions = 1;
};

/// a * log(t^b |X|^2 |U|)
double alpha(double t, const BiasSchedule& schedule);

enum class Verdict { pass, fail, unverifiable };
const char* to_string(Verdict v);

struct BiasCheck {
    Verdict b_condition = Verdict::fail;       // b > 2
    Verdict a_condition = Verdict::unverifiable;  // a > |X|^3|U| / (2 p_min D)
    double a_threshold = 0.0;
    Verdict a_beta_condition = Verdict::unverifiable;  // a > |X|^2|U| / (2 (1-beta) D p_min)
    double a_beta_threshold = 0.0;
};

BiasCheck validate_bias(const BiasSchedule& schedule, double p_min, std::optional<double> delta_min,
                        double beta = 0.5);

/// Twice the a-threshold above.
double default_bias_scale(std::size_t num_states, std::size_t num_actions, double p_min, double delta_min);

/// sqrt(.5 (1 + 1/a)) + 1/sqrt(a)
double g_of_a(double a);

/// Episode k >= 1 starts at tau_k = 2^k - 1 (time origin t = 1) and lasts 2^k steps.
struct Episode {
    std::size_t k = 1;
    std::uint64_t start = 1;
    std::uint64_t length = 2;
};

Episode episode(std::size_t k);
/// Episode containing step t >= 1.
std::size_t episode_of(std::uint64_t t);
/// Number of episodes that intersect [1, T]: floor(log2(T + 1)).
std::size_t episode_count(std::uint64_t horizon);

/// Per-net-point CMDP optimum; independent of the counts, so computed once.
struct NetValues {
    std::vector<double> value;
    std::vector<StationaryPolicy> policy;
    std::vector<char> feasible;
};

/// One occupation-measure LP per net point, split across `threads` workers.
NetValues compute_net_values(const ThetaNet& net, std::span<const double> reward,
                             std::span<const double> cost, double c_ub, unsigned threads = 1);

/// No net point admits a feasible CMDP with finite likelihood.
class NoFeasibleTheta : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct AgentDecision {
    std::size_t theta_index = 0;
    Kernel theta;
    StationaryPolicy policy;
    double objective = 0.0;
};

/// Per row and lattice choice: n(x,u) * KL(p_hat(x,u), choice); zero when n = 0.
std::vector<std::vector<double>> weighted_kl_table(const EstimatorState& counts, const ThetaNet& net);

/// argmax over net points of alpha V(theta) - sum n KL(p_hat, theta); lowest index on ties.
AgentDecision select(const EstimatorState& counts, const ThetaNet& net, const NetValues& values,
                     double alpha_value);

struct IndexReport {
    StationaryPolicy policy;
    double index_value = -kInfinity;
    std::size_t theta_index = 0;  // maximizer, valid when feasible_theta_exists
    bool feasible_theta_exists = false;
};

/// max over net points with cbar(pi, theta) <= c_ub of alpha rbar(theta, pi) - sum n KL.
/// Net points under which pi's chain is not unichain are skipped.
IndexReport policy_index(const StationaryPolicy& policy, const EstimatorState& counts, const ThetaNet& net,
                         double alpha_value, std::span<const double> reward, std::span<const double> cost,
                         double c_ub);

/// Samples u ~ pi(x, .).
std::size_t act(const StationaryPolicy& policy, std::size_t state, Rng& rng);

struct EpisodePlan {
    StationaryPolicy policy;
    std::optional<std::size_t> theta_index;
    double objective = 0.0;
    bool fallback = false;
};

class Agent {
public:
    virtual ~Agent() = default;
    virtual std::string name() const = 0;
    /// Called at tau_k with the counts gathered so far.
    virtual EpisodePlan plan(const EstimatorState& counts, const Episode& ep) = 0;
};

/// Reward-biased agent; a = 0 gives the certainty-equivalence baseline.
class RbmleAgent : public Agent {
public:
    RbmleAgent(std::shared_ptr<const ThetaNet> net, std::shared_ptr<const NetValues> values,
               BiasSchedule schedule, std::string name = "rbmle");

    std::string name() const override { return name_; }
    EpisodePlan plan(const EstimatorState& counts, const Episode& ep) override;

    const BiasSchedule& schedule() const { return schedule_; }

private:
    std::shared_ptr<const ThetaNet> net_;
    std::shared_ptr<const NetValues> values_;
    BiasSchedule schedule_;
    std::string name_;
};

/// Plays the CMDP-optimal policy of the true model. Throws if that CMDP is infeasible.
class OracleAgent : public Agent {
public:
    explicit OracleAgent(const CmdpModel& model);
    std::string name() const override { return "oracle"; }
    EpisodePlan plan(const EstimatorState&, const Episode&) override;

private:
    StationaryPolicy policy_;
    double value_ = 0.0;
};

}  // namespace rbmle
