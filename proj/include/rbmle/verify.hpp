#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "rbmle/model.hpp"
#include "rbmle/param_space.hpp"
#include "rbmle/rng.hpp"

namespace rbmle {

struct CheckReport {
    std::string name;
    std::size_t trials = 0;
    std::size_t violations = 0;
    double worst_slack = kInfinity;  // smallest (bound - observed); negative means a violation
    bool skipped = false;            // precondition not met, nothing asserted
    std::string note;

    bool pass() const { return violations == 0; }
};

/// Fixture models shared by the verify suites, the tests and the example configs.
CmdpModel fixture_two_state();
CmdpModel fixture_three_state();
/// Two states; action 1 in state 0 is the only route to the rewarding state and
/// its lowest-index lattice row is pessimistic, so zero-bias planning never tries it.
CmdpModel fixture_ce_trap();

/// Random model with every kernel entry >= min_prob and rewards/costs uniform on [0,1].
CmdpModel random_model(Rng& rng, std::size_t num_states, std::size_t num_actions, double min_prob);

/// Random model with c_ub at least `margin` above the smallest achievable cost
/// and below the largest, so the budget can bind.
CmdpModel random_strictly_feasible_model(Rng& rng, std::size_t num_states, std::size_t num_actions,
                                         double min_prob, double margin);

/// Max of rbar over the randomized-policy lattice with spacing `resolution`
/// subject to cbar <= c_ub; -inf if no grid policy is feasible. Uses its own
/// linear algebra and enumeration. Throws ModelError above max_policies.
double brute_force_cmdp(const CmdpModel& model, double resolution, std::size_t max_policies = 2'000'000);

/// solve_cmdp against the stationary distribution obtained by power iteration.
CheckReport check_stationary(std::size_t trials, std::uint64_t seed);

/// solve_cmdp against brute_force_cmdp on random strictly feasible models.
CheckReport check_lp_vs_brute_force(std::size_t models, std::size_t num_states, double resolution,
                                    double tolerance, std::uint64_t seed);

/// |rbar(theta,pi) - rbar(p,pi)| < eps (and the cost analogue) for |theta - p| < eps / (kappa |X|^2).
CheckReport check_cho_meyer(std::size_t trials, double epsilon, std::uint64_t seed);

/// Adversarial 2-state search with the perturbation 10x the admissible size; passes
/// when some case exceeds eps, i.e. the check above can detect violations.
CheckReport check_cho_meyer_power(double epsilon);

/// Empirical P(p in C(t)) under uniform exploration against 1 - 2/(t^(2b-1)|X|^2|U|) - 2 stderr.
CheckReport check_confidence_coverage(const CmdpModel& model, double b, const std::vector<std::uint64_t>& times,
                                      std::size_t seeds, std::uint64_t seed);

/// Per-entry failure rate of |p - p_hat| <= d1 against 2/(t^b |X|^2 |U|)^2 plus 2 stderr.
CheckReport check_entry_failure_rate(const CmdpModel& model, double b, const std::vector<std::uint64_t>& times,
                                     std::size_t seeds, std::uint64_t seed);

/// f(x) = x - 2 sqrt(a1 x) - 2 a0: f(a1) < 0, f(11 a0) > 0, f increasing past a1.
/// Skipped unless a0 > a1 > 0.
CheckReport check_f_crossing(double a0, double a1);

/// Synthesizes counts n = visit_multiplier * alpha / c^2 from the true kernel and checks
/// I(suboptimal) < I(pi*) and I(infeasible with cost margin) < I(pi*) on every resample.
/// The true kernel must be a net point. Skipped when visit_multiplier <= 1.
struct IndexSeparationSetup {
    double policy_epsilon = 0.1;  // Pi_F resolution for the gap and the candidate policies
    double beta = 0.5;
    double bias_multiplier = 2.0;  // a = multiplier * |X|^3|U| / (2 p_min Delta_min)
    std::size_t episode_k = 12;    // alpha evaluated at tau_k
};
CheckReport check_index_separation(const CmdpModel& model, const ThetaNet& net, double visit_multiplier,
                                   std::size_t resamples, std::uint64_t seed, const IndexSeparationSetup& setup = {});

/// r*(c_ub) - r*(c_ub - drop) <= drop * eta_hat / eta, with pi_feas the min-cost policy and slack `drop`.
CheckReport check_sensitivity_suite(std::size_t trials, double drop, std::uint64_t seed);
/// lambda* <= eta_hat / eta on the same instances.
CheckReport check_lagrange_suite(std::size_t trials, double drop, std::uint64_t seed);

/// r* - best feasible Pi_F reward <= kappa |X|^2 (1 + eta_hat/eta) eps on random 2-state models.
CheckReport check_discretization(std::size_t instances, const std::vector<double>& epsilons, double slack,
                                 std::uint64_t seed);

/// Trace-level invariants of short RBMLE runs: episode count, telescoping of episodic regret,
/// selection-time cost feasibility and index dominance over deterministic policies.
CheckReport check_regret_invariants(const CmdpModel& model, std::uint64_t horizon, std::size_t seeds, double a,
                                    double theta_epsilon);

/// Suites: core, lp, estimation, index, regret, all.
std::vector<CheckReport> run_suite(const std::string& name, std::uint64_t seed = 0);
std::vector<std::string> suite_names();

std::string format_reports(const std::vector<CheckReport>& reports);

}  // namespace rbmle
