#pragma once

#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "rbmle/model.hpp"

namespace rbmle {

/// The induced chain has more than one recurrent class, or a hitting time is infinite.
class NotUnichain : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Pivot magnitude below which the stationary system is treated as rank deficient.
inline constexpr double kUnichainRankTol = 1e-9;

std::vector<double> stationary_distribution(const StationaryPolicy& policy, const Kernel& kernel);

/// sum_x mu(x) sum_u pi(x,u) v(x,u)
double average_value(const StationaryPolicy& policy, const Kernel& kernel,
                     std::span<const double> values);

/// Row-major |X| x |X| matrix of E[tau_{x,y}]. The diagonal holds expected
/// first-return times, so every entry is >= 1.
std::vector<double> hitting_times(const StationaryPolicy& policy, const Kernel& kernel);

struct MarkovAnalysis {
    std::vector<double> stationary_dist;
    std::vector<double> hitting_times;
    double avg_reward = 0.0;
    double avg_cost = 0.0;
};

MarkovAnalysis analyze(const StationaryPolicy& policy, const CmdpModel& model);

using PolicyVisitor = std::function<void(const StationaryPolicy&)>;
using PolicyEnumeration = std::function<void(const PolicyVisitor&)>;

PolicyEnumeration enumerate(std::span<const StationaryPolicy> policies);
PolicyEnumeration concat(PolicyEnumeration first, PolicyEnumeration second);

/// All |U|^|X| deterministic policies, in odometer order (state 0 most significant).
std::vector<StationaryPolicy> deterministic_policies(std::size_t num_states, std::size_t num_actions);

struct GapReport {
    double reward_gap = kInfinity;  // R*(p) - best feasible reward within the set
    double cost_gap = kInfinity;    // cheapest infeasible cost - c_ub
    bool has_feasible = false;
    bool has_infeasible = false;  // false => cost_gap is the +inf sentinel
    double optimal_value = 0.0;   // R*(p) from the occupation-measure LP
    double best_feasible_reward = -kInfinity;
};

/// Feasibility slack used when classifying policies against c_ub.
inline constexpr double kFeasibilityTol = 1e-9;

GapReport gaps(const CmdpModel& model, const PolicyEnumeration& policy_set);
GapReport gaps(const CmdpModel& model, std::span<const StationaryPolicy> policy_set);

struct StructureConstants {
    double mixing_time = 0.0;   // T_p
    double conductivity = 0.0;  // kappa_p
    bool degenerate_conductivity = false;  // |X| = 1: empty max taken as 0
    double reward_gap = kInfinity;
    double cost_gap = kInfinity;
    double delta_min = kInfinity;
    bool has_gaps = false;
};

/// T_p and kappa_p as maxima over the supplied enumeration. This is a lower
/// bound on the supremum over all stationary policies.
StructureConstants structure_constants(const CmdpModel& model, const PolicyEnumeration& policies);
StructureConstants structure_constants(const CmdpModel& model,
                                       std::span<const StationaryPolicy> policies);

/// Same, with gaps filled in against `finite_class`.
StructureConstants structure_constants(const CmdpModel& model, const PolicyEnumeration& policies,
                                       const PolicyEnumeration& finite_class);

}  // namespace rbmle
