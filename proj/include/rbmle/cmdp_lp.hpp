#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <json.hpp>

#include "rbmle/model.hpp"
#include "rbmle/simplex.hpp"

namespace rbmle {

/// Weights mu(x,u,theta) stored at ((x * |U| + u) * num_thetas + theta).
struct OccupationMeasure {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    std::size_t num_thetas = 1;
    std::vector<double> mu;

    double operator()(std::size_t x, std::size_t u, std::size_t theta = 0) const {
        return mu[(x * num_actions + u) * num_thetas + theta];
    }
    /// Sum over theta.
    double marginal(std::size_t x, std::size_t u) const;
};

struct CmdpSolution {
    bool feasible = false;
    double optimal_value = 0.0;
    OccupationMeasure occupation;
    StationaryPolicy policy;
    double dual_cost_multiplier = 0.0;  // lambda* on the cost row
    std::vector<double> flow_duals;     // per-state balance rows, then normalization
    double expected_cost = 0.0;         // sum mu c at the optimum
    double min_cost = 0.0;              // smallest achievable average cost; the certificate when infeasible
};

/// Occupation-measure LP: maximize sum mu r s.t. flow balance, sum mu = 1, sum mu c <= c_ub.
CmdpSolution solve_cmdp(const Kernel& theta, std::span<const double> reward,
                        std::span<const double> cost, double c_ub);

/// Joint LP over (x, u, theta) where theta ranges over `thetas`; each (u, theta) is an
/// extended action with kernel theta(x, u, .). The policy is the theta-marginal.
CmdpSolution solve_extended_cmdp(std::span<const Kernel> thetas, std::span<const double> reward,
                                 std::span<const double> cost, double c_ub);

/// Policy pi(x,u) = m(x,u) / sum_v m(x,v); rows with zero mass become uniform.
StationaryPolicy extract_policy(const OccupationMeasure& occupation);

struct SensitivityConstants {
    double eta = 0.0;      // c_ub - slack - cbar(pi_feas)
    double eta_hat = 0.0;  // max r - min r
    double ratio = 0.0;    // eta_hat / eta
};

/// Throws ModelError unless cbar(feasible_policy) < c_ub - slack.
SensitivityConstants sensitivity_constants(const CmdpModel& model,
                                           const StationaryPolicy& feasible_policy, double slack);

struct SensitivityReport {
    double value = 0.0;            // r*(c_ub)
    double perturbed_value = 0.0;  // r*(c_hat)
    double bound = 0.0;            // (c_ub - c_hat) * eta_hat / eta
    double slack = 0.0;            // bound - (value - perturbed_value)
    double dual = 0.0;             // lambda* at c_ub
    bool both_feasible = false;
    bool holds = false;  // only meaningful when both_feasible
    SensitivityConstants constants;
};

/// Compares r*(c_ub) against r*(c_hat) under explicitly supplied constants.
SensitivityReport check_sensitivity(const CmdpModel& model, double c_hat,
                                    const SensitivityConstants& constants);

/// As above with pi_feas the minimum-cost policy and slack c_ub - c_hat, so that
/// eta = c_hat - min cost. Requires c_hat above the minimum achievable cost.
SensitivityReport check_sensitivity(const CmdpModel& model, double c_hat);

void to_json(nlohmann::json& j, const CmdpSolution& s);

}  // namespace rbmle
