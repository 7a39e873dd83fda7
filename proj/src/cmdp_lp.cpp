#include "rbmle/cmdp_lp.hpp"

#include <algorithm>
#include <cmath>

#include "rbmle/markov.hpp"

namespace rbmle {

namespace {

void check_shapes(std::span<const Kernel> thetas, std::span<const double> reward,
                  std::span<const double> cost) {
    if (thetas.empty()) throw ModelError("solve_cmdp: no kernels supplied");
    const std::size_t ns = thetas[0].num_states();
    const std::size_t na = thetas[0].num_actions();
    for (const auto& k : thetas) {
        if (k.num_states() != ns || k.num_actions() != na) {
            throw ModelError("solve_cmdp: kernels disagree in shape");
        }
    }
    if (reward.size() != ns * na || cost.size() != ns * na) {
        throw ModelError("solve_cmdp: reward/cost shape does not match kernel");
    }
}

// Flow balance (one row per state) and normalization; objective and cost rows left to the caller.
LinearProgram base_program(std::span<const Kernel> thetas) {
    const std::size_t ns = thetas[0].num_states();
    const std::size_t na = thetas[0].num_actions();
    const std::size_t nt = thetas.size();
    LinearProgram lp(ns * na * nt);
    for (std::size_t x = 0; x < ns; ++x) {
        std::vector<double> row(lp.num_vars, 0.0);
        for (std::size_t y = 0; y < ns; ++y) {
            for (std::size_t v = 0; v < na; ++v) {
                for (std::size_t t = 0; t < nt; ++t) {
                    const std::size_t j = (y * na + v) * nt + t;
                    if (y == x) row[j] += 1.0;
                    row[j] -= thetas[t](y, v, x);
                }
            }
        }
        lp.add_eq(std::move(row), 0.0);
    }
    lp.add_eq(std::vector<double>(lp.num_vars, 1.0), 1.0);
    return lp;
}

std::vector<double> expand(std::span<const double> values, std::size_t nt) {
    std::vector<double> out(values.size() * nt);
    for (std::size_t i = 0; i < values.size(); ++i) {
        for (std::size_t t = 0; t < nt; ++t) out[i * nt + t] = values[i];
    }
    return out;
}

}  // namespace

double OccupationMeasure::marginal(std::size_t x, std::size_t u) const {
    double s = 0.0;
    for (std::size_t t = 0; t < num_thetas; ++t) s += (*this)(x, u, t);
    return s;
}

StationaryPolicy extract_policy(const OccupationMeasure& occ) {
    StationaryPolicy pi(occ.num_states, occ.num_actions);
    for (std::size_t x = 0; x < occ.num_states; ++x) {
        double total = 0.0;
        for (std::size_t u = 0; u < occ.num_actions; ++u) total += occ.marginal(x, u);
        for (std::size_t u = 0; u < occ.num_actions; ++u) {
            pi(x, u) = total > 0.0 ? occ.marginal(x, u) / total
                                   : 1.0 / static_cast<double>(occ.num_actions);
        }
    }
    return pi;
}

CmdpSolution solve_extended_cmdp(std::span<const Kernel> thetas, std::span<const double> reward,
                                 std::span<const double> cost, double c_ub) {
    check_shapes(thetas, reward, cost);
    const std::size_t ns = thetas[0].num_states();
    const std::size_t na = thetas[0].num_actions();
    const std::size_t nt = thetas.size();
    const std::vector<double> r = expand(reward, nt);
    const std::vector<double> c = expand(cost, nt);

    CmdpSolution sol;
    SimplexSolver solver;

    // Minimum achievable cost: certificate for infeasibility and a diagnostic otherwise.
    LinearProgram cheapest = base_program(thetas);
    for (std::size_t j = 0; j < cheapest.num_vars; ++j) cheapest.objective[j] = -c[j];
    const LpResult lo = solver.solve(cheapest);
    if (lo.status != LpStatus::optimal) {
        throw LpError(std::string("occupation polytope LP returned ") + to_string(lo.status));
    }
    sol.min_cost = -lo.value;

    LinearProgram lp = base_program(thetas);
    lp.objective = r;
    lp.add_le(c, c_ub);
    const LpResult res = solver.solve(lp);
    if (res.status == LpStatus::unbounded) throw LpError("occupation-measure LP reported unbounded");

    sol.occupation.num_states = ns;
    sol.occupation.num_actions = na;
    sol.occupation.num_thetas = nt;
    if (res.status == LpStatus::infeasible) {
        sol.feasible = false;
        sol.occupation.mu.assign(lp.num_vars, 0.0);
        sol.policy = StationaryPolicy::uniform(ns, na);
        return sol;
    }
    sol.feasible = true;
    sol.optimal_value = res.value;
    sol.occupation.mu = res.x;
    sol.policy = extract_policy(sol.occupation);
    sol.dual_cost_multiplier = res.le_duals.at(0);
    sol.flow_duals = res.eq_duals;
    for (std::size_t j = 0; j < lp.num_vars; ++j) sol.expected_cost += c[j] * res.x[j];
    return sol;
}

CmdpSolution solve_cmdp(const Kernel& theta, std::span<const double> reward,
                        std::span<const double> cost, double c_ub) {
    return solve_extended_cmdp(std::span<const Kernel>(&theta, 1), reward, cost, c_ub);
}

SensitivityConstants sensitivity_constants(const CmdpModel& model,
                                           const StationaryPolicy& feasible_policy, double slack) {
    const double cbar = average_value(feasible_policy, model.kernel, model.cost);
    SensitivityConstants s;
    s.eta = model.cost_budget - slack - cbar;
    if (!(s.eta > 0.0)) {
        throw ModelError("strict feasibility fails: c_ub - slack - cbar(pi_feas) = " + std::to_string(s.eta));
    }
    const auto [lo, hi] = std::minmax_element(model.reward.begin(), model.reward.end());
    s.eta_hat = *hi - *lo;
    s.ratio = s.eta_hat / s.eta;
    return s;
}

SensitivityReport check_sensitivity(const CmdpModel& model, double c_hat,
                                    const SensitivityConstants& constants) {
    SensitivityReport rep;
    rep.constants = constants;
    const CmdpSolution full = solve_cmdp(model.kernel, model.reward, model.cost, model.cost_budget);
    const CmdpSolution pert = solve_cmdp(model.kernel, model.reward, model.cost, c_hat);
    rep.both_feasible = full.feasible && pert.feasible;
    if (!rep.both_feasible) return rep;
    rep.value = full.optimal_value;
    rep.perturbed_value = pert.optimal_value;
    rep.dual = full.dual_cost_multiplier;
    rep.bound = (model.cost_budget - c_hat) * constants.ratio;
    rep.slack = rep.bound - (rep.value - rep.perturbed_value);
    rep.holds = rep.slack >= -1e-9;
    return rep;
}

SensitivityReport check_sensitivity(const CmdpModel& model, double c_hat) {
    // Minimum-cost policy: maximize -c with a vacuous budget.
    std::vector<double> minus_cost(model.cost.size());
    std::transform(model.cost.begin(), model.cost.end(), minus_cost.begin(), [](double v) { return -v; });
    LinearProgram lp = base_program(std::span<const Kernel>(&model.kernel, 1));
    lp.objective = minus_cost;
    const LpResult res = solve_lp(lp);
    if (res.status != LpStatus::optimal) throw LpError("minimum-cost LP failed");
    OccupationMeasure occ{model.num_states, model.num_actions, 1, res.x};
    const StationaryPolicy pi_feas = extract_policy(occ);
    return check_sensitivity(model, c_hat,
                             sensitivity_constants(model, pi_feas, model.cost_budget - c_hat));
}

void to_json(nlohmann::json& j, const CmdpSolution& s) {
    j = nlohmann::json{{"value", s.optimal_value},
                       {"policy", s.policy},
                       {"dual", s.dual_cost_multiplier},
                       {"feasible", s.feasible}};
}

}  // namespace rbmle
