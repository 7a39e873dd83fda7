#include "rbmle/markov.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

#include "rbmle/cmdp_lp.hpp"

namespace rbmle {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

bool rank_deficient(const Eigen::PartialPivLU<Matrix>& lu) {
    return lu.matrixLU().diagonal().cwiseAbs().minCoeff() < kUnichainRankTol;
}

}  // namespace

std::vector<double> stationary_distribution(const StationaryPolicy& policy, const Kernel& kernel) {
    const auto n = static_cast<Eigen::Index>(kernel.num_states());
    const std::vector<double> chain = induced_chain(policy, kernel);

    // (I - P)^T mu = 0 with the last equation replaced by sum(mu) = 1.
    Matrix a(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            a(i, j) = (i == j ? 1.0 : 0.0) - chain[static_cast<std::size_t>(j * n + i)];
        }
    }
    a.row(n - 1).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    rhs(n - 1) = 1.0;

    Eigen::PartialPivLU<Matrix> lu(a);
    if (rank_deficient(lu)) throw NotUnichain("stationary system is singular: chain is not unichain");
    Eigen::VectorXd mu = lu.solve(rhs);

    std::vector<double> out(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (mu(i) < -1e-9) throw NotUnichain("stationary solution has negative mass");
        out[static_cast<std::size_t>(i)] = std::max(0.0, mu(i));
        sum += out[static_cast<std::size_t>(i)];
    }
    for (double& v : out) v /= sum;
    return out;
}

double average_value(const StationaryPolicy& policy, const Kernel& kernel,
                     std::span<const double> values) {
    const std::vector<double> mu = stationary_distribution(policy, kernel);
    const std::vector<double> per_state = induced_values(policy, values);
    double acc = 0.0;
    for (std::size_t x = 0; x < mu.size(); ++x) acc += mu[x] * per_state[x];
    return acc;
}

std::vector<double> hitting_times(const StationaryPolicy& policy, const Kernel& kernel) {
    const std::size_t n = kernel.num_states();
    const std::vector<double> chain = induced_chain(policy, kernel);
    std::vector<double> out(n * n, 0.0);

    if (n == 1) {
        out[0] = 1.0;
        return out;
    }

    const auto m = static_cast<Eigen::Index>(n - 1);
    for (std::size_t target = 0; target < n; ++target) {
        // Unknowns are h(x) for x != target; h(target) = 0.
        std::vector<std::size_t> others;
        others.reserve(n - 1);
        for (std::size_t x = 0; x < n; ++x) {
            if (x != target) others.push_back(x);
        }
        Matrix a(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j < m; ++j) {
                const double p = chain[others[static_cast<std::size_t>(i)] * n +
                                       others[static_cast<std::size_t>(j)]];
                a(i, j) = (i == j ? 1.0 : 0.0) - p;
            }
        }
        Eigen::PartialPivLU<Matrix> lu(a);
        if (rank_deficient(lu)) {
            throw NotUnichain("state " + std::to_string(target) + " is not reachable from every state");
        }
        Eigen::VectorXd h = lu.solve(Eigen::VectorXd::Ones(m));

        double ret = 1.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            const std::size_t x = others[static_cast<std::size_t>(i)];
            if (!std::isfinite(h(i)) || h(i) < 1.0 - 1e-9) {
                throw NotUnichain("hitting-time system produced an invalid solution");
            }
            out[x * n + target] = h(i);
            ret += chain[target * n + x] * h(i);
        }
        out[target * n + target] = ret;
    }
    return out;
}

MarkovAnalysis analyze(const StationaryPolicy& policy, const CmdpModel& model) {
    MarkovAnalysis a;
    a.stationary_dist = stationary_distribution(policy, model.kernel);
    a.hitting_times = hitting_times(policy, model.kernel);
    const auto r = induced_values(policy, model.reward);
    const auto c = induced_values(policy, model.cost);
    for (std::size_t x = 0; x < model.num_states; ++x) {
        a.avg_reward += a.stationary_dist[x] * r[x];
        a.avg_cost += a.stationary_dist[x] * c[x];
    }
    return a;
}

PolicyEnumeration enumerate(std::span<const StationaryPolicy> policies) {
    return [policies](const PolicyVisitor& visit) {
        for (const auto& p : policies) visit(p);
    };
}

PolicyEnumeration concat(PolicyEnumeration first, PolicyEnumeration second) {
    return [first = std::move(first), second = std::move(second)](const PolicyVisitor& visit) {
        first(visit);
        second(visit);
    };
}

std::vector<StationaryPolicy> deterministic_policies(std::size_t num_states, std::size_t num_actions) {
    double count = std::pow(static_cast<double>(num_actions), static_cast<double>(num_states));
    if (count > 1e6) throw ModelError("too many deterministic policies to enumerate");
    std::vector<StationaryPolicy> out;
    out.reserve(static_cast<std::size_t>(count));
    std::vector<std::size_t> digits(num_states, 0);
    while (true) {
        out.push_back(StationaryPolicy::deterministic(num_actions, digits));
        std::size_t pos = num_states;
        while (pos > 0) {
            --pos;
            if (++digits[pos] < num_actions) break;
            digits[pos] = 0;
            if (pos == 0) return out;
        }
        if (num_states == 0) return out;
    }
}

GapReport gaps(const CmdpModel& model, const PolicyEnumeration& policy_set) {
    GapReport g;
    const CmdpSolution opt = solve_cmdp(model.kernel, model.reward, model.cost, model.cost_budget);
    g.optimal_value = opt.feasible ? opt.optimal_value : -kInfinity;

    double cheapest_infeasible = kInfinity;
    bool any = false;
    policy_set([&](const StationaryPolicy& pi) {
        any = true;
        const std::vector<double> mu = stationary_distribution(pi, model.kernel);
        const auto r = induced_values(pi, model.reward);
        const auto c = induced_values(pi, model.cost);
        double rbar = 0.0, cbar = 0.0;
        for (std::size_t x = 0; x < mu.size(); ++x) {
            rbar += mu[x] * r[x];
            cbar += mu[x] * c[x];
        }
        if (cbar <= model.cost_budget + kFeasibilityTol) {
            g.has_feasible = true;
            g.best_feasible_reward = std::max(g.best_feasible_reward, rbar);
        } else {
            g.has_infeasible = true;
            cheapest_infeasible = std::min(cheapest_infeasible, cbar);
        }
    });
    if (!any) throw std::invalid_argument("gaps: empty policy set");

    if (g.has_feasible && opt.feasible) g.reward_gap = g.optimal_value - g.best_feasible_reward;
    if (g.has_infeasible) g.cost_gap = cheapest_infeasible - model.cost_budget;
    return g;
}

GapReport gaps(const CmdpModel& model, std::span<const StationaryPolicy> policy_set) {
    return gaps(model, enumerate(policy_set));
}

StructureConstants structure_constants(const CmdpModel& model, const PolicyEnumeration& policies) {
    StructureConstants s;
    const std::size_t n = model.num_states;
    bool any = false;
    policies([&](const StationaryPolicy& pi) {
        any = true;
        const std::vector<double> h = hitting_times(pi, model.kernel);
        for (std::size_t x = 0; x < n; ++x) {
            double worst_other = 0.0;
            for (std::size_t y = 0; y < n; ++y) {
                s.mixing_time = std::max(s.mixing_time, h[x * n + y]);
                if (y != x) worst_other = std::max(worst_other, h[x * n + y]);
            }
            s.conductivity = std::max(s.conductivity, worst_other / (2.0 * h[x * n + x]));
        }
    });
    if (!any) throw std::invalid_argument("structure_constants: empty policy enumeration");
    s.degenerate_conductivity = (n == 1);
    return s;
}

StructureConstants structure_constants(const CmdpModel& model,
                                       std::span<const StationaryPolicy> policies) {
    return structure_constants(model, enumerate(policies));
}

StructureConstants structure_constants(const CmdpModel& model, const PolicyEnumeration& policies,
                                       const PolicyEnumeration& finite_class) {
    StructureConstants s = structure_constants(model, policies);
    const GapReport g = gaps(model, finite_class);
    s.reward_gap = g.reward_gap;
    s.cost_gap = g.cost_gap;
    s.delta_min = std::min(g.reward_gap, g.cost_gap);
    s.has_gaps = true;
    return s;
}

}  // namespace rbmle
