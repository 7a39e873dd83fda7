#include "rbmle/agent.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "rbmle/cmdp_lp.hpp"
#include "rbmle/markov.hpp"

namespace rbmle {

namespace {

constexpr double kTieTol = 1e-12;

bool strictly_better(double candidate, double best) {
    return candidate > best + kTieTol * std::max(1.0, std::abs(best));
}

}  // namespace

double alpha(double t, const BiasSchedule& s) {
    if (!(t >= 1.0)) throw std::invalid_argument("alpha: t must be >= 1");
    const double ns = static_cast<double>(s.num_states);
    return s.a * (s.b * std::log(t) + std::log(ns * ns * static_cast<double>(s.num_actions)));
}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "pass";
        case Verdict::fail: return "fail";
        case Verdict::unverifiable: return "unverifiable";
    }
    return "unknown";
}

BiasCheck validate_bias(const BiasSchedule& s, double p_min, std::optional<double> delta_min, double beta) {
    BiasCheck c;
    c.b_condition = s.b > 2.0 ? Verdict::pass : Verdict::fail;
    if (!delta_min || !(*delta_min > 0.0) || !std::isfinite(*delta_min)) return c;
    const double ns = static_cast<double>(s.num_states);
    const double na = static_cast<double>(s.num_actions);
    c.a_threshold = ns * ns * ns * na / (2.0 * p_min * *delta_min);
    c.a_condition = s.a > c.a_threshold ? Verdict::pass : Verdict::fail;
    c.a_beta_threshold = ns * ns * na / (2.0 * (1.0 - beta) * *delta_min * p_min);
    c.a_beta_condition = s.a > c.a_beta_threshold ? Verdict::pass : Verdict::fail;
    return c;
}

double default_bias_scale(std::size_t num_states, std::size_t num_actions, double p_min, double delta_min) {
    const double ns = static_cast<double>(num_states);
    return 2.0 * ns * ns * ns * static_cast<double>(num_actions) / (2.0 * p_min * delta_min);
}

double g_of_a(double a) { return std::sqrt(0.5 * (1.0 + 1.0 / a)) + 1.0 / std::sqrt(a); }

Episode episode(std::size_t k) {
    if (k == 0 || k > 62) throw std::out_of_range("episode index out of range");
    const std::uint64_t len = std::uint64_t{1} << k;
    return {k, len - 1, len};
}

std::size_t episode_of(std::uint64_t t) {
    if (t == 0) throw std::out_of_range("time starts at 1");
    std::size_t k = 0;
    for (std::uint64_t v = t + 1; v > 1; v >>= 1) ++k;
    return k;
}

std::size_t episode_count(std::uint64_t horizon) { return horizon == 0 ? 0 : episode_of(horizon); }

NetValues compute_net_values(const ThetaNet& net, std::span<const double> reward, std::span<const double> cost,
                             double c_ub, unsigned threads) {
    const std::size_t n = net.size();
    NetValues v;
    v.value.assign(n, 0.0);
    v.policy.resize(n);
    v.feasible.assign(n, 0);
    auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            const CmdpSolution s = solve_cmdp(net.point(i), reward, cost, c_ub);
            v.feasible[i] = s.feasible ? 1 : 0;
            v.value[i] = s.optimal_value;
            v.policy[i] = s.policy;
        }
    };
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, n / 256))));
    if (threads == 1) {
        work(0, n);
        return v;
    }
    std::vector<std::thread> pool;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
        const std::size_t b = std::min(n, w * chunk);
        const std::size_t e = std::min(n, b + chunk);
        pool.emplace_back(work, b, e);
    }
    for (auto& t : pool) t.join();
    return v;
}

std::vector<std::vector<double>> weighted_kl_table(const EstimatorState& counts, const ThetaNet& net) {
    const std::size_t ns = net.num_states();
    const std::size_t na = net.num_actions();
    if (counts.num_states() != ns || counts.num_actions() != na) throw ModelError("counts do not match net shape");
    std::vector<std::vector<double>> table(ns * na);
    for (std::size_t x = 0; x < ns; ++x) {
        for (std::size_t u = 0; u < na; ++u) {
            const auto& pts = net.row_points(x, u);
            auto& out = table[x * na + u];
            out.assign(pts.size(), 0.0);
            const std::uint64_t n = counts.count(x, u);
            if (n == 0) continue;
            const auto phat = counts.mle_row(x, u);
            for (std::size_t i = 0; i < pts.size(); ++i) {
                out[i] = static_cast<double>(n) * kl(phat, pts[i]);
            }
        }
    }
    return table;
}

namespace {

double penalty(const std::vector<std::vector<double>>& table, const std::vector<std::size_t>& digits) {
    double s = 0.0;
    for (std::size_t r = 0; r < digits.size(); ++r) s += table[r][digits[r]];
    return s;
}

}  // namespace

AgentDecision select(const EstimatorState& counts, const ThetaNet& net, const NetValues& values,
                     double alpha_value) {
    if (net.size() == 0) throw std::invalid_argument("select: empty net");
    if (values.value.size() != net.size()) throw std::invalid_argument("select: net values do not match net");
    const auto table = weighted_kl_table(counts, net);

    bool found = false;
    std::size_t best_i = 0;
    double best = -kInfinity;
    for (std::size_t i = 0; i < net.size(); ++i) {
        if (!values.feasible[i]) continue;
        const double pen = penalty(table, net.digits(i));
        if (!std::isfinite(pen)) continue;
        const double obj = alpha_value * values.value[i] - pen;
        if (!found || strictly_better(obj, best)) {
            found = true;
            best = obj;
            best_i = i;
        }
    }
    if (!found) throw NoFeasibleTheta("every net point is CMDP-infeasible or has infinite KL penalty");
    return {best_i, net.point(best_i), values.policy[best_i], best};
}

IndexReport policy_index(const StationaryPolicy& policy, const EstimatorState& counts, const ThetaNet& net,
                         double alpha_value, std::span<const double> reward, std::span<const double> cost,
                         double c_ub) {
    IndexReport rep;
    rep.policy = policy;
    const auto table = weighted_kl_table(counts, net);
    const std::vector<double> r_pi = induced_values(policy, reward);
    const std::vector<double> c_pi = induced_values(policy, cost);
    const double r_cap = r_pi.empty() ? 0.0 : *std::max_element(r_pi.begin(), r_pi.end());

    for (std::size_t i = 0; i < net.size(); ++i) {
        const double pen = penalty(table, net.digits(i));
        if (!std::isfinite(pen)) continue;
        // rbar <= max_x r_pi(x) bounds the best this point can reach.
        if (rep.feasible_theta_exists && !strictly_better(alpha_value * r_cap - pen, rep.index_value)) continue;
        std::vector<double> mu;
        try {
            mu = stationary_distribution(policy, net.point(i));
        } catch (const NotUnichain&) {
            continue;
        }
        double rbar = 0.0, cbar = 0.0;
        for (std::size_t x = 0; x < mu.size(); ++x) {
            rbar += mu[x] * r_pi[x];
            cbar += mu[x] * c_pi[x];
        }
        if (cbar > c_ub + kFeasibilityTol) continue;
        const double obj = alpha_value * rbar - pen;
        if (!rep.feasible_theta_exists || strictly_better(obj, rep.index_value)) {
            rep.feasible_theta_exists = true;
            rep.index_value = obj;
            rep.theta_index = i;
        }
    }
    return rep;
}

std::size_t act(const StationaryPolicy& policy, std::size_t state, Rng& rng) {
    if (state >= policy.num_states()) throw std::out_of_range("act: state out of range");
    return rng.categorical(policy.row(state));
}

RbmleAgent::RbmleAgent(std::shared_ptr<const ThetaNet> net, std::shared_ptr<const NetValues> values,
                       BiasSchedule schedule, std::string name)
    : net_(std::move(net)), values_(std::move(values)), schedule_(schedule), name_(std::move(name)) {
    if (!net_ || !values_) throw std::invalid_argument("RbmleAgent: null net or values");
}

EpisodePlan RbmleAgent::plan(const EstimatorState& counts, const Episode& ep) {
    EpisodePlan p;
    const double a_t = alpha(static_cast<double>(ep.start), schedule_);
    try {
        AgentDecision d = select(counts, *net_, *values_, a_t);
        p.policy = std::move(d.policy);
        p.theta_index = d.theta_index;
        p.objective = d.objective;
    } catch (const NoFeasibleTheta&) {
        p.policy = StationaryPolicy::uniform(net_->num_states(), net_->num_actions());
        p.fallback = true;
    }
    return p;
}

OracleAgent::OracleAgent(const CmdpModel& model) {
    const CmdpSolution s = solve_cmdp(model.kernel, model.reward, model.cost, model.cost_budget);
    if (!s.feasible) throw ModelError("oracle agent: the true CMDP is infeasible");
    policy_ = s.policy;
    value_ = s.optimal_value;
}

EpisodePlan OracleAgent::plan(const EstimatorState&, const Episode&) {
    EpisodePlan p;
    p.policy = policy_;
    p.objective = value_;
    return p;
}

}  // namespace rbmle
