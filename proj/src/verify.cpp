#include "rbmle/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <random>
#include <sstream>

#include "rbmle/agent.hpp"
#include "rbmle/cmdp_lp.hpp"
#include "rbmle/estimation.hpp"
#include "rbmle/harness.hpp"
#include "rbmle/markov.hpp"

namespace rbmle {

namespace {

CmdpModel make_model(std::size_t ns, std::size_t na, std::vector<double> kernel, std::vector<double> reward,
                     std::vector<double> cost, double c_ub) {
    CmdpModel m;
    m.num_states = ns;
    m.num_actions = na;
    m.kernel = Kernel(ns, na, std::move(kernel));
    m.reward = std::move(reward);
    m.cost = std::move(cost);
    m.cost_budget = c_ub;
    m.validate();
    return m;
}

void note_slack(CheckReport& r, double slack) {
    ++r.trials;
    r.worst_slack = std::min(r.worst_slack, slack);
}

// Adapter so <random> distributions can draw from Rng.
struct UrbgAdapter {
    using result_type = std::uint64_t;
    Rng* rng;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type{0}; }
    result_type operator()() { return rng->next(); }
};

std::vector<double> random_row(Rng& rng, std::size_t n, double min_prob) {
    // Uniform on the simplex, then mixed toward uniform so every entry is >= min_prob.
    std::vector<double> w(n);
    double s = 0.0;
    for (auto& v : w) {
        v = -std::log(1.0 - rng.uniform());
        s += v;
    }
    const double spare = 1.0 - min_prob * static_cast<double>(n);
    for (auto& v : w) v = min_prob + spare * v / s;
    return w;
}

// Oracle linear algebra: Gaussian elimination with partial pivoting on a dense row-major system.
bool gauss_solve(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
        }
        if (std::abs(a[piv * n + col]) < 1e-13) return false;
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[piv * n + j]);
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r * n + col] / a[col * n + col];
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a[r * n + j] -= f * a[col * n + j];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a[i * n + j] * b[j];
        b[i] = s / a[i * n + i];
    }
    return true;
}

// Oracle lattice over the action simplex: compositions of m into na parts.
void compositions(std::size_t na, std::size_t m, std::vector<std::size_t>& cur,
                  std::vector<std::vector<double>>& out) {
    if (cur.size() + 1 == na) {
        std::size_t used = 0;
        for (auto v : cur) used += v;
        std::vector<double> p;
        for (auto v : cur) p.push_back(static_cast<double>(v) / static_cast<double>(m));
        p.push_back(static_cast<double>(m - used) / static_cast<double>(m));
        out.push_back(std::move(p));
        return;
    }
    std::size_t used = 0;
    for (auto v : cur) used += v;
    for (std::size_t k = 0; k + used <= m; ++k) {
        cur.push_back(k);
        compositions(na, m, cur, out);
        cur.pop_back();
    }
}

struct PolicyValue {
    double reward = 0.0;
    double cost = 0.0;
    bool ok = false;
};

PolicyValue evaluate_pair(const CmdpModel& model, const Kernel& kernel, const StationaryPolicy& pi) {
    PolicyValue v;
    try {
        const auto mu = stationary_distribution(pi, kernel);
        const auto r = induced_values(pi, model.reward);
        const auto c = induced_values(pi, model.cost);
        for (std::size_t x = 0; x < mu.size(); ++x) {
            v.reward += mu[x] * r[x];
            v.cost += mu[x] * c[x];
        }
        v.ok = true;
    } catch (const NotUnichain&) {
    }
    return v;
}

StationaryPolicy random_policy(Rng& rng, std::size_t ns, std::size_t na) {
    StationaryPolicy pi(ns, na);
    for (std::size_t x = 0; x < ns; ++x) {
        const auto row = random_row(rng, na, 0.0);
        std::copy(row.begin(), row.end(), pi.row(x).begin());
    }
    return pi;
}

double max_cost_lp(const CmdpModel& m) {
    const std::vector<double> zero(m.cost.size(), 0.0);
    return solve_cmdp(m.kernel, m.cost, zero, 1.0).optimal_value;
}

StationaryPolicy min_cost_policy(const CmdpModel& m) {
    std::vector<double> zero(m.cost.size(), 0.0);
    std::vector<double> minus(m.cost.size());
    std::transform(m.cost.begin(), m.cost.end(), minus.begin(), [](double v) { return 1.0 - v; });
    // Maximizing 1 - c minimizes cost; rewards of 1 - c stay in [0,1].
    return solve_cmdp(m.kernel, minus, zero, 1.0).policy;
}

}  // namespace

CmdpModel fixture_two_state() {
    return make_model(2, 2, {0.7, 0.3, 0.2, 0.8, 0.6, 0.4, 0.1, 0.9}, {0.2, 0.5, 0.4, 0.9},
                      {0.1, 0.6, 0.2, 0.8}, 0.4);
}

CmdpModel fixture_three_state() {
    return make_model(3, 2,
                      {0.75, 0.25, 0.0, 0.0, 0.5, 0.5,    //
                       0.5, 0.0, 0.5, 0.0, 0.25, 0.75,    //
                       0.75, 0.0, 0.25, 0.25, 0.0, 0.75},
                      {0.1, 0.6, 0.3, 0.8, 0.5, 0.9}, {0.1, 0.7, 0.2, 0.6, 0.3, 0.9}, 0.4);
}

CmdpModel fixture_ce_trap() {
    return make_model(2, 2, {0.9, 0.1, 0.8, 0.2, 0.1, 0.9, 0.9, 0.1}, {0.9, 1.0, 0.2, 0.1},
                      {0.3, 0.9, 0.1, 0.2}, 0.35);
}

CmdpModel random_model(Rng& rng, std::size_t ns, std::size_t na, double min_prob) {
    std::vector<double> k;
    for (std::size_t i = 0; i < ns * na; ++i) {
        const auto row = random_row(rng, ns, min_prob);
        k.insert(k.end(), row.begin(), row.end());
    }
    std::vector<double> r(ns * na), c(ns * na);
    for (auto& v : r) v = rng.uniform();
    for (auto& v : c) v = rng.uniform();
    return make_model(ns, na, std::move(k), std::move(r), std::move(c), 1.0);
}

CmdpModel random_strictly_feasible_model(Rng& rng, std::size_t ns, std::size_t na, double min_prob,
                                         double margin) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        CmdpModel m = random_model(rng, ns, na, min_prob);
        const double c_min = solve_cmdp(m.kernel, m.reward, m.cost, 1.0).min_cost;
        const double c_max = max_cost_lp(m);
        if (c_max - c_min <= margin + 0.02) continue;
        m.cost_budget = c_min + margin + (c_max - c_min - margin) * rng.uniform();
        return m;
    }
    throw std::runtime_error("could not draw a strictly feasible model");
}

double brute_force_cmdp(const CmdpModel& model, double resolution, std::size_t max_policies) {
    const std::size_t ns = model.num_states;
    const std::size_t na = model.num_actions;
    const auto m = static_cast<std::size_t>(std::llround(1.0 / resolution));
    if (m == 0 || std::abs(static_cast<double>(m) * resolution - 1.0) > 1e-9) {
        throw ModelError("brute_force_cmdp: resolution must be 1/m for an integer m");
    }
    std::vector<std::vector<double>> points;
    std::vector<std::size_t> cur;
    compositions(na, m, cur, points);
    double total = std::pow(static_cast<double>(points.size()), static_cast<double>(ns));
    if (total > static_cast<double>(max_policies)) {
        throw ModelError("brute_force_cmdp: " + std::to_string(static_cast<long long>(total)) +
                         " grid policies exceed the cap");
    }

    // Per state and grid point: induced transition row, reward and cost.
    const std::size_t g = points.size();
    std::vector<double> prow(ns * g * ns, 0.0), rrow(ns * g, 0.0), crow(ns * g, 0.0);
    for (std::size_t x = 0; x < ns; ++x) {
        for (std::size_t i = 0; i < g; ++i) {
            for (std::size_t u = 0; u < na; ++u) {
                const double w = points[i][u];
                rrow[x * g + i] += w * model.r(x, u);
                crow[x * g + i] += w * model.c(x, u);
                for (std::size_t y = 0; y < ns; ++y) prow[(x * g + i) * ns + y] += w * model.kernel(x, u, y);
            }
        }
    }

    double best = -kInfinity;
    std::vector<std::size_t> digit(ns, 0);
    std::vector<double> a(ns * ns), b(ns);
    while (true) {
        // mu (I - P) = 0 with the last equation replaced by sum mu = 1, written as A mu = b.
        for (std::size_t i = 0; i < ns; ++i) {
            for (std::size_t j = 0; j < ns; ++j) {
                a[i * ns + j] = (i == j ? 1.0 : 0.0) - prow[(j * g + digit[j]) * ns + i];
            }
            b[i] = 0.0;
        }
        for (std::size_t j = 0; j < ns; ++j) a[(ns - 1) * ns + j] = 1.0;
        b[ns - 1] = 1.0;
        if (gauss_solve(a, b, ns)) {
            double rv = 0.0, cv = 0.0;
            for (std::size_t x = 0; x < ns; ++x) {
                rv += b[x] * rrow[x * g + digit[x]];
                cv += b[x] * crow[x * g + digit[x]];
            }
            if (cv <= model.cost_budget + 1e-9) best = std::max(best, rv);
        }
        std::size_t pos = ns;
        bool done = true;
        while (pos > 0) {
            --pos;
            if (++digit[pos] < g) {
                done = false;
                break;
            }
            digit[pos] = 0;
        }
        if (done) break;
    }
    return best;
}

CheckReport check_stationary(std::size_t trials, std::uint64_t seed) {
    CheckReport rep;
    rep.name = "stationary_vs_power_iteration";
    Rng rng(seed, "stationary");
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t ns = 2 + t % 4;
        const CmdpModel m = random_model(rng, ns, 2, 0.02);
        const StationaryPolicy pi = random_policy(rng, ns, 2);
        const auto mu = stationary_distribution(pi, m.kernel);
        const auto p = induced_chain(pi, m.kernel);
        std::vector<double> v(ns, 1.0 / static_cast<double>(ns)), nxt(ns);
        for (int it = 0; it < 5000; ++it) {
            std::fill(nxt.begin(), nxt.end(), 0.0);
            for (std::size_t i = 0; i < ns; ++i) {
                for (std::size_t j = 0; j < ns; ++j) nxt[j] += v[i] * p[i * ns + j];
            }
            v.swap(nxt);
        }
        double err = 0.0;
        for (std::size_t i = 0; i < ns; ++i) err = std::max(err, std::abs(v[i] - mu[i]));
        note_slack(rep, 1e-8 - err);
        if (err > 1e-8) ++rep.violations;
    }
    return rep;
}

CheckReport check_lp_vs_brute_force(std::size_t models, std::size_t num_states, double resolution,
                                    double tolerance, std::uint64_t seed) {
    CheckReport rep;
    rep.name = "lp_vs_brute_force";
    Rng rng(seed, "lp_vs_brute_force");
    for (std::size_t i = 0; i < models; ++i) {
        const CmdpModel m = random_strictly_feasible_model(rng, num_states, 2, 0.05, 0.05);
        const double lp = solve_cmdp(m.kernel, m.reward, m.cost, m.cost_budget).optimal_value;
        const double bf = brute_force_cmdp(m, resolution);
        const double diff = std::abs(lp - bf);
        note_slack(rep, tolerance - diff);
        if (!(diff <= tolerance)) ++rep.violations;
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "resolution %g, tolerance %g", resolution, tolerance);
    rep.note = buf;
    return rep;
}

CheckReport check_cho_meyer(std::size_t trials, double epsilon, std::uint64_t seed) {
    CheckReport rep;
    rep.name = "cho_meyer";
    Rng rng(seed, "cho_meyer");
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t ns = 2 + t % 2;
        const CmdpModel m = random_model(rng, ns, 2, 0.05);
        const StationaryPolicy pi = random_policy(rng, ns, 2);
        // kappa over the deterministic policies plus the sampled one.
        const auto det = deterministic_policies(ns, 2);
        const std::vector<StationaryPolicy> extra{pi};
        const StructureConstants sc = structure_constants(m, concat(enumerate(det), enumerate(extra)));
        const double delta = epsilon / (sc.conductivity * static_cast<double>(ns * ns));

        Kernel theta = m.kernel;
        for (std::size_t x = 0; x < ns; ++x) {
            for (std::size_t u = 0; u < 2; ++u) {
                std::vector<double> v(ns);
                double mean = 0.0;
                for (auto& e : v) {
                    e = (rng.uniform() - 0.5) * delta * 0.999;
                    mean += e;
                }
                mean /= static_cast<double>(ns);
                double scale = 1.0;
                for (std::size_t y = 0; y < ns; ++y) {
                    v[y] -= mean;  // |v| < delta, zero sum
                    if (m.kernel(x, u, y) + v[y] < 0.0) scale = std::min(scale, m.kernel(x, u, y) / -v[y]);
                }
                for (std::size_t y = 0; y < ns; ++y) theta(x, u, y) = m.kernel(x, u, y) + scale * v[y];
            }
        }
        const PolicyValue a = evaluate_pair(m, m.kernel, pi);
        const PolicyValue b = evaluate_pair(m, theta, pi);
        const double diff = std::max(std::abs(a.reward - b.reward), std::abs(a.cost - b.cost));
        note_slack(rep, epsilon - diff);
        if (!(diff < epsilon)) ++rep.violations;
    }
    return rep;
}

CheckReport check_cho_meyer_power(double epsilon) {
    CheckReport rep;
    rep.name = "cho_meyer_power";
    std::size_t found = 0;
    double biggest = 0.0;
    for (double s : {0.02, 0.05, 0.1, 0.2, 0.3}) {
        // One action; state 0 pays 1, state 1 pays 0; symmetric switching probability s.
        const CmdpModel m = make_model(2, 1, {1.0 - s, s, s, 1.0 - s}, {1.0, 0.0}, {1.0, 0.0}, 1.0);
        const StationaryPolicy pi = StationaryPolicy::uniform(2, 1);
        const auto det = deterministic_policies(2, 1);
        const double kappa = structure_constants(m, det).conductivity;
        const double delta = 10.0 * epsilon / (kappa * 4.0);
        const double step = std::min(delta * 0.999, 1.0 - s);
        Kernel theta = m.kernel;
        theta(0, 0, 0) -= step;
        theta(0, 0, 1) += step;
        const double diff = std::abs(evaluate_pair(m, m.kernel, pi).reward - evaluate_pair(m, theta, pi).reward);
        biggest = std::max(biggest, diff);
        ++rep.trials;
        if (diff > epsilon) ++found;
    }
    // Passing means the perturbation test is able to fail.
    if (found == 0) rep.violations = 1;
    rep.worst_slack = biggest - epsilon;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%zu of %zu adversarial cases exceed eps", found, rep.trials);
    rep.note = buf;
    return rep;
}

namespace {

// Uniform exploration; calls visit(t, counts) at each checkpoint.
template <typename Visit>
void explore_uniform(const CmdpModel& model, std::uint64_t seed, std::uint64_t horizon,
                     const std::vector<std::uint64_t>& times, Visit visit) {
    Rng rng(seed, "coverage");
    EstimatorState counts(model.num_states, model.num_actions);
    const StationaryPolicy pi = StationaryPolicy::uniform(model.num_states, model.num_actions);
    std::size_t x = 0, next = 0;
    for (std::uint64_t t = 1; t <= horizon && next < times.size(); ++t) {
        const std::size_t u = act(pi, x, rng);
        const std::size_t y = rng.categorical(model.kernel.row(x, u));
        counts.record(x, u, y);
        x = y;
        while (next < times.size() && times[next] == t) visit(t, counts), ++next;
    }
}

}  // namespace

CheckReport check_confidence_coverage(const CmdpModel& model, double b, const std::vector<std::uint64_t>& times,
                                      std::size_t seeds, std::uint64_t seed) {
    CheckReport rep;
    rep.name = "confidence_coverage";
    std::vector<std::uint64_t> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    std::vector<std::size_t> hits(sorted.size(), 0);
    for (std::size_t s = 0; s < seeds; ++s) {
        std::size_t idx = 0;
        explore_uniform(model, seed + s, sorted.back(), sorted, [&](std::uint64_t t, const EstimatorState& c) {
            if (in_confidence_set(model.kernel, confidence_set(c, b, static_cast<double>(t)))) ++hits[idx];
            ++idx;
        });
    }
    const double ns = static_cast<double>(model.num_states);
    const double na = static_cast<double>(model.num_actions);
    std::ostringstream note;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double t = static_cast<double>(sorted[i]);
        const double cov = static_cast<double>(hits[i]) / static_cast<double>(seeds);
        const double stderr_ = std::sqrt(cov * (1.0 - cov) / static_cast<double>(seeds));
        const double bound = 1.0 - 2.0 / (std::pow(t, 2.0 * b - 1.0) * ns * ns * na);
        const double slack = cov - (bound - 2.0 * stderr_);
        note_slack(rep, slack);
        if (slack < 0.0) ++rep.violations;
        note << (i ? "; " : "") << "t=" << sorted[i] << " coverage " << cov;
    }
    rep.note = note.str();
    return rep;
}

CheckReport check_entry_failure_rate(const CmdpModel& model, double b, const std::vector<std::uint64_t>& times,
                                     std::size_t seeds, std::uint64_t seed) {
    CheckReport rep;
    rep.name = "confidence_entry_failure_rate";
    std::vector<std::uint64_t> sorted = times;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t ns = model.num_states, na = model.num_actions;
    const std::size_t entries = ns * na * ns;
    std::vector<std::size_t> fails(sorted.size(), 0);
    for (std::size_t s = 0; s < seeds; ++s) {
        std::size_t idx = 0;
        explore_uniform(model, seed + s, sorted.back(), sorted, [&](std::uint64_t t, const EstimatorState& c) {
            const ConfidenceSet cs = confidence_set(c, b, static_cast<double>(t));
            for (std::size_t x = 0; x < ns; ++x) {
                for (std::size_t u = 0; u < na; ++u) {
                    for (std::size_t y = 0; y < ns; ++y) {
                        if (std::abs(model.kernel(x, u, y) - cs.center(x, u, y)) > cs.radii[x * na + u]) {
                            ++fails[idx];
                        }
                    }
                }
            }
            ++idx;
        });
    }
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double t = static_cast<double>(sorted[i]);
        const double n = static_cast<double>(seeds * entries);
        const double rate = static_cast<double>(fails[i]) / n;
        const double stderr_ = std::sqrt(rate * (1.0 - rate) / n);
        const double q = std::pow(t, b) * static_cast<double>(ns * ns * na);
        const double bound = 2.0 / (q * q);
        const double slack = bound + 2.0 * stderr_ - rate;
        note_slack(rep, slack);
        if (slack < 0.0) ++rep.violations;
    }
    return rep;
}

CheckReport check_f_crossing(double a0, double a1) {
    CheckReport rep;
    rep.name = "f_crossing";
    if (!(a0 > a1 && a1 > 0.0)) {
        rep.skipped = true;
        rep.note = "precondition a0 > a1 > 0 not met";
        return rep;
    }
    auto f = [&](double x) { return x - 2.0 * std::sqrt(a1 * x) - 2.0 * a0; };
    auto check = [&](double slack) {
        note_slack(rep, slack);
        if (!(slack > 0.0)) ++rep.violations;
    };
    check(f(11.0 * a0));
    check(-f(a1));
    // The positive root of f is (sqrt(a1) + sqrt(a1 + 2 a0))^2; it must sit below 11 a0.
    const double root = std::pow(std::sqrt(a1) + std::sqrt(a1 + 2.0 * a0), 2.0);
    check(11.0 * a0 - root);
    const std::size_t samples = 10000;
    const double hi = 20.0 * a0;
    double prev = f(a1);
    bool increasing = true, positive = true;
    for (std::size_t i = 1; i <= samples; ++i) {
        const double x = a1 + (hi - a1) * static_cast<double>(i) / static_cast<double>(samples);
        const double fx = f(x);
        if (!(fx > prev)) increasing = false;
        if (x >= 11.0 * a0 && !(fx > 0.0)) positive = false;
        prev = fx;
    }
    rep.trials += samples;
    if (!increasing || !positive) ++rep.violations;
    return rep;
}

CheckReport check_index_separation(const CmdpModel& model, const ThetaNet& net, double visit_multiplier,
                                   std::size_t resamples, std::uint64_t seed, const IndexSeparationSetup& setup) {
    CheckReport rep;
    rep.name = "index_separation";
    if (!(visit_multiplier > 1.0)) {
        rep.skipped = true;
        rep.note = "visit level does not exceed the threshold";
        return rep;
    }
    const std::size_t ns = model.num_states, na = model.num_actions;
    if (net.point(nearest_index(model.kernel, net)).max_abs_diff(model.kernel) > 1e-12) {
        throw ModelError("check_index_separation: the true kernel must be a net point");
    }
    const double p_min = smallest_transition(model.kernel);
    const StructureConstants sc = structure_constants(model, deterministic_policies(ns, na));
    const PolicyGrid grid = build_policy_grid(na, setup.policy_epsilon);
    const GapReport gap = gaps(model, grid.enumerate(ns));
    const double delta = std::min(gap.reward_gap, gap.cost_gap);
    if (!(delta > 0.0) || !std::isfinite(delta)) {
        rep.skipped = true;
        rep.note = "Delta_min is not positive on this policy grid";
        return rep;
    }
    BiasSchedule sched;
    sched.num_states = ns;
    sched.num_actions = na;
    sched.a = setup.bias_multiplier * static_cast<double>(ns * ns * ns * na) / (2.0 * p_min * delta);
    const double alpha_k = alpha(static_cast<double>(episode(setup.episode_k).start), sched);
    const double c = setup.beta * delta / (g_of_a(sched.a) * sc.conductivity * static_cast<double>(ns * ns));
    const double w = c * std::sqrt(1.0 + static_cast<double>(ns * ns * na) / (2.0 * sched.a * p_min));
    const auto n = static_cast<std::uint64_t>(std::ceil(visit_multiplier * alpha_k / (c * c)));

    // pi*: the LP optimum. Suboptimal: best feasible grid policy. Infeasible: best-reward grid
    // policy with cost above c_ub + (w + c) kappa.
    const StationaryPolicy pi_star = solve_cmdp(model.kernel, model.reward, model.cost, model.cost_budget).policy;
    const double margin = model.cost_budget + (w + c) * sc.conductivity;
    std::optional<StationaryPolicy> pi_sub, pi_inf;
    double sub_r = -kInfinity, inf_r = -kInfinity;
    grid.enumerate(ns)([&](const StationaryPolicy& pi) {
        const PolicyValue v = evaluate_pair(model, model.kernel, pi);
        if (v.cost <= model.cost_budget + kFeasibilityTol) {
            if (v.reward > sub_r) sub_r = v.reward, pi_sub = pi;
        } else if (v.cost > margin && v.reward > inf_r) {
            inf_r = v.reward, pi_inf = pi;
        }
    });

    Rng rng(seed, "index_separation");
    UrbgAdapter urbg{&rng};
    for (std::size_t s = 0; s < resamples; ++s) {
        // Multinomial counts per row via sequential binomials.
        nlohmann::json snap;
        std::vector<std::vector<std::uint64_t>> n_xu(ns, std::vector<std::uint64_t>(na, n));
        std::vector<std::vector<std::vector<std::uint64_t>>> n_xyu(
            ns, std::vector<std::vector<std::uint64_t>>(ns, std::vector<std::uint64_t>(na, 0)));
        for (std::size_t x = 0; x < ns; ++x) {
            for (std::size_t u = 0; u < na; ++u) {
                std::uint64_t left = n;
                double mass = 1.0;
                for (std::size_t y = 0; y < ns; ++y) {
                    const double p = model.kernel(x, u, y);
                    std::uint64_t k = 0;
                    if (y + 1 == ns || mass <= 0.0) {
                        k = left;
                    } else if (p > 0.0 && left > 0) {
                        std::binomial_distribution<std::uint64_t> bin(left, std::min(1.0, p / mass));
                        k = bin(urbg);
                    }
                    n_xyu[x][y][u] = k;
                    left -= k;
                    mass -= p;
                }
            }
        }
        snap["t"] = n * ns * na;
        snap["n_xu"] = n_xu;
        snap["n_xyu"] = n_xyu;
        const EstimatorState counts = EstimatorState::from_snapshot(snap);

        const double i_star =
            policy_index(pi_star, counts, net, alpha_k, model.reward, model.cost, model.cost_budget).index_value;
        if (pi_sub) {
            const double i_sub =
                policy_index(*pi_sub, counts, net, alpha_k, model.reward, model.cost, model.cost_budget).index_value;
            note_slack(rep, i_star - i_sub);
            if (!(i_sub < i_star)) ++rep.violations;
        }
        if (pi_inf) {
            const double i_inf =
                policy_index(*pi_inf, counts, net, alpha_k, model.reward, model.cost, model.cost_budget).index_value;
            note_slack(rep, i_star - i_inf);
            if (!(i_inf < i_star)) ++rep.violations;
        }
    }
    char buf[256];
    std::snprintf(buf, sizeof buf, "a=%.4g c=%.4g w=%.4g n=%llu delta_min=%.4g%s%s", sched.a, c, w,
                  static_cast<unsigned long long>(n), delta, pi_sub ? "" : " (no suboptimal candidate)",
                  pi_inf ? "" : " (no infeasible candidate)");
    rep.note = buf;
    return rep;
}

namespace {

struct SensitivityInstance {
    CmdpModel model;
    SensitivityConstants k;
    double c_hat = 0.0;
};

std::vector<SensitivityInstance> sensitivity_instances(std::size_t trials, double drop, std::uint64_t seed) {
    Rng rng(seed, "sensitivity");
    std::vector<SensitivityInstance> out;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t ns = 2 + t % 2;
        SensitivityInstance inst;
        inst.model = random_strictly_feasible_model(rng, ns, 2, 0.05, 2.0 * drop);
        inst.c_hat = inst.model.cost_budget - drop;
        inst.k = sensitivity_constants(inst.model, min_cost_policy(inst.model), drop);
        out.push_back(std::move(inst));
    }
    return out;
}

}  // namespace

CheckReport check_sensitivity_suite(std::size_t trials, double drop, std::uint64_t seed) {
    CheckReport rep;
    rep.name = "sensitivity_bound";
    for (const auto& inst : sensitivity_instances(trials, drop, seed)) {
        const SensitivityReport s = check_sensitivity(inst.model, inst.c_hat, inst.k);
        if (!s.both_feasible) {
            ++rep.trials;
            ++rep.violations;
            continue;
        }
        note_slack(rep, s.slack);
        if (!s.holds) ++rep.violations;
    }
    return rep;
}

CheckReport check_lagrange_suite(std::size_t trials, double drop, std::uint64_t seed) {
    CheckReport rep;
    rep.name = "lagrange_bound";
    for (const auto& inst : sensitivity_instances(trials, drop, seed)) {
        // lambda* at both budgets; the constants are valid for each.
        for (double budget : {inst.model.cost_budget, inst.c_hat}) {
            const CmdpSolution s = solve_cmdp(inst.model.kernel, inst.model.reward, inst.model.cost, budget);
            const double slack = inst.k.ratio - s.dual_cost_multiplier;
            note_slack(rep, slack);
            if (!s.feasible || slack < -1e-9) ++rep.violations;
        }
    }
    return rep;
}

CheckReport check_discretization(std::size_t instances, const std::vector<double>& epsilons, double slack,
                                 std::uint64_t seed) {
    CheckReport rep;
    rep.name = "discretization_error";
    Rng rng(seed, "discretization");
    for (std::size_t i = 0; i < instances; ++i) {
        const CmdpModel m = random_strictly_feasible_model(rng, 2, 2, 0.05, 2.0 * slack);
        const SensitivityConstants k = sensitivity_constants(m, min_cost_policy(m), slack);
        const double r_star = solve_cmdp(m.kernel, m.reward, m.cost, m.cost_budget).optimal_value;
        const auto det = deterministic_policies(2, 2);
        for (double eps : epsilons) {
            const PolicyGrid grid = build_policy_grid(2, eps);
            const StructureConstants sc = structure_constants(m, concat(enumerate(det), grid.enumerate(2)));
            const GapReport g = gaps(m, grid.enumerate(2));
            const double bound = sc.conductivity * 4.0 * (1.0 + k.ratio) * eps;
            const double err = r_star - g.best_feasible_reward;
            note_slack(rep, bound - err);
            if (!(err <= bound)) ++rep.violations;
        }
    }
    return rep;
}

CheckReport check_regret_invariants(const CmdpModel& model, std::uint64_t horizon, std::size_t seeds, double a,
                                    double theta_epsilon) {
    CheckReport rep;
    rep.name = "regret_invariants";
    const ParameterSpace space = ParameterSpace::from_kernel(model.kernel, smallest_transition(model.kernel));
    auto net = std::make_shared<ThetaNet>(build_theta_net(space, theta_epsilon));
    auto values = std::make_shared<NetValues>(compute_net_values(*net, model.reward, model.cost, model.cost_budget));
    BiasSchedule sched{a, kDefaultB, model.num_states, model.num_actions};
    const Benchmark bench = compute_benchmark(model, 0.1);
    const auto det = deterministic_policies(model.num_states, model.num_actions);
    std::size_t dominance_checks = 0;

    for (std::size_t s = 0; s < seeds; ++s) {
        RbmleAgent agent(net, values, sched);
        const RegretTrace tr = simulate(model, agent, horizon, s, bench);
        auto count = [&](bool ok, double slack) {
            note_slack(rep, slack);
            if (!ok) ++rep.violations;
        };
        const bool pow2 = (horizon & (horizon - 1)) == 0;
        const auto expected = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(horizon))));
        count(!pow2 || tr.episodes.size() == expected, 0.0);
        count(tr.episodes.size() == episode_count(horizon), 0.0);

        const auto rr = tr.reward_regret();
        const auto rc = tr.cost_regret();
        double er = 0.0, ec = 0.0;
        for (double v : tr.episode_reward_regret()) er += v;
        for (double v : tr.episode_cost_regret()) ec += v;
        const double tol = 1e-9 * static_cast<double>(horizon);
        count(std::abs(er - rr.back()) <= tol, tol - std::abs(er - rr.back()));
        count(std::abs(ec - rc.back()) <= tol, tol - std::abs(ec - rc.back()));

        // Replay the counts at each tau_k to check feasibility and index dominance.
        EstimatorState counts(model.num_states, model.num_actions);
        std::size_t step = 0;
        for (const auto& ep : tr.episodes) {
            while (step + 1 < tr.steps.size() && tr.steps[step].t < ep.start) {
                counts.record(tr.steps[step].x, tr.steps[step].u, tr.steps[step + 1].x);
                ++step;
            }
            if (!ep.theta_index) continue;
            const Kernel theta = net->point(*ep.theta_index);
            const StationaryPolicy& pi_k = values->policy[*ep.theta_index];
            const PolicyValue v = evaluate_pair(model, theta, pi_k);
            if (v.ok) count(v.cost <= model.cost_budget + 1e-8, model.cost_budget + 1e-8 - v.cost);
            if (ep.k <= 4 && s == 0) {
                const double a_k = alpha(static_cast<double>(ep.start), sched);
                const double i_k =
                    policy_index(pi_k, counts, *net, a_k, model.reward, model.cost, model.cost_budget).index_value;
                for (const auto& pi : det) {
                    const double i_pi =
                        policy_index(pi, counts, *net, a_k, model.reward, model.cost, model.cost_budget).index_value;
                    const double tol_i = 1e-9 * std::max(1.0, std::abs(i_k));
                    count(i_pi <= i_k + tol_i, i_k + tol_i - i_pi);
                    ++dominance_checks;
                }
            }
        }
    }
    rep.note = std::to_string(dominance_checks) + " index dominance comparisons";
    return rep;
}

std::vector<std::string> suite_names() { return {"core", "lp", "estimation", "index", "regret"}; }

std::vector<CheckReport> run_suite(const std::string& name, std::uint64_t seed) {
    std::vector<CheckReport> out;
    const bool all = name == "all";
    bool known = all;
    if (all || name == "core") {
        known = true;
        out.push_back(check_stationary(50, seed));
        out.push_back(check_cho_meyer(1000, 0.1, seed));
        out.push_back(check_cho_meyer_power(0.1));
    }
    if (all || name == "lp") {
        known = true;
        out.push_back(check_lp_vs_brute_force(20, 2, 1e-2, 2e-2, seed));
        out.push_back(check_sensitivity_suite(100, 0.05, seed));
        out.push_back(check_lagrange_suite(100, 0.05, seed));
        out.push_back(check_discretization(20, {0.5, 0.25, 0.125}, 0.05, seed));
    }
    if (all || name == "estimation") {
        known = true;
        const CmdpModel m = fixture_two_state();
        out.push_back(check_confidence_coverage(m, 3.0, {64, 256, 1024}, 200, seed));
        out.push_back(check_entry_failure_rate(m, 3.0, {64, 256, 1024}, 200, seed));
        out.push_back(check_f_crossing(1.0, 0.5));
    }
    if (all || name == "index") {
        known = true;
        const CmdpModel m = fixture_two_state();
        const ThetaNet net = build_theta_net(ParameterSpace::from_kernel(m.kernel, smallest_transition(m.kernel)), 0.1);
        out.push_back(check_index_separation(m, net, 10.0, 20, seed));
    }
    if (all || name == "regret") {
        known = true;
        out.push_back(check_regret_invariants(fixture_two_state(), 1024, 3, 1.0, 0.1));
    }
    if (!known) throw std::invalid_argument("unknown suite '" + name + "'");
    return out;
}

std::string format_reports(const std::vector<CheckReport>& reports) {
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-32s %8s %10s %14s  %s\n", "check", "trials", "violations", "worst_slack",
                  "status");
    out << buf;
    for (const auto& r : reports) {
        const char* status = r.skipped ? "SKIP" : (r.pass() ? "PASS" : "FAIL");
        std::snprintf(buf, sizeof buf, "%-32s %8zu %10zu %14.6g  %s", r.name.c_str(), r.trials, r.violations,
                      r.worst_slack, status);
        out << buf;
        if (!r.note.empty()) out << "  (" << r.note << ")";
        out << '\n';
    }
    return out.str();
}

}  // namespace rbmle
