#include <doctest.h>

#include "rbmle/agent.hpp"
#include "rbmle/cmdp_lp.hpp"
#include "rbmle/harness.hpp"
#include "rbmle/markov.hpp"
#include "rbmle/verify.hpp"
#include "support.hpp"

using namespace rbmle;
using test::near;

namespace {

EstimatorState sample_counts(const CmdpModel& m, std::size_t per_pair, std::uint64_t seed) {
    EstimatorState s(m.num_states, m.num_actions);
    Rng rng(seed, "counts");
    for (std::size_t x = 0; x < m.num_states; ++x)
        for (std::size_t u = 0; u < m.num_actions; ++u)
            for (std::size_t n = 0; n < per_pair + x; ++n) s.record(x, u, rng.categorical(m.kernel.row(x, u)));
    return s;
}

// Independent objective: alpha V(theta) - sum n KL(p_hat, theta), written out entry by entry.
double oracle_objective(const EstimatorState& s, const Kernel& theta, double v, double alpha_value) {
    double pen = 0.0;
    for (std::size_t x = 0; x < theta.num_states(); ++x)
        for (std::size_t u = 0; u < theta.num_actions(); ++u) {
            const double n = static_cast<double>(s.count(x, u));
            for (std::size_t y = 0; y < theta.num_states(); ++y) {
                const double ph = n > 0 ? static_cast<double>(s.count(x, u, y)) / n : 0.0;
                if (ph == 0.0) continue;
                if (theta(x, u, y) == 0.0) return -kInfinity;
                pen += n * ph * std::log(ph / theta(x, u, y));
            }
        }
    return alpha_value * v - pen;
}

struct Setup {
    CmdpModel model = fixture_two_state();
    std::shared_ptr<ThetaNet> net;
    std::shared_ptr<NetValues> values;
    explicit Setup(double eps) {
        net = std::make_shared<ThetaNet>(
            build_theta_net(ParameterSpace::from_kernel(model.kernel, smallest_transition(model.kernel)), eps));
        values = std::make_shared<NetValues>(compute_net_values(*net, model.reward, model.cost, model.cost_budget));
    }
};

}  // namespace

TEST_CASE("alpha schedule") {
    BiasSchedule s{1.0, 3.0, 2, 2};
    CHECK(near(alpha(1.0, s), std::log(8.0), 1e-15));
    BiasSchedule s3 = s;
    s3.a = 3.0;
    CHECK(near(alpha(17.0, s3), 3.0 * alpha(17.0, s), 1e-12));
    CHECK(alpha(18.0, s) > alpha(17.0, s));
    CHECK(near(alpha(10.0, s), std::log(1000.0 * 8.0), 1e-12));
    CHECK_THROWS(alpha(0.5, s));
}

TEST_CASE("bias validation") {
    BiasSchedule s{1000.0, 2.0, 2, 2};
    CHECK(validate_bias(s, 0.1, 0.1).b_condition == Verdict::fail);
    s.b = 3.0;
    const BiasCheck c = validate_bias(s, 0.1, 0.1);
    CHECK(c.b_condition == Verdict::pass);
    CHECK(near(c.a_threshold, 800.0, 1e-9));
    CHECK(c.a_condition == Verdict::pass);
    s.a = c.a_threshold;
    CHECK(validate_bias(s, 0.1, 0.1).a_condition == Verdict::fail);
    CHECK(validate_bias(s, 0.1, std::nullopt).a_condition == Verdict::unverifiable);
    CHECK(near(default_bias_scale(2, 2, 0.1, 0.1), 1600.0, 1e-9));
    CHECK(std::string(to_string(Verdict::unverifiable)) == "unverifiable");
}

TEST_CASE("episode schedule") {
    CHECK(episode(1).start == 1);
    CHECK(episode(1).length == 2);
    for (std::size_t k = 1; k < 20; ++k) {
        std::uint64_t tau = 1;
        for (std::size_t l = 1; l < k; ++l) tau += std::uint64_t{1} << l;
        CHECK(episode(k).start == tau);
        CHECK(episode(k).length == (std::uint64_t{1} << k));
        CHECK(episode_of(tau) == k);
        CHECK(episode_of(tau + episode(k).length - 1) == k);
    }
    for (std::size_t m = 1; m < 30; ++m) CHECK(episode_count(std::uint64_t{1} << m) == m);
    CHECK(episode_count(1) == 1);
    CHECK(episode_count(3) == 2);
    CHECK_THROWS(episode(0));
    CHECK_THROWS(episode_of(0));
}

TEST_CASE("net values do not depend on the worker count") {
    Setup s(0.25);
    const NetValues two = compute_net_values(*s.net, s.model.reward, s.model.cost, s.model.cost_budget, 2);
    CHECK(two.value == s.values->value);
    CHECK(two.feasible == s.values->feasible);
    CHECK(two.policy == s.values->policy);
}

TEST_CASE("select with zero counts picks the most optimistic point") {
    Setup s(0.5);
    const EstimatorState empty(2, 2);
    const AgentDecision d = select(empty, *s.net, *s.values, 2.0);
    std::size_t best = 0;
    double best_v = -kInfinity;
    for (std::size_t i = 0; i < s.net->size(); ++i) {
        if (s.values->feasible[i] && s.values->value[i] > best_v + 1e-12 * std::max(1.0, best_v)) {
            best_v = s.values->value[i];
            best = i;
        }
    }
    // Points differing only in unplayed rows tie up to LP round-off, so compare values.
    CHECK(near(s.values->value[d.theta_index], best_v, 1e-9));
    CHECK(d.theta_index <= best);
    CHECK(near(d.objective, 2.0 * best_v, 1e-9));
}

TEST_CASE("select with zero bias is the feasibility-constrained MLE") {
    Setup s(0.1);
    const EstimatorState counts = sample_counts(s.model, 300, 41);
    const AgentDecision d = select(counts, *s.net, *s.values, 0.0);
    double best = -kInfinity;
    for (std::size_t i = 0; i < s.net->size(); ++i) {
        if (!s.values->feasible[i]) continue;
        best = std::max(best, oracle_objective(counts, s.net->point(i), 0.0, 0.0));
    }
    CHECK(near(d.objective, best, 1e-9));
    CHECK(s.values->feasible[d.theta_index]);
}

TEST_CASE("select matches exhaustive evaluation on a 9-point net") {
    CmdpModel m = fixture_two_state();
    ParameterSpace space = ParameterSpace::from_kernel(m.kernel, 0.1);
    // Rows of state 1 are forced, so the net is 3 x 3 over the rows of state 0.
    Kernel forced = m.kernel;
    forced(1, 0, 0) = 1.0, forced(1, 0, 1) = 0.0, forced(1, 1, 0) = 1.0, forced(1, 1, 1) = 0.0;
    space.support = ParameterSpace::from_kernel(forced, 0.1).support;
    const ThetaNet net = build_theta_net(space, 0.5);
    REQUIRE(net.size() == 9);
    const NetValues values = compute_net_values(net, m.reward, m.cost, 1.0);
    EstimatorState counts(2, 2);
    Rng rng(42, "nine");
    const std::vector<double> row0{0.6, 0.4}, row1{0.3, 0.7};
    for (int i = 0; i < 40; ++i) {
        counts.record(0, 0, rng.uniform() < row0[0] ? 0 : 1);
        counts.record(0, 1, rng.uniform() < row1[0] ? 0 : 1);
        counts.record(1, i % 2, 0);
    }
    for (double a : {0.0, 1.0, 10.0, 100.0}) {
        const AgentDecision d = select(counts, net, values, a);
        double best_obj = -kInfinity;
        for (std::size_t i = 0; i < net.size(); ++i)
            if (values.feasible[i]) best_obj = std::max(best_obj, oracle_objective(counts, net.point(i), values.value[i], a));
        CHECK(near(d.objective, best_obj, 1e-9));
        CHECK(near(oracle_objective(counts, net.point(d.theta_index), values.value[d.theta_index], a), best_obj, 1e-9));
    }
}

TEST_CASE("select reports when no point is feasible") {
    Setup s(0.5);
    const NetValues none = compute_net_values(*s.net, s.model.reward, s.model.cost, 0.0);
    CHECK_THROWS_AS(select(EstimatorState(2, 2), *s.net, none, 1.0), NoFeasibleTheta);

    BiasSchedule sched{1.0, 3.0, 2, 2};
    RbmleAgent agent(s.net, std::make_shared<NetValues>(none), sched);
    const EpisodePlan plan = agent.plan(EstimatorState(2, 2), episode(1));
    CHECK(plan.fallback);
    CHECK_FALSE(plan.theta_index.has_value());
    CHECK(plan.policy == StationaryPolicy::uniform(2, 2));
}

TEST_CASE("policy index: dominance, sentinel and agreement with select") {
    Setup s(0.1);
    const EstimatorState counts = sample_counts(s.model, 200, 43);
    BiasSchedule sched{5.0, 3.0, 2, 2};
    const double a_t = alpha(static_cast<double>(episode(7).start), sched);

    // Lower bound from the candidate theta = p.
    const CmdpSolution opt = solve_cmdp(s.model.kernel, s.model.reward, s.model.cost, s.model.cost_budget);
    const IndexReport star =
        policy_index(opt.policy, counts, *s.net, a_t, s.model.reward, s.model.cost, s.model.cost_budget);
    const double at_p = oracle_objective(counts, s.model.kernel, average_value(opt.policy, s.model.kernel, s.model.reward), a_t);
    CHECK(star.feasible_theta_exists);
    CHECK(star.index_value >= at_p - 1e-9);

    // The chosen policy has the largest index, equal to the selection objective.
    const AgentDecision d = select(counts, *s.net, *s.values, a_t);
    const IndexReport chosen = policy_index(d.policy, counts, *s.net, a_t, s.model.reward, s.model.cost, s.model.cost_budget);
    CHECK(near(chosen.index_value, d.objective, 1e-7 * std::max(1.0, std::abs(d.objective))));
    for (const auto& pi : deterministic_policies(2, 2)) {
        const IndexReport r = policy_index(pi, counts, *s.net, a_t, s.model.reward, s.model.cost, s.model.cost_budget);
        CHECK(r.index_value <= chosen.index_value + 1e-9 * std::abs(chosen.index_value));
    }

    // The most expensive action everywhere cannot meet a budget below every cost it could incur.
    const StationaryPolicy pricey = StationaryPolicy::deterministic(2, std::vector<std::size_t>{1, 1});
    const IndexReport none = policy_index(pricey, counts, *s.net, a_t, s.model.reward, s.model.cost, 0.55);
    CHECK_FALSE(none.feasible_theta_exists);
    CHECK(none.index_value == -kInfinity);
}

TEST_CASE("act samples the policy row") {
    const StationaryPolicy det = StationaryPolicy::deterministic(3, std::vector<std::size_t>{2});
    Rng rng(44, "act");
    for (int i = 0; i < 100; ++i) CHECK(act(det, 0, rng) == 2);

    const StationaryPolicy uni = StationaryPolicy::uniform(1, 2);
    std::size_t ones = 0;
    for (int i = 0; i < 10000; ++i) ones += act(uni, 0, rng);
    CHECK(near(static_cast<double>(ones) / 10000.0, 0.5, 0.01));

    Rng r1(7, "agent"), r2(7, "agent");
    for (int i = 0; i < 200; ++i) CHECK(act(uni, 0, r1) == act(uni, 0, r2));
    CHECK_THROWS(act(uni, 1, r1));
}

TEST_CASE("oracle agent plays the CMDP optimum and rejects infeasible models") {
    const CmdpModel m = fixture_two_state();
    OracleAgent o(m);
    const EpisodePlan p = o.plan(EstimatorState(2, 2), episode(3));
    CHECK(p.policy == solve_cmdp(m.kernel, m.reward, m.cost, m.cost_budget).policy);
    CmdpModel bad = m;
    bad.cost_budget = 0.01;
    CHECK_THROWS_AS(OracleAgent{bad}, ModelError);
}

TEST_CASE("zero-bias RBMLE is the certainty-equivalence agent") {
    Setup s(0.25);
    BiasSchedule zero{0.0, 3.0, 2, 2};
    RbmleAgent ce(s.net, s.values, zero, "ce");
    const EstimatorState counts = sample_counts(s.model, 50, 45);
    const EpisodePlan p = ce.plan(counts, episode(5));
    const AgentDecision d = select(counts, *s.net, *s.values, 0.0);
    CHECK(p.theta_index == d.theta_index);
    CHECK(ce.name() == "ce");
}
