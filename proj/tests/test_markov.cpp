#include <doctest.h>

#include <filesystem>

#include "rbmle/cmdp_lp.hpp"
#include "rbmle/markov.hpp"
#include "rbmle/param_space.hpp"
#include "rbmle/verify.hpp"
#include "support.hpp"

using namespace rbmle;
using test::near;

TEST_CASE("model validation rejects bad rows and values") {
    CmdpModel m = fixture_two_state();
    CHECK_NOTHROW(m.validate());
    CmdpModel bad = m;
    bad.kernel(0, 0, 0) = 0.8;
    CHECK_THROWS_AS(bad.validate(), ModelError);
    bad = m;
    bad.reward[1] = 1.5;
    CHECK_THROWS_AS(bad.validate(), ModelError);
    bad = m;
    bad.cost.pop_back();
    CHECK_THROWS_AS(bad.validate(), ModelError);
    bad = m;
    bad.kernel(1, 1, 0) = -0.1;
    bad.kernel(1, 1, 1) = 1.1;
    CHECK_THROWS_AS(bad.validate(), ModelError);
}

TEST_CASE("model json round trip keeps [x][u][y] layout") {
    const CmdpModel m = fixture_three_state();
    nlohmann::json j = m;
    CHECK(j["kernel"][1][1][2].get<double>() == 0.75);
    CHECK(j["reward"][2][0].get<double>() == 0.5);
    const CmdpModel back = j.get<CmdpModel>();
    CHECK(back.kernel == m.kernel);
    CHECK(back.reward == m.reward);
    CHECK(back.cost == m.cost);
    CHECK(back.cost_budget == m.cost_budget);

    const auto path = std::filesystem::temp_directory_path() / "rbmle_model_roundtrip.json";
    save_model(m, path.string());
    CHECK(load_model(path.string()).kernel == m.kernel);
}

TEST_CASE("shipped fixture files match the built-in fixtures") {
    const std::filesystem::path dir = RBMLE_FIXTURE_DIR;
    const std::pair<const char*, CmdpModel> cases[] = {
        {"two_state.json", fixture_two_state()},
        {"three_state.json", fixture_three_state()},
        {"ce_trap.json", fixture_ce_trap()},
    };
    for (const auto& [file, model] : cases) {
        const CmdpModel loaded = load_model((dir / file).string());
        CHECK(loaded.kernel == model.kernel);
        CHECK(loaded.reward == model.reward);
        CHECK(loaded.cost == model.cost);
        CHECK(loaded.cost_budget == model.cost_budget);
    }
}

TEST_CASE("stationary distribution: trivial cases") {
    Kernel one(1, 2, {1.0, 1.0});
    auto mu = stationary_distribution(StationaryPolicy::uniform(1, 2), one);
    REQUIRE(mu.size() == 1);
    CHECK(mu[0] == doctest::Approx(1.0));

    Kernel sym(2, 1, {0.5, 0.5, 0.5, 0.5});
    mu = stationary_distribution(StationaryPolicy::uniform(2, 1), sym);
    CHECK(near(mu[0], 0.5, 1e-12));
    CHECK(near(mu[1], 0.5, 1e-12));
}

TEST_CASE("stationary distribution matches power iteration on random chains") {
    Rng rng(1, "markov-test");
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t ns = 2 + trial % 4;
        const Kernel k = test::random_kernel(rng, ns, 3);
        const StationaryPolicy pi = test::random_policy(rng, ns, 3);
        const auto mu = stationary_distribution(pi, k);
        const auto pw = test::power_stationary(pi, k, 1000);
        double sum = 0.0;
        for (std::size_t x = 0; x < ns; ++x) {
            CHECK(near(mu[x], pw[x], 1e-8));
            CHECK(mu[x] >= 0.0);
            sum += mu[x];
        }
        CHECK(near(sum, 1.0, 1e-12));
        // mu P = mu
        const auto p = induced_chain(pi, k);
        for (std::size_t y = 0; y < ns; ++y) {
            double s = 0.0;
            for (std::size_t x = 0; x < ns; ++x) s += mu[x] * p[x * ns + y];
            CHECK(near(s, mu[y], 1e-9));
        }
    }
}

TEST_CASE("two absorbing states are not unichain") {
    Kernel k(2, 1, {1.0, 0.0, 0.0, 1.0});
    CHECK_THROWS_AS(stationary_distribution(StationaryPolicy::uniform(2, 1), k), NotUnichain);
    CHECK_THROWS_AS(hitting_times(StationaryPolicy::uniform(2, 1), k), NotUnichain);
}

TEST_CASE("average value examples and invariants") {
    Kernel one(1, 2, {1.0, 1.0});
    const std::vector<double> r{0.2, 0.8};
    CHECK(near(average_value(StationaryPolicy::uniform(1, 2), one, r), 0.5, 1e-12));

    Rng rng(2, "avg");
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t ns = 2 + trial % 3;
        const Kernel k = test::random_kernel(rng, ns, 2);
        const StationaryPolicy pi = test::random_policy(rng, ns, 2);
        const std::vector<double> flat(ns * 2, 0.7);
        CHECK(near(average_value(pi, k, flat), 0.7, 1e-12));

        // Relabeling actions leaves the value unchanged.
        Kernel k2(ns, 2);
        StationaryPolicy pi2(ns, 2);
        std::vector<double> v(ns * 2), v2(ns * 2);
        for (auto& e : v) e = rng.uniform();
        for (std::size_t x = 0; x < ns; ++x) {
            for (std::size_t u = 0; u < 2; ++u) {
                pi2(x, 1 - u) = pi(x, u);
                v2[x * 2 + 1 - u] = v[x * 2 + u];
                for (std::size_t y = 0; y < ns; ++y) k2(x, 1 - u, y) = k(x, u, y);
            }
        }
        CHECK(near(average_value(pi, k, v), average_value(pi2, k2, v2), 1e-12));
    }
}

TEST_CASE("average value matches a long simulated time average") {
    const CmdpModel m = fixture_three_state();
    Rng rng(3, "avg-mc");
    const StationaryPolicy pi = test::random_policy(rng, 3, 2);
    const double exact = average_value(pi, m.kernel, m.reward);
    Rng sim(4, "avg-mc-sim");
    std::size_t x = 0;
    double total = 0.0;
    const std::size_t steps = 1'000'000;
    for (std::size_t t = 0; t < steps; ++t) {
        const std::size_t u = sim.categorical(pi.row(x));
        total += m.r(x, u);
        x = sim.categorical(m.kernel.row(x, u));
    }
    CHECK(near(total / static_cast<double>(steps), exact, 3e-3));
}

TEST_CASE("hitting times: closed forms and one-step equation") {
    const double q = 0.3;
    Kernel k(2, 1, {1.0 - q, q, 0.4, 0.6});
    const auto h = hitting_times(StationaryPolicy::uniform(2, 1), k);
    CHECK(near(h[0 * 2 + 1], 1.0 / q, 1e-12));
    CHECK(near(h[1 * 2 + 0], 1.0 / 0.4, 1e-12));

    Kernel one(1, 1, {1.0});
    CHECK(near(hitting_times(StationaryPolicy::uniform(1, 1), one)[0], 1.0, 1e-12));

    Rng rng(5, "hit");
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t ns = 2 + trial % 4;
        const Kernel kr = test::random_kernel(rng, ns, 2);
        const StationaryPolicy pi = test::random_policy(rng, ns, 2);
        const auto ht = hitting_times(pi, kr);
        const auto p = induced_chain(pi, kr);
        const auto mu = stationary_distribution(pi, kr);
        for (std::size_t x = 0; x < ns; ++x) {
            // Kac: the mean return time is 1 / mu(x).
            CHECK(near(ht[x * ns + x], 1.0 / mu[x], 1e-8 * ht[x * ns + x]));
            for (std::size_t y = 0; y < ns; ++y) {
                double rhs = 1.0;
                for (std::size_t z = 0; z < ns; ++z) {
                    if (z != y) rhs += p[x * ns + z] * ht[z * ns + y];
                }
                CHECK(near(ht[x * ns + y], rhs, 1e-9 * std::max(1.0, rhs)));
                CHECK(ht[x * ns + y] >= 1.0);
            }
        }
    }
}

TEST_CASE("hitting times match sampled trajectories") {
    const CmdpModel m = fixture_three_state();
    const StationaryPolicy pi = StationaryPolicy::uniform(3, 2);
    const auto ht = hitting_times(pi, m.kernel);
    Rng rng(6, "hit-mc");
    const std::size_t runs = 100'000;
    for (std::size_t target : {std::size_t{1}, std::size_t{2}}) {
        double total = 0.0;
        for (std::size_t r = 0; r < runs; ++r) {
            std::size_t x = 0, steps = 0;
            do {
                x = rng.categorical(m.kernel.row(x, rng.categorical(pi.row(x))));
                ++steps;
            } while (x != target);
            total += static_cast<double>(steps);
        }
        const double mc = total / static_cast<double>(runs);
        CHECK(near(mc, ht[0 * 3 + target], 0.02 * ht[0 * 3 + target]));
    }
}

TEST_CASE("analyze bundles consistent quantities") {
    const CmdpModel m = fixture_two_state();
    const StationaryPolicy pi = StationaryPolicy::uniform(2, 2);
    const MarkovAnalysis a = analyze(pi, m);
    CHECK(near(a.avg_reward, average_value(pi, m.kernel, m.reward), 1e-15));
    CHECK(near(a.avg_cost, average_value(pi, m.kernel, m.cost), 1e-15));
    CHECK(a.avg_reward >= 0.0);
    CHECK(a.avg_reward <= 1.0);
}

TEST_CASE("structure constants: degenerate, symmetric and enumerated cases") {
    CmdpModel one;
    one.num_states = 1;
    one.num_actions = 2;
    one.kernel = Kernel(1, 2, {1.0, 1.0});
    one.reward = {0.1, 0.2};
    one.cost = {0.0, 0.0};
    one.cost_budget = 1.0;
    const auto sc1 = structure_constants(one, deterministic_policies(1, 2));
    CHECK(sc1.mixing_time == doctest::Approx(1.0));
    CHECK(sc1.conductivity == 0.0);
    CHECK(sc1.degenerate_conductivity);

    CmdpModel sym;
    sym.num_states = 2;
    sym.num_actions = 2;
    sym.kernel = Kernel(2, 2, std::vector<double>(8, 0.5));
    sym.reward = {0, 0, 0, 0};
    sym.cost = {0, 0, 0, 0};
    sym.cost_budget = 1.0;
    const auto sc2 = structure_constants(sym, deterministic_policies(2, 2));
    CHECK(near(sc2.mixing_time, 2.0, 1e-12));

    // Oracle: evaluate the four deterministic policies one by one.
    const CmdpModel m = fixture_two_state();
    const auto det = deterministic_policies(2, 2);
    REQUIRE(det.size() == 4);
    double tp = 0.0, kappa = 0.0;
    for (const auto& pi : det) {
        const auto h = hitting_times(pi, m.kernel);
        for (std::size_t x = 0; x < 2; ++x) {
            tp = std::max({tp, h[x * 2], h[x * 2 + 1]});
            kappa = std::max(kappa, h[x * 2 + (1 - x)] / (2.0 * h[x * 2 + x]));
        }
    }
    const auto sc = structure_constants(m, det);
    CHECK(near(sc.mixing_time, tp, 1e-12));
    CHECK(near(sc.conductivity, kappa, 1e-12));
    CHECK(sc.mixing_time >= 1.0);
    CHECK(sc.conductivity > 0.0);

    CHECK_THROWS(structure_constants(m, std::vector<StationaryPolicy>{}));
}

TEST_CASE("deterministic policies enumerate in odometer order") {
    const auto det = deterministic_policies(2, 3);
    REQUIRE(det.size() == 9);
    CHECK(det[1](0, 0) == 1.0);
    CHECK(det[1](1, 1) == 1.0);
    CHECK(det[3](0, 1) == 1.0);
    CHECK(det[3](1, 0) == 1.0);
}

TEST_CASE("gaps: trivial cases and exhaustive grid agreement") {
    const CmdpModel m = fixture_two_state();
    const CmdpSolution opt = solve_cmdp(m.kernel, m.reward, m.cost, m.cost_budget);
    const std::vector<StationaryPolicy> only_opt{opt.policy};
    const GapReport g0 = gaps(m, only_opt);
    CHECK(near(g0.reward_gap, 0.0, 1e-9));
    CHECK_FALSE(g0.has_infeasible);
    CHECK(g0.cost_gap == kInfinity);

    CmdpModel loose = m;
    loose.cost_budget = 1.0;
    const GapReport gl = gaps(loose, deterministic_policies(2, 2));
    CHECK_FALSE(gl.has_infeasible);
    CHECK(gl.cost_gap == kInfinity);

    // Exhaustive oracle over the 5x5 grid at eps = 0.25.
    const PolicyGrid grid = build_policy_grid(2, 0.25);
    double best_feasible = -kInfinity, cheapest_infeasible = kInfinity;
    for (double a0 = 0.0; a0 <= 1.0 + 1e-12; a0 += 0.25) {
        for (double a1 = 0.0; a1 <= 1.0 + 1e-12; a1 += 0.25) {
            StationaryPolicy pi(2, 2, {a0, 1.0 - a0, a1, 1.0 - a1});
            const double r = average_value(pi, m.kernel, m.reward);
            const double c = average_value(pi, m.kernel, m.cost);
            if (c <= m.cost_budget + kFeasibilityTol) {
                best_feasible = std::max(best_feasible, r);
            } else {
                cheapest_infeasible = std::min(cheapest_infeasible, c);
            }
        }
    }
    const GapReport g = gaps(m, grid.enumerate(2));
    CHECK(near(g.reward_gap, opt.optimal_value - best_feasible, 1e-12));
    CHECK(near(g.cost_gap, cheapest_infeasible - m.cost_budget, 1e-12));
    CHECK(g.reward_gap >= 0.0);
    CHECK(g.cost_gap >= 0.0);
}
