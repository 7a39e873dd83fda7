#include <doctest.h>

#include "rbmle/cmdp_lp.hpp"
#include "rbmle/markov.hpp"
#include "rbmle/verify.hpp"
#include "support.hpp"

using namespace rbmle;
using test::near;

TEST_CASE("brute force: unconstrained optimum, infeasible sentinel, size cap") {
    CmdpModel m = fixture_two_state();
    m.cost_budget = 1.0;
    double best = -kInfinity;
    for (const auto& pi : deterministic_policies(2, 2)) best = std::max(best, average_value(pi, m.kernel, m.reward));
    CHECK(near(brute_force_cmdp(m, 0.1), best, 1e-12));

    m.cost_budget = 0.05;
    CHECK(brute_force_cmdp(m, 0.1) == -kInfinity);

    CHECK_THROWS_AS(brute_force_cmdp(fixture_three_state(), 0.01, 1000), ModelError);
    CHECK_THROWS_AS(brute_force_cmdp(m, 0.3), ModelError);
}

TEST_CASE("brute force approaches the LP value from below") {
    const CmdpModel m = fixture_two_state();
    const double lp = solve_cmdp(m.kernel, m.reward, m.cost, m.cost_budget).optimal_value;
    const double coarse = brute_force_cmdp(m, 0.1);
    const double fine = brute_force_cmdp(m, 0.01);
    CHECK(coarse <= lp + 1e-12);
    CHECK(fine <= lp + 1e-12);
    CHECK(fine >= coarse - 1e-12);
    CHECK(near(fine, lp, 1e-2));
}

TEST_CASE("random models respect their construction") {
    Rng rng(51, "models");
    for (int i = 0; i < 20; ++i) {
        const CmdpModel m = random_model(rng, 3, 2, 0.05);
        CHECK_NOTHROW(m.validate());
        for (std::size_t x = 0; x < 3; ++x)
            for (std::size_t u = 0; u < 2; ++u)
                for (std::size_t y = 0; y < 3; ++y) CHECK(m.kernel(x, u, y) >= 0.05 - 1e-12);
        const CmdpModel f = random_strictly_feasible_model(rng, 2, 2, 0.05, 0.05);
        CHECK(solve_cmdp(f.kernel, f.reward, f.cost, f.cost_budget).feasible);
    }
}

TEST_CASE("precondition skips") {
    const CheckReport f = check_f_crossing(0.5, 1.0);
    CHECK(f.skipped);
    CHECK(f.pass());
    CHECK(check_f_crossing(3.0, 1.0).pass());
    CHECK_FALSE(check_f_crossing(3.0, 1.0).skipped);

    const CmdpModel m = fixture_two_state();
    const ThetaNet net = build_theta_net(ParameterSpace::from_kernel(m.kernel, 0.1), 0.1);
    const CheckReport s = check_index_separation(m, net, 1.0, 5, 0);
    CHECK(s.skipped);
    CHECK(s.trials == 0);
}

TEST_CASE("every suite passes and unknown suites are rejected") {
    for (const auto& name : suite_names()) {
        if (name == "all") continue;
        for (const auto& r : run_suite(name, 0)) {
            INFO(name << ": " << r.name << " " << r.note);
            CHECK(r.pass());
        }
    }
    CHECK_THROWS(run_suite("nope"));
    const std::string table = format_reports(run_suite("core", 1));
    CHECK(table.find("stationary") != std::string::npos);
}
