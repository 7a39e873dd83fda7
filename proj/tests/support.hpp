#pragma once

#include <cmath>
#include <vector>

#include "rbmle/model.hpp"
#include "rbmle/rng.hpp"

namespace test {

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline std::vector<double> random_distribution(rbmle::Rng& rng, std::size_t n, double floor = 0.0) {
    std::vector<double> w(n);
    double s = 0.0;
    for (auto& v : w) s += (v = floor + rng.uniform());
    for (auto& v : w) v /= s;
    return w;
}

inline rbmle::Kernel random_kernel(rbmle::Rng& rng, std::size_t ns, std::size_t na, double floor = 0.05) {
    rbmle::Kernel k(ns, na);
    for (std::size_t x = 0; x < ns; ++x)
        for (std::size_t u = 0; u < na; ++u) {
            const auto row = random_distribution(rng, ns, floor);
            for (std::size_t y = 0; y < ns; ++y) k(x, u, y) = row[y];
        }
    return k;
}

inline rbmle::StationaryPolicy random_policy(rbmle::Rng& rng, std::size_t ns, std::size_t na) {
    rbmle::StationaryPolicy p(ns, na);
    for (std::size_t x = 0; x < ns; ++x) {
        const auto row = random_distribution(rng, na);
        for (std::size_t u = 0; u < na; ++u) p(x, u) = row[u];
    }
    return p;
}

inline rbmle::CmdpModel random_cmdp(rbmle::Rng& rng, std::size_t ns, std::size_t na, double c_ub) {
    rbmle::CmdpModel m;
    m.num_states = ns;
    m.num_actions = na;
    m.kernel = random_kernel(rng, ns, na);
    m.reward.resize(ns * na);
    m.cost.resize(ns * na);
    for (auto& v : m.reward) v = rng.uniform();
    for (auto& v : m.cost) v = rng.uniform();
    m.cost_budget = c_ub;
    return m;
}

// Power iteration on the induced chain; independent of the LU path.
inline std::vector<double> power_stationary(const rbmle::StationaryPolicy& pi, const rbmle::Kernel& k,
                                            int iters = 20000) {
    const std::size_t n = k.num_states();
    std::vector<double> v(n, 1.0 / static_cast<double>(n)), next(n);
    for (int it = 0; it < iters; ++it) {
        std::fill(next.begin(), next.end(), 0.0);
        for (std::size_t x = 0; x < n; ++x)
            for (std::size_t u = 0; u < k.num_actions(); ++u)
                for (std::size_t y = 0; y < n; ++y) next[y] += v[x] * pi(x, u) * k(x, u, y);
        v.swap(next);
    }
    return v;
}

}  // namespace test
