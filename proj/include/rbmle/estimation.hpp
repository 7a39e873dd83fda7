#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "rbmle/model.hpp"

namespace rbmle {

/// Transition counts and the maximum-likelihood kernel they imply.
class EstimatorState {
public:
    EstimatorState() = default;
    EstimatorState(std::size_t num_states, std::size_t num_actions);

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }

    /// Throws std::out_of_range on bad indices.
    void record(std::size_t x, std::size_t u, std::size_t y);

    std::uint64_t t() const { return t_; }
    std::uint64_t count(std::size_t x, std::size_t u) const { return n_xu_[x * num_actions_ + u]; }
    std::uint64_t count(std::size_t x, std::size_t u, std::size_t y) const {
        return n_xuy_[(x * num_actions_ + u) * num_states_ + y];
    }

    /// p_hat(x,u,y) = n(x,u,y) / max(n(x,u), 1); unvisited rows are all zero.
    double mle(std::size_t x, std::size_t u, std::size_t y) const;
    std::vector<double> mle_row(std::size_t x, std::size_t u) const;
    Kernel mle_kernel() const;

    /// {"t", "n_xu": [x][u], "n_xyu": [x][y][u]}
    nlohmann::json snapshot() const;
    static EstimatorState from_snapshot(const nlohmann::json& j);

    bool operator==(const EstimatorState&) const = default;

private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::uint64_t t_ = 0;
    std::vector<std::uint64_t> n_xu_;
    std::vector<std::uint64_t> n_xuy_;  // (x * |U| + u) * |X| + y
};

/// sum p1 log(p1/p2) with 0 log 0 = 0; +inf when p1 > 0 where p2 = 0.
/// Throws std::invalid_argument on mismatched lengths or non-distributions.
double kl(std::span<const double> p1, std::span<const double> p2);

/// sqrt(log(t^b |X|^2 |U|) / n); +inf when n = 0.
double d1(std::uint64_t n, double t, double b, std::size_t num_states, std::size_t num_actions);

/// sqrt(alpha / (2n) * (1 + 1 / (2 a |X| p_min))); +inf when n = 0.
double d2(std::uint64_t n, double alpha_value, double a, double p_min, std::size_t num_states);

struct ConfidenceSet {
    Kernel center;              // p_hat(t)
    std::vector<double> radii;  // d1(x,u;t) at x * |U| + u
    double b = 3.0;
    double t = 1.0;
};

inline constexpr double kDefaultB = 3.0;

/// Confidence set at time t (defaults to the number of recorded steps, at least 1).
ConfidenceSet confidence_set(const EstimatorState& state, double b = kDefaultB, double t = 0.0);

bool in_confidence_set(const Kernel& theta, const ConfidenceSet& cs);

/// Per-(x,u) visit floor y/2 - sqrt(y log T), clamped at 0, where
/// y = sum of floor(|E_k| / (2 T_p)) over episodes k with a visit to (x,u).
/// episode_visits[k] holds per-(x,u) counts in episode k.
std::vector<double> g2_threshold(std::span<const std::vector<std::uint64_t>> episode_visits,
                                 std::span<const std::uint64_t> episode_lengths, double mixing_time,
                                 double horizon);

}  // namespace rbmle
