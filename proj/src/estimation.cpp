#include "rbmle/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rbmle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_distribution(std::span<const double> p, const char* name) {
    double s = 0.0;
    for (double v : p) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + ": bad entry");
        s += v;
    }
    if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument(std::string(name) + ": does not sum to one");
}

}  // namespace

EstimatorState::EstimatorState(std::size_t num_states, std::size_t num_actions)
    : num_states_(num_states), num_actions_(num_actions), n_xu_(num_states * num_actions, 0),
      n_xuy_(num_states * num_actions * num_states, 0) {}

void EstimatorState::record(std::size_t x, std::size_t u, std::size_t y) {
    if (x >= num_states_ || y >= num_states_ || u >= num_actions_) {
        throw std::out_of_range("record: index out of range");
    }
    ++t_;
    ++n_xu_[x * num_actions_ + u];
    ++n_xuy_[(x * num_actions_ + u) * num_states_ + y];
}

double EstimatorState::mle(std::size_t x, std::size_t u, std::size_t y) const {
    const std::uint64_t n = count(x, u);
    return static_cast<double>(count(x, u, y)) / static_cast<double>(n == 0 ? 1 : n);
}

std::vector<double> EstimatorState::mle_row(std::size_t x, std::size_t u) const {
    std::vector<double> row(num_states_);
    for (std::size_t y = 0; y < num_states_; ++y) row[y] = mle(x, u, y);
    return row;
}

Kernel EstimatorState::mle_kernel() const {
    Kernel k(num_states_, num_actions_);
    for (std::size_t x = 0; x < num_states_; ++x) {
        for (std::size_t u = 0; u < num_actions_; ++u) {
            for (std::size_t y = 0; y < num_states_; ++y) k(x, u, y) = mle(x, u, y);
        }
    }
    return k;
}

nlohmann::json EstimatorState::snapshot() const {
    nlohmann::json n_xu = nlohmann::json::array();
    nlohmann::json n_xyu = nlohmann::json::array();
    for (std::size_t x = 0; x < num_states_; ++x) {
        nlohmann::json a = nlohmann::json::array();
        for (std::size_t u = 0; u < num_actions_; ++u) a.push_back(count(x, u));
        n_xu.push_back(std::move(a));
        nlohmann::json b = nlohmann::json::array();
        for (std::size_t y = 0; y < num_states_; ++y) {
            nlohmann::json c = nlohmann::json::array();
            for (std::size_t u = 0; u < num_actions_; ++u) c.push_back(count(x, u, y));
            b.push_back(std::move(c));
        }
        n_xyu.push_back(std::move(b));
    }
    return {{"t", t_}, {"n_xu", std::move(n_xu)}, {"n_xyu", std::move(n_xyu)}};
}

EstimatorState EstimatorState::from_snapshot(const nlohmann::json& j) {
    const auto& n_xu = j.at("n_xu");
    const auto& n_xyu = j.at("n_xyu");
    const std::size_t ns = n_xu.size();
    if (ns == 0 || n_xyu.size() != ns) throw std::invalid_argument("snapshot: inconsistent state dimension");
    const std::size_t na = n_xu[0].size();
    EstimatorState s(ns, na);
    s.t_ = j.at("t").get<std::uint64_t>();
    std::uint64_t total = 0;
    for (std::size_t x = 0; x < ns; ++x) {
        if (n_xu[x].size() != na || n_xyu[x].size() != ns) {
            throw std::invalid_argument("snapshot: ragged count arrays");
        }
        for (std::size_t u = 0; u < na; ++u) {
            std::uint64_t row = 0;
            for (std::size_t y = 0; y < ns; ++y) {
                const auto v = n_xyu[x][y].at(u).get<std::uint64_t>();
                s.n_xuy_[(x * na + u) * ns + y] = v;
                row += v;
            }
            s.n_xu_[x * na + u] = n_xu[x][u].get<std::uint64_t>();
            if (row != s.n_xu_[x * na + u]) throw std::invalid_argument("snapshot: n_xyu does not sum to n_xu");
            total += row;
        }
    }
    if (total != s.t_) throw std::invalid_argument("snapshot: counts do not sum to t");
    return s;
}

double kl(std::span<const double> p1, std::span<const double> p2) {
    if (p1.size() != p2.size()) throw std::invalid_argument("kl: length mismatch");
    check_distribution(p1, "kl first argument");
    check_distribution(p2, "kl second argument");
    double s = 0.0;
    for (std::size_t i = 0; i < p1.size(); ++i) {
        if (p1[i] == 0.0) continue;
        if (p2[i] == 0.0) return kInf;
        s += p1[i] * std::log(p1[i] / p2[i]);
    }
    return std::max(0.0, s);
}

double d1(std::uint64_t n, double t, double b, std::size_t num_states, std::size_t num_actions) {
    if (n == 0) return kInf;
    const double ns = static_cast<double>(num_states);
    const double arg = b * std::log(t) + std::log(ns * ns * static_cast<double>(num_actions));
    return std::sqrt(arg / static_cast<double>(n));
}

double d2(std::uint64_t n, double alpha_value, double a, double p_min, std::size_t num_states) {
    if (n == 0) return kInf;
    const double corr = 1.0 + 1.0 / (2.0 * a * static_cast<double>(num_states) * p_min);
    return std::sqrt(alpha_value / (2.0 * static_cast<double>(n)) * corr);
}

ConfidenceSet confidence_set(const EstimatorState& state, double b, double t) {
    ConfidenceSet cs;
    cs.center = state.mle_kernel();
    cs.b = b;
    cs.t = t > 0.0 ? t : std::max<double>(1.0, static_cast<double>(state.t()));
    cs.radii.resize(state.num_states() * state.num_actions());
    for (std::size_t x = 0; x < state.num_states(); ++x) {
        for (std::size_t u = 0; u < state.num_actions(); ++u) {
            cs.radii[x * state.num_actions() + u] =
                d1(state.count(x, u), cs.t, b, state.num_states(), state.num_actions());
        }
    }
    return cs;
}

bool in_confidence_set(const Kernel& theta, const ConfidenceSet& cs) {
    const std::size_t ns = cs.center.num_states();
    const std::size_t na = cs.center.num_actions();
    if (theta.num_states() != ns || theta.num_actions() != na) throw ModelError("kernel shape mismatch");
    for (std::size_t x = 0; x < ns; ++x) {
        for (std::size_t u = 0; u < na; ++u) {
            const double r = cs.radii[x * na + u];
            for (std::size_t y = 0; y < ns; ++y) {
                if (std::abs(theta(x, u, y) - cs.center(x, u, y)) > r) return false;
            }
        }
    }
    return true;
}

std::vector<double> g2_threshold(std::span<const std::vector<std::uint64_t>> episode_visits,
                                 std::span<const std::uint64_t> episode_lengths, double mixing_time,
                                 double horizon) {
    if (episode_visits.size() != episode_lengths.size()) {
        throw std::invalid_argument("g2_threshold: one length per episode required");
    }
    if (!(mixing_time >= 1.0) || !(horizon >= 1.0)) throw std::invalid_argument("g2_threshold: T_p and T must be >= 1");
    const std::size_t pairs = episode_visits.empty() ? 0 : episode_visits[0].size();
    std::vector<double> y(pairs, 0.0);
    for (std::size_t k = 0; k < episode_visits.size(); ++k) {
        if (episode_visits[k].size() != pairs) throw std::invalid_argument("g2_threshold: ragged visit table");
        const double blocks = std::floor(static_cast<double>(episode_lengths[k]) / (2.0 * mixing_time));
        for (std::size_t i = 0; i < pairs; ++i) {
            if (episode_visits[k][i] > 0) y[i] += blocks;
        }
    }
    const double log_t = std::log(horizon);
    std::vector<double> out(pairs);
    for (std::size_t i = 0; i < pairs; ++i) out[i] = std::max(0.0, y[i] / 2.0 - std::sqrt(y[i] * log_t));
    return out;
}

}  // namespace rbmle
