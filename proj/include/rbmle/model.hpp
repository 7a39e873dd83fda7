#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace rbmle {

/// Raised when a model, policy or kernel violates its structural invariants.
class ModelError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Row-stochastic controlled transition kernel, stored as [x][u][y].
class Kernel {
public:
    Kernel() = default;
    Kernel(std::size_t num_states, std::size_t num_actions);
    Kernel(std::size_t num_states, std::size_t num_actions, std::vector<double> data);

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }

    double operator()(std::size_t x, std::size_t u, std::size_t y) const {
        return data_[(x * num_actions_ + u) * num_states_ + y];
    }
    double& operator()(std::size_t x, std::size_t u, std::size_t y) {
        return data_[(x * num_actions_ + u) * num_states_ + y];
    }

    std::span<const double> row(std::size_t x, std::size_t u) const {
        return {data_.data() + (x * num_actions_ + u) * num_states_, num_states_};
    }
    std::span<double> row(std::size_t x, std::size_t u) {
        return {data_.data() + (x * num_actions_ + u) * num_states_, num_states_};
    }

    const std::vector<double>& data() const { return data_; }

    /// Throws ModelError unless every row is a distribution within `tol`.
    void validate(double tol = 1e-12) const;

    /// Largest entrywise absolute difference.
    double max_abs_diff(const Kernel& other) const;

    bool operator==(const Kernel&) const = default;

private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<double> data_;
};

/// Per-state distribution over actions.
class StationaryPolicy {
public:
    StationaryPolicy() = default;
    StationaryPolicy(std::size_t num_states, std::size_t num_actions);
    StationaryPolicy(std::size_t num_states, std::size_t num_actions, std::vector<double> data);

    static StationaryPolicy uniform(std::size_t num_states, std::size_t num_actions);
    static StationaryPolicy deterministic(std::size_t num_actions, std::span<const std::size_t> actions);

    std::size_t num_states() const { return num_states_; }
    std::size_t num_actions() const { return num_actions_; }

    double operator()(std::size_t x, std::size_t u) const { return data_[x * num_actions_ + u]; }
    double& operator()(std::size_t x, std::size_t u) { return data_[x * num_actions_ + u]; }

    std::span<const double> row(std::size_t x) const {
        return {data_.data() + x * num_actions_, num_actions_};
    }
    std::span<double> row(std::size_t x) { return {data_.data() + x * num_actions_, num_actions_}; }

    const std::vector<double>& data() const { return data_; }

    void validate(double tol = 1e-12) const;

    bool operator==(const StationaryPolicy&) const = default;

private:
    std::size_t num_states_ = 0;
    std::size_t num_actions_ = 0;
    std::vector<double> data_;
};

/// Matrix of per-step values v(x,u), used for both rewards and costs.
using StateActionValues = std::vector<double>;

struct CmdpModel {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    Kernel kernel;
    StateActionValues reward;  // r(x,u) at x * num_actions + u
    StateActionValues cost;    // c(x,u)
    double cost_budget = 0.0;  // c_ub

    double r(std::size_t x, std::size_t u) const { return reward[x * num_actions + u]; }
    double c(std::size_t x, std::size_t u) const { return cost[x * num_actions + u]; }

    /// Throws ModelError on shape mismatch, non-stochastic rows, or values outside [0,1].
    void validate() const;
};

/// Induced chain P_pi(x,y) = sum_u pi(x,u) p(x,u,y), row-major |X| x |X|.
std::vector<double> induced_chain(const StationaryPolicy& policy, const Kernel& kernel);

/// r_pi(x) = sum_u pi(x,u) v(x,u).
std::vector<double> induced_values(const StationaryPolicy& policy, std::span<const double> values);

// JSON: {"num_states","num_actions","kernel":[x][u][y],"reward":[x][u],"cost":[x][u],"cost_budget"}
void to_json(nlohmann::json& j, const CmdpModel& m);
void from_json(const nlohmann::json& j, CmdpModel& m);
void to_json(nlohmann::json& j, const StationaryPolicy& p);

CmdpModel load_model(const std::string& path);
void save_model(const CmdpModel& model, const std::string& path);

}  // namespace rbmle
