#include "rbmle/model.hpp"

#include <cmath>
#include <fstream>

namespace rbmle {

namespace {

void check_distribution(std::span<const double> row, double tol, const std::string& what) {
    double sum = 0.0;
    for (double v : row) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ModelError(what + ": negative or non-finite probability");
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > tol) {
        throw ModelError(what + ": row sums to " + std::to_string(sum));
    }
}

}  // namespace

Kernel::Kernel(std::size_t num_states, std::size_t num_actions)
    : num_states_(num_states), num_actions_(num_actions),
      data_(num_states * num_actions * num_states, 0.0) {}

Kernel::Kernel(std::size_t num_states, std::size_t num_actions, std::vector<double> data)
    : num_states_(num_states), num_actions_(num_actions), data_(std::move(data)) {
    if (data_.size() != num_states * num_actions * num_states) {
        throw ModelError("kernel data has wrong size");
    }
}

void Kernel::validate(double tol) const {
    if (num_states_ == 0 || num_actions_ == 0) throw ModelError("kernel has no states or actions");
    for (std::size_t x = 0; x < num_states_; ++x) {
        for (std::size_t u = 0; u < num_actions_; ++u) {
            check_distribution(row(x, u), tol,
                               "kernel row (" + std::to_string(x) + "," + std::to_string(u) + ")");
        }
    }
}

double Kernel::max_abs_diff(const Kernel& other) const {
    if (other.data_.size() != data_.size()) throw ModelError("kernel shape mismatch");
    double d = 0.0;
    for (std::size_t i = 0; i < data_.size(); ++i) d = std::max(d, std::abs(data_[i] - other.data_[i]));
    return d;
}

StationaryPolicy::StationaryPolicy(std::size_t num_states, std::size_t num_actions)
    : num_states_(num_states), num_actions_(num_actions), data_(num_states * num_actions, 0.0) {}

StationaryPolicy::StationaryPolicy(std::size_t num_states, std::size_t num_actions,
                                   std::vector<double> data)
    : num_states_(num_states), num_actions_(num_actions), data_(std::move(data)) {
    if (data_.size() != num_states * num_actions) throw ModelError("policy data has wrong size");
}

StationaryPolicy StationaryPolicy::uniform(std::size_t num_states, std::size_t num_actions) {
    return {num_states, num_actions,
            std::vector<double>(num_states * num_actions, 1.0 / static_cast<double>(num_actions))};
}

StationaryPolicy StationaryPolicy::deterministic(std::size_t num_actions,
                                                 std::span<const std::size_t> actions) {
    StationaryPolicy p(actions.size(), num_actions);
    for (std::size_t x = 0; x < actions.size(); ++x) {
        if (actions[x] >= num_actions) throw ModelError("action index out of range");
        p(x, actions[x]) = 1.0;
    }
    return p;
}

void StationaryPolicy::validate(double tol) const {
    for (std::size_t x = 0; x < num_states_; ++x) {
        check_distribution(row(x), tol, "policy row " + std::to_string(x));
    }
}

void CmdpModel::validate() const {
    if (num_states == 0 || num_actions == 0) throw ModelError("model needs at least one state and action");
    if (kernel.num_states() != num_states || kernel.num_actions() != num_actions) {
        throw ModelError("kernel shape does not match model");
    }
    kernel.validate();
    const std::size_t n = num_states * num_actions;
    if (reward.size() != n || cost.size() != n) throw ModelError("reward/cost shape does not match model");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(reward[i] >= 0.0 && reward[i] <= 1.0)) throw ModelError("reward outside [0,1]");
        if (!(cost[i] >= 0.0 && cost[i] <= 1.0)) throw ModelError("cost outside [0,1]");
    }
    if (!(cost_budget >= 0.0 && cost_budget <= 1.0)) throw ModelError("cost budget outside [0,1]");
}

std::vector<double> induced_chain(const StationaryPolicy& policy, const Kernel& kernel) {
    const std::size_t ns = kernel.num_states();
    const std::size_t na = kernel.num_actions();
    if (policy.num_states() != ns || policy.num_actions() != na) {
        throw ModelError("policy shape does not match kernel");
    }
    std::vector<double> chain(ns * ns, 0.0);
    for (std::size_t x = 0; x < ns; ++x) {
        for (std::size_t u = 0; u < na; ++u) {
            const double w = policy(x, u);
            if (w == 0.0) continue;
            for (std::size_t y = 0; y < ns; ++y) chain[x * ns + y] += w * kernel(x, u, y);
        }
    }
    return chain;
}

std::vector<double> induced_values(const StationaryPolicy& policy, std::span<const double> values) {
    const std::size_t ns = policy.num_states();
    const std::size_t na = policy.num_actions();
    if (values.size() != ns * na) throw ModelError("value table shape does not match policy");
    std::vector<double> out(ns, 0.0);
    for (std::size_t x = 0; x < ns; ++x) {
        for (std::size_t u = 0; u < na; ++u) out[x] += policy(x, u) * values[x * na + u];
    }
    return out;
}

void to_json(nlohmann::json& j, const CmdpModel& m) {
    nlohmann::json kernel = nlohmann::json::array();
    nlohmann::json reward = nlohmann::json::array();
    nlohmann::json cost = nlohmann::json::array();
    for (std::size_t x = 0; x < m.num_states; ++x) {
        nlohmann::json kx = nlohmann::json::array();
        nlohmann::json rx = nlohmann::json::array();
        nlohmann::json cx = nlohmann::json::array();
        for (std::size_t u = 0; u < m.num_actions; ++u) {
            auto row = m.kernel.row(x, u);
            kx.push_back(std::vector<double>(row.begin(), row.end()));
            rx.push_back(m.r(x, u));
            cx.push_back(m.c(x, u));
        }
        kernel.push_back(std::move(kx));
        reward.push_back(std::move(rx));
        cost.push_back(std::move(cx));
    }
    j = nlohmann::json{{"num_states", m.num_states},
                       {"num_actions", m.num_actions},
                       {"kernel", std::move(kernel)},
                       {"reward", std::move(reward)},
                       {"cost", std::move(cost)},
                       {"cost_budget", m.cost_budget}};
}

void from_json(const nlohmann::json& j, CmdpModel& m) {
    m.num_states = j.at("num_states").get<std::size_t>();
    m.num_actions = j.at("num_actions").get<std::size_t>();
    const auto& jk = j.at("kernel");
    const auto& jr = j.at("reward");
    const auto& jc = j.at("cost");
    if (jk.size() != m.num_states || jr.size() != m.num_states || jc.size() != m.num_states) {
        throw ModelError("model JSON: outer dimension must equal num_states");
    }
    m.kernel = Kernel(m.num_states, m.num_actions);
    m.reward.assign(m.num_states * m.num_actions, 0.0);
    m.cost.assign(m.num_states * m.num_actions, 0.0);
    for (std::size_t x = 0; x < m.num_states; ++x) {
        if (jk[x].size() != m.num_actions || jr[x].size() != m.num_actions ||
            jc[x].size() != m.num_actions) {
            throw ModelError("model JSON: second dimension must equal num_actions");
        }
        for (std::size_t u = 0; u < m.num_actions; ++u) {
            if (jk[x][u].size() != m.num_states) throw ModelError("model JSON: kernel row has wrong length");
            for (std::size_t y = 0; y < m.num_states; ++y) m.kernel(x, u, y) = jk[x][u][y].get<double>();
            m.reward[x * m.num_actions + u] = jr[x][u].get<double>();
            m.cost[x * m.num_actions + u] = jc[x][u].get<double>();
        }
    }
    m.cost_budget = j.at("cost_budget").get<double>();
    m.validate();
}

void to_json(nlohmann::json& j, const StationaryPolicy& p) {
    j = nlohmann::json::array();
    for (std::size_t x = 0; x < p.num_states(); ++x) {
        auto row = p.row(x);
        j.push_back(std::vector<double>(row.begin(), row.end()));
    }
}

CmdpModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file " + path);
    return nlohmann::json::parse(in).get<CmdpModel>();
}

void save_model(const CmdpModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file " + path);
    out << nlohmann::json(model).dump(2) << '\n';
}

}  // namespace rbmle
