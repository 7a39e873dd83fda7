#include "rbmle/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <thread>

#include "rbmle/cmdp_lp.hpp"
#include "rbmle/markov.hpp"
#include "rbmle/rng.hpp"

namespace rbmle {

namespace fs = std::filesystem;

Benchmark compute_benchmark(const CmdpModel& model, double policy_epsilon, std::size_t max_class_size) {
    Benchmark b;
    b.c_ub = model.cost_budget;
    b.policy_epsilon = policy_epsilon;
    const CmdpSolution opt = solve_cmdp(model.kernel, model.reward, model.cost, model.cost_budget);
    if (!opt.feasible) throw ModelError("benchmark: the true CMDP is infeasible");
    b.r_star = opt.optimal_value;

    const PolicyGrid grid = build_policy_grid(model.num_actions, policy_epsilon);
    const GapReport g = gaps(model, grid.enumerate(model.num_states, max_class_size));
    b.cost_gap_finite = g.has_infeasible;
    b.cost_gap = g.has_infeasible ? g.cost_gap : 0.0;
    b.c_tilde = b.c_ub + b.cost_gap;
    b.best_grid_reward = g.best_feasible_reward;
    return b;
}

std::vector<double> RegretTrace::reward_regret() const {
    std::vector<double> out(steps.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        acc += steps[i].r;
        out[i] = benchmark.r_star * static_cast<double>(i + 1) - acc;
    }
    return out;
}

std::vector<double> RegretTrace::cost_regret() const {
    std::vector<double> out(steps.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        acc += steps[i].c;
        out[i] = acc - static_cast<double>(i + 1) * benchmark.c_tilde;
    }
    return out;
}

std::vector<double> RegretTrace::episode_reward_regret() const {
    std::vector<double> out(episodes.size(), 0.0);
    for (const auto& s : steps) out[s.episode - 1] += benchmark.r_star - s.r;
    return out;
}

std::vector<double> RegretTrace::episode_cost_regret() const {
    std::vector<double> out(episodes.size(), 0.0);
    for (const auto& s : steps) out[s.episode - 1] += s.c - benchmark.c_tilde;
    return out;
}

RegretTrace simulate(const CmdpModel& model, Agent& agent, std::uint64_t horizon, std::uint64_t seed,
                     const Benchmark& benchmark, std::size_t initial_state) {
    if (horizon == 0) throw std::invalid_argument("simulate: horizon must be >= 1");
    if (initial_state >= model.num_states) throw std::out_of_range("simulate: initial state out of range");
    RegretTrace trace;
    trace.horizon = horizon;
    trace.seed = seed;
    trace.agent = agent.name();
    trace.benchmark = benchmark;
    trace.steps.reserve(horizon);

    Rng env(seed, "env");
    Rng agent_rng(seed, "agent");
    EstimatorState counts(model.num_states, model.num_actions);
    StationaryPolicy policy;
    std::size_t x = initial_state;

    for (std::uint64_t t = 1; t <= horizon; ++t) {
        const std::size_t k = episode_of(t);
        if (trace.episodes.size() < k) {
            const Episode ep = episode(k);
            EpisodePlan plan = agent.plan(counts, ep);
            policy = std::move(plan.policy);
            EpisodeRecord rec;
            rec.k = k;
            rec.start = ep.start;
            rec.length = ep.length;
            rec.theta_index = plan.theta_index;
            rec.objective = plan.objective;
            rec.fallback = plan.fallback;
            rec.visits.assign(model.num_states * model.num_actions, 0);
            trace.episodes.push_back(std::move(rec));
        }
        auto& rec = trace.episodes.back();
        const std::size_t u = act(policy, x, agent_rng);
        const std::size_t y = env.categorical(model.kernel.row(x, u));
        trace.steps.push_back({t, x, u, model.r(x, u), model.c(x, u), k});
        counts.record(x, u, y);
        ++rec.visits[x * model.num_actions + u];
        ++rec.played;
        x = y;
    }
    return trace;
}

double smallest_transition(const Kernel& kernel) {
    double m = 1.0;
    for (double v : kernel.data()) {
        if (v > 0.0) m = std::min(m, v);
    }
    return m;
}

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
    }
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(); }

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

ExperimentConfig parse_config(const nlohmann::json& j, const fs::path& base_dir) {
    reject_unknown(j,
                   {"model", "model_file", "agent", "policy_epsilon", "theta_epsilon", "enforce_p_min",
                    "max_net_size", "horizon", "seeds", "num_seeds", "initial_state", "output_dir", "threads"},
                   "experiment config");
    ExperimentConfig c;
    c.raw = j;
    if (j.contains("model") == j.contains("model_file")) {
        throw std::invalid_argument("config: give exactly one of 'model' and 'model_file'");
    }
    if (j.contains("model")) {
        c.model = j.at("model").get<CmdpModel>();
    } else {
        fs::path p = j.at("model_file").get<std::string>();
        c.model = load_model((p.is_absolute() ? p : base_dir / p).string());
    }

    if (j.contains("theta_epsilon")) c.agent.theta_epsilon = j.at("theta_epsilon").get<double>();
    if (j.contains("enforce_p_min")) c.agent.enforce_p_min = j.at("enforce_p_min").get<bool>();
    if (j.contains("agent")) {
        const auto& a = j.at("agent");
        reject_unknown(a, {"type", "a", "b", "theta_epsilon", "enforce_p_min", "p_min", "fallback"}, "agent");
        if (a.contains("type")) c.agent.type = a.at("type").get<std::string>();
        if (a.contains("a")) c.agent.a = a.at("a").get<double>();
        if (a.contains("b")) c.agent.b = a.at("b").get<double>();
        if (a.contains("theta_epsilon")) c.agent.theta_epsilon = a.at("theta_epsilon").get<double>();
        if (a.contains("enforce_p_min")) c.agent.enforce_p_min = a.at("enforce_p_min").get<bool>();
        if (a.contains("p_min")) c.agent.p_min = a.at("p_min").get<double>();
        if (a.contains("fallback")) c.agent.fallback = a.at("fallback").get<std::string>();
    }
    if (c.agent.type != "rbmle" && c.agent.type != "ce" && c.agent.type != "oracle") {
        throw std::invalid_argument("config: agent.type must be rbmle, ce or oracle");
    }
    if (c.agent.fallback != "uniform") throw std::invalid_argument("config: only the 'uniform' fallback is supported");
    if (c.agent.a && !(*c.agent.a >= 0.0)) throw std::invalid_argument("config: agent.a must be >= 0");

    if (j.contains("policy_epsilon")) c.policy_epsilon = j.at("policy_epsilon").get<double>();
    if (j.contains("max_net_size")) c.max_net_size = j.at("max_net_size").get<std::size_t>();
    if (j.contains("horizon")) c.horizon = j.at("horizon").get<std::uint64_t>();
    if (c.horizon < 1) throw std::invalid_argument("config: horizon must be >= 1");
    if (j.contains("seeds") && j.contains("num_seeds")) {
        throw std::invalid_argument("config: give at most one of 'seeds' and 'num_seeds'");
    }
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("num_seeds")) {
        const auto n = j.at("num_seeds").get<std::uint64_t>();
        c.seeds.clear();
        for (std::uint64_t s = 0; s < n; ++s) c.seeds.push_back(s);
    }
    if (c.seeds.empty()) throw std::invalid_argument("config: at least one seed is required");
    if (j.contains("initial_state")) c.initial_state = j.at("initial_state").get<std::size_t>();
    if (c.initial_state >= c.model.num_states) throw std::invalid_argument("config: initial_state out of range");
    if (j.contains("output_dir")) {
        fs::path p = j.at("output_dir").get<std::string>();
        c.output_dir = p.is_absolute() ? p : base_dir / p;
    } else {
        c.output_dir = base_dir / "out";
    }
    if (j.contains("threads")) c.threads = std::max(1u, j.at("threads").get<unsigned>());
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path.string());
    return parse_config(nlohmann::json::parse(in), path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

AgentFactory::AgentFactory(const ExperimentConfig& config) : type_(config.agent.type), model_(config.model) {
    if (type_ == "oracle") {
        OracleAgent probe(model_);  // fail early on an infeasible model
        return;
    }
    const double p_min = config.agent.p_min.value_or(smallest_transition(model_.kernel));
    const ParameterSpace space = ParameterSpace::from_kernel(model_.kernel, p_min);
    auto net = std::make_shared<ThetaNet>(
        build_theta_net(space, config.agent.theta_epsilon, config.agent.enforce_p_min, config.max_net_size));
    values_ = std::make_shared<NetValues>(
        compute_net_values(*net, model_.reward, model_.cost, model_.cost_budget, config.threads));
    net_ = std::move(net);

    schedule_.b = config.agent.b;
    schedule_.num_states = model_.num_states;
    schedule_.num_actions = model_.num_actions;
    if (type_ == "ce") {
        schedule_.a = 0.0;
    } else if (config.agent.a) {
        schedule_.a = *config.agent.a;
    } else {
        const PolicyGrid grid = build_policy_grid(model_.num_actions, config.policy_epsilon);
        const GapReport g = gaps(model_, grid.enumerate(model_.num_states));
        const double delta = std::min(g.reward_gap, g.cost_gap);
        if (!(delta > 0.0) || !std::isfinite(delta)) {
            throw std::invalid_argument("config: agent.a is required because the gap on this model is " +
                                        format_double(delta));
        }
        schedule_.a = default_bias_scale(model_.num_states, model_.num_actions, p_min, delta);
    }
}

std::unique_ptr<Agent> AgentFactory::make() const {
    if (type_ == "oracle") return std::make_unique<OracleAgent>(model_);
    return std::make_unique<RbmleAgent>(net_, values_, schedule_, type_);
}

std::vector<std::uint64_t> time_grid(std::uint64_t horizon) {
    std::vector<std::uint64_t> g;
    for (std::uint64_t t = 1; t <= horizon; t *= 2) {
        g.push_back(t);
        if (t > horizon / 2) break;
    }
    if (g.empty() || g.back() != horizon) g.push_back(horizon);
    return g;
}

std::vector<SummaryRow> summarize(const std::vector<std::vector<double>>& rr,
                                  const std::vector<std::vector<double>>& rc, std::uint64_t horizon) {
    if (rr.empty() || rr.size() != rc.size()) throw std::invalid_argument("summarize: need matching non-empty series");
    for (std::size_t i = 0; i < rr.size(); ++i) {
        if (rr[i].size() < horizon || rc[i].size() < horizon) {
            throw std::invalid_argument("summarize: series shorter than the horizon");
        }
    }
    auto band = [](const std::vector<std::vector<double>>& s, std::uint64_t t, double& mean, double& lo, double& hi) {
        const double n = static_cast<double>(s.size());
        double m = 0.0;
        for (const auto& v : s) m += v[t - 1];
        m /= n;
        double ss = 0.0;
        for (const auto& v : s) ss += (v[t - 1] - m) * (v[t - 1] - m);
        const double half = s.size() > 1 ? 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
        mean = m;
        lo = m - half;
        hi = m + half;
    };
    std::vector<SummaryRow> rows;
    for (std::uint64_t t : time_grid(horizon)) {
        SummaryRow r;
        r.t = t;
        band(rr, t, r.mean_rr, r.lo_rr, r.hi_rr);
        band(rc, t, r.mean_rc, r.lo_rc, r.hi_rc);
        rows.push_back(r);
    }
    return rows;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << "t,mean_Rr,lo_Rr,hi_Rr,mean_Rc,lo_Rc,hi_Rc\n";
    for (const auto& r : rows) {
        out << r.t << ',' << format_double(r.mean_rr) << ',' << format_double(r.lo_rr) << ','
            << format_double(r.hi_rr) << ',' << format_double(r.mean_rc) << ',' << format_double(r.lo_rc) << ','
            << format_double(r.hi_rc) << '\n';
    }
}

void write_trace_jsonl(const RegretTrace& trace, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const auto& s : trace.steps) {
        nlohmann::ordered_json j;
        j["t"] = s.t;
        j["x"] = s.x;
        j["u"] = s.u;
        j["r"] = s.r;
        j["c"] = s.c;
        j["episode"] = s.episode;
        out << j.dump() << '\n';
    }
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    ExperimentResult result;
    result.benchmark = compute_benchmark(config.model, config.policy_epsilon);
    const AgentFactory factory(config);

    const std::size_t n = config.seeds.size();
    std::vector<std::optional<RegretTrace>> traces(n);
    result.seeds.resize(n);
    auto work = [&](std::size_t w, std::size_t stride) {
        for (std::size_t i = w; i < n; i += stride) {
            auto& o = result.seeds[i];
            o.seed = config.seeds[i];
            try {
                auto agent = factory.make();
                traces[i] = simulate(config.model, *agent, config.horizon, o.seed, result.benchmark,
                                     config.initial_state);
                o.ok = true;
            } catch (const std::exception& e) {
                o.error = e.what();
            }
        }
    };
    const std::size_t workers = std::min<std::size_t>(config.threads, n);
    if (workers <= 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
        for (auto& t : pool) t.join();
    }

    fs::create_directories(config.output_dir / "traces");
    std::vector<std::vector<double>> rr, rc;
    nlohmann::json seeds_json = nlohmann::json::array();
    for (std::size_t i = 0; i < n; ++i) {
        auto& o = result.seeds[i];
        nlohmann::json sj{{"seed", o.seed}, {"ok", o.ok}};
        if (!o.ok) {
            ++result.failures;
            sj["error"] = o.error;
            seeds_json.push_back(std::move(sj));
            continue;
        }
        const RegretTrace& tr = *traces[i];
        write_trace_jsonl(tr, config.output_dir / "traces" / ("seed_" + std::to_string(o.seed) + ".jsonl"));
        rr.push_back(tr.reward_regret());
        rc.push_back(tr.cost_regret());
        o.final_reward_regret = rr.back().back();
        o.final_cost_regret = rc.back().back();
        nlohmann::json eps = nlohmann::json::array();
        for (const auto& e : tr.episodes) {
            o.fallback_episodes += e.fallback ? 1 : 0;
            eps.push_back({{"k", e.k},
                           {"start", e.start},
                           {"length", e.length},
                           {"played", e.played},
                           {"theta_index", e.theta_index ? nlohmann::json(*e.theta_index) : nlohmann::json()},
                           {"objective", finite_or_null(e.objective)},
                           {"fallback", e.fallback}});
        }
        sj["final_Rr"] = o.final_reward_regret;
        sj["final_Rc"] = o.final_cost_regret;
        sj["final_Rc_pos"] = std::max(0.0, o.final_cost_regret);
        sj["fallback_episodes"] = o.fallback_episodes;
        sj["episodes"] = std::move(eps);
        seeds_json.push_back(std::move(sj));
        result.traces.push_back(std::move(*traces[i]));
    }
    if (!rr.empty()) write_summary_csv(summarize(rr, rc, config.horizon), config.output_dir / "summary.csv");

    const Benchmark& b = result.benchmark;
    nlohmann::json manifest{
        {"config_hash", hex64(fnv1a(config.raw.dump()))},
        {"config", config.raw},
        {"benchmark",
         {{"r_star", b.r_star},
          {"c_ub", b.c_ub},
          {"cost_gap", b.cost_gap},
          {"cost_gap_finite", b.cost_gap_finite},
          {"c_tilde", b.c_tilde},
          {"policy_epsilon", b.policy_epsilon},
          {"best_grid_reward", finite_or_null(b.best_grid_reward)}}},
        {"agent",
         {{"type", config.agent.type},
          {"a", factory.bias_scale()},
          {"b", config.agent.b},
          {"theta_epsilon", config.agent.theta_epsilon},
          {"net_size", factory.net_size()}}},
        {"horizon", config.horizon},
        {"failures", result.failures},
        {"seeds", std::move(seeds_json)}};
    std::ofstream out(config.output_dir / "manifest.json", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write manifest");
    out << manifest.dump(2) << '\n';
    return result;
}

std::size_t sweep(const nlohmann::json& config, const fs::path& base_dir, const std::string& path,
                  const std::vector<std::string>& values) {
    std::string pointer = path;
    if (pointer.empty() || pointer[0] != '/') {
        pointer = "/" + pointer;
        std::replace(pointer.begin(), pointer.end(), '.', '/');
    }
    std::string label = pointer.substr(1);
    std::replace(label.begin(), label.end(), '/', '.');
    const fs::path root = config.contains("output_dir") ? fs::path(config.at("output_dir").get<std::string>())
                                                        : fs::path("out");
    std::size_t dead = 0;
    for (const auto& v : values) {
        nlohmann::json j = config;
        nlohmann::json parsed = nlohmann::json::parse(v, nullptr, false);
        j[nlohmann::json::json_pointer(pointer)] = parsed.is_discarded() ? nlohmann::json(v) : parsed;
        j["output_dir"] = (root / (label + "=" + v)).string();
        const ExperimentResult r = run_experiment(parse_config(j, base_dir));
        if (r.failures == r.seeds.size()) ++dead;
    }
    return dead;
}

std::vector<SummaryRow> plot_data(const fs::path& traces, const fs::path& manifest) {
    std::ifstream min(manifest);
    if (!min) throw std::runtime_error("cannot open manifest " + manifest.string());
    const nlohmann::json m = nlohmann::json::parse(min);
    const double r_star = m.at("benchmark").at("r_star").get<double>();
    const double c_tilde = m.at("benchmark").at("c_tilde").get<double>();

    std::vector<fs::path> files;
    if (fs::is_directory(traces)) {
        for (const auto& e : fs::directory_iterator(traces)) {
            if (e.path().extension() == ".jsonl") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(traces);
    }
    if (files.empty()) throw std::runtime_error("no trace files under " + traces.string());

    std::vector<std::vector<double>> rr, rc;
    std::uint64_t horizon = 0;
    for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) throw std::runtime_error("cannot open trace " + f.string());
        std::vector<double> a, b;
        double sr = 0.0, sc = 0.0;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto j = nlohmann::json::parse(line);
            const auto t = j.at("t").get<std::uint64_t>();
            if (t != a.size() + 1) throw std::runtime_error(f.string() + ": steps out of order");
            sr += j.at("r").get<double>();
            sc += j.at("c").get<double>();
            a.push_back(r_star * static_cast<double>(t) - sr);
            b.push_back(sc - static_cast<double>(t) * c_tilde);
        }
        if (a.empty()) throw std::runtime_error(f.string() + ": empty trace");
        if (horizon != 0 && a.size() != horizon) throw std::runtime_error("traces have different horizons");
        horizon = a.size();
        rr.push_back(std::move(a));
        rc.push_back(std::move(b));
    }
    return summarize(rr, rc, horizon);
}

}  // namespace rbmle
