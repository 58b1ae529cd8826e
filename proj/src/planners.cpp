#include "drmdp/planners.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace drmdp {

const ValueTable::Entry* ValueTable::find(int state, int stage) const {
    auto it = map_.find(key(state, stage));
    return it == map_.end() ? nullptr : &it->second;
}

void ValueTable::set(int state, int stage, double value, int action) {
    auto [it, inserted] = map_.try_emplace(key(state, stage));
    Entry& e = it->second;
    if (inserted || e.value != value) e.stamp = ++clock_;
    e.value = value;
    e.action = action;
}

std::vector<ValueTable::Row> ValueTable::rows() const {
    std::vector<Row> out;
    out.reserve(map_.size());
    for (const auto& [k, e] : map_)
        out.push_back({static_cast<int>(k % static_cast<std::uint64_t>(T_ + 1)),
                       static_cast<int>(k / static_cast<std::uint64_t>(T_ + 1)), e});
    std::sort(out.begin(), out.end(), [](const Row& a, const Row& b) {
        return a.stage != b.stage ? a.stage < b.stage : a.state < b.state;
    });
    return out;
}

BellmanConfig bellman_config(const ModelBundle& bundle, const PlannerConfig& cfg) {
    BellmanConfig bc;
    bc.lambda = bundle.params().lambda;
    bc.ambiguity = bundle.ambiguity();
    bc.robust_budget = cfg.robust_budget;
    bc.mip = cfg.mip;
    bc.debug = cfg.debug;
    return bc;
}

double admissible_heuristic(const std::vector<double>& rewards, int stage, int T) {
    if (stage >= T || rewards.empty()) return 0.0;
    return *std::max_element(rewards.begin(), rewards.end());
}

Heuristic planner_heuristic(const ModelBundle& bundle, HeuristicKind kind, Backend backend) {
    return {kind, is_drmdp(backend) ? bundle.penalty_allowance() : 0.0};
}

double admissible_heuristic(const ModelBundle& bundle, int state, int stage, const Heuristic& h) {
    const int T = bundle.params().T;
    if (stage >= T || !bundle.grid().in_S(state)) return 0.0;
    double value = h.kind == HeuristicKind::Zero ? 0.0 : bundle.best_reward(state);
    if (h.stage_allowance > 0.0) {
        double discount = 1.0;
        for (int t = stage; t < T; ++t) {
            value += discount * h.stage_allowance;
            discount *= bundle.params().lambda;
        }
    }
    return value;
}

double lookup_value(const ModelBundle& bundle, const ValueTable& table, int state, int stage,
                    const Heuristic& h) {
    if (stage >= bundle.params().T || !bundle.grid().in_S(state)) return 0.0;
    if (const auto* e = table.find(state, stage)) return e->value;
    return admissible_heuristic(bundle, state, stage, h);
}

std::vector<double> successor_values(const ModelBundle& bundle, const ValueTable& table,
                                     const StateModel& sm, int stage, const Heuristic& h) {
    std::vector<double> v(sm.width());
    for (std::size_t j = 0; j < sm.width(); ++j)
        v[j] = lookup_value(bundle, table, sm.support[j], stage, h);
    return v;
}

int sample_in_S(const ModelBundle& bundle, const StateModel& sm, const double* row,
                double exploration, std::mt19937_64& rng, const ValueTable* table, int stage) {
    std::vector<int> slots, reachable, unseen;
    double total = 0.0;
    for (std::size_t j = 0; j < sm.width(); ++j) {
        if (!bundle.grid().in_S(sm.support[j])) continue;
        reachable.push_back(static_cast<int>(j));
        if (table && !table->find(sm.support[j], stage)) unseen.push_back(static_cast<int>(j));
        if (row[j] > 0.0) {
            slots.push_back(static_cast<int>(j));
            total += row[j];
        }
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (exploration > 0.0 && !reachable.empty() && unit(rng) < exploration) {
        const auto& pool = unseen.empty() ? reachable : unseen;
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        return sm.support[pool[pick(rng)]];
    }
    if (slots.empty()) return -1;
    const double target = unit(rng) * total;
    double acc = 0.0;
    for (int j : slots) {
        acc += row[j];
        if (target < acc) return sm.support[j];
    }
    return sm.support[slots.back()];
}

RtdpResult rtdp(int init, const PlannerConfig& cfg, const ModelBundle& bundle) {
    const Grid& grid = bundle.grid();
    if (init < 0 || init >= grid.size() || !grid.in_S(init))
        throw std::domain_error("rtdp: initial corner must lie in S");
    if (cfg.niter < 1) throw std::domain_error("rtdp: niter must be >= 1");
    const int T = bundle.params().T;
    const BellmanConfig bc = bellman_config(bundle, cfg);
    const Heuristic h = planner_heuristic(bundle, cfg.heuristic, cfg.backend);

    struct Cached {
        std::uint64_t computed_at;
        BackupResult result;
    };
    std::unordered_map<std::uint64_t, Cached> cache;

    RtdpResult out;
    out.values = ValueTable(T);
    std::mt19937_64 rng(cfg.seed);
    int quiet = 0;
    double last_root = lookup_value(bundle, out.values, init, 1, h);

    // Backs up (xi, t) unless no successor value changed since the last solve.
    auto update = [&](int xi, int t) {
        const StateModel& sm = bundle.at(xi);
        const std::uint64_t ckey =
            static_cast<std::uint64_t>(xi) * static_cast<std::uint64_t>(T + 1) + t;
        std::uint64_t newest = 0;
        for (int c : sm.support)
            if (const auto* e = out.values.find(c, t + 1)) newest = std::max(newest, e->stamp);
        BackupResult r;
        auto it = cache.find(ckey);
        if (it != cache.end() && it->second.computed_at >= newest) {
            r = it->second.result;
            ++out.backups_cached;
        } else {
            r = backup(cfg.backend, sm, successor_values(bundle, out.values, sm, t + 1, h), bc);
            cache[ckey] = {out.values.clock(), r};
            ++out.backups_solved;
        }
        out.values.set(xi, t, r.value, r.action);
        return r;
    };

    std::vector<int> path;
    for (int iter = 1; iter <= cfg.niter; ++iter) {
        path.clear();
        int xi = init;
        for (int t = 1; t <= T - 1; ++t) {
            const BackupResult r = update(xi, t);
            path.push_back(xi);
            out.trace.push_back({iter, t, xi, r.action, r.value});
            if (t == T - 1) break;
            const StateModel& sm = bundle.at(xi);
            const int next =
                sample_in_S(bundle, sm, sm.row(r.action), cfg.exploration, rng, &out.values, t + 1);
            if (next < 0) break;
            xi = next;
        }
        if (cfg.backward_pass)
            for (int t = static_cast<int>(path.size()) - 1; t >= 1; --t) update(path[t - 1], t);
        const double root = lookup_value(bundle, out.values, init, 1, h);
        out.root_history.push_back(root);
        out.iterations = iter;
        quiet = std::abs(root - last_root) < cfg.stop_tol ? quiet + 1 : 0;
        last_root = root;
        if (cfg.early_stop && quiet >= cfg.stop_window) break;
    }
    return out;
}

ValueTable backward_dp(const PlannerConfig& cfg, const ModelBundle& bundle) {
    const int T = bundle.params().T;
    const BellmanConfig bc = bellman_config(bundle, cfg);
    const Heuristic h = planner_heuristic(bundle, cfg.heuristic, cfg.backend);
    const std::vector<int>& states = bundle.grid().feasible();
    bundle.compile(states, cfg.threads);

    ValueTable table(T);
    std::vector<BackupResult> stage_results(states.size());
    for (int t = T - 1; t >= 1; --t) {
        std::atomic<std::size_t> next{0};
        auto work = [&] {
            for (std::size_t i = next++; i < states.size(); i = next++) {
                const StateModel& sm = bundle.at(states[i]);
                stage_results[i] =
                    backup(cfg.backend, sm, successor_values(bundle, table, sm, t + 1, h), bc);
            }
        };
        std::vector<std::thread> pool;
        const int threads = cfg.debug ? 1 : std::max(1, cfg.threads);
        for (int k = 1; k < threads; ++k) pool.emplace_back(work);
        work();
        for (auto& th : pool) th.join();
        for (std::size_t i = 0; i < states.size(); ++i)
            table.set(states[i], t, stage_results[i].value, stage_results[i].action);
    }
    return table;
}

namespace {

void write_row(std::ostream& os, const ModelBundle& bundle, int stage, int state, double value,
               int action) {
    const auto c = bundle.grid().coords(state);
    const Action a = bundle.actions().at(std::max(action, 0));
    os << stage << ',' << state << ',' << c[0] << ',' << c[1] << ',' << c[2] << ',' << value << ','
       << a.y_V << ',' << a.y_R << '\n';
}

}  // namespace

void write_value_csv(std::ostream& os, const ModelBundle& bundle, const ValueTable& table) {
    os.precision(17);
    os << "stage,state,p_S,p_E,p_I,value,y_V,y_R\n";
    for (const auto& r : table.rows())
        write_row(os, bundle, r.stage, r.state, r.entry.value, r.entry.action);
}

void write_trace_csv(std::ostream& os, const ModelBundle& bundle, const std::vector<TraceStep>& trace) {
    os.precision(17);
    os << "iteration,stage,state,p_S,p_E,p_I,value,y_V,y_R\n";
    for (const auto& s : trace) {
        os << s.iteration << ',';
        write_row(os, bundle, s.stage, s.state, s.value, s.action);
    }
}

}  // namespace drmdp
