#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "drmdp/planners.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>

using namespace drmdp;

namespace {

EpidemicParams small_params(int N, int T) {
    EpidemicParams p;
    p.N = N;
    p.T = T;
    return p;
}

PlannerConfig planner(Backend b, int niter, double exploration = 0.3) {
    PlannerConfig c;
    c.backend = b;
    c.niter = niter;
    c.exploration = exploration;
    c.early_stop = false;
    return c;
}

// Expectimax over the reachable tree, built straight from the kernel and
// reward routines of the grid module.
struct TreeOracle {
    const Grid& grid;
    const EpidemicParams& p;
    std::map<std::pair<int, int>, double> memo;

    double value(int s, int t) {
        if (t >= p.T || !grid.in_S(s)) return 0.0;
        auto it = memo.find({s, t});
        if (it != memo.end()) return it->second;
        double best = -1e300;
        for (int v = 0; v <= p.L; ++v)
            for (int r = 0; r <= p.M; ++r) {
                const Action a{v, r};
                double q = discrete_reward(grid, p, s, a);
                for (const auto& e : discretize_kernel(grid, p, s, a).entries)
                    q += p.lambda * e.probability * value(e.index, t + 1);
                best = std::max(best, q);
            }
        return memo[{s, t}] = best;
    }
};

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

TEST_CASE("value table bookkeeping") {
    ValueTable t(5);
    CHECK(t.find(3, 1) == nullptr);
    t.set(3, 1, -2.0, 4);
    const auto s1 = t.find(3, 1)->stamp;
    t.set(3, 1, -2.0, 4);
    CHECK(t.find(3, 1)->stamp == s1);
    t.set(3, 1, -3.0, 1);
    CHECK(t.find(3, 1)->stamp > s1);
    t.set(1, 2, 0.0, 0);
    t.set(9, 1, 0.0, 0);
    const auto rows = t.rows();
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].state == 3);
    CHECK(rows[1].state == 9);
    CHECK(rows[2].stage == 2);
}

TEST_CASE("heuristic: zero at the horizon and off S, best reward otherwise") {
    const auto p = small_params(100, 6);
    const ModelBundle b(p, GridSpec{4}, AmbiguityConfig{});
    const Grid& g = b.grid();
    const int s = g.index(2, 1, 1);
    CHECK(admissible_heuristic(b, s, 6) == 0.0);
    double best = -1e300;
    for (int v = 0; v <= p.L; ++v)
        for (int r = 0; r <= p.M; ++r) best = std::max(best, discrete_reward(g, p, s, {v, r}));
    CHECK(admissible_heuristic(b, s, 1) == best);
    CHECK(admissible_heuristic(b, g.index(4, 0, 0), 2) == 0.0);
    CHECK(admissible_heuristic(b, g.index(3, 2, 1), 2) == 0.0);
    CHECK(admissible_heuristic(b, s, 1, {HeuristicKind::Zero, 0.0}) == 0.0);
    // The allowance accrues over the remaining stages with discounting.
    const Heuristic with{HeuristicKind::BestReward, 10.0};
    const double l = p.lambda;
    CHECK(admissible_heuristic(b, s, 3, with) == doctest::Approx(best + 10.0 * (1 + l + l * l)));
    CHECK(admissible_heuristic(b, s, 6, with) == 0.0);
    CHECK(planner_heuristic(b, HeuristicKind::BestReward, Backend::Nominal).stage_allowance == 0.0);
    CHECK(planner_heuristic(b, HeuristicKind::BestReward, Backend::DrmdpUnary).stage_allowance ==
          b.penalty_allowance());
    CHECK(b.penalty_allowance() > 1000.0);
    CHECK(admissible_heuristic({-4.0, -1.0, -9.0}, 1, 3) == -1.0);
    CHECK(admissible_heuristic({-4.0, -1.0, -9.0}, 3, 3) == 0.0);
}

TEST_CASE("T = 2: one stage of rewards") {
    const auto p = small_params(60, 2);
    const ModelBundle b(p, GridSpec{3}, AmbiguityConfig{});
    const Grid& g = b.grid();
    const int init = g.index(1, 1, 1);
    for (Backend be : {Backend::Nominal, Backend::Robust, Backend::DrmdpGreedy, Backend::DrmdpUnary}) {
        const auto r = rtdp(init, planner(be, 1), b);
        const auto* e = r.values.find(init, 1);
        REQUIRE(e != nullptr);
        const StateModel& sm = b.at(init);
        const double best = *std::max_element(sm.rewards.begin(), sm.rewards.end());
        CHECK(best == b.best_reward(init));
        if (is_drmdp(be)) {
            // Forced mean violations can only add to the best reward.
            const std::vector<double> zero(sm.width(), 0.0);
            const double want = drmdp_backup_greedy(sm, zero, p.lambda, b.ambiguity()).value;
            CHECK(e->value == doctest::Approx(want).epsilon(1e-9));
            CHECK(e->value >= best - 1e-9 * std::abs(best));
            CHECK(e->value <= best + b.penalty_allowance());
        } else {
            CHECK(e->value == best);
        }
    }
    const auto dp = backward_dp(planner(Backend::Nominal, 1), b);
    for (int s : g.feasible()) CHECK(dp.find(s, 1)->value == b.best_reward(s));
}

TEST_CASE("backward DP equals expectimax over the reachable tree (Y = 2, T = 4)") {
    const auto p = small_params(8, 4);
    const ModelBundle b(p, GridSpec{2}, AmbiguityConfig{});
    const auto dp = backward_dp(planner(Backend::Nominal, 1), b);
    TreeOracle oracle{b.grid(), p, {}};
    for (int s : b.grid().feasible())
        for (int t = 1; t <= 3; ++t) CHECK(rel(dp.find(s, t)->value, oracle.value(s, t)) <= 1e-9);
    for (const auto& row : dp.rows()) CHECK(b.grid().in_S(row.state));
    for (int s = 0; s < b.grid().size(); ++s)
        if (!b.grid().in_S(s))
            for (int t = 1; t <= 4; ++t) CHECK(lookup_value(b, dp, s, t) == 0.0);
}

TEST_CASE("RTDP converges to the backward-DP root value") {
    for (int Y : {2, 5}) {
        const auto p = small_params(1000, 6);
        const ModelBundle b(p, GridSpec{Y}, AmbiguityConfig{0.05, 1000.0});
        const int init = b.grid().nearest(0.6, 0.1, 0.3);
        for (Backend be : {Backend::Nominal, Backend::Robust, Backend::DrmdpGreedy}) {
            const auto dp = backward_dp(planner(be, 1), b);
            const Heuristic h = planner_heuristic(b, HeuristicKind::BestReward, be);
            for (const auto& row : dp.rows())
                REQUIRE(row.entry.value <= admissible_heuristic(b, row.state, row.stage, h) +
                                               1e-9 * std::max(1.0, std::abs(row.entry.value)));
            const auto r = rtdp(init, planner(be, Y == 2 ? 1000 : 4000, 0.9), b);
            CAPTURE(Y);
            const std::string name = backend_name(be);
            CAPTURE(name);
            CHECK(rel(r.values.find(init, 1)->value, dp.find(init, 1)->value) <= 1e-6);
            // Values start optimistic and never fall below the optimum.
            for (const auto& row : r.values.rows())
                CHECK(row.entry.value >= dp.find(row.state, row.stage)->value -
                                             1e-6 * std::max(1.0, std::abs(row.entry.value)));
        }
    }
}

TEST_CASE("RTDP values never increase along the trace") {
    const auto p = small_params(40, 6);
    const ModelBundle b(p, GridSpec{4}, AmbiguityConfig{0.05, 1000.0});
    const int init = b.grid().nearest(0.6, 0.1, 0.3);
    for (Backend be : {Backend::Nominal, Backend::DrmdpGreedy}) {
        const auto r = rtdp(init, planner(be, 200), b);
        std::map<std::pair<int, int>, double> last;
        for (const auto& s : r.trace) {
            auto it = last.find({s.state, s.stage});
            if (it != last.end()) CHECK(s.value <= it->second + 1e-9 * std::max(1.0, std::abs(s.value)));
            last[{s.state, s.stage}] = s.value;
        }
        for (std::size_t i = 1; i < r.root_history.size(); ++i)
            CHECK(r.root_history[i] <= r.root_history[i - 1] + 1e-9 * std::abs(r.root_history[i]));
    }
}

TEST_CASE("heuristic bounds the exact DRMDP optimum at every stage") {
    for (double k : {0.0, 1000.0, 1e5}) {
        const auto p = small_params(30, 5);
        const ModelBundle b(p, GridSpec{3}, AmbiguityConfig{0.05, k});
        const auto cfg = planner(Backend::DrmdpGreedy, 1);
        const auto dp = backward_dp(cfg, b);
        const Heuristic h = planner_heuristic(b, cfg.heuristic, cfg.backend);
        for (const auto& row : dp.rows())
            CHECK(row.entry.value <= admissible_heuristic(b, row.state, row.stage, h) +
                                         1e-9 * std::max(1.0, std::abs(row.entry.value)));
    }
}

TEST_CASE("planners are deterministic") {
    const auto p = small_params(40, 6);
    const ModelBundle b(p, GridSpec{4}, AmbiguityConfig{});
    const int init = b.grid().nearest(0.65, 0.1, 0.25);
    auto cfg = planner(Backend::Nominal, 60);
    cfg.seed = 99;
    const auto r1 = rtdp(init, cfg, b);
    const auto r2 = rtdp(init, cfg, b);
    std::ostringstream a, c;
    write_trace_csv(a, b, r1.trace);
    write_trace_csv(c, b, r2.trace);
    CHECK(a.str() == c.str());
    std::ostringstream v1, v2;
    write_value_csv(v1, b, backward_dp(cfg, b));
    cfg.threads = 3;
    write_value_csv(v2, b, backward_dp(cfg, b));
    CHECK(v1.str() == v2.str());
}

TEST_CASE("early stopping and argument checks") {
    const auto p = small_params(40, 4);
    const ModelBundle b(p, GridSpec{3}, AmbiguityConfig{});
    const Grid& g = b.grid();
    auto cfg = planner(Backend::Nominal, 500, 0.0);
    cfg.early_stop = true;
    const auto r = rtdp(g.index(1, 1, 1), cfg, b);
    CHECK(r.iterations < 500);
    CHECK(r.backups_cached > 0);
    CHECK_THROWS_AS(rtdp(g.index(3, 1, 0), cfg, b), std::domain_error);
    cfg.niter = 0;
    CHECK_THROWS_AS(rtdp(g.index(1, 1, 1), cfg, b), std::domain_error);
}

TEST_CASE("sampling stays in S") {
    const auto p = small_params(40, 4);
    const ModelBundle b(p, GridSpec{3}, AmbiguityConfig{});
    const StateModel& sm = b.at(b.grid().index(1, 1, 1));
    std::mt19937_64 rng(1);
    std::map<int, int> hits;
    for (int i = 0; i < 2000; ++i) {
        const int s = sample_in_S(b, sm, sm.row(0), 0.5, rng);
        REQUIRE(s >= 0);
        CHECK(b.grid().in_S(s));
        ++hits[s];
    }
    for (std::size_t j = 0; j < sm.width(); ++j)
        if (b.grid().in_S(sm.support[j])) CHECK(hits[sm.support[j]] > 0);
    std::vector<double> off(sm.width(), 0.0);
    CHECK(sample_in_S(b, sm, off.data(), 0.0, rng) == -1);
    // Exploration favours corners with no value yet at the given stage.
    ValueTable seen(4);
    std::vector<int> in_S;
    for (int c : sm.support)
        if (b.grid().in_S(c)) in_S.push_back(c);
    REQUIRE(in_S.size() >= 2);
    for (std::size_t i = 1; i < in_S.size(); ++i) seen.set(in_S[i], 2, -1.0, 0);
    for (int i = 0; i < 50; ++i) CHECK(sample_in_S(b, sm, sm.row(0), 1.0, rng, &seen, 2) == in_S[0]);
    seen.set(in_S[0], 2, -1.0, 0);
    std::set<int> spread;
    for (int i = 0; i < 500; ++i) spread.insert(sample_in_S(b, sm, sm.row(0), 1.0, rng, &seen, 2));
    CHECK(spread.size() == in_S.size());
    // Without exploration only corners carrying mass are drawn.
    for (int i = 0; i < 500; ++i) {
        const int s = sample_in_S(b, sm, sm.row(0), 0.0, rng);
        CHECK(sm.row(0)[sm.position(s)] > 0.0);
    }
}
