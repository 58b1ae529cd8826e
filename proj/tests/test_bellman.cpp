#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "drmdp/bellman.hpp"
#include "instances.hpp"
#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace drmdp;
using instances::random_instance;

namespace {

// Penalized mean problem written as an LP over (m, viol) and solved by
// vertex enumeration.
double primal_vertex_oracle(double reward, const std::vector<double>& L, const std::vector<double>& U,
                            const std::vector<double>& lv, double k) {
    opt::LinearProgram lp;
    lp.sense = opt::Sense::Minimize;
    lp.objective_offset = reward;
    const int S = static_cast<int>(lv.size());
    std::vector<int> m(S), v(S);
    std::vector<opt::Term> sum;
    for (int j = 0; j < S; ++j) {
        m[j] = lp.add_variable(0.0, 1.0, lv[j]);
        sum.push_back({m[j], 1.0});
    }
    for (int j = 0; j < S; ++j) {
        v[j] = lp.add_variable(0.0, 2.0 + std::abs(L[j]) + std::abs(U[j]), k);
        lp.add_row({{v[j], 1.0}, {m[j], -1.0}}, opt::Relation::GreaterEqual, -U[j]);
        lp.add_row({{v[j], 1.0}, {m[j], 1.0}}, opt::Relation::GreaterEqual, L[j]);
    }
    lp.add_row(sum, opt::Relation::Equal, 1.0);
    const auto o = oracles::vertex_enumeration(lp);
    REQUIRE(o.feasible);
    return o.value;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Hand-built model with explicit rules; bypasses the regression.
StateModel explicit_model(const ActionSpace& space, const std::vector<std::vector<double>>& rows,
                          const std::vector<double>& rewards) {
    StateModel sm;
    sm.state = 0;
    sm.actions = space;
    const std::size_t S = rows.front().size();
    for (std::size_t j = 0; j < S; ++j) {
        sm.support.push_back(static_cast<int>(j));
        sm.support_pI.push_back(double(j));
    }
    for (const auto& r : rows) sm.kernel.insert(sm.kernel.end(), r.begin(), r.end());
    sm.rewards = rewards;
    sm.rules.support = sm.support;
    return sm;
}

}  // namespace

TEST_CASE("backend names round trip") {
    for (auto b : {Backend::Nominal, Backend::Robust, Backend::DrmdpEnumerate, Backend::DrmdpMcCormick,
                   Backend::DrmdpUnary, Backend::DrmdpGreedy})
        CHECK(parse_backend(backend_name(b)) == b);
    CHECK_THROWS_AS(parse_backend("simplex"), std::domain_error);
    CHECK_FALSE(is_drmdp(Backend::Robust));
    CHECK(is_drmdp(Backend::DrmdpGreedy));
}

TEST_CASE("nominal backup on a 3-successor, 2-action toy") {
    const auto sm = explicit_model({1, 0}, {{0.5, 0.3, 0.2}, {0.1, 0.1, 0.8}}, {-10.0, -30.0});
    const std::vector<double> v{-100.0, -50.0, 0.0};
    // Hand values: -10 + 0.9 * (-65) = -68.5 and -30 + 0.9 * (-15) = -43.5.
    const auto r = nominal_backup(sm, v, 0.9);
    CHECK(r.action == 1);
    CHECK(r.value == doctest::Approx(-43.5).epsilon(1e-14));
    const auto z = nominal_backup(sm, {0.0, 0.0, 0.0}, 0.9);
    CHECK(z.value == -10.0);
    CHECK(z.action == 0);
    const auto one = explicit_model({0, 0}, {{0.5, 0.3, 0.2}}, {-10.0});
    CHECK(nominal_backup(one, v, 0.9).value == doctest::Approx(-10.0 + 0.9 * -65.0));
}

TEST_CASE("worst-case shift") {
    std::vector<double> p{0.6, 0.4};
    worst_case_shift_inplace(p, {0.1, 0.3}, 0.5);
    CHECK(p[0] == doctest::Approx(0.35).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.65).epsilon(1e-15));
    CHECK(std::abs(p[0] - 0.6) + std::abs(p[1] - 0.4) == doctest::Approx(0.5));

    std::vector<double> q{0.6, 0.4};
    worst_case_shift_inplace(q, {0.1, 0.3}, 0.0);
    CHECK(q == std::vector<double>{0.6, 0.4});
    std::vector<double> all{0.0, 1.0};
    worst_case_shift_inplace(all, {0.1, 0.3}, 0.5);
    CHECK(all == std::vector<double>{0.0, 1.0});

    // Mass leaves the lowest keys first and only enters the highest.
    std::vector<double> r{0.1, 0.2, 0.3, 0.4};
    worst_case_shift_inplace(r, {0.0, 0.1, 0.2, 0.9}, 0.6);
    CHECK(r[0] == doctest::Approx(0.0));
    CHECK(r[1] == doctest::Approx(0.0));
    CHECK(r[2] == doctest::Approx(0.3));
    CHECK(r[3] == doctest::Approx(0.7));
    CHECK_THROWS_AS(worst_case_shift_inplace(r, {0, 0, 0, 0}, -1.0), std::domain_error);

    const Grid g({2});
    SparseDistribution row;
    row.entries = {{g.index(1, 0, 1), 0.4}, {g.index(2, 0, 0), 0.6}};
    const auto s = worst_case_shift(row, g, 0.5);
    CHECK(s.at(g.index(2, 0, 0)) == doctest::Approx(0.35));
    CHECK(s.at(g.index(1, 0, 1)) == doctest::Approx(0.65));
}

TEST_CASE("robust backup: zero budget and monotone values") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 30; ++t) {
        auto inst = random_instance(rng, 5, 2, 2, {0.05, 1000.0}, false);
        CHECK(robust_backup(inst.sm, inst.v_next, 0.95, 0.0).value ==
              doctest::Approx(nominal_backup(inst.sm, inst.v_next, 0.95).value).epsilon(1e-14));
        // V nonincreasing in p_I.
        for (std::size_t j = 0; j < inst.sm.width(); ++j) inst.v_next[j] = -1000.0 * inst.sm.support_pI[j];
        CHECK(robust_backup(inst.sm, inst.v_next, 0.95, 0.5).value <=
              nominal_backup(inst.sm, inst.v_next, 0.95).value + 1e-9);
    }
    // Hand evaluation: one action, keys order the two successors.
    const auto sm = explicit_model({0, 0}, {{0.6, 0.4}}, {-1.0});
    CHECK(robust_backup(sm, {0.0, -10.0}, 0.5, 0.5).value == doctest::Approx(-1.0 + 0.5 * -6.5));
}

TEST_CASE("inner problem: singleton and the two-successor example") {
    const auto s = inner_dual_lp(-3.0, {1.0}, {1.0}, {-7.0}, 1000.0);
    CHECK(s.value == doctest::Approx(-10.0));
    CHECK(inner_primal_value(-3.0, {1.0}, {1.0}, {-7.0}, 1000.0) == doctest::Approx(-10.0));

    const double lambda = 0.9;
    const std::vector<double> lv{0.0, -10.0 * lambda};
    const std::vector<double> half{0.5, 0.5};
    CHECK(inner_dual_lp(0.0, half, half, lv, 1e6).value == doctest::Approx(-5.0 * lambda));
    CHECK(inner_dual_lp(0.0, half, half, lv, 0.0).value == doctest::Approx(-10.0 * lambda));
    CHECK(inner_primal_value(0.0, half, half, lv, 1e6) == doctest::Approx(-5.0 * lambda));
    CHECK(inner_primal_value(0.0, half, half, lv, 0.0) == doctest::Approx(-10.0 * lambda));
    CHECK(primal_vertex_oracle(0.0, half, half, lv, 1e6) == doctest::Approx(-5.0 * lambda));

    std::vector<double> m;
    inner_primal_value(0.0, half, half, lv, 1e6, &m);
    CHECK(m[0] == doctest::Approx(0.5));
    CHECK(m[1] == doctest::Approx(0.5));
}

TEST_CASE("inner problem: dual LP, greedy primal and vertex enumeration agree") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double ks[4] = {0.0, 1.0, 1e3, 1e6};
    int n = 0;
    for (int t = 0; t < 120; ++t) {
        const int S = 1 + t % 3;
        std::vector<double> L(S), Up(S), lv(S);
        for (int j = 0; j < S; ++j) {
            const double c = U(rng) * 0.8 - 0.1, w = U(rng) * 0.3;
            L[j] = c - w;
            Up[j] = c + w;
            lv[j] = -1000.0 * U(rng);
        }
        const double k = ks[t % 4];
        const double r = -100.0 * U(rng);
        const double dual = inner_dual_lp(r, L, Up, lv, k).value;
        const double greedy = inner_primal_value(r, L, Up, lv, k);
        const double vertex = primal_vertex_oracle(r, L, Up, lv, k);
        CHECK(rel(dual, vertex) <= 1e-6);
        CHECK(rel(greedy, vertex) <= 1e-6);
        ++n;
    }
    CHECK(n == 120);
}

TEST_CASE("inner problem: k = 0 leaves nature unconstrained") {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 20; ++t) {
        auto inst = random_instance(rng, 6, 2, 3, {0.05, 0.0}, false);
        double vmin = std::numeric_limits<double>::infinity();
        for (double v : inst.v_next) vmin = std::min(vmin, v);
        for (int a = 0; a < inst.sm.actions.size(); ++a) {
            const double r = reward_rule(inst.sm.rules, inst.sm.actions.at(a));
            CHECK(inner_dual_lp(inst.sm, a, inst.v_next, 0.95, {0.05, 0.0}).value ==
                  doctest::Approx(r + 0.95 * vmin).epsilon(1e-9));
        }
        double best = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < inst.sm.actions.size(); ++a)
            best = std::max(best, reward_rule(inst.sm.rules, inst.sm.actions.at(a)));
        const AmbiguityConfig c0{0.05, 0.0};
        CHECK(drmdp_backup_mccormick(inst.sm, inst.v_next, 0.95, c0).value ==
              doctest::Approx(best + 0.95 * vmin).epsilon(1e-9));
        CHECK(drmdp_backup_unary(inst.sm, inst.v_next, 0.95, c0).value ==
              doctest::Approx(best + 0.95 * vmin).epsilon(1e-9));
    }
}

TEST_CASE("strong duality on fitted per-state instances") {
    std::mt19937_64 rng(23);
    const double ks[4] = {0.0, 1.0, 1e3, 1e6};
    for (int t = 0; t < 80; ++t) {
        const AmbiguityConfig cfg{0.05, ks[t % 4]};
        const auto inst = random_instance(rng, 2 + t % 5, 3, 3, cfg, t % 2 == 0);
        for (int a = 0; a < inst.sm.actions.size(); a += 3) {
            const double d = inner_dual_lp(inst.sm, a, inst.v_next, 0.95, cfg).value;
            const double p = inner_primal_oracle(inst.sm, a, inst.v_next, 0.95, cfg);
            CHECK(rel(d, p) <= 1e-6);
        }
    }
}

TEST_CASE("DRMDP backends: enumerate = greedy = unary <= McCormick") {
    std::mt19937_64 rng(29);
    const double ks[4] = {0.0, 1.0, 1e3, 1e6};
    for (int t = 0; t < 40; ++t) {
        const AmbiguityConfig cfg{0.05, ks[t % 4]};
        const auto inst = random_instance(rng, 2 + t % 4, 2 + t % 2, 2, cfg, t % 3 == 0);
        const auto e = drmdp_backup_enumerate(inst.sm, inst.v_next, 0.95, cfg);
        const auto g = drmdp_backup_greedy(inst.sm, inst.v_next, 0.95, cfg);
        const auto u = drmdp_backup_unary(inst.sm, inst.v_next, 0.95, cfg);
        const auto m = drmdp_backup_mccormick(inst.sm, inst.v_next, 0.95, cfg);
        CHECK(rel(g.value, e.value) <= 1e-6);
        CHECK(rel(u.value, e.value) <= 1e-6);
        CHECK(m.value >= u.value - 1e-6 * std::max(1.0, std::abs(u.value)));
        // The unary action attains the optimum.
        CHECK(rel(inner_primal_oracle(inst.sm, u.action, inst.v_next, 0.95, cfg), e.value) <= 1e-6);
    }
}

TEST_CASE("single-action space: every DRMDP backend equals the action's value") {
    auto sm = explicit_model({0, 0}, {{0.3, 0.7}}, {-5.0});
    sm.rules.rho = {{0.35, 0, 0}, {0.75, 0, 0}};
    sm.rules.sigma = {{0.25, 0, 0}, {0.65, 0, 0}};
    sm.rules.eps = {-5.0, 0, 0};
    const std::vector<double> v{-10.0, -40.0};
    for (double k : {0.0, 1.0, 1000.0}) {
        const AmbiguityConfig cfg{0.05, k};
        const double want = inner_primal_oracle(sm, 0, v, 0.9, cfg);
        CHECK(drmdp_backup_enumerate(sm, v, 0.9, cfg).value == doctest::Approx(want));
        CHECK(drmdp_backup_mccormick(sm, v, 0.9, cfg).value == doctest::Approx(want));
        CHECK(drmdp_backup_unary(sm, v, 0.9, cfg).value == doctest::Approx(want));
    }
    // Box (0.25..0.35, 0.65..0.75): nature puts 0.25 on the cheap successor.
    CHECK(inner_primal_oracle(sm, 0, v, 0.9, {0.05, 1000.0}) ==
          doctest::Approx(-5.0 + 0.9 * (0.25 * -10.0 + 0.75 * -40.0)));
}

TEST_CASE("delta = 0 with exactly affine kernels collapses to the nominal backup") {
    std::mt19937_64 rng(37);
    for (int t = 0; t < 20; ++t) {
        // Moving mass off the mean costs 2k per unit and gains at most
        // lambda * (max V - min V) < 1000.
        const AmbiguityConfig cfg{0.0, t % 2 ? 1000.0 : 1e6};
        const auto inst = random_instance(rng, 3 + t % 3, 2, 2, cfg, true);
        const double nominal = nominal_backup(inst.sm, inst.v_next, 0.95).value;
        CHECK(rel(drmdp_backup_enumerate(inst.sm, inst.v_next, 0.95, cfg).value, nominal) <= 1e-6);
        CHECK(rel(drmdp_backup_greedy(inst.sm, inst.v_next, 0.95, cfg).value, nominal) <= 1e-6);
        CHECK(rel(drmdp_backup_unary(inst.sm, inst.v_next, 0.95, cfg).value, nominal) <= 1e-6);
        // The envelope relaxation only bounds the collapsed value from above.
        CHECK(drmdp_backup_mccormick(inst.sm, inst.v_next, 0.95, cfg).value >=
              nominal - 1e-6 * std::abs(nominal));
    }
}

TEST_CASE("monotone in k and conservative against the nominal row") {
    std::mt19937_64 rng(41);
    for (int t = 0; t < 25; ++t) {
        const bool exact = t % 2 == 0;
        const auto inst = random_instance(rng, 4, 2, 2, {0.05, 1.0}, exact);
        double prev = -std::numeric_limits<double>::infinity();
        for (double k : {0.0, 0.1, 1.0, 10.0, 1e3, 1e6}) {
            const double v = drmdp_backup_enumerate(inst.sm, inst.v_next, 0.95, {0.05, k}).value;
            CHECK(v >= prev - 1e-9 * std::max(1.0, std::abs(v)));
            prev = v;
        }
        // Nature may always play the nominal row and pay for its violation.
        for (int a = 0; a < inst.sm.actions.size(); ++a) {
            const Action act = inst.sm.actions.at(a);
            const auto eta = eta_bounds(inst.sm.rules, act);
            double ev = 0.0, viol = 0.0;
            for (std::size_t j = 0; j < inst.sm.width(); ++j) {
                const double p = inst.sm.row(a)[j];
                ev += p * inst.v_next[j];
                viol += std::max({0.0, p - eta.eta_U[j], eta.eta_L[j] - p});
            }
            const double bound = reward_rule(inst.sm.rules, act) + 0.95 * ev + 1000.0 * viol;
            CHECK(inner_primal_oracle(inst.sm, a, inst.v_next, 0.95, {0.05, 1000.0}) <= bound + 1e-6);
        }
        if (exact)
            CHECK(drmdp_backup_enumerate(inst.sm, inst.v_next, 0.95, {0.05, 1000.0}).value <=
                  nominal_backup(inst.sm, inst.v_next, 0.95).value + 1e-6);
    }
}

TEST_CASE("ties resolve to the smallest action") {
    const auto sm = explicit_model({1, 1}, {{1.0}, {1.0}, {1.0}, {1.0}}, {-1.0, -1.0, -1.0, -1.0});
    CHECK(nominal_backup(sm, {0.0}, 0.9).action == 0);
    CHECK(robust_backup(sm, {0.0}, 0.9, 0.5).action == 0);
}

TEST_CASE("full-space check on a Y = 2, N = 4 grid") {
    EpidemicParams p;
    p.N = 4;
    const ModelBundle bundle(p, GridSpec{2}, AmbiguityConfig{0.05, 1000.0});
    const Grid& g = bundle.grid();
    std::mt19937_64 rng(43);
    std::uniform_real_distribution<double> U(-1000.0, 0.0);
    std::vector<double> v(g.size());
    for (auto& x : v) x = U(rng);
    for (int s : g.feasible())
        for (int a : {0, 7, 35}) {
            const auto rep = full_space_check(bundle, s, a, v, 0.95);
            CHECK(rep.agree);
        }
    // Everyone recovered: the only successor is the corner itself.
    const int df = g.index(0, 0, 0);
    const auto rep = full_space_check(bundle, df, 0, v, 0.95);
    CHECK(rep.restricted == doctest::Approx(0.95 * v[df]));
    CHECK(rep.full == doctest::Approx(0.95 * v[df]));

    // k = 0 lets nature use every corner; the check reports the gap.
    const ModelBundle loose(p, GridSpec{2}, AmbiguityConfig{0.05, 0.0});
    const int s = g.index(1, 0, 1);
    const StateModel& sm = loose.at(s);
    std::vector<double> vsup;
    for (int c : sm.support) vsup.push_back(v[c]);
    double vmin_sup = *std::min_element(vsup.begin(), vsup.end());
    double vmin_all = *std::min_element(v.begin(), v.end());
    const auto r0 = full_space_check(loose, s, 0, v, 0.95);
    const double rr = reward_rule(sm.rules, sm.actions.at(0));
    CHECK(r0.restricted == doctest::Approx(rr + 0.95 * vmin_sup));
    CHECK(r0.full == doctest::Approx(rr + 0.95 * vmin_all));
    CHECK(r0.agree == (std::abs(vmin_sup - vmin_all) * 0.95 <= 1e-6 * std::max(1.0, std::abs(r0.full))));
}

TEST_CASE("backup dispatch and action values agree") {
    std::mt19937_64 rng(47);
    const auto inst = random_instance(rng, 4, 2, 2, {0.05, 1000.0}, false);
    BellmanConfig cfg;
    cfg.lambda = 0.95;
    for (auto b : {Backend::Nominal, Backend::Robust, Backend::DrmdpEnumerate, Backend::DrmdpGreedy,
                   Backend::DrmdpUnary}) {
        const auto r = backup(b, inst.sm, inst.v_next, cfg);
        CHECK(action_value(b, inst.sm, r.action, inst.v_next, cfg) ==
              doctest::Approx(r.value).epsilon(1e-8));
        for (int a = 0; a < inst.sm.actions.size(); ++a)
            CHECK(action_value(b, inst.sm, a, inst.v_next, cfg) <= r.value + 1e-6 * std::abs(r.value));
    }
    CHECK_THROWS_AS(nominal_backup(inst.sm, {0.0}, 0.9), std::invalid_argument);
}

TEST_CASE("forced mean violations stay within the residual bound") {
    EpidemicParams p;
    p.N = 200;
    const ModelBundle bundle(p, GridSpec{5}, AmbiguityConfig{0.05, 1000.0});
    std::vector<Action> acts;
    for (int a = 0; a < p.num_actions(); ++a) acts.push_back(action_from_index(a, p.M));
    const double bound = residual_l1_bound(acts);
    CHECK(bundle.penalty_allowance() == doctest::Approx(1000.0 * bound));
    double largest = 0.0;
    for (int s : bundle.grid().feasible()) {
        const StateModel& sm = bundle.at(s);
        const std::vector<double> zero(sm.width(), 0.0);
        for (int a = 0; a < sm.actions.size(); ++a) {
            const auto eta = eta_bounds(sm.rules, sm.actions.at(a));
            // With no future values and unit price the inner value is the
            // smallest violation nature can achieve.
            const double forced = inner_primal_value(0.0, eta.eta_L, eta.eta_U, zero, 1.0);
            CHECK(forced <= bound);
            largest = std::max(largest, forced);
        }
    }
    CHECK(largest > 0.0);
}
