#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "drmdp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

using namespace drmdp;

namespace {

double pmf_direct(int n, double p, int k) {
    double c = 1.0;
    for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
    return c * std::pow(p, k) * std::pow(1.0 - p, n - k);
}

// Freudenthal weights written out directly: corner index -> weight.
std::map<int, double> freudenthal(int Y, double pS, double pE, double pI) {
    const double x[3] = {pS * Y, pE * Y, pI * Y};
    int low[3];
    double f[3];
    for (int d = 0; d < 3; ++d) {
        low[d] = std::min(static_cast<int>(std::floor(x[d])), Y - 1);
        f[d] = x[d] - low[d];
    }
    int order[3] = {0, 1, 2};
    std::stable_sort(order, order + 3, [&](int a, int b) { return f[a] > f[b]; });
    auto idx = [&](const int* v) { return (v[0] * (Y + 1) + v[1]) * (Y + 1) + v[2]; };
    std::map<int, double> w;
    int v[3] = {low[0], low[1], low[2]};
    double prev = 1.0;
    for (int step = 0; step < 3; ++step) {
        const double wt = prev - f[order[step]];
        if (wt > 0.0) w[idx(v)] += wt;
        prev = f[order[step]];
        ++v[order[step]];
    }
    if (prev > 0.0) w[idx(v)] += prev;
    return w;
}

// Discrete kernel by exhaustive binomial enumeration and direct weights.
std::map<int, double> kernel_oracle(const Grid& g, const EpidemicParams& p, int from, const Action& a) {
    const auto c = g.coords(from);
    const int N = p.N;
    const int S = static_cast<int>(std::lround(N * c[0]));
    const int E = static_cast<int>(std::lround(N * c[1]));
    const int I = static_cast<int>(std::lround(N * c[2]));
    const int Su = static_cast<int>(std::lround(S * (1.0 - double(a.y_V) / p.L)));
    const double phi = 1.0 - std::exp(-(1.0 - p.alpha0 * a.y_R / p.M) * p.mu * p.beta * double(I) / N);
    const double rc = 1.0 - std::exp(-p.l_C), rd = 1.0 - std::exp(-p.l_D);
    std::map<int, double> row;
    for (int b = 0; b <= Su; ++b)
        for (int cc = 0; cc <= E; ++cc)
            for (int d = 0; d <= I; ++d) {
                const double pr = pmf_direct(Su, phi, b) * pmf_direct(E, rc, cc) * pmf_direct(I, rd, d);
                if (pr == 0.0) continue;
                for (const auto& [k, w] : freudenthal(g.Y(), double(Su - b) / N, double(E + b - cc) / N,
                                                      double(I + cc - d) / N))
                    row[k] += w * pr;
            }
    return row;
}

}  // namespace

TEST_CASE("grid sizes and feasibility flags") {
    const auto g1 = build_grid({1});
    CHECK(g1.size() == 8);
    std::set<std::array<double, 3>> in;
    for (const auto& c : g1)
        if (c.in_S) in.insert(c.coords);
    CHECK(in == std::set<std::array<double, 3>>{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
    CHECK(build_grid({4}).size() == 125);
    CHECK(Grid({30}).size() == 29791);

    const Grid g({6});
    for (int i = 0; i < g.size(); ++i) {
        const auto l = g.lattice(i);
        CHECK(g.index(l[0], l[1], l[2]) == i);
        CHECK(g.in_S(i) == (l[0] + l[1] + l[2] <= 6));
    }
    CHECK(std::is_sorted(g.feasible().begin(), g.feasible().end()));
    CHECK(g.feasible().size() == 84u);  // C(6+3, 3)
}

TEST_CASE("locate on corners and the worked example") {
    const Grid g({5});
    for (int i : {0, 17, 100, 215}) {
        const auto c = g.coords(i);
        const auto w = locate(g, ContinuousState{c[0], c[1], c[2]});
        REQUIRE(w.count == 1);
        CHECK(w.corners[0] == i);
        CHECK(w.weights[0] == doctest::Approx(1.0));
    }
    const Grid g1({1});
    const auto w = locate(g1, ContinuousState{0.5, 0.25, 0.125});
    REQUIRE(w.count == 4);
    const int path[4] = {g1.index(0, 0, 0), g1.index(1, 0, 0), g1.index(1, 1, 0), g1.index(1, 1, 1)};
    const double want[4] = {0.5, 0.25, 0.125, 0.125};
    for (int v = 0; v < 4; ++v) {
        CHECK(w.corners[v] == path[v]);
        CHECK(w.weights[v] == doctest::Approx(want[v]).epsilon(1e-15));
    }
    CHECK_THROWS_AS(locate(g1, ContinuousState{1.2, 0.0, 0.0}), std::domain_error);
    CHECK_THROWS_AS(locate(g1, ContinuousState{0.2, -0.1, 0.0}), std::domain_error);
}

TEST_CASE("cube vertices and simplex corners") {
    const std::array<int, 3> low{2, 1, 3};
    const std::array<int, 3> high{3, 2, 4};
    std::map<std::array<int, 3>, int> membership;
    for (int label = 0; label < 6; ++label) {
        const auto cs = simplex_corners(low, label);
        std::set<std::array<int, 3>> distinct(cs.begin(), cs.end());
        CHECK(distinct.size() == 4);
        CHECK(cs[0] == low);
        CHECK(cs[3] == high);
        for (const auto& c : cs) ++membership[c];
    }
    CHECK(membership[low] == 6);
    CHECK(membership[high] == 6);
    CHECK(membership.size() == 8);
}

TEST_CASE("random points: normalization, reconstruction, labels and direct weights") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int Y : {1, 3, 10}) {
        const Grid g({Y});
        std::array<int, 6> hits{};
        const int n = 10000;
        for (int t = 0; t < n; ++t) {
            const ContinuousState s{U(rng), U(rng), U(rng)};
            const auto w = locate(g, s);
            double total = 0.0, r[3] = {0, 0, 0};
            std::map<int, double> got;
            for (int v = 0; v < w.count; ++v) {
                CHECK(w.weights[v] >= 0.0);
                total += w.weights[v];
                const auto c = g.coords(w.corners[v]);
                for (int d = 0; d < 3; ++d) r[d] += w.weights[v] * c[d];
                got[w.corners[v]] += w.weights[v];
            }
            CHECK(std::abs(total - 1.0) <= 1e-12);
            CHECK(std::abs(r[0] - s.p_S) <= 1e-12);
            CHECK(std::abs(r[1] - s.p_E) <= 1e-12);
            CHECK(std::abs(r[2] - s.p_I) <= 1e-12);
            const auto want = freudenthal(Y, s.p_S, s.p_E, s.p_I);
            for (const auto& [k, v] : want) CHECK(std::abs(got[k] - v) <= 1e-12);
            ++hits[w.simplex];
        }
        for (int h : hits) CHECK(std::abs(double(h) / n - 1.0 / 6.0) <= 0.02);
    }
}

TEST_CASE("discretize_kernel edge rows") {
    EpidemicParams p;
    const Grid g({4});
    const int off = g.index(3, 2, 1);
    REQUIRE_FALSE(g.in_S(off));
    const auto r = discretize_kernel(g, p, off, {2, 2});
    REQUIRE(r.size() == 1);
    CHECK(r.entries[0].index == off);
    CHECK(r.entries[0].probability == 1.0);

    const auto z = discretize_kernel(g, p, 0, {0, 0});
    REQUIRE(z.size() == 1);
    CHECK(z.entries[0] == SparseEntry{0, 1.0});
    CHECK(successor_support(g, p, 0) == std::vector<int>{0});
}

TEST_CASE("Y=2, N=4 kernel against exhaustive enumeration") {
    EpidemicParams p;
    p.N = 4;
    const Grid g({2});
    const int from = g.index(1, 1, 0);
    std::set<int> support;
    for (int yV = 0; yV <= p.L; ++yV)
        for (int yR = 0; yR <= p.M; ++yR) {
            const auto row = discretize_kernel(g, p, from, {yV, yR});
            const auto want = kernel_oracle(g, p, from, {yV, yR});
            CHECK(row.total() == doctest::Approx(1.0).epsilon(1e-12));
            for (const auto& [k, v] : want) {
                CHECK(row.at(k) == doctest::Approx(v).epsilon(1e-12));
                if (v > 0.0) support.insert(k);
            }
            for (std::size_t i = 0; i < row.size(); ++i) {
                CHECK(want.count(row.entries[i].index) == 1);
                if (i) CHECK(row.entries[i - 1].index < row.entries[i].index);
            }
        }
    const auto ss = successor_support(g, p, from);
    CHECK(std::set<int>(ss.begin(), ss.end()) == support);

    // Another start with infectives present.
    const int from2 = g.index(1, 0, 1);
    for (const Action a : {Action{0, 0}, Action{5, 5}, Action{2, 3}}) {
        const auto row = discretize_kernel(g, p, from2, a);
        for (const auto& [k, v] : kernel_oracle(g, p, from2, a))
            CHECK(row.at(k) == doctest::Approx(v).epsilon(1e-12));
    }
}

TEST_CASE("every kernel row sums to one") {
    EpidemicParams p;
    p.N = 200;
    const Grid g({5});
    for (int s = 0; s < g.size(); s += 3)
        for (const Action a : {Action{0, 0}, Action{5, 0}, Action{0, 5}, Action{3, 2}}) {
            const auto row = discretize_kernel(g, p, s, a);
            CHECK(std::abs(row.total() - 1.0) <= 1e-9);
            for (const auto& e : row.entries) CHECK(e.probability >= 0.0);
            if (!g.in_S(s)) CHECK(row.size() == 1);
        }
}

TEST_CASE("discrete and terminal rewards") {
    EpidemicParams p;
    const Grid g({5});
    for (int s = 0; s < g.size(); s += 7) {
        CHECK(terminal_reward(g, s) == 0.0);
        const Action a{2, 3};
        if (g.in_S(s)) {
            const auto st = corner_state(g, p, s);
            CHECK(discrete_reward(g, p, s, a) == nominal_reward(p, st, a));
        } else {
            CHECK(discrete_reward(g, p, s, a) == 0.0);
        }
    }
}

TEST_CASE("nearest in-S corner") {
    const Grid g({10});
    CHECK(g.nearest(0.6, 0.1, 0.3) == g.index(6, 1, 3));
    CHECK(g.nearest(0.61, 0.1, 0.29) == g.index(6, 1, 3));
    const int n = g.nearest(0.66, 0.17, 0.17);
    CHECK(g.in_S(n));
    const Grid g3({3});
    // Point nearest to an off-S corner still maps into S.
    CHECK(g3.in_S(g3.nearest(0.7, 0.3, 0.3)));
}
