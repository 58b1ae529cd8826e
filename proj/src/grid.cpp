#include "drmdp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace drmdp {

namespace {

// Coordinate-sort permutations in lexicographic order; label = position.
constexpr std::array<std::array<int, 3>, 6> kPermutations{{
    {0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};

int permutation_label(const std::array<int, 3>& p) {
    for (int i = 0; i < 6; ++i)
        if (kPermutations[i] == p) return i;
    return 0;
}

}  // namespace

Grid::Grid(GridSpec spec) : Y_(spec.Y) {
    if (Y_ < 1) throw std::domain_error("grid: Y must be >= 1");
    for (int idx = 0; idx < size(); ++idx)
        if (in_S(idx)) feasible_.push_back(idx);
}

std::array<int, 3> Grid::lattice(int idx) const {
    const int k = idx % side();
    const int j = (idx / side()) % side();
    const int i = idx / (side() * side());
    return {i, j, k};
}

std::array<double, 3> Grid::coords(int idx) const {
    const auto l = lattice(idx);
    const double y = Y_;
    return {l[0] / y, l[1] / y, l[2] / y};
}

bool Grid::in_S(int idx) const {
    const auto l = lattice(idx);
    return l[0] + l[1] + l[2] <= Y_;
}

CornerState Grid::corner(int idx) const { return {idx, coords(idx), in_S(idx)}; }

int Grid::nearest(double p_S, double p_E, double p_I) const {
    const double target[3] = {p_S * Y_, p_E * Y_, p_I * Y_};
    int best = feasible_.front();
    double best_d = std::numeric_limits<double>::infinity();
    for (int idx : feasible_) {
        const auto l = lattice(idx);
        double d = 0.0;
        for (int a = 0; a < 3; ++a) d += (l[a] - target[a]) * (l[a] - target[a]);
        if (d < best_d - 1e-12) {
            best_d = d;
            best = idx;
        }
    }
    return best;
}

std::vector<CornerState> build_grid(const GridSpec& spec) {
    const Grid grid(spec);
    std::vector<CornerState> out;
    out.reserve(grid.size());
    for (int idx = 0; idx < grid.size(); ++idx) out.push_back(grid.corner(idx));
    return out;
}

BarycentricWeights locate(const Grid& grid, const ContinuousState& s) {
    const double v[3] = {s.p_S, s.p_E, s.p_I};
    for (double c : v)
        if (!(c >= 0.0 && c <= 1.0))
            throw std::domain_error("locate: state outside the unit cube");
    const double y = grid.Y();
    return locate_scaled(grid, v[0] * y, v[1] * y, v[2] * y);
}

BarycentricWeights locate_scaled(const Grid& grid, double x, double y, double z) {
    const int Y = grid.Y();
    const double v[3] = {x, y, z};
    std::array<int, 3> cell{};
    std::array<double, 3> frac{};
    for (int d = 0; d < 3; ++d) {
        if (!(v[d] >= 0.0 && v[d] <= Y))
            throw std::domain_error("locate: state outside the unit cube");
        cell[d] = std::min(static_cast<int>(std::floor(v[d])), Y - 1);
        frac[d] = v[d] - cell[d];
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return frac[a] > frac[b]; });

    const double f1 = frac[order[0]], f2 = frac[order[1]], f3 = frac[order[2]];
    const double w[4] = {1.0 - f1, f1 - f2, f2 - f3, f3};

    BarycentricWeights out;
    out.simplex = permutation_label(order);
    std::array<int, 3> vertex = cell;
    for (int step = 0; step < 4; ++step) {
        if (step > 0) ++vertex[order[step - 1]];
        if (w[step] != 0.0) {
            out.corners[out.count] = grid.index(vertex[0], vertex[1], vertex[2]);
            out.weights[out.count] = w[step];
            ++out.count;
        }
    }
    return out;
}

std::array<std::array<int, 3>, 4> simplex_corners(const std::array<int, 3>& low, int label) {
    const auto& perm = kPermutations.at(label);
    std::array<std::array<int, 3>, 4> out{};
    out[0] = low;
    for (int step = 1; step < 4; ++step) {
        out[step] = out[step - 1];
        ++out[step][perm[step - 1]];
    }
    return out;
}

double SparseDistribution::total() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.probability;
    return s;
}

double SparseDistribution::at(int index) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), index,
                               [](const SparseEntry& e, int i) { return e.index < i; });
    return (it != entries.end() && it->index == index) ? it->probability : 0.0;
}

ContinuousState corner_state(const Grid& grid, const EpidemicParams& params, int index) {
    const auto c = grid.coords(index);
    return ContinuousState::from_fractions(params.N, c[0], c[1], c[2]);
}

SparseDistribution discretize_kernel(const Grid& grid, const EpidemicParams& params, int from,
                                     const Action& action) {
    if (!grid.in_S(from)) return {{{from, 1.0}}};

    const ContinuousState state = corner_state(grid, params, from);
    const std::vector<Atom> atoms = transition_pmf(params, state, action);
    const double scale = static_cast<double>(grid.Y()) / params.N;
    const int Y = grid.Y();

    // Dense accumulator over the bounding box of touched corners.
    std::array<int, 3> lo{Y, Y, Y}, hi{0, 0, 0};
    for (const auto& a : atoms) {
        const int c[3] = {a.next.S, a.next.E, a.next.I};
        for (int d = 0; d < 3; ++d) {
            const double v = c[d] * scale;
            lo[d] = std::min(lo[d], std::min(static_cast<int>(std::floor(v)), Y));
            hi[d] = std::max(hi[d], std::min(static_cast<int>(std::ceil(v)), Y));
        }
    }
    const int nx = hi[0] - lo[0] + 1, ny = hi[1] - lo[1] + 1, nz = hi[2] - lo[2] + 1;
    std::vector<double> acc(static_cast<std::size_t>(nx) * ny * nz, 0.0);
    std::vector<char> touched(acc.size(), 0);
    for (const auto& a : atoms) {
        const BarycentricWeights bw =
            locate_scaled(grid, a.next.S * scale, a.next.E * scale, a.next.I * scale);
        for (int v = 0; v < bw.count; ++v) {
            const auto l = grid.lattice(bw.corners[v]);
            const std::size_t slot =
                (static_cast<std::size_t>(l[0] - lo[0]) * ny + (l[1] - lo[1])) * nz +
                (l[2] - lo[2]);
            acc[slot] += bw.weights[v] * a.probability;
            touched[slot] = 1;
        }
    }

    SparseDistribution row;
    double total = 0.0;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            for (int k = 0; k < nz; ++k) {
                const std::size_t slot = (static_cast<std::size_t>(i) * ny + j) * nz + k;
                if (!touched[slot] || acc[slot] <= 0.0) continue;
                row.entries.push_back({grid.index(lo[0] + i, lo[1] + j, lo[2] + k), acc[slot]});
                total += acc[slot];
            }
    for (auto& e : row.entries) e.probability /= total;
    return row;
}

double discrete_reward(const Grid& grid, const EpidemicParams& params, int from,
                       const Action& action) {
    if (!grid.in_S(from)) return 0.0;
    return nominal_reward(params, corner_state(grid, params, from), action);
}

double terminal_reward(const Grid&, int) { return 0.0; }

std::vector<int> union_support(const std::vector<SparseDistribution>& rows) {
    std::vector<int> out;
    for (const auto& r : rows)
        for (const auto& e : r.entries) out.push_back(e.index);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<int> successor_support(const Grid& grid, const EpidemicParams& params, int from) {
    std::vector<SparseDistribution> rows;
    for (int a = 0; a < params.num_actions(); ++a)
        rows.push_back(discretize_kernel(grid, params, from, action_from_index(a, params.M)));
    return union_support(rows);
}

}  // namespace drmdp
