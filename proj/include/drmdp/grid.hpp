// Corner-state grid over the unit cube, Kuhn (Freudenthal) triangulation and
// the discrete nominal kernel built on top of it.

#pragma once

#include "drmdp/seir.hpp"

#include <array>
#include <cstddef>
#include <vector>

namespace drmdp {

struct GridSpec {
    int Y = 30;
};

struct CornerState {
    int index = 0;
    std::array<double, 3> coords{};  ///< (p_S, p_E, p_I), multiples of 1/Y
    bool in_S = false;               ///< p_S + p_E + p_I <= 1
};

/// (Y+1)^3 lattice of corner states. Index = (i*(Y+1) + j)*(Y+1) + k for the
/// lattice triple (i, j, k) = Y * (p_S, p_E, p_I).
class Grid {
public:
    explicit Grid(GridSpec spec);

    int Y() const { return Y_; }
    int side() const { return Y_ + 1; }
    int size() const { return side() * side() * side(); }

    int index(int i, int j, int k) const { return (i * side() + j) * side() + k; }
    std::array<int, 3> lattice(int index) const;
    std::array<double, 3> coords(int index) const;
    bool in_S(int index) const;
    CornerState corner(int index) const;

    /// Corner indices with in_S set, in increasing order.
    const std::vector<int>& feasible() const { return feasible_; }

    /// In-S corner nearest to the given fractions in Euclidean distance; ties
    /// go to the lowest index.
    int nearest(double p_S, double p_E, double p_I) const;

private:
    int Y_;
    std::vector<int> feasible_;
};

std::vector<CornerState> build_grid(const GridSpec& spec);

struct BarycentricWeights {
    int count = 0;  ///< number of nonzero weights, 1..4
    std::array<int, 4> corners{};
    std::array<double, 4> weights{};
    int simplex = 0;  ///< 0..5, lexicographic rank of the coordinate-sort permutation
};

/// Simplex containing s and its barycentric weights. Throws std::domain_error
/// when s lies outside the unit cube.
BarycentricWeights locate(const Grid& grid, const ContinuousState& s);

/// Same as locate() for coordinates already scaled by Y (each in [0, Y]).
BarycentricWeights locate_scaled(const Grid& grid, double x, double y, double z);

/// Lattice corners of simplex `label` inside the cube whose low corner is
/// `low`, along the path low -> ... -> low + (1,1,1).
std::array<std::array<int, 3>, 4> simplex_corners(const std::array<int, 3>& low, int label);

struct SparseEntry {
    int index = 0;
    double probability = 0.0;

    friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

/// Probability mass over corner indices, sorted by index with unique entries.
struct SparseDistribution {
    std::vector<SparseEntry> entries;

    double total() const;
    double at(int index) const;
    std::size_t size() const { return entries.size(); }
};

/// Continuous corner state (with person counts rounded) of a grid corner.
ContinuousState corner_state(const Grid& grid, const EpidemicParams& params, int index);

/// Discrete nominal transition row from corner `from` under `action`.
/// Corners outside S are absorbing.
SparseDistribution discretize_kernel(const Grid& grid, const EpidemicParams& params, int from,
                                     const Action& action);

/// Nominal reward at an in-S corner, 0 elsewhere.
double discrete_reward(const Grid& grid, const EpidemicParams& params, int from,
                       const Action& action);

/// Terminal reward. Zero everywhere.
double terminal_reward(const Grid& grid, int index);

/// Union of kernel supports over every action, sorted.
std::vector<int> successor_support(const Grid& grid, const EpidemicParams& params, int from);

/// Union of the supports of the given rows, sorted.
std::vector<int> union_support(const std::vector<SparseDistribution>& rows);

}  // namespace drmdp
