// Decision-dependent first-moment ambiguity set: affine decision rules for
// the mean bounds and the reward, fitted by least squares over the actions.

#pragma once

#include "drmdp/grid.hpp"
#include "drmdp/seir.hpp"

#include <array>
#include <stdexcept>
#include <vector>

namespace drmdp {

struct AmbiguityConfig {
    double delta = 0.05;  ///< mean half-width around the nominal row
    double k = 1000.0;    ///< penalty per unit of mean violation

    void validate() const;
};

/// Affine maps a -> (eta_U, eta_L, reward), one coefficient triple
/// (intercept, y_V slope, y_R slope) per successor in `support`.
struct DecisionRuleCoefficients {
    std::vector<int> support;
    std::vector<std::array<double, 3>> rho;    ///< upper-bound rule
    std::vector<std::array<double, 3>> sigma;  ///< lower-bound rule
    std::array<double, 3> eps{};               ///< reward rule
};

struct EtaBounds {
    std::vector<double> eta_L;
    std::vector<double> eta_U;
};

class UnderdeterminedFit : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Ridge added to the normal equations.
inline constexpr double kRegressionRidge = 1e-10;

/// Least-squares fit over the training actions. kernels[i] and rewards[i]
/// belong to actions[i]; the support is the union of the kernel supports.
/// Throws UnderdeterminedFit when the design [1, y_V, y_R] has rank < 3.
DecisionRuleCoefficients fit_rules(const std::vector<Action>& actions,
                                   const std::vector<SparseDistribution>& kernels,
                                   const std::vector<double>& rewards, const AmbiguityConfig& cfg);

/// 1 + max_a sum_i |H(a, i)| for the hat matrix H of the design. Bounds the
/// L1 distance between any kernel row and its fitted mean, hence the smallest
/// mean violation nature can be forced into.
double residual_l1_bound(const std::vector<Action>& actions);

EtaBounds eta_bounds(const DecisionRuleCoefficients& coeffs, const Action& a);

double reward_rule(const DecisionRuleCoefficients& coeffs, const Action& a);

inline double affine(const std::array<double, 3>& c, const Action& a) {
    return c[0] + c[1] * a.y_V + c[2] * a.y_R;
}

}  // namespace drmdp
