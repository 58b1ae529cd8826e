#include "drmdp/ambiguity.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <utility>

namespace drmdp {

namespace {

using Mat3 = std::array<std::array<double, 3>, 3>;

// Inverse of a symmetric positive definite 3x3 matrix by Gauss-Jordan with
// partial pivoting.
Mat3 invert(Mat3 a) {
    Mat3 inv{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        std::swap(inv[col], inv[piv]);
        const double d = a[col][col];
        for (int c = 0; c < 3; ++c) {
            a[col][c] /= d;
            inv[col][c] /= d;
        }
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            for (int c = 0; c < 3; ++c) {
                a[r][c] -= f * a[col][c];
                inv[r][c] -= f * inv[col][c];
            }
        }
    }
    return inv;
}

// Rank of the centred action cloud; the design has full column rank iff the
// (y_V, y_R) points are not collinear.
bool affinely_independent(const std::vector<Action>& actions) {
    const Action& p0 = actions.front();
    for (std::size_t i = 1; i < actions.size(); ++i) {
        const double ux = actions[i].y_V - p0.y_V, uy = actions[i].y_R - p0.y_R;
        if (ux == 0 && uy == 0) continue;
        for (std::size_t j = i + 1; j < actions.size(); ++j) {
            const double vx = actions[j].y_V - p0.y_V, vy = actions[j].y_R - p0.y_R;
            if (ux * vy - uy * vx != 0.0) return true;
        }
    }
    return false;
}

}  // namespace

void AmbiguityConfig::validate() const {
    if (!(delta >= 0.0) || !std::isfinite(delta))
        throw std::domain_error("invalid ambiguity parameter: delta must be >= 0");
    if (!(k >= 0.0) || !std::isfinite(k))
        throw std::domain_error("invalid ambiguity parameter: k must be >= 0");
}

namespace {

Mat3 inverse_gram(const std::vector<Action>& actions) {
    Mat3 gram{};
    for (const auto& a : actions) {
        const double x[3] = {1.0, static_cast<double>(a.y_V), static_cast<double>(a.y_R)};
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) gram[r][c] += x[r] * x[c];
    }
    for (int d = 0; d < 3; ++d) gram[d][d] += kRegressionRidge;
    return invert(gram);
}

}  // namespace

double residual_l1_bound(const std::vector<Action>& actions) {
    if (actions.empty()) return 1.0;
    const Mat3 ginv = inverse_gram(actions);
    double worst = 0.0;
    for (const auto& a : actions) {
        const double xa[3] = {1.0, static_cast<double>(a.y_V), static_cast<double>(a.y_R)};
        double row = 0.0;
        for (const auto& b : actions) {
            const double xb[3] = {1.0, static_cast<double>(b.y_V), static_cast<double>(b.y_R)};
            double h = 0.0;
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) h += xa[r] * ginv[r][c] * xb[c];
            row += std::abs(h);
        }
        worst = std::max(worst, row);
    }
    return 1.0 + worst;
}

DecisionRuleCoefficients fit_rules(const std::vector<Action>& actions,
                                   const std::vector<SparseDistribution>& kernels,
                                   const std::vector<double>& rewards,
                                   const AmbiguityConfig& cfg) {
    if (actions.size() != kernels.size() || actions.size() != rewards.size())
        throw std::invalid_argument("fit_rules: actions, kernels and rewards differ in length");
    std::set<std::pair<int, int>> distinct;
    for (const auto& a : actions) distinct.insert({a.y_V, a.y_R});
    if (distinct.size() < 3 || !affinely_independent(actions))
        throw UnderdeterminedFit("fit_rules: fewer than 3 affinely independent actions");

    const std::size_t n = actions.size();
    const Mat3 ginv = inverse_gram(actions);

    // hat[i] = (X^T X + ridge)^{-1} x_i, so beta = sum_i hat[i] * y_i.
    std::vector<std::array<double, 3>> hat(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double x[3] = {1.0, static_cast<double>(actions[i].y_V),
                             static_cast<double>(actions[i].y_R)};
        for (int r = 0; r < 3; ++r)
            hat[i][r] = ginv[r][0] * x[0] + ginv[r][1] * x[1] + ginv[r][2] * x[2];
    }
    std::array<double, 3> hat_ones{};
    for (const auto& h : hat)
        for (int r = 0; r < 3; ++r) hat_ones[r] += h[r];

    DecisionRuleCoefficients out;
    out.support = union_support(kernels);
    const std::size_t S = out.support.size();
    out.rho.assign(S, {0.0, 0.0, 0.0});
    out.sigma.assign(S, {0.0, 0.0, 0.0});

    std::vector<std::array<double, 3>> fit_p(S, {0.0, 0.0, 0.0});
    for (std::size_t i = 0; i < n; ++i) {
        for (const auto& e : kernels[i].entries) {
            const auto pos = static_cast<std::size_t>(
                std::lower_bound(out.support.begin(), out.support.end(), e.index) -
                out.support.begin());
            for (int r = 0; r < 3; ++r) fit_p[pos][r] += hat[i][r] * e.probability;
        }
        for (int r = 0; r < 3; ++r) out.eps[r] += hat[i][r] * rewards[i];
    }
    for (std::size_t j = 0; j < S; ++j)
        for (int r = 0; r < 3; ++r) {
            out.rho[j][r] = fit_p[j][r] + cfg.delta * hat_ones[r];
            out.sigma[j][r] = fit_p[j][r] - cfg.delta * hat_ones[r];
        }
    return out;
}

EtaBounds eta_bounds(const DecisionRuleCoefficients& coeffs, const Action& a) {
    EtaBounds b;
    b.eta_L.reserve(coeffs.support.size());
    b.eta_U.reserve(coeffs.support.size());
    for (std::size_t j = 0; j < coeffs.support.size(); ++j) {
        b.eta_U.push_back(affine(coeffs.rho[j], a));
        b.eta_L.push_back(affine(coeffs.sigma[j], a));
    }
    return b;
}

double reward_rule(const DecisionRuleCoefficients& coeffs, const Action& a) {
    return affine(coeffs.eps, a);
}

}  // namespace drmdp
