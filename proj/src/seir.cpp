#include "drmdp/seir.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace drmdp {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) throw std::domain_error("invalid epidemic parameter: " + what);
}

double log_binomial_pmf(int n, double p, int k) {
    const double log_choose =
        std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
    return log_choose + k * std::log(p) + (n - k) * std::log1p(-p);
}

// Marginal pmf restricted to the entries at or above the truncation level.
struct Marginal {
    int first = 0;
    std::vector<double> pmf;
};

Marginal truncated_binomial(int n, double p) {
    if (n == 0 || p <= 0.0) return {0, {1.0}};
    if (p >= 1.0) return {n, {1.0}};
    const int mode = std::clamp(static_cast<int>(std::floor((n + 1) * p)), 0, n);
    int lo = mode;
    while (lo > 0 && binomial_pmf(n, p, lo - 1) >= kBinomialTruncation) --lo;
    int hi = mode;
    while (hi < n && binomial_pmf(n, p, hi + 1) >= kBinomialTruncation) ++hi;
    Marginal m;
    m.first = lo;
    m.pmf.reserve(hi - lo + 1);
    for (int k = lo; k <= hi; ++k) m.pmf.push_back(binomial_pmf(n, p, k));
    return m;
}

}  // namespace

void EpidemicParams::validate() const {
    require(N >= 1, "N must be >= 1");
    require(mu >= 0.0 && std::isfinite(mu), "mu must be finite and >= 0");
    require(beta >= 0.0 && beta <= 1.0, "beta must lie in [0,1]");
    require(alpha0 >= 0.0 && alpha0 <= 1.0, "alpha0 must lie in [0,1]");
    require(l_C > 0.0 && std::isfinite(l_C), "l_C must be > 0");
    require(l_D > 0.0 && std::isfinite(l_D), "l_D must be > 0");
    require(Q >= 0.0 && std::isfinite(Q), "Q must be >= 0");
    require(k_R >= 0.0 && std::isfinite(k_R), "k_R must be >= 0");
    require(W >= 0.0 && std::isfinite(W), "W must be >= 0");
    require(L >= 1, "L must be >= 1");
    require(M >= 1, "M must be >= 1");
    require(lambda > 0.0 && lambda <= 1.0, "lambda must lie in (0,1]");
    require(T >= 2, "T must be >= 2");
}

ContinuousState ContinuousState::from_counts(int N, const PopulationCounts& c) {
    const double n = N;
    return {c.S / n, c.E / n, c.I / n};
}

ContinuousState ContinuousState::from_fractions(int N, double p_S, double p_E, double p_I) {
    PopulationCounts c{static_cast<int>(std::lround(N * p_S)),
                       static_cast<int>(std::lround(N * p_E)),
                       static_cast<int>(std::lround(N * p_I))};
    while (c.S + c.E + c.I > N) {
        int* largest = &c.S;
        if (c.E > *largest) largest = &c.E;
        if (c.I > *largest) largest = &c.I;
        --*largest;
    }
    return from_counts(N, c);
}

PopulationCounts ContinuousState::counts(int N) const {
    return {static_cast<int>(std::lround(N * p_S)), static_cast<int>(std::lround(N * p_E)),
            static_cast<int>(std::lround(N * p_I))};
}

CompiledRates compile_rates(const EpidemicParams& params, const ContinuousState& state,
                            const Action& action) {
    CompiledRates r;
    r.alpha_t = params.alpha0 * action.y_R / params.M;
    r.phi = -std::expm1(-(1.0 - r.alpha_t) * params.mu * state.p_I * params.beta);
    r.rho_C = -std::expm1(-params.l_C);
    r.rho_D = -std::expm1(-params.l_D);
    return r;
}

double binomial_pmf(int n, double p, int k) {
    if (n < 0 || k < 0 || k > n) throw std::domain_error("binomial_pmf: k outside [0, n]");
    if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("binomial_pmf: p outside [0, 1]");
    if (p == 0.0) return k == 0 ? 1.0 : 0.0;
    if (p == 1.0) return k == n ? 1.0 : 0.0;
    return std::exp(log_binomial_pmf(n, p, k));
}

int unvaccinated_susceptibles(const EpidemicParams& params, int S, const Action& action) {
    return static_cast<int>(
        std::lround(S * (1.0 - static_cast<double>(action.y_V) / params.L)));
}

std::vector<Atom> transition_pmf(const EpidemicParams& params, const ContinuousState& state,
                                 const Action& action) {
    const PopulationCounts c = state.counts(params.N);
    const CompiledRates rates = compile_rates(params, state, action);
    const int s_left = unvaccinated_susceptibles(params, c.S, action);

    const Marginal mb = truncated_binomial(s_left, rates.phi);
    const Marginal mc = truncated_binomial(c.E, rates.rho_C);
    const Marginal md = truncated_binomial(c.I, rates.rho_D);

    std::vector<Atom> atoms;
    atoms.reserve(mb.pmf.size() * mc.pmf.size() * md.pmf.size());
    double total = 0.0;
    for (std::size_t b = 0; b < mb.pmf.size(); ++b) {
        const int n_B = mb.first + static_cast<int>(b);
        for (std::size_t cc = 0; cc < mc.pmf.size(); ++cc) {
            const int n_C = mc.first + static_cast<int>(cc);
            const double pbc = mb.pmf[b] * mc.pmf[cc];
            for (std::size_t d = 0; d < md.pmf.size(); ++d) {
                const int n_D = md.first + static_cast<int>(d);
                const double p = pbc * md.pmf[d];
                atoms.push_back({{s_left - n_B, c.E + n_B - n_C, c.I + n_C - n_D}, p});
                total += p;
            }
        }
    }
    for (auto& a : atoms) a.probability /= total;
    return atoms;
}

TransitionDraw sample_transition(const EpidemicParams& params, const ContinuousState& state,
                                 const Action& action, std::mt19937_64& rng) {
    const PopulationCounts c = state.counts(params.N);
    const CompiledRates rates = compile_rates(params, state, action);
    const int s_left = unvaccinated_susceptibles(params, c.S, action);
    TransitionDraw d;
    d.n_B = std::binomial_distribution<int>(s_left, rates.phi)(rng);
    d.n_C = std::binomial_distribution<int>(c.E, rates.rho_C)(rng);
    d.n_D = std::binomial_distribution<int>(c.I, rates.rho_D)(rng);
    return d;
}

PopulationCounts apply_draw(const EpidemicParams& params, const PopulationCounts& from,
                            const Action& action, const TransitionDraw& draw) {
    const int s_left = unvaccinated_susceptibles(params, from.S, action);
    return {s_left - draw.n_B, from.E + draw.n_B - draw.n_C, from.I + draw.n_C - draw.n_D};
}

RewardBreakdown reward_components(const EpidemicParams& params, const ContinuousState& state,
                                  const Action& action) {
    const CompiledRates rates = compile_rates(params, state, action);
    const double n = params.N;
    RewardBreakdown r;
    r.vaccination = params.Q * (static_cast<double>(action.y_V) / params.L) * n * state.p_S;
    r.reduction = params.k_R * action.y_R;
    r.infection =
        params.W * (n * state.p_I + n * state.p_E * rates.rho_C - n * state.p_I * rates.rho_D);
    return r;
}

double nominal_reward(const EpidemicParams& params, const ContinuousState& state,
                      const Action& action) {
    return reward_components(params, state, action).total();
}

}  // namespace drmdp
