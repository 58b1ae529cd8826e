// Discrete-time stochastic SEIR dynamics with vaccination and
// transmission-reduction controls.
//
// The population is closed: N stays constant and the recovered
// compartment is implicit (p_R = 1 - p_S - p_E - p_I).

#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace drmdp {

/// Epidemic and cost parameters. Defaults are this project's own choices.
struct EpidemicParams {
    int N = 1000;          ///< population size
    double mu = 10.0;      ///< contacts per period without intervention
    double beta = 0.025;   ///< infection probability per contact
    double alpha0 = 0.9;   ///< maximum fractional contact reduction
    double l_C = 0.5;      ///< mean incubation period
    double l_D = 1.0 / 3.0;///< mean infectious period
    double Q = 2.0;        ///< vaccine unit price
    double k_R = 500.0;    ///< cost per transmission-reduction level
    double W = 1000.0;     ///< loss per infection
    int L = 5;             ///< vaccination levels
    int M = 5;             ///< transmission-reduction levels
    double lambda = 0.95;  ///< discount factor
    int T = 12;            ///< horizon

    /// Throws std::domain_error naming the first violated range.
    void validate() const;

    int num_actions() const { return (L + 1) * (M + 1); }
};

struct Action {
    int y_V = 0;
    int y_R = 0;

    friend bool operator==(const Action&, const Action&) = default;
};

/// Dense action index: y_V major, y_R minor. Matches lexicographic order.
inline int action_index(const Action& a, int M) { return a.y_V * (M + 1) + a.y_R; }
inline Action action_from_index(int idx, int M) { return {idx / (M + 1), idx % (M + 1)}; }

/// Integer compartment counts. R = N - S - E - I.
struct PopulationCounts {
    int S = 0;
    int E = 0;
    int I = 0;

    friend bool operator==(const PopulationCounts&, const PopulationCounts&) = default;
};

/// Population fractions. Construct through from_fractions/from_counts so that
/// N * p is integral.
struct ContinuousState {
    double p_S = 0.0;
    double p_E = 0.0;
    double p_I = 0.0;

    static ContinuousState from_counts(int N, const PopulationCounts& c);
    /// Rounds N*p to the nearest person; if rounding pushes S+E+I above N the
    /// largest compartment gives up the excess.
    static ContinuousState from_fractions(int N, double p_S, double p_E, double p_I);

    PopulationCounts counts(int N) const;
};

struct CompiledRates {
    double phi = 0.0;
    double rho_C = 0.0;
    double rho_D = 0.0;
    double alpha_t = 0.0;
};

struct TransitionDraw {
    int n_B = 0;
    int n_C = 0;
    int n_D = 0;

    friend bool operator==(const TransitionDraw&, const TransitionDraw&) = default;
};

/// One atom of the exact next-state law.
struct Atom {
    PopulationCounts next;
    double probability = 0.0;
};

/// Marginal pmf entries below this are dropped before forming atoms.
inline constexpr double kBinomialTruncation = 1e-12;

CompiledRates compile_rates(const EpidemicParams& params, const ContinuousState& state,
                            const Action& action);

/// C(n,k) p^k (1-p)^(n-k), evaluated in log space.
double binomial_pmf(int n, double p, int k);

/// Susceptibles left after vaccination, rounded to whole persons.
int unvaccinated_susceptibles(const EpidemicParams& params, int S, const Action& action);

/// Exact next-state law as a list of atoms with total mass 1. Marginals are
/// truncated at kBinomialTruncation and the product renormalized.
std::vector<Atom> transition_pmf(const EpidemicParams& params, const ContinuousState& state,
                                 const Action& action);

TransitionDraw sample_transition(const EpidemicParams& params, const ContinuousState& state,
                                 const Action& action, std::mt19937_64& rng);

PopulationCounts apply_draw(const EpidemicParams& params, const PopulationCounts& from,
                            const Action& action, const TransitionDraw& draw);

struct RewardBreakdown {
    double vaccination = 0.0;
    double reduction = 0.0;
    double infection = 0.0;

    double total() const { return -(vaccination + reduction + infection); }
};

RewardBreakdown reward_components(const EpidemicParams& params, const ContinuousState& state,
                                  const Action& action);

/// Negative sum of vaccination, intervention and expected infection cost.
double nominal_reward(const EpidemicParams& params, const ContinuousState& state,
                      const Action& action);

}  // namespace drmdp
