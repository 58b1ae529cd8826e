// Policy evaluation on the discrete grid under the nominal or a perturbed
// ("true") kernel, plus the model comparison and sensitivity drivers.

#pragma once

#include "drmdp/bellman.hpp"
#include "drmdp/planners.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace drmdp {

enum class PerturbationDirection { TowardInfectives, RandomDirection };

struct PerturbationSpec {
    double radius = 0.5;  ///< L1 budget per row
    PerturbationDirection direction = PerturbationDirection::TowardInfectives;
    std::uint64_t seed = 0;  ///< used by RandomDirection only

    void validate() const;
};

/// Perturbed copy of one dense row of a state model.
std::vector<double> perturbed_row(const StateModel& sm, int action, const PerturbationSpec& spec);

/// Perturbs every row independently.
std::vector<SparseDistribution> build_true_kernel(const std::vector<SparseDistribution>& kernels,
                                                  const Grid& grid, const PerturbationSpec& spec);

struct StageRecord {
    int stage = 0;
    int state = 0;
    Action action;
    double reward = 0.0;
    double pct_infective = 0.0;
    double pct_recovered = 0.0;
};

struct EpisodeRecord {
    std::vector<StageRecord> stages;  ///< decision stages 1..T-1
    int final_state = 0;              ///< corner reached at stage T
    double terminal_reward = 0.0;
    double total_reward = 0.0;        ///< discounted
};

enum class KernelKind { Nominal, Perturbed };
const char* kernel_name(KernelKind k);

/// Greedy action of `backend` at (state, stage) against V(., stage + 1).
int greedy_action(const ModelBundle& bundle, const ValueTable& table, Backend backend,
                  const PlannerConfig& cfg, int state, int stage);

/// Runs one episode from `init`. Successors are drawn from the nominal row
/// or its perturbed copy, including absorbing corners outside S.
EpisodeRecord run_episode(const ModelBundle& bundle, const ValueTable& table, Backend backend,
                          const PlannerConfig& cfg, KernelKind kernel,
                          const PerturbationSpec& perturbation, int init, std::uint64_t seed);

struct Scenario {
    std::vector<Backend> backends{Backend::DrmdpMcCormick, Backend::Nominal, Backend::Robust};
    std::vector<double> p_S1{0.60, 0.65, 0.70, 0.75};
    double p_E1 = 0.1;
    std::vector<KernelKind> kernels{KernelKind::Nominal, KernelKind::Perturbed};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    PlannerConfig planner;
    PerturbationSpec perturbation;
    int threads = 1;
};

/// Initial corner for p_S(1), p_E(1) and p_I(1) = 1 - p_S(1) - p_E(1).
int initial_corner(const Grid& grid, double p_S1, double p_E1);

struct ComparisonRow {
    std::string backend;
    std::string kernel;
    double p_S1 = 0.0;
    std::uint64_t seed = 0;
    StageRecord stage;
    double total_reward = 0.0;
};

struct CellSummary {
    std::string backend;
    std::string kernel;
    double p_S1 = 0.0;
    double mean_total = 0.0;
    double sd_total = 0.0;
    std::vector<double> mean_y_V;  ///< per decision stage
    std::vector<double> mean_y_R;
    std::vector<double> mean_pct_infective;
    std::vector<double> mean_pct_recovered;
};

struct ComparisonResult {
    std::vector<ComparisonRow> rows;
    std::vector<CellSummary> cells;
    const CellSummary* find(const std::string& backend, const std::string& kernel, double p_S1) const;
};

/// Plans once per (backend, p_S1) with RTDP from the initial corner, then
/// evaluates every seed under every kernel.
ComparisonResult compare_models(const ModelBundle& bundle, const Scenario& scenario);

/// Parameter names: Q, k_R, mu_beta, W, alpha0. mu_beta rescales beta.
EpidemicParams with_parameter(const EpidemicParams& base, const std::string& name, double value);

struct SensitivityRow {
    std::string param;
    double value = 0.0;
    std::uint64_t seed = 0;
    int stage = 0;
    double pct_infective = 0.0;
};

struct SensitivityResult {
    std::vector<SensitivityRow> rows;
    /// Sum over stages of the seed-mean % infectives, one per value.
    std::vector<double> aggregate_infectives;
};

/// Throws std::domain_error on an unknown parameter name.
SensitivityResult sensitivity_sweep(const std::string& param, const std::vector<double>& values,
                                    const EpidemicParams& base, const GridSpec& grid,
                                    const AmbiguityConfig& ambiguity, Backend backend,
                                    const Scenario& scenario, double p_S1);

void write_comparison_csv(std::ostream& os, const ComparisonResult& result);
void write_summary_csv(std::ostream& os, const ComparisonResult& result);
void write_sensitivity_csv(std::ostream& os, const SensitivityResult& result);

}  // namespace drmdp
