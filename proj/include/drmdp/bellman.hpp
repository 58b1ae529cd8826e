// One-stage Bellman backups: nominal, robust (worst-case kernel shift) and the
// distributionally robust backups over the first-moment ambiguity set, in
// per-action dual LP, McCormick MIP, unary MIP and greedy primal forms.
//
// Every backup takes V(., t+1) aligned with the state's successor support.

#pragma once

#include "drmdp/ambiguity.hpp"
#include "drmdp/grid.hpp"
#include "drmdp/lp.hpp"
#include "drmdp/model.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace drmdp {

enum class Backend { Nominal, Robust, DrmdpEnumerate, DrmdpMcCormick, DrmdpUnary, DrmdpGreedy };

const char* backend_name(Backend b);
/// Accepts nominal, robust, drmdp-enumerate, drmdp-mccormick, drmdp-unary,
/// drmdp-greedy. Throws std::domain_error otherwise.
Backend parse_backend(const std::string& name);
bool is_drmdp(Backend b);

struct BackupResult {
    double value = 0.0;
    int action = 0;  ///< action index in the state's ActionSpace
};

struct MipOptions {
    /// Use 1 as the lower action bound inside the McCormick envelopes.
    bool literal_action_bounds = false;
    opt::BranchAndBoundOptions bnb;
};

struct BellmanConfig {
    double lambda = 0.95;
    AmbiguityConfig ambiguity;
    double robust_budget = 0.5;
    MipOptions mip;
    std::ostream* debug = nullptr;  ///< receives LP/MIP listings when set
};

BackupResult nominal_backup(const StateModel& sm, const std::vector<double>& v_next, double lambda);

/// Moves up to budget/2 of mass, lowest p_I successors first, onto the
/// highest p_I successor of the row. Ties in p_I are ordered by corner index.
SparseDistribution worst_case_shift(const SparseDistribution& row, const Grid& grid, double budget);

/// Same transfer on a dense row; key[j] is the p_I coordinate of slot j.
/// Only slots with positive mass take part.
void worst_case_shift_inplace(std::vector<double>& probs, const std::vector<double>& key,
                              double budget);

BackupResult robust_backup(const StateModel& sm, const std::vector<double>& v_next, double lambda,
                           double budget);

struct DualSolution {
    double q = 0.0;
    std::vector<double> w;
    std::vector<double> u;
    std::vector<double> x;  ///< mean violation (multiplier of w + u <= k)
    std::vector<double> m;  ///< worst-case mean (multiplier of the q rows)
};

struct InnerResult {
    double value = 0.0;
    DualSolution dual;
};

/// Inner problem for explicit data: lv = lambda * V_next.
InnerResult inner_dual_lp(double reward, const std::vector<double>& eta_L,
                          const std::vector<double>& eta_U, const std::vector<double>& lv, double k,
                          std::ostream* debug = nullptr);

/// Exact minimum of the penalized mean problem
///   reward + min_{m in simplex} sum_j lv_j m_j + k max(0, m_j - eta_U_j, eta_L_j - m_j),
/// by a separable piecewise-linear greedy fill. Optionally returns m.
double inner_primal_value(double reward, const std::vector<double>& eta_L,
                          const std::vector<double>& eta_U, const std::vector<double>& lv, double k,
                          std::vector<double>* m = nullptr);

InnerResult inner_dual_lp(const StateModel& sm, int action, const std::vector<double>& v_next,
                          double lambda, const AmbiguityConfig& cfg, std::ostream* debug = nullptr);
double inner_primal_oracle(const StateModel& sm, int action, const std::vector<double>& v_next,
                           double lambda, const AmbiguityConfig& cfg);

BackupResult drmdp_backup_enumerate(const StateModel& sm, const std::vector<double>& v_next,
                                    double lambda, const AmbiguityConfig& cfg);
/// Max over actions of inner_primal_value; same value as the enumerate backend.
BackupResult drmdp_backup_greedy(const StateModel& sm, const std::vector<double>& v_next,
                                 double lambda, const AmbiguityConfig& cfg);

opt::MixedIntegerProgram build_mccormick_mip(const StateModel& sm, const std::vector<double>& v_next,
                                             double lambda, const AmbiguityConfig& cfg,
                                             bool literal_action_bounds);
opt::MixedIntegerProgram build_unary_mip(const StateModel& sm, const std::vector<double>& v_next,
                                         double lambda, const AmbiguityConfig& cfg);

/// Throws std::runtime_error if the MIP solve does not end optimal.
BackupResult drmdp_backup_mccormick(const StateModel& sm, const std::vector<double>& v_next,
                                    double lambda, const AmbiguityConfig& cfg,
                                    const MipOptions& opts = {}, std::ostream* debug = nullptr);
BackupResult drmdp_backup_unary(const StateModel& sm, const std::vector<double>& v_next,
                                double lambda, const AmbiguityConfig& cfg,
                                const MipOptions& opts = {}, std::ostream* debug = nullptr);

BackupResult backup(Backend backend, const StateModel& sm, const std::vector<double>& v_next,
                    const BellmanConfig& cfg);

/// Action-value of one action under a backend (the inner problem for DRMDP
/// backends, evaluated exactly).
double action_value(Backend backend, const StateModel& sm, int action,
                    const std::vector<double>& v_next, const BellmanConfig& cfg);

struct FullSpaceReport {
    double restricted = 0.0;
    double full = 0.0;
    bool agree = false;
};

/// Inner dual LP over the successor support versus over every grid corner
/// (off-support bounds 0). v_grid holds V(., t+1) for every corner.
FullSpaceReport full_space_check(const ModelBundle& bundle, int state, int action,
                                 const std::vector<double>& v_grid, double lambda,
                                 double tol = 1e-6);

}  // namespace drmdp
