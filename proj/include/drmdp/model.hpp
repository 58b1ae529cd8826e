// Per-state compiled model: successor support, aligned nominal kernel rows,
// rewards and fitted decision rules, built lazily on demand.

#pragma once

#include "drmdp/ambiguity.hpp"
#include "drmdp/grid.hpp"
#include "drmdp/seir.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace drmdp {

/// Integer action grid {0..L} x {0..M}. L or M may be 0 in hand-built models.
struct ActionSpace {
    int L = 5;
    int M = 5;

    int size() const { return (L + 1) * (M + 1); }
    Action at(int idx) const { return action_from_index(idx, M); }
    int index(const Action& a) const { return action_index(a, M); }
};

struct StateModel {
    int state = -1;
    bool in_S = true;
    ActionSpace actions;
    std::vector<int> support;         ///< sorted corner indices
    std::vector<double> support_pI;   ///< p_I coordinate of each support corner
    std::vector<double> kernel;       ///< actions.size() rows of width support.size()
    std::vector<double> rewards;      ///< nominal reward per action
    DecisionRuleCoefficients rules;   ///< rules.support == support

    std::size_t width() const { return support.size(); }
    const double* row(int a) const { return kernel.data() + static_cast<std::size_t>(a) * width(); }
    /// Position of a corner in the support, or -1.
    int position(int corner) const;
};

/// Builds a state model from per-action sparse rows and rewards, fitting the
/// decision rules. The support is the union of the row supports.
StateModel assemble_state_model(int state, const ActionSpace& actions,
                                const std::vector<SparseDistribution>& rows,
                                const std::vector<double>& rewards,
                                const std::vector<double>& corner_pI, const AmbiguityConfig& cfg);

/// 64-bit FNV-1a over a byte string.
std::uint64_t fnv1a(const std::string& bytes);

class ModelBundle {
public:
    ModelBundle(const EpidemicParams& params, const GridSpec& spec, const AmbiguityConfig& cfg);

    const EpidemicParams& params() const { return params_; }
    const Grid& grid() const { return grid_; }
    const AmbiguityConfig& ambiguity() const { return cfg_; }
    ActionSpace actions() const { return {params_.L, params_.M}; }

    /// Compiled model of a corner, built on first use. Thread-safe.
    const StateModel& at(int state) const;
    bool compiled(int state) const;
    std::size_t compiled_count() const { return compiled_count_.load(); }

    /// Compiles the listed corners on `threads` workers.
    void compile(const std::vector<int>& states, int threads) const;

    /// max_a of the nominal reward at a corner (0 off S). Needs no kernel.
    double best_reward(int state) const { return best_reward_[state]; }

    /// k times the residual bound of the action design: the largest penalty
    /// nature can be forced to pay in one stage.
    double penalty_allowance() const { return penalty_allowance_; }

    /// Hex digest of (params, Y, delta, k).
    std::string hash() const;

    /// Writes kernels.csv (state, action, successor, probability) and
    /// rules.csv for every compiled corner.
    void save_cache(const std::string& dir) const;
    /// Loads kernels.csv written by save_cache; rules are refitted. Returns
    /// the number of corners loaded.
    std::size_t load_cache(const std::string& dir) const;

private:
    StateModel build(int state) const;
    void install(int state, StateModel model) const;

    EpidemicParams params_;
    Grid grid_;
    AmbiguityConfig cfg_;
    std::vector<double> best_reward_;
    std::vector<double> corner_pI_;
    double penalty_allowance_ = 0.0;
    mutable std::unique_ptr<std::unique_ptr<StateModel>[]> models_;
    mutable std::unique_ptr<std::once_flag[]> once_;
    mutable std::unique_ptr<std::atomic<bool>[]> ready_;
    mutable std::atomic<std::size_t> compiled_count_{0};
};

}  // namespace drmdp
