// Finite-horizon planners over (corner, stage) pairs: trial-based RTDP from an
// initial corner and backward induction over every corner of S.

#pragma once

#include "drmdp/bellman.hpp"
#include "drmdp/model.hpp"

#include <cstdint>
#include <iosfwd>
#include <random>
#include <unordered_map>
#include <vector>

namespace drmdp {

/// V(corner, stage) for stages 1..T-1, stored sparsely. Stage T and corners
/// outside S are never stored.
class ValueTable {
public:
    struct Entry {
        double value = 0.0;
        int action = -1;
        std::uint64_t stamp = 0;  ///< clock tick of the last change
    };

    explicit ValueTable(int T = 2) : T_(T) {}

    int horizon() const { return T_; }
    const Entry* find(int state, int stage) const;
    /// Stores a value; the stamp advances only when the value changes.
    void set(int state, int stage, double value, int action);
    std::size_t size() const { return map_.size(); }
    std::uint64_t clock() const { return clock_; }

    struct Row {
        int stage;
        int state;
        Entry entry;
    };
    /// Entries ordered by (stage, state).
    std::vector<Row> rows() const;

private:
    std::uint64_t key(int state, int stage) const {
        return static_cast<std::uint64_t>(state) * static_cast<std::uint64_t>(T_ + 1) +
               static_cast<std::uint64_t>(stage);
    }
    int T_;
    std::unordered_map<std::uint64_t, Entry> map_;
    std::uint64_t clock_ = 0;
};

enum class HeuristicKind { BestReward, Zero };

struct PlannerConfig {
    Backend backend = Backend::DrmdpMcCormick;
    int niter = 50;
    std::uint64_t seed = 1;
    HeuristicKind heuristic = HeuristicKind::BestReward;
    /// Probability of drawing the successor uniformly from the in-S corners
    /// of the successor support instead of by the nominal row. The support
    /// spans every action, so every corner nature may weight gets visited.
    double exploration = 0.0;
    /// Re-back up the trial's states from the deepest one back to the root
    /// once the trial ends.
    bool backward_pass = true;
    bool early_stop = true;
    double stop_tol = 1e-7;
    int stop_window = 10;
    double robust_budget = 0.5;
    MipOptions mip;
    int threads = 1;
    std::ostream* debug = nullptr;
};

BellmanConfig bellman_config(const ModelBundle& bundle, const PlannerConfig& cfg);

/// Upper bound on V used for unvisited (corner, stage) pairs. Rewards are
/// nonpositive, so the best one-stage reward bounds the nominal and robust
/// values. The penalized DRMDP backups can pay out up to `stage_allowance`
/// per stage from forced mean violations, which is added for every
/// remaining stage.
struct Heuristic {
    HeuristicKind kind = HeuristicKind::BestReward;
    double stage_allowance = 0.0;
};

/// The bundle's penalty allowance for DRMDP backends, 0 otherwise.
Heuristic planner_heuristic(const ModelBundle& bundle, HeuristicKind kind, Backend backend);

/// h(corner, T) = 0; h(corner, t) = max_a reward at the corner for t < T,
/// plus the allowance summed over stages t..T-1 with discounting.
double admissible_heuristic(const ModelBundle& bundle, int state, int stage,
                            const Heuristic& h = {});
/// Same bound from an explicit reward vector.
double admissible_heuristic(const std::vector<double>& rewards, int stage, int T);

/// V(corner, stage) as the planners see it: 0 at stage T and outside S, the
/// stored value if present, the heuristic otherwise.
double lookup_value(const ModelBundle& bundle, const ValueTable& table, int state, int stage,
                    const Heuristic& h = {});

/// V(., stage) aligned with the support of `sm`.
std::vector<double> successor_values(const ModelBundle& bundle, const ValueTable& table,
                                     const StateModel& sm, int stage, const Heuristic& h = {});

struct TraceStep {
    int iteration;
    int stage;
    int state;
    int action;
    double value;
};

struct RtdpResult {
    ValueTable values;
    std::vector<TraceStep> trace;
    std::vector<double> root_history;  ///< V(init, 1) after each iteration
    int iterations = 0;
    std::uint64_t backups_solved = 0;
    std::uint64_t backups_cached = 0;
};

/// Throws std::domain_error when init lies outside S.
RtdpResult rtdp(int init, const PlannerConfig& cfg, const ModelBundle& bundle);

ValueTable backward_dp(const PlannerConfig& cfg, const ModelBundle& bundle);

/// Draws a successor from a dense row restricted to corners in S, or with
/// probability `exploration` uniformly from the in-S support. Given a table,
/// exploration draws among corners without an entry at `stage` while any
/// remain. Returns -1 when nothing can be drawn.
int sample_in_S(const ModelBundle& bundle, const StateModel& sm, const double* row,
                double exploration, std::mt19937_64& rng, const ValueTable* table = nullptr,
                int stage = 0);

void write_value_csv(std::ostream& os, const ModelBundle& bundle, const ValueTable& table);
void write_trace_csv(std::ostream& os, const ModelBundle& bundle, const std::vector<TraceStep>& trace);

}  // namespace drmdp
