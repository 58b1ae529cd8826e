#include "drmdp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <queue>
#include <stdexcept>

namespace drmdp::opt {

const char* to_string(Status s) {
    switch (s) {
        case Status::Optimal: return "optimal";
        case Status::Infeasible: return "infeasible";
        case Status::Unbounded: return "unbounded";
        case Status::IterationLimit: return "iteration_limit";
    }
    return "unknown";
}

int LinearProgram::add_variable(double lo, double hi, double cost, std::string name) {
    objective.push_back(cost);
    lower.push_back(lo);
    upper.push_back(hi);
    names.push_back(std::move(name));
    return num_vars() - 1;
}

int LinearProgram::add_row(std::vector<Term> terms, Relation rel, double rhs) {
    rows.push_back({std::move(terms), rel, rhs});
    return num_rows() - 1;
}

void LinearProgram::validate() const {
    const auto n = objective.size();
    if (lower.size() != n || upper.size() != n)
        throw std::invalid_argument("lp: bound vectors do not match the objective length");
    for (std::size_t j = 0; j < n; ++j) {
        if (std::isnan(objective[j]) || std::isnan(lower[j]) || std::isnan(upper[j]))
            throw std::invalid_argument("lp: NaN in objective or bounds");
        if (lower[j] > upper[j]) throw std::invalid_argument("lp: lower bound exceeds upper bound");
        if (lower[j] == kInf || upper[j] == -kInf)
            throw std::invalid_argument("lp: bound at the wrong infinity");
    }
    for (const auto& r : rows) {
        if (!std::isfinite(r.rhs)) throw std::invalid_argument("lp: non-finite right-hand side");
        for (const auto& t : r.terms) {
            if (t.var < 0 || t.var >= static_cast<int>(n))
                throw std::invalid_argument("lp: row references an unknown variable");
            if (!std::isfinite(t.coeff)) throw std::invalid_argument("lp: non-finite coefficient");
        }
    }
}

double LinearProgram::evaluate(const std::vector<double>& x) const {
    double v = objective_offset;
    for (int j = 0; j < num_vars(); ++j) v += objective[j] * x[j];
    return v;
}

double LinearProgram::max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (int j = 0; j < num_vars(); ++j) {
        worst = std::max(worst, lower[j] - x[j]);
        worst = std::max(worst, x[j] - upper[j]);
    }
    for (const auto& r : rows) {
        double act = 0.0;
        for (const auto& t : r.terms) act += t.coeff * x[t.var];
        switch (r.relation) {
            case Relation::LessEqual: worst = std::max(worst, act - r.rhs); break;
            case Relation::GreaterEqual: worst = std::max(worst, r.rhs - act); break;
            case Relation::Equal: worst = std::max(worst, std::abs(act - r.rhs)); break;
        }
    }
    return worst;
}

int MixedIntegerProgram::add_variable(double lo, double hi, double cost, VarType type,
                                      std::string name) {
    types.push_back(type);
    return lp.add_variable(lo, hi, cost, std::move(name));
}

void MixedIntegerProgram::validate() const {
    lp.validate();
    if (types.size() != lp.objective.size())
        throw std::invalid_argument("mip: type vector does not match the variable count");
    for (std::size_t j = 0; j < types.size(); ++j)
        if (types[j] != VarType::Continuous &&
            (!std::isfinite(lp.lower[j]) || !std::isfinite(lp.upper[j])))
            throw std::invalid_argument("mip: integer variable without finite bounds");
}

namespace {

enum class VarState : std::uint8_t { Basic, AtLower, AtUpper, Free };

// Elementary column transform of the product-form inverse.
struct Eta {
    int row = 0;
    double pivot = 1.0;
    std::vector<int> idx;
    std::vector<double> val;
};

// Bounded-variable revised primal simplex in computational form
//   min c'x  s.t.  A x + s = 0,  lo <= (x, s) <= up,
// where the logical s_i carries the row's relation as bounds. The basis
// inverse is kept in product form and rebuilt every refactor_interval pivots.
class RevisedSimplex {
public:
    RevisedSimplex(const LinearProgram& lp, const std::vector<double>& lo,
                   const std::vector<double>& up, const SimplexOptions& opt)
        : lp_(lp), opt_(opt), n_(lp.num_vars()), m_(lp.num_rows()) {
        build_columns();
        const double sign = lp.sense == Sense::Maximize ? -1.0 : 1.0;
        cost_.assign(n_ + m_, 0.0);
        for (int j = 0; j < n_; ++j) cost_[j] = sign * lp.objective[j];
        lo_.resize(n_ + m_);
        up_.resize(n_ + m_);
        for (int j = 0; j < n_; ++j) {
            lo_[j] = lo[j];
            up_[j] = up[j];
        }
        for (int i = 0; i < m_; ++i) {
            const auto& r = lp.rows[i];
            switch (r.relation) {
                case Relation::LessEqual: lo_[n_ + i] = -r.rhs; up_[n_ + i] = kInf; break;
                case Relation::GreaterEqual: lo_[n_ + i] = -kInf; up_[n_ + i] = -r.rhs; break;
                case Relation::Equal: lo_[n_ + i] = up_[n_ + i] = -r.rhs; break;
            }
        }
        double scale = 1.0;
        for (int v = 0; v < n_ + m_; ++v) {
            if (std::isfinite(lo_[v])) scale = std::max(scale, std::abs(lo_[v]));
            if (std::isfinite(up_[v])) scale = std::max(scale, std::abs(up_[v]));
        }
        drift_tol_ = std::max(opt_.feasibility_tol, 1e-11 * scale);
        norm_.assign(n_ + m_, 2.0);
        for (int j = 0; j < n_; ++j) {
            double s = 1.0;
            for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) s += val_[p] * val_[p];
            norm_[j] = s;
        }
    }

    Solution run() {
        Solution sol;
        for (int j = 0; j < n_; ++j)
            if (lo_[j] > up_[j]) {
                sol.status = Status::Infeasible;
                return sol;
            }
        state_.assign(n_ + m_, VarState::Basic);
        x_.assign(n_ + m_, 0.0);
        for (int j = 0; j < n_; ++j) set_nonbasic_at_bound(j);
        basis_.resize(m_);
        for (int i = 0; i < m_; ++i) basis_[i] = n_ + i;

        refactor();
        int since_refactor = 0;
        const std::int64_t bland_after = 10LL * (m_ + n_);
        const std::int64_t max_iter = 200LL * (m_ + n_) + 10000;
        std::vector<double> cb(m_), pi(m_), alpha(m_);
        std::vector<char> infeasible(m_);
        // Once feasible, rounding drift below drift_tol_ does not reopen phase 1.
        bool reached_feasible = false;

        for (;;) {
            if (iterations_ >= max_iter) {
                sol.status = Status::IterationLimit;
                return finish(sol, pi);
            }
            if (since_refactor >= opt_.refactor_interval) {
                refactor();
                since_refactor = 0;
            }
            const bool bland = iterations_ >= bland_after;

            bool phase1 = false;
            const double ftol = reached_feasible ? drift_tol_ : opt_.feasibility_tol;
            for (int i = 0; i < m_; ++i) {
                const int v = basis_[i];
                infeasible[i] = 0;
                if (x_[v] < lo_[v] - ftol) infeasible[i] = -1;
                if (x_[v] > up_[v] + ftol) infeasible[i] = 1;
                if (infeasible[i]) phase1 = true;
            }
            if (!phase1) reached_feasible = true;
            for (int i = 0; i < m_; ++i)
                cb[i] = phase1 ? static_cast<double>(static_cast<signed char>(infeasible[i]))
                               : cost_[basis_[i]];
            pi = cb;
            btran(pi);

            const auto [entering, d_enter] = price(pi, phase1, bland);
            if (entering < 0) {
                if (since_refactor > 0) {
                    refactor();
                    since_refactor = 0;
                    continue;
                }
                sol.status = phase1 ? Status::Infeasible : Status::Optimal;
                return finish(sol, pi);
            }

            std::fill(alpha.begin(), alpha.end(), 0.0);
            load_column(entering, alpha);
            ftran(alpha);
            const double dir = d_enter < 0.0 ? 1.0 : -1.0;

            const Step step = ratio_test(entering, dir, alpha, infeasible, bland);
            if (step.unbounded) {
                if (since_refactor > 0) {
                    refactor();
                    since_refactor = 0;
                    continue;
                }
                if (phase1) {
                    // Numerical trouble: phase-1 objective is bounded below.
                    sol.status = Status::Infeasible;
                    return finish(sol, pi);
                }
                sol.status = Status::Unbounded;
                return finish(sol, pi);
            }

            const double theta = step.theta;
            x_[entering] += dir * theta;
            if (theta != 0.0)
                for (int i = 0; i < m_; ++i)
                    if (alpha[i] != 0.0) x_[basis_[i]] -= dir * theta * alpha[i];

            if (step.flip) {
                if (state_[entering] == VarState::AtLower) {
                    state_[entering] = VarState::AtUpper;
                    x_[entering] = up_[entering];
                } else {
                    state_[entering] = VarState::AtLower;
                    x_[entering] = lo_[entering];
                }
            } else {
                const int r = step.row;
                const int leaving = basis_[r];
                if (step.to_upper_of_lower) {
                    x_[leaving] = lo_[leaving];
                    state_[leaving] = VarState::AtLower;
                } else {
                    x_[leaving] = up_[leaving];
                    state_[leaving] = VarState::AtUpper;
                }
                if (lo_[leaving] == -kInf && up_[leaving] == kInf) state_[leaving] = VarState::Free;
                basis_[r] = entering;
                state_[entering] = VarState::Basic;
                push_eta(alpha, r);
                ++since_refactor;
            }
            ++iterations_;
        }
    }

private:
    struct Step {
        bool unbounded = false;
        bool flip = false;
        int row = -1;
        double theta = 0.0;
        bool to_upper_of_lower = false;  ///< leaving variable lands on its lower bound
    };

    void build_columns() {
        std::vector<std::vector<std::pair<int, double>>> cols(n_);
        for (int i = 0; i < m_; ++i) {
            auto terms = lp_.rows[i].terms;
            std::sort(terms.begin(), terms.end(),
                      [](const Term& a, const Term& b) { return a.var < b.var; });
            for (std::size_t p = 0; p < terms.size();) {
                double c = 0.0;
                const int v = terms[p].var;
                while (p < terms.size() && terms[p].var == v) c += terms[p++].coeff;
                if (c != 0.0) cols[v].push_back({i, c});
            }
        }
        col_start_.assign(n_ + 1, 0);
        for (int j = 0; j < n_; ++j)
            col_start_[j + 1] = col_start_[j] + static_cast<int>(cols[j].size());
        row_idx_.reserve(col_start_[n_]);
        val_.reserve(col_start_[n_]);
        for (int j = 0; j < n_; ++j)
            for (const auto& [i, c] : cols[j]) {
                row_idx_.push_back(i);
                val_.push_back(c);
            }
    }

    void set_nonbasic_at_bound(int j) {
        if (std::isfinite(lo_[j])) {
            state_[j] = VarState::AtLower;
            x_[j] = lo_[j];
        } else if (std::isfinite(up_[j])) {
            state_[j] = VarState::AtUpper;
            x_[j] = up_[j];
        } else {
            state_[j] = VarState::Free;
            x_[j] = 0.0;
        }
    }

    void load_column(int j, std::vector<double>& dense) const {
        if (j >= n_) {
            dense[j - n_] = 1.0;
            return;
        }
        for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) dense[row_idx_[p]] = val_[p];
    }

    double dot_column(int j, const std::vector<double>& y) const {
        if (j >= n_) return y[j - n_];
        double s = 0.0;
        for (int p = col_start_[j]; p < col_start_[j + 1]; ++p) s += val_[p] * y[row_idx_[p]];
        return s;
    }

    void ftran(std::vector<double>& w) const {
        for (const Eta& e : etas_) {
            double xr = w[e.row];
            if (xr == 0.0) continue;
            xr /= e.pivot;
            w[e.row] = xr;
            for (std::size_t p = 0; p < e.idx.size(); ++p) w[e.idx[p]] -= e.val[p] * xr;
        }
    }

    void btran(std::vector<double>& y) const {
        for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
            double s = y[it->row];
            for (std::size_t p = 0; p < it->idx.size(); ++p) s -= it->val[p] * y[it->idx[p]];
            y[it->row] = s / it->pivot;
        }
    }

    void push_eta(const std::vector<double>& alpha, int r) {
        Eta e;
        e.row = r;
        e.pivot = alpha[r];
        for (int i = 0; i < m_; ++i)
            if (i != r && std::abs(alpha[i]) > 1e-14) {
                e.idx.push_back(i);
                e.val.push_back(alpha[i]);
            }
        etas_.push_back(std::move(e));
    }

    // Rebuilds the product-form inverse of the current basis from the slack
    // basis, then recomputes basic values. Structural columns that turn out
    // dependent are dropped to a bound and their rows keep the logical.
    void refactor() {
        etas_.clear();
        std::vector<char> in_target(n_ + m_, 0);
        for (int v : basis_) in_target[v] = 1;
        std::vector<int> occupant(m_);
        std::iota(occupant.begin(), occupant.end(), n_);
        std::vector<int> structurals;
        for (int v : basis_)
            if (v < n_) structurals.push_back(v);
        std::sort(structurals.begin(), structurals.end(), [&](int a, int b) {
            const int na = col_start_[a + 1] - col_start_[a];
            const int nb = col_start_[b + 1] - col_start_[b];
            return na != nb ? na < nb : a < b;
        });
        std::vector<double> w(m_);
        for (int j : structurals) {
            std::fill(w.begin(), w.end(), 0.0);
            load_column(j, w);
            ftran(w);
            int r = -1;
            double best = 0.0;
            for (int i = 0; i < m_; ++i) {
                const int occ = occupant[i];
                if (occ >= n_ && !in_target[occ] && std::abs(w[i]) > best) {
                    best = std::abs(w[i]);
                    r = i;
                }
            }
            if (r < 0 || best < 1e-11) {
                set_nonbasic_at_bound(j);
                continue;
            }
            push_eta(w, r);
            occupant[r] = j;
        }
        basis_ = occupant;
        for (int i = 0; i < m_; ++i) state_[basis_[i]] = VarState::Basic;
        for (int v = 0; v < n_ + m_; ++v)
            if (state_[v] == VarState::Basic &&
                std::find(basis_.begin(), basis_.end(), v) == basis_.end())
                set_nonbasic_at_bound(v);
        recompute_basic_values();
    }

    void recompute_basic_values() {
        std::vector<double> rhs(m_, 0.0);
        for (int j = 0; j < n_ + m_; ++j) {
            if (state_[j] == VarState::Basic || x_[j] == 0.0) continue;
            if (j >= n_) {
                rhs[j - n_] -= x_[j];
            } else {
                for (int p = col_start_[j]; p < col_start_[j + 1]; ++p)
                    rhs[row_idx_[p]] -= val_[p] * x_[j];
            }
        }
        ftran(rhs);
        for (int i = 0; i < m_; ++i) x_[basis_[i]] = rhs[i];
    }

    std::pair<int, double> price(const std::vector<double>& pi, bool phase1, bool bland) const {
        int best = -1;
        double best_score = 0.0, best_d = 0.0;
        const double tol = opt_.optimality_tol;
        for (int j = 0; j < n_ + m_; ++j) {
            const VarState st = state_[j];
            if (st == VarState::Basic) continue;
            if (lo_[j] == up_[j]) continue;
            const double c = phase1 ? 0.0 : cost_[j];
            const double d = c - dot_column(j, pi);
            bool eligible = false;
            switch (st) {
                case VarState::AtLower: eligible = d < -tol; break;
                case VarState::AtUpper: eligible = d > tol; break;
                case VarState::Free: eligible = std::abs(d) > tol; break;
                case VarState::Basic: break;
            }
            if (!eligible) continue;
            if (bland) return {j, d};
            const double score = d * d / norm_[j];
            if (score > best_score) {
                best_score = score;
                best = j;
                best_d = d;
            }
        }
        return {best, best_d};
    }

    Step ratio_test(int entering, double dir, const std::vector<double>& alpha,
                    const std::vector<char>& infeasible, bool bland) const {
        const double ftol = opt_.feasibility_tol;
        const double ptol = opt_.pivot_tol;
        auto bounds = [&](int i) {
            const int v = basis_[i];
            if (infeasible[i] < 0) return std::pair{-kInf, lo_[v]};
            if (infeasible[i] > 0) return std::pair{up_[v], kInf};
            return std::pair{lo_[v], up_[v]};
        };

        double theta_max = kInf;
        if (!bland) {
            for (int i = 0; i < m_; ++i) {
                const double a = alpha[i];
                if (std::abs(a) <= ptol) continue;
                const double rate = -dir * a;
                const auto [lb, ub] = bounds(i);
                const double x = x_[basis_[i]];
                if (rate < 0.0 && lb > -kInf)
                    theta_max = std::min(theta_max, (x - lb + ftol) / -rate);
                else if (rate > 0.0 && ub < kInf)
                    theta_max = std::min(theta_max, (ub - x + ftol) / rate);
            }
        }

        Step step;
        double best_pivot = 0.0, best_theta = kInf;
        int best_var = -1;
        for (int i = 0; i < m_; ++i) {
            const double a = alpha[i];
            if (std::abs(a) <= ptol) continue;
            const double rate = -dir * a;
            const auto [lb, ub] = bounds(i);
            const double x = x_[basis_[i]];
            double ratio;
            bool lands_low;
            if (rate < 0.0 && lb > -kInf) {
                ratio = std::max(0.0, (x - lb) / -rate);
                lands_low = true;
            } else if (rate > 0.0 && ub < kInf) {
                ratio = std::max(0.0, (ub - x) / rate);
                lands_low = false;
            } else {
                continue;
            }
            // Infeasible variables land on the true bound they reach.
            if (infeasible[i] < 0) lands_low = true;
            if (infeasible[i] > 0) lands_low = false;

            bool take;
            if (bland) {
                const int v = basis_[i];
                take = ratio < best_theta - 1e-12 ||
                       (ratio <= best_theta + 1e-12 && (best_var < 0 || v < best_var));
            } else {
                take = ratio <= theta_max && std::abs(a) > best_pivot;
            }
            if (take) {
                best_pivot = std::abs(a);
                best_theta = ratio;
                best_var = basis_[i];
                step.row = i;
                step.to_upper_of_lower = lands_low;
            }
        }

        const double range = up_[entering] - lo_[entering];
        if (step.row < 0) {
            if (std::isfinite(range)) {
                step.flip = true;
                step.theta = range;
                return step;
            }
            step.unbounded = true;
            return step;
        }
        if (std::isfinite(range) && range <= best_theta) {
            step.flip = true;
            step.row = -1;
            step.theta = range;
            return step;
        }
        step.theta = best_theta;
        return step;
    }

    Solution& finish(Solution& sol, const std::vector<double>& pi) {
        sol.iterations = iterations_;
        sol.x.assign(x_.begin(), x_.begin() + n_);
        sol.objective = lp_.evaluate(sol.x);
        sol.row_duals.assign(m_, 0.0);
        const double sign = lp_.sense == Sense::Maximize ? -1.0 : 1.0;
        for (int i = 0; i < m_; ++i) sol.row_duals[i] = sign * pi[i];
        return sol;
    }

    const LinearProgram& lp_;
    SimplexOptions opt_;
    int n_;
    int m_;
    std::vector<int> col_start_;
    std::vector<int> row_idx_;
    std::vector<double> val_;
    std::vector<double> cost_;
    std::vector<double> lo_;
    std::vector<double> up_;
    std::vector<double> norm_;
    double drift_tol_ = 0.0;
    std::vector<VarState> state_;
    std::vector<double> x_;
    std::vector<int> basis_;
    std::vector<Eta> etas_;
    std::int64_t iterations_ = 0;
};

Solution solve_with_bounds(const LinearProgram& lp, const std::vector<double>& lo,
                           const std::vector<double>& up, const SimplexOptions& options) {
    RevisedSimplex simplex(lp, lo, up, options);
    return simplex.run();
}

}  // namespace

Solution solve_lp(const LinearProgram& lp, const SimplexOptions& options) {
    lp.validate();
    return solve_with_bounds(lp, lp.lower, lp.upper, options);
}

Solution solve_mip(const MixedIntegerProgram& mip, const BranchAndBoundOptions& options) {
    mip.validate();
    const LinearProgram& lp = mip.lp;
    const int n = lp.num_vars();
    const bool maximize = lp.sense == Sense::Maximize;
    auto better = [&](double a, double b) { return maximize ? a > b : a < b; };

    struct Node {
        std::vector<double> lo;
        std::vector<double> up;
        Solution relaxation;
        std::int64_t seq = 0;
    };
    auto worse_node = [&](const Node& a, const Node& b) {
        if (a.relaxation.objective != b.relaxation.objective)
            return better(b.relaxation.objective, a.relaxation.objective);
        return a.seq > b.seq;
    };
    std::priority_queue<Node, std::vector<Node>, decltype(worse_node)> open(worse_node);

    Node root;
    root.lo = lp.lower;
    root.up = lp.upper;
    for (int j = 0; j < n; ++j) {
        if (mip.types[j] == VarType::Continuous) continue;
        root.lo[j] = std::ceil(root.lo[j] - options.integrality_tol);
        root.up[j] = std::floor(root.up[j] + options.integrality_tol);
        if (mip.types[j] == VarType::Binary) {
            root.lo[j] = std::max(root.lo[j], 0.0);
            root.up[j] = std::min(root.up[j], 1.0);
        }
    }

    Solution result;
    std::int64_t iterations = 0, nodes = 0, seq = 0;
    bool have_incumbent = false;

    auto solve_node = [&](Node& node) {
        node.relaxation = solve_with_bounds(lp, node.lo, node.up, options.simplex);
        iterations += node.relaxation.iterations;
        ++nodes;
        node.seq = seq++;
    };

    solve_node(root);
    if (root.relaxation.status != Status::Optimal) {
        result.status = root.relaxation.status;
        result.iterations = iterations;
        result.nodes = nodes;
        return result;
    }
    open.push(std::move(root));

    while (!open.empty() && nodes < options.node_limit) {
        Node node = open.top();
        open.pop();
        const double bound = node.relaxation.objective;
        if (have_incumbent && !better(bound, result.objective + (maximize ? 1.0 : -1.0) *
                                                                    options.absolute_gap))
            break;

        int branch = -1;
        double best_frac = -1.0;
        for (int j = 0; j < n; ++j) {
            if (mip.types[j] == VarType::Continuous) continue;
            const double v = node.relaxation.x[j];
            const double f = v - std::floor(v);
            const double dist = std::min(f, 1.0 - f);
            if (dist <= options.integrality_tol) continue;
            if (dist > best_frac + 1e-12) {
                best_frac = dist;
                branch = j;
            }
        }
        if (branch < 0) {
            if (!have_incumbent || better(bound, result.objective)) {
                result.status = Status::Optimal;
                result.x = node.relaxation.x;
                for (int j = 0; j < n; ++j)
                    if (mip.types[j] != VarType::Continuous) result.x[j] = std::round(result.x[j]);
                result.objective = bound;
                have_incumbent = true;
            }
            continue;
        }

        const double v = node.relaxation.x[branch];
        Node down{node.lo, node.up, {}, 0};
        down.up[branch] = std::floor(v);
        Node up{node.lo, node.up, {}, 0};
        up.lo[branch] = std::ceil(v);
        for (Node* child : {&down, &up}) {
            if (child->lo[branch] > child->up[branch]) continue;
            solve_node(*child);
            if (child->relaxation.status == Status::Unbounded) {
                result.status = Status::Unbounded;
                result.iterations = iterations;
                result.nodes = nodes;
                return result;
            }
            if (child->relaxation.status != Status::Optimal) continue;
            if (have_incumbent &&
                !better(child->relaxation.objective,
                        result.objective + (maximize ? 1.0 : -1.0) * options.absolute_gap))
                continue;
            open.push(std::move(*child));
        }
    }

    if (!have_incumbent) result.status = Status::Infeasible;
    result.iterations = iterations;
    result.nodes = nodes;
    return result;
}

LinearProgram build_dual(const LinearProgram& lp) {
    lp.validate();
    // Primal rows in (coefficients, relation, rhs) form, bounds included.
    std::vector<Constraint> rows = lp.rows;
    for (int j = 0; j < lp.num_vars(); ++j) {
        if (std::isfinite(lp.lower[j]))
            rows.push_back({{{j, 1.0}}, Relation::GreaterEqual, lp.lower[j]});
        if (std::isfinite(lp.upper[j]))
            rows.push_back({{{j, 1.0}}, Relation::LessEqual, lp.upper[j]});
    }
    const bool maximize = lp.sense == Sense::Maximize;
    LinearProgram dual;
    dual.sense = maximize ? Sense::Minimize : Sense::Maximize;
    dual.objective_offset = lp.objective_offset;
    std::vector<std::vector<Term>> eq(lp.num_vars());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double lo = -kInf, hi = kInf;
        const Relation rel = rows[i].relation;
        // max: <= rows get y >= 0; min: >= rows get y >= 0.
        const bool nonneg = maximize ? rel == Relation::LessEqual : rel == Relation::GreaterEqual;
        if (rel != Relation::Equal) {
            if (nonneg) lo = 0.0;
            else hi = 0.0;
        }
        const int y = dual.add_variable(lo, hi, rows[i].rhs, "y" + std::to_string(i));
        for (const auto& t : rows[i].terms) eq[t.var].push_back({y, t.coeff});
    }
    for (int j = 0; j < lp.num_vars(); ++j)
        dual.add_row(std::move(eq[j]), Relation::Equal, lp.objective[j]);
    return dual;
}

DualityReport lp_duality_check(const LinearProgram& lp, double tol) {
    DualityReport rep;
    const Solution primal = solve_lp(lp);
    rep.primal_status = primal.status;
    rep.primal_value = primal.objective;
    if (primal.status != Status::Optimal) return rep;
    const Solution dual = solve_lp(build_dual(lp));
    rep.dual_status = dual.status;
    rep.dual_value = dual.objective;
    rep.checked = true;
    const double scale = std::max(1.0, std::abs(rep.primal_value));
    rep.ok = dual.status == Status::Optimal &&
             std::abs(rep.primal_value - rep.dual_value) <= tol * scale;
    return rep;
}

void write_lp(std::ostream& os, const LinearProgram& lp, const std::vector<VarType>& types) {
    auto name = [&](int j) {
        return (j < static_cast<int>(lp.names.size()) && !lp.names[j].empty())
                   ? lp.names[j]
                   : "x" + std::to_string(j);
    };
    auto term = [&](double c, int j, bool first) {
        if (c < 0) os << (first ? " -" : " - ") << -c << ' ' << name(j);
        else os << (first ? " " : " + ") << c << ' ' << name(j);
    };
    os.precision(17);
    os << (lp.sense == Sense::Maximize ? "Maximize\n" : "Minimize\n") << " obj:";
    bool first = true;
    for (int j = 0; j < lp.num_vars(); ++j) {
        if (lp.objective[j] == 0.0) continue;
        term(lp.objective[j], j, first);
        first = false;
    }
    if (lp.objective_offset != 0.0) os << (first ? " " : " + ") << lp.objective_offset << " constant";
    os << "\nSubject To\n";
    for (int i = 0; i < lp.num_rows(); ++i) {
        const auto& r = lp.rows[i];
        os << " c" << i << ":";
        first = true;
        for (const auto& t : r.terms) {
            term(t.coeff, t.var, first);
            first = false;
        }
        if (first) os << " 0 " << name(0);
        os << (r.relation == Relation::LessEqual      ? " <= "
               : r.relation == Relation::GreaterEqual ? " >= "
                                                      : " = ")
           << r.rhs << '\n';
    }
    os << "Bounds\n";
    for (int j = 0; j < lp.num_vars(); ++j) {
        const double lo = lp.lower[j], hi = lp.upper[j];
        if (lo == -kInf && hi == kInf) {
            os << ' ' << name(j) << " free\n";
        } else {
            os << ' ';
            if (lo == -kInf) os << "-inf";
            else os << lo;
            os << " <= " << name(j) << " <= ";
            if (hi == kInf) os << "+inf";
            else os << hi;
            os << '\n';
        }
    }
    std::vector<int> ints, bins;
    for (std::size_t j = 0; j < types.size(); ++j) {
        if (types[j] == VarType::Integer) ints.push_back(static_cast<int>(j));
        if (types[j] == VarType::Binary) bins.push_back(static_cast<int>(j));
    }
    if (!ints.empty()) {
        os << "General\n";
        for (int j : ints) os << ' ' << name(j) << '\n';
    }
    if (!bins.empty()) {
        os << "Binary\n";
        for (int j : bins) os << ' ' << name(j) << '\n';
    }
    os << "End\n";
}

}  // namespace drmdp::opt
