#include "drmdp/bellman.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace drmdp {

using opt::kInf;
using opt::Relation;
using opt::Term;
using opt::VarType;

const char* backend_name(Backend b) {
    switch (b) {
        case Backend::Nominal: return "nominal";
        case Backend::Robust: return "robust";
        case Backend::DrmdpEnumerate: return "drmdp-enumerate";
        case Backend::DrmdpMcCormick: return "drmdp-mccormick";
        case Backend::DrmdpUnary: return "drmdp-unary";
        case Backend::DrmdpGreedy: return "drmdp-greedy";
    }
    return "unknown";
}

Backend parse_backend(const std::string& name) {
    for (Backend b : {Backend::Nominal, Backend::Robust, Backend::DrmdpEnumerate,
                      Backend::DrmdpMcCormick, Backend::DrmdpUnary, Backend::DrmdpGreedy})
        if (name == backend_name(b)) return b;
    throw std::domain_error("unknown backend: " + name);
}

bool is_drmdp(Backend b) { return b != Backend::Nominal && b != Backend::Robust; }

namespace {

double expectation(const double* row, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) s += row[j] * v[j];
    return s;
}

void check_width(const StateModel& sm, const std::vector<double>& v_next) {
    if (v_next.size() != sm.width())
        throw std::invalid_argument("backup: V_next is not aligned with the successor support");
}

std::vector<double> scaled(const std::vector<double>& v, double lambda) {
    std::vector<double> out(v.size());
    for (std::size_t j = 0; j < v.size(); ++j) out[j] = lambda * v[j];
    return out;
}

}  // namespace

BackupResult nominal_backup(const StateModel& sm, const std::vector<double>& v_next, double lambda) {
    check_width(sm, v_next);
    BackupResult best{-kInf, 0};
    for (int a = 0; a < sm.actions.size(); ++a) {
        const double q = sm.rewards[a] + lambda * expectation(sm.row(a), v_next);
        if (q > best.value) best = {q, a};
    }
    return best;
}

void worst_case_shift_inplace(std::vector<double>& probs, const std::vector<double>& key,
                              double budget) {
    if (budget < 0.0) throw std::domain_error("worst_case_shift: budget must be >= 0");
    std::vector<int> order;
    for (std::size_t j = 0; j < probs.size(); ++j)
        if (probs[j] > 0.0) order.push_back(static_cast<int>(j));
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return key[a] < key[b]; });
    if (order.size() < 2) return;
    double remaining = budget / 2.0;
    std::size_t d = 0, r = order.size() - 1;
    while (remaining > 0.0 && d < r) {
        const int from = order[d], to = order[r];
        if (key[from] >= key[to]) break;
        if (probs[from] <= 0.0) {
            ++d;
            continue;
        }
        const double cap = 1.0 - probs[to];
        if (cap <= 0.0) {
            --r;
            continue;
        }
        const double move = std::min({remaining, probs[from], cap});
        probs[from] -= move;
        probs[to] += move;
        remaining -= move;
    }
}

SparseDistribution worst_case_shift(const SparseDistribution& row, const Grid& grid, double budget) {
    std::vector<double> p, key;
    for (const auto& e : row.entries) {
        p.push_back(e.probability);
        key.push_back(grid.coords(e.index)[2]);
    }
    worst_case_shift_inplace(p, key, budget);
    SparseDistribution out = row;
    for (std::size_t j = 0; j < p.size(); ++j) out.entries[j].probability = p[j];
    return out;
}

BackupResult robust_backup(const StateModel& sm, const std::vector<double>& v_next, double lambda,
                           double budget) {
    check_width(sm, v_next);
    BackupResult best{-kInf, 0};
    std::vector<double> row(sm.width());
    for (int a = 0; a < sm.actions.size(); ++a) {
        std::copy(sm.row(a), sm.row(a) + sm.width(), row.begin());
        worst_case_shift_inplace(row, sm.support_pI, budget);
        const double q = sm.rewards[a] + lambda * expectation(row.data(), v_next);
        if (q > best.value) best = {q, a};
    }
    return best;
}

InnerResult inner_dual_lp(double reward, const std::vector<double>& eta_L,
                          const std::vector<double>& eta_U, const std::vector<double>& lv, double k,
                          std::ostream* debug) {
    const std::size_t S = lv.size();
    if (eta_L.size() != S || eta_U.size() != S)
        throw std::invalid_argument("inner_dual_lp: dimension mismatch");
    opt::LinearProgram lp;
    lp.sense = opt::Sense::Maximize;
    lp.objective_offset = reward;
    const int q = lp.add_variable(-kInf, kInf, 1.0, "q");
    std::vector<int> w(S), u(S);
    for (std::size_t j = 0; j < S; ++j) {
        w[j] = lp.add_variable(0.0, kInf, -eta_U[j], "w" + std::to_string(j));
        u[j] = lp.add_variable(0.0, kInf, eta_L[j], "u" + std::to_string(j));
    }
    for (std::size_t j = 0; j < S; ++j)
        lp.add_row({{q, 1.0}, {w[j], -1.0}, {u[j], 1.0}}, Relation::LessEqual, lv[j]);
    for (std::size_t j = 0; j < S; ++j)
        lp.add_row({{w[j], 1.0}, {u[j], 1.0}}, Relation::LessEqual, k);

    const opt::Solution sol = opt::solve_lp(lp);
    if (sol.status != opt::Status::Optimal)
        throw std::runtime_error(std::string("inner dual LP not optimal: ") + opt::to_string(sol.status));

    InnerResult res;
    res.value = sol.objective;
    res.dual.q = sol.x[q];
    res.dual.w.resize(S);
    res.dual.u.resize(S);
    res.dual.m.resize(S);
    res.dual.x.resize(S);
    for (std::size_t j = 0; j < S; ++j) {
        res.dual.w[j] = sol.x[w[j]];
        res.dual.u[j] = sol.x[u[j]];
        res.dual.m[j] = sol.row_duals[j];
        res.dual.x[j] = sol.row_duals[S + j];
    }
    if (debug) {
        opt::write_lp(*debug, lp);
        *debug << "\\ value " << res.value << " q " << res.dual.q << '\n';
        for (std::size_t j = 0; j < S; ++j)
            *debug << "\\ j " << j << " w " << res.dual.w[j] << " u " << res.dual.u[j] << " m "
                   << res.dual.m[j] << " x " << res.dual.x[j] << '\n';
    }
    return res;
}

double inner_primal_value(double reward, const std::vector<double>& eta_L,
                          const std::vector<double>& eta_U, const std::vector<double>& lv, double k,
                          std::vector<double>* m) {
    const std::size_t S = lv.size();
    if (eta_L.size() != S || eta_U.size() != S || S == 0)
        throw std::invalid_argument("inner_primal_value: dimension mismatch");
    struct Segment {
        double slope;
        int slot;
        int order;
        double length;
    };
    std::vector<Segment> segs;
    segs.reserve(3 * S);
    double value = reward;
    for (std::size_t j = 0; j < S; ++j) {
        const double lo = eta_L[j], hi = eta_U[j];
        value += k * std::max({0.0, -hi, lo});
        // Penalty slope pieces of max(0, m - hi, lo - m) on the real line.
        double cuts[2];
        double slopes[3];
        int pieces;
        if (lo <= hi) {
            cuts[0] = lo;
            cuts[1] = hi;
            slopes[0] = -1.0;
            slopes[1] = 0.0;
            slopes[2] = 1.0;
            pieces = 3;
        } else {
            cuts[0] = 0.5 * (lo + hi);
            slopes[0] = -1.0;
            slopes[1] = 1.0;
            pieces = 2;
        }
        double start = -kInf;
        for (int p = 0; p < pieces; ++p) {
            const double end = (p + 1 < pieces) ? cuts[p] : kInf;
            const double s = std::max(start, 0.0);
            if (end > s)
                segs.push_back({lv[j] + k * slopes[p], static_cast<int>(j), p, end - s});
            start = end;
        }
    }
    std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) {
        return std::tie(a.slope, a.slot, a.order) < std::tie(b.slope, b.slot, b.order);
    });
    if (m) m->assign(S, 0.0);
    double left = 1.0;
    for (const auto& sg : segs) {
        if (left <= 0.0) break;
        const double take = std::min(left, sg.length);
        value += sg.slope * take;
        if (m) (*m)[sg.slot] += take;
        left -= take;
    }
    return value;
}

InnerResult inner_dual_lp(const StateModel& sm, int action, const std::vector<double>& v_next,
                          double lambda, const AmbiguityConfig& cfg, std::ostream* debug) {
    check_width(sm, v_next);
    const Action a = sm.actions.at(action);
    const EtaBounds eta = eta_bounds(sm.rules, a);
    return inner_dual_lp(reward_rule(sm.rules, a), eta.eta_L, eta.eta_U, scaled(v_next, lambda),
                         cfg.k, debug);
}

double inner_primal_oracle(const StateModel& sm, int action, const std::vector<double>& v_next,
                           double lambda, const AmbiguityConfig& cfg) {
    check_width(sm, v_next);
    const Action a = sm.actions.at(action);
    const EtaBounds eta = eta_bounds(sm.rules, a);
    return inner_primal_value(reward_rule(sm.rules, a), eta.eta_L, eta.eta_U,
                              scaled(v_next, lambda), cfg.k);
}

BackupResult drmdp_backup_enumerate(const StateModel& sm, const std::vector<double>& v_next,
                                    double lambda, const AmbiguityConfig& cfg) {
    BackupResult best{-kInf, 0};
    for (int a = 0; a < sm.actions.size(); ++a) {
        const double q = inner_dual_lp(sm, a, v_next, lambda, cfg).value;
        if (q > best.value) best = {q, a};
    }
    return best;
}

BackupResult drmdp_backup_greedy(const StateModel& sm, const std::vector<double>& v_next,
                                 double lambda, const AmbiguityConfig& cfg) {
    check_width(sm, v_next);
    const std::vector<double> lv = scaled(v_next, lambda);
    BackupResult best{-kInf, 0};
    for (int a = 0; a < sm.actions.size(); ++a) {
        const Action act = sm.actions.at(a);
        const EtaBounds eta = eta_bounds(sm.rules, act);
        const double q = inner_primal_value(reward_rule(sm.rules, act), eta.eta_L, eta.eta_U, lv, cfg.k);
        if (q > best.value) best = {q, a};
    }
    return best;
}

namespace {

// Variables shared by both MIP encodings.
struct CoreVars {
    int q = 0;
    std::vector<int> w;
    std::vector<int> u;
};

CoreVars add_core(opt::MixedIntegerProgram& mip, const StateModel& sm,
                  const std::vector<double>& v_next, double lambda, double k) {
    const std::size_t S = sm.width();
    auto& lp = mip.lp;
    lp.sense = opt::Sense::Maximize;
    lp.objective_offset = sm.rules.eps[0];
    CoreVars cv;
    cv.q = mip.add_variable(-kInf, kInf, 1.0, VarType::Continuous, "q");
    cv.w.resize(S);
    cv.u.resize(S);
    for (std::size_t j = 0; j < S; ++j) {
        cv.w[j] = mip.add_variable(0.0, k, -sm.rules.rho[j][0], VarType::Continuous,
                                   "w" + std::to_string(j));
        cv.u[j] = mip.add_variable(0.0, k, sm.rules.sigma[j][0], VarType::Continuous,
                                   "u" + std::to_string(j));
    }
    for (std::size_t j = 0; j < S; ++j)
        lp.add_row({{cv.q, 1.0}, {cv.w[j], -1.0}, {cv.u[j], 1.0}}, Relation::LessEqual,
                   lambda * v_next[j]);
    for (std::size_t j = 0; j < S; ++j)
        lp.add_row({{cv.w[j], 1.0}, {cv.u[j], 1.0}}, Relation::LessEqual, k);
    return cv;
}

BackupResult finish_mip(const opt::MixedIntegerProgram& mip, const opt::Solution& sol,
                        const StateModel& sm, int yV, int yR, std::ostream* debug,
                        const char* what) {
    if (debug) {
        opt::write_lp(*debug, mip.lp, mip.types);
        *debug << "\\ " << what << " status " << opt::to_string(sol.status) << " value "
               << sol.objective << " nodes " << sol.nodes << '\n';
    }
    if (sol.status != opt::Status::Optimal)
        throw std::runtime_error(std::string(what) + " MIP not optimal: " + opt::to_string(sol.status));
    return {sol.objective, sm.actions.index(Action{yV, yR})};
}

}  // namespace

opt::MixedIntegerProgram build_mccormick_mip(const StateModel& sm, const std::vector<double>& v_next,
                                             double lambda, const AmbiguityConfig& cfg,
                                             bool literal_action_bounds) {
    check_width(sm, v_next);
    opt::MixedIntegerProgram mip;
    const double k = cfg.k;
    const CoreVars cv = add_core(mip, sm, v_next, lambda, k);
    auto& lp = mip.lp;
    const std::size_t S = sm.width();
    const double a_hi[2] = {static_cast<double>(sm.actions.L), static_cast<double>(sm.actions.M)};
    const double a_lo = literal_action_bounds ? 1.0 : 0.0;
    int a[2];
    for (int i = 0; i < 2; ++i)
        a[i] = mip.add_variable(0.0, a_hi[i], sm.rules.eps[i + 1], VarType::Integer,
                                i == 0 ? "a1" : "a2");

    // m = a_i * y with a_i in [a_lo, a_hi], y in [0, k].
    auto envelope = [&](int m, int ai, int y, double hi) {
        if (a_lo != 0.0) lp.add_row({{m, 1.0}, {y, -a_lo}}, Relation::GreaterEqual, 0.0);
        lp.add_row({{m, 1.0}, {y, -hi}, {ai, -k}}, Relation::GreaterEqual, -hi * k);
        lp.add_row({{m, 1.0}, {y, -hi}}, Relation::LessEqual, 0.0);
        lp.add_row({{m, 1.0}, {ai, -k}, {y, -a_lo}}, Relation::LessEqual, -a_lo * k);
    };
    for (std::size_t j = 0; j < S; ++j)
        for (int i = 0; i < 2; ++i) {
            const std::string tag = std::to_string(i + 1) + "_" + std::to_string(j);
            const double lo = a_lo != 0.0 ? -kInf : 0.0;
            const int m0 = mip.add_variable(lo, kInf, -sm.rules.rho[j][i + 1], VarType::Continuous,
                                            "m0_" + tag);
            const int m1 = mip.add_variable(lo, kInf, sm.rules.sigma[j][i + 1], VarType::Continuous,
                                            "m1_" + tag);
            envelope(m0, a[i], cv.w[j], a_hi[i]);
            envelope(m1, a[i], cv.u[j], a_hi[i]);
        }
    return mip;
}

opt::MixedIntegerProgram build_unary_mip(const StateModel& sm, const std::vector<double>& v_next,
                                         double lambda, const AmbiguityConfig& cfg) {
    check_width(sm, v_next);
    opt::MixedIntegerProgram mip;
    const double k = cfg.k;
    const CoreVars cv = add_core(mip, sm, v_next, lambda, k);
    auto& lp = mip.lp;
    const std::size_t S = sm.width();
    const int levels[2] = {sm.actions.L + 1, sm.actions.M + 1};

    for (int i = 0; i < 2; ++i) {
        std::vector<int> psi0(levels[i]), psi1(levels[i]);
        std::vector<Term> one0, one1, link;
        for (int l = 0; l < levels[i]; ++l) {
            const std::string tag = std::to_string(i + 1) + "_" + std::to_string(l);
            // The reward rule rides on the w-side indicators.
            psi0[l] = mip.add_variable(0, 1, sm.rules.eps[i + 1] * l, VarType::Binary, "psi0_" + tag);
            psi1[l] = mip.add_variable(0, 1, 0.0, VarType::Binary, "psi1_" + tag);
            one0.push_back({psi0[l], 1.0});
            one1.push_back({psi1[l], 1.0});
            if (l > 0) {
                link.push_back({psi0[l], static_cast<double>(l)});
                link.push_back({psi1[l], -static_cast<double>(l)});
            }
        }
        lp.add_row(one0, Relation::Equal, 1.0);
        lp.add_row(one1, Relation::Equal, 1.0);
        if (!link.empty()) lp.add_row(link, Relation::Equal, 0.0);

        // mhat = psi * y is pinned from the side the objective pushes against.
        auto expand = [&](int psi, int y, double coeff, const std::string& name) {
            if (coeff == 0.0) return;
            const int mh = mip.add_variable(0.0, kInf, coeff, VarType::Continuous, name);
            if (coeff < 0.0) {
                lp.add_row({{mh, 1.0}, {y, -1.0}, {psi, -k}}, Relation::GreaterEqual, -k);
            } else {
                lp.add_row({{mh, 1.0}, {y, -1.0}}, Relation::LessEqual, 0.0);
                lp.add_row({{mh, 1.0}, {psi, -k}}, Relation::LessEqual, 0.0);
            }
        };
        for (std::size_t j = 0; j < S; ++j)
            for (int l = 1; l < levels[i]; ++l) {
                const std::string tag = std::to_string(i + 1) + "_" + std::to_string(l) + "_" +
                                        std::to_string(j);
                expand(psi0[l], cv.w[j], -sm.rules.rho[j][i + 1] * l, "mh0_" + tag);
                expand(psi1[l], cv.u[j], sm.rules.sigma[j][i + 1] * l, "mh1_" + tag);
            }
    }
    return mip;
}

BackupResult drmdp_backup_mccormick(const StateModel& sm, const std::vector<double>& v_next,
                                    double lambda, const AmbiguityConfig& cfg,
                                    const MipOptions& opts, std::ostream* debug) {
    const auto mip = build_mccormick_mip(sm, v_next, lambda, cfg, opts.literal_action_bounds);
    const auto sol = opt::solve_mip(mip, opts.bnb);
    const int base = 1 + 2 * static_cast<int>(sm.width());
    int yV = 0, yR = 0;
    if (sol.status == opt::Status::Optimal) {
        yV = static_cast<int>(std::lround(sol.x[base]));
        yR = static_cast<int>(std::lround(sol.x[base + 1]));
    }
    return finish_mip(mip, sol, sm, yV, yR, debug, "mccormick");
}

BackupResult drmdp_backup_unary(const StateModel& sm, const std::vector<double>& v_next,
                                double lambda, const AmbiguityConfig& cfg, const MipOptions& opts,
                                std::ostream* debug) {
    const auto mip = build_unary_mip(sm, v_next, lambda, cfg);
    const auto sol = opt::solve_mip(mip, opts.bnb);
    int level[2] = {0, 0};
    if (sol.status == opt::Status::Optimal) {
        for (int i = 0; i < 2; ++i) {
            const std::string prefix = "psi0_" + std::to_string(i + 1) + "_";
            for (int v = 0; v < mip.lp.num_vars(); ++v)
                if (mip.lp.names[v].rfind(prefix, 0) == 0 && sol.x[v] > 0.5)
                    level[i] = std::stoi(mip.lp.names[v].substr(prefix.size()));
        }
    }
    return finish_mip(mip, sol, sm, level[0], level[1], debug, "unary");
}

BackupResult backup(Backend backend, const StateModel& sm, const std::vector<double>& v_next,
                    const BellmanConfig& cfg) {
    switch (backend) {
        case Backend::Nominal: return nominal_backup(sm, v_next, cfg.lambda);
        case Backend::Robust: return robust_backup(sm, v_next, cfg.lambda, cfg.robust_budget);
        case Backend::DrmdpEnumerate:
            return drmdp_backup_enumerate(sm, v_next, cfg.lambda, cfg.ambiguity);
        case Backend::DrmdpMcCormick:
            return drmdp_backup_mccormick(sm, v_next, cfg.lambda, cfg.ambiguity, cfg.mip, cfg.debug);
        case Backend::DrmdpUnary:
            return drmdp_backup_unary(sm, v_next, cfg.lambda, cfg.ambiguity, cfg.mip, cfg.debug);
        case Backend::DrmdpGreedy:
            return drmdp_backup_greedy(sm, v_next, cfg.lambda, cfg.ambiguity);
    }
    throw std::logic_error("backup: unhandled backend");
}

double action_value(Backend backend, const StateModel& sm, int action,
                    const std::vector<double>& v_next, const BellmanConfig& cfg) {
    check_width(sm, v_next);
    switch (backend) {
        case Backend::Nominal:
            return sm.rewards[action] + cfg.lambda * expectation(sm.row(action), v_next);
        case Backend::Robust: {
            std::vector<double> row(sm.row(action), sm.row(action) + sm.width());
            worst_case_shift_inplace(row, sm.support_pI, cfg.robust_budget);
            return sm.rewards[action] + cfg.lambda * expectation(row.data(), v_next);
        }
        default: return inner_primal_oracle(sm, action, v_next, cfg.lambda, cfg.ambiguity);
    }
}

FullSpaceReport full_space_check(const ModelBundle& bundle, int state, int action,
                                 const std::vector<double>& v_grid, double lambda, double tol) {
    const Grid& grid = bundle.grid();
    if (static_cast<int>(v_grid.size()) != grid.size())
        throw std::invalid_argument("full_space_check: V must cover every corner");
    const StateModel& sm = bundle.at(state);
    const Action a = sm.actions.at(action);
    const EtaBounds eta = eta_bounds(sm.rules, a);
    const double r = reward_rule(sm.rules, a);
    const double k = bundle.ambiguity().k;

    std::vector<double> v_sup;
    for (int c : sm.support) v_sup.push_back(lambda * v_grid[c]);
    FullSpaceReport rep;
    rep.restricted = inner_dual_lp(r, eta.eta_L, eta.eta_U, v_sup, k).value;

    std::vector<double> lo(grid.size(), 0.0), hi(grid.size(), 0.0), lv(grid.size());
    for (int c = 0; c < grid.size(); ++c) lv[c] = lambda * v_grid[c];
    for (std::size_t j = 0; j < sm.width(); ++j) {
        lo[sm.support[j]] = eta.eta_L[j];
        hi[sm.support[j]] = eta.eta_U[j];
    }
    rep.full = inner_dual_lp(r, lo, hi, lv, k).value;
    rep.agree = std::abs(rep.full - rep.restricted) <= tol * std::max(1.0, std::abs(rep.full));
    return rep;
}

}  // namespace drmdp
