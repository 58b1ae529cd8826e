#include "drmdp/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>
#include <thread>

namespace drmdp {

void PerturbationSpec::validate() const {
    if (!(radius >= 0.0 && radius <= 2.0))
        throw std::domain_error("perturbation radius must lie in [0, 2]");
}

namespace {

std::vector<double> random_keys(std::size_t n, std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> keys(n);
    for (auto& k : keys) k = unit(rng);
    return keys;
}

std::mt19937_64 episode_rng(std::uint64_t seed, int init) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(init), 0x5eedu};
    return std::mt19937_64(seq);
}

}  // namespace

std::vector<double> perturbed_row(const StateModel& sm, int action, const PerturbationSpec& spec) {
    spec.validate();
    std::vector<double> row(sm.row(action), sm.row(action) + sm.width());
    if (spec.direction == PerturbationDirection::TowardInfectives)
        worst_case_shift_inplace(row, sm.support_pI, spec.radius);
    else
        worst_case_shift_inplace(row, random_keys(row.size(), spec.seed, sm.state, action), spec.radius);
    return row;
}

std::vector<SparseDistribution> build_true_kernel(const std::vector<SparseDistribution>& kernels,
                                                  const Grid& grid, const PerturbationSpec& spec) {
    spec.validate();
    std::vector<SparseDistribution> out;
    out.reserve(kernels.size());
    for (std::size_t i = 0; i < kernels.size(); ++i) {
        if (spec.direction == PerturbationDirection::TowardInfectives) {
            out.push_back(worst_case_shift(kernels[i], grid, spec.radius));
            continue;
        }
        std::vector<double> p;
        for (const auto& e : kernels[i].entries) p.push_back(e.probability);
        worst_case_shift_inplace(p, random_keys(p.size(), spec.seed, i, 0), spec.radius);
        SparseDistribution row = kernels[i];
        for (std::size_t j = 0; j < p.size(); ++j) row.entries[j].probability = p[j];
        out.push_back(std::move(row));
    }
    return out;
}

const char* kernel_name(KernelKind k) { return k == KernelKind::Nominal ? "nominal" : "perturbed"; }

int greedy_action(const ModelBundle& bundle, const ValueTable& table, Backend backend,
                  const PlannerConfig& cfg, int state, int stage) {
    const StateModel& sm = bundle.at(state);
    const BellmanConfig bc = bellman_config(bundle, cfg);
    const Heuristic h = planner_heuristic(bundle, cfg.heuristic, backend);
    return backup(backend, sm, successor_values(bundle, table, sm, stage + 1, h), bc).action;
}

EpisodeRecord run_episode(const ModelBundle& bundle, const ValueTable& table, Backend backend,
                          const PlannerConfig& cfg, KernelKind kernel,
                          const PerturbationSpec& perturbation, int init, std::uint64_t seed) {
    const Grid& grid = bundle.grid();
    const EpidemicParams& p = bundle.params();
    std::mt19937_64 rng = episode_rng(seed, init);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    EpisodeRecord rec;
    int xi = init;
    double discount = 1.0;
    for (int t = 1; t <= p.T - 1; ++t) {
        StageRecord sr;
        sr.stage = t;
        sr.state = xi;
        const auto c = grid.coords(xi);
        sr.pct_infective = 100.0 * c[2];
        sr.pct_recovered = 100.0 * (1.0 - c[0] - c[1] - c[2]);
        if (!grid.in_S(xi)) {
            // Absorbing corner: no action, no cost.
            rec.stages.push_back(sr);
            discount *= p.lambda;
            continue;
        }
        const int a = greedy_action(bundle, table, backend, cfg, xi, t);
        sr.action = bundle.actions().at(a);
        sr.reward = discrete_reward(grid, p, xi, sr.action);
        rec.total_reward += discount * sr.reward;
        rec.stages.push_back(sr);
        discount *= p.lambda;

        const StateModel& sm = bundle.at(xi);
        std::vector<double> row = kernel == KernelKind::Nominal
                                      ? std::vector<double>(sm.row(a), sm.row(a) + sm.width())
                                      : perturbed_row(sm, a, perturbation);
        double total = 0.0;
        for (double v : row) total += v;
        const double target = unit(rng) * total;
        double acc = 0.0;
        int next = sm.support.back();
        for (std::size_t j = 0; j < row.size(); ++j) {
            acc += row[j];
            if (row[j] > 0.0 && target < acc) {
                next = sm.support[j];
                break;
            }
        }
        xi = next;
    }
    rec.final_state = xi;
    rec.terminal_reward = terminal_reward(grid, xi);
    rec.total_reward += discount * rec.terminal_reward;
    return rec;
}

int initial_corner(const Grid& grid, double p_S1, double p_E1) {
    const double p_I1 = 1.0 - p_S1 - p_E1;
    if (p_S1 < 0.0 || p_E1 < 0.0 || p_I1 < -1e-12)
        throw std::domain_error("initial proportions must be nonnegative and sum to at most 1");
    return grid.nearest(p_S1, p_E1, std::max(0.0, p_I1));
}

const CellSummary* ComparisonResult::find(const std::string& backend, const std::string& kernel,
                                          double p_S1) const {
    for (const auto& c : cells)
        if (c.backend == backend && c.kernel == kernel && std::abs(c.p_S1 - p_S1) < 1e-12) return &c;
    return nullptr;
}

namespace {

template <class F>
void parallel_for(std::size_t n, int threads, F&& f) {
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) f(i);
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < std::max(1, threads); ++t) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
}

CellSummary summarize(const std::string& backend, const std::string& kernel, double p_S1,
                      const std::vector<EpisodeRecord>& eps, int stages) {
    CellSummary c;
    c.backend = backend;
    c.kernel = kernel;
    c.p_S1 = p_S1;
    const double n = static_cast<double>(eps.size());
    for (const auto& e : eps) c.mean_total += e.total_reward / n;
    double ss = 0.0;
    for (const auto& e : eps) ss += (e.total_reward - c.mean_total) * (e.total_reward - c.mean_total);
    c.sd_total = eps.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    c.mean_y_V.assign(stages, 0.0);
    c.mean_y_R.assign(stages, 0.0);
    c.mean_pct_infective.assign(stages, 0.0);
    c.mean_pct_recovered.assign(stages, 0.0);
    for (const auto& e : eps)
        for (int s = 0; s < stages; ++s) {
            c.mean_y_V[s] += e.stages[s].action.y_V / n;
            c.mean_y_R[s] += e.stages[s].action.y_R / n;
            c.mean_pct_infective[s] += e.stages[s].pct_infective / n;
            c.mean_pct_recovered[s] += e.stages[s].pct_recovered / n;
        }
    return c;
}

}  // namespace

ComparisonResult compare_models(const ModelBundle& bundle, const Scenario& scenario) {
    scenario.perturbation.validate();
    ComparisonResult out;
    const int stages = bundle.params().T - 1;
    for (Backend b : scenario.backends)
        for (double ps : scenario.p_S1) {
            const int init = initial_corner(bundle.grid(), ps, scenario.p_E1);
            PlannerConfig pc = scenario.planner;
            pc.backend = b;
            const RtdpResult plan = rtdp(init, pc, bundle);
            for (KernelKind k : scenario.kernels) {
                std::vector<EpisodeRecord> eps(scenario.seeds.size());
                parallel_for(eps.size(), scenario.threads, [&](std::size_t i) {
                    eps[i] = run_episode(bundle, plan.values, b, pc, k, scenario.perturbation, init,
                                         scenario.seeds[i]);
                });
                for (std::size_t i = 0; i < eps.size(); ++i)
                    for (const auto& st : eps[i].stages)
                        out.rows.push_back({backend_name(b), kernel_name(k), ps, scenario.seeds[i], st,
                                            eps[i].total_reward});
                out.cells.push_back(summarize(backend_name(b), kernel_name(k), ps, eps, stages));
            }
        }
    return out;
}

EpidemicParams with_parameter(const EpidemicParams& base, const std::string& name, double value) {
    EpidemicParams p = base;
    if (name == "Q") p.Q = value;
    else if (name == "k_R") p.k_R = value;
    else if (name == "mu_beta") p.beta = value / p.mu;
    else if (name == "W") p.W = value;
    else if (name == "alpha0") p.alpha0 = value;
    else throw std::domain_error("unknown sensitivity parameter: " + name);
    p.validate();
    return p;
}

SensitivityResult sensitivity_sweep(const std::string& param, const std::vector<double>& values,
                                    const EpidemicParams& base, const GridSpec& grid,
                                    const AmbiguityConfig& ambiguity, Backend backend,
                                    const Scenario& scenario, double p_S1) {
    SensitivityResult out;
    for (double v : values) {
        const EpidemicParams p = with_parameter(base, param, v);
        const ModelBundle bundle(p, grid, ambiguity);
        const int init = initial_corner(bundle.grid(), p_S1, scenario.p_E1);
        PlannerConfig pc = scenario.planner;
        pc.backend = backend;
        const RtdpResult plan = rtdp(init, pc, bundle);
        std::vector<EpisodeRecord> eps(scenario.seeds.size());
        parallel_for(eps.size(), scenario.threads, [&](std::size_t i) {
            eps[i] = run_episode(bundle, plan.values, backend, pc, KernelKind::Nominal,
                                 scenario.perturbation, init, scenario.seeds[i]);
        });
        double aggregate = 0.0;
        for (std::size_t i = 0; i < eps.size(); ++i)
            for (const auto& st : eps[i].stages) {
                out.rows.push_back({param, v, scenario.seeds[i], st.stage, st.pct_infective});
                aggregate += st.pct_infective / static_cast<double>(eps.size());
            }
        out.aggregate_infectives.push_back(aggregate);
    }
    return out;
}

void write_comparison_csv(std::ostream& os, const ComparisonResult& result) {
    os.precision(12);
    os << "backend,kernel,p_S1,seed,stage,y_V,y_R,reward,pct_infective,pct_recovered,total_reward\n";
    for (const auto& r : result.rows)
        os << r.backend << ',' << r.kernel << ',' << r.p_S1 << ',' << r.seed << ',' << r.stage.stage
           << ',' << r.stage.action.y_V << ',' << r.stage.action.y_R << ',' << r.stage.reward << ','
           << r.stage.pct_infective << ',' << r.stage.pct_recovered << ',' << r.total_reward << '\n';
}

void write_summary_csv(std::ostream& os, const ComparisonResult& result) {
    os.precision(12);
    os << "backend,kernel,p_S1,stage,mean_y_V,mean_y_R,mean_pct_infective,mean_pct_recovered,"
          "mean_total_reward,sd_total_reward\n";
    for (const auto& c : result.cells)
        for (std::size_t s = 0; s < c.mean_y_V.size(); ++s)
            os << c.backend << ',' << c.kernel << ',' << c.p_S1 << ',' << s + 1 << ',' << c.mean_y_V[s]
               << ',' << c.mean_y_R[s] << ',' << c.mean_pct_infective[s] << ','
               << c.mean_pct_recovered[s] << ',' << c.mean_total << ',' << c.sd_total << '\n';
}

void write_sensitivity_csv(std::ostream& os, const SensitivityResult& result) {
    os.precision(12);
    os << "param,value,seed,stage,pct_infective\n";
    for (const auto& r : result.rows)
        os << r.param << ',' << r.value << ',' << r.seed << ',' << r.stage << ',' << r.pct_infective
           << '\n';
}

}  // namespace drmdp
