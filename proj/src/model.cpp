#include "drmdp/model.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace drmdp {

int StateModel::position(int corner) const {
    auto it = std::lower_bound(support.begin(), support.end(), corner);
    return (it != support.end() && *it == corner) ? static_cast<int>(it - support.begin()) : -1;
}

StateModel assemble_state_model(int state, const ActionSpace& actions,
                                const std::vector<SparseDistribution>& rows,
                                const std::vector<double>& rewards,
                                const std::vector<double>& corner_pI, const AmbiguityConfig& cfg) {
    if (static_cast<int>(rows.size()) != actions.size() ||
        static_cast<int>(rewards.size()) != actions.size())
        throw std::invalid_argument("assemble_state_model: one row and reward per action required");
    StateModel sm;
    sm.state = state;
    sm.actions = actions;
    sm.rewards = rewards;
    std::vector<Action> acts;
    for (int a = 0; a < actions.size(); ++a) acts.push_back(actions.at(a));
    sm.rules = fit_rules(acts, rows, rewards, cfg);
    sm.support = sm.rules.support;
    const std::size_t S = sm.support.size();
    sm.kernel.assign(static_cast<std::size_t>(actions.size()) * S, 0.0);
    for (int a = 0; a < actions.size(); ++a)
        for (const auto& e : rows[a].entries)
            sm.kernel[a * S + static_cast<std::size_t>(sm.position(e.index))] = e.probability;
    sm.support_pI.reserve(S);
    for (int c : sm.support) sm.support_pI.push_back(corner_pI.at(c));
    return sm;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

ModelBundle::ModelBundle(const EpidemicParams& params, const GridSpec& spec,
                         const AmbiguityConfig& cfg)
    : params_(params), grid_(spec), cfg_(cfg) {
    params_.validate();
    cfg_.validate();
    const int n = grid_.size();
    models_ = std::make_unique<std::unique_ptr<StateModel>[]>(n);
    once_ = std::make_unique<std::once_flag[]>(n);
    ready_ = std::make_unique<std::atomic<bool>[]>(n);
    best_reward_.assign(n, 0.0);
    corner_pI_.resize(n);
    for (int s = 0; s < n; ++s) {
        ready_[s] = false;
        corner_pI_[s] = grid_.coords(s)[2];
    }
    for (int s : grid_.feasible()) {
        double best = discrete_reward(grid_, params_, s, Action{0, 0});
        for (int a = 1; a < params_.num_actions(); ++a)
            best = std::max(best, discrete_reward(grid_, params_, s, action_from_index(a, params_.M)));
        best_reward_[s] = best;
    }
    std::vector<Action> acts;
    for (int a = 0; a < params_.num_actions(); ++a) acts.push_back(action_from_index(a, params_.M));
    penalty_allowance_ = cfg_.k * residual_l1_bound(acts);
}

StateModel ModelBundle::build(int state) const {
    const ActionSpace space = actions();
    std::vector<SparseDistribution> rows;
    std::vector<double> rewards;
    rows.reserve(space.size());
    for (int a = 0; a < space.size(); ++a) {
        rows.push_back(discretize_kernel(grid_, params_, state, space.at(a)));
        rewards.push_back(discrete_reward(grid_, params_, state, space.at(a)));
    }
    StateModel sm = assemble_state_model(state, space, rows, rewards, corner_pI_, cfg_);
    sm.in_S = grid_.in_S(state);
    return sm;
}

void ModelBundle::install(int state, StateModel model) const {
    std::call_once(once_[state], [&] {
        models_[state] = std::make_unique<StateModel>(std::move(model));
        ready_[state] = true;
        ++compiled_count_;
    });
}

const StateModel& ModelBundle::at(int state) const {
    if (state < 0 || state >= grid_.size()) throw std::out_of_range("model: corner index out of range");
    if (!ready_[state]) {
        std::call_once(once_[state], [&] {
            models_[state] = std::make_unique<StateModel>(build(state));
            ready_[state] = true;
            ++compiled_count_;
        });
    }
    return *models_[state];
}

bool ModelBundle::compiled(int state) const { return ready_[state]; }

void ModelBundle::compile(const std::vector<int>& states, int threads) const {
    threads = std::max(1, threads);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < states.size(); i = next++) at(states[i]);
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();
}

std::string ModelBundle::hash() const {
    std::ostringstream os;
    os.precision(17);
    os << "N=" << params_.N << ";mu=" << params_.mu << ";beta=" << params_.beta
       << ";alpha0=" << params_.alpha0 << ";l_C=" << params_.l_C << ";l_D=" << params_.l_D
       << ";Q=" << params_.Q << ";k_R=" << params_.k_R << ";W=" << params_.W
       << ";L=" << params_.L << ";M=" << params_.M << ";Y=" << grid_.Y()
       << ";delta=" << cfg_.delta << ";k=" << cfg_.k;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(os.str())));
    return buf;
}

void ModelBundle::save_cache(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    const std::string kpath = dir + "/kernels.csv";
    const std::string rpath = dir + "/rules.csv";
    std::ofstream k(kpath), r(rpath);
    if (!k) throw std::runtime_error("cannot write " + kpath);
    if (!r) throw std::runtime_error("cannot write " + rpath);
    k.precision(17);
    r.precision(17);
    k << "state,action,successor,probability\n";
    r << "state,successor,rho0,rho1,rho2,sigma0,sigma1,sigma2,eps0,eps1,eps2\n";
    for (int s = 0; s < grid_.size(); ++s) {
        if (!ready_[s]) continue;
        const StateModel& sm = *models_[s];
        for (int a = 0; a < sm.actions.size(); ++a)
            for (std::size_t j = 0; j < sm.width(); ++j)
                if (sm.row(a)[j] > 0.0)
                    k << s << ',' << a << ',' << sm.support[j] << ',' << sm.row(a)[j] << '\n';
        for (std::size_t j = 0; j < sm.width(); ++j) {
            const auto& p = sm.rules.rho[j];
            const auto& q = sm.rules.sigma[j];
            const auto& e = sm.rules.eps;
            r << s << ',' << sm.support[j] << ',' << p[0] << ',' << p[1] << ',' << p[2] << ','
              << q[0] << ',' << q[1] << ',' << q[2] << ',' << e[0] << ',' << e[1] << ',' << e[2]
              << '\n';
        }
    }
    if (!k || !r) throw std::runtime_error("write failed under " + dir);
}

std::size_t ModelBundle::load_cache(const std::string& dir) const {
    const std::string kpath = dir + "/kernels.csv";
    std::ifstream in(kpath);
    if (!in) return 0;
    std::string line;
    std::getline(in, line);
    std::map<int, std::vector<SparseDistribution>> rows;
    const ActionSpace space = actions();
    while (std::getline(in, line)) {
        int s = 0, a = 0, succ = 0;
        double p = 0.0;
        if (std::sscanf(line.c_str(), "%d,%d,%d,%lf", &s, &a, &succ, &p) != 4)
            throw std::runtime_error("malformed line in " + kpath + ": " + line);
        if (s < 0 || s >= grid_.size() || a < 0 || a >= space.size())
            throw std::runtime_error("out-of-range entry in " + kpath + ": " + line);
        auto& v = rows[s];
        if (v.empty()) v.resize(space.size());
        v[a].entries.push_back({succ, p});
    }
    for (auto& [s, v] : rows) {
        std::vector<double> rewards;
        for (int a = 0; a < space.size(); ++a) {
            std::sort(v[a].entries.begin(), v[a].entries.end(),
                      [](const SparseEntry& x, const SparseEntry& y) { return x.index < y.index; });
            rewards.push_back(discrete_reward(grid_, params_, s, space.at(a)));
        }
        StateModel sm = assemble_state_model(s, space, v, rewards, corner_pI_, cfg_);
        sm.in_S = grid_.in_S(s);
        install(s, std::move(sm));
    }
    return rows.size();
}

}  // namespace drmdp
