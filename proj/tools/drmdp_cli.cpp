// drmdp: compile kernels, plan, simulate and compare epidemic control policies.

#include "drmdp/config.hpp"
#include "drmdp/lp.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace fs = std::filesystem;
using namespace drmdp;

namespace {

struct Options {
    std::string config;
    std::string out = "out";
    std::uint64_t seed = 0;
    std::string backend;
    int Y = 0;
    int threads = 0;
    bool verbose = false;
    std::string method = "rtdp";
    int bench_states = 5;
};

class Run {
public:
    Run(const Options& opt, RunConfig cfg) : opt_(opt), cfg_(std::move(cfg)) {
        fs::create_directories(opt_.out);
        write("config.resolved", resolved_config(cfg_));
    }

    const RunConfig& cfg() const { return cfg_; }

    std::ofstream open(const std::string& name) {
        const fs::path path = fs::path(opt_.out) / name;
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + path.string());
        files_.push_back(name);
        return os;
    }

    void write(const std::string& name, const std::string& text) { open(name) << text; }

    template <class F>
    void emit(const std::string& name, F&& f) {
        std::ofstream os = open(name);
        f(os);
    }

    void log(const std::string& msg) const {
        if (opt_.verbose) std::cerr << msg << '\n';
    }

    void finish() {
        std::ostringstream m;
        m << "config_hash = " << config_hash(cfg_) << '\n';
        m << "planner_seed = " << cfg_.planner.seed << '\n';
        m << "seeds =";
        for (auto s : cfg_.seeds) m << ' ' << s;
        m << '\n';
        for (const auto& f : files_) m << "file = " << f << '\n';
        const fs::path path = fs::path(opt_.out) / "manifest.txt";
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + path.string());
        os << m.str();
    }

private:
    Options opt_;
    RunConfig cfg_;
    std::vector<std::string> files_;
};

RunConfig load(const Options& opt) {
    RunConfig cfg = opt.config.empty() ? RunConfig{} : parse_config(opt.config);
    if (opt.seed) cfg.planner.seed = opt.seed;
    if (!opt.backend.empty()) cfg.planner.backend = parse_backend(opt.backend);
    if (opt.Y) cfg.grid.Y = opt.Y;
    if (opt.threads) cfg.threads = opt.threads;
    cfg.planner.threads = cfg.threads;
    cfg.validate();
    return cfg;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void with_cache(const RunConfig& cfg, const ModelBundle& bundle, bool save) {
    if (cfg.cache_dir.empty()) return;
    const std::string dir = (fs::path(cfg.cache_dir) / bundle.hash()).string();
    if (save) {
        fs::create_directories(dir);
        bundle.save_cache(dir);
    } else if (fs::exists(fs::path(dir) / "kernels.csv")) {
        bundle.load_cache(dir);
    }
}

int cmd_compile(Run& run) {
    const RunConfig& cfg = run.cfg();
    ModelBundle bundle(cfg.params, cfg.grid, cfg.ambiguity);
    const auto t0 = std::chrono::steady_clock::now();
    bundle.compile(bundle.grid().feasible(), cfg.threads);
    run.log("compiled " + std::to_string(bundle.compiled_count()) + " corners in " +
            std::to_string(seconds_since(t0)) + " s");
    with_cache(cfg, bundle, true);
    std::ostringstream os;
    os << "hash,Y,corners\n" << bundle.hash() << ',' << cfg.grid.Y << ',' << bundle.compiled_count() << '\n';
    run.write("compile.csv", os.str());
    return 0;
}

int cmd_solve(Run& run, const std::string& method) {
    const RunConfig& cfg = run.cfg();
    ModelBundle bundle(cfg.params, cfg.grid, cfg.ambiguity);
    with_cache(cfg, bundle, false);
    const int init = initial_corner(bundle.grid(), cfg.p_S1.front(), cfg.p_E1);
    const auto t0 = std::chrono::steady_clock::now();
    if (method == "dp") {
        const ValueTable table = backward_dp(cfg.planner, bundle);
        run.log("backward DP: " + std::to_string(seconds_since(t0)) + " s");
        run.emit("values.csv", [&](std::ostream& os) { write_value_csv(os, bundle, table); });
    } else if (method == "rtdp") {
        const RtdpResult r = rtdp(init, cfg.planner, bundle);
        run.log("rtdp: " + std::to_string(r.iterations) + " iterations, " + std::to_string(seconds_since(t0)) +
                " s, root " + std::to_string(r.root_history.back()));
        run.emit("values.csv", [&](std::ostream& os) { write_value_csv(os, bundle, r.values); });
        run.emit("trace.csv", [&](std::ostream& os) { write_trace_csv(os, bundle, r.trace); });
    } else {
        throw std::domain_error("unknown method: " + method);
    }
    with_cache(cfg, bundle, true);
    return 0;
}

int cmd_simulate(Run& run) {
    const RunConfig& cfg = run.cfg();
    ModelBundle bundle(cfg.params, cfg.grid, cfg.ambiguity);
    with_cache(cfg, bundle, false);
    Scenario sc = cfg.scenario();
    sc.backends = {cfg.planner.backend};
    sc.p_S1 = {cfg.p_S1.front()};
    const ComparisonResult res = compare_models(bundle, sc);
    run.emit("episodes.csv", [&](std::ostream& os) { write_comparison_csv(os, res); });
    run.emit("summary.csv", [&](std::ostream& os) { write_summary_csv(os, res); });
    return 0;
}

int cmd_compare(Run& run) {
    const RunConfig& cfg = run.cfg();
    ModelBundle bundle(cfg.params, cfg.grid, cfg.ambiguity);
    with_cache(cfg, bundle, false);
    const auto t0 = std::chrono::steady_clock::now();
    const ComparisonResult res = compare_models(bundle, cfg.scenario());
    run.log("compare: " + std::to_string(seconds_since(t0)) + " s");
    run.emit("comparison.csv", [&](std::ostream& os) { write_comparison_csv(os, res); });
    run.emit("summary.csv", [&](std::ostream& os) { write_summary_csv(os, res); });
    for (const auto& c : res.cells)
        run.log(c.backend + " " + c.kernel + " p_S1=" + std::to_string(c.p_S1) + " mean=" +
                std::to_string(c.mean_total) + " sd=" + std::to_string(c.sd_total));
    return 0;
}

int cmd_sensitivity(Run& run) {
    const RunConfig& cfg = run.cfg();
    const SensitivityResult res =
        sensitivity_sweep(cfg.sensitivity_param, cfg.sensitivity_values, cfg.params, cfg.grid,
                          cfg.ambiguity, cfg.planner.backend, cfg.scenario(), cfg.sensitivity_p_S1);
    run.emit("sensitivity.csv", [&](std::ostream& os) { write_sensitivity_csv(os, res); });
    std::ostringstream os;
    os.precision(12);
    os << "param,value,aggregate_pct_infective\n";
    for (std::size_t i = 0; i < res.aggregate_infectives.size(); ++i)
        os << cfg.sensitivity_param << ',' << cfg.sensitivity_values[i] << ',' << res.aggregate_infectives[i]
           << '\n';
    run.write("sensitivity_aggregate.csv", os.str());
    return 0;
}

int cmd_bench(Run& run, int n_states) {
    const RunConfig& cfg = run.cfg();
    ModelBundle bundle(cfg.params, cfg.grid, cfg.ambiguity);
    const BellmanConfig bc = bellman_config(bundle, cfg.planner);
    std::mt19937_64 rng(cfg.planner.seed);
    std::vector<int> states;
    for (double ps : cfg.p_S1) states.push_back(initial_corner(bundle.grid(), ps, cfg.p_E1));
    std::uniform_int_distribution<std::size_t> pick(0, bundle.grid().feasible().size() - 1);
    while (static_cast<int>(states.size()) < n_states) {
        const int s = bundle.grid().feasible()[pick(rng)];
        if (bundle.grid().in_S(s)) states.push_back(s);
    }
    states.resize(n_states);

    std::ostringstream os;
    os.precision(9);
    os << "state,support,backend,seconds,value,y_V,y_R\n";
    double t_mcc = 0.0, t_unary = 0.0;
    for (int s : states) {
        const StateModel& sm = bundle.at(s);
        std::vector<double> v(sm.width());
        std::uniform_real_distribution<double> unit(-1.0, 0.0);
        const double scale = -bundle.best_reward(s) * 10.0 + 1.0;
        for (auto& x : v) x = unit(rng) * scale;
        for (Backend b : {Backend::DrmdpMcCormick, Backend::DrmdpUnary}) {
            const auto t0 = std::chrono::steady_clock::now();
            const BackupResult r = backup(b, sm, v, bc);
            const double dt = seconds_since(t0);
            (b == Backend::DrmdpMcCormick ? t_mcc : t_unary) += dt;
            const Action a = bundle.actions().at(r.action);
            os << s << ',' << sm.width() << ',' << backend_name(b) << ',' << dt << ',' << r.value << ','
               << a.y_V << ',' << a.y_R << '\n';
        }
    }
    run.write("bench.csv", os.str());
    std::cout << "mean per-backup seconds: drmdp-mccormick " << t_mcc / n_states << ", drmdp-unary "
              << t_unary / n_states << ", ratio " << t_unary / std::max(t_mcc, 1e-12) << '\n';
    return 0;
}

int cmd_selftest() {
    int failures = 0;
    auto report = [&](const char* name, bool ok, const std::string& detail) {
        std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
        if (!ok) ++failures;
    };

    // Strong duality of the inner problem on compiled corners of a small grid.
    EpidemicParams p;
    std::mt19937_64 rng(7);
    int checked = 0;
    double worst = 0.0, worst_order = 0.0, worst_exact = 0.0;
    for (double k : {0.0, 1.0, 1e3, 1e6}) {
        ModelBundle bundle(p, GridSpec{4}, AmbiguityConfig{0.05, k});
        std::vector<int> states;
        for (int s : bundle.grid().feasible())
            if (bundle.grid().in_S(s)) states.push_back(s);
        for (int rep = 0; rep < 3; ++rep) {
            const StateModel& sm = bundle.at(states[rep * 7 % states.size()]);
            std::uniform_real_distribution<double> unit(-5000.0, 0.0);
            std::vector<double> v(sm.width());
            for (auto& x : v) x = unit(rng);
            for (int a = 0; a < sm.actions.size(); a += 5) {
                const double dual = inner_dual_lp(sm, a, v, p.lambda, bundle.ambiguity()).value;
                const double primal = inner_primal_oracle(sm, a, v, p.lambda, bundle.ambiguity());
                worst = std::max(worst, std::abs(dual - primal) / std::max(1.0, std::abs(primal)));
                ++checked;
            }
            const double mcc = drmdp_backup_mccormick(sm, v, p.lambda, bundle.ambiguity()).value;
            const double una = drmdp_backup_unary(sm, v, p.lambda, bundle.ambiguity()).value;
            const double enu = drmdp_backup_enumerate(sm, v, p.lambda, bundle.ambiguity()).value;
            const double sc = std::max(1.0, std::abs(enu));
            worst_order = std::max(worst_order, (una - mcc) / sc);
            worst_exact = std::max(worst_exact, std::abs(una - enu) / sc);
        }
    }
    report("inner duality", worst <= 1e-6, std::to_string(checked) + " instances, max rel gap " + std::to_string(worst));
    report("relaxation ordering", worst_order <= 1e-6, "max unary - mccormick " + std::to_string(worst_order));
    report("unary exactness", worst_exact <= 1e-6, "max |unary - enumerate| " + std::to_string(worst_exact));

    // LP strong duality on random bounded problems.
    int lp_checked = 0, lp_bad = 0;
    for (int rep = 0; rep < 50; ++rep) {
        opt::LinearProgram lp;
        lp.sense = rep % 2 ? opt::Sense::Maximize : opt::Sense::Minimize;
        std::uniform_real_distribution<double> c(-3.0, 3.0);
        for (int j = 0; j < 4; ++j) lp.add_variable(0.0, 5.0, c(rng));
        for (int i = 0; i < 3; ++i) {
            std::vector<opt::Term> terms;
            for (int j = 0; j < 4; ++j) terms.push_back({j, c(rng)});
            lp.add_row(terms, i == 0 ? opt::Relation::GreaterEqual : opt::Relation::LessEqual, c(rng) + 1.0);
        }
        const auto r = opt::lp_duality_check(lp);
        if (!r.checked) continue;
        ++lp_checked;
        if (!r.ok) ++lp_bad;
    }
    report("lp duality", lp_bad == 0, std::to_string(lp_checked) + " optimal instances, " +
                                          std::to_string(lp_bad) + " gaps");
    return failures ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decision-dependent distributionally robust epidemic control planner"};
    app.require_subcommand(1);
    app.fallthrough();
    Options opt;
    app.add_option("--config", opt.config, "Config file (key = value)")->check(CLI::ExistingFile);
    app.add_option("--out", opt.out, "Output directory");
    app.add_option("--seed", opt.seed, "Planner seed override");
    app.add_option("--backend", opt.backend, "Backup backend override");
    app.add_option("--Y", opt.Y, "Grid resolution override");
    app.add_option("--threads", opt.threads, "Worker threads override");
    app.add_flag("--verbose", opt.verbose, "Progress on stderr");

    auto* compile = app.add_subcommand("compile", "Build kernels and decision rules for every corner");
    auto* solve = app.add_subcommand("solve", "Run a planner and write the value table");
    solve->add_option("--method", opt.method, "rtdp or dp");
    auto* simulate = app.add_subcommand("simulate", "Simulate the configured backend from the first p_S1");
    auto* compare = app.add_subcommand("compare", "Compare backends across initial conditions and kernels");
    auto* sensitivity = app.add_subcommand("sensitivity", "Sweep one cost or epidemic parameter");
    auto* bench = app.add_subcommand("bench", "Time McCormick and unary backups");
    bench->add_option("--states", opt.bench_states, "Number of corners to time")->check(CLI::PositiveNumber);
    auto* selftest = app.add_subcommand("selftest", "Duality and ordering property checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << app.help();
        return 1;
    }

    try {
        if (selftest->parsed()) return cmd_selftest();
        Run run(opt, load(opt));
        int rc = 0;
        if (compile->parsed()) rc = cmd_compile(run);
        else if (solve->parsed()) rc = cmd_solve(run, opt.method);
        else if (simulate->parsed()) rc = cmd_simulate(run);
        else if (compare->parsed()) rc = cmd_compare(run);
        else if (sensitivity->parsed()) rc = cmd_sensitivity(run);
        else if (bench->parsed()) rc = cmd_bench(run, opt.bench_states);
        run.finish();
        return rc;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
}
