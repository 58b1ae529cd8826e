#include "drmdp/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace drmdp {

ConfigError::ConfigError(const std::string& source, int line, const std::string& key,
                         const std::string& what)
    : std::domain_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) +
                        (key.empty() ? std::string() : ": key '" + key + "'") + ": " + what),
      line_(line),
      key_(key),
      reason_(what) {}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw std::invalid_argument("empty list item");
        out.push_back(item);
    }
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

double to_double(const std::string& s) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw std::invalid_argument("not a number: " + s);
    return v;
}

template <class Int>
Int to_int(const std::string& s) {
    Int v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw std::invalid_argument("not an integer: " + s);
    return v;
}

bool to_bool(const std::string& s) {
    if (s == "true" || s == "1") return true;
    if (s == "false" || s == "0") return false;
    throw std::invalid_argument("expected true or false: " + s);
}

std::string fmt(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

template <class T, class F>
std::string join(const std::vector<T>& xs, F&& f) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + f(xs[i]);
    return out;
}

KernelKind parse_kernel(const std::string& s) {
    if (s == "nominal") return KernelKind::Nominal;
    if (s == "perturbed") return KernelKind::Perturbed;
    throw std::invalid_argument("unknown kernel: " + s);
}

struct Key {
    const char* name;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

#define DOUBLE_KEY(NAME, FIELD)                                                       \
    Key { NAME, [](RunConfig& c, const std::string& v) { c.FIELD = to_double(v); }, \
          [](const RunConfig& c) { return fmt(c.FIELD); } }
#define INT_KEY(NAME, FIELD, TYPE)                                                      \
    Key { NAME, [](RunConfig& c, const std::string& v) { c.FIELD = to_int<TYPE>(v); }, \
          [](const RunConfig& c) { return std::to_string(c.FIELD); } }
#define BOOL_KEY(NAME, FIELD)                                                       \
    Key { NAME, [](RunConfig& c, const std::string& v) { c.FIELD = to_bool(v); }, \
          [](const RunConfig& c) { return std::string(c.FIELD ? "true" : "false"); } }

const std::vector<Key>& keys() {
    static const std::vector<Key> table = {
        INT_KEY("N", params.N, int),
        DOUBLE_KEY("mu", params.mu),
        DOUBLE_KEY("beta", params.beta),
        DOUBLE_KEY("alpha0", params.alpha0),
        DOUBLE_KEY("l_C", params.l_C),
        DOUBLE_KEY("l_D", params.l_D),
        DOUBLE_KEY("Q", params.Q),
        DOUBLE_KEY("k_R", params.k_R),
        DOUBLE_KEY("W", params.W),
        INT_KEY("L", params.L, int),
        INT_KEY("M", params.M, int),
        DOUBLE_KEY("lambda", params.lambda),
        INT_KEY("T", params.T, int),
        INT_KEY("Y", grid.Y, int),
        DOUBLE_KEY("delta", ambiguity.delta),
        DOUBLE_KEY("k", ambiguity.k),
        {"backend", [](RunConfig& c, const std::string& v) { c.planner.backend = parse_backend(v); },
         [](const RunConfig& c) { return std::string(backend_name(c.planner.backend)); }},
        INT_KEY("niter", planner.niter, int),
        INT_KEY("seed", planner.seed, std::uint64_t),
        {"heuristic",
         [](RunConfig& c, const std::string& v) {
             if (v == "best-reward") c.planner.heuristic = HeuristicKind::BestReward;
             else if (v == "zero") c.planner.heuristic = HeuristicKind::Zero;
             else throw std::invalid_argument("expected best-reward or zero: " + v);
         },
         [](const RunConfig& c) {
             return std::string(c.planner.heuristic == HeuristicKind::Zero ? "zero" : "best-reward");
         }},
        DOUBLE_KEY("exploration", planner.exploration),
        BOOL_KEY("backward_pass", planner.backward_pass),
        BOOL_KEY("early_stop", planner.early_stop),
        DOUBLE_KEY("stop_tol", planner.stop_tol),
        INT_KEY("stop_window", planner.stop_window, int),
        DOUBLE_KEY("robust_budget", planner.robust_budget),
        BOOL_KEY("literal_action_bounds", planner.mip.literal_action_bounds),
        {"backends",
         [](RunConfig& c, const std::string& v) {
             c.backends.clear();
             for (const auto& s : split_list(v)) c.backends.push_back(parse_backend(s));
         },
         [](const RunConfig& c) {
             return join(c.backends, [](Backend b) { return std::string(backend_name(b)); });
         }},
        {"p_S1",
         [](RunConfig& c, const std::string& v) {
             c.p_S1.clear();
             for (const auto& s : split_list(v)) c.p_S1.push_back(to_double(s));
         },
         [](const RunConfig& c) { return join(c.p_S1, [](double x) { return fmt(x); }); }},
        DOUBLE_KEY("p_E1", p_E1),
        {"kernels",
         [](RunConfig& c, const std::string& v) {
             c.kernels.clear();
             for (const auto& s : split_list(v)) c.kernels.push_back(parse_kernel(s));
         },
         [](const RunConfig& c) {
             return join(c.kernels, [](KernelKind k) { return std::string(kernel_name(k)); });
         }},
        {"seeds",
         [](RunConfig& c, const std::string& v) {
             c.seeds.clear();
             for (const auto& s : split_list(v)) c.seeds.push_back(to_int<std::uint64_t>(s));
         },
         [](const RunConfig& c) {
             return join(c.seeds, [](std::uint64_t s) { return std::to_string(s); });
         }},
        DOUBLE_KEY("perturbation_radius", perturbation.radius),
        {"perturbation_direction",
         [](RunConfig& c, const std::string& v) {
             if (v == "infectives") c.perturbation.direction = PerturbationDirection::TowardInfectives;
             else if (v == "random") c.perturbation.direction = PerturbationDirection::RandomDirection;
             else throw std::invalid_argument("expected infectives or random: " + v);
         },
         [](const RunConfig& c) {
             return std::string(c.perturbation.direction == PerturbationDirection::RandomDirection
                                    ? "random"
                                    : "infectives");
         }},
        INT_KEY("perturbation_seed", perturbation.seed, std::uint64_t),
        {"sensitivity_param", [](RunConfig& c, const std::string& v) { c.sensitivity_param = v; },
         [](const RunConfig& c) { return c.sensitivity_param; }},
        {"sensitivity_values",
         [](RunConfig& c, const std::string& v) {
             c.sensitivity_values.clear();
             for (const auto& s : split_list(v)) c.sensitivity_values.push_back(to_double(s));
         },
         [](const RunConfig& c) { return join(c.sensitivity_values, [](double x) { return fmt(x); }); }},
        DOUBLE_KEY("sensitivity_p_S1", sensitivity_p_S1),
        INT_KEY("threads", threads, int),
        {"cache_dir", [](RunConfig& c, const std::string& v) { c.cache_dir = v; },
         [](const RunConfig& c) { return c.cache_dir; }},
    };
    return table;
}

#undef DOUBLE_KEY
#undef INT_KEY
#undef BOOL_KEY

void check(bool ok, const char* key, const std::string& what) {
    if (!ok) throw ConfigError("<config>", 0, key, what);
}

/// Validates and reports the offending key; `source` and `line` locate it.
void validate_key(const RunConfig& c, const std::string& key, const std::string& source, int line) {
    try {
        c.validate();
    } catch (const ConfigError& e) {
        if (e.key() == key) throw ConfigError(source, line, key, e.reason());
    }
}

}  // namespace

void RunConfig::validate() const {
    const EpidemicParams& p = params;
    check(p.N >= 1, "N", "must be >= 1");
    check(p.mu >= 0.0 && std::isfinite(p.mu), "mu", "must be finite and >= 0");
    check(p.beta >= 0.0 && p.beta <= 1.0, "beta", "must lie in [0,1]");
    check(p.alpha0 >= 0.0 && p.alpha0 <= 1.0, "alpha0", "must lie in [0,1]");
    check(p.l_C > 0.0 && std::isfinite(p.l_C), "l_C", "must be > 0");
    check(p.l_D > 0.0 && std::isfinite(p.l_D), "l_D", "must be > 0");
    check(p.Q >= 0.0 && std::isfinite(p.Q), "Q", "must be >= 0");
    check(p.k_R >= 0.0 && std::isfinite(p.k_R), "k_R", "must be >= 0");
    check(p.W >= 0.0 && std::isfinite(p.W), "W", "must be >= 0");
    check(p.L >= 1, "L", "must be >= 1");
    check(p.M >= 1, "M", "must be >= 1");
    check(p.lambda > 0.0 && p.lambda <= 1.0, "lambda", "must lie in (0,1]");
    check(p.T >= 2, "T", "must be >= 2");
    check(grid.Y >= 1, "Y", "must be >= 1");
    check(ambiguity.delta >= 0.0 && std::isfinite(ambiguity.delta), "delta", "must be finite and >= 0");
    check(ambiguity.k >= 0.0 && std::isfinite(ambiguity.k), "k", "must be finite and >= 0");
    check(planner.niter >= 1, "niter", "must be >= 1");
    check(planner.exploration >= 0.0 && planner.exploration <= 1.0, "exploration", "must lie in [0,1]");
    check(planner.stop_tol >= 0.0, "stop_tol", "must be >= 0");
    check(planner.stop_window >= 1, "stop_window", "must be >= 1");
    check(planner.robust_budget >= 0.0 && planner.robust_budget <= 2.0, "robust_budget",
          "must lie in [0,2]");
    for (double x : p_S1) check(x >= 0.0 && x <= 1.0, "p_S1", "entries must lie in [0,1]");
    check(p_E1 >= 0.0 && p_E1 <= 1.0, "p_E1", "must lie in [0,1]");
    for (double x : p_S1) check(x + p_E1 <= 1.0 + 1e-12, "p_S1", "p_S1 + p_E1 must be <= 1");
    check(perturbation.radius >= 0.0 && perturbation.radius <= 2.0, "perturbation_radius",
          "must lie in [0,2]");
    check(sensitivity_param == "Q" || sensitivity_param == "k_R" || sensitivity_param == "mu_beta" ||
              sensitivity_param == "W" || sensitivity_param == "alpha0",
          "sensitivity_param", "must be one of Q, k_R, mu_beta, W, alpha0");
    check(sensitivity_p_S1 >= 0.0 && sensitivity_p_S1 + p_E1 <= 1.0 + 1e-12, "sensitivity_p_S1",
          "must lie in [0, 1 - p_E1]");
    check(threads >= 1, "threads", "must be >= 1");
}

Scenario RunConfig::scenario() const {
    Scenario s;
    s.backends = backends;
    s.p_S1 = p_S1;
    s.p_E1 = p_E1;
    s.kernels = kernels;
    s.seeds = seeds;
    s.planner = planner;
    s.planner.threads = threads;
    s.perturbation = perturbation;
    s.threads = threads;
    return s;
}

RunConfig parse_config_text(const std::string& text, const std::string& source) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string body = trim(raw.substr(0, raw.find('#')));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError(source, line, "", "expected 'key = value'");
        const std::string key = trim(body.substr(0, eq));
        const std::string value = trim(body.substr(eq + 1));
        if (key.empty()) throw ConfigError(source, line, "", "missing key");
        const Key* k = nullptr;
        for (const auto& cand : keys())
            if (key == cand.name) k = &cand;
        if (!k) throw ConfigError(source, line, key, "unknown key");
        if (value.empty() && key != "cache_dir") throw ConfigError(source, line, key, "missing value");
        try {
            k->set(cfg, value);
        } catch (const std::exception& e) {
            throw ConfigError(source, line, key, e.what());
        }
        validate_key(cfg, key, source, line);
    }
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(source, 0, e.key(), e.reason());
    }
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "", "cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

std::string resolved_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& k : keys()) out += std::string(k.name) + " = " + k.get(cfg) + "\n";
    return out;
}

std::string config_hash(const RunConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(resolved_config(cfg))));
    return buf;
}

}  // namespace drmdp
