// Run configuration: `key = value` text, one key per line, `#` comments.
// Missing keys keep their defaults; unknown keys are rejected.

#pragma once

#include "drmdp/sim.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace drmdp {

class ConfigError : public std::domain_error {
public:
    ConfigError(const std::string& source, int line, const std::string& key, const std::string& what);
    int line() const { return line_; }
    const std::string& key() const { return key_; }
    const std::string& reason() const { return reason_; }

private:
    int line_;
    std::string key_;
    std::string reason_;
};

struct RunConfig {
    EpidemicParams params;
    GridSpec grid;
    AmbiguityConfig ambiguity;
    PlannerConfig planner;

    std::vector<Backend> backends{Backend::DrmdpMcCormick, Backend::Nominal, Backend::Robust};
    std::vector<double> p_S1{0.60, 0.65, 0.70, 0.75};
    double p_E1 = 0.1;
    std::vector<KernelKind> kernels{KernelKind::Nominal, KernelKind::Perturbed};
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    PerturbationSpec perturbation;

    std::string sensitivity_param = "Q";
    std::vector<double> sensitivity_values{1.0, 2.0, 4.0};
    double sensitivity_p_S1 = 0.7;

    int threads = 1;
    std::string cache_dir;  ///< empty: no kernel cache

    /// Throws ConfigError (line 0) naming the first violated key.
    void validate() const;
    Scenario scenario() const;
};

RunConfig parse_config_text(const std::string& text, const std::string& source = "<config>");
/// Throws ConfigError when the file cannot be read or fails to parse.
RunConfig parse_config(const std::string& path);

/// Every key with its resolved value, in a fixed order; parses back to the
/// same configuration.
std::string resolved_config(const RunConfig& cfg);
/// 16 hex digits of FNV-1a over resolved_config.
std::string config_hash(const RunConfig& cfg);

}  // namespace drmdp
