#pragma once

#include "lob/simulator.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace lob {

enum class ExperimentKind : std::uint8_t {
    simulate,
    diffusion_map,
    diffusion_line,
    profile,
    impact,
    decay,
    imbalance,
    theory
};

std::string_view to_string(ExperimentKind k) noexcept;
ExperimentKind parse_experiment_kind(std::string_view s);

// Everything an experiment needs. Loaded from an INI file with sections
// [sim] [flow] [sign] [metaorder] [sweep] [output] [theory]; see README for keys.
struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::simulate;
    SimParams sim;               // sim.seed is the master seed
    int replicas = 1;
    int threads = 0;             // 0: hardware concurrency

    // [sweep]
    std::vector<double> gammas;
    std::vector<double> zetas;
    std::vector<double> phis;
    std::vector<ExecutionStyle> styles;
    // zeta used for a given gamma when `zetas` is empty (diffusive line)
    std::map<double, double> zeta_line{{0.3, 2.5}, {0.5, 0.95}, {0.8, 0.65}};

    // diffusion map / line
    std::size_t lag1 = 10;
    std::size_t lag2 = 1000;
    std::int64_t transactions = 200'000;  // per replica, after warmup
    double bracket_lo = 0.3;
    double bracket_hi = 4.0;
    double line_tolerance = 0.02;
    double line_min_interval = 0.01;

    // [metaorder]
    std::int64_t metaorders = 1000;       // per curve, split across replicas
    double q_over_v_min = 1e-3;
    double q_over_v_max = 1e-1;
    std::int64_t rewarmup_steps = 10'000;
    std::int64_t max_metaorder_steps = 5'000'000;
    bool record_trajectory = false;
    double target_T_lifetimes = 0.0;      // > 0: per-metaorder phi chosen so E[T] = this * tau_life
    std::int64_t background_steps = 1'000'000;

    // [output]
    std::filesystem::path out_dir = "out";
    double profile_u_max = 100.0;
    double profile_fit_u_stars = 5.0;     // fit range u <= this * u*_theory
    std::int64_t imbalance_window = 1000;
    std::size_t impact_bins = 8;

    // [theory]
    double theory_D = 0.0;                // 0: derived from theory_u_star
    double theory_u_star = 0.49;
    double theory_domain_u_stars = 20.0;
    std::size_t theory_cells = 10'000;

    double gamma() const noexcept { return sim.gamma(); }
    double zeta_for(double gamma) const;
    void validate() const;
    nlohmann::json to_json() const;
};

// Built-in sweep axes and scales for each experiment (desk scale).
ExperimentConfig default_config(ExperimentKind kind);

// Starts from default_config of sim.experiment (or `fallback` when the file
// does not name one). Throws ConfigError naming every unknown key and
// malformed value. Call validate() once command-line overrides are applied.
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentKind fallback = ExperimentKind::simulate);
ExperimentConfig parse_config(const std::string& ini_text, ExperimentKind fallback = ExperimentKind::simulate);

// Stable 64-bit hash of the effective configuration.
std::uint64_t config_hash(const ExperimentConfig& c);

} // namespace lob
