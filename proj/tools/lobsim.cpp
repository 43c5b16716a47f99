// lobsim: command-line front end for the latent order book experiments.

#include "lob/config.hpp"
#include "lob/error.hpp"
#include "lob/experiments.hpp"
#include "lob/io.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <iostream>
#include <optional>

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> replicas;
    std::optional<int> threads;
    std::optional<std::string> out;
    std::vector<double> gammas, zetas, phis;
    std::vector<std::string> styles;
    std::optional<double> lambda, mu, nu, D;
    std::optional<std::int64_t> steps, metaorders;
};

void add_common(CLI::App* sub, Overrides& o) {
    sub->add_option("--config", o.config, "INI configuration file");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--replicas", o.replicas, "replicas per cell");
    sub->add_option("--threads", o.threads, "worker threads (0: all cores)");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--gamma", o.gammas, "sign-correlation exponent(s)")->delimiter(',');
    sub->add_option("--zeta", o.zetas, "market-order size exponent(s)")->delimiter(',');
    sub->add_option("--phi", o.phis, "participation rate(s)")->delimiter(',');
    sub->add_option("--style", o.styles, "execution style(s): zeta|unit")->delimiter(',');
    sub->add_option("--lambda", o.lambda, "deposit rate per tick per step");
    sub->add_option("--mu", o.mu, "market-order rate per step");
    sub->add_option("--nu", o.nu, "cancellation rate per order per step");
    sub->add_option("--D", o.D, "price diffusivity per step (theory)");
    sub->add_option("--steps", o.steps, "recorded steps (simulate, profile, backgrounds)");
    sub->add_option("--metaorders", o.metaorders, "metaorders per curve");
}

lob::ExperimentConfig build_config(lob::ExperimentKind kind, const Overrides& o) {
    lob::ExperimentConfig c = o.config.empty() ? lob::default_config(kind) : lob::load_config(o.config, kind);
    if (c.kind != kind) {
        throw lob::ConfigError("invalid configuration:\n  sim.experiment: file is for '" + std::string(to_string(c.kind)) +
                               "', command is '" + std::string(to_string(kind)) + "'");
    }
    if (o.seed) c.sim.seed = *o.seed;
    if (o.replicas) c.replicas = *o.replicas;
    if (o.threads) c.threads = *o.threads;
    if (o.out) c.out_dir = *o.out;
    if (!o.gammas.empty()) {
        c.gammas = o.gammas;
        c.sim.alpha = 1.0 + o.gammas.front();
    }
    if (!o.zetas.empty()) {
        c.zetas = o.zetas;
        c.sim.flow.zeta = o.zetas.front();
    }
    if (!o.phis.empty()) c.phis = o.phis;
    if (!o.styles.empty()) {
        c.styles.clear();
        for (const auto& s : o.styles) c.styles.push_back(lob::parse_execution_style(s));
    }
    if (o.lambda) c.sim.flow.lambda = *o.lambda;
    if (o.mu) c.sim.flow.mu = *o.mu;
    if (o.nu) c.sim.flow.nu_inf = *o.nu;
    if (o.D) c.theory_D = *o.D;
    if (o.steps) {
        c.sim.horizon_steps = *o.steps;
        c.background_steps = *o.steps;
    }
    if (o.metaorders) c.metaorders = *o.metaorders;
    c.validate();
    return c;
}

nlohmann::json run_kind(const lob::ExperimentConfig& c) {
    using lob::ExperimentKind;
    switch (c.kind) {
    case ExperimentKind::simulate: {
        lob::SimParams p = c.sim;
        const auto rec = lob::run(p);
        return lob::write_simulate_outputs(c, rec);
    }
    case ExperimentKind::diffusion_map:
        return lob::write_outputs(c, lob::run_diffusion_map(c));
    case ExperimentKind::diffusion_line:
        return lob::write_outputs(c, lob::find_diffusion_line(c.gammas, c));
    case ExperimentKind::profile:
        return lob::write_outputs(c, lob::run_profile_experiment(c));
    case ExperimentKind::impact:
        return lob::write_outputs(c, lob::run_impact_experiment(c));
    case ExperimentKind::decay:
        return lob::write_outputs(c, lob::run_decay_experiment(c));
    case ExperimentKind::imbalance:
        return lob::write_outputs(c, lob::run_imbalance_experiment(c));
    case ExperimentKind::theory:
        return lob::write_outputs(c, lob::run_theory(c));
    }
    return {};
}

std::string error_type(const std::exception& e) {
    if (dynamic_cast<const lob::ConfigError*>(&e)) return "config_error";
    if (dynamic_cast<const lob::ParameterError*>(&e)) return "parameter_error";
    if (dynamic_cast<const lob::RunRejected*>(&e)) return "run_rejected";
    if (dynamic_cast<const lob::DegenerateState*>(&e)) return "degenerate_state";
    if (dynamic_cast<const lob::InsufficientData*>(&e)) return "insufficient_data";
    if (dynamic_cast<const lob::FitError*>(&e)) return "fit_error";
    if (dynamic_cast<const lob::SolverError*>(&e)) return "solver_error";
    return "error";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"latent order book simulator and experiments"};
    app.require_subcommand(1);
    Overrides o;
    const std::pair<const char*, lob::ExperimentKind> subs[] = {
        {"simulate", lob::ExperimentKind::simulate},
        {"diffusion-map", lob::ExperimentKind::diffusion_map},
        {"diffusion-line", lob::ExperimentKind::diffusion_line},
        {"profile", lob::ExperimentKind::profile},
        {"impact", lob::ExperimentKind::impact},
        {"decay", lob::ExperimentKind::decay},
        {"imbalance", lob::ExperimentKind::imbalance},
        {"theory", lob::ExperimentKind::theory},
    };
    std::vector<std::pair<CLI::App*, lob::ExperimentKind>> apps;
    for (const auto& [name, kind] : subs) {
        auto* sub = app.add_subcommand(name, std::string("run the ") + name + " experiment");
        add_common(sub, o);
        apps.emplace_back(sub, kind);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    lob::ExperimentKind kind = lob::ExperimentKind::simulate;
    for (const auto& [sub, k] : apps)
        if (sub->parsed()) kind = k;

    try {
        const auto cfg = build_config(kind, o);
        const auto t0 = std::chrono::steady_clock::now();
        const auto summary = run_kind(cfg);
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        lob::write_manifest(cfg, summary, wall);
        std::cout << nlohmann::json{{"status", "ok"}, {"out", cfg.out_dir.string()}, {"summary", summary}}.dump(2)
                  << "\n";
        return 0;
    } catch (const std::exception& e) {
        nlohmann::json err{{"status", "error"}, {"type", error_type(e)}, {"message", e.what()}};
        std::cerr << err.dump(2) << "\n";
        return dynamic_cast<const lob::ConfigError*>(&e) ? 2 : 1;
    }
}
