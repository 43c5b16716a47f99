#include "lob/experiments.hpp"

#include "lob/error.hpp"
#include "lob/io.hpp"
#include "lob/pool.hpp"
#include "lob/records.hpp"
#include "lob/rng.hpp"
#include "lob/theory.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <numeric>

namespace lob {

namespace fs = std::filesystem;

std::uint64_t cell_seed(std::uint64_t master, std::string_view kind, std::initializer_list<double> coords,
                        std::uint64_t replica) {
    std::uint64_t h = derive_seed(master, {hash_string(kind)});
    for (double c : coords) h = derive_seed(h, {std::bit_cast<std::uint64_t>(c)});
    return derive_seed(h, {replica});
}

namespace {

double style_code(ExecutionStyle s) { return s == ExecutionStyle::unit_execution ? 1.0 : 0.0; }

std::string short_num(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? std::nan("") : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
    if (v.size() < 2) return std::nan("");
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

SimParams with_point(const ExperimentConfig& cfg, double gamma, double zeta, std::uint64_t seed) {
    SimParams p = cfg.sim;
    p.alpha = 1.0 + gamma;
    p.flow.zeta = zeta;
    p.seed = seed;
    return p;
}

struct ReplicaRatio {
    double ratio = std::nan("");
    double block_se = std::nan("");
    bool flagged = false;
    std::string note;
};

// Midpoints after each trade, warmup excluded, until `transactions` trades.
ReplicaRatio replica_ratio(const SimParams& p, const ExperimentConfig& cfg) {
    ReplicaRatio out;
    try {
        Simulator sim(p);
        sim.run_steps(p.warmup_steps);
        std::vector<double> mids;
        mids.reserve(static_cast<std::size_t>(cfg.transactions));
        const auto target = static_cast<std::size_t>(cfg.transactions);
        while (mids.size() < target) {
            sim.step();
            for (const auto& tr : sim.last_trades()) mids.push_back(tr.midpoint_after);
        }
        mids.resize(target);
        check_drop_budget(sim.stats(), p.max_drop_fraction);
        const double d2 = diffusion_constant(mids, cfg.lag2);
        if (!(d2 > 0.0)) {
            // Price never moves at the long lag; the ratio is undefined.
            out.flagged = true;
            out.note = "frozen price";
            return out;
        }
        const auto est = diffusivity_ratio_with_error(mids, cfg.lag1, cfg.lag2, 10);
        out.ratio = est.ratio;
        out.block_se = est.stderr_;
    } catch (const DegenerateState& e) {
        out.flagged = true;
        out.note = std::string("degenerate: ") + e.what();
    } catch (const RunRejected& e) {
        out.flagged = true;
        out.note = std::string("rejected: ") + e.what();
    }
    return out;
}

DiffusivityPoint merge_point(double gamma, double zeta, std::int64_t tx, const std::vector<ReplicaRatio>& reps) {
    DiffusivityPoint pt;
    pt.gamma = gamma;
    pt.zeta = zeta;
    pt.transactions = tx;
    std::vector<double> ok;
    for (const auto& r : reps) {
        pt.replica_ratios.push_back(r.ratio);
        if (r.flagged) {
            pt.flagged = true;
            if (pt.note.empty()) pt.note = r.note;
        } else {
            ok.push_back(r.ratio);
        }
    }
    if (ok.empty()) {
        pt.ratio = std::nan("");
        pt.se = std::nan("");
        return pt;
    }
    pt.ratio = mean_of(ok);
    if (ok.size() >= 2) {
        pt.se = sd_of(ok) / std::sqrt(static_cast<double>(ok.size()));
    } else {
        for (const auto& r : reps)
            if (!r.flagged) pt.se = r.block_se;
    }
    return pt;
}

} // namespace

DiffusivityPoint evaluate_diffusivity(const ExperimentConfig& cfg, std::string_view kind, double gamma, double zeta) {
    const auto reps = parallel_map<ReplicaRatio>(static_cast<std::size_t>(cfg.replicas), cfg.threads, [&](std::size_t r) {
        return replica_ratio(with_point(cfg, gamma, zeta, cell_seed(cfg.sim.seed, kind, {gamma, zeta}, r)), cfg);
    });
    return merge_point(gamma, zeta, cfg.transactions, reps);
}

std::vector<DiffusivityPoint> run_diffusion_map(const ExperimentConfig& cfg) {
    const std::size_t R = static_cast<std::size_t>(cfg.replicas);
    const std::size_t ng = cfg.gammas.size(), nz = cfg.zetas.size();
    const auto reps = parallel_map<ReplicaRatio>(ng * nz * R, cfg.threads, [&](std::size_t i) {
        const double g = cfg.gammas[i / (nz * R)];
        const double z = cfg.zetas[(i / R) % nz];
        return replica_ratio(with_point(cfg, g, z, cell_seed(cfg.sim.seed, "diffusion_map", {g, z}, i % R)), cfg);
    });
    std::vector<DiffusivityPoint> out;
    for (std::size_t c = 0; c < ng * nz; ++c) {
        std::vector<ReplicaRatio> cell(reps.begin() + static_cast<std::ptrdiff_t>(c * R),
                                       reps.begin() + static_cast<std::ptrdiff_t>((c + 1) * R));
        out.push_back(merge_point(cfg.gammas[c / nz], cfg.zetas[c % nz], cfg.transactions, cell));
    }
    return out;
}

namespace {

// Sign of ratio - 1 for the bisection. A frozen price (NaN ratio) has no
// long-lag motion at all and is placed on the confined side.
int side_of(const DiffusivityPoint& p) {
    if (std::isnan(p.ratio)) return 1;
    return p.ratio > 1.0 ? 1 : -1;
}

} // namespace

LinePoint find_diffusion_line_point(const ExperimentConfig& cfg, double gamma) {
    LinePoint lp;
    lp.gamma = gamma;
    auto eval = [&](double z) {
        auto p = evaluate_diffusivity(cfg, "diffusion_line", gamma, z);
        lp.trace.push_back(p);
        return p;
    };
    auto close_enough = [&](const DiffusivityPoint& p) {
        return !std::isnan(p.ratio) && std::abs(p.ratio - 1.0) < cfg.line_tolerance;
    };
    auto accept = [&](const DiffusivityPoint& p) {
        lp.zeta_star = p.zeta;
        lp.ratio = p.ratio;
        lp.se = p.se;
        lp.converged = true;
        lp.bracketed = true;
        return lp;
    };

    double lo = cfg.bracket_lo, hi = cfg.bracket_hi;
    DiffusivityPoint plo = eval(lo), phi = eval(hi);
    if (side_of(plo) == side_of(phi)) {
        lo *= 0.5;
        hi *= 2.0;
        plo = eval(lo);
        phi = eval(hi);
        if (side_of(plo) == side_of(phi)) {
            lp.bracketed = false;
            const auto& best = std::abs(plo.ratio - 1.0) < std::abs(phi.ratio - 1.0) ? plo : phi;
            lp.zeta_star = best.zeta;
            lp.ratio = best.ratio;
            lp.se = best.se;
            lp.note = "no sign change of ratio - 1 in [" + short_num(lo) + ", " + short_num(hi) + "]";
            return lp;
        }
    }
    if (close_enough(plo)) return accept(plo);
    if (close_enough(phi)) return accept(phi);
    const int slo = side_of(plo);
    DiffusivityPoint last = plo;
    for (int it = 0; it < 60 && hi - lo >= cfg.line_min_interval; ++it) {
        const double mid = 0.5 * (lo + hi);
        last = eval(mid);
        if (close_enough(last)) return accept(last);
        if (side_of(last) == slo) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lp.bracketed = true;
    lp.converged = true;
    lp.zeta_star = 0.5 * (lo + hi);
    lp.ratio = last.ratio;
    lp.se = last.se;
    lp.note = "stopped on bracket width";
    return lp;
}

std::vector<LinePoint> find_diffusion_line(const std::vector<double>& gammas, const ExperimentConfig& cfg) {
    std::vector<LinePoint> out;
    for (double g : gammas) out.push_back(find_diffusion_line_point(cfg, g));
    return out;
}

// ---------------------------------------------------------------------------

Background run_background(const ExperimentConfig& cfg, double gamma, double zeta, std::int64_t steps,
                          bool keep_recording) {
    Background bg;
    bg.gamma = gamma;
    bg.zeta = zeta;
    bg.seed = cell_seed(cfg.sim.seed, "background", {gamma, zeta}, 0);
    SimParams p = with_point(cfg, gamma, zeta, bg.seed);
    p.horizon_steps = steps;
    if (p.snapshot_interval <= 0) p.snapshot_interval = std::max<std::int64_t>(1, std::llround(p.tau_life() / 10.0));
    RunRecording rec = run(p);
    bg.dq = derive_quantities(p.flow, rec);
    bg.profile = mean_book_profile(rec.snapshots, std::min<double>(cfg.profile_u_max, static_cast<double>(p.snapshot_depth)));
    rec.snapshots.clear();
    if (keep_recording) {
        bg.recording = std::move(rec);
    } else {
        bg.recording.stats = rec.stats;
        bg.recording.drop_fraction = rec.drop_fraction;
    }
    return bg;
}

namespace {

// First points up to u_fit, at least ten.
ExponentialFit fit_inner(const BookProfile& prof, double u_fit, double* used_u_max) {
    std::size_t n = 0;
    while (n < prof.u.size() && prof.u[n] <= u_fit) ++n;
    n = std::min(prof.u.size(), std::max<std::size_t>(n, 10));
    if (used_u_max) *used_u_max = n ? prof.u[n - 1] : 0.0;
    return fit_exponential_profile(std::span(prof.u).first(n), std::span(prof.rho).first(n));
}

} // namespace

ProfileResult run_profile_experiment(const ExperimentConfig& cfg) {
    ProfileResult r;
    r.gamma = cfg.sim.gamma();
    r.zeta = cfg.sim.flow.zeta;
    SimParams p = cfg.sim;
    p.seed = cell_seed(cfg.sim.seed, "profile", {r.gamma, r.zeta}, 0);
    if (p.snapshot_interval <= 0) p.snapshot_interval = std::max<std::int64_t>(1, std::llround(p.tau_life() / 10.0));
    const RunRecording rec = run(p);
    r.stats = rec.stats;
    r.snapshots = rec.snapshots.size();
    r.dq = derive_quantities(p.flow, rec);
    const double u_max = std::min<double>(cfg.profile_u_max, static_cast<double>(p.snapshot_depth));
    r.profile = mean_book_profile(rec.snapshots, u_max);
    r.fit = fit_inner(r.profile, cfg.profile_fit_u_stars * r.dq.u_star, &r.fit_u_max);

    std::vector<double> far;
    for (std::size_t i = 0; i < r.profile.u.size(); ++i)
        if (r.profile.u[i] >= 0.8 * u_max) far.push_back(r.profile.rho[i]);
    r.rho_far = mean_of(far);

    r.linear_max_dev = std::nan("");
    for (std::size_t i = 0; i < r.profile.u.size(); ++i) {
        const double u = r.profile.u[i];
        if (u > r.dq.u_star / 4.0) break;
        const double lin = r.dq.b * u;
        const double dev = std::abs(r.profile.rho[i] - lin) / lin;
        r.linear_max_dev = std::isnan(r.linear_max_dev) ? dev : std::max(r.linear_max_dev, dev);
        ++r.linear_points;
    }
    return r;
}

// ---------------------------------------------------------------------------

namespace {

struct ReplicaMetaorders {
    std::vector<MetaorderRecord> records;
};

ReplicaMetaorders run_replica_metaorders(const ExperimentConfig& cfg, const Background& bg, double phi,
                                         ExecutionStyle style, bool follow, std::string_view kind, std::size_t replica,
                                         std::int64_t count) {
    ReplicaMetaorders out;
    const std::uint64_t seed = cell_seed(cfg.sim.seed, kind, {bg.gamma, bg.zeta, phi, style_code(style)}, replica);
    SimParams p = with_point(cfg, bg.gamma, bg.zeta, seed);
    p.snapshot_interval = 0;
    Rng draws = make_rng(derive_seed(seed, {hash_string("draws")}));
    Simulator sim(p);
    sim.run_steps(p.warmup_steps);
    const double lq_lo = std::log(cfg.q_over_v_min * bg.dq.V), lq_hi = std::log(cfg.q_over_v_max * bg.dq.V);
    // Mean child volume, used to aim per-metaorder participation at a target T.
    const double child = style == ExecutionStyle::unit_execution ? 1.0 : bg.dq.J / bg.dq.trade_rate;
    for (std::int64_t j = 0; j < count; ++j) {
        sim.run_steps(cfg.rewarmup_steps);
        MetaorderSpec spec;
        const double u = uniform_open(draws);
        spec.Q = std::max<Volume>(1, static_cast<Volume>(std::llround(std::exp(lq_lo + u * (lq_hi - lq_lo)))));
        spec.sign = coin(0.5, draws) ? Sign::buy : Sign::sell;
        spec.style = style;
        spec.phi = phi;
        if (cfg.target_T_lifetimes > 0.0) {
            const double t_target = cfg.target_T_lifetimes * p.tau_life();
            spec.phi = std::min(1.0, static_cast<double>(spec.Q) / (p.flow.mu * child * t_target));
        }
        spec.start_step = sim.steps_done();
        auto rec = execute_metaorder(sim, spec, cfg.max_metaorder_steps, follow);
        rec.seed = seed;
        out.records.push_back(std::move(rec));
    }
    check_drop_budget(sim.stats(), p.max_drop_fraction);
    return out;
}

std::vector<MetaorderRecord> run_metaorders(const ExperimentConfig& cfg, const Background& bg, double phi,
                                            ExecutionStyle style, bool follow, std::string_view kind) {
    const auto R = static_cast<std::size_t>(cfg.replicas);
    const auto reps = parallel_map<ReplicaMetaorders>(R, cfg.threads, [&](std::size_t r) {
        const std::int64_t count = cfg.metaorders / cfg.replicas + (static_cast<std::int64_t>(r) < cfg.metaorders % cfg.replicas ? 1 : 0);
        return run_replica_metaorders(cfg, bg, phi, style, follow, kind, r, count);
    });
    std::vector<MetaorderRecord> all;
    for (const auto& r : reps) all.insert(all.end(), r.records.begin(), r.records.end());
    return all;
}

void summarise_T(ImpactCell& c, double tau) {
    std::vector<double> t;
    for (const auto& r : c.records)
        if (r.complete) t.push_back(static_cast<double>(r.T) / tau);
    if (t.empty()) return;
    std::sort(t.begin(), t.end());
    c.median_T_over_tau = t[t.size() / 2];
    c.max_T_over_tau = t.back();
}

ImpactCell make_cell(const ExperimentConfig& cfg, const Background& bg, double phi, ExecutionStyle style,
                     std::vector<MetaorderRecord> records) {
    ImpactCell c;
    c.gamma = bg.gamma;
    c.zeta = bg.zeta;
    c.phi = phi;
    c.style = style;
    c.dq = bg.dq;
    c.records = std::move(records);
    summarise_T(c, cfg.sim.tau_life());
    ImpactOptions opts;
    opts.bins = cfg.impact_bins;
    opts.x_min = cfg.q_over_v_min;
    opts.x_max = cfg.q_over_v_max;
    opts.bootstrap_seed = cell_seed(cfg.sim.seed, "bootstrap", {bg.gamma, bg.zeta, phi, style_code(style)}, 0);
    try {
        c.curve = impact_curve(c.records, c.dq, opts);
        c.fit_ok = true;
    } catch (const FitError& e) {
        c.fit_note = e.what();
    }
    return c;
}

std::vector<std::pair<double, double>> background_points(const ExperimentConfig& cfg) {
    std::vector<std::pair<double, double>> pts;
    for (double g : cfg.gammas) {
        if (cfg.zetas.empty()) {
            pts.emplace_back(g, cfg.zeta_for(g));
        } else {
            for (double z : cfg.zetas) pts.emplace_back(g, z);
        }
    }
    return pts;
}

} // namespace

ImpactCell run_impact_cell(const ExperimentConfig& cfg, const Background& bg, double phi, ExecutionStyle style,
                           bool follow) {
    return make_cell(cfg, bg, phi, style, run_metaorders(cfg, bg, phi, style, follow, "impact"));
}

NaiveOverlay naive_overlay(const Background& bg, const std::vector<double>& q_over_v) {
    NaiveOverlay o;
    o.q_over_v = q_over_v;
    const auto fit = fit_exponential_profile(bg.profile.u, bg.profile.rho);
    o.b = fit.rho_inf / fit.u_star;
    // Cumulative volume from the midpoint, trapezoid on the half-tick grid with rho(0) = 0.
    std::vector<double> cu{0.0}, cv{0.0};
    double prev_u = 0.0, prev_r = 0.0;
    for (std::size_t i = 0; i < bg.profile.u.size(); ++i) {
        const double u = bg.profile.u[i], r = bg.profile.rho[i];
        // rho is volume per tick; u steps by half a tick.
        cv.push_back(cv.back() + 0.5 * (r + prev_r) * (u - prev_u));
        cu.push_back(u);
        prev_u = u;
        prev_r = r;
    }
    for (double x : q_over_v) {
        const double Q = x * bg.dq.V;
        o.sqrt_rule.push_back(naive_impact(Q, o.b) / bg.dq.sigma);
        double d = std::nan("");
        for (std::size_t i = 1; i < cv.size(); ++i) {
            if (cv[i] >= Q) {
                const double f = (Q - cv[i - 1]) / (cv[i] - cv[i - 1]);
                d = cu[i - 1] + f * (cu[i] - cu[i - 1]);
                break;
            }
        }
        o.integrated.push_back(d / bg.dq.sigma);
    }
    return o;
}

namespace {

std::vector<double> overlay_grid(const ExperimentConfig& cfg) {
    std::vector<double> x;
    const int n = 41;
    const double a = std::log(cfg.q_over_v_min), b = std::log(cfg.q_over_v_max);
    for (int i = 0; i < n; ++i) x.push_back(std::exp(a + (b - a) * i / (n - 1)));
    return x;
}

std::vector<Background> backgrounds_for(const ExperimentConfig& cfg, bool keep) {
    const auto pts = background_points(cfg);
    return parallel_map<Background>(pts.size(), cfg.threads, [&](std::size_t i) {
        return run_background(cfg, pts[i].first, pts[i].second, cfg.background_steps, keep);
    });
}

ImbalanceImpact imbalance_for(const ExperimentConfig& cfg, const Background& bg) {
    return global_imbalance_impact(bg.recording.trades, bg.recording.step_midpoints, cfg.sim.warmup_steps + 1,
                                   static_cast<std::size_t>(cfg.imbalance_window));
}

} // namespace

ImpactResult run_impact_experiment(const ExperimentConfig& cfg) {
    ImpactResult res;
    res.backgrounds = backgrounds_for(cfg, true);
    struct Job {
        std::size_t bg;
        double phi;
        ExecutionStyle style;
    };
    std::vector<Job> jobs;
    for (std::size_t b = 0; b < res.backgrounds.size(); ++b)
        for (double phi : cfg.phis)
            for (auto st : cfg.styles) jobs.push_back({b, phi, st});
    for (const auto& j : jobs)
        res.cells.push_back(run_impact_cell(cfg, res.backgrounds[j.bg], j.phi, j.style, cfg.record_trajectory));
    const auto grid = overlay_grid(cfg);
    for (auto& bg : res.backgrounds) {
        res.naive.push_back(naive_overlay(bg, grid));
        res.imbalance.push_back(imbalance_for(cfg, bg));
        bg.recording.trades.clear();
        bg.recording.trades.shrink_to_fit();
        bg.recording.step_midpoints.clear();
        bg.recording.step_midpoints.shrink_to_fit();
        bg.recording.trade_midpoints.clear();
        bg.recording.trade_midpoints.shrink_to_fit();
    }
    return res;
}

std::vector<DecayCell> run_decay_experiment(const ExperimentConfig& cfg) {
    const auto bgs = backgrounds_for(cfg, false);
    const std::vector<ExecutionStyle> styles =
        cfg.styles.empty() ? std::vector<ExecutionStyle>{ExecutionStyle::unit_execution} : cfg.styles;
    std::vector<DecayCell> out;
    for (const auto& bg : bgs) {
        for (double phi : cfg.phis) {
            for (auto st : styles) {
                DecayCell d;
                d.cell = make_cell(cfg, bg, phi, st, run_metaorders(cfg, bg, phi, st, true, "decay"));
                d.curve = decay_curve(d.cell.records);
                out.push_back(std::move(d));
            }
        }
    }
    return out;
}

ImbalanceResult run_imbalance_experiment(const ExperimentConfig& cfg) {
    ImbalanceResult res;
    res.backgrounds = backgrounds_for(cfg, true);
    for (auto& bg : res.backgrounds) {
        res.fits.push_back(imbalance_for(cfg, bg));
        bg.recording = RunRecording{};
    }
    return res;
}

// ---------------------------------------------------------------------------

TheoryResult run_theory(const ExperimentConfig& cfg) {
    TheoryResult t;
    t.lambda = cfg.sim.flow.lambda;
    t.nu_inf = cfg.sim.flow.nu_inf;
    t.D = cfg.theory_D > 0.0 ? cfg.theory_D : diffusivity_for_u_star(cfg.theory_u_star, t.nu_inf);
    t.rho_inf = t.lambda / t.nu_inf;
    t.u_star = profile_u_star(t.D, t.nu_inf);
    t.b = t.rho_inf / t.u_star;
    t.J = 0.5 * t.D * t.b;
    const double U = cfg.theory_domain_u_stars * t.u_star;
    const auto sol = solve_stationary_numeric(ProfileCoefficients::constant(t.D, t.lambda, t.nu_inf), U, cfg.theory_cells);
    t.u = sol.u;
    t.numeric = sol.rho;
    t.numeric_residual = sol.max_residual;
    t.numeric_b = linear_slope_b(sol.J, sol.D0);
    for (std::size_t i = 0; i < t.u.size(); ++i) {
        const double cf = stationary_profile_closed_form(t.u[i], t.lambda, t.nu_inf, t.D);
        t.closed_form.push_back(cf);
        if (cf > 0.0) t.numeric_max_rel_error = std::max(t.numeric_max_rel_error, std::abs(t.numeric[i] - cf) / cf);
    }
    return t;
}

// ---------------------------------------------------------------------------

std::string curve_tag(double gamma, double zeta, double phi, ExecutionStyle style) {
    return "g" + short_num(gamma) + "_z" + short_num(zeta) + "_phi" + short_num(phi) + "_" +
           (style == ExecutionStyle::unit_execution ? "unit" : "zeta");
}

namespace {

std::string point_tag(double gamma, double zeta) { return "g" + short_num(gamma) + "_z" + short_num(zeta); }

void ensure_dir(const fs::path& p) { fs::create_directories(p); }

nlohmann::json cell_json(const ImpactCell& c) {
    nlohmann::json j{{"gamma", c.gamma},
                     {"zeta", c.zeta},
                     {"phi", c.phi},
                     {"style", std::string(to_string(c.style))},
                     {"metaorders", c.records.size()},
                     {"median_T_over_tau", json_number(c.median_T_over_tau)},
                     {"max_T_over_tau", json_number(c.max_T_over_tau)},
                     {"fit_ok", c.fit_ok}};
    if (c.fit_ok) {
        j["curve"] = to_json(c.curve);
        const double n = static_cast<double>(c.curve.used + c.curve.excluded);
        j["exclusion_rate"] = n > 0 ? static_cast<double>(c.curve.excluded) / n : 0.0;
    } else {
        j["fit_note"] = c.fit_note;
    }
    return j;
}

nlohmann::json background_json(const Background& bg) {
    return {{"gamma", bg.gamma},
            {"zeta", bg.zeta},
            {"seed", bg.seed},
            {"derived", to_json(bg.dq)},
            {"drop_fraction", bg.recording.drop_fraction},
            {"steps", bg.recording.stats.steps}};
}

void write_naive_csv(const fs::path& path, const NaiveOverlay& o) {
    CsvWriter w(path, {"q_over_v", "sqrt_rule", "integrated"});
    for (std::size_t i = 0; i < o.q_over_v.size(); ++i) {
        w << o.q_over_v[i] << o.sqrt_rule[i] << o.integrated[i];
        w.end_row();
    }
}

} // namespace

nlohmann::json write_simulate_outputs(const ExperimentConfig& cfg, const RunRecording& rec) {
    ensure_dir(cfg.out_dir);
    write_prices_csv(cfg.out_dir / "prices.csv", rec.step_midpoints, cfg.sim.warmup_steps + 1);
    write_trades_csv(cfg.out_dir / "trades.csv", rec.trades);
    if (!rec.snapshots.empty()) write_snapshots_csv(cfg.out_dir / "snapshots.csv", rec.snapshots);
    nlohmann::json j{{"steps", rec.stats.steps},
                     {"deposited", rec.stats.deposited},
                     {"executed", rec.stats.executed},
                     {"cancelled", rec.stats.cancelled},
                     {"dropped", rec.stats.dropped},
                     {"trades", rec.stats.trades},
                     {"drop_fraction", rec.drop_fraction}};
    if (!rec.trades.empty() && rec.trade_midpoints.size() > 200) {
        j["derived"] = to_json(derive_quantities(cfg.sim.flow, rec));
    }
    return j;
}

nlohmann::json write_outputs(const ExperimentConfig& cfg, const std::vector<DiffusivityPoint>& map) {
    ensure_dir(cfg.out_dir);
    CsvWriter w(cfg.out_dir / "diffusion_map.csv", {"gamma", "zeta", "ratio", "se", "replicas", "flagged"});
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& p : map) {
        w << p.gamma << p.zeta << p.ratio << p.se << static_cast<std::int64_t>(p.replica_ratios.size())
          << (p.flagged ? 1 : 0);
        w.end_row();
        if (p.flagged) cells.push_back({{"gamma", p.gamma}, {"zeta", p.zeta}, {"note", p.note}});
    }
    return {{"cells", map.size()}, {"flagged", cells}};
}

nlohmann::json write_outputs(const ExperimentConfig& cfg, const std::vector<LinePoint>& line) {
    ensure_dir(cfg.out_dir);
    CsvWriter w(cfg.out_dir / "diffusion_line.csv", {"gamma", "zeta_star", "ratio", "se", "converged", "bracketed"});
    CsvWriter t(cfg.out_dir / "diffusion_line_trace.csv", {"gamma", "zeta", "ratio", "se", "flagged"});
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : line) {
        w << p.gamma << p.zeta_star << p.ratio << p.se << (p.converged ? 1 : 0) << (p.bracketed ? 1 : 0);
        w.end_row();
        for (const auto& e : p.trace) {
            t << e.gamma << e.zeta << e.ratio << e.se << (e.flagged ? 1 : 0);
            t.end_row();
        }
        pts.push_back({{"gamma", p.gamma},
                       {"zeta_star", p.zeta_star},
                       {"ratio", json_number(p.ratio)},
                       {"se", json_number(p.se)},
                       {"converged", p.converged},
                       {"bracketed", p.bracketed},
                       {"note", p.note}});
    }
    return {{"line", pts}};
}

nlohmann::json write_outputs(const ExperimentConfig& cfg, const ProfileResult& r) {
    ensure_dir(cfg.out_dir);
    write_profile_csv(cfg.out_dir / "profile.csv", r.profile, &r.fit);
    std::vector<double> th;
    for (double u : r.profile.u)
        th.push_back(stationary_profile_closed_form(u, cfg.sim.flow.lambda, cfg.sim.flow.nu_inf, r.dq.D_step));
    write_theory_profile_csv(cfg.out_dir / "profile_theory.csv", r.profile.u, th);
    nlohmann::json j{{"gamma", r.gamma},
                     {"zeta", r.zeta},
                     {"derived", to_json(r.dq)},
                     {"fit", to_json(r.fit)},
                     {"fit_u_max", r.fit_u_max},
                     {"rho_far", json_number(r.rho_far)},
                     {"linear_max_dev", json_number(r.linear_max_dev)},
                     {"linear_points", r.linear_points},
                     {"snapshots", r.snapshots},
                     {"dropped", r.stats.dropped}};
    write_json(cfg.out_dir / "derived.json", j);
    return j;
}

nlohmann::json write_outputs(const ExperimentConfig& cfg, const ImpactResult& r) {
    ensure_dir(cfg.out_dir);
    nlohmann::json bgs = nlohmann::json::array(), cells = nlohmann::json::array();
    for (std::size_t i = 0; i < r.backgrounds.size(); ++i) {
        const auto& bg = r.backgrounds[i];
        const std::string tag = point_tag(bg.gamma, bg.zeta);
        write_profile_csv(cfg.out_dir / ("book_" + tag + ".csv"), bg.profile, nullptr);
        write_naive_csv(cfg.out_dir / ("naive_" + tag + ".csv"), r.naive[i]);
        write_imbalance_csv(cfg.out_dir / ("imbalance_" + tag + ".csv"), r.imbalance[i]);
        auto j = background_json(bg);
        j["naive_b"] = r.naive[i].b;
        j["imbalance"] = to_json(r.imbalance[i]);
        bgs.push_back(j);
    }
    for (const auto& c : r.cells) {
        const std::string tag = curve_tag(c.gamma, c.zeta, c.phi, c.style);
        write_metaorders_csv(cfg.out_dir / ("metaorders_" + tag + ".csv"), c.records);
        if (c.fit_ok) write_impact_csv(cfg.out_dir / ("impact_" + tag + ".csv"), c.curve);
        cells.push_back(cell_json(c));
    }
    nlohmann::json j{{"backgrounds", bgs}, {"cells", cells}};
    write_json(cfg.out_dir / "impact_summary.json", j);
    return j;
}

nlohmann::json write_outputs(const ExperimentConfig& cfg, const std::vector<DecayCell>& r) {
    ensure_dir(cfg.out_dir);
    nlohmann::json cells = nlohmann::json::array();
    for (const auto& d : r) {
        const std::string tag = curve_tag(d.cell.gamma, d.cell.zeta, d.cell.phi, d.cell.style);
        write_metaorders_csv(cfg.out_dir / ("metaorders_" + tag + ".csv"), d.cell.records);
        write_decay_csv(cfg.out_dir / ("decay_" + tag + ".csv"), d.curve);
        auto j = cell_json(d.cell);
        j["decay"] = to_json(d.curve);
        cells.push_back(j);
    }
    nlohmann::json j{{"cells", cells}};
    write_json(cfg.out_dir / "decay_summary.json", j);
    return j;
}

nlohmann::json write_outputs(const ExperimentConfig& cfg, const ImbalanceResult& r) {
    ensure_dir(cfg.out_dir);
    nlohmann::json fits = nlohmann::json::array();
    for (std::size_t i = 0; i < r.fits.size(); ++i) {
        const auto& bg = r.backgrounds[i];
        write_imbalance_csv(cfg.out_dir / ("imbalance_" + point_tag(bg.gamma, bg.zeta) + ".csv"), r.fits[i]);
        auto j = background_json(bg);
        j["imbalance"] = to_json(r.fits[i]);
        fits.push_back(j);
    }
    return {{"fits", fits}};
}

nlohmann::json write_outputs(const ExperimentConfig& cfg, const TheoryResult& t) {
    ensure_dir(cfg.out_dir);
    write_theory_profile_csv(cfg.out_dir / "theory_profile.csv", t.u, t.closed_form);
    write_theory_profile_csv(cfg.out_dir / "theory_profile_numeric.csv", t.u, t.numeric);
    nlohmann::json j{{"lambda", t.lambda},
                     {"nu_inf", t.nu_inf},
                     {"D", t.D},
                     {"rho_inf", t.rho_inf},
                     {"u_star", t.u_star},
                     {"b", t.b},
                     {"J", t.J},
                     {"numeric_max_rel_error", t.numeric_max_rel_error},
                     {"numeric_residual", t.numeric_residual},
                     {"numeric_b", t.numeric_b}};
    write_json(cfg.out_dir / "theory_profile.json", j);
    return j;
}

void write_manifest(const ExperimentConfig& cfg, const nlohmann::json& summary, double wall_seconds) {
    ensure_dir(cfg.out_dir);
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
    nlohmann::json m{{"experiment", std::string(to_string(cfg.kind))},
                     {"config_hash", hash},
                     {"config", cfg.to_json()},
                     {"master_seed", cfg.sim.seed},
                     {"replicas", cfg.replicas},
                     {"threads", resolve_threads(cfg.threads)},
                     {"code_version", kCodeVersion},
                     {"wall_seconds", wall_seconds},
                     {"summary", summary}};
    write_json(cfg.out_dir / "manifest.json", m);
}

} // namespace lob
