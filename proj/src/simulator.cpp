#include "lob/simulator.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace lob {

std::string_view to_string(Engine e) noexcept {
    return e == Engine::lazy ? "lazy" : "eager";
}

std::string_view to_string(ExecutionStyle s) noexcept {
    return s == ExecutionStyle::zeta_execution ? "zeta_execution" : "unit_execution";
}

ExecutionStyle parse_execution_style(std::string_view s) {
    if (s == "zeta_execution" || s == "zeta") return ExecutionStyle::zeta_execution;
    if (s == "unit_execution" || s == "unit") return ExecutionStyle::unit_execution;
    throw ParameterError("unknown execution style '" + std::string(s) + "'");
}

Engine parse_engine(std::string_view s) {
    if (s == "lazy") return Engine::lazy;
    if (s == "eager") return Engine::eager;
    throw ParameterError("unknown engine '" + std::string(s) + "'");
}

void SimParams::validate() const {
    flow.validate();
    require_alpha(alpha);
    if (window < 2) throw ParameterError("window K must be >= 2 ticks");
    if (warmup_steps < 0 || horizon_steps < 0) throw ParameterError("step counts must be >= 0");
    if (snapshot_interval < 0) throw ParameterError("snapshot_interval must be >= 0");
    if (snapshot_depth < 1) throw ParameterError("snapshot_depth must be >= 1");
    if (!(max_drop_fraction >= 0.0)) throw ParameterError("max_drop_fraction must be >= 0");
    if (flow.nu_inf > 0.0 && min_warmup_lifetimes > 0.0 &&
        static_cast<double>(warmup_steps) < min_warmup_lifetimes * tau_life()) {
        throw ParameterError("warmup_steps " + std::to_string(warmup_steps) + " shorter than " +
                             std::to_string(min_warmup_lifetimes) + " order lifetimes");
    }
}

void MetaorderSpec::validate() const {
    if (Q < 1) throw ParameterError("metaorder Q must be >= 1");
    if (!(phi > 0.0 && phi <= 1.0)) throw ParameterError("participation phi must lie in (0, 1]");
    if (start_step < 0) throw ParameterError("start_step must be >= 0");
}

namespace {

Book make_book(const SimParams& p) {
    p.validate();
    return Book(0, p.window / 2);
}

} // namespace

Simulator::Simulator(SimParams params) : Simulator(params, make_book(params)) {}

Simulator::Simulator(SimParams params, Book initial)
    : params_(params),
      book_(std::move(initial)),
      flow_rng_(make_rng(derive_seed(params.seed, {hash_string("flow")}))),
      sign_rng_(make_rng(derive_seed(params.seed, {hash_string("signs")}))),
      meta_rng_(make_rng(derive_seed(params.seed, {hash_string("metaorder")}))),
      signs_(params.alpha),
      log_survival_(std::log1p(-std::min(params.flow.nu_inf, 1.0))),
      ref_mid_(static_cast<double>(book_.window_center())),
      recentre_trigger_(std::max<Tick>(1, params.window / 8)) {
    params_.flow.validate();
    require_alpha(params_.alpha);
    if (auto m = book_.midpoint()) ref_mid_ = *m;
    if (params_.engine == Engine::lazy) {
        const auto n = static_cast<std::size_t>(book_.window_high() - book_.window_low() + 1);
        synced_.assign(n, 0);
        active_step_.assign(n, -1);
    }
}

double Simulator::price() const noexcept {
    if (auto m = book_.midpoint()) return *m;
    return ref_mid_;
}

void Simulator::run_steps(std::int64_t n) {
    for (std::int64_t i = 0; i < n; ++i) step();
}

void Simulator::step() {
    if (t_ >= 1 && !book_.best_bid() && !book_.best_ask()) {
        throw DegenerateState("both sides of the book empty at step " + std::to_string(t_ + 1));
    }
    ++t_;
    trades_.clear();
    if (auto m = book_.midpoint()) ref_mid_ = *m;
    active_.clear();
    deposit_phase();
    market_phase();
    cancel_phase();
    window_phase();
    ++stats_.steps;
}

// ---------------------------------------------------------------------------
// Lazy level bookkeeping

void Simulator::sync_to(Tick p, std::int64_t s) {
    const std::size_t i = lazy_index(p);
    const std::int64_t k = s - synced_[i];
    if (k <= 0) return;
    synced_[i] = s;
    const Side side = side_of(p);
    const Volume v = book_.volume(side, p);
    const double nu = params_.flow.nu_inf;
    const double lambda = params_.flow.lambda;
    Volume survivors = v;
    double arrival_mean;
    if (nu > 0.0) {
        const double q = std::exp(static_cast<double>(k) * log_survival_);
        survivors = binomial(v, q, flow_rng_);
        arrival_mean = lambda * (1.0 - nu) * (-std::expm1(static_cast<double>(k) * log_survival_)) / nu;
    } else {
        arrival_mean = lambda * static_cast<double>(k);
    }
    const Volume arrivals = poisson(arrival_mean, flow_rng_);
    stats_.cancelled += v - survivors;
    stats_.deposited += arrivals;
    const Volume nv = survivors + arrivals;
    if (nv != v) book_.set_raw(side, p, nv);
}

void Simulator::prepare(Tick p) {
    const std::size_t i = lazy_index(p);
    if (active_step_[i] == t_) return;
    sync_to(p, t_ - 1);
    active_step_[i] = t_;
    active_.push_back(p);
    const double dp = static_cast<double>(p);
    if (dp == ref_mid_) return;
    const Volume n = poisson(params_.flow.lambda, flow_rng_);
    if (n > 0) {
        book_.add(side_of(p), p, n);
        stats_.deposited += n;
    }
}

void Simulator::remap_lazy_state(Tick old_low, std::size_t old_size) {
    const auto n = static_cast<std::size_t>(book_.window_high() - book_.window_low() + 1);
    std::vector<std::int64_t> ns(n, 0);
    std::vector<std::int64_t> na(n, -1);
    const auto shift = static_cast<std::size_t>(old_low - book_.window_low());
    for (std::size_t i = 0; i < old_size; ++i) {
        ns[i + shift] = synced_[i];
        na[i + shift] = active_step_[i];
    }
    synced_.swap(ns);
    active_step_.swap(na);
}

void Simulator::materialize(Tick low, Tick high) {
    if (params_.engine != Engine::lazy) return;
    low = std::max(low, book_.window_low());
    high = std::min(high, book_.window_high());
    for (Tick p = low; p <= high; ++p) sync_to(p, t_);
}

// ---------------------------------------------------------------------------
// Phases

void Simulator::deposit_phase() {
    const double lambda = params_.flow.lambda;
    if (params_.engine == Engine::eager) {
        if (lambda <= 0.0) return;
        std::poisson_distribution<Volume> dist(lambda);
        for (Tick p = book_.window_low(); p <= book_.window_high(); ++p) {
            if (static_cast<double>(p) == ref_mid_) continue;
            const Volume n = dist(flow_rng_);
            if (n > 0) {
                book_.add(side_of(p), p, n);
                stats_.deposited += n;
            }
        }
        return;
    }
    // Lazy: the band between the best quotes is advanced eagerly; everything
    // beyond it waits until a market order or a rescan reaches it.
    const Tick lo = book_.best_bid().value_or(book_.window_low());
    const Tick hi = book_.best_ask().value_or(book_.window_high());
    for (Tick p = lo; p <= hi; ++p) prepare(p);
}

void Simulator::market_phase() {
    const std::int64_t n = poisson(params_.flow.mu, flow_rng_);
    for (std::int64_t i = 0; i < n; ++i) execute_event();
}

void Simulator::execute_event() {
    ++stats_.market_events;
    auto touch = [this](Side, Tick p) { prepare(p); };

    const bool agent = meta_ && !meta_->done() && coin(meta_->spec.phi, meta_rng_);
    Sign sign;
    if (agent) {
        sign = meta_->spec.sign;
    } else if (params_.sign_rule == SignRule::lmf) {
        sign = signs_.next(sign_rng_);
    } else {
        sign = coin(0.5, sign_rng_) ? Sign::buy : Sign::sell;
    }

    const Side side = opposite_side(sign);
    const auto best = book_.best(side);
    if (!best) {
        ++stats_.exhausted_orders;
        return;
    }
    if (params_.engine == Engine::lazy) prepare(*best);
    const Volume q_best = book_.volume(side, *best);

    Volume vol = 1;
    if (agent) {
        if (meta_->spec.style == ExecutionStyle::zeta_execution) {
            vol = market_order_volume(sample_fraction(params_.flow.zeta, meta_rng_), q_best);
        }
        vol = std::min(vol, meta_->spec.Q - meta_->executed);
    } else if (params_.volume_rule == VolumeRule::fraction) {
        vol = market_order_volume(sample_fraction(params_.flow.zeta, sign_rng_), q_best);
    }

    const double before = price();
    const ExecutionReport rep = params_.engine == Engine::lazy ? book_.execute_market_order(sign, vol, touch)
                                                               : book_.execute_market_order(sign, vol);
    if (rep.exhausted) ++stats_.exhausted_orders;
    if (rep.executed == 0) return;
    stats_.executed += rep.executed;

    if (agent) {
        auto& m = *meta_;
        if (!m.p_start) {
            m.p_start = before;
            m.first_step = t_;
        }
        m.executed += rep.executed;
        m.notional += rep.vwap * static_cast<double>(rep.executed);
        ++m.child_orders;
        if (m.done()) m.completion_step = t_;
    }
    record_trade(sign, rep, agent);
}

void Simulator::record_trade(Sign sign, const ExecutionReport& rep, bool is_meta) {
    ++stats_.trades;
    trades_.push_back({t_, sign, rep.executed, rep.vwap, is_meta, price()});
}

void Simulator::cancel_phase() {
    const double nu = params_.flow.nu_inf;
    if (params_.engine == Engine::eager) {
        stats_.cancelled += book_.cancellation_sweep(nu, flow_rng_);
        return;
    }
    for (Tick p : active_) {
        for (Side s : {Side::buy, Side::sell}) {
            const Volume v = book_.volume(s, p);
            if (v == 0) continue;
            const Volume c = binomial(v, nu, flow_rng_);
            if (c > 0) {
                book_.set_raw(s, p, v - c);
                stats_.cancelled += c;
            }
        }
        synced_[lazy_index(p)] = t_;
    }
    // Thinning may have emptied a best level; rescan outward, bringing the
    // levels passed over up to the end of this step.
    auto touch_end = [this](Side, Tick p) { sync_to(p, t_); };
    if (auto b = book_.best_bid(); b && book_.bid_volume(*b) == 0) book_.rescan_best(Side::buy, *b, touch_end);
    if (auto a = book_.best_ask(); a && book_.ask_volume(*a) == 0) book_.rescan_best(Side::sell, *a, touch_end);
}

void Simulator::window_phase() {
    const double m = price();
    if (std::abs(m - static_cast<double>(book_.window_center())) <= static_cast<double>(recentre_trigger_)) return;
    const auto c = static_cast<Tick>(std::llround(m));
    ++stats_.recentres;
    if (params_.engine == Engine::eager) {
        stats_.dropped += book_.recenter_window(c);
        return;
    }
    const Tick old_low = book_.window_low();
    const std::size_t old_size = synced_.size();
    book_.grow_window(c, params_.window / 2);
    remap_lazy_state(old_low, old_size);
}

// ---------------------------------------------------------------------------

BookSnapshot Simulator::snapshot() {
    BookSnapshot s;
    s.step = t_;
    s.midpoint = price();
    const Tick d = params_.snapshot_depth;
    const Tick low = std::max(static_cast<Tick>(std::floor(s.midpoint)) - d, book_.window_low());
    const Tick high = std::min(static_cast<Tick>(std::ceil(s.midpoint)) + d, book_.window_high());
    materialize(low, high);
    s.low = low;
    const auto n = static_cast<std::size_t>(std::max<Tick>(0, high - low + 1));
    s.bids.resize(n);
    s.asks.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Tick p = low + static_cast<Tick>(i);
        s.bids[i] = book_.bid_volume(p);
        s.asks[i] = book_.ask_volume(p);
    }
    return s;
}

void Simulator::launch_metaorder(const MetaorderSpec& spec) {
    spec.validate();
    MetaorderProgress m;
    m.spec = spec;
    m.launch_step = t_;
    meta_ = m;
}

void check_drop_budget(const RunStats& stats, double max_fraction) {
    if (stats.dropped == 0) return;
    const double frac = stats.deposited > 0 ? static_cast<double>(stats.dropped) / static_cast<double>(stats.deposited)
                                            : 1.0;
    if (frac > max_fraction) {
        throw RunRejected("window dropped " + std::to_string(stats.dropped) + " of " + std::to_string(stats.deposited) +
                          " deposited orders (fraction " + std::to_string(frac) + ")");
    }
}

RunRecording run(const SimParams& params, const RecordOptions& opts) {
    Simulator sim(params);
    sim.run_steps(params.warmup_steps);
    RunRecording rec;
    if (opts.step_midpoints) rec.step_midpoints.reserve(static_cast<std::size_t>(params.horizon_steps));
    for (std::int64_t i = 0; i < params.horizon_steps; ++i) {
        sim.step();
        if (opts.step_midpoints) rec.step_midpoints.push_back(sim.price());
        for (const auto& tr : sim.last_trades()) {
            if (opts.trades) rec.trades.push_back(tr);
            if (opts.trade_midpoints) rec.trade_midpoints.push_back(tr.midpoint_after);
        }
        if (opts.snapshots && params.snapshot_interval > 0 && (i + 1) % params.snapshot_interval == 0) {
            rec.snapshots.push_back(sim.snapshot());
        }
    }
    rec.stats = sim.stats();
    rec.drop_fraction = rec.stats.deposited > 0
                            ? static_cast<double>(rec.stats.dropped) / static_cast<double>(rec.stats.deposited)
                            : 0.0;
    check_drop_budget(rec.stats, params.max_drop_fraction);
    return rec;
}

MetaorderRecord execute_metaorder(Simulator& sim, const MetaorderSpec& spec, std::int64_t max_steps, bool follow) {
    MetaorderRecord rec;
    rec.spec = spec;
    rec.zeta = sim.params().flow.zeta;
    rec.gamma = sim.params().gamma();
    rec.seed = sim.params().seed;
    rec.trajectory.fill(std::nan(""));
    if (!spec.enabled) {
        sim.run_steps(max_steps);
        return rec;
    }
    sim.launch_metaorder(spec);
    const std::int64_t launch = sim.steps_done();
    std::vector<double> mids{sim.price()};  // mids[s - launch] = price at end of step s
    std::int64_t used = 0;
    while (!sim.metaorder()->done() && used < max_steps) {
        sim.step();
        mids.push_back(sim.price());
        ++used;
    }
    const MetaorderProgress m = *sim.metaorder();
    rec.executed = m.executed;
    rec.child_orders = m.child_orders;
    rec.first_step = m.first_step;
    if (m.p_start) rec.p_start = *m.p_start;
    if (m.executed > 0) rec.vwap_exec = m.notional / static_cast<double>(m.executed);
    if (!m.done()) {
        sim.clear_metaorder();
        return rec;
    }
    rec.complete = true;
    rec.completion_step = m.completion_step;
    rec.T = m.completion_step - m.first_step + 1;
    const std::int64_t last_needed = m.first_step - 1 + std::llround(5.0 * static_cast<double>(rec.T));
    while (follow && sim.steps_done() < last_needed && used < max_steps) {
        sim.step();
        mids.push_back(sim.price());
        ++used;
    }
    const double eps = to_int(spec.sign);
    auto mid_end = [&](std::int64_t s) { return mids[static_cast<std::size_t>(s - launch)]; };
    rec.delta_T = eps * (mid_end(m.completion_step) - rec.p_start);
    rec.trajectory_complete = true;
    for (int k = 1; k <= kTrajectoryPoints; ++k) {
        const std::int64_t tau = std::llround(static_cast<double>(k) * static_cast<double>(rec.T) / 10.0);
        const std::int64_t s = m.first_step - 1 + tau;
        if (s <= sim.steps_done()) {
            rec.trajectory[static_cast<std::size_t>(k - 1)] = eps * (mid_end(s) - rec.p_start);
        } else {
            rec.trajectory_complete = false;
        }
    }
    sim.clear_metaorder();
    return rec;
}

MetaorderRecord run_with_metaorder(const SimParams& params, const MetaorderSpec& spec) {
    if (spec.start_step < params.warmup_steps) throw ParameterError("metaorder start_step precedes the end of warmup");
    Simulator sim(params);
    sim.run_steps(spec.start_step);
    const std::int64_t total = params.warmup_steps + params.horizon_steps;
    return execute_metaorder(sim, spec, std::max<std::int64_t>(0, total - spec.start_step));
}

} // namespace lob
