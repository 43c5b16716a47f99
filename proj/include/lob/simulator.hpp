#pragma once

#include "lob/book.hpp"
#include "lob/order_flow.hpp"
#include "lob/rng.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace lob {

// How levels away from the best quotes are advanced.
//  eager: every level of the window is updated every step (Poisson deposit,
//         Binomial cancellation), with a finite window that drops volume on recentring.
//  lazy:  a level is only materialized when read; the deposit/cancel history since
//         its last update is drawn in one go from its exact law
//         Binomial(V, (1-nu)^k) + Poisson(lambda (1-nu) (1-(1-nu)^k) / nu).
//         The price axis is unbounded: recentring widens the window, never drops.
enum class Engine : std::uint8_t { lazy, eager };

// Background market-order sizing.
enum class VolumeRule : std::uint8_t { fraction, unit };

// Background market-order signs.
enum class SignRule : std::uint8_t { lmf, iid };

enum class ExecutionStyle : std::uint8_t { zeta_execution, unit_execution };

std::string_view to_string(Engine e) noexcept;
std::string_view to_string(ExecutionStyle s) noexcept;
ExecutionStyle parse_execution_style(std::string_view s);
Engine parse_engine(std::string_view s);

struct SimParams {
    FlowParams flow;
    double alpha = 1.8;                    // run-length tail exponent, gamma = alpha - 1
    Tick window = 1000;                    // K, deposit support [c - K/2, c + K/2]
    std::int64_t warmup_steps = 50'000;    // 5 / nu_inf at the default rates
    std::int64_t horizon_steps = 1'000'000;
    std::uint64_t seed = 1;
    std::int64_t snapshot_interval = 0;    // steps between book snapshots; 0 disables
    Tick snapshot_depth = 200;             // ticks kept on each side of the midpoint
    VolumeRule volume_rule = VolumeRule::fraction;
    SignRule sign_rule = SignRule::lmf;
    Engine engine = Engine::lazy;
    double max_drop_fraction = 1e-6;       // of deposited volume, per run
    double min_warmup_lifetimes = 3.0;     // validate(): warmup >= this * tau_life

    double gamma() const noexcept { return alpha - 1.0; }
    double tau_life() const noexcept { return 1.0 / flow.nu_inf; }
    void validate() const;
};

struct TradeRecord {
    std::int64_t step = 0;
    Sign sign = Sign::buy;
    Volume volume = 0;
    double vwap = 0.0;
    bool is_metaorder = false;
    double midpoint_after = 0.0;  // in-memory only, not part of the CSV schema
};

struct MetaorderSpec {
    Volume Q = 1;
    Sign sign = Sign::buy;
    double phi = 0.3;
    ExecutionStyle style = ExecutionStyle::zeta_execution;
    std::int64_t start_step = 0;
    bool enabled = true;

    void validate() const;
};

// Trajectory sampled at tau/T = 0.1, 0.2, ..., 5.0.
inline constexpr int kTrajectoryPoints = 50;
inline constexpr double kTrajectoryStep = 0.1;

struct MetaorderRecord {
    MetaorderSpec spec;
    double zeta = 0.0;
    double gamma = 0.0;
    std::uint64_t seed = 0;
    double p_start = 0.0;          // midpoint just before the first child order
    double vwap_exec = 0.0;
    Volume executed = 0;
    int child_orders = 0;
    std::int64_t first_step = -1;
    std::int64_t completion_step = -1;
    std::int64_t T = 0;            // steps from the first child to completion, inclusive
    double delta_T = 0.0;          // eps * (midpoint at end of completion step - p_start)
    std::array<double, kTrajectoryPoints> trajectory{};
    bool complete = false;
    bool trajectory_complete = false;

    // eps * (vwap_exec - p_start): the execution shortfall.
    double shortfall() const noexcept { return to_int(spec.sign) * (vwap_exec - p_start); }
};

// Book levels within snapshot_depth of the midpoint, price-indexed from `low`.
struct BookSnapshot {
    std::int64_t step = 0;
    double midpoint = 0.0;
    Tick low = 0;
    std::vector<Volume> bids;
    std::vector<Volume> asks;
};

struct RunStats {
    std::int64_t steps = 0;
    Volume deposited = 0;
    Volume executed = 0;
    Volume cancelled = 0;
    Volume dropped = 0;
    std::int64_t market_events = 0;
    std::int64_t trades = 0;
    std::int64_t exhausted_orders = 0;
    std::int64_t recentres = 0;
};

struct MetaorderProgress {
    MetaorderSpec spec;
    std::int64_t launch_step = 0;   // last completed step when launched
    Volume executed = 0;
    double notional = 0.0;
    int child_orders = 0;
    std::optional<double> p_start;
    std::int64_t first_step = -1;
    std::int64_t completion_step = -1;
    bool done() const noexcept { return executed >= spec.Q; }
};

class Simulator {
public:
    explicit Simulator(SimParams params);
    // Starts from the given book, treated as the state at the end of step 0.
    Simulator(SimParams params, Book initial);

    // Advances one step: deposits, market orders, cancellations, window update.
    void step();
    void run_steps(std::int64_t n);

    std::span<const TradeRecord> last_trades() const noexcept { return trades_; }
    std::int64_t steps_done() const noexcept { return t_; }
    const Book& book() const noexcept { return book_; }
    const SimParams& params() const noexcept { return params_; }
    const RunStats& stats() const noexcept { return stats_; }
    // Midpoint, or the last defined midpoint when a side is empty.
    double price() const noexcept;

    // Brings every in-window level up to the end of the last step.
    void materialize(Tick low, Tick high);
    BookSnapshot snapshot();

    // Metaorder agent, active from the next step until Q is executed.
    void launch_metaorder(const MetaorderSpec& spec);
    const std::optional<MetaorderProgress>& metaorder() const noexcept { return meta_; }
    void clear_metaorder() noexcept { meta_.reset(); }

private:

    void deposit_phase();
    void market_phase();
    void cancel_phase();
    void window_phase();

    void execute_event();
    void record_trade(Sign sign, const ExecutionReport& rep, bool is_meta);

    // Lazy-engine level management.
    std::size_t lazy_index(Tick p) const noexcept { return static_cast<std::size_t>(p - book_.window_low()); }
    void prepare(Tick p);                 // current to the deposit phase of step t_
    void sync_to(Tick p, std::int64_t s); // current to the end of step s
    Side side_of(Tick p) const noexcept { return static_cast<double>(p) < ref_mid_ ? Side::buy : Side::sell; }
    void remap_lazy_state(Tick old_low, std::size_t old_size);

    SimParams params_;
    Book book_;
    Rng flow_rng_;
    Rng sign_rng_;
    Rng meta_rng_;
    SignProcess signs_;
    double log_survival_;   // log(1 - nu)
    double ref_mid_;        // midpoint at the start of the current step
    std::int64_t t_ = 0;
    Tick recentre_trigger_;
    std::vector<std::int64_t> synced_;       // lazy: level current to end of this step
    std::vector<std::int64_t> active_step_;  // lazy: step whose deposit was applied
    std::vector<Tick> active_;
    std::vector<TradeRecord> trades_;
    RunStats stats_;
    std::optional<MetaorderProgress> meta_;
};

struct RecordOptions {
    bool step_midpoints = true;
    bool trades = true;
    bool trade_midpoints = true;
    bool snapshots = true;
};

struct RunRecording {
    std::vector<double> step_midpoints;   // end of each recorded step
    std::vector<TradeRecord> trades;
    std::vector<double> trade_midpoints;  // midpoint right after each trade
    std::vector<BookSnapshot> snapshots;
    RunStats stats;
    double drop_fraction = 0.0;
};

// Warmup (not recorded), then horizon_steps recorded steps.
// Throws RunRejected if the dropped-volume budget is exceeded.
RunRecording run(const SimParams& params, const RecordOptions& opts = {});

// Steps an existing simulator through one metaorder: launch, execution and,
// with `follow`, the post-completion trajectory up to tau = 5T. `max_steps`
// bounds the whole episode.
MetaorderRecord execute_metaorder(Simulator& sim, const MetaorderSpec& spec, std::int64_t max_steps,
                                  bool follow = true);

// Fresh simulator; the metaorder starts at spec.start_step (>= warmup_steps).
MetaorderRecord run_with_metaorder(const SimParams& params, const MetaorderSpec& spec);

void check_drop_budget(const RunStats& stats, double max_fraction);

} // namespace lob
