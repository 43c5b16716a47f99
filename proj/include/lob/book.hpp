#pragma once

#include "lob/error.hpp"
#include "lob/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

namespace lob {

using Tick = std::int64_t;
using Volume = std::int64_t;

enum class Side : std::uint8_t { buy, sell };

// Market order direction. A buy (+1) consumes the ask side.
enum class Sign : int { sell = -1, buy = 1 };

constexpr int to_int(Sign s) noexcept { return static_cast<int>(s); }
constexpr Sign flip(Sign s) noexcept { return s == Sign::buy ? Sign::sell : Sign::buy; }
constexpr Side opposite_side(Sign s) noexcept { return s == Sign::buy ? Side::sell : Side::buy; }
std::string_view to_string(Side s) noexcept;

struct Fill {
    Tick price = 0;
    Volume volume = 0;
};

struct ExecutionReport {
    std::vector<Fill> fills;
    Volume requested = 0;
    Volume executed = 0;
    double vwap = 0.0;  // ticks; 0 when nothing executed
    bool exhausted = false;
};

// Default level hook: every level already holds its current volume.
struct NoTouch {
    constexpr void operator()(Side, Tick) const noexcept {}
};

// Latent order book on a dense integer price grid.
//
// Levels cover [window_center - halfwidth, window_center + halfwidth]. A level
// holds buy or sell volume, never both, and the best quotes are cached.
//
// Members taking a `Touch` hook call touch(side, price) before reading a level
// that the caller may not have brought up to date. The lazy simulation engine
// uses it to materialize levels on demand; plain callers use NoTouch.
class Book {
public:
    Book(Tick window_center, Tick window_halfwidth);

    Tick window_center() const noexcept { return center_; }
    Tick window_halfwidth() const noexcept { return halfwidth_; }
    Tick window_low() const noexcept { return center_ - halfwidth_; }
    Tick window_high() const noexcept { return center_ + halfwidth_; }
    bool in_window(Tick p) const noexcept { return p >= window_low() && p <= window_high(); }

    Volume volume(Side side, Tick p) const noexcept;
    Volume bid_volume(Tick p) const noexcept { return volume(Side::buy, p); }
    Volume ask_volume(Tick p) const noexcept { return volume(Side::sell, p); }
    Volume total_volume() const noexcept { return total_; }

    std::optional<Tick> best_bid() const noexcept;
    std::optional<Tick> best_ask() const noexcept;
    std::optional<Tick> best(Side side) const noexcept {
        return side == Side::buy ? best_bid() : best_ask();
    }
    std::optional<double> midpoint() const noexcept;

    // Checked deposit: buys strictly below the midpoint, sells strictly above,
    // inside the window. With one side empty the check uses the other side's
    // best quote only. Throws BookViolation.
    void apply_deposit(Side side, Tick p, Volume volume);

    // Unchecked add/set used by the simulation engines. Keep the best cache exact
    // for increases; decreases go through remove().
    void add(Side side, Tick p, Volume volume) noexcept;
    void set_raw(Side side, Tick p, Volume volume) noexcept;

    // Removes up to `volume` from a level; rescans for a new best if it emptied.
    template <class Touch = NoTouch>
    Volume remove(Side side, Tick p, Volume volume, Touch&& touch = {});

    // Walks the opposite side from the best level outward.
    template <class Touch = NoTouch>
    ExecutionReport execute_market_order(Sign sign, Volume volume, Touch&& touch = {});

    // Binomial thinning of every level; returns the number cancelled.
    template <class R>
    Volume cancellation_sweep(double nu_inf, R& rng);

    // Moves the window, dropping volume that falls outside. Returns the dropped volume.
    Volume recenter_window(Tick new_center);

    // Re-centres and widens without dropping anything: the new window covers
    // the old one. Used by the lazy engine, whose price axis is unbounded.
    void grow_window(Tick new_center, Tick min_halfwidth);

    // Recomputes the best quote of one side by scanning outward from `from`.
    template <class Touch = NoTouch>
    void rescan_best(Side side, Tick from, Touch&& touch = {});
    void rebuild_best_cache() noexcept;

    // Checks no-crossing, non-negativity and the cached totals. For tests.
    bool check_invariants() const;

private:
    std::size_t index(Tick p) const noexcept { return static_cast<std::size_t>(p - window_low()); }
    std::vector<Volume>& levels(Side s) noexcept { return s == Side::buy ? bids_ : asks_; }
    const std::vector<Volume>& levels(Side s) const noexcept { return s == Side::buy ? bids_ : asks_; }

    Tick center_;
    Tick halfwidth_;
    std::vector<Volume> bids_;
    std::vector<Volume> asks_;
    Volume total_ = 0;
    // Sentinels: best_bid_ = window_low()-1 and best_ask_ = window_high()+1 mean empty.
    Tick best_bid_;
    Tick best_ask_;
};

// CSV export with header `side,price,volume`, bids then asks, ascending price,
// non-empty levels only.
void write_snapshot_csv(std::ostream& out, const Book& book);

// ---------------------------------------------------------------------------

template <class Touch>
void Book::rescan_best(Side side, Tick from, Touch&& touch) {
    auto& lv = levels(side);
    if (side == Side::buy) {
        Tick p = std::min(from, window_high());
        for (; p >= window_low(); --p) {
            touch(side, p);
            if (lv[index(p)] > 0) break;
        }
        best_bid_ = p;  // window_low()-1 when empty
    } else {
        Tick p = std::max(from, window_low());
        for (; p <= window_high(); ++p) {
            touch(side, p);
            if (lv[index(p)] > 0) break;
        }
        best_ask_ = p;
    }
}

template <class Touch>
Volume Book::remove(Side side, Tick p, Volume volume, Touch&& touch) {
    if (!in_window(p) || volume <= 0) return 0;
    auto& v = levels(side)[index(p)];
    const Volume taken = std::min(v, volume);
    v -= taken;
    total_ -= taken;
    if (v == 0) {
        if (side == Side::buy && p == best_bid_) rescan_best(side, p - 1, touch);
        if (side == Side::sell && p == best_ask_) rescan_best(side, p + 1, touch);
    }
    return taken;
}

template <class Touch>
ExecutionReport Book::execute_market_order(Sign sign, Volume volume, Touch&& touch) {
    ExecutionReport rep;
    rep.requested = volume;
    const Side side = opposite_side(sign);
    double notional = 0.0;
    Volume left = volume;
    while (left > 0) {
        const auto best_p = best(side);
        if (!best_p) break;
        const Tick p = *best_p;
        touch(side, p);
        const Volume avail = levels(side)[index(p)];
        if (avail == 0) {
            // The hook emptied the cached best; move on to the next live level.
            rescan_best(side, p, touch);
            continue;
        }
        const Volume take = std::min(avail, left);
        rep.fills.push_back({p, take});
        notional += static_cast<double>(take) * static_cast<double>(p);
        left -= take;
        rep.executed += take;
        remove(side, p, take, touch);
    }
    rep.exhausted = rep.executed < rep.requested;
    rep.vwap = rep.executed > 0 ? notional / static_cast<double>(rep.executed) : 0.0;
    return rep;
}

template <class R>
Volume Book::cancellation_sweep(double nu_inf, R& rng) {
    if (nu_inf < 0.0 || nu_inf > 1.0) throw ParameterError("cancellation probability outside [0,1]");
    Volume cancelled = 0;
    for (auto* lv : {&bids_, &asks_}) {
        for (auto& v : *lv) {
            if (v == 0) continue;
            const Volume c = binomial(v, nu_inf, rng);
            v -= c;
            cancelled += c;
        }
    }
    total_ -= cancelled;
    rebuild_best_cache();
    return cancelled;
}

} // namespace lob
