#include "lob/book.hpp"

#include <algorithm>
#include <ostream>
#include <string>

namespace lob {

std::string_view to_string(Side s) noexcept {
    return s == Side::buy ? "buy" : "sell";
}

Book::Book(Tick window_center, Tick window_halfwidth)
    : center_(window_center), halfwidth_(window_halfwidth) {
    if (window_halfwidth < 1) throw ParameterError("window halfwidth must be >= 1");
    const auto n = static_cast<std::size_t>(2 * halfwidth_ + 1);
    bids_.assign(n, 0);
    asks_.assign(n, 0);
    best_bid_ = window_low() - 1;
    best_ask_ = window_high() + 1;
}

Volume Book::volume(Side side, Tick p) const noexcept {
    if (!in_window(p)) return 0;
    return levels(side)[index(p)];
}

std::optional<Tick> Book::best_bid() const noexcept {
    if (best_bid_ < window_low()) return std::nullopt;
    return best_bid_;
}

std::optional<Tick> Book::best_ask() const noexcept {
    if (best_ask_ > window_high()) return std::nullopt;
    return best_ask_;
}

std::optional<double> Book::midpoint() const noexcept {
    const auto b = best_bid();
    const auto a = best_ask();
    if (!b || !a) return std::nullopt;
    return 0.5 * static_cast<double>(*b + *a);
}

void Book::apply_deposit(Side side, Tick p, Volume volume) {
    if (volume < 1) throw BookViolation("deposit volume must be positive");
    if (!in_window(p)) {
        throw BookViolation("deposit at tick " + std::to_string(p) + " outside the active window");
    }
    const auto b = best_bid();
    const auto a = best_ask();
    const auto mid = midpoint();
    bool crossing;
    if (side == Side::buy) {
        crossing = mid ? static_cast<double>(p) >= *mid : (a && p >= *a);
    } else {
        crossing = mid ? static_cast<double>(p) <= *mid : (b && p <= *b);
    }
    if (crossing) {
        throw BookViolation(std::string("crossing ") + std::string(to_string(side)) + " deposit at tick " +
                            std::to_string(p));
    }
    add(side, p, volume);
}

void Book::add(Side side, Tick p, Volume volume) noexcept {
    if (volume <= 0 || !in_window(p)) return;
    levels(side)[index(p)] += volume;
    total_ += volume;
    if (side == Side::buy) {
        if (p > best_bid_) best_bid_ = p;
    } else {
        if (p < best_ask_) best_ask_ = p;
    }
}

void Book::set_raw(Side side, Tick p, Volume volume) noexcept {
    if (!in_window(p)) return;
    auto& v = levels(side)[index(p)];
    total_ += volume - v;
    v = volume;
    if (volume > 0) {
        if (side == Side::buy && p > best_bid_) best_bid_ = p;
        if (side == Side::sell && p < best_ask_) best_ask_ = p;
    }
}

void Book::rebuild_best_cache() noexcept {
    best_bid_ = window_low() - 1;
    for (Tick p = window_high(); p >= window_low(); --p) {
        if (bids_[index(p)] > 0) {
            best_bid_ = p;
            break;
        }
    }
    best_ask_ = window_high() + 1;
    for (Tick p = window_low(); p <= window_high(); ++p) {
        if (asks_[index(p)] > 0) {
            best_ask_ = p;
            break;
        }
    }
}

Volume Book::recenter_window(Tick new_center) {
    if (new_center == center_) return 0;
    const Tick old_low = window_low();
    std::vector<Volume> nb(bids_.size(), 0);
    std::vector<Volume> na(asks_.size(), 0);
    const Tick new_low = new_center - halfwidth_;
    Volume dropped = 0;
    for (std::size_t i = 0; i < bids_.size(); ++i) {
        const Tick p = old_low + static_cast<Tick>(i);
        const Tick j = p - new_low;
        if (j >= 0 && j < static_cast<Tick>(nb.size())) {
            nb[static_cast<std::size_t>(j)] = bids_[i];
            na[static_cast<std::size_t>(j)] = asks_[i];
        } else {
            dropped += bids_[i] + asks_[i];
        }
    }
    bids_.swap(nb);
    asks_.swap(na);
    center_ = new_center;
    total_ -= dropped;
    rebuild_best_cache();
    return dropped;
}

void Book::grow_window(Tick new_center, Tick min_halfwidth) {
    const Tick low = std::min(window_low(), new_center - min_halfwidth);
    const Tick high = std::max(window_high(), new_center + min_halfwidth);
    // Symmetric window around the new centre covering [low, high].
    const Tick hw = std::max(new_center - low, high - new_center);
    if (new_center == center_ && hw == halfwidth_) return;
    const Tick old_low = window_low();
    const auto n = static_cast<std::size_t>(2 * hw + 1);
    std::vector<Volume> nb(n, 0);
    std::vector<Volume> na(n, 0);
    const Tick shift = old_low - (new_center - hw);
    for (std::size_t i = 0; i < bids_.size(); ++i) {
        nb[i + static_cast<std::size_t>(shift)] = bids_[i];
        na[i + static_cast<std::size_t>(shift)] = asks_[i];
    }
    bids_.swap(nb);
    asks_.swap(na);
    center_ = new_center;
    halfwidth_ = hw;
    rebuild_best_cache();
}

bool Book::check_invariants() const {
    Volume sum = 0;
    for (std::size_t i = 0; i < bids_.size(); ++i) {
        if (bids_[i] < 0 || asks_[i] < 0) return false;
        if (bids_[i] > 0 && asks_[i] > 0) return false;
        sum += bids_[i] + asks_[i];
    }
    if (sum != total_) return false;
    Book copy = *this;
    copy.rebuild_best_cache();
    if (copy.best_bid_ != best_bid_ || copy.best_ask_ != best_ask_) return false;
    const auto b = best_bid();
    const auto a = best_ask();
    return !(b && a && *b >= *a);
}

void write_snapshot_csv(std::ostream& out, const Book& book) {
    out << "side,price,volume\n";
    for (Side s : {Side::buy, Side::sell}) {
        for (Tick p = book.window_low(); p <= book.window_high(); ++p) {
            const Volume v = book.volume(s, p);
            if (v > 0) out << to_string(s) << ',' << p << ',' << v << '\n';
        }
    }
}

} // namespace lob
