#include "lob/book.hpp"
#include "lob/rng.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

using namespace lob;
using Catch::Approx;

namespace {

Book with_levels(std::initializer_list<std::pair<Tick, Volume>> bids, std::initializer_list<std::pair<Tick, Volume>> asks) {
    Book b(100, 50);
    for (auto [p, v] : bids) b.add(Side::buy, p, v);
    for (auto [p, v] : asks) b.add(Side::sell, p, v);
    return b;
}

} // namespace

TEST_CASE("best bid is the highest non-empty bid level") {
    auto b = with_levels({{100, 2}, {98, 1}}, {});
    CHECK(b.best_bid() == 100);
    Book empty(100, 50);
    CHECK_FALSE(empty.best_bid().has_value());

    auto z = with_levels({{100, 1}, {98, 1}}, {});
    z.remove(Side::buy, 100, 1);
    CHECK(z.bid_volume(100) == 0);
    CHECK(z.best_bid() == 98);
}

TEST_CASE("midpoint") {
    CHECK(with_levels({{100, 1}}, {{102, 1}}).midpoint() == Approx(101.0));
    CHECK(with_levels({{100, 1}}, {{101, 1}}).midpoint() == Approx(100.5));
    CHECK_FALSE(with_levels({{100, 1}}, {}).midpoint().has_value());
}

TEST_CASE("deposits land on the right side of the midpoint") {
    auto b = with_levels({{100, 1}}, {{101, 1}, {103, 1}});
    REQUIRE(b.midpoint() == Approx(100.5));
    b.apply_deposit(Side::buy, 99, 1);
    CHECK(b.bid_volume(99) == 1);
    b.apply_deposit(Side::sell, 103, 2);
    CHECK(b.ask_volume(103) == 3);
    CHECK_THROWS_AS(b.apply_deposit(Side::buy, 101, 1), BookViolation);
    CHECK_THROWS_AS(b.apply_deposit(Side::sell, 100, 1), BookViolation);
    CHECK_THROWS_AS(b.apply_deposit(Side::buy, 10, 1), BookViolation);  // outside [50, 150]
    CHECK_THROWS_AS(b.apply_deposit(Side::buy, 99, 0), BookViolation);
    CHECK(b.check_invariants());
}

TEST_CASE("market order walks the book") {
    auto b = with_levels({{99, 4}}, {{101, 3}, {102, 5}});
    const Volume before = b.total_volume();
    const auto rep = b.execute_market_order(Sign::buy, 4);
    REQUIRE(rep.fills.size() == 2);
    CHECK(rep.fills[0].price == 101);
    CHECK(rep.fills[0].volume == 3);
    CHECK(rep.fills[1].price == 102);
    CHECK(rep.fills[1].volume == 1);
    CHECK(rep.vwap == Approx(101.25));
    CHECK_FALSE(rep.exhausted);
    CHECK(before - b.total_volume() == rep.executed);
    CHECK(b.best_ask() == 102);

    auto p = with_levels({{99, 1}}, {{101, 3}});
    const auto part = p.execute_market_order(Sign::buy, 5);
    CHECK(part.executed == 3);
    CHECK(part.exhausted);
    CHECK_FALSE(p.best_ask().has_value());

    // Mirror on the bid side.
    auto m = with_levels({{99, 3}, {98, 5}}, {{101, 4}});
    const auto s = m.execute_market_order(Sign::sell, 4);
    REQUIRE(s.fills.size() == 2);
    CHECK(s.fills[0].price == 99);
    CHECK(s.fills[1].price == 98);
    CHECK(s.vwap == Approx(98.75));

    Book empty(0, 10);
    const auto none = empty.execute_market_order(Sign::buy, 2);
    CHECK(none.executed == 0);
    CHECK(none.exhausted);
    CHECK(none.fills.empty());
}

TEST_CASE("deposit then execute restores the level") {
    auto b = with_levels({{99, 2}}, {{101, 1}, {104, 7}});
    const auto before = b.ask_volume(101);
    b.apply_deposit(Side::sell, 101, 3);
    const auto rep = b.execute_market_order(Sign::buy, 3);
    CHECK(rep.executed == 3);
    CHECK(b.ask_volume(101) == before);
    CHECK(b.best_ask() == 101);
}

TEST_CASE("cancellation sweep limits") {
    Rng rng = make_rng(1);
    auto b = with_levels({{99, 5}, {90, 7}}, {{101, 2}});
    CHECK(b.cancellation_sweep(0.0, rng) == 0);
    CHECK(b.total_volume() == 14);
    CHECK(b.cancellation_sweep(1.0, rng) == 14);
    CHECK(b.total_volume() == 0);
    CHECK_FALSE(b.best_bid().has_value());
    CHECK_THROWS_AS(b.cancellation_sweep(1.5, rng), ParameterError);
}

TEST_CASE("cancellation sweep: mean per level at V=1e4, nu=1e-4") {
    Rng rng = make_rng(7);
    const int sweeps = 2000;
    const Volume V = 10'000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < sweeps; ++i) {
        Book b(0, 5);
        b.add(Side::buy, -1, V);
        const double c = static_cast<double>(b.cancellation_sweep(1e-4, rng));
        sum += c;
        sum2 += c * c;
    }
    const double mean = sum / sweeps;
    const double sd = std::sqrt(sum2 / sweeps - mean * mean);
    CHECK(std::abs(mean - 1.0) < 3.0 * sd / std::sqrt(static_cast<double>(sweeps)));
}

TEST_CASE("cancellation sweep matches Binomial(V, nu): chi-square") {
    Rng rng = make_rng(11);
    const Volume V = 40;
    const double nu = 0.1;
    const int n = 20'000;
    std::vector<int> hist(V + 1, 0);
    for (int i = 0; i < n; ++i) {
        Book b(0, 3);
        b.add(Side::sell, 1, V);
        ++hist[static_cast<std::size_t>(b.cancellation_sweep(nu, rng))];
    }
    // Cells with expectation >= 5, the tails pooled into the end cells.
    std::vector<double> pmf(V + 1);
    for (Volume k = 0; k <= V; ++k) {
        pmf[static_cast<std::size_t>(k)] = std::exp(std::lgamma(V + 1.0) - std::lgamma(k + 1.0) - std::lgamma(V - k + 1.0) +
                                                    k * std::log(nu) + (V - k) * std::log1p(-nu));
    }
    std::vector<double> e, o;
    double pe = 0.0, po = 0.0;
    for (std::size_t k = 0; k <= static_cast<std::size_t>(V); ++k) {
        pe += pmf[k] * n;
        po += hist[k];
        if (pe >= 5.0) {
            e.push_back(pe);
            o.push_back(po);
            pe = po = 0.0;
        }
    }
    e.back() += pe;
    o.back() += po;
    double chi2 = 0.0;
    for (std::size_t i = 0; i < e.size(); ++i) chi2 += (o[i] - e[i]) * (o[i] - e[i]) / e[i];
    const double dof = static_cast<double>(e.size() - 1);
    // 99.9% point of chi-square, Wilson-Hilferty.
    const double z = 3.09;
    const double crit = dof * std::pow(1.0 - 2.0 / (9.0 * dof) + z * std::sqrt(2.0 / (9.0 * dof)), 3.0);
    CHECK(chi2 < crit);
}

TEST_CASE("recenter window") {
    auto b = with_levels({{99, 2}}, {{101, 2}});
    CHECK(b.recenter_window(100) == 0);
    CHECK(b.window_center() == 100);
    CHECK(b.recenter_window(110) == 0);  // [60, 160] still holds everything
    CHECK(b.total_volume() == 4);

    Book e(100, 50);
    e.add(Side::buy, 50, 3);   // at window_low
    e.add(Side::sell, 120, 1);
    CHECK(e.recenter_window(101) == 3);
    CHECK(e.bid_volume(50) == 0);
    CHECK(e.total_volume() == 1);
    CHECK(e.check_invariants());
}

TEST_CASE("grow window keeps every level") {
    auto b = with_levels({{60, 2}, {99, 1}}, {{101, 1}, {140, 5}});
    b.grow_window(130, 50);
    CHECK(b.window_low() <= 60);
    CHECK(b.window_high() >= 180);
    CHECK(b.bid_volume(60) == 2);
    CHECK(b.ask_volume(140) == 5);
    CHECK(b.best_bid() == 99);
    CHECK(b.best_ask() == 101);
    CHECK(b.check_invariants());
}

TEST_CASE("snapshot csv") {
    auto b = with_levels({{98, 1}, {99, 2}}, {{101, 3}});
    std::ostringstream os;
    write_snapshot_csv(os, b);
    CHECK(os.str() == "side,price,volume\nbuy,98,1\nbuy,99,2\nsell,101,3\n");
}

TEST_CASE("random operation sequences keep the book consistent") {
    Rng rng = make_rng(2024);
    const int sequences = 100'000;
    int failures = 0;
    Volume deposited = 0, executed = 0, cancelled = 0, dropped = 0;
    for (int s = 0; s < sequences && failures == 0; ++s) {
        Book b(0, 20);
        b.add(Side::buy, -1, 1);
        b.add(Side::sell, 1, 1);
        Volume dep = 2, ex = 0, can = 0, dr = 0;
        const int ops = 5 + static_cast<int>(rng() % 20);
        for (int k = 0; k < ops; ++k) {
            const auto mid = b.midpoint();
            switch (rng() % 5) {
            case 0:
            case 1: {
                const Tick p = b.window_low() + static_cast<Tick>(rng() % static_cast<std::uint64_t>(2 * b.window_halfwidth() + 1));
                const Side side = (rng() & 1) ? Side::buy : Side::sell;
                const Volume v = 1 + static_cast<Volume>(rng() % 4);
                bool legal = true;
                if (mid) legal = side == Side::buy ? static_cast<double>(p) < *mid : static_cast<double>(p) > *mid;
                else if (side == Side::buy && b.best_ask()) legal = p < *b.best_ask();
                else if (side == Side::sell && b.best_bid()) legal = p > *b.best_bid();
                if (legal) {
                    b.apply_deposit(side, p, v);
                    dep += v;
                } else {
                    try {
                        b.apply_deposit(side, p, v);
                        ++failures;
                    } catch (const BookViolation&) {
                    }
                }
                break;
            }
            case 2: {
                const Volume before = b.total_volume();
                const auto rep = b.execute_market_order((rng() & 1) ? Sign::buy : Sign::sell, 1 + static_cast<Volume>(rng() % 6));
                ex += rep.executed;
                if (before - b.total_volume() != rep.executed) ++failures;
                Volume fsum = 0;
                for (const auto& f : rep.fills) fsum += f.volume;
                if (fsum != rep.executed || rep.exhausted != (rep.executed < rep.requested)) ++failures;
                break;
            }
            case 3:
                can += b.cancellation_sweep(0.2, rng);
                break;
            case 4:
                dr += b.recenter_window(b.window_center() + static_cast<Tick>(rng() % 7) - 3);
                break;
            }
            if (!b.check_invariants()) ++failures;
            const auto bb = b.best_bid(), ba = b.best_ask();
            if (bb && ba && !(*bb < *ba)) ++failures;
        }
        if (b.total_volume() != dep - ex - can - dr) ++failures;
        deposited += dep;
        executed += ex;
        cancelled += can;
        dropped += dr;
    }
    CHECK(failures == 0);
    CHECK(deposited > executed);
}
