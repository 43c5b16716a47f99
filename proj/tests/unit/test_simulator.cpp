#include "lob/analytics.hpp"
#include "lob/simulator.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

using namespace lob;
using Catch::Approx;

namespace {

SimParams small_params(Engine e, std::uint64_t seed = 1) {
    SimParams p;
    p.engine = e;
    p.seed = seed;
    p.window = 200;
    p.warmup_steps = 0;
    p.min_warmup_lifetimes = 0.0;
    p.horizon_steps = 100;
    return p;
}

Book two_sided(Tick bid, Volume vb, Tick ask, Volume va, Tick hw = 100) {
    Book b(0, hw);
    b.add(Side::buy, bid, vb);
    b.add(Side::sell, ask, va);
    return b;
}

void volumes_equal(const Book& a, const Book& b) {
    REQUIRE(a.window_low() == b.window_low());
    REQUIRE(a.window_high() == b.window_high());
    for (Tick p = a.window_low(); p <= a.window_high(); ++p) {
        REQUIRE(a.bid_volume(p) == b.bid_volume(p));
        REQUIRE(a.ask_volume(p) == b.ask_volume(p));
    }
}

} // namespace

TEST_CASE("null dynamics leave the book alone") {
    for (Engine e : {Engine::lazy, Engine::eager}) {
        auto p = small_params(e);
        p.flow = {0.0, 0.0, 0.0, 1.0};
        const Book init = two_sided(-1, 3, 2, 4);
        Simulator sim(p, init);
        sim.run_steps(50);
        sim.materialize(sim.book().window_low(), sim.book().window_high());
        CHECK(sim.stats().trades == 0);
        CHECK(sim.book().total_volume() == 7);
        volumes_equal(sim.book(), init);
    }
}

TEST_CASE("deposition only: linear growth, fixed midpoint") {
    for (Engine e : {Engine::lazy, Engine::eager}) {
        auto p = small_params(e, 3);
        p.flow = {0.5, 0.0, 0.0, 1.0};
        Simulator sim(p, two_sided(-1, 1, 1, 1));  // midpoint 0: tick 0 never receives
        const int steps = 400;
        sim.run_steps(steps);
        sim.materialize(sim.book().window_low(), sim.book().window_high());
        CHECK(sim.price() == 0.0);
        CHECK(sim.book().bid_volume(0) == 0);
        CHECK(sim.book().ask_volume(0) == 0);
        const double ticks = static_cast<double>(sim.book().window_high() - sim.book().window_low());
        const double expect = 0.5 * ticks * steps;
        const double got = static_cast<double>(sim.book().total_volume() - 2);
        CHECK(std::abs(got - expect) < 4.0 * std::sqrt(expect));
        CHECK(sim.stats().deposited == sim.book().total_volume() - 2);
    }
}

TEST_CASE("far book approaches lambda / nu after warmup") {
    SimParams p;
    p.seed = 17;
    p.alpha = 1.8;
    p.flow.zeta = 0.65;
    p.horizon_steps = 50'000;
    p.snapshot_interval = 5'000;
    const auto rec = run(p);
    REQUIRE(rec.snapshots.size() == 10);
    const auto prof = mean_book_profile(rec.snapshots, 150.0);
    double far = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < prof.u.size(); ++i) {
        if (prof.u[i] >= 100.0) {
            far += prof.rho[i];
            ++n;
        }
    }
    CHECK(far / n == Approx(5000.0).epsilon(0.02));
}

TEST_CASE("run: empty horizon, determinism") {
    auto p = small_params(Engine::lazy);
    p.horizon_steps = 0;
    p.warmup_steps = 10;
    const auto empty = run(p);
    CHECK(empty.step_midpoints.empty());
    CHECK(empty.trades.empty());
    CHECK(empty.snapshots.empty());

    SimParams q;
    q.seed = 99;
    q.horizon_steps = 20'000;
    q.snapshot_interval = 5'000;
    const auto a = run(q), b = run(q);
    CHECK(a.step_midpoints == b.step_midpoints);
    REQUIRE(a.trades.size() == b.trades.size());
    for (std::size_t i = 0; i < a.trades.size(); ++i) {
        REQUIRE(a.trades[i].step == b.trades[i].step);
        REQUIRE(a.trades[i].volume == b.trades[i].volume);
        REQUIRE(a.trades[i].vwap == b.trades[i].vwap);
    }
    for (std::size_t i = 0; i < a.snapshots.size(); ++i) CHECK(a.snapshots[i].bids == b.snapshots[i].bids);
    q.seed = 100;
    CHECK(run(q).step_midpoints != a.step_midpoints);
}

TEST_CASE("event order: cancelled orders are not tradable, same-step deposits are") {
    // nu = 1 wipes everything at the end of the step, yet the step's market
    // orders still meet the pre-existing and freshly deposited volume.
    for (Engine e : {Engine::lazy, Engine::eager}) {
        auto p = small_params(e, 5);
        p.flow = {0.0, 20.0, 1.0, 1.0};
        p.volume_rule = VolumeRule::unit;
        Simulator sim(p, two_sided(-1, 30, 1, 30));
        sim.step();
        CHECK(sim.stats().executed > 0);
        CHECK(sim.stats().executed + sim.stats().cancelled == 60);
        CHECK(sim.book().total_volume() == 0);
    }
    // Quotes far from the centre: the only volume near the price was
    // deposited in this very step.
    for (Engine e : {Engine::lazy, Engine::eager}) {
        auto p = small_params(e, 6);
        p.flow = {1.0, 5.0, 0.0, 1.0};
        p.volume_rule = VolumeRule::unit;
        Simulator sim(p, two_sided(-50, 1, 50, 1));
        sim.step();
        REQUIRE(!sim.last_trades().empty());
        for (const auto& t : sim.last_trades()) {
            CHECK(std::abs(t.vwap) < 50.0);
        }
    }
}

TEST_CASE("per-step volume conservation") {
    for (Engine e : {Engine::lazy, Engine::eager}) {
        SimParams p;
        p.engine = e;
        p.seed = 21;
        p.window = 200;
        p.flow = {0.5, 0.1, 1e-3, 0.65};
        p.min_warmup_lifetimes = 0.0;
        Simulator sim(p);
        sim.run_steps(3000);
        for (int i = 0; i < 300; ++i) {
            sim.materialize(sim.book().window_low(), sim.book().window_high());
            const RunStats s0 = sim.stats();
            const Volume v0 = sim.book().total_volume();
            sim.step();
            sim.materialize(sim.book().window_low(), sim.book().window_high());
            const RunStats s1 = sim.stats();
            const Volume dv = sim.book().total_volume() - v0;
            REQUIRE(dv == (s1.deposited - s0.deposited) - (s1.executed - s0.executed) - (s1.cancelled - s0.cancelled) -
                              (s1.dropped - s0.dropped));
            REQUIRE(sim.book().check_invariants());
        }
    }
}

TEST_CASE("lazy and eager engines agree in law") {
    // Shorter lifetime so that a few hundred thousand steps cover many lifetimes.
    auto stats_for = [](Engine e, std::uint64_t seed) {
        SimParams p;
        p.engine = e;
        p.seed = seed;
        p.flow = {0.5, 0.1, 1e-3, 0.65};
        p.alpha = 1.8;
        p.window = 400;
        p.warmup_steps = 10'000;
        p.horizon_steps = 60'000;
        p.snapshot_interval = 500;
        p.max_drop_fraction = 1.0;
        const auto rec = run(p);
        const auto prof = mean_book_profile(rec.snapshots, 40.0);
        double vol = 0.0;
        for (const auto& t : rec.trades) vol += static_cast<double>(t.volume);
        struct Out {
            double J, rho2, rho10, rho40;
        };
        auto at = [&](double u) {
            for (std::size_t i = 0; i < prof.u.size(); ++i)
                if (prof.u[i] == u) return prof.rho[i];
            return std::nan("");
        };
        return Out{vol / static_cast<double>(rec.step_midpoints.size()), at(2.0), at(10.0), at(40.0)};
    };
    const int reps = 4;
    std::vector<double> jl, je, r2l, r2e, r10l, r10e, r40l, r40e;
    for (int r = 0; r < reps; ++r) {
        const auto l = stats_for(Engine::lazy, 100 + r);
        const auto e = stats_for(Engine::eager, 200 + r);
        jl.push_back(l.J);
        je.push_back(e.J);
        r2l.push_back(l.rho2);
        r2e.push_back(e.rho2);
        r10l.push_back(l.rho10);
        r10e.push_back(e.rho10);
        r40l.push_back(l.rho40);
        r40e.push_back(e.rho40);
    }
    auto agree = [&](const std::vector<double>& a, const std::vector<double>& b) {
        auto ms = [](const std::vector<double>& v) {
            const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
            double s = 0.0;
            for (double x : v) s += (x - m) * (x - m);
            return std::pair{m, s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size())};
        };
        const auto [ma, va] = ms(a);
        const auto [mb, vb] = ms(b);
        INFO("lazy " << ma << " eager " << mb);
        // 4 combined standard errors, plus 3% for the small-sample error estimate.
        return std::abs(ma - mb) <= 4.0 * std::sqrt(va + vb) + 0.03 * std::abs(mb);
    };
    CHECK(agree(jl, je));
    CHECK(agree(r2l, r2e));
    CHECK(agree(r10l, r10e));
    CHECK(agree(r40l, r40e));
}

TEST_CASE("both sides empty is a degenerate state") {
    auto p = small_params(Engine::eager, 2);
    p.flow = {0.0, 50.0, 0.0, 1.0};
    p.volume_rule = VolumeRule::unit;
    Simulator sim(p, two_sided(-1, 1, 1, 1));
    CHECK_THROWS_AS(sim.run_steps(10), DegenerateState);
}

TEST_CASE("drop budget") {
    RunStats s;
    s.deposited = 10'000'000;
    s.dropped = 5;
    CHECK_NOTHROW(check_drop_budget(s, 1e-6));
    s.dropped = 50;
    CHECK_THROWS_AS(check_drop_budget(s, 1e-6), RunRejected);
}

TEST_CASE("parameter validation") {
    SimParams p;
    CHECK_NOTHROW(p.validate());
    p.warmup_steps = 100;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p = SimParams{};
    p.alpha = 1.0;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    MetaorderSpec m;
    m.phi = 0.0;
    CHECK_THROWS_AS(m.validate(), ParameterError);
    m.phi = 1.0;
    m.Q = 0;
    CHECK_THROWS_AS(m.validate(), ParameterError);
}

TEST_CASE("metaorder: single unit child") {
    SimParams p;
    p.seed = 4;
    p.flow.zeta = 0.65;
    p.warmup_steps = 30'000;
    p.horizon_steps = 100'000;
    MetaorderSpec m;
    m.Q = 1;
    m.phi = 0.5;
    m.style = ExecutionStyle::unit_execution;
    m.start_step = p.warmup_steps;
    const auto r = run_with_metaorder(p, m);
    REQUIRE(r.complete);
    CHECK(r.child_orders == 1);
    CHECK(r.executed == 1);
    CHECK(r.T == 1);
    CHECK(r.first_step == r.completion_step);
    CHECK(r.trajectory_complete);
    // tau/T = 1 sample is the completion-step midpoint.
    CHECK(r.trajectory[9] == r.delta_T);
}

TEST_CASE("metaorder: full participation takes about Q / mu steps") {
    SimParams p;
    p.flow.zeta = 0.65;
    p.warmup_steps = 30'000;
    p.min_warmup_lifetimes = 0.0;
    const Volume Q = 50;
    Simulator sim(p);
    sim.run_steps(p.warmup_steps);
    double sum = 0.0;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
        MetaorderSpec m;
        m.Q = Q;
        m.phi = 1.0;
        m.style = ExecutionStyle::unit_execution;
        const auto r = execute_metaorder(sim, m, 100'000, false);
        REQUIRE(r.complete);
        REQUIRE(r.executed == Q);
        REQUIRE(r.child_orders == Q);
        sum += static_cast<double>(r.T);
    }
    // Arrivals are Poisson(mu) per step: after the first child, Q - 1 more
    // events take (Q - 1) / mu steps on average, plus the first step.
    const double expect = (Q - 1) / 0.1 + 1.0;
    // Per-metaorder sd is about sqrt(Q - 1) / mu.
    const double se = std::sqrt(Q - 1.0) / 0.1 / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(sum / n - expect) < 3.0 * se + 1.0);
}

TEST_CASE("metaorder: zeta execution hits Q exactly, fields consistent") {
    SimParams p;
    p.seed = 12;
    p.flow.zeta = 0.65;
    p.warmup_steps = 30'000;
    Simulator sim(p);
    sim.run_steps(p.warmup_steps);
    for (int i = 0; i < 20; ++i) {
        sim.run_steps(2000);
        MetaorderSpec m;
        m.Q = 200 + 37 * i;
        m.phi = 0.3;
        m.sign = i % 2 ? Sign::sell : Sign::buy;
        m.style = ExecutionStyle::zeta_execution;
        const auto r = execute_metaorder(sim, m, 1'000'000);
        REQUIRE(r.complete);
        CHECK(r.executed == m.Q);
        CHECK(r.T == r.completion_step - r.first_step + 1);
        CHECK(std::isfinite(r.shortfall()));
        CHECK(r.trajectory_complete);
        CHECK(r.trajectory[9] == r.delta_T);
        CHECK_FALSE(sim.metaorder().has_value());
    }
}

TEST_CASE("metaorder trades are flagged and leave the background sign stream alone") {
    SimParams p;
    p.seed = 31;
    p.flow.zeta = 0.65;
    p.warmup_steps = 20'000;
    p.min_warmup_lifetimes = 0.0;
    Simulator a(p), b(p);
    a.run_steps(p.warmup_steps);
    b.run_steps(p.warmup_steps);
    MetaorderSpec m;
    m.Q = 100;
    m.phi = 0.5;
    a.launch_metaorder(m);
    std::vector<int> sa, sb;
    int meta = 0;
    for (int i = 0; i < 20'000; ++i) {
        a.step();
        b.step();
        for (const auto& t : a.last_trades()) {
            if (t.is_metaorder) ++meta;
            else sa.push_back(to_int(t.sign));
        }
        for (const auto& t : b.last_trades()) sb.push_back(to_int(t.sign));
    }
    CHECK(meta > 0);
    // Background signs come from the same LMF stream; with the agent taking
    // some slots, a's background sequence is a prefix-aligned copy of b's.
    const std::size_t n = std::min(sa.size(), sb.size()) / 2;
    CHECK(std::equal(sa.begin(), sa.begin() + static_cast<std::ptrdiff_t>(n), sb.begin()));
}

TEST_CASE("disabled metaorder is the plain run") {
    SimParams p;
    p.seed = 77;
    p.flow.zeta = 0.65;
    p.warmup_steps = 30'000;
    p.horizon_steps = 20'000;
    MetaorderSpec m;
    m.enabled = false;
    m.start_step = p.warmup_steps;
    Simulator a(p);
    a.run_steps(p.warmup_steps + p.horizon_steps);
    Simulator b(p);
    b.run_steps(m.start_step);
    const auto r = execute_metaorder(b, m, p.horizon_steps);
    CHECK_FALSE(r.complete);
    CHECK(a.steps_done() == b.steps_done());
    CHECK(a.price() == b.price());
    CHECK(a.stats().executed == b.stats().executed);
    CHECK(a.stats().trades == b.stats().trades);
    CHECK(run_with_metaorder(p, m).executed == 0);
}

TEST_CASE("snapshot frame keeps the half-tick offset") {
    auto p = small_params(Engine::lazy);
    p.flow = {0.0, 0.0, 0.0, 1.0};
    Book b(0, 50);
    b.add(Side::buy, -1, 2);
    b.add(Side::buy, -3, 1);
    b.add(Side::sell, 2, 5);
    Simulator sim(p, b);
    sim.step();
    const auto s = sim.snapshot();
    CHECK(s.midpoint == 0.5);
    const auto prof = mean_book_profile(std::vector<BookSnapshot>{s}, 4.0);
    // Odd spread: only half-integer distances occur.
    REQUIRE(prof.u.size() == 4);
    CHECK(prof.u[0] == 0.5);
    CHECK(prof.u[3] == 3.5);
    // u = 1.5: bid -1 (2) and ask 2 (5), pooled over the two sides.
    CHECK(prof.rho[1] == Approx(3.5));
    // u = 3.5: bid -3 (1), ask 4 (0).
    CHECK(prof.rho[3] == Approx(0.5));
}
