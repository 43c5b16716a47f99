#include "lob/analytics.hpp"
#include "lob/order_flow.hpp"
#include "lob/rng.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

using namespace lob;
using Catch::Approx;

namespace {

// Independent inversion of P(X > x) = x^-alpha by bisection.
double pareto_quantile_bisect(double alpha, double u) {
    double lo = 1.0, hi = 1e12;
    for (int i = 0; i < 200; ++i) {
        const double mid = std::sqrt(lo * hi);
        if (1.0 - std::pow(mid, -alpha) < u) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

// |x - mu| within k standard errors.
bool within(double x, double mu, double se, double k = 3.0) { return std::abs(x - mu) <= k * se; }

} // namespace

TEST_CASE("run length inverse CDF") {
    CHECK(run_length_from_uniform(1.5, 0.0) == 1);
    CHECK(run_length_from_uniform(1.5, 0.96) == 9);
    for (double u : {0.1, 0.5, 0.9, 0.96, 0.999}) {
        const double x = pareto_quantile_bisect(1.5, u);
        CHECK(run_length_from_uniform(1.5, u) == static_cast<std::int64_t>(std::ceil(x)));
    }
    CHECK(pareto_quantile_bisect(1.5, 0.96) == Approx(8.55).epsilon(1e-3));
    CHECK(run_length_from_uniform(1.5, std::nextafter(1.0, 0.0)) <= kMaxRunLength);
    Rng rng = make_rng(1);
    CHECK_THROWS_AS(sample_run_length(1.0, rng), ParameterError);
    CHECK_THROWS_AS(sample_run_length(0.5, rng), ParameterError);
}

TEST_CASE("run length tail exponent") {
    Rng rng = make_rng(3);
    const int n = 1'000'000;
    std::vector<std::int64_t> L(n);
    for (auto& l : L) l = sample_run_length(1.5, rng);
    std::vector<double> x, y;
    for (double ell = 10; ell <= 1000; ell *= 1.5) {
        std::int64_t c = 0;
        for (auto l : L) c += l > ell;
        x.push_back(ell);
        y.push_back(static_cast<double>(c) / n);
    }
    const auto fit = fit_power_law(x, y);
    CHECK(within(fit.exponent, -1.5, 0.1 / 3.0));

    // Moment check on the tail probability at l = 10: P(L > 10) = 10^-alpha.
    std::int64_t c10 = 0;
    for (auto l : L) c10 += l > 10;
    const double p = std::pow(10.0, -1.5);
    CHECK(within(static_cast<double>(c10) / n, p, std::sqrt(p * (1 - p) / n)));
}

TEST_CASE("sign process runs") {
    Rng rng = make_rng(5);
    SignProcess s(1.5, Sign::buy, 3);
    CHECK(s.next(rng) == Sign::buy);
    CHECK(s.remaining() == 2);

    int buys = 0;
    const int renewals = 100'000;
    for (int i = 0; i < renewals; ++i) {
        SignProcess fresh(1.5, Sign::sell, 0);
        buys += fresh.next(rng) == Sign::buy;
    }
    CHECK(within(static_cast<double>(buys) / renewals, 0.5, 0.5 / std::sqrt(static_cast<double>(renewals))));
}

TEST_CASE("LMF stream: unbiased and C(l) ~ l^-(alpha-1)") {
    Rng rng = make_rng(8);
    SignProcess s(1.5);
    const std::size_t n = 10'000'000;
    std::vector<int> signs(n);
    for (auto& e : signs) e = to_int(s.next(rng));

    // Block means: the long memory makes the naive error far too small.
    const std::size_t nb = 100, bl = n / nb;
    std::vector<double> bm(nb, 0.0);
    for (std::size_t i = 0; i < n; ++i) bm[i / bl] += signs[i];
    double m = 0.0, m2 = 0.0;
    for (auto& b : bm) {
        b /= static_cast<double>(bl);
        m += b;
        m2 += b * b;
    }
    m /= nb;
    const double sd = std::sqrt((m2 / nb - m * m) * nb / (nb - 1));
    CHECK(std::abs(m) < 3.0 * sd / std::sqrt(static_cast<double>(nb)));

    const auto ac = sign_autocorrelation(signs, 10'000);
    REQUIRE(ac.fit_accepted);
    CHECK(ac.gamma == Approx(0.5).margin(0.1));
}

TEST_CASE("fraction sampler") {
    CHECK(fraction_from_uniform(1.0, 0.25) == Approx(0.75));
    CHECK(fraction_from_uniform(2.0, 0.25) == Approx(0.5));
    CHECK(fraction_from_uniform(0.65, 0.0) < 1.0);
    CHECK(fraction_from_uniform(0.65, std::nextafter(1.0, 0.0)) > 0.0);
    Rng rng = make_rng(9);
    CHECK_THROWS_AS(sample_fraction(0.0, rng), ParameterError);

    for (double zeta : {0.65, 1.0, 2.5}) {
        const int n = 1'000'000;
        double s = 0.0, s2 = 0.0;
        bool inside = true;
        for (int i = 0; i < n; ++i) {
            const double f = sample_fraction(zeta, rng);
            inside = inside && f > 0.0 && f < 1.0;
            s += f;
            s2 += f * f;
        }
        CHECK(inside);
        // Beta(1, zeta) moments.
        const double mean = 1.0 / (1.0 + zeta);
        const double var = zeta / ((1.0 + zeta) * (1.0 + zeta) * (2.0 + zeta));
        CHECK(within(s / n, mean, std::sqrt(var / n)));
        const double m2 = mean * mean + var;
        // E f^4 for Beta(1, z): 24 / ((z+1)(z+2)(z+3)(z+4)), for the variance of f^2.
        const double m4 = 24.0 / ((zeta + 1) * (zeta + 2) * (zeta + 3) * (zeta + 4));
        CHECK(within(s2 / n, m2, std::sqrt((m4 - m2 * m2) / n)));
    }
}

TEST_CASE("market order volume") {
    CHECK(market_order_volume(0.99, 10) == 9);
    CHECK(market_order_volume(0.01, 10) == 1);
    CHECK(market_order_volume(0.5, 1) == 1);
    CHECK(market_order_volume(0.999, 1) == 1);
}

TEST_CASE("deposit counts") {
    Rng rng = make_rng(10);
    const auto zero = deposit_counts(0.0, 1000, rng);
    CHECK(std::all_of(zero.begin(), zero.end(), [](auto c) { return c == 0; }));
    CHECK_THROWS_AS(deposit_counts(-1.0, 3, rng), ParameterError);

    const std::size_t n = 1'000'000;
    const auto c = deposit_counts(0.5, n, rng);
    double s = 0.0, s2 = 0.0;
    std::size_t zeros = 0;
    for (auto k : c) {
        s += static_cast<double>(k);
        s2 += static_cast<double>(k * k);
        zeros += k == 0;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    CHECK(within(mean, 0.5, std::sqrt(0.5 / n)));
    // Var of the sample variance of Poisson(l): (l + 2 l^2) / n.
    CHECK(within(var, 0.5, std::sqrt((0.5 + 2 * 0.25) / n)));
    const double p0 = std::exp(-0.5);
    CHECK(within(static_cast<double>(zeros) / n, p0, std::sqrt(p0 * (1 - p0) / n)));
}

TEST_CASE("samplers are reproducible from the seed") {
    Rng a = make_rng(42), b = make_rng(42);
    SignProcess sa(1.8), sb(1.8);
    for (int i = 0; i < 10'000; ++i) {
        REQUIRE(sa.next(a) == sb.next(b));
        REQUIRE(sample_fraction(0.65, a) == sample_fraction(0.65, b));
        REQUIRE(poisson(0.5, a) == poisson(0.5, b));
    }
    CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
    CHECK(derive_seed(1, {2}) == derive_seed(1, {2}));
}

TEST_CASE("flow parameters") {
    FlowParams p;
    CHECK_NOTHROW(p.validate());
    p.zeta = 0.0;
    CHECK_THROWS_AS(p.validate(), ParameterError);
    p.zeta = 1.0;
    p.lambda = -1.0;
    CHECK_THROWS_AS(p.validate(), ParameterError);
}
