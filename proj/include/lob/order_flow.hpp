#pragma once

#include "lob/book.hpp"
#include "lob/error.hpp"
#include "lob/rng.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace lob {

// Background flow rates, all per simulation step.
struct FlowParams {
    double lambda = 0.5;   // limit orders per step per tick
    double mu = 0.1;       // market orders per step
    double nu_inf = 1e-4;  // cancellation probability per order per step
    double zeta = 1.0;     // market-order fraction exponent, f ~ zeta (1-f)^(zeta-1)

    void validate() const;
};

inline constexpr std::int64_t kMaxRunLength = 10'000'000;

// Inverse CDF of the discrete run length: L = ceil(X), P(X > x) = x^-alpha, x >= 1.
// `u` is uniform on [0, 1). Result is capped at kMaxRunLength.
std::int64_t run_length_from_uniform(double alpha, double u);

// f = 1 - u^(1/zeta), clamped to the open interval (0, 1).
double fraction_from_uniform(double zeta, double u);

// max(1, floor(f * q_best)).
Volume market_order_volume(double f, Volume q_best);

inline void require_alpha(double alpha) {
    if (!(alpha > 1.0) || !std::isfinite(alpha)) throw ParameterError("run-length exponent alpha must be > 1");
}

inline void require_zeta(double zeta) {
    if (!(zeta > 0.0) || !std::isfinite(zeta)) throw ParameterError("zeta must be > 0");
}

template <class R>
std::int64_t sample_run_length(double alpha, R& rng) {
    require_alpha(alpha);
    return run_length_from_uniform(alpha, uniform_open(rng));
}

template <class R>
double sample_fraction(double zeta, R& rng) {
    require_zeta(zeta);
    return fraction_from_uniform(zeta, uniform_open(rng));
}

template <class R>
std::vector<std::int64_t> deposit_counts(double lambda, std::size_t n_bins, R& rng) {
    if (!(lambda >= 0.0)) throw ParameterError("lambda must be >= 0");
    std::vector<std::int64_t> out(n_bins, 0);
    if (lambda == 0.0) return out;
    std::poisson_distribution<std::int64_t> dist(lambda);
    for (auto& c : out) c = dist(rng);
    return out;
}

// Renewal process of same-sign runs with power-law lengths: one active agent
// at a time trades L market orders in one direction, then a fresh agent with
// a fair-coin sign takes over. Autocorrelation decays as l^-(alpha-1).
class SignProcess {
public:
    explicit SignProcess(double alpha);
    SignProcess(double alpha, Sign current, std::int64_t remaining);

    template <class R>
    Sign next(R& rng) {
        if (remaining_ == 0) {
            current_ = coin(0.5, rng) ? Sign::buy : Sign::sell;
            remaining_ = run_length_from_uniform(alpha_, uniform_open(rng));
        }
        --remaining_;
        return current_;
    }

    Sign current_sign() const noexcept { return current_; }
    std::int64_t remaining() const noexcept { return remaining_; }
    double alpha() const noexcept { return alpha_; }
    double gamma() const noexcept { return alpha_ - 1.0; }

private:
    double alpha_;
    Sign current_ = Sign::buy;
    std::int64_t remaining_ = 0;
};

} // namespace lob
