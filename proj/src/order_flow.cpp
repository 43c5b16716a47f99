#include "lob/order_flow.hpp"

#include <algorithm>
#include <limits>

namespace lob {

void FlowParams::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ParameterError("lambda must be >= 0");
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw ParameterError("mu must be >= 0");
    if (!(nu_inf >= 0.0 && nu_inf <= 1.0)) throw ParameterError("nu_inf must lie in [0, 1]");
    require_zeta(zeta);
}

std::int64_t run_length_from_uniform(double alpha, double u) {
    require_alpha(alpha);
    // X = (1-u)^(-1/alpha) computed in log space.
    const double log_x = -std::log1p(-u) / alpha;
    if (log_x >= std::log(static_cast<double>(kMaxRunLength))) return kMaxRunLength;
    const double x = std::exp(log_x);
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::ceil(x)), 1, kMaxRunLength);
}

double fraction_from_uniform(double zeta, double u) {
    require_zeta(zeta);
    const double f = -std::expm1(std::log(u) / zeta);
    constexpr double lo = std::numeric_limits<double>::min();
    const double hi = std::nextafter(1.0, 0.0);
    return std::clamp(f, lo, hi);
}

Volume market_order_volume(double f, Volume q_best) {
    if (q_best < 1) throw ParameterError("q_best must be >= 1");
    const auto v = static_cast<Volume>(std::floor(f * static_cast<double>(q_best)));
    return std::max<Volume>(1, v);
}

SignProcess::SignProcess(double alpha) : alpha_(alpha) {
    require_alpha(alpha);
}

SignProcess::SignProcess(double alpha, Sign current, std::int64_t remaining)
    : alpha_(alpha), current_(current), remaining_(remaining) {
    require_alpha(alpha);
    if (remaining < 0) throw ParameterError("remaining run length must be >= 0");
}

} // namespace lob
