#include "lob/theory.hpp"

#include "lob/error.hpp"
#include "lob/io.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace lob {

namespace {
void require_positive(double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x)) throw ParameterError(std::string(what) + " must be > 0");
}
} // namespace

double profile_u_star(double D, double nu_inf) {
    require_positive(D, "D");
    require_positive(nu_inf, "nu_inf");
    return std::sqrt(D / (2.0 * nu_inf));
}

double diffusivity_for_u_star(double u_star, double nu_inf) {
    require_positive(u_star, "u*");
    require_positive(nu_inf, "nu_inf");
    return 2.0 * nu_inf * u_star * u_star;
}

double stationary_profile_closed_form(double u, double lambda, double nu_inf, double D) {
    require_positive(lambda, "lambda");
    if (!(u >= 0.0)) throw ParameterError("u must be >= 0");
    const double us = profile_u_star(D, nu_inf);
    const double rho_inf = lambda / nu_inf;
    if (std::isinf(u)) return rho_inf;
    return rho_inf * -std::expm1(-u / us);
}

double transaction_rate(std::span<const double> u, std::span<const double> rho, double D0, double coarse_tol) {
    require_positive(D0, "D0");
    if (u.size() != rho.size() || u.size() < 3) throw ParameterError("transaction_rate needs >= 3 grid points");
    const double h = u[1] - u[0];
    if (!(h > 0.0) || std::abs((u[2] - u[1]) - h) > 1e-9 * h) throw ParameterError("grid must be uniform");
    const double d2 = (-3.0 * rho[0] + 4.0 * rho[1] - rho[2]) / (2.0 * h);
    const double d1 = (rho[1] - rho[0]) / h;
    const double scale = std::max(std::abs(d1), std::abs(d2));
    if (scale > 0.0 && std::abs(d2 - d1) > coarse_tol * scale) {
        throw SolverError("grid too coarse for a stable slope at u = 0 (one-sided estimates " + std::to_string(d1) +
                          " vs " + std::to_string(d2) + ")");
    }
    return 0.5 * D0 * d2;
}

double linear_slope_b(double J, double D0) {
    require_positive(D0, "D0");
    return 2.0 * J / D0;
}

double naive_impact(double Q, double b) {
    require_positive(b, "b");
    if (!(Q >= 0.0)) throw ParameterError("Q must be >= 0");
    return std::sqrt(2.0 * Q / b);
}

double sqrt_law(double Q, double V, double sigma, double Y, double delta) {
    require_positive(V, "V");
    require_positive(sigma, "sigma");
    return Y * sigma * std::pow(Q / V, delta);
}

ProfileCoefficients ProfileCoefficients::constant(double D, double lambda, double nu_inf) {
    ProfileCoefficients c;
    c.D = [D](double) { return D; };
    c.lambda = [lambda](double) { return lambda; };
    c.nu_inf = [nu_inf](double) { return nu_inf; };
    return c;
}

StationarySolution solve_stationary_numeric(const ProfileCoefficients& c, double U, std::size_t n,
                                            double flatness_tol) {
    require_positive(U, "U");
    if (n < 10) throw ParameterError("need at least 10 cells");
    const double h = U / static_cast<double>(n);
    std::vector<double> u(n + 1), dd(n + 1), lam(n + 1), nu(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        u[i] = h * static_cast<double>(i);
        dd[i] = c.diffusivity(u[i]);
        lam[i] = c.lambda(u[i]);
        nu[i] = c.nu_inf(u[i]);
        if (!(dd[i] > 0.0) || !std::isfinite(dd[i])) throw SolverError("diffusivity not positive at u=" + std::to_string(u[i]));
        if (!(nu[i] > 0.0) || !std::isfinite(nu[i])) throw SolverError("cancellation rate not positive at u=" + std::to_string(u[i]));
        if (!(lam[i] >= 0.0) || !std::isfinite(lam[i])) throw SolverError("deposition rate negative at u=" + std::to_string(u[i]));
    }
    // Unknown w_i = D_i rho_i, i = 1..n-1:
    //   (w_{i-1} - 2 w_i + w_{i+1}) / (2 h^2) - (nu_i / D_i) w_i = -lambda_i
    const double wl = 0.0;
    const double wr = dd[n] * lam[n] / nu[n];
    const std::size_t m = n - 1;
    const double off = 1.0 / (2.0 * h * h);
    std::vector<double> diag(m), rhs(m), cp(m), dp(m);
    for (std::size_t k = 0; k < m; ++k) {
        const std::size_t i = k + 1;
        diag[k] = -2.0 * off - nu[i] / dd[i];
        rhs[k] = -lam[i];
    }
    rhs[0] -= off * wl;
    rhs[m - 1] -= off * wr;
    // Thomas algorithm, sub- and super-diagonal both `off`.
    double denom = diag[0];
    if (denom == 0.0) throw SolverError("singular tridiagonal system");
    cp[0] = off / denom;
    dp[0] = rhs[0] / denom;
    for (std::size_t k = 1; k < m; ++k) {
        denom = diag[k] - off * cp[k - 1];
        if (denom == 0.0 || !std::isfinite(denom)) throw SolverError("singular tridiagonal system");
        cp[k] = off / denom;
        dp[k] = (rhs[k] - off * dp[k - 1]) / denom;
    }
    std::vector<double> w(n + 1);
    w[0] = wl;
    w[n] = wr;
    w[m] = dp[m - 1];
    for (std::size_t k = m - 1; k-- > 0;) w[k + 1] = dp[k] - cp[k] * w[k + 2];

    StationarySolution s;
    s.u = u;
    s.rho.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) s.rho[i] = w[i] / dd[i];

    for (std::size_t i = 1; i < n; ++i) {
        const double lap = off * (w[i - 1] - 2.0 * w[i] + w[i + 1]);
        const double sink = nu[i] * s.rho[i];
        const double res = lap - sink + lam[i];
        const double scale = std::abs(lap) + std::abs(sink) + std::abs(lam[i]);
        if (scale > 0.0) s.max_residual = std::max(s.max_residual, std::abs(res) / scale);
    }

    // Flatness near the far boundary: last 5% of the domain.
    const double far = std::abs(s.rho[n]);
    if (far > 0.0) {
        const std::size_t j = n - std::max<std::size_t>(1, n / 20);
        const double change = std::abs(s.rho[n] - s.rho[j]) / far;
        if (change > flatness_tol) {
            throw SolverError("profile not flat near u = U (relative change " + std::to_string(change) +
                              " over the last 5% of the domain); enlarge U");
        }
    }
    s.D0 = dd[0];
    s.J = transaction_rate(u, s.rho, s.D0, 1.0);
    return s;
}

void write_theory_profile_csv(const std::filesystem::path& csv, std::span<const double> u,
                              std::span<const double> rho) {
    CsvWriter w(csv, {"u", "rho"});
    for (std::size_t i = 0; i < u.size(); ++i) {
        w << u[i] << rho[i];
        w.end_row();
    }
}

} // namespace lob
