#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

namespace lob {

// rho_inf (1 - exp(-u/u*)), rho_inf = lambda/nu_inf, u* = sqrt(D / (2 nu_inf)).
double stationary_profile_closed_form(double u, double lambda, double nu_inf, double D);
double profile_u_star(double D, double nu_inf);
// D such that sqrt(D / (2 nu_inf)) = u_star.
double diffusivity_for_u_star(double u_star, double nu_inf);

// J = 1/2 d[D rho]/du at u = 0 on a uniform grid starting at u[0] = 0, using the
// second-order one-sided difference. Throws SolverError when the first- and
// second-order estimates disagree by more than `coarse_tol` (grid too coarse).
double transaction_rate(std::span<const double> u, std::span<const double> rho, double D0, double coarse_tol = 0.05);

double linear_slope_b(double J, double D0);
double naive_impact(double Q, double b);
double sqrt_law(double Q, double V, double sigma, double Y, double delta);

struct ProfileCoefficients {
    std::function<double(double)> D;        // D(u) > 0
    std::function<double(double)> lambda;   // lambda(u) >= 0
    std::function<double(double)> nu_inf;   // nu_inf(u) > 0
    double sigma2 = 0.0;                    // calligraphic D(u) = D(u) + sigma2

    double diffusivity(double u) const { return D(u) + sigma2; }
    static ProfileCoefficients constant(double D, double lambda, double nu_inf);
};

struct StationarySolution {
    std::vector<double> u;
    std::vector<double> rho;
    double max_residual = 0.0;   // relative, over interior nodes
    double J = 0.0;              // transaction_rate of the solution
    double D0 = 0.0;
};

// 1/2 (D rho)'' - nu rho + lambda = 0 on [0, U], n cells, rho(0) = 0 and
// rho(U) = lambda(U)/nu(U). Solved for w = D rho by the tridiagonal (Thomas)
// algorithm. Throws SolverError if the system is singular or if rho is still
// moving near U (domain too small).
StationarySolution solve_stationary_numeric(const ProfileCoefficients& c, double U, std::size_t n,
                                            double flatness_tol = 1e-3);

// Profile CSV `u,rho`.
void write_theory_profile_csv(const std::filesystem::path& csv, std::span<const double> u,
                              std::span<const double> rho);

} // namespace lob
