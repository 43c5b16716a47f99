#pragma once

#include "lob/io.hpp"
#include "lob/order_flow.hpp"
#include "lob/simulator.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lob {

// ---------------------------------------------------------------------------
// Price diffusion

// sigma^2(l) = <(p_{t+l} - p_t)^2> / l over all overlapping windows.
double diffusion_constant(std::span<const double> prices, std::size_t lag);

// sigma(l1) / sigma(l2). A walk whose lag-dependent diffusion constant falls
// with the lag (mean reversion, confinement) gives values above 1; a walk with
// persistent increments gives values below 1.
double diffusivity_ratio(std::span<const double> prices, std::size_t l1 = 10, std::size_t l2 = 1000);

struct RatioEstimate {
    double ratio = 0.0;
    double stderr_ = 0.0;  // spread over independent blocks of the series
    std::size_t blocks = 0;
};
// Ratio on the whole series, error from the spread of the ratio over `blocks`
// contiguous sub-series.
RatioEstimate diffusivity_ratio_with_error(std::span<const double> prices, std::size_t l1, std::size_t l2,
                                           std::size_t blocks = 10);

// ---------------------------------------------------------------------------
// Sign autocorrelation

// y = prefactor * x^exponent, fitted by OLS in log-log coordinates.
struct PowerLawFitResult {
    double exponent = 0.0;
    double prefactor = 0.0;
    double exponent_se = 0.0;
    double log_prefactor_se = 0.0;
    std::size_t points = 0;
};

struct SignAutocorrelation {
    std::vector<double> C;     // C[l-1] = <e_t e_{t+l}>, l = 1..lmax
    bool fit_accepted = false;
    std::string fit_note;
    double gamma = 0.0;        // C(l) ~ l^-gamma over l in [10, lmax/10]
    double gamma_se = 0.0;
};

// C(l) by FFT (zero-padded circular correlation), normalised per available pair.
std::vector<double> autocorrelation_fft(std::span<const double> x, std::size_t lmax);

SignAutocorrelation sign_autocorrelation(std::span<const int> signs, std::size_t lmax);

// ---------------------------------------------------------------------------
// Book profile

struct BookProfile {
    std::vector<double> u;             // 0.5, 1.0, 1.5, ...
    std::vector<double> rho;           // mean latent volume per level at distance u
    std::vector<std::int64_t> samples; // (snapshot, side) observations behind each value
};

// Side-pooled mean volume versus distance u = |price - midpoint| from the midpoint,
// on the half-tick grid. Each u only occurs for one spread parity, so every bin
// is averaged over the snapshots in which it occurs. Empty levels count as zeros.
BookProfile mean_book_profile(std::span<const BookSnapshot> snapshots, double u_max);

struct ExponentialFit {
    double rho_inf = 0.0;
    double u_star = 0.0;
    double rss = 0.0;
    bool at_upper_bound = false;   // u* ran to the search limit: only the slope rho_inf/u* is identified
    std::size_t points = 0;
};

// Least squares fit of rho_inf (1 - exp(-u / u*)). rho_inf is profiled out in
// closed form; u* is found by Brent minimisation over log u*.
ExponentialFit fit_exponential_profile(std::span<const double> u, std::span<const double> rho);

// ---------------------------------------------------------------------------
// Quantities derived from one metaorder-free run

struct DerivedQuantities {
    double rho_inf = 0.0;
    double r = 0.0;
    double tau_life = 0.0;
    double J = 0.0;           // executed volume per step
    double V = 0.0;           // J tau_life
    double sigma = 0.0;       // rms midpoint change over tau_life steps
    double D_step = 0.0;      // midpoint variance per step
    double trade_rate = 0.0;  // trades per step
    double u_star = 0.0;      // sqrt(D_step / (2 nu_inf))
    double b = 0.0;           // 2 J / D_step
};

// Needs rec.step_midpoints, rec.trade_midpoints and rec.trades.
// D_step averages sigma^2(l) over l in [10, 100] transactions and converts to
// steps with the trades-per-step rate.
DerivedQuantities derive_quantities(const FlowParams& flow, const RunRecording& rec);

// ---------------------------------------------------------------------------
// Metaorder impact

enum class ImpactMeasure : std::uint8_t { shortfall, endpoint };

struct ImpactOptions {
    std::size_t bins = 10;
    double x_min = 0.0;           // Q/V range; 0 means taken from the data
    double x_max = 0.0;
    std::size_t min_per_bin = 5;
    std::size_t bootstrap = 200;
    std::uint64_t bootstrap_seed = 12345;
    ImpactMeasure measure = ImpactMeasure::shortfall;
};

struct ImpactBin {
    double x_lo = 0.0, x_hi = 0.0;
    double x = 0.0;        // mean Q/V in the bin
    double y = 0.0;        // mean Delta/sigma
    double y_se = 0.0;
    std::size_t n = 0;
};

struct ImpactCurve {
    std::vector<ImpactBin> bins;     // populated bins only
    double Y = 0.0, delta = 0.0;     // Delta/sigma = Y (Q/V)^delta
    double Y_se = 0.0, delta_se = 0.0;
    std::size_t fit_bins = 0;
    std::size_t used = 0;
    std::size_t excluded = 0;        // incomplete records
};

ImpactCurve impact_curve(std::span<const MetaorderRecord> records, const DerivedQuantities& dq,
                         const ImpactOptions& opts = {});

// Points with x <= 0 or y <= 0 are skipped. Needs two usable points; standard
// errors need three.
PowerLawFitResult fit_power_law(std::span<const double> x, std::span<const double> y);

// ---------------------------------------------------------------------------
// Impact decay

struct DecayCurve {
    std::vector<double> tau_over_T;
    std::vector<double> ratio;       // mean(Delta_tau) / mean(Delta_T)
    std::vector<double> ratio_se;
    double plateau = 0.0;            // mean ratio over tau/T in [3, 5]
    double plateau_se = 0.0;
    double exec_ratio = 0.0;         // mean(eps (vwap - p_start)) / mean(Delta_T)
    double exec_ratio_se = 0.0;
    std::size_t used = 0;
    std::size_t excluded = 0;
};

// Ratio-of-means estimators; errors by delete-one jackknife over records.
DecayCurve decay_curve(std::span<const MetaorderRecord> records);

// ---------------------------------------------------------------------------
// Global imbalance impact

struct ImbalanceBin {
    double q = 0.0;        // mean imbalance in the bin
    double dp = 0.0;       // mean price change
    double dp_se = 0.0;
    std::size_t n = 0;
};

struct ImbalanceImpact {
    std::size_t window = 0;
    std::size_t windows = 0;
    std::vector<ImbalanceBin> bins;
    double intercept = 0.0, intercept_se = 0.0;
    double slope = 0.0, slope_se = 0.0;               // linear fit dp = a + k Q
    double curvature = 0.0, curvature_se = 0.0;       // coefficient c of c Q|Q| in dp = a + k Q + c Q|Q|
    double curvature_t = 0.0;
    double quadratic = 0.0, quadratic_se = 0.0;       // coefficient of Q^2 in dp = a + k Q + c Q^2
    double quadratic_t = 0.0;
    bool linear_accepted = false;                     // both curvature terms below 2 standard errors
};

// Non-overlapping windows of `window` steps. Q is the signed executed volume,
// dp the midpoint change across the window. Standard errors are
// heteroscedasticity-robust (HC1).
ImbalanceImpact global_imbalance_impact(std::span<const TradeRecord> trades, std::span<const double> step_midpoints,
                                        std::int64_t first_step, std::size_t window, std::size_t bins = 20);

// ---------------------------------------------------------------------------
// CSV exports, each with a JSON sidecar of fit parameters next to it
// (same stem, .json extension).

void write_profile_csv(const std::filesystem::path& csv, const BookProfile& p, const ExponentialFit* fit);
void write_impact_csv(const std::filesystem::path& csv, const ImpactCurve& c);
void write_decay_csv(const std::filesystem::path& csv, const DecayCurve& c);
void write_imbalance_csv(const std::filesystem::path& csv, const ImbalanceImpact& c);
void write_autocorrelation_csv(const std::filesystem::path& csv, const SignAutocorrelation& c);

nlohmann::json to_json(const DerivedQuantities& d);
nlohmann::json to_json(const ExponentialFit& f);
nlohmann::json to_json(const ImpactCurve& c);
nlohmann::json to_json(const DecayCurve& c);
nlohmann::json to_json(const ImbalanceImpact& c);

} // namespace lob
