#pragma once

#include "lob/analytics.hpp"
#include "lob/config.hpp"
#include "lob/simulator.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lob {

// hash(master, kind, cell coordinates, replica). Coordinates enter by value,
// so a one-cell sweep reproduces the same cell run standalone.
std::uint64_t cell_seed(std::uint64_t master, std::string_view kind, std::initializer_list<double> coords,
                        std::uint64_t replica);

// ---------------------------------------------------------------------------

struct DiffusivityPoint {
    double gamma = 0.0;
    double zeta = 0.0;
    double ratio = 0.0;            // sigma(lag1) / sigma(lag2), replica mean
    double se = 0.0;
    std::vector<double> replica_ratios;
    std::int64_t transactions = 0; // per replica
    bool flagged = false;          // degenerate or frozen price in some replica
    std::string note;
};

DiffusivityPoint evaluate_diffusivity(const ExperimentConfig& cfg, std::string_view kind, double gamma, double zeta);

std::vector<DiffusivityPoint> run_diffusion_map(const ExperimentConfig& cfg);

struct LinePoint {
    double gamma = 0.0;
    double zeta_star = 0.0;
    double ratio = 0.0;
    double se = 0.0;
    bool converged = false;
    bool bracketed = false;
    std::string note;
    std::vector<DiffusivityPoint> trace;
};

// Bisection on zeta for |ratio - 1| < tolerance or bracket narrower than
// min_interval. A bracket without a sign change is widened once, then the
// point fails (bracketed = false).
LinePoint find_diffusion_line_point(const ExperimentConfig& cfg, double gamma);
std::vector<LinePoint> find_diffusion_line(const std::vector<double>& gammas, const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------

struct Background {
    double gamma = 0.0;
    double zeta = 0.0;
    std::uint64_t seed = 0;
    DerivedQuantities dq;
    BookProfile profile;
    RunRecording recording;        // trades and step midpoints kept for the imbalance analysis
};

// Metaorder-free reference run at (gamma, zeta): V, sigma, D, mean book.
Background run_background(const ExperimentConfig& cfg, double gamma, double zeta, std::int64_t steps,
                          bool keep_recording);

struct ProfileResult {
    double gamma = 0.0, zeta = 0.0;
    DerivedQuantities dq;
    BookProfile profile;
    ExponentialFit fit;
    double fit_u_max = 0.0;
    double rho_far = 0.0;          // mean rho over the outer fifth of the measured range
    double linear_max_dev = 0.0;   // max |rho - b u| / (b u) for u <= u*/4, NaN when no grid point qualifies
    std::size_t linear_points = 0;
    std::size_t snapshots = 0;
    RunStats stats;
};

ProfileResult run_profile_experiment(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------

struct ImpactCell {
    double gamma = 0.0, zeta = 0.0, phi = 0.0;
    ExecutionStyle style = ExecutionStyle::zeta_execution;
    DerivedQuantities dq;
    std::vector<MetaorderRecord> records;
    ImpactCurve curve;
    bool fit_ok = false;
    std::string fit_note;
    double median_T_over_tau = 0.0;
    double max_T_over_tau = 0.0;
};

// Metaorders for one (gamma, phi, style) curve against a given background.
ImpactCell run_impact_cell(const ExperimentConfig& cfg, const Background& bg, double phi, ExecutionStyle style,
                           bool follow);

struct NaiveOverlay {
    std::vector<double> q_over_v;
    std::vector<double> sqrt_rule;     // sqrt(2 Q / b) / sigma, b = rho_inf/u* from the mean-book fit
    std::vector<double> integrated;    // Delta solving integral_0^Delta rho(u) du = Q, over sigma
    double b = 0.0;
};

NaiveOverlay naive_overlay(const Background& bg, const std::vector<double>& q_over_v);

struct ImpactResult {
    std::vector<Background> backgrounds;
    std::vector<ImpactCell> cells;
    std::vector<NaiveOverlay> naive;           // per background
    std::vector<ImbalanceImpact> imbalance;    // per background
};

ImpactResult run_impact_experiment(const ExperimentConfig& cfg);

struct DecayCell {
    ImpactCell cell;
    DecayCurve curve;
};

std::vector<DecayCell> run_decay_experiment(const ExperimentConfig& cfg);

struct ImbalanceResult {
    std::vector<Background> backgrounds;
    std::vector<ImbalanceImpact> fits;
};

ImbalanceResult run_imbalance_experiment(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------

struct TheoryResult {
    double lambda = 0.0, nu_inf = 0.0, D = 0.0;
    double rho_inf = 0.0, u_star = 0.0, b = 0.0, J = 0.0;
    double numeric_max_rel_error = 0.0;
    double numeric_residual = 0.0;
    double numeric_b = 0.0;
    std::vector<double> u, closed_form, numeric;
};

TheoryResult run_theory(const ExperimentConfig& cfg);

// ---------------------------------------------------------------------------
// Writers: CSVs under cfg.out_dir plus manifest.json. Return a JSON summary.

nlohmann::json write_simulate_outputs(const ExperimentConfig& cfg, const RunRecording& rec);
nlohmann::json write_outputs(const ExperimentConfig& cfg, const std::vector<DiffusivityPoint>& map);
nlohmann::json write_outputs(const ExperimentConfig& cfg, const std::vector<LinePoint>& line);
nlohmann::json write_outputs(const ExperimentConfig& cfg, const ProfileResult& r);
nlohmann::json write_outputs(const ExperimentConfig& cfg, const ImpactResult& r);
nlohmann::json write_outputs(const ExperimentConfig& cfg, const std::vector<DecayCell>& r);
nlohmann::json write_outputs(const ExperimentConfig& cfg, const ImbalanceResult& r);
nlohmann::json write_outputs(const ExperimentConfig& cfg, const TheoryResult& r);

void write_manifest(const ExperimentConfig& cfg, const nlohmann::json& summary, double wall_seconds);

std::string curve_tag(double gamma, double zeta, double phi, ExecutionStyle style);

inline constexpr const char* kCodeVersion = "0.1.0";

} // namespace lob
