#include "lob/analytics.hpp"

#include <Eigen/Dense>
#include <boost/math/tools/minima.hpp>
#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>

namespace lob {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_of(std::span<const double> x) {
    if (x.empty()) return kNaN;
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_sd(std::span<const double> x) {
    if (x.size() < 2) return kNaN;
    const double m = mean_of(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size() - 1));
}

// FFTW planning is not thread-safe; execution is.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

std::filesystem::path sidecar(const std::filesystem::path& csv) {
    auto p = csv;
    p.replace_extension(".json");
    return p;
}

} // namespace

// ---------------------------------------------------------------------------

double diffusion_constant(std::span<const double> prices, std::size_t lag) {
    if (lag == 0) throw ParameterError("lag must be >= 1");
    if (prices.size() < 2 * lag) {
        throw InsufficientData("series of " + std::to_string(prices.size()) + " points too short for lag " +
                               std::to_string(lag));
    }
    const std::size_t n = prices.size() - lag;
    // Sum in blocks to keep rounding under control on long series.
    double total = 0.0;
    double block = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        const double d = prices[t + lag] - prices[t];
        block += d * d;
        if ((t & 0xffff) == 0xffff) {
            total += block;
            block = 0.0;
        }
    }
    total += block;
    return total / static_cast<double>(n) / static_cast<double>(lag);
}

double diffusivity_ratio(std::span<const double> prices, std::size_t l1, std::size_t l2) {
    if (l1 >= l2) throw ParameterError("diffusivity ratio needs l1 < l2");
    const double s1 = diffusion_constant(prices, l1);
    const double s2 = diffusion_constant(prices, l2);
    return std::sqrt(s1) / std::sqrt(s2);
}

RatioEstimate diffusivity_ratio_with_error(std::span<const double> prices, std::size_t l1, std::size_t l2,
                                           std::size_t blocks) {
    RatioEstimate e;
    e.ratio = diffusivity_ratio(prices, l1, l2);
    if (blocks < 2) return e;
    const std::size_t len = prices.size() / blocks;
    if (len < 2 * l2) throw InsufficientData("blocks too short for lag l2");
    std::vector<double> r;
    for (std::size_t b = 0; b < blocks; ++b) r.push_back(diffusivity_ratio(prices.subspan(b * len, len), l1, l2));
    e.blocks = blocks;
    e.stderr_ = sample_sd(r) / std::sqrt(static_cast<double>(blocks));
    return e;
}

// ---------------------------------------------------------------------------

std::vector<double> autocorrelation_fft(std::span<const double> x, std::size_t lmax) {
    const std::size_t n = x.size();
    if (n < 2 || lmax >= n) throw InsufficientData("series too short for the requested lag range");
    std::size_t m = 1;
    while (m < 2 * n) m <<= 1;
    const std::size_t nc = m / 2 + 1;
    double* in = fftw_alloc_real(m);
    fftw_complex* spec = fftw_alloc_complex(nc);
    fftw_plan fwd, bwd;
    {
        std::lock_guard lock(fftw_planner_mutex());
        fwd = fftw_plan_dft_r2c_1d(static_cast<int>(m), in, spec, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_c2r_1d(static_cast<int>(m), spec, in, FFTW_ESTIMATE);
    }
    std::copy(x.begin(), x.end(), in);
    std::fill(in + n, in + m, 0.0);
    fftw_execute(fwd);
    for (std::size_t k = 0; k < nc; ++k) {
        spec[k][0] = spec[k][0] * spec[k][0] + spec[k][1] * spec[k][1];
        spec[k][1] = 0.0;
    }
    fftw_execute(bwd);
    std::vector<double> c(lmax);
    for (std::size_t l = 1; l <= lmax; ++l) {
        c[l - 1] = in[l] / static_cast<double>(m) / static_cast<double>(n - l);
    }
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }
    fftw_free(in);
    fftw_free(spec);
    return c;
}

SignAutocorrelation sign_autocorrelation(std::span<const int> signs, std::size_t lmax) {
    if (lmax < 100) throw ParameterError("lmax must be >= 100 to leave a fit range [10, lmax/10]");
    std::vector<double> x(signs.begin(), signs.end());
    SignAutocorrelation out;
    out.C = autocorrelation_fft(x, lmax);

    // Log-spaced lags in [10, lmax/10].
    const std::size_t lo = 10, hi = lmax / 10;
    std::vector<double> ls, cs;
    std::size_t last = 0;
    for (double g = std::log(static_cast<double>(lo)); g <= std::log(static_cast<double>(hi)) + 1e-12; g += 0.05) {
        const auto l = static_cast<std::size_t>(std::llround(std::exp(g)));
        if (l == last || l > hi) continue;
        last = l;
        ls.push_back(static_cast<double>(l));
        cs.push_back(out.C[l - 1]);
    }
    // Correlations indistinguishable from zero cannot carry a power law.
    const double floor = 3.0 / std::sqrt(static_cast<double>(signs.size()));
    const auto below = std::count_if(cs.begin(), cs.end(), [&](double c) { return c <= floor; });
    if (below > 0) {
        out.fit_note = std::to_string(below) + " of " + std::to_string(cs.size()) +
                       " lags in the fit range are within noise of zero";
        return out;
    }
    const auto fit = fit_power_law(ls, cs);
    out.gamma = -fit.exponent;
    out.gamma_se = fit.exponent_se;
    out.fit_accepted = out.gamma > 0.0;
    if (!out.fit_accepted) out.fit_note = "autocorrelation does not decay over the fit range";
    return out;
}

// ---------------------------------------------------------------------------

BookProfile mean_book_profile(std::span<const BookSnapshot> snapshots, double u_max) {
    if (snapshots.empty()) throw InsufficientData("no snapshots");
    const auto kmax = static_cast<std::size_t>(std::floor(2.0 * u_max));
    std::vector<double> sum(kmax + 1, 0.0);
    std::vector<std::int64_t> cnt(kmax + 1, 0);
    for (const auto& s : snapshots) {
        for (std::size_t i = 0; i < s.bids.size(); ++i) {
            const double p = static_cast<double>(s.low + static_cast<Tick>(i));
            const double d = p - s.midpoint;
            const auto k = static_cast<std::int64_t>(std::llround(2.0 * std::abs(d)));
            if (k < 1 || k > static_cast<std::int64_t>(kmax)) continue;
            const auto ku = static_cast<std::size_t>(k);
            if (d < 0) {
                sum[ku] += static_cast<double>(s.bids[i]);
            } else {
                sum[ku] += static_cast<double>(s.asks[i]);
            }
            ++cnt[ku];
        }
    }
    BookProfile out;
    for (std::size_t k = 1; k <= kmax; ++k) {
        if (cnt[k] == 0) continue;
        out.u.push_back(0.5 * static_cast<double>(k));
        out.rho.push_back(sum[k] / static_cast<double>(cnt[k]));
        out.samples.push_back(cnt[k]);
    }
    return out;
}

ExponentialFit fit_exponential_profile(std::span<const double> u, std::span<const double> rho) {
    if (u.size() != rho.size()) throw ParameterError("profile u and rho differ in length");
    if (u.size() < 10) throw InsufficientData("exponential fit needs at least 10 profile points");
    double umin = std::numeric_limits<double>::infinity(), umax = 0.0;
    for (double x : u) {
        if (!(x > 0.0)) throw ParameterError("profile abscissae must be positive");
        umin = std::min(umin, x);
        umax = std::max(umax, x);
    }
    // For fixed u*, rho_inf enters linearly and has a closed-form optimum.
    auto solve = [&](double us, double& rinf) {
        double sg = 0.0, sr = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double g = -std::expm1(-u[i] / us);
            sg += g * g;
            sr += g * rho[i];
        }
        rinf = sr / sg;
        double rss = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            const double e = rho[i] - rinf * -std::expm1(-u[i] / us);
            rss += e * e;
        }
        return rss;
    };
    const double lo = std::log(umin * 1e-3);
    const double hi = std::log(umax * 1e4);
    auto obj = [&](double lu) {
        double r;
        return solve(std::exp(lu), r);
    };
    // The objective can have a shallow plateau; seed Brent from a coarse scan.
    const int n_scan = 200;
    double best_lu = lo, best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n_scan; ++i) {
        const double lu = lo + (hi - lo) * i / n_scan;
        const double v = obj(lu);
        if (v < best) {
            best = v;
            best_lu = lu;
        }
    }
    const double step = (hi - lo) / n_scan;
    std::uintmax_t iters = 200;
    const auto [lu, rss] = boost::math::tools::brent_find_minima(obj, std::max(lo, best_lu - step),
                                                                  std::min(hi, best_lu + step), 50, iters);
    ExponentialFit f;
    f.u_star = std::exp(lu);
    f.rss = solve(f.u_star, f.rho_inf);
    f.points = u.size();
    f.at_upper_bound = lu > hi - 2.0 * step;
    if (!std::isfinite(f.rho_inf) || !std::isfinite(f.u_star) || !std::isfinite(rss)) {
        throw FitError("exponential profile fit failed: rho_inf=" + std::to_string(f.rho_inf) +
                       " u*=" + std::to_string(f.u_star) + " after " + std::to_string(iters) + " iterations");
    }
    return f;
}

// ---------------------------------------------------------------------------

DerivedQuantities derive_quantities(const FlowParams& flow, const RunRecording& rec) {
    if (!(flow.nu_inf > 0.0)) throw ParameterError("derived quantities need nu_inf > 0");
    DerivedQuantities d;
    d.rho_inf = flow.lambda / flow.nu_inf;
    d.r = flow.mu / flow.nu_inf;
    d.tau_life = 1.0 / flow.nu_inf;
    const auto steps = static_cast<double>(rec.step_midpoints.size());
    if (steps == 0.0) throw InsufficientData("no recorded steps");
    double vol = 0.0;
    std::size_t trades = 0;
    for (const auto& t : rec.trades) {
        if (t.is_metaorder) continue;
        vol += static_cast<double>(t.volume);
        ++trades;
    }
    d.J = vol / steps;
    d.V = d.J * d.tau_life;
    d.trade_rate = static_cast<double>(trades) / steps;
    const auto tau = static_cast<std::size_t>(std::llround(d.tau_life));
    d.sigma = std::sqrt(diffusion_constant(rec.step_midpoints, tau) * static_cast<double>(tau));
    double s2 = 0.0;
    for (std::size_t l = 10; l <= 100; ++l) s2 += diffusion_constant(rec.trade_midpoints, l);
    s2 /= 91.0;
    d.D_step = s2 * d.trade_rate;
    d.u_star = std::sqrt(d.D_step / (2.0 * flow.nu_inf));
    d.b = 2.0 * d.J / d.D_step;
    return d;
}

// ---------------------------------------------------------------------------

PowerLawFitResult fit_power_law(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ParameterError("fit inputs differ in length");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    const std::size_t n = lx.size();
    if (n < 2) throw FitError("power-law fit needs two points with positive coordinates");
    const double mx = mean_of(lx), my = mean_of(ly);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) throw FitError("power-law fit abscissae are all equal");
    PowerLawFitResult f;
    f.points = n;
    f.exponent = sxy / sxx;
    const double a = my - f.exponent * mx;
    f.prefactor = std::exp(a);
    if (n > 2) {
        double rss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = ly[i] - a - f.exponent * lx[i];
            rss += e * e;
        }
        const double s2 = rss / static_cast<double>(n - 2);
        f.exponent_se = std::sqrt(s2 / sxx);
        f.log_prefactor_se = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
    }
    return f;
}

ImpactCurve impact_curve(std::span<const MetaorderRecord> records, const DerivedQuantities& dq,
                         const ImpactOptions& opts) {
    if (!(dq.V > 0.0) || !(dq.sigma > 0.0)) throw ParameterError("impact curve needs V > 0 and sigma > 0");
    if (opts.bins < 3) throw ParameterError("impact curve needs at least 3 bins");
    ImpactCurve c;
    std::vector<double> xs, ys;
    for (const auto& r : records) {
        if (!r.complete) {
            ++c.excluded;
            continue;
        }
        const double delta = opts.measure == ImpactMeasure::shortfall ? r.shortfall() : r.delta_T;
        xs.push_back(static_cast<double>(r.spec.Q) / dq.V);
        ys.push_back(delta / dq.sigma);
    }
    c.used = xs.size();
    if (xs.empty()) throw FitError("no complete metaorders");
    double x_min = opts.x_min, x_max = opts.x_max;
    if (!(x_min > 0.0)) x_min = *std::min_element(xs.begin(), xs.end());
    if (!(x_max > 0.0)) x_max = *std::max_element(xs.begin(), xs.end());
    if (!(x_max > x_min)) throw FitError("metaorder sizes span no range");
    x_max = std::nextafter(x_max, std::numeric_limits<double>::infinity());

    const double lmin = std::log(x_min), lw = (std::log(x_max) - lmin) / static_cast<double>(opts.bins);
    std::vector<std::vector<std::size_t>> members(opts.bins);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] < x_min || xs[i] >= x_max) continue;
        auto b = static_cast<std::size_t>((std::log(xs[i]) - lmin) / lw);
        members[std::min(b, opts.bins - 1)].push_back(i);
    }
    std::vector<std::size_t> kept;
    for (std::size_t b = 0; b < opts.bins; ++b) {
        const auto& m = members[b];
        if (m.size() < opts.min_per_bin) continue;
        ImpactBin bin;
        bin.x_lo = std::exp(lmin + lw * static_cast<double>(b));
        bin.x_hi = std::exp(lmin + lw * static_cast<double>(b + 1));
        std::vector<double> yb;
        double sx = 0.0;
        for (auto i : m) {
            yb.push_back(ys[i]);
            sx += xs[i];
        }
        bin.n = m.size();
        bin.x = sx / static_cast<double>(m.size());
        bin.y = mean_of(yb);
        bin.y_se = sample_sd(yb) / std::sqrt(static_cast<double>(m.size()));
        c.bins.push_back(bin);
        kept.push_back(b);
    }
    std::vector<double> bx, by;
    for (const auto& b : c.bins) {
        if (b.y > 0.0) {
            bx.push_back(b.x);
            by.push_back(b.y);
        }
    }
    if (bx.size() < 3) {
        throw FitError("only " + std::to_string(bx.size()) + " bins with positive mean impact; fit refused");
    }
    const auto fit = fit_power_law(bx, by);
    c.Y = fit.prefactor;
    c.delta = fit.exponent;
    c.fit_bins = fit.points;
    c.delta_se = fit.exponent_se;
    c.Y_se = fit.prefactor * fit.log_prefactor_se;

    // Bootstrap: resample records within each bin, refit.
    if (opts.bootstrap >= 2) {
        Rng rng = make_rng(opts.bootstrap_seed);
        std::vector<double> Ys, ds;
        for (std::size_t rep = 0; rep < opts.bootstrap; ++rep) {
            std::vector<double> rx, ry;
            for (std::size_t j = 0; j < kept.size(); ++j) {
                const auto& m = members[kept[j]];
                std::uniform_int_distribution<std::size_t> pick(0, m.size() - 1);
                double s = 0.0;
                for (std::size_t k = 0; k < m.size(); ++k) s += ys[m[pick(rng)]];
                const double mean = s / static_cast<double>(m.size());
                if (mean > 0.0) {
                    rx.push_back(c.bins[j].x);
                    ry.push_back(mean);
                }
            }
            if (rx.size() < 3) continue;
            const auto f = fit_power_law(rx, ry);
            Ys.push_back(f.prefactor);
            ds.push_back(f.exponent);
        }
        if (ds.size() >= 2) {
            c.delta_se = sample_sd(ds);
            c.Y_se = sample_sd(Ys);
        }
    }
    return c;
}

// ---------------------------------------------------------------------------

DecayCurve decay_curve(std::span<const MetaorderRecord> records) {
    DecayCurve d;
    std::vector<const MetaorderRecord*> use;
    for (const auto& r : records) {
        if (r.complete && r.trajectory_complete) {
            use.push_back(&r);
        } else {
            ++d.excluded;
        }
    }
    const std::size_t n = use.size();
    d.used = n;
    if (n < 2) throw InsufficientData("decay curve needs at least two records with full trajectories");
    constexpr std::size_t K = kTrajectoryPoints;
    std::vector<double> A(K, 0.0);
    double B = 0.0, S = 0.0;
    for (auto* r : use) {
        for (std::size_t k = 0; k < K; ++k) A[k] += r->trajectory[k];
        B += r->delta_T;
        S += r->shortfall();
    }
    if (B == 0.0) throw InsufficientData("mean peak impact is zero");
    // Plateau points: tau/T in [3, 5] -> k = 30..50 (1-based).
    auto in_plateau = [](std::size_t k0) { return k0 + 1 >= 30; };
    const auto plateau_of = [&](const std::vector<double>& a, double b) {
        double s = 0.0;
        int m = 0;
        for (std::size_t k = 0; k < K; ++k) {
            if (!in_plateau(k)) continue;
            s += a[k] / b;
            ++m;
        }
        return s / m;
    };
    d.tau_over_T.resize(K);
    d.ratio.resize(K);
    d.ratio_se.assign(K, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        d.tau_over_T[k] = kTrajectoryStep * static_cast<double>(k + 1);
        d.ratio[k] = A[k] / B;
    }
    d.ratio[9] = 1.0;  // tau = T is Delta_T itself
    d.plateau = plateau_of(A, B);
    d.exec_ratio = S / B;

    // Delete-one jackknife.
    const double nn = static_cast<double>(n);
    std::vector<double> jr_sum(K, 0.0), jr_sq(K, 0.0);
    double jp = 0.0, jp2 = 0.0, je = 0.0, je2 = 0.0;
    std::vector<double> a(K);
    for (auto* r : use) {
        const double b = B - r->delta_T;
        for (std::size_t k = 0; k < K; ++k) {
            a[k] = A[k] - r->trajectory[k];
            const double v = a[k] / b;
            jr_sum[k] += v;
            jr_sq[k] += v * v;
        }
        const double p = plateau_of(a, b);
        jp += p;
        jp2 += p * p;
        const double e = (S - r->shortfall()) / b;
        je += e;
        je2 += e * e;
    }
    auto jk_se = [&](double s, double s2) {
        const double m = s / nn;
        return std::sqrt(std::max(0.0, (nn - 1.0) / nn * (s2 - nn * m * m)));
    };
    for (std::size_t k = 0; k < K; ++k) d.ratio_se[k] = k == 9 ? 0.0 : jk_se(jr_sum[k], jr_sq[k]);
    d.plateau_se = jk_se(jp, jp2);
    d.exec_ratio_se = jk_se(je, je2);
    return d;
}

// ---------------------------------------------------------------------------

namespace {

struct OlsResult {
    Eigen::VectorXd beta;
    Eigen::VectorXd se;
};

OlsResult ols_hc1(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const auto n = static_cast<double>(X.rows());
    const auto k = static_cast<double>(X.cols());
    const Eigen::MatrixXd xtx_inv = (X.transpose() * X).inverse();
    OlsResult r;
    r.beta = xtx_inv * (X.transpose() * y);
    const Eigen::VectorXd e = y - X * r.beta;
    Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(X.cols(), X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i) meat += e(i) * e(i) * X.row(i).transpose() * X.row(i);
    const Eigen::MatrixXd cov = xtx_inv * meat * xtx_inv * (n / (n - k));
    r.se = cov.diagonal().cwiseSqrt();
    return r;
}

} // namespace

ImbalanceImpact global_imbalance_impact(std::span<const TradeRecord> trades, std::span<const double> step_midpoints,
                                        std::int64_t first_step, std::size_t window, std::size_t bins) {
    if (window < 1) throw ParameterError("imbalance window must be >= 1 step");
    ImbalanceImpact out;
    out.window = window;
    // step_midpoints[i] is the price at the end of step first_step + i.
    const std::size_t nw = step_midpoints.empty() ? 0 : (step_midpoints.size() - 1) / window;
    if (nw < 10 || nw < 2 * bins) throw InsufficientData("too few imbalance windows: " + std::to_string(nw));
    std::vector<double> q(nw, 0.0), dp(nw);
    for (std::size_t j = 0; j < nw; ++j) dp[j] = step_midpoints[(j + 1) * window] - step_midpoints[j * window];
    for (const auto& t : trades) {
        if (t.is_metaorder) continue;
        const std::int64_t off = t.step - first_step - 1;  // window j covers steps first+jW+1 .. first+(j+1)W
        if (off < 0) continue;
        const auto j = static_cast<std::size_t>(off) / window;
        if (j >= nw) continue;
        q[j] += to_int(t.sign) * static_cast<double>(t.volume);
    }
    out.windows = nw;

    const auto n = static_cast<Eigen::Index>(nw);
    Eigen::VectorXd y(n);
    Eigen::MatrixXd X1(n, 2), Xs(n, 3), Xq(n, 3);
    // Scaling Q keeps the normal equations well conditioned.
    double qs = 0.0;
    for (double v : q) qs = std::max(qs, std::abs(v));
    if (qs == 0.0) qs = 1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double x = q[static_cast<std::size_t>(i)] / qs;
        y(i) = dp[static_cast<std::size_t>(i)];
        X1.row(i) << 1.0, x;
        Xs.row(i) << 1.0, x, x * std::abs(x);
        Xq.row(i) << 1.0, x, x * x;
    }
    const auto r1 = ols_hc1(X1, y);
    const auto rs = ols_hc1(Xs, y);
    const auto rq = ols_hc1(Xq, y);
    out.intercept = r1.beta(0);
    out.intercept_se = r1.se(0);
    out.slope = r1.beta(1) / qs;
    out.slope_se = r1.se(1) / qs;
    out.curvature = rs.beta(2) / (qs * qs);
    out.curvature_se = rs.se(2) / (qs * qs);
    out.curvature_t = rs.beta(2) / rs.se(2);
    out.quadratic = rq.beta(2) / (qs * qs);
    out.quadratic_se = rq.se(2) / (qs * qs);
    out.quadratic_t = rq.beta(2) / rq.se(2);
    out.linear_accepted = std::abs(out.curvature_t) < 2.0 && std::abs(out.quadratic_t) < 2.0;

    // Equal-count bins of Q.
    std::vector<std::size_t> idx(nw);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return q[a] < q[b]; });
    for (std::size_t b = 0; b < bins; ++b) {
        const std::size_t lo = b * nw / bins, hi = (b + 1) * nw / bins;
        if (hi <= lo) continue;
        std::vector<double> qb, pb;
        for (std::size_t i = lo; i < hi; ++i) {
            qb.push_back(q[idx[i]]);
            pb.push_back(dp[idx[i]]);
        }
        ImbalanceBin bin;
        bin.n = hi - lo;
        bin.q = mean_of(qb);
        bin.dp = mean_of(pb);
        bin.dp_se = sample_sd(pb) / std::sqrt(static_cast<double>(bin.n));
        out.bins.push_back(bin);
    }
    return out;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const DerivedQuantities& d) {
    return {{"rho_inf", json_number(d.rho_inf)}, {"r", json_number(d.r)},
            {"tau_life", json_number(d.tau_life)}, {"J", json_number(d.J)},
            {"V", json_number(d.V)}, {"sigma", json_number(d.sigma)},
            {"D_step", json_number(d.D_step)}, {"trade_rate", json_number(d.trade_rate)},
            {"u_star", json_number(d.u_star)}, {"b", json_number(d.b)}};
}

nlohmann::json to_json(const ExponentialFit& f) {
    return {{"rho_inf", json_number(f.rho_inf)}, {"u_star", json_number(f.u_star)}, {"rss", json_number(f.rss)},
            {"at_upper_bound", f.at_upper_bound}, {"points", f.points}};
}

nlohmann::json to_json(const ImpactCurve& c) {
    return {{"Y", json_number(c.Y)}, {"Y_se", json_number(c.Y_se)}, {"delta", json_number(c.delta)},
            {"delta_se", json_number(c.delta_se)}, {"fit_bins", c.fit_bins}, {"used", c.used},
            {"excluded", c.excluded}};
}

nlohmann::json to_json(const DecayCurve& c) {
    return {{"plateau", json_number(c.plateau)}, {"plateau_se", json_number(c.plateau_se)},
            {"exec_ratio", json_number(c.exec_ratio)}, {"exec_ratio_se", json_number(c.exec_ratio_se)},
            {"used", c.used}, {"excluded", c.excluded}};
}

nlohmann::json to_json(const ImbalanceImpact& c) {
    return {{"window", c.window}, {"windows", c.windows},
            {"intercept", json_number(c.intercept)}, {"intercept_se", json_number(c.intercept_se)},
            {"slope", json_number(c.slope)}, {"slope_se", json_number(c.slope_se)},
            {"curvature", json_number(c.curvature)}, {"curvature_se", json_number(c.curvature_se)},
            {"curvature_t", json_number(c.curvature_t)}, {"quadratic", json_number(c.quadratic)},
            {"quadratic_se", json_number(c.quadratic_se)}, {"quadratic_t", json_number(c.quadratic_t)},
            {"linear_accepted", c.linear_accepted}};
}

void write_profile_csv(const std::filesystem::path& csv, const BookProfile& p, const ExponentialFit* fit) {
    CsvWriter w(csv, {"u", "rho", "samples"});
    for (std::size_t i = 0; i < p.u.size(); ++i) {
        w << p.u[i] << p.rho[i] << p.samples[i];
        w.end_row();
    }
    nlohmann::json j = {{"points", p.u.size()}};
    if (fit) j["fit"] = to_json(*fit);
    write_json(sidecar(csv), j);
}

void write_impact_csv(const std::filesystem::path& csv, const ImpactCurve& c) {
    CsvWriter w(csv, {"x_lo", "x_hi", "q_over_v", "delta_over_sigma", "se", "n"});
    for (const auto& b : c.bins) {
        w << b.x_lo << b.x_hi << b.x << b.y << b.y_se << static_cast<std::int64_t>(b.n);
        w.end_row();
    }
    write_json(sidecar(csv), to_json(c));
}

void write_decay_csv(const std::filesystem::path& csv, const DecayCurve& c) {
    CsvWriter w(csv, {"tau_over_T", "ratio", "se"});
    for (std::size_t k = 0; k < c.ratio.size(); ++k) {
        w << c.tau_over_T[k] << c.ratio[k] << c.ratio_se[k];
        w.end_row();
    }
    write_json(sidecar(csv), to_json(c));
}

void write_imbalance_csv(const std::filesystem::path& csv, const ImbalanceImpact& c) {
    CsvWriter w(csv, {"imbalance", "price_change", "se", "n"});
    for (const auto& b : c.bins) {
        w << b.q << b.dp << b.dp_se << static_cast<std::int64_t>(b.n);
        w.end_row();
    }
    write_json(sidecar(csv), to_json(c));
}

void write_autocorrelation_csv(const std::filesystem::path& csv, const SignAutocorrelation& c) {
    CsvWriter w(csv, {"lag", "C"});
    for (std::size_t l = 0; l < c.C.size(); ++l) {
        w << static_cast<std::int64_t>(l + 1) << c.C[l];
        w.end_row();
    }
    write_json(sidecar(csv), {{"fit_accepted", c.fit_accepted}, {"gamma", json_number(c.gamma)},
                              {"gamma_se", json_number(c.gamma_se)}, {"note", c.fit_note}});
}

} // namespace lob
