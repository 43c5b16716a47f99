#include "lob/config.hpp"
#include "lob/error.hpp"
#include "lob/experiments.hpp"
#include "lob/io.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace lob;
namespace fs = std::filesystem;
using Catch::Approx;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / "lob_experiments_test" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig small_diffusion(ExperimentKind k) {
    auto c = default_config(k);
    c.sim.warmup_steps = 30'000;
    c.transactions = 30'000;
    c.replicas = 2;
    c.threads = 1;
    return c;
}

ExperimentConfig small_impact() {
    auto c = default_config(ExperimentKind::impact);
    c.gammas = {0.5};
    c.sim.warmup_steps = 30'000;
    c.background_steps = 200'000;
    c.metaorders = 12;
    c.replicas = 2;
    c.q_over_v_min = 1e-3;
    c.q_over_v_max = 3e-3;
    c.rewarmup_steps = 2000;
    c.impact_bins = 3;
    c.threads = 1;
    return c;
}

int run_cli(const std::string& args, std::string& out) {
    const auto log = fs::temp_directory_path() / "lob_experiments_test" / "cli.log";
    const std::string cmd = std::string(LOBSIM_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    out = slurp(log);
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("cell seeds") {
    const auto a = cell_seed(7, "impact", {0.5, 0.95}, 0);
    CHECK(a == cell_seed(7, "impact", {0.5, 0.95}, 0));
    CHECK(a != cell_seed(7, "impact", {0.5, 0.95}, 1));
    CHECK(a != cell_seed(8, "impact", {0.5, 0.95}, 0));
    CHECK(a != cell_seed(7, "decay", {0.5, 0.95}, 0));
    CHECK(a != cell_seed(7, "impact", {0.95, 0.5}, 0));
    CHECK(a != cell_seed(7, "impact", {0.5, 0.95000000000000007}, 0));
}

TEST_CASE("one-cell sweep equals the standalone cell") {
    auto c = small_diffusion(ExperimentKind::diffusion_map);
    c.gammas = {0.5};
    c.zetas = {1.0};
    const auto map = run_diffusion_map(c);
    REQUIRE(map.size() == 1);
    const auto solo = evaluate_diffusivity(c, "diffusion_map", 0.5, 1.0);
    CHECK(map[0].ratio == solo.ratio);
    CHECK(map[0].replica_ratios == solo.replica_ratios);

    // Thread count does not change results.
    c.threads = 2;
    c.zetas = {1.0, 2.0};
    const auto two = run_diffusion_map(c);
    REQUIRE(two.size() == 2);
    CHECK(two[0].ratio == solo.ratio);
}

TEST_CASE("diffusivity map corners") {
    auto c = small_diffusion(ExperimentKind::diffusion_map);
    // Frequent small orders against strongly persistent signs: mean reversion
    // dominates and sigma(lag1) > sigma(lag2).
    const auto sub = evaluate_diffusivity(c, "diffusion_map", 0.9, 3.0);
    // Large orders with long sign runs: trending, sigma(lag1) < sigma(lag2).
    const auto sup = evaluate_diffusivity(c, "diffusion_map", 0.1, 0.3);
    INFO("sub " << sub.ratio << " +- " << sub.se << " sup " << sup.ratio << " +- " << sup.se);
    CHECK(sup.ratio < 1.0);
    CHECK(sup.ratio < sub.ratio);
}

TEST_CASE("doubling replicas shrinks the standard error") {
    auto c = small_diffusion(ExperimentKind::diffusion_map);
    c.transactions = 20'000;
    double r_small = 0.0, r_big = 0.0;
    for (double z : {0.8, 1.2}) {
        c.replicas = 6;
        r_small += evaluate_diffusivity(c, "diffusion_map", 0.5, z).se;
        c.replicas = 12;
        r_big += evaluate_diffusivity(c, "diffusion_map", 0.5, z).se;
    }
    INFO("se6 " << r_small << " se12 " << r_big);
    // sqrt(2) up to the sampling noise of a 6- and 12-point standard deviation.
    CHECK(r_small / r_big > 1.0);
    CHECK(r_small / r_big < 2.2);
}

TEST_CASE("bracket without a crossing is reported, not invented") {
    auto c = small_diffusion(ExperimentKind::diffusion_line);
    c.replicas = 1;
    c.bracket_lo = 2.0;
    c.bracket_hi = 2.2;
    c.line_tolerance = 1e-9;
    c.line_min_interval = 0.5;
    // Any outcome is allowed here except a silent failure.
    const auto p = find_diffusion_line_point(c, 0.5);
    CHECK((p.bracketed || !p.note.empty()));
    CHECK_FALSE(p.trace.empty());
    if (!p.bracketed) CHECK_FALSE(p.converged);
}

TEST_CASE("impact experiment: byte-identical reruns") {
    auto c = small_impact();
    const auto dir_a = fresh_dir("run_a");
    c.out_dir = dir_a;
    const auto ra = run_impact_experiment(c);
    write_outputs(c, ra);
    c.out_dir = fresh_dir("run_b");
    c.threads = 2;
    const auto rb = run_impact_experiment(c);
    write_outputs(c, rb);

    std::size_t compared = 0;
    for (const auto& e : fs::directory_iterator(dir_a)) {
        if (e.path().extension() != ".csv") continue;
        const auto other = fs::path(c.out_dir) / e.path().filename();
        REQUIRE(fs::exists(other));
        CHECK(slurp(e.path()) == slurp(other));
        ++compared;
    }
    CHECK(compared >= 4);
    REQUIRE(ra.cells.size() == 1);
    const auto& cell = ra.cells[0];
    CHECK(cell.records.size() == 12);
    const auto tag = curve_tag(0.5, 0.95, 0.3, ExecutionStyle::zeta_execution);
    CHECK(tag == "g0.5_z0.95_phi0.3_zeta");
    for (const auto& r : cell.records) {
        CHECK(r.complete);
        CHECK(r.executed == r.spec.Q);
        const double x = static_cast<double>(r.spec.Q) / cell.dq.V;
        CHECK(x >= 0.99e-3);
        CHECK(x <= 3.01e-3);
    }
    // Background sanity against the flow rates.
    CHECK(ra.backgrounds[0].dq.rho_inf == Approx(5000.0));
    CHECK(ra.backgrounds[0].dq.V > 0.0);
}

TEST_CASE("theory run echoes the closed form") {
    auto c = default_config(ExperimentKind::theory);
    c.theory_D = 2e-3;
    const auto t = run_theory(c);
    CHECK(t.rho_inf == Approx(5000.0));
    CHECK(t.u_star == Approx(std::sqrt(2e-3 / 2e-4)));
    CHECK(t.b == Approx(t.rho_inf / t.u_star));
    CHECK(t.J == Approx(0.5 * 2e-3 * t.b));
    CHECK(t.numeric_max_rel_error < 1e-4);
    CHECK(t.numeric_b == Approx(t.b).epsilon(1e-4));
}

TEST_CASE("command line") {
    const auto dir = fresh_dir("cli_theory");
    std::string out;
    CHECK(run_cli("theory --lambda 0.5 --nu 1e-4 --D 2e-3 --out " + dir.string(), out) == 0);
    const auto j = nlohmann::json::parse(out);
    CHECK(j["status"] == "ok");
    CHECK(j["summary"]["rho_inf"].get<double>() == Approx(5000.0));
    CHECK(fs::exists(dir / "theory_profile.csv"));
    const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
    CHECK(m["experiment"] == "theory");
    CHECK(m.contains("config_hash"));
    CHECK(m["code_version"] == kCodeVersion);

    CHECK(run_cli("impact --config /nonexistent/missing.toml", out) == 2);
    const auto e = nlohmann::json::parse(out);
    CHECK(e["status"] == "error");
    CHECK(e["type"] == "config_error");

    CHECK(run_cli("theory --nu -1", out) != 0);
}
