#include "lob/config.hpp"

#include "lob/error.hpp"
#include "lob/rng.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <functional>
#include <sstream>

namespace lob {

namespace {

constexpr std::string_view kKindNames[] = {"simulate", "diffusion_map", "diffusion_line", "profile",
                                           "impact",   "decay",         "imbalance",      "theory"};

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& s) {
    std::size_t pos = 0;
    const std::string t = trim(s);
    const double v = std::stod(t, &pos);
    if (pos != t.size()) throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

std::int64_t to_int(const std::string& s) {
    const std::string t = trim(s);
    // Accept 1e6-style integers.
    const double d = to_double(t);
    const auto v = static_cast<std::int64_t>(d);
    if (static_cast<double>(v) != d) throw std::invalid_argument("not an integer: '" + s + "'");
    return v;
}

bool to_bool(const std::string& s) {
    const std::string t = trim(s);
    if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
    if (t == "false" || t == "0" || t == "no" || t == "off") return false;
    throw std::invalid_argument("not a boolean: '" + s + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(s);
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<double> to_list(const std::string& s) {
    std::vector<double> v;
    for (const auto& x : split(s, ',')) v.push_back(to_double(x));
    return v;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& registry() {
    static const std::map<std::string, Setter> r = {
        // [sim]
        {"sim.experiment", [](auto& c, auto& v) { c.kind = parse_experiment_kind(trim(v)); }},
        {"sim.seed", [](auto& c, auto& v) { c.sim.seed = std::stoull(trim(v)); }},
        {"sim.window", [](auto& c, auto& v) { c.sim.window = to_int(v); }},
        {"sim.warmup_steps", [](auto& c, auto& v) { c.sim.warmup_steps = to_int(v); }},
        {"sim.horizon_steps", [](auto& c, auto& v) { c.sim.horizon_steps = to_int(v); }},
        {"sim.snapshot_interval", [](auto& c, auto& v) { c.sim.snapshot_interval = to_int(v); }},
        {"sim.snapshot_depth", [](auto& c, auto& v) { c.sim.snapshot_depth = to_int(v); }},
        {"sim.engine", [](auto& c, auto& v) { c.sim.engine = parse_engine(trim(v)); }},
        {"sim.max_drop_fraction", [](auto& c, auto& v) { c.sim.max_drop_fraction = to_double(v); }},
        {"sim.min_warmup_lifetimes", [](auto& c, auto& v) { c.sim.min_warmup_lifetimes = to_double(v); }},
        {"sim.replicas", [](auto& c, auto& v) { c.replicas = static_cast<int>(to_int(v)); }},
        {"sim.threads", [](auto& c, auto& v) { c.threads = static_cast<int>(to_int(v)); }},
        // [flow]
        {"flow.lambda", [](auto& c, auto& v) { c.sim.flow.lambda = to_double(v); }},
        {"flow.mu", [](auto& c, auto& v) { c.sim.flow.mu = to_double(v); }},
        {"flow.nu_inf", [](auto& c, auto& v) { c.sim.flow.nu_inf = to_double(v); }},
        {"flow.zeta", [](auto& c, auto& v) { c.sim.flow.zeta = to_double(v); }},
        {"flow.volume_rule",
         [](auto& c, auto& v) {
             const auto t = trim(v);
             if (t == "fraction") c.sim.volume_rule = VolumeRule::fraction;
             else if (t == "unit") c.sim.volume_rule = VolumeRule::unit;
             else throw std::invalid_argument("expected fraction|unit");
         }},
        // [sign]
        {"sign.gamma", [](auto& c, auto& v) { c.sim.alpha = 1.0 + to_double(v); }},
        {"sign.alpha", [](auto& c, auto& v) { c.sim.alpha = to_double(v); }},
        {"sign.rule",
         [](auto& c, auto& v) {
             const auto t = trim(v);
             if (t == "lmf") c.sim.sign_rule = SignRule::lmf;
             else if (t == "iid") c.sim.sign_rule = SignRule::iid;
             else throw std::invalid_argument("expected lmf|iid");
         }},
        // [metaorder]
        {"metaorder.count", [](auto& c, auto& v) { c.metaorders = to_int(v); }},
        {"metaorder.q_over_v_min", [](auto& c, auto& v) { c.q_over_v_min = to_double(v); }},
        {"metaorder.q_over_v_max", [](auto& c, auto& v) { c.q_over_v_max = to_double(v); }},
        {"metaorder.rewarmup_steps", [](auto& c, auto& v) { c.rewarmup_steps = to_int(v); }},
        {"metaorder.max_steps", [](auto& c, auto& v) { c.max_metaorder_steps = to_int(v); }},
        {"metaorder.trajectory", [](auto& c, auto& v) { c.record_trajectory = to_bool(v); }},
        {"metaorder.target_T_lifetimes", [](auto& c, auto& v) { c.target_T_lifetimes = to_double(v); }},
        {"metaorder.background_steps", [](auto& c, auto& v) { c.background_steps = to_int(v); }},
        // [sweep]
        {"sweep.gamma", [](auto& c, auto& v) { c.gammas = to_list(v); }},
        {"sweep.zeta", [](auto& c, auto& v) { c.zetas = to_list(v); }},
        {"sweep.phi", [](auto& c, auto& v) { c.phis = to_list(v); }},
        {"sweep.style",
         [](auto& c, auto& v) {
             c.styles.clear();
             for (const auto& s : split(v, ',')) c.styles.push_back(parse_execution_style(s));
         }},
        {"sweep.zeta_line",
         [](auto& c, auto& v) {
             c.zeta_line.clear();
             for (const auto& pair : split(v, ',')) {
                 const auto kv = split(pair, ':');
                 if (kv.size() != 2) throw std::invalid_argument("expected gamma:zeta pairs");
                 c.zeta_line[to_double(kv[0])] = to_double(kv[1]);
             }
         }},
        {"sweep.replicas", [](auto& c, auto& v) { c.replicas = static_cast<int>(to_int(v)); }},
        {"sweep.lag1", [](auto& c, auto& v) { c.lag1 = static_cast<std::size_t>(to_int(v)); }},
        {"sweep.lag2", [](auto& c, auto& v) { c.lag2 = static_cast<std::size_t>(to_int(v)); }},
        {"sweep.transactions", [](auto& c, auto& v) { c.transactions = to_int(v); }},
        {"sweep.bracket_lo", [](auto& c, auto& v) { c.bracket_lo = to_double(v); }},
        {"sweep.bracket_hi", [](auto& c, auto& v) { c.bracket_hi = to_double(v); }},
        {"sweep.tolerance", [](auto& c, auto& v) { c.line_tolerance = to_double(v); }},
        {"sweep.min_interval", [](auto& c, auto& v) { c.line_min_interval = to_double(v); }},
        // [output]
        {"output.dir", [](auto& c, auto& v) { c.out_dir = trim(v); }},
        {"output.profile_u_max", [](auto& c, auto& v) { c.profile_u_max = to_double(v); }},
        {"output.profile_fit_u_stars", [](auto& c, auto& v) { c.profile_fit_u_stars = to_double(v); }},
        {"output.imbalance_window", [](auto& c, auto& v) { c.imbalance_window = to_int(v); }},
        {"output.impact_bins", [](auto& c, auto& v) { c.impact_bins = static_cast<std::size_t>(to_int(v)); }},
        // [theory]
        {"theory.D", [](auto& c, auto& v) { c.theory_D = to_double(v); }},
        {"theory.u_star", [](auto& c, auto& v) { c.theory_u_star = to_double(v); }},
        {"theory.domain_u_stars", [](auto& c, auto& v) { c.theory_domain_u_stars = to_double(v); }},
        {"theory.cells", [](auto& c, auto& v) { c.theory_cells = static_cast<std::size_t>(to_int(v)); }},
    };
    return r;
}

std::string join_errors(const std::vector<std::string>& errs) {
    std::string s = "invalid configuration:";
    for (const auto& e : errs) s += "\n  " + e;
    return s;
}

} // namespace

std::string_view to_string(ExperimentKind k) noexcept {
    return kKindNames[static_cast<std::size_t>(k)];
}

ExperimentKind parse_experiment_kind(std::string_view s) {
    std::string t(s);
    for (auto& ch : t) {
        if (ch == '-') ch = '_';
    }
    for (std::size_t i = 0; i < std::size(kKindNames); ++i) {
        if (kKindNames[i] == t) return static_cast<ExperimentKind>(i);
    }
    throw ParameterError("unknown experiment kind '" + std::string(s) + "'");
}

double ExperimentConfig::zeta_for(double gamma) const {
    for (const auto& [g, z] : zeta_line) {
        if (std::abs(g - gamma) < 1e-9) return z;
    }
    throw ConfigError("no zeta configured for gamma=" + std::to_string(gamma) + " (sweep.zeta_line)");
}

void ExperimentConfig::validate() const {
    std::vector<std::string> errs;
    try {
        sim.validate();
    } catch (const std::exception& e) {
        errs.push_back(std::string("sim/flow/sign: ") + e.what());
    }
    if (replicas < 1) errs.emplace_back("sweep.replicas: must be >= 1");
    if (threads < 0) errs.emplace_back("sim.threads: must be >= 0");
    auto need = [&](bool ok, const char* key) {
        if (!ok) errs.push_back(std::string(key) + ": required and non-empty for experiment '" +
                                std::string(to_string(kind)) + "'");
    };
    switch (kind) {
    case ExperimentKind::diffusion_map:
        need(!gammas.empty(), "sweep.gamma");
        need(!zetas.empty(), "sweep.zeta");
        break;
    case ExperimentKind::diffusion_line:
        need(!gammas.empty(), "sweep.gamma");
        break;
    case ExperimentKind::impact:
        need(!gammas.empty(), "sweep.gamma");
        need(!phis.empty(), "sweep.phi");
        need(!styles.empty(), "sweep.style");
        break;
    case ExperimentKind::decay:
        need(!gammas.empty(), "sweep.gamma");
        need(!phis.empty(), "sweep.phi");
        break;
    default:
        break;
    }
    if (kind == ExperimentKind::impact || kind == ExperimentKind::decay) {
        if (zetas.empty()) {
            for (double g : gammas) {
                bool found = false;
                for (const auto& kv : zeta_line) found = found || std::abs(kv.first - g) < 1e-9;
                if (!found) errs.push_back("sweep.zeta_line: no entry for gamma " + std::to_string(g));
            }
        }
        if (!(q_over_v_min > 0.0 && q_over_v_max > q_over_v_min)) {
            errs.emplace_back("metaorder.q_over_v_min/q_over_v_max: need 0 < min < max");
        }
        if (metaorders < 1) errs.emplace_back("metaorder.count: must be >= 1");
        if (sim.flow.nu_inf > 0.0 && static_cast<double>(rewarmup_steps) < sim.tau_life()) {
            errs.emplace_back("metaorder.rewarmup_steps: must be >= one order lifetime");
        }
        for (double p : phis) {
            if (!(p > 0.0 && p <= 1.0)) errs.emplace_back("sweep.phi: values must lie in (0, 1]");
        }
    }
    for (double g : gammas) {
        if (!(g > 0.0)) errs.emplace_back("sweep.gamma: values must be > 0");
    }
    for (double z : zetas) {
        if (!(z > 0.0)) errs.emplace_back("sweep.zeta: values must be > 0");
    }
    if (lag1 < 1 || lag2 <= lag1) errs.emplace_back("sweep.lag1/lag2: need 1 <= lag1 < lag2");
    if (transactions < static_cast<std::int64_t>(2 * lag2)) errs.emplace_back("sweep.transactions: too few for lag2");
    if (!(bracket_lo > 0.0 && bracket_hi > bracket_lo)) errs.emplace_back("sweep.bracket_lo/bracket_hi: need 0 < lo < hi");
    if (!(line_tolerance > 0.0)) errs.emplace_back("sweep.tolerance: must be > 0");
    if (impact_bins < 3) errs.emplace_back("output.impact_bins: must be >= 3");
    if (imbalance_window < 1) errs.emplace_back("output.imbalance_window: must be >= 1");
    if (theory_cells < 10) errs.emplace_back("theory.cells: must be >= 10");
    if (!errs.empty()) throw ConfigError(join_errors(errs));
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json styles_j = nlohmann::json::array();
    for (auto s : styles) styles_j.push_back(std::string(to_string(s)));
    nlohmann::json line = nlohmann::json::array();
    for (const auto& [g, z] : zeta_line) line.push_back({g, z});
    return {
        {"experiment", std::string(to_string(kind))},
        {"sim",
         {{"seed", sim.seed},
          {"window", sim.window},
          {"warmup_steps", sim.warmup_steps},
          {"horizon_steps", sim.horizon_steps},
          {"snapshot_interval", sim.snapshot_interval},
          {"snapshot_depth", sim.snapshot_depth},
          {"engine", std::string(to_string(sim.engine))},
          {"max_drop_fraction", sim.max_drop_fraction},
          {"min_warmup_lifetimes", sim.min_warmup_lifetimes},
          {"replicas", replicas}}},
        {"flow",
         {{"lambda", sim.flow.lambda},
          {"mu", sim.flow.mu},
          {"nu_inf", sim.flow.nu_inf},
          {"zeta", sim.flow.zeta},
          {"volume_rule", sim.volume_rule == VolumeRule::fraction ? "fraction" : "unit"}}},
        {"sign", {{"alpha", sim.alpha}, {"rule", sim.sign_rule == SignRule::lmf ? "lmf" : "iid"}}},
        {"metaorder",
         {{"count", metaorders},
          {"q_over_v_min", q_over_v_min},
          {"q_over_v_max", q_over_v_max},
          {"rewarmup_steps", rewarmup_steps},
          {"max_steps", max_metaorder_steps},
          {"trajectory", record_trajectory},
          {"target_T_lifetimes", target_T_lifetimes},
          {"background_steps", background_steps}}},
        {"sweep",
         {{"gamma", gammas},
          {"zeta", zetas},
          {"phi", phis},
          {"style", styles_j},
          {"zeta_line", line},
          {"lag1", lag1},
          {"lag2", lag2},
          {"transactions", transactions},
          {"bracket_lo", bracket_lo},
          {"bracket_hi", bracket_hi},
          {"tolerance", line_tolerance},
          {"min_interval", line_min_interval}}},
        {"output",
         {{"dir", out_dir.string()},
          {"profile_u_max", profile_u_max},
          {"profile_fit_u_stars", profile_fit_u_stars},
          {"imbalance_window", imbalance_window},
          {"impact_bins", impact_bins}}},
        {"theory",
         {{"D", theory_D},
          {"u_star", theory_u_star},
          {"domain_u_stars", theory_domain_u_stars},
          {"cells", theory_cells}}},
    };
}

namespace {

std::vector<double> linspace(double a, double b, int n) {
    std::vector<double> v;
    for (int i = 0; i < n; ++i) v.push_back(a + (b - a) * i / (n - 1));
    return v;
}

} // namespace

ExperimentConfig default_config(ExperimentKind kind) {
    ExperimentConfig c;
    c.kind = kind;
    c.sim.alpha = 1.8;
    c.sim.flow.zeta = 0.65;
    switch (kind) {
    case ExperimentKind::simulate:
        c.sim.snapshot_interval = 1000;
        break;
    case ExperimentKind::diffusion_map:
        c.gammas = linspace(0.1, 1.0, 20);
        c.zetas = linspace(0.2, 3.0, 20);
        c.replicas = 2;
        break;
    case ExperimentKind::diffusion_line:
        c.gammas = {0.3, 0.5, 0.8};
        c.replicas = 2;
        break;
    case ExperimentKind::profile:
        c.sim.snapshot_interval = 1000;
        break;
    case ExperimentKind::impact:
        c.gammas = {0.3, 0.5, 0.8};
        c.phis = {0.3};
        c.styles = {ExecutionStyle::zeta_execution};
        break;
    case ExperimentKind::decay:
        c.gammas = {0.3, 0.5, 0.8};
        c.phis = {0.5};
        c.styles = {ExecutionStyle::unit_execution};
        c.q_over_v_max = 1e-2;
        c.record_trajectory = true;
        break;
    case ExperimentKind::imbalance:
        c.gammas = {0.3, 0.5, 0.8};
        break;
    case ExperimentKind::theory:
        break;
    }
    return c;
}

ExperimentConfig parse_config(const std::string& ini_text, ExperimentKind fallback) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(ini_text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax error: ") + e.what());
    }
    ExperimentKind kind = fallback;
    if (const auto k = tree.get_optional<std::string>("sim.experiment")) {
        try {
            kind = parse_experiment_kind(trim(*k));
        } catch (const std::exception& e) {
            throw ConfigError(join_errors({std::string("sim.experiment: ") + e.what()}));
        }
    }
    ExperimentConfig c = default_config(kind);
    std::vector<std::string> errs;
    const auto& reg = registry();
    for (const auto& [section, body] : tree) {
        if (body.empty()) {
            errs.push_back(section + ": key outside any section");
            continue;
        }
        for (const auto& [key, node] : body) {
            const std::string full = section + "." + key;
            const auto it = reg.find(full);
            if (it == reg.end()) {
                errs.push_back(full + ": unknown key");
                continue;
            }
            try {
                it->second(c, node.get_value<std::string>());
            } catch (const std::exception& e) {
                errs.push_back(full + ": " + e.what());
            }
        }
    }
    if (!errs.empty()) throw ConfigError(join_errors(errs));
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentKind fallback) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot read '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), fallback);
}

std::uint64_t config_hash(const ExperimentConfig& c) {
    return hash_string(c.to_json().dump());
}

} // namespace lob
