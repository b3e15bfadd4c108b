#include "rum/cli.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "rum/carleman.hpp"
#include "rum/errors.hpp"
#include "rum/solver.hpp"
#include "rum/strategy.hpp"
#include "rum/trajectory.hpp"

#ifndef RUM_VERSION
#define RUM_VERSION "0.0.0"
#endif

namespace rum::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kScenarios{"rum",          "odd",      "power",      "even-real",
                                       "even-complex", "carleman", "trajectory", "sweep"};

json interval_json(Interval w) { return json::array({w.lo, w.hi}); }

Interval interval_from(const json& v, const std::string& key) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
        throw ConfigError(key + ": expected [lo, hi]");
    }
    return {v[0].get<double>(), v[1].get<double>()};
}

void check_nested(const SpatialGrid& grid, Interval outer, Interval inner, const std::string& name) {
    try {
        make_cutoff(grid, outer, inner, 1);
    } catch (const ConfigError& e) {
        throw ConfigError(name + ": " + e.what());
    }
}

Scheme scheme_of(const std::string& s) {
    return s == "crank_nicolson" ? Scheme::crank_nicolson : Scheme::implicit_euler;
}

Grids grids_of(const RunConfig& c) { return Grids{SpatialGrid(1.0, c.nx), TimeGrid(c.T, c.nt)}; }

WeightOptions weights_of(const RunConfig& c) {
    WeightOptions w;
    w.s = c.s;
    w.lambda = c.lambda;
    return w;
}

RumOptions rum_options_of(const RunConfig& c) {
    RumOptions o;
    o.tol = c.tol;
    o.max_iter = c.max_iter;
    return o;
}

std::vector<double> initial_data(const RunConfig& c, const SpatialGrid& g) {
    std::vector<double> z(g.size(), 0.0);
    if (c.data == "sine") {
        for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::sin(std::numbers::pi * g.x(i));
    } else if (c.data == "random") {
        std::mt19937_64 rng(c.seed);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (auto& x : z) x = u(rng);
    }
    return z;
}

PowerSystemConfig power_config(const RunConfig& c, int power) {
    auto p = PowerSystemConfig::defaults(power);
    p.grids = grids_of(c);
    p.omega = c.omega;
    p.omega1 = c.omega1;
    p.u_op = ParabolicOperator::heat(scheme_of(c.scheme));
    p.v_op = p.u_op;
    p.eps2 = c.eps;
    p.weights = weights_of(c);
    p.rum = rum_options_of(c);
    const auto& s = p.grids.space;
    p.u0.resize(s.size());
    p.v0.resize(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double x = s.x(i);
        p.u0[i] = std::sin(std::numbers::pi * x);
        p.v0[i] = x * (1.0 - x);
    }
    return p;
}

/// Collects files, metrics and flags for one run directory.
class Output {
public:
    explicit Output(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

    void metric(const std::string& name, double value) { metrics_.emplace_back(name, value); }
    void flag(const std::string& f) { flags_.push_back(f); }
    void flags(const std::vector<std::string>& fs) { flags_.insert(flags_.end(), fs.begin(), fs.end()); }

    template <class T>
    void field(const std::string& name, const Field<T>& f, const Grids& g) {
        std::ofstream os = open("field_" + name + ".csv");
        os << "t,x,value_re,value_im\n";
        for (std::size_t j = 0; j < f.time_nodes(); ++j) {
            for (std::size_t i = 0; i < f.space_nodes(); ++i) {
                const Complex v(f(j, i));
                os << format_number(g.time.t(j)) << ',' << format_number(g.space.x(i)) << ','
                   << format_number(v.real()) << ',' << format_number(v.imag()) << '\n';
            }
        }
        close(os, "field_" + name + ".csv");
    }

    void sweep(const SweepTable& t) {
        std::ofstream os = open("sweep.csv");
        os << "eps,terminal_q_norm,weighted_control_norm,J,slope\n";
        for (const auto& r : t.rows) {
            os << format_number(r.eps) << ',' << format_number(r.terminal_q_norm) << ','
               << format_number(r.weighted_control_norm) << ',' << format_number(r.J) << ",\n";
        }
        os << "slope,,,," << format_number(t.slope) << '\n';
        close(os, "sweep.csv");
    }

    void summary() {
        std::ofstream os = open("summary.csv");
        os << "name,value\n";
        for (const auto& [name, value] : metrics_) os << name << ',' << format_number(value) << '\n';
        close(os, "summary.csv");
    }

    const std::vector<FileEntry>& files() const { return files_; }
    const std::vector<std::string>& flag_list() const { return flags_; }
    const std::vector<std::pair<std::string, double>>& metrics() const { return metrics_; }
    const fs::path& dir() const { return dir_; }

private:
    std::ofstream open(const std::string& name) {
        std::ofstream os(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write " + (dir_ / name).string());
        return os;
    }
    void close(std::ofstream& os, const std::string& name) {
        os.close();
        if (!os) throw std::runtime_error("write failed for " + (dir_ / name).string());
        const auto path = dir_ / name;
        files_.push_back({name, sha256_file(path), fs::file_size(path)});
    }

    fs::path dir_;
    std::vector<FileEntry> files_;
    std::vector<std::string> flags_;
    std::vector<std::pair<std::string, double>> metrics_;
};

RumProblem rum_problem(const RunConfig& c) {
    const auto g = grids_of(c);
    const auto ws = build_weights(g, c.omega1, c.k, weights_of(c));
    const auto cut = make_cutoff(g.space, c.omega, c.omega1, 2 * c.k + 1);
    auto pb = RumProblem::odd(g, c.k, c.eps, initial_data(c, g.space), ws, cut.chi);
    pb.op = ParabolicOperator::heat(scheme_of(c.scheme));
    return pb;
}

void run_rum(const RunConfig& c, Output& out) {
    const auto pb = rum_problem(c);
    const auto res = solve_rum(pb, rum_options_of(c));
    out.field("control", res.final.h, pb.grids);
    out.field("state", res.final.zeta, pb.grids);
    out.metric("terminal_q_norm", res.terminal_q_norm);
    out.metric("weighted_control_norm", res.weighted_control_norm);
    out.metric("J", res.final.J);
    out.metric("el_residual", res.final.residual);
    out.metric("duality_gap", res.duality_gap);
    out.metric("iterations", res.final.iteration);
    out.metric("converged", res.converged ? 1.0 : 0.0);
    if (!res.converged) out.flag("rum: not converged (" + res.note + ")");
}

void run_sweep(const RunConfig& c, Output& out) {
    const auto pb = rum_problem(c);
    const auto t = epsilon_sweep(pb, c.eps_ladder, rum_options_of(c));
    out.sweep(t);
    double lo = INFINITY, hi = 0.0;
    int conv = 0;
    for (const auto& r : t.rows) {
        lo = std::min(lo, r.weighted_control_norm);
        hi = std::max(hi, r.weighted_control_norm);
        conv += r.converged ? 1 : 0;
        if (!r.converged) out.flag("sweep: eps " + format_number(r.eps) + " not converged");
    }
    out.metric("slope", t.slope);
    out.metric("weighted_control_norm_spread", lo > 0.0 ? hi / lo - 1.0 : 0.0);
    out.metric("converged_rungs", conv);
}

template <class T>
void report_strategy(const StrategyReport<T>& r, Output& out) {
    out.field("control", r.control, r.grids);
    out.field("u", r.u, r.grids);
    out.field("v", r.v, r.grids);
    out.metric("phase1_terminal", r.phase1.terminal);
    out.metric("final_u", r.final_u);
    out.metric("final_v", r.final_v);
    out.metric("final_residual", r.final_residual());
    out.metric("coupling_identity_error", r.coupling_identity_error);
    out.metric("reconstruction_error", r.reconstruction_error);
    out.metric("resimulation_error", r.resimulation_error);
    out.metric("control_norm_2", r.phase1.norm_2 + r.phase2.norm_2);
    for (const auto& row : scaling_certificate(r, {2.0, 4.0, 8.0})) {
        out.metric("scaling_ratio_p" + format_number(row.p), row.ratio);
    }
    out.flags(r.phase1.flags);
    out.flags(r.phase2.flags);
    out.flags(r.flags);
}

void run_even_real(const RunConfig& c, Output& out) {
    auto p = power_config(c, c.n);
    std::fill(p.u0.begin(), p.u0.end(), 0.0);
    for (std::size_t i = 0; i < p.v0.size(); ++i) p.v0[i] = std::sin(std::numbers::pi * p.grids.space.x(i));
    const auto r = demo_even_obstruction(p, c.draws, c.seed);
    // one row at t = T
    RealField row(1, p.grids.space.size());
    row.set_row(0, r.free_terminal);
    out.field("free_terminal", row, Grids{p.grids.space, TimeGrid(c.T, 4, c.T)});
    out.metric("controls_tested", r.controls_tested);
    out.metric("violations", r.violations);
    out.metric("min_gap", r.min_gap);
    out.metric("free_min", r.free_min);
    out.metric("free_midpoint", r.free_midpoint);
    out.metric("zero_control_exact", r.zero_control_exact ? 1.0 : 0.0);
    if (r.violations > 0) out.flag("even-real: comparison principle violated");
}

void run_carleman(const RunConfig& c, Output& out) {
    const auto g = grids_of(c);
    const std::vector<double> s_values{5.0, 10.0, 20.0, 40.0};
    const auto sw = carleman_sweep(g, c.omega, c.omega1, c.k, s_values, weights_of(c), c.draws, c.seed);
    for (const auto& r : sw.records) {
        const std::string tag = "[s=" + format_number(r.s) + "]";
        out.metric("l2" + tag, r.l2);
        out.metric("l2kp2" + tag, r.l2kp2);
        out.metric("observability" + tag, r.observability);
        if (!std::isfinite(r.l2) || !std::isfinite(r.l2kp2)) out.flag("carleman: non-finite ratio at s " + tag);
    }
    out.metric("best_s", sw.records[sw.best].s);
    if (c.k >= 1) {
        const auto t = exponent_table(1, c.k);
        out.metric("n0", t.n0);
        out.metric("m", t.m);
    }
}

void run_trajectory(const RunConfig& c, Output& out) {
    const auto spec = NonlinearitySpec::catalog(c.nonlinearity, c.k);
    TrajectoryConfig tc;
    tc.grids = grids_of(c);
    tc.omega = c.omega;
    tc.omega0 = c.omega0;
    tc.omega1 = c.omega1;
    tc.eps_rum = c.eps;
    tc.weights = weights_of(c);
    tc.rum = rum_options_of(c);
    const auto r = build_reference_trajectory(spec, c.bump_eps, tc);
    out.field("u", r.u, r.grids);
    out.field("v", r.v, r.grids);
    out.field("control", r.h, r.grids);
    out.metric("picard_iterations", r.picard_iterations);
    out.metric("v_mid", r.v_mid);
    out.metric("v_mid_over_eps_power", r.v_mid / std::pow(c.bump_eps, 2 * c.k + 1));
    out.metric("certificate", r.certificate);
    out.metric("terminal_u", r.terminal_u);
    out.metric("terminal_v", r.terminal_v);
    out.metric("consistency_error", r.consistency_error);
    out.metric("resimulation_error", r.resimulation_error);
    out.flags(r.flags);
}

}  // namespace

std::string format_number(double v) {
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
    return std::string(buf.data(), res.ptr);
}

std::string sha256_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path.string());
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf{};
    while (is) {
        is.read(buf.data(), buf.size());
        if (is.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(is.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md.data(), &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

void RunConfig::validate() const {
    if (!kScenarios.count(scenario)) throw ConfigError("scenario: unknown scenario '" + scenario + "'");
    if (nx < 7) throw ConfigError("nx: must be >= 7");
    if (nt < 4 || nt % 2 != 0) throw ConfigError("nt: must be even and >= 4");
    if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("T: must be positive");
    if (!(omega.lo > 0.0 && omega.hi < 1.0 && omega.lo < omega.hi)) {
        throw ConfigError("omega: must lie strictly inside (0, 1)");
    }
    const SpatialGrid grid(1.0, nx);
    check_nested(grid, omega, omega1, "omega1");
    if (scenario == "trajectory") check_nested(grid, omega, omega0, "omega0");
    if (k < 0) throw ConfigError("k: must be >= 0");
    if ((scenario == "odd" || scenario == "trajectory") && k < 1) throw ConfigError("k: must be >= 1");
    if (n < 2) throw ConfigError("n: must be >= 2");
    if ((scenario == "even-real" || scenario == "even-complex") && n % 2 != 0) throw ConfigError("n: must be even");
    if (!(eps > 0.0)) throw ConfigError("eps: must be positive");
    if (eps_ladder.empty()) throw ConfigError("eps_ladder: must not be empty");
    for (std::size_t i = 0; i < eps_ladder.size(); ++i) {
        if (!(eps_ladder[i] > 0.0) || (i > 0 && !(eps_ladder[i] < eps_ladder[i - 1]))) {
            throw ConfigError("eps_ladder: must be positive and strictly decreasing");
        }
    }
    if (!(s >= 1.0)) throw ConfigError("s: must be >= 1");
    if (!(lambda > 0.0)) throw ConfigError("lambda: must be positive");
    if (scheme != "implicit_euler" && scheme != "crank_nicolson") {
        throw ConfigError("scheme: must be implicit_euler or crank_nicolson");
    }
    if ((scenario == "even-real" || scenario == "trajectory") && scheme != "implicit_euler") {
        throw ConfigError("scheme: " + scenario + " needs implicit_euler");
    }
    if (!(tol > 0.0)) throw ConfigError("tol: must be positive");
    if (max_iter < 1) throw ConfigError("max_iter: must be >= 1");
    if (data != "sine" && data != "zero" && data != "random") throw ConfigError("data: must be sine, zero or random");
    if (scenario == "trajectory") {
        try {
            NonlinearitySpec::catalog(nonlinearity, std::max(k, 1));
        } catch (const ConfigError& e) {
            throw ConfigError(std::string("nonlinearity: ") + e.what());
        }
    }
    if (!(bump_eps > 0.0)) throw ConfigError("bump_eps: must be positive");
    if (draws < 1) throw ConfigError("draws: must be >= 1");
    if (out.empty()) throw ConfigError("out: must not be empty");
}

json to_json(const RunConfig& c) {
    return json{{"scenario", c.scenario},
                {"nx", c.nx},
                {"nt", c.nt},
                {"T", c.T},
                {"omega", interval_json(c.omega)},
                {"omega1", interval_json(c.omega1)},
                {"omega0", interval_json(c.omega0)},
                {"k", c.k},
                {"n", c.n},
                {"eps", c.eps},
                {"eps_ladder", c.eps_ladder},
                {"s", c.s},
                {"lambda", c.lambda},
                {"scheme", c.scheme},
                {"tol", c.tol},
                {"max_iter", c.max_iter},
                {"data", c.data},
                {"nonlinearity", c.nonlinearity},
                {"bump_eps", c.bump_eps},
                {"draws", c.draws},
                {"out", c.out},
                {"seed", c.seed}};
}

RunConfig from_json(const json& j, RunConfig c) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    for (const auto& [key, v] : j.items()) {
        try {
            if (key == "scenario") c.scenario = v.get<std::string>();
            else if (key == "nx") c.nx = v.get<std::size_t>();
            else if (key == "nt") c.nt = v.get<std::size_t>();
            else if (key == "T") c.T = v.get<double>();
            else if (key == "omega") c.omega = interval_from(v, key);
            else if (key == "omega1") c.omega1 = interval_from(v, key);
            else if (key == "omega0") c.omega0 = interval_from(v, key);
            else if (key == "k") c.k = v.get<int>();
            else if (key == "n") c.n = v.get<int>();
            else if (key == "eps") c.eps = v.get<double>();
            else if (key == "eps_ladder") c.eps_ladder = v.get<std::vector<double>>();
            else if (key == "s") c.s = v.get<double>();
            else if (key == "lambda") c.lambda = v.get<double>();
            else if (key == "scheme") c.scheme = v.get<std::string>();
            else if (key == "tol") c.tol = v.get<double>();
            else if (key == "max_iter") c.max_iter = v.get<int>();
            else if (key == "data") c.data = v.get<std::string>();
            else if (key == "nonlinearity") c.nonlinearity = v.get<std::string>();
            else if (key == "bump_eps") c.bump_eps = v.get<double>();
            else if (key == "draws") c.draws = v.get<int>();
            else if (key == "out") c.out = v.get<std::string>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else throw ConfigError("unknown key '" + key + "'");
        } catch (const json::exception& e) {
            throw ConfigError(key + ": " + e.what());
        }
    }
    return c;
}

RunConfig parse_config(const std::string& scenario, const std::optional<fs::path>& path, const FlagOverrides& f) {
    RunConfig c;
    if (path) {
        std::ifstream is(*path);
        if (!is) throw ConfigError("config: cannot open " + path->string());
        json j;
        try {
            is >> j;
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
        c = from_json(j, c);
    }
    if (!scenario.empty()) {
        if (!c.scenario.empty() && c.scenario != scenario) {
            throw ConfigError("scenario: file says '" + c.scenario + "' but '" + scenario + "' was requested");
        }
        c.scenario = scenario;
    }
    if (f.nx) c.nx = *f.nx;
    if (f.nt) c.nt = *f.nt;
    if (f.k) c.k = *f.k;
    if (f.n) c.n = *f.n;
    if (f.eps) c.eps = *f.eps;
    if (f.s) c.s = *f.s;
    if (f.eps_ladder) c.eps_ladder = *f.eps_ladder;
    if (f.out) c.out = *f.out;
    if (f.seed) c.seed = *f.seed;
    c.validate();
    return c;
}

json RunManifest::to_json() const {
    json m;
    m["config"] = cli::to_json(config);
    m["version"] = version;
    m["wall_seconds"] = wall_seconds;
    m["status"] = status;
    m["flags"] = flags;
    json metrics_json = json::object();
    for (const auto& [name, value] : metrics) metrics_json[name] = value;
    m["metrics"] = metrics_json;
    json files_json = json::array();
    for (const auto& f : files) files_json.push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    m["files"] = files_json;
    return m;
}

RunManifest run(const RunConfig& config) {
    config.validate();
    const auto start = std::chrono::steady_clock::now();
    Output out(config.out);
    RunManifest m;
    m.config = config;
    m.version = RUM_VERSION;
    m.status = "ok";
    try {
        const auto& s = config.scenario;
        if (s == "rum") run_rum(config, out);
        else if (s == "sweep") run_sweep(config, out);
        else if (s == "odd") report_strategy(run_odd_strategy(power_config(config, 2 * config.k + 1)), out);
        else if (s == "power") report_strategy(run_general_power(power_config(config, config.n)), out);
        else if (s == "even-complex") report_strategy(run_even_complex(power_config(config, config.n)), out);
        else if (s == "even-real") run_even_real(config, out);
        else if (s == "carleman") run_carleman(config, out);
        else if (s == "trajectory") run_trajectory(config, out);
        if (!out.flag_list().empty()) m.status = "flagged";
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        out.flag(std::string("error: ") + e.what());
        m.status = "error";
    }
    out.summary();
    m.flags = out.flag_list();
    m.metrics = out.metrics();
    m.files = out.files();
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ofstream os(out.dir() / "manifest.json", std::ios::binary | std::ios::trunc);
    os << m.to_json().dump(2) << '\n';
    return m;
}

}  // namespace rum::cli
