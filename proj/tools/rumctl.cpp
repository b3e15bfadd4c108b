#include <CLI11.hpp>

#include <iostream>

#include "rum/cli.hpp"
#include "rum/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"rumctl: controls for heat systems with power couplings"};
    std::string scenario;
    std::string config_path;
    rum::cli::FlagOverrides f;
    std::size_t nx = 0, nt = 0;
    int k = 0, n = 0;
    double eps = 0.0, s = 0.0;
    std::vector<double> ladder;
    std::string out;
    std::uint64_t seed = 0;

    app.add_option("scenario", scenario,
                   "rum | odd | power | even-real | even-complex | carleman | trajectory | sweep")
        ->required();
    app.add_option("--config", config_path, "JSON config file");
    auto* o_nx = app.add_option("--nx", nx, "interior space nodes");
    auto* o_nt = app.add_option("--nt", nt, "time steps (even)");
    auto* o_k = app.add_option("--k", k, "odd power index, n = 2k+1");
    auto* o_n = app.add_option("--n", n, "coupling power");
    auto* o_eps = app.add_option("--eps", eps, "penalty");
    auto* o_ladder = app.add_option("--eps-ladder", ladder, "comma separated, strictly decreasing")->delimiter(',');
    o_eps->excludes(o_ladder);
    auto* o_s = app.add_option("--s", s, "Carleman parameter");
    auto* o_out = app.add_option("--out", out, "output directory");
    auto* o_seed = app.add_option("--seed", seed, "random seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    if (*o_nx) f.nx = nx;
    if (*o_nt) f.nt = nt;
    if (*o_k) f.k = k;
    if (*o_n) f.n = n;
    if (*o_eps) f.eps = eps;
    if (*o_ladder) f.eps_ladder = ladder;
    if (*o_s) f.s = s;
    if (*o_out) f.out = out;
    if (*o_seed) f.seed = seed;

    try {
        std::optional<std::filesystem::path> path;
        if (!config_path.empty()) path = config_path;
        const auto config = rum::cli::parse_config(scenario, path, f);
        const auto m = rum::cli::run(config);
        std::cout << "status: " << m.status << '\n';
        for (const auto& [name, value] : m.metrics) {
            std::cout << "  " << name << " = " << rum::cli::format_number(value) << '\n';
        }
        for (const auto& flag : m.flags) std::cout << "flag: " << flag << '\n';
        std::cout << "manifest: " << (std::filesystem::path(config.out) / "manifest.json").string() << '\n';
        return m.exit_code();
    } catch (const rum::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
