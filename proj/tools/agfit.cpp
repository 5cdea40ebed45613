#include <agfit/cli.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>

namespace {

template <class T>
T env_default(const char* name, T fallback)
{
    const char* raw = std::getenv(name);
    if (!raw || !*raw) return fallback;
    try {
        if constexpr (std::is_same_v<T, double>) return std::stod(raw);
        else return static_cast<T>(std::stoull(raw));
    } catch (const std::exception&) {
        std::cerr << "warning: ignoring malformed " << name << "='" << raw << "'\n";
        return fallback;
    }
}

} // namespace

int main(int argc, char** argv)
{
    using namespace agfit::cli;

    CLI::App app{"Maximum likelihood fitting of Gaussian ancestral graph models"};
    app.require_subcommand(1);

    const double default_tol = env_default("AGFIT_TOL", 1e-6);
    const std::size_t default_cycles = env_default<std::size_t>("AGFIT_MAX_CYCLES", 5000);

    std::string check_graph;
    std::size_t vertex_limit = agfit::default_vertex_limit;
    auto* check = app.add_subcommand("check", "Validate a graph and list its pairwise independences");
    check->add_option("graph", check_graph, "Adjacency matrix CSV")->required();
    check->add_option("--vertex-limit", vertex_limit, "Largest graph for exhaustive separating-set search");

    FitOptions fit_opt;
    fit_opt.tolerance = default_tol;
    fit_opt.max_cycles = default_cycles;
    std::size_t n = 0;
    bool centered = false;
    auto* fit = app.add_subcommand("fit", "Fit a Gaussian ancestral graph model");
    fit->add_option("--graph", fit_opt.graph_path, "Adjacency matrix CSV")->required();
    auto* data_opt = fit->add_option("--data", fit_opt.data_path, "Raw data CSV (rows are observations)");
    auto* cov_opt = fit->add_option("--cov", fit_opt.cov_path, "Covariance or correlation matrix CSV");
    auto* n_opt = fit->add_option("--n", n, "Sample size behind --cov");
    data_opt->excludes(cov_opt);
    fit->add_option("--tol", fit_opt.tolerance, "Convergence threshold on fitted covariance entries (env AGFIT_TOL)");
    fit->add_option("--max-cycles", fit_opt.max_cycles, "Maximum number of full ICF cycles (env AGFIT_MAX_CYCLES)");
    auto* centered_flag = fit->add_flag("--centered", centered, "Data have mean zero (default)");
    fit->add_flag("--mean-adjusted", fit_opt.mean_adjusted, "Estimate and subtract the mean")->excludes(centered_flag);
    fit->add_option("--format", fit_opt.format, "Output format")->check(CLI::IsMember({"text", "json"}));
    fit->add_option("--digits", fit_opt.digits, "Decimals in text output");
    fit->add_option("--restarts", fit_opt.restarts, "Additional random starting points");

    SimulateOptions sim_opt;
    sim_opt.tolerance = default_tol;
    sim_opt.max_cycles = default_cycles;
    auto* simulate = app.add_subcommand("simulate", "Timing experiment on chordless bidirected cycles");
    simulate->add_option("--p-min", sim_opt.p_min);
    simulate->add_option("--p-max", sim_opt.p_max);
    simulate->add_option("--step", sim_opt.step);
    simulate->add_option("--replicates", sim_opt.replicates);
    simulate->add_option("--rho", sim_opt.rho);
    simulate->add_option("--seed", sim_opt.seed);
    simulate->add_option("--out", sim_opt.out_path, "CSV report path (default: stdout)");
    simulate->add_option("--tol", sim_opt.tolerance);
    simulate->add_option("--max-cycles", sim_opt.max_cycles);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_code::usage;
    }

    try {
        if (*check) return cmd_check(check_graph, std::cout, std::cerr, vertex_limit);
        if (*fit) {
            if (*n_opt) fit_opt.n = n;
            return cmd_fit(fit_opt, std::cout, std::cerr);
        }
        if (*simulate) return cmd_simulate(sim_opt, std::cout, std::cerr);
    } catch (const agfit::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return code_for(e);
    }
    return exit_code::usage;
}
