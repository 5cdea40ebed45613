#pragma once

// Command implementations behind the agfit executable. Each command writes
// its report to `out`, diagnostics to `err`, and returns the process exit code.

#include <agfit/error.hpp>
#include <agfit/fit.hpp>
#include <agfit/graph.hpp>
#include <agfit/io.hpp>
#include <agfit/mseparation.hpp>
#include <agfit/sim.hpp>
#include <agfit/stats.hpp>

#include <json.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace agfit::cli {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int not_ok = 1;          // non-maximal graph, no convergence, or failed replicates
inline constexpr int invalid_graph = 2;
inline constexpr int parse_error = 3;
inline constexpr int usage = 4;           // bad flags or label mismatch
inline constexpr int numeric_error = 5;
} // namespace exit_code

inline std::string format_set(const AncestralGraph& g, const VertexSet& s)
{
    std::string out = "{";
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (k) out += ",";
        out += g.labels()[s[k]];
    }
    return out + "}";
}

/// Exit code for a library error raised while loading or fitting.
inline int code_for(const Error& e)
{
    switch (e.code()) {
        case ErrorCode::parse_error:
        case ErrorCode::invalid_coding: return exit_code::parse_error;
        case ErrorCode::self_loop:
        case ErrorCode::multi_edge:
        case ErrorCode::condition_one_violated:
        case ErrorCode::condition_two_violated: return exit_code::invalid_graph;
        case ErrorCode::not_maximal: return exit_code::not_ok;
        case ErrorCode::label_mismatch:
        case ErrorCode::invalid_argument: return exit_code::usage;
        default: return exit_code::numeric_error;
    }
}

inline int cmd_check(const std::string& graph_path, std::ostream& out, std::ostream& err,
                     std::size_t vertex_limit = default_vertex_limit)
{
    AncestralGraph g;
    try {
        g = io::read_file(graph_path, [](std::istream& in) { return io::read_graph(in); });
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        const int code = code_for(e);
        if (code == exit_code::invalid_graph) out << "invalid: " << e.what() << '\n';
        return code;
    }

    const auto d = decompose(g);
    std::optional<bool> maximal;
    try {
        maximal = is_maximal(g, vertex_limit);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::vertex_limit_exceeded) throw;
    }
    out << "valid, " << (maximal ? (*maximal ? "maximal" : "not maximal") : "maximality undecided") << ", un_G = "
        << format_set(g, d.un) << '\n';
    out << "db_G = " << format_set(g, d.db) << '\n';
    if (!maximal) {
        out << "maximal: undecided (exhaustive search is limited to " << vertex_limit << " vertices)\n";
        return exit_code::ok;
    }
    out << "maximal: " << (*maximal ? "yes" : "no") << '\n';
    out << "independences:\n";
    for (const auto& s : implied_pairwise_independences(g, vertex_limit)) {
        const auto& i = g.labels()[s.a.front()];
        const auto& j = g.labels()[s.b.front()];
        if (s.holds) out << i << " _||_ " << j << " | " << format_set(g, s.c) << '\n';
        else out << i << " and " << j << ": no separating set\n";
    }
    if (!*maximal) {
        const auto completed = maximal_completion(g, vertex_limit);
        out << "maximal completion adds:";
        for (const auto& e : completed.edges()) {
            if (!g.adjacent(e.from, e.to)) out << ' ' << g.labels()[e.from] << "<->" << g.labels()[e.to];
        }
        out << '\n';
    }
    return *maximal ? exit_code::ok : exit_code::not_ok;
}

struct FitOptions
{
    std::string graph_path;
    std::string data_path;
    std::string cov_path;
    std::optional<std::size_t> n;
    double tolerance = 1e-6;
    std::size_t max_cycles = 5000;
    bool mean_adjusted = false;
    std::string format = "text";
    int digits = 2;
    std::size_t restarts = 0;
};

/// Full V x V views of the fitted parameters.
struct FitTables
{
    std::vector<std::string> labels;
    Eigen::MatrixXd sigma_hat;
    Eigen::MatrixXd lambda_hat;      ///< concentration, zero outside the undirected part
    Eigen::MatrixXd lambda_hat_cov;  ///< its inverse, zero outside the undirected part
    Eigen::MatrixXd i_minus_beta_hat;
    Eigen::MatrixXd omega_hat;       ///< zero on the undirected part
};

inline FitTables tables(const AncestralGraph& g, const FitResult& r)
{
    const auto p = static_cast<Eigen::Index>(g.size());
    FitTables t;
    t.labels = g.labels();
    t.sigma_hat = r.sigma_hat;
    t.lambda_hat = Eigen::MatrixXd::Zero(p, p);
    t.lambda_hat_cov = Eigen::MatrixXd::Zero(p, p);
    t.omega_hat = Eigen::MatrixXd::Zero(p, p);
    t.i_minus_beta_hat = Eigen::MatrixXd::Identity(p, p) - r.beta_hat;
    const auto un = as_eigen_indices(g.undirected_part());
    const auto rest = as_eigen_indices(g.arrowhead_part());
    const Eigen::MatrixXd lambda_inv =
        un.empty() ? Eigen::MatrixXd(0, 0) : spd_inverse(r.lambda_hat, ErrorCode::not_positive_definite, "lambda");
    for (std::size_t a = 0; a < un.size(); ++a) {
        for (std::size_t b = 0; b < un.size(); ++b) {
            t.lambda_hat(un[a], un[b]) = r.lambda_hat(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
            t.lambda_hat_cov(un[a], un[b]) = lambda_inv(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        }
    }
    for (std::size_t a = 0; a < rest.size(); ++a) {
        for (std::size_t b = 0; b < rest.size(); ++b) {
            t.omega_hat(rest[a], rest[b]) = r.omega_hat(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        }
    }
    return t;
}

/// Rounds half away from zero and clears negative zero.
inline double round_to(double x, int digits)
{
    const double scale = std::pow(10.0, digits);
    const double r = std::round(x * scale) / scale;
    return r == 0.0 ? 0.0 : r;
}

inline void print_matrix(std::ostream& out, const std::string& name, const std::vector<std::string>& labels,
                         const Eigen::MatrixXd& m, int digits)
{
    std::vector<std::vector<std::string>> cells(static_cast<std::size_t>(m.rows()));
    std::size_t width = 0;
    for (const auto& l : labels) width = std::max(width, l.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            std::ostringstream s;
            s << std::fixed << std::setprecision(digits) << round_to(m(i, j), digits);
            cells[static_cast<std::size_t>(i)].push_back(s.str());
            width = std::max(width, s.str().size());
        }
    }
    std::size_t label_width = 0;
    for (const auto& l : labels) label_width = std::max(label_width, l.size());
    out << '$' << name << '\n' << std::string(label_width, ' ');
    for (const auto& l : labels) out << ' ' << std::setw(static_cast<int>(width)) << l;
    out << '\n';
    for (std::size_t i = 0; i < cells.size(); ++i) {
        out << std::left << std::setw(static_cast<int>(label_width)) << labels[i] << std::right;
        for (const auto& c : cells[i]) out << ' ' << std::setw(static_cast<int>(width)) << c;
        out << '\n';
    }
    out << '\n';
}

inline void print_text(std::ostream& out, const AncestralGraph& g, const FitResult& r, int digits)
{
    const auto t = tables(g, r);
    print_matrix(out, "Shat", t.labels, t.sigma_hat, digits);
    print_matrix(out, "Lhat", t.labels, t.lambda_hat, digits);
    print_matrix(out, "Lhat.cov", t.labels, t.lambda_hat_cov, digits);
    print_matrix(out, "Bhat", t.labels, t.i_minus_beta_hat, digits);
    print_matrix(out, "Ohat", t.labels, t.omega_hat, digits);
    out << std::fixed << std::setprecision(digits);
    out << "$dev\n[1] " << round_to(r.deviance, digits) << "\n\n";
    out << "$df\n[1] " << r.df << "\n\n";
    if (r.df > 0) out << "$pvalue\n[1] " << round_to(chi_square_pvalue(r.deviance, r.df), digits) << "\n\n";
    out << "$it\n[1] " << r.iterations << "\n\n";
    out << "$converged\n[1] " << (r.converged ? "TRUE" : "FALSE") << '\n';
    out.unsetf(std::ios::floatfield);
}

inline nlohmann::json to_json(const Eigen::MatrixXd& m)
{
    auto rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        auto row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline nlohmann::json to_json(const AncestralGraph& g, const FitResult& r)
{
    const auto t = tables(g, r);
    nlohmann::json j;
    j["labels"] = t.labels;
    j["sigma_hat"] = to_json(t.sigma_hat);
    j["lambda_hat"] = to_json(t.lambda_hat);
    j["lambda_hat_cov"] = to_json(t.lambda_hat_cov);
    j["i_minus_beta_hat"] = to_json(t.i_minus_beta_hat);
    j["omega_hat"] = to_json(t.omega_hat);
    j["deviance"] = r.deviance;
    j["df"] = r.df;
    j["p_value"] = r.df > 0 ? nlohmann::json(chi_square_pvalue(r.deviance, r.df)) : nlohmann::json(nullptr);
    j["iterations"] = r.iterations;
    j["converged"] = r.converged;
    j["log_likelihood"] = r.log_likelihood;
    j["log_likelihood_trace"] = r.log_likelihood_trace;
    return j;
}

inline int cmd_fit(const FitOptions& opt, std::ostream& out, std::ostream& err)
{
    if (opt.data_path.empty() == opt.cov_path.empty()) {
        err << "error: give exactly one of --data and --cov\n";
        return exit_code::usage;
    }
    if (!opt.cov_path.empty() && !opt.n) {
        err << "error: --cov needs the sample size --n\n";
        return exit_code::usage;
    }
    if (opt.format != "text" && opt.format != "json") {
        err << "error: --format must be text or json\n";
        return exit_code::usage;
    }
    try {
        const auto graph = io::read_file(opt.graph_path, [](std::istream& in) { return io::read_graph(in); });
        const auto problem =
            opt.cov_path.empty()
                ? io::align_data(graph, io::read_file(opt.data_path, [](std::istream& in) { return io::read_data(in); }),
                                 opt.mean_adjusted)
                : io::align(graph, io::read_file(opt.cov_path, [](std::istream& in) { return io::read_covariance(in); }), *opt.n,
                            opt.mean_adjusted);
        FitConfig config;
        config.tolerance = opt.tolerance;
        config.max_cycles = opt.max_cycles;
        config.restarts = opt.restarts;
        const auto result = fit(problem.graph, problem.stats, config);
        if (opt.format == "json") out << to_json(problem.graph, result).dump(2) << '\n';
        else print_text(out, problem.graph, result, opt.digits);
        if (!result.converged) err << "warning: no convergence after " << result.iterations << " cycles\n";
        return result.converged ? exit_code::ok : exit_code::not_ok;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return code_for(e);
    }
}

struct SimulateOptions
{
    std::size_t p_min = 10;
    std::size_t p_max = 100;
    std::size_t step = 10;
    std::size_t replicates = 100;
    double rho = 0.3;
    std::uint64_t seed = 1;
    std::string out_path;
    double tolerance = 1e-6;
    std::size_t max_cycles = 5000;
};

inline void write_report_csv(std::ostream& out, const ExperimentReport& report)
{
    out << "p,replicate,iterations,converged,cpu_seconds,deviance\n";
    for (const auto& r : report.records) {
        out << r.p << ',' << r.replicate << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << std::setprecision(6)
            << r.cpu_seconds << ',' << std::setprecision(10) << r.deviance << '\n';
    }
}

inline int cmd_simulate(const SimulateOptions& opt, std::ostream& out, std::ostream& err)
{
    if (opt.p_min < 3 || opt.p_max < opt.p_min || opt.step < 1 || !std::isfinite(opt.rho) || !(opt.tolerance > 0.0) ||
        opt.max_cycles < 1) {
        err << "error: need 3 <= p-min <= p-max, step >= 1, finite rho, tol > 0 and max-cycles >= 1\n";
        return exit_code::usage;
    }
    std::vector<std::size_t> ps;
    for (std::size_t p = opt.p_min; p <= opt.p_max; p += opt.step) ps.push_back(p);
    for (auto p : ps) {
        try {
            cycle_covariance({p, opt.rho});
        } catch (const Error& e) {
            err << "error: " << e.what() << '\n';
            return code_for(e);
        }
    }

    FitConfig config;
    config.tolerance = opt.tolerance;
    config.max_cycles = opt.max_cycles;
    const auto report = run_scaling_experiment(ps, opt.replicates, opt.rho, opt.seed, config);

    std::ostream* summary = &out;
    if (opt.out_path.empty()) {
        write_report_csv(out, report);
        summary = &err;
    } else {
        std::ofstream file(opt.out_path);
        if (!file) {
            err << "error: cannot write '" << opt.out_path << "'\n";
            return exit_code::usage;
        }
        write_report_csv(file, report);
    }
    for (const auto& s : report.summaries) {
        *summary << "p=" << s.p << " replicates=" << s.replicates << " mean_iterations=" << std::setprecision(4) << s.mean_iterations
                 << " min=" << s.min_iterations << " max=" << s.max_iterations << " mean_cpu_seconds=" << std::setprecision(4)
                 << s.mean_cpu_seconds << " failures=" << s.failures << '\n';
    }
    for (const auto& r : report.records) {
        if (!r.error.empty()) err << "p=" << r.p << " replicate=" << r.replicate << ": " << r.error << '\n';
    }
    return report.failures() == 0 ? exit_code::ok : exit_code::not_ok;
}

} // namespace agfit::cli
