#pragma once

#include <agfit/error.hpp>
#include <agfit/graph.hpp>
#include <agfit/index_map.hpp>
#include <agfit/ipf.hpp>
#include <agfit/linalg.hpp>
#include <agfit/mseparation.hpp>
#include <agfit/param.hpp>
#include <agfit/stats.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace agfit {

enum class LambdaMode { ipf, fixed, identity };

/// Snapshot handed to FitConfig::on_cycle after every full ICF cycle.
struct CycleInfo
{
    std::size_t cycle;
    const ParamSet& params;
    const Eigen::MatrixXd& sigma;
    double log_likelihood;
    double max_change;
};

struct FitConfig
{
    /// Stop once no entry of the fitted covariance moves more than this over a full cycle.
    double tolerance = 1e-6;
    std::size_t max_cycles = 5000;
    LambdaMode lambda_mode = LambdaMode::ipf;
    /// Concentration matrix of the undirected part, used with LambdaMode::fixed.
    Eigen::MatrixXd fixed_lambda;
    double ipf_tolerance = 1e-10;
    /// Extra random starting points; the fit with the largest likelihood wins.
    std::size_t restarts = 0;
    std::uint64_t restart_seed = 0;
    bool check_maximality = true;
    std::size_t vertex_limit = default_vertex_limit;
    std::function<void(const CycleInfo&)> on_cycle;
};

struct FitResult
{
    Eigen::MatrixXd sigma_hat;
    Eigen::MatrixXd lambda_hat;  ///< concentration of the undirected part
    Eigen::MatrixXd beta_hat;
    Eigen::MatrixXd omega_hat;
    double log_likelihood = 0.0;
    double deviance = 0.0;
    long df = 0;
    std::size_t iterations = 0;
    bool converged = false;
    /// Log-likelihood at the start and after each full cycle of the returned run.
    std::vector<double> log_likelihood_trace;

    ParamSet params() const { return {lambda_hat, beta_hat, omega_hat}; }
};

/// New values for the equation of one vertex outside the undirected part.
struct IcfUpdate
{
    std::size_t vertex = 0;
    Eigen::VectorXd beta;             ///< coefficients on pa(vertex), ascending
    Eigen::VectorXd omega_spouses;    ///< omega_{vertex,k} for k in sp(vertex), ascending
    double conditional_variance = 0;  ///< omega_{vertex vertex . -vertex}
    double omega_ii = 0;
};

namespace detail {

inline IcfUpdate finish_update(const AncestralGraph& g, std::size_t i, const Eigen::VectorXd& theta, double rss_over_n,
                               const Eigen::MatrixXd& weights, const IndexMap& minus_i)
{
    const auto& pa = g.parents(i);
    const auto& sp = g.spouses(i);
    const auto lpa = static_cast<Eigen::Index>(pa.size());
    const auto lsp = static_cast<Eigen::Index>(sp.size());
    IcfUpdate u;
    u.vertex = i;
    u.beta = theta.head(lpa);
    u.omega_spouses = theta.tail(lsp);
    u.conditional_variance = rss_over_n;
    // Omega_{i,-i} is zero off sp(i), so only the sp x sp block of the inverse enters.
    Eigen::MatrixXd inv_sp(lsp, lsp);
    for (Eigen::Index a = 0; a < lsp; ++a) {
        for (Eigen::Index b = 0; b < lsp; ++b) {
            inv_sp(a, b) = weights(a, static_cast<Eigen::Index>(minus_i.to_local(sp[static_cast<std::size_t>(b)])));
        }
    }
    u.omega_ii = rss_over_n + u.omega_spouses.dot(inv_sp * u.omega_spouses);
    return u;
}

} // namespace detail

/// One ICF update for vertex i outside the undirected part, computed from
/// the sample covariance. With the other equations and Omega_{-i,-i} held
/// fixed, regresses Y_i on its parents and on the pseudo-variables of its
/// spouses; the residual mean square gives the conditional variance and
/// omega_ii is rebuilt from it.
///
/// All regression cross-products are taken from S: a covariate row a^T Y
/// has covariance a^T S a with the others, so no raw data are needed.
inline IcfUpdate icf_step(const AncestralGraph& g, std::size_t i, const ParamSet& params, const SampleStats& stats)
{
    const auto p = static_cast<Eigen::Index>(g.size());
    if (stats.s.rows() != p) throw Error(ErrorCode::dimension_mismatch, "S does not match the graph size");
    const auto& pa = g.parents(i);
    const auto& sp = g.spouses(i);
    const auto lpa = static_cast<Eigen::Index>(pa.size());
    const auto lsp = static_cast<Eigen::Index>(sp.size());

    IndexMap minus_i;
    const Eigen::MatrixXd weights = pseudo_variable_weights(g, params.omega, i, minus_i);

    // Rows of the design as linear combinations of the variables in V.
    Eigen::MatrixXd design = Eigen::MatrixXd::Zero(lpa + lsp, p);
    for (Eigen::Index a = 0; a < lpa; ++a) design(a, static_cast<Eigen::Index>(pa[static_cast<std::size_t>(a)])) = 1.0;
    if (lsp > 0) {
        Eigen::MatrixXd resid_rows(static_cast<Eigen::Index>(minus_i.size()), p);
        for (std::size_t r = 0; r < minus_i.size(); ++r) {
            const auto v = static_cast<Eigen::Index>(minus_i.to_global(r));
            resid_rows.row(static_cast<Eigen::Index>(r)) = -params.beta.row(v);
            resid_rows(static_cast<Eigen::Index>(r), v) += 1.0;
        }
        design.bottomRows(lsp) = weights * resid_rows;
    }

    const auto ii = static_cast<Eigen::Index>(i);
    const Eigen::MatrixXd s_design = stats.s * design.transpose();
    const Eigen::MatrixXd xx = design * s_design;
    const Eigen::VectorXd xy = s_design.row(ii).transpose();

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(lpa + lsp);
    if (lpa + lsp > 0) {
        const auto llt = spd_factor(0.5 * (xx + xx.transpose()), ErrorCode::singular_design,
                                    "regression design for vertex " + g.labels()[i]);
        theta = llt.solve(xy);
    }
    const double rss_over_n = stats.s(ii, ii) - theta.dot(xy);
    if (!(rss_over_n > 0.0)) {
        throw Error(ErrorCode::singular_design, "vertex " + g.labels()[i] + " is fitted exactly by its covariates", i);
    }
    return detail::finish_update(g, i, theta, rss_over_n, weights, minus_i);
}

/// The same update computed literally from a data matrix (variables in rows):
/// residuals of the other equations, pseudo-variables, then a least squares
/// fit with the maximum likelihood divisor n.
inline IcfUpdate icf_step_data(const AncestralGraph& g, std::size_t i, const ParamSet& params, const Eigen::MatrixXd& y)
{
    const auto& pa = g.parents(i);
    const auto lpa = static_cast<Eigen::Index>(pa.size());
    const auto lsp = static_cast<Eigen::Index>(g.spouses(i).size());
    const auto n = y.cols();

    const Eigen::MatrixXd eps = residuals(y, params.beta);
    const Eigen::MatrixXd z = pseudo_variables(g, params.omega, eps, i);

    Eigen::MatrixXd x(n, lpa + lsp);
    for (Eigen::Index a = 0; a < lpa; ++a) x.col(a) = y.row(static_cast<Eigen::Index>(pa[static_cast<std::size_t>(a)])).transpose();
    for (Eigen::Index b = 0; b < lsp; ++b) x.col(lpa + b) = z.row(b).transpose();
    const Eigen::VectorXd response = y.row(static_cast<Eigen::Index>(i)).transpose();

    Eigen::VectorXd theta = Eigen::VectorXd::Zero(lpa + lsp);
    if (lpa + lsp > 0) {
        const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
        if (qr.rank() < lpa + lsp) throw Error(ErrorCode::singular_design, "rank-deficient regression design", i);
        theta = qr.solve(response);
    }
    const double rss_over_n = (response - x * theta).squaredNorm() / static_cast<double>(n);

    IndexMap minus_i;
    const Eigen::MatrixXd weights = pseudo_variable_weights(g, params.omega, i, minus_i);
    return detail::finish_update(g, i, theta, rss_over_n, weights, minus_i);
}

/// Writes an update into the parameter set.
inline void apply_update(const AncestralGraph& g, const IcfUpdate& u, ParamSet& params)
{
    const ParamLayout layout(g);
    const auto i = static_cast<Eigen::Index>(u.vertex);
    const auto& pa = g.parents(u.vertex);
    const auto& sp = g.spouses(u.vertex);
    for (std::size_t a = 0; a < pa.size(); ++a) params.beta(i, static_cast<Eigen::Index>(pa[a])) = u.beta(static_cast<Eigen::Index>(a));
    const auto li = static_cast<Eigen::Index>(layout.rest.to_local(u.vertex));
    for (std::size_t b = 0; b < sp.size(); ++b) {
        const auto lk = static_cast<Eigen::Index>(layout.rest.to_local(sp[b]));
        params.omega(li, lk) = params.omega(lk, li) = u.omega_spouses(static_cast<Eigen::Index>(b));
    }
    params.omega(li, li) = u.omega_ii;
}

namespace detail {

inline void check_config(const FitConfig& config)
{
    if (!(config.tolerance > 0.0)) throw Error(ErrorCode::invalid_argument, "tolerance must be positive");
    if (config.max_cycles < 1) throw Error(ErrorCode::invalid_argument, "max_cycles must be at least 1");
}

inline void check_inputs(const AncestralGraph& g, const SampleStats& stats, const FitConfig& config)
{
    check_config(config);
    if (stats.p() != g.size()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "graph has " + std::to_string(g.size()) + " vertices but S is " + std::to_string(stats.p()) + "x" +
                        std::to_string(stats.p()));
    }
    spd_factor(stats.s, ErrorCode::not_positive_definite, "sample covariance");
    if (config.check_maximality && !is_maximal(g, config.vertex_limit)) {
        throw Error(ErrorCode::not_maximal, "the graph is not maximal; fit its maximal completion instead");
    }
}

/// Lambda for the chosen mode, as a concentration matrix over the undirected part.
inline Eigen::MatrixXd initial_lambda(const AncestralGraph& g, const SampleStats& stats, const FitConfig& config)
{
    const auto& un = g.undirected_part();
    const auto nu = static_cast<Eigen::Index>(un.size());
    switch (config.lambda_mode) {
        case LambdaMode::identity: return Eigen::MatrixXd::Identity(nu, nu);
        case LambdaMode::fixed: {
            ParamSet probe = identity_params(g);
            probe.lambda = config.fixed_lambda;
            check_params(g, probe);
            spd_factor(probe.lambda, ErrorCode::not_positive_definite, "fixed lambda");
            return probe.lambda;
        }
        case LambdaMode::ipf: break;
    }
    const auto idx = as_eigen_indices(un);
    return fit_undirected_ipf(g.induced_subgraph(un), gather(stats.s, idx, idx), config.ipf_tolerance);
}

inline ParamSet default_start(const AncestralGraph& g, const SampleStats& stats, const Eigen::MatrixXd& lambda)
{
    const auto p = static_cast<Eigen::Index>(g.size());
    const auto rest = as_eigen_indices(g.arrowhead_part());
    Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rest.size()), static_cast<Eigen::Index>(rest.size()));
    for (std::size_t a = 0; a < rest.size(); ++a) omega(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a)) = stats.s(rest[a], rest[a]);
    return {lambda, Eigen::MatrixXd::Zero(p, p), std::move(omega)};
}

/// Random feasible start: regression coefficients drawn around zero and
/// residual correlations on the bidirected edges shrunk until Omega is
/// positive definite.
inline ParamSet random_start(const AncestralGraph& g, const SampleStats& stats, const Eigen::MatrixXd& lambda, std::mt19937_64& rng)
{
    ParamSet start = default_start(g, stats, lambda);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (auto j : g.parents(i)) {
            start.beta(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                coef(rng) * std::sqrt(stats.s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) /
                                      stats.s(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)));
        }
    }
    const ParamLayout layout(g);
    Eigen::MatrixXd corr = Eigen::MatrixXd::Identity(start.omega.rows(), start.omega.cols());
    for (const auto& e : g.edges()) {
        if (e.kind != EdgeKind::bidirected) continue;
        const auto a = static_cast<Eigen::Index>(layout.rest.to_local(e.from));
        const auto b = static_cast<Eigen::Index>(layout.rest.to_local(e.to));
        corr(a, b) = corr(b, a) = 0.5 * coef(rng);
    }
    Eigen::MatrixXd off = corr;
    off.diagonal().setZero();
    while (!is_positive_definite(corr)) {
        off *= 0.5;
        corr = Eigen::MatrixXd::Identity(corr.rows(), corr.cols()) + off;
    }
    const Eigen::VectorXd sd = start.omega.diagonal().cwiseSqrt();
    start.omega = sd.asDiagonal() * corr * sd.asDiagonal();
    return start;
}

inline Eigen::MatrixXd psi_matrix(const AncestralGraph& g, const Eigen::MatrixXd& lambda_inv, const Eigen::MatrixXd& omega)
{
    const auto p = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, p);
    const auto un = as_eigen_indices(g.undirected_part());
    const auto rest = as_eigen_indices(g.arrowhead_part());
    for (std::size_t a = 0; a < un.size(); ++a)
        for (std::size_t b = 0; b < un.size(); ++b)
            out(un[a], un[b]) = lambda_inv(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    for (std::size_t a = 0; a < rest.size(); ++a)
        for (std::size_t b = 0; b < rest.size(); ++b)
            out(rest[a], rest[b]) = omega(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    return out;
}

inline FitResult run_icf(const AncestralGraph& g, const SampleStats& stats, ParamSet params, const FitConfig& config)
{
    const Eigen::MatrixXd lambda_inv = spd_inverse(params.lambda, ErrorCode::not_positive_definite, "lambda");
    FitResult r;
    r.sigma_hat = sigma_from_psi(params.beta, psi_matrix(g, lambda_inv, params.omega));
    r.log_likelihood_trace.push_back(log_likelihood(r.sigma_hat, stats));

    const auto& rest = g.arrowhead_part();
    if (rest.empty()) {
        r.converged = true;
    }
    for (std::size_t cycle = 1; !rest.empty() && cycle <= config.max_cycles; ++cycle) {
        for (auto i : rest) apply_update(g, icf_step(g, i, params, stats), params);
        Eigen::MatrixXd sigma = sigma_from_psi(params.beta, psi_matrix(g, lambda_inv, params.omega));
        const double change = (sigma - r.sigma_hat).cwiseAbs().maxCoeff();
        r.sigma_hat = std::move(sigma);
        r.iterations = cycle;
        r.log_likelihood_trace.push_back(log_likelihood(r.sigma_hat, stats));
        if (config.on_cycle) config.on_cycle({cycle, params, r.sigma_hat, r.log_likelihood_trace.back(), change});
        if (change < config.tolerance) {
            r.converged = true;
            break;
        }
    }
    r.lambda_hat = std::move(params.lambda);
    r.beta_hat = std::move(params.beta);
    r.omega_hat = std::move(params.omega);
    r.log_likelihood = r.log_likelihood_trace.back();
    return r;
}

inline void finish(const AncestralGraph& g, const SampleStats& stats, FitResult& r)
{
    r.deviance = deviance(r.sigma_hat, stats);
    r.df = degrees_of_freedom(g);
}

} // namespace detail

/// Maximum likelihood fit of a Gaussian ancestral graph model.
///
/// Lambda is fixed first (IPF on the undirected part by default). The ICF
/// loop then sweeps the vertices outside the undirected part in ascending
/// order, starting from B = 0 and Omega = diag(S), until the largest change
/// of any fitted covariance entry over a full cycle drops below the
/// tolerance. Hitting max_cycles returns the last iterate with
/// converged = false. The result is a stationary point of the likelihood,
/// not necessarily the global maximum; `restarts` adds random starts.
inline FitResult fit(const AncestralGraph& g, const SampleStats& stats, const FitConfig& config = {})
{
    detail::check_inputs(g, stats, config);
    const Eigen::MatrixXd lambda = detail::initial_lambda(g, stats, config);

    FitResult best = detail::run_icf(g, stats, detail::default_start(g, stats, lambda), config);
    std::mt19937_64 rng(config.restart_seed);
    for (std::size_t r = 0; r < config.restarts; ++r) {
        FitResult candidate = detail::run_icf(g, stats, detail::random_start(g, stats, lambda, rng), config);
        if (candidate.log_likelihood > best.log_likelihood) best = std::move(candidate);
    }
    detail::finish(g, stats, best);
    return best;
}

/// Gaussian DAG fit by one regression per vertex on its parents. An
/// undirected part, if present, goes through the same Lambda stage as fit().
inline FitResult fit_dag_closed_form(const AncestralGraph& g, const SampleStats& stats, const FitConfig& config = {})
{
    if (g.has_kind(EdgeKind::bidirected)) {
        throw Error(ErrorCode::invalid_argument, "closed-form fit needs a graph without bidirected edges");
    }
    detail::check_inputs(g, stats, config);
    const Eigen::MatrixXd lambda = detail::initial_lambda(g, stats, config);
    const ParamLayout layout(g);
    const auto p = static_cast<Eigen::Index>(g.size());

    FitResult r;
    r.lambda_hat = lambda;
    r.beta_hat = Eigen::MatrixXd::Zero(p, p);
    r.omega_hat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(layout.rest.size()), static_cast<Eigen::Index>(layout.rest.size()));
    for (auto i : g.arrowhead_part()) {
        const auto ii = static_cast<Eigen::Index>(i);
        const auto pa = as_eigen_indices(g.parents(i));
        const auto li = static_cast<Eigen::Index>(layout.rest.to_local(i));
        if (pa.empty()) {
            r.omega_hat(li, li) = stats.s(ii, ii);
            continue;
        }
        const Eigen::MatrixXd s_pp = gather(stats.s, pa, pa);
        const Eigen::VectorXd s_pi = gather(stats.s, pa, {ii});
        const Eigen::VectorXd coef = s_pp.colPivHouseholderQr().solve(s_pi);
        for (std::size_t k = 0; k < pa.size(); ++k) r.beta_hat(ii, pa[k]) = coef(static_cast<Eigen::Index>(k));
        r.omega_hat(li, li) = stats.s(ii, ii) - s_pi.dot(coef);
    }
    r.sigma_hat = build_sigma(g, r.params());
    r.log_likelihood = log_likelihood(r.sigma_hat, stats);
    r.log_likelihood_trace = {r.log_likelihood};
    r.iterations = 1;
    r.converged = true;
    detail::finish(g, stats, r);
    return r;
}

} // namespace agfit
