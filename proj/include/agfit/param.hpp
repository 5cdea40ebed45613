#pragma once

#include <agfit/error.hpp>
#include <agfit/graph.hpp>
#include <agfit/index_map.hpp>
#include <agfit/linalg.hpp>

#include <Eigen/Dense>

#include <cstddef>
#include <string>

namespace agfit {

/// Parameters of a Gaussian ancestral graph model.
///
/// lambda is the concentration matrix of the undirected part, addressed by
/// the compacted indices of graph.undirected_part(). omega is the residual
/// covariance of the remaining vertices, addressed by the compacted indices
/// of graph.arrowhead_part(). beta is V x V with beta(i, j) the coefficient
/// of parent j in the equation of i.
struct ParamSet
{
    Eigen::MatrixXd lambda;
    Eigen::MatrixXd beta;
    Eigen::MatrixXd omega;
};

/// Index maps for the two parameter blocks of a graph.
struct ParamLayout
{
    IndexMap un;
    IndexMap rest;

    explicit ParamLayout(const AncestralGraph& g)
        : un(g.size(), g.undirected_part()),
          rest(g.size(), g.arrowhead_part())
    {}
};

/// Parameters with identity Lambda and Omega and no regressions.
inline ParamSet identity_params(const AncestralGraph& g)
{
    const auto p = static_cast<Eigen::Index>(g.size());
    const auto nu = static_cast<Eigen::Index>(g.undirected_part().size());
    return {Eigen::MatrixXd::Identity(nu, nu), Eigen::MatrixXd::Zero(p, p), Eigen::MatrixXd::Identity(p - nu, p - nu)};
}

/// Throws unless every parameter matrix has the right shape and is zero
/// outside the pattern implied by the graph.
inline void check_params(const AncestralGraph& g, const ParamSet& params)
{
    const ParamLayout layout(g);
    const auto p = static_cast<Eigen::Index>(g.size());
    const auto nu = static_cast<Eigen::Index>(layout.un.size());
    const auto nr = static_cast<Eigen::Index>(layout.rest.size());
    if (params.lambda.rows() != nu || params.lambda.cols() != nu) {
        throw Error(ErrorCode::dimension_mismatch, "lambda must be " + std::to_string(nu) + "x" + std::to_string(nu));
    }
    if (params.omega.rows() != nr || params.omega.cols() != nr) {
        throw Error(ErrorCode::dimension_mismatch, "omega must be " + std::to_string(nr) + "x" + std::to_string(nr));
    }
    if (params.beta.rows() != p || params.beta.cols() != p) {
        throw Error(ErrorCode::dimension_mismatch, "beta must be " + std::to_string(p) + "x" + std::to_string(p));
    }
    for (Eigen::Index a = 0; a < nu; ++a) {
        for (Eigen::Index b = 0; b < nu; ++b) {
            const auto i = layout.un.to_global(static_cast<std::size_t>(a));
            const auto j = layout.un.to_global(static_cast<std::size_t>(b));
            if (i != j && params.lambda(a, b) != 0.0 && g.edge_kind(i, j) != EdgeKind::undirected) {
                throw Error(ErrorCode::invalid_argument, "lambda nonzero off the undirected edge pattern", i);
            }
        }
    }
    for (Eigen::Index a = 0; a < nr; ++a) {
        for (Eigen::Index b = 0; b < nr; ++b) {
            const auto i = layout.rest.to_global(static_cast<std::size_t>(a));
            const auto j = layout.rest.to_global(static_cast<std::size_t>(b));
            if (i != j && params.omega(a, b) != 0.0 && g.edge_kind(i, j) != EdgeKind::bidirected) {
                throw Error(ErrorCode::invalid_argument, "omega nonzero off the bidirected edge pattern", i);
            }
        }
    }
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            if (params.beta(i, j) == 0.0) continue;
            const auto pa = g.parents(static_cast<std::size_t>(i));
            if (!std::binary_search(pa.begin(), pa.end(), static_cast<std::size_t>(j))) {
                throw Error(ErrorCode::invalid_argument, "beta nonzero without a directed edge", static_cast<std::size_t>(i));
            }
        }
    }
}

/// Covariance of the residuals (I - B) Y: blockdiag(Lambda^{-1}, Omega) laid
/// out over V.
inline Eigen::MatrixXd psi(const AncestralGraph& g, const ParamSet& params)
{
    check_params(g, params);
    const ParamLayout layout(g);
    const auto p = static_cast<Eigen::Index>(g.size());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, p);

    const Eigen::MatrixXd lambda_inv = spd_inverse(params.lambda, ErrorCode::not_positive_definite, "lambda");
    spd_factor(params.omega, ErrorCode::not_positive_definite, "omega");

    const auto un = as_eigen_indices(layout.un.members());
    const auto rest = as_eigen_indices(layout.rest.members());
    for (std::size_t a = 0; a < un.size(); ++a) {
        for (std::size_t b = 0; b < un.size(); ++b) {
            out(un[a], un[b]) = lambda_inv(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        }
    }
    for (std::size_t a = 0; a < rest.size(); ++a) {
        for (std::size_t b = 0; b < rest.size(); ++b) {
            out(rest[a], rest[b]) = params.omega(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        }
    }
    return out;
}

/// Sigma = (I - B)^{-1} Psi (I - B)^{-T}.
inline Eigen::MatrixXd sigma_from_psi(const Eigen::MatrixXd& beta, const Eigen::MatrixXd& psi_matrix)
{
    const auto p = beta.rows();
    const Eigen::MatrixXd i_minus_b = Eigen::MatrixXd::Identity(p, p) - beta;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(i_minus_b);
    if (!lu.isInvertible()) throw Error(ErrorCode::singular_matrix, "I - B is singular");
    const Eigen::MatrixXd left = lu.solve(psi_matrix);
    Eigen::MatrixXd sigma = lu.solve(left.transpose());
    return 0.5 * (sigma + sigma.transpose());
}

inline Eigen::MatrixXd build_sigma(const AncestralGraph& g, const ParamSet& params)
{
    return sigma_from_psi(params.beta, psi(g, params));
}

/// Rows of (I - B) Y; row i is Y_i minus the beta-weighted parent rows.
inline Eigen::MatrixXd residuals(const Eigen::MatrixXd& y, const Eigen::MatrixXd& beta)
{
    if (beta.rows() != beta.cols() || beta.cols() != y.rows()) {
        throw Error(ErrorCode::dimension_mismatch, "beta is " + std::to_string(beta.rows()) + "x" + std::to_string(beta.cols()) +
                                                       " but data has " + std::to_string(y.rows()) + " variables");
    }
    return y - beta * y;
}

/// omega_kk minus Omega_{k,-k} (Omega_{-k,-k})^{-1} Omega_{-k,k}, for local index k of omega.
inline double conditional_variance(const Eigen::MatrixXd& omega, Eigen::Index k)
{
    const auto n = omega.rows();
    if (k < 0 || k >= n) throw Error(ErrorCode::unknown_vertex, "index outside omega");
    std::vector<Eigen::Index> others;
    for (Eigen::Index r = 0; r < n; ++r) {
        if (r != k) others.push_back(r);
    }
    if (others.empty()) return omega(k, k);
    const Eigen::MatrixXd sub = gather(omega, others, others);
    const Eigen::VectorXd cross = gather(omega, others, {k});
    const auto llt = spd_factor(sub, ErrorCode::singular_matrix, "omega without the response");
    return omega(k, k) - cross.dot(llt.solve(cross));
}

/// Weights turning residuals into pseudo-variables for vertex i: the sp(i)
/// rows of (Omega_{-i,-i})^{-1}, as a |sp(i)| x |rest \ {i}| matrix. `minus_i`
/// receives the map of rest \ {i}.
inline Eigen::MatrixXd pseudo_variable_weights(const AncestralGraph& g, const Eigen::MatrixXd& omega, std::size_t i,
                                               IndexMap& minus_i)
{
    const ParamLayout layout(g);
    if (!layout.rest.contains(i)) {
        throw Error(ErrorCode::invalid_argument, "vertex " + std::to_string(i) + " lies in the undirected part", i);
    }
    minus_i = layout.rest.without(i);
    const auto& sp = g.spouses(i);
    if (sp.empty()) return Eigen::MatrixXd(0, static_cast<Eigen::Index>(minus_i.size()));

    std::vector<Eigen::Index> rows;
    for (auto v : minus_i.members()) rows.push_back(static_cast<Eigen::Index>(layout.rest.to_local(v)));
    const Eigen::MatrixXd sub = gather(omega, rows, rows);
    const auto llt = spd_factor(sub, ErrorCode::singular_matrix, "omega without the response");

    const auto m = static_cast<Eigen::Index>(minus_i.size());
    Eigen::MatrixXd selector = Eigen::MatrixXd::Zero(m, static_cast<Eigen::Index>(sp.size()));
    for (std::size_t s = 0; s < sp.size(); ++s) {
        selector(static_cast<Eigen::Index>(minus_i.to_local(sp[s])), static_cast<Eigen::Index>(s)) = 1.0;
    }
    return llt.solve(selector).transpose();
}

/// Pseudo-variables Z_{sp(i)} = [(Omega_{-i,-i})^{-1}]_{sp(i), .} eps_{-i},
/// one row per spouse of i in ascending order.
inline Eigen::MatrixXd pseudo_variables(const AncestralGraph& g, const Eigen::MatrixXd& omega, const Eigen::MatrixXd& eps,
                                        std::size_t i)
{
    if (eps.rows() != static_cast<Eigen::Index>(g.size())) {
        throw Error(ErrorCode::dimension_mismatch, "residual matrix must have one row per vertex");
    }
    IndexMap minus_i;
    const Eigen::MatrixXd w = pseudo_variable_weights(g, omega, i, minus_i);
    if (w.rows() == 0) return Eigen::MatrixXd(0, eps.cols());
    const auto rows = as_eigen_indices(minus_i.members());
    Eigen::MatrixXd eps_minus_i(static_cast<Eigen::Index>(rows.size()), eps.cols());
    for (std::size_t r = 0; r < rows.size(); ++r) eps_minus_i.row(static_cast<Eigen::Index>(r)) = eps.row(rows[r]);
    return w * eps_minus_i;
}

/// Reads (Lambda, B, Omega) back from a covariance matrix of the model:
/// Lambda inverts the undirected block, beta regresses each vertex on its
/// parents, and Omega is the covariance of the resulting residuals.
inline ParamSet recover_params(const AncestralGraph& g, const Eigen::MatrixXd& sigma)
{
    const ParamLayout layout(g);
    const auto p = static_cast<Eigen::Index>(g.size());
    ParamSet out;
    const auto un = as_eigen_indices(layout.un.members());
    out.lambda = spd_inverse(gather(sigma, un, un), ErrorCode::not_positive_definite, "undirected block");
    out.beta = Eigen::MatrixXd::Zero(p, p);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto pa = as_eigen_indices(g.parents(i));
        if (pa.empty()) continue;
        const auto llt = spd_factor(gather(sigma, pa, pa), ErrorCode::not_positive_definite, "parent block");
        const Eigen::VectorXd coef = llt.solve(gather(sigma, pa, {static_cast<Eigen::Index>(i)}));
        for (std::size_t k = 0; k < pa.size(); ++k) out.beta(static_cast<Eigen::Index>(i), pa[k]) = coef(static_cast<Eigen::Index>(k));
    }
    const Eigen::MatrixXd i_minus_b = Eigen::MatrixXd::Identity(p, p) - out.beta;
    const Eigen::MatrixXd resid_cov = i_minus_b * sigma * i_minus_b.transpose();
    const auto rest = as_eigen_indices(layout.rest.members());
    out.omega = gather(resid_cov, rest, rest);
    return out;
}

} // namespace agfit
