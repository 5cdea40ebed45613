#pragma once

#include <agfit/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace agfit {

/// Cholesky factor of a symmetric matrix, with a relative pivot floor so that
/// numerically singular inputs (e.g. a zero-variance column after centring)
/// are rejected rather than accepted with a round-off pivot.
inline Eigen::LLT<Eigen::MatrixXd> spd_factor(const Eigen::MatrixXd& m, ErrorCode code, const std::string& what)
{
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (m.rows() == 0) return llt;
    if (llt.info() != Eigen::Success) {
        throw Error(code, what + " is not positive definite");
    }
    const double scale = m.diagonal().cwiseAbs().maxCoeff();
    const double floor = scale * static_cast<double>(m.rows()) * std::numeric_limits<double>::epsilon();
    const auto d = llt.matrixLLT().diagonal();
    for (Eigen::Index k = 0; k < d.size(); ++k) {
        if (!(d(k) * d(k) > floor)) throw Error(code, what + " is not positive definite");
    }
    return llt;
}

inline bool is_positive_definite(const Eigen::MatrixXd& m)
{
    try {
        spd_factor(m, ErrorCode::not_positive_definite, "matrix");
        return true;
    } catch (const Error&) {
        return false;
    }
}

inline bool is_symmetric(const Eigen::MatrixXd& m, double tol = 1e-12)
{
    if (m.rows() != m.cols()) return false;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
            const double scale = std::max({1.0, std::abs(m(i, j)), std::abs(m(j, i))});
            if (std::abs(m(i, j) - m(j, i)) > tol * scale) return false;
        }
    }
    return true;
}

/// log det from the triangular factor.
inline double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt)
{
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

inline Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& m, ErrorCode code, const std::string& what)
{
    const auto llt = spd_factor(m, code, what);
    Eigen::MatrixXd inv = llt.solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
    return 0.5 * (inv + inv.transpose());
}

} // namespace agfit
