#pragma once

#include <agfit/error.hpp>
#include <agfit/graph.hpp>
#include <agfit/linalg.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

namespace agfit {

/// Empirical covariance together with the sample size it came from.
struct SampleStats
{
    Eigen::MatrixXd s;
    std::size_t n = 0;
    bool mean_adjusted = false;

    std::size_t p() const noexcept { return static_cast<std::size_t>(s.rows()); }

    /// Wraps a caller-supplied covariance (or correlation) matrix. Only
    /// symmetry and positive definiteness are checked; n is taken as given.
    static SampleStats from_covariance(Eigen::MatrixXd s, std::size_t n, bool mean_adjusted = false)
    {
        if (s.rows() != s.cols()) throw Error(ErrorCode::dimension_mismatch, "covariance matrix is not square");
        if (!is_symmetric(s)) throw Error(ErrorCode::invalid_argument, "covariance matrix is not symmetric");
        if (n == 0) throw Error(ErrorCode::invalid_argument, "sample size must be positive");
        spd_factor(s, ErrorCode::not_positive_definite, "sample covariance");
        return {0.5 * (s + s.transpose()), n, mean_adjusted};
    }
};

/// S = Y Y^T / n for centred data, or the same after subtracting row means.
/// Y holds one variable per row and one observation per column.
inline SampleStats empirical_covariance(const Eigen::MatrixXd& y, bool mean_adjusted)
{
    const auto p = static_cast<std::size_t>(y.rows());
    const auto n = static_cast<std::size_t>(y.cols());
    if (p == 0 || n == 0) throw Error(ErrorCode::dimension_mismatch, "data matrix is empty");
    const std::size_t needed = mean_adjusted ? p + 1 : p;
    if (n < needed) {
        throw Error(ErrorCode::not_positive_definite,
                    std::to_string(n) + " observations cannot give a positive definite covariance for " + std::to_string(p) +
                        " variables");
    }
    Eigen::MatrixXd centred = y;
    if (mean_adjusted) centred.colwise() -= y.rowwise().mean();
    Eigen::MatrixXd s = centred * centred.transpose() / static_cast<double>(n);
    s = 0.5 * (s + s.transpose());
    spd_factor(s, ErrorCode::not_positive_definite, "sample covariance");
    return {std::move(s), n, mean_adjusted};
}

/// Gaussian log-likelihood up to an additive constant:
/// -(n/2) log|Sigma| - (n/2) tr(Sigma^{-1} S).
inline double log_likelihood(const Eigen::MatrixXd& sigma, const SampleStats& stats)
{
    if (sigma.rows() != stats.s.rows() || sigma.cols() != stats.s.cols()) {
        throw Error(ErrorCode::dimension_mismatch, "sigma and S differ in size");
    }
    const auto llt = spd_factor(sigma, ErrorCode::not_positive_definite, "sigma");
    const double trace = llt.solve(stats.s).trace();
    const double half_n = 0.5 * static_cast<double>(stats.n);
    return -half_n * log_det(llt) - half_n * trace;
}

/// n [tr(Sigma^{-1} S) - log det(Sigma^{-1} S) - p], i.e. 2 l(S) - 2 l(Sigma).
inline double deviance(const Eigen::MatrixXd& sigma_hat, const SampleStats& stats)
{
    if (sigma_hat.rows() != stats.s.rows() || sigma_hat.cols() != stats.s.cols()) {
        throw Error(ErrorCode::dimension_mismatch, "sigma and S differ in size");
    }
    const auto sigma_llt = spd_factor(sigma_hat, ErrorCode::not_positive_definite, "fitted sigma");
    const auto s_llt = spd_factor(stats.s, ErrorCode::not_positive_definite, "sample covariance");
    const double trace = sigma_llt.solve(stats.s).trace();
    const double log_det_ratio = log_det(s_llt) - log_det(sigma_llt);
    return static_cast<double>(stats.n) * (trace - log_det_ratio - static_cast<double>(stats.p()));
}

/// One free parameter per vertex and per edge, out of p(p+1)/2.
inline long degrees_of_freedom(const AncestralGraph& g)
{
    const auto p = static_cast<long>(g.size());
    const auto e = static_cast<long>(g.edges().size());
    return p * (p + 1) / 2 - (p + e);
}

namespace detail {

// Lower series for P(a, x); converges quickly for x < a + 1.
inline double gamma_p_series(double a, double x)
{
    double term = 1.0 / a;
    double sum = term;
    for (int k = 1; k < 10000; ++k) {
        term *= x / (a + k);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) (modified Lentz); used for x >= a + 1.
inline double gamma_q_continued_fraction(double a, double x)
{
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int k = 1; k < 10000; ++k) {
        const double an = -k * (k - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

} // namespace detail

/// Regularized upper incomplete gamma function Q(a, x).
inline double regularized_gamma_q(double a, double x)
{
    if (!(a > 0.0)) throw Error(ErrorCode::invalid_argument, "shape must be positive");
    if (x < 0.0) throw Error(ErrorCode::invalid_argument, "argument must be nonnegative");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_continued_fraction(a, x);
}

/// Upper tail probability of the chi-square distribution with df degrees of freedom.
inline double chi_square_pvalue(double dev, long df)
{
    if (df <= 0) throw Error(ErrorCode::invalid_df, "degrees of freedom must be positive, got " + std::to_string(df));
    if (dev < 0.0) {
        // deviances a hair below zero are round-off from a saturated fit
        if (dev > -1e-8) dev = 0.0;
        else throw Error(ErrorCode::invalid_argument, "deviance must be nonnegative");
    }
    return regularized_gamma_q(0.5 * static_cast<double>(df), 0.5 * dev);
}

} // namespace agfit
