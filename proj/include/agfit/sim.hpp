#pragma once

#include <agfit/error.hpp>
#include <agfit/fit.hpp>
#include <agfit/graph.hpp>
#include <agfit/linalg.hpp>
#include <agfit/stats.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <ctime>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace agfit {

// Random numbers
//
// Every stream is a std::mt19937_64 (its output sequence is fixed by the C++
// standard). The stream for replicate r at dimension p is seeded with
// splitmix64(splitmix64(splitmix64(seed) ^ p) ^ r), so any cell of an
// experiment can be regenerated on its own. Uniforms on (-1, 1) take the top
// 53 bits of a draw; standard normals come from the Marsaglia polar method,
// which consumes pairs of uniforms and yields two normals per accepted pair.

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t p, std::uint64_t replicate)
{
    return splitmix64(splitmix64(splitmix64(seed) ^ p) ^ replicate);
}

class NormalStream
{
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double operator()()
    {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = uniform();
            v = uniform();
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        has_spare_ = true;
        return u * f;
    }

private:
    double uniform()
    {
        constexpr double scale = 1.0 / 9007199254740992.0; // 2^-53
        return 2.0 * static_cast<double>(engine_() >> 11) * scale - 1.0;
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct CycleSpec
{
    std::size_t p = 10;
    double rho = 0.3;
};

/// Unit diagonal with rho between cyclic neighbours i, i+1 (mod p).
inline Eigen::MatrixXd cycle_covariance(const CycleSpec& spec)
{
    if (spec.p < 3) throw Error(ErrorCode::invalid_argument, "a cycle needs at least 3 vertices");
    const auto p = static_cast<Eigen::Index>(spec.p);
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(p, p);
    for (Eigen::Index i = 0; i < p; ++i) {
        const Eigen::Index j = (i + 1) % p;
        sigma(i, j) = sigma(j, i) = spec.rho;
    }
    if (!is_positive_definite(sigma)) {
        throw Error(ErrorCode::not_positive_definite,
                    "cycle covariance with p = " + std::to_string(spec.p) + " and rho = " + std::to_string(spec.rho) +
                        " is not positive definite");
    }
    return sigma;
}

/// The chordless bidirected cycle 0 <-> 1 <-> ... <-> p-1 <-> 0.
inline AncestralGraph bidirected_cycle(std::size_t p)
{
    if (p < 3) throw Error(ErrorCode::invalid_argument, "a cycle needs at least 3 vertices");
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < p; ++i) edges.push_back(bidirected(i, (i + 1) % p));
    return AncestralGraph::validate(p, std::move(edges));
}

/// n draws from N(0, sigma) as a p x n matrix: L z with L the lower Cholesky
/// factor and z filled column by column from the stream.
inline Eigen::MatrixXd sample_mvn(const Eigen::MatrixXd& sigma, std::size_t n, NormalStream& normals)
{
    if (n < 1) throw Error(ErrorCode::invalid_argument, "sample size must be at least 1");
    const auto llt = spd_factor(sigma, ErrorCode::not_positive_definite, "sampling covariance");
    Eigen::MatrixXd z(sigma.rows(), static_cast<Eigen::Index>(n));
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
        for (Eigen::Index r = 0; r < z.rows(); ++r) z(r, c) = normals();
    }
    return llt.matrixL() * z;
}

inline Eigen::MatrixXd sample_mvn(const Eigen::MatrixXd& sigma, std::size_t n, std::uint64_t seed)
{
    NormalStream normals(seed);
    return sample_mvn(sigma, n, normals);
}

struct ReplicateRecord
{
    std::size_t p = 0;
    std::size_t replicate = 0;
    std::size_t iterations = 0;
    bool converged = false;
    double cpu_seconds = 0.0;
    double deviance = std::numeric_limits<double>::quiet_NaN();
    double max_loglik_drop = 0.0;  ///< largest decrease between consecutive cycles
    std::string error;  ///< empty unless the fit threw
};

struct DimensionSummary
{
    std::size_t p = 0;
    std::size_t replicates = 0;
    double mean_iterations = 0.0;
    std::size_t min_iterations = 0;
    std::size_t max_iterations = 0;
    double mean_cpu_seconds = 0.0;
    std::size_t failures = 0;
};

struct ExperimentReport
{
    std::vector<ReplicateRecord> records;
    std::vector<DimensionSummary> summaries;

    std::size_t failures() const
    {
        std::size_t total = 0;
        for (const auto& s : summaries) total += s.failures;
        return total;
    }
};

/// Fits the bidirected cycle to `replicates` samples of size p + 30 drawn
/// from the cycle covariance, for each p. A replicate counts as a failure
/// when the fit throws or stops without converging.
inline ExperimentReport run_scaling_experiment(const std::vector<std::size_t>& p_values, std::size_t replicates, double rho,
                                               std::uint64_t seed, const FitConfig& config = {})
{
    ExperimentReport report;
    for (auto p : p_values) {
        const Eigen::MatrixXd sigma = cycle_covariance({p, rho});
        const AncestralGraph graph = bidirected_cycle(p);
        DimensionSummary summary;
        summary.p = p;
        summary.min_iterations = std::numeric_limits<std::size_t>::max();
        std::size_t counted = 0;
        for (std::size_t r = 0; r < replicates; ++r) {
            ReplicateRecord rec;
            rec.p = p;
            rec.replicate = r;
            const Eigen::MatrixXd y = sample_mvn(sigma, p + 30, stream_seed(seed, p, r));
            const std::clock_t start = std::clock();
            try {
                const FitResult fitted = fit(graph, empirical_covariance(y, false), config);
                rec.iterations = fitted.iterations;
                rec.converged = fitted.converged;
                rec.deviance = fitted.deviance;
                const auto& trace = fitted.log_likelihood_trace;
                for (std::size_t t = 1; t < trace.size(); ++t)
                    rec.max_loglik_drop = std::max(rec.max_loglik_drop, trace[t - 1] - trace[t]);
            } catch (const Error& e) {
                rec.error = e.what();
            }
            rec.cpu_seconds = static_cast<double>(std::clock() - start) / CLOCKS_PER_SEC;

            if (!rec.converged) ++summary.failures;
            if (rec.error.empty()) {
                ++counted;
                summary.mean_iterations += static_cast<double>(rec.iterations);
                summary.min_iterations = std::min(summary.min_iterations, rec.iterations);
                summary.max_iterations = std::max(summary.max_iterations, rec.iterations);
            }
            summary.mean_cpu_seconds += rec.cpu_seconds;
            report.records.push_back(std::move(rec));
        }
        summary.replicates = replicates;
        if (counted > 0) summary.mean_iterations /= static_cast<double>(counted);
        else summary.min_iterations = 0;
        if (replicates > 0) summary.mean_cpu_seconds /= static_cast<double>(replicates);
        if (replicates > 0) report.summaries.push_back(summary);
    }
    return report;
}

} // namespace agfit
