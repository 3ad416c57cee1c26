#pragma once

#include <vector>

#include <Eigen/Dense>

#include "volalign/so3.hpp"

namespace volalign {

struct KernelParams {
    double lengthscale = 0.75;
    double sigma = 1.0;  // marginal standard deviation; the kernel scales with sigma^2
    double nugget = 1e-3;

    // Throws ArgumentError unless lengthscale > 0, sigma > 0, nugget >= 0.
    void validate() const;
};

// Squared-exponential covariance in the Frobenius embedding:
// sigma^2 exp(-|R - S|_F^2 / (2 l^2)).
double kernel(const Rotation& r, const Rotation& s, const KernelParams& p);
double kernel(const Mat3& r, const Mat3& s, const KernelParams& p);

// Gaussian-process interpolant over SO(3): f(x) = k(x)^T (K + tau I)^-1 Y.
// Immutable once built; update() returns a new model.
class SurrogateModel {
public:
    // Factorizes K + tau I. If that fails, tau is multiplied by 10 up to three
    // times (a zero nugget starts from 1e-10 sigma^2). Throws ConditioningError
    // carrying the last jitter tried.
    static SurrogateModel fit(std::vector<Rotation> candidates, std::vector<double> values,
                              const KernelParams& params);

    // Rank-one Cholesky extension with one new observation; falls back to a
    // full refit if the extension loses positive definiteness.
    [[nodiscard]] SurrogateModel update(const Rotation& candidate, double value) const;

    [[nodiscard]] double predict(const Rotation& x) const { return evaluate(x.matrix()); }
    // Euclidean gradient sum_i w_i c(x, R_i) (R_i - x) / l^2 with the
    // nugget-consistent weights w = (K + tau I)^-1 Y.
    [[nodiscard]] Mat3 euclidean_gradient(const Rotation& x) const { return gradient(x.matrix()); }

    // Same formulas on arbitrary 3x3 matrices (the ambient space).
    [[nodiscard]] double evaluate(const Mat3& x) const;
    [[nodiscard]] Mat3 gradient(const Mat3& x) const;
    // Value and gradient in one pass over the candidates.
    [[nodiscard]] double evaluate_with_gradient(const Mat3& x, Mat3& grad) const;

    [[nodiscard]] std::size_t size() const noexcept { return m_candidates.size(); }
    [[nodiscard]] const std::vector<Rotation>& candidates() const noexcept { return m_candidates; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return m_values; }
    [[nodiscard]] const KernelParams& params() const noexcept { return m_params; }
    // Nugget actually used after any jitter escalation.
    [[nodiscard]] double effective_nugget() const noexcept { return m_nugget; }
    [[nodiscard]] const Eigen::MatrixXd& factor() const noexcept { return m_factor; }
    [[nodiscard]] const Eigen::VectorXd& weights() const noexcept { return m_weights; }
    [[nodiscard]] Eigen::MatrixXd kernel_matrix() const;

private:
    SurrogateModel() = default;
    void solve_weights();

    std::vector<Rotation> m_candidates;
    std::vector<double> m_values;
    KernelParams m_params;
    double m_nugget = 0.0;
    Eigen::MatrixXd m_factor; // lower triangular, factor * factor^T = K + nugget I
    Eigen::VectorXd m_weights;
};

} // namespace volalign
