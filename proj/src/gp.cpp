#include "volalign/gp.hpp"

#include <cmath>
#include <optional>
#include <string>

#include "volalign/error.hpp"

namespace volalign {

namespace {

constexpr int kMaxJitterEscalations = 3;

std::optional<Eigen::MatrixXd> cholesky(const Eigen::MatrixXd& a) {
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success)
        return std::nullopt;
    Eigen::MatrixXd l = llt.matrixL();
    if (!l.allFinite() || !(l.diagonal().minCoeff() > 0.0))
        return std::nullopt;
    return l;
}

} // namespace

void KernelParams::validate() const {
    if (!(lengthscale > 0.0) || !std::isfinite(lengthscale))
        throw ArgumentError("kernel lengthscale must be positive");
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw ArgumentError("kernel marginal variance must be positive");
    if (!(nugget >= 0.0) || !std::isfinite(nugget))
        throw ArgumentError("kernel nugget must be nonnegative");
}

double kernel(const Mat3& r, const Mat3& s, const KernelParams& p) {
    const double d2 = (r - s).squaredNorm();
    return p.sigma * p.sigma * std::exp(-d2 / (2.0 * p.lengthscale * p.lengthscale));
}

double kernel(const Rotation& r, const Rotation& s, const KernelParams& p) {
    return kernel(r.matrix(), s.matrix(), p);
}

SurrogateModel SurrogateModel::fit(std::vector<Rotation> candidates, std::vector<double> values,
                                   const KernelParams& params) {
    params.validate();
    if (candidates.empty())
        throw ArgumentError("surrogate model needs at least one observation");
    if (candidates.size() != values.size())
        throw ArgumentError("candidate and value counts differ");
    for (double y : values)
        if (!std::isfinite(y))
            throw ArgumentError("surrogate observations must be finite");

    SurrogateModel m;
    m.m_candidates = std::move(candidates);
    m.m_values = std::move(values);
    m.m_params = params;

    const Eigen::MatrixXd k = m.kernel_matrix();
    double jitter = params.nugget;
    for (int attempt = 0; attempt <= kMaxJitterEscalations; ++attempt) {
        if (attempt > 0)
            jitter = jitter > 0.0 ? 10.0 * jitter : 1e-10 * params.sigma * params.sigma;
        Eigen::MatrixXd a = k;
        a.diagonal().array() += jitter;
        if (auto l = cholesky(a)) {
            m.m_factor = std::move(*l);
            m.m_nugget = jitter;
            m.solve_weights();
            return m;
        }
    }
    throw ConditioningError("kernel matrix factorization failed after jitter escalation to " +
                                std::to_string(jitter),
                            jitter);
}

SurrogateModel SurrogateModel::update(const Rotation& candidate, double value) const {
    if (!std::isfinite(value))
        throw ArgumentError("surrogate observations must be finite");
    const auto t = static_cast<Eigen::Index>(m_candidates.size());
    Eigen::VectorXd k_new(t);
    for (Eigen::Index i = 0; i < t; ++i)
        k_new(i) = kernel(m_candidates[static_cast<std::size_t>(i)], candidate, m_params);
    const double self = m_params.sigma * m_params.sigma + m_nugget;

    const Eigen::VectorXd row = m_factor.triangularView<Eigen::Lower>().solve(k_new);
    const double pivot = self - row.squaredNorm();

    std::vector<Rotation> candidates = m_candidates;
    std::vector<double> values = m_values;
    candidates.push_back(candidate);
    values.push_back(value);

    if (!(pivot > 1e-14 * self) || !row.allFinite()) {
        KernelParams p = m_params;
        p.nugget = m_nugget;
        SurrogateModel refit = fit(std::move(candidates), std::move(values), p);
        refit.m_params.nugget = m_params.nugget;
        return refit;
    }

    SurrogateModel m;
    m.m_candidates = std::move(candidates);
    m.m_values = std::move(values);
    m.m_params = m_params;
    m.m_nugget = m_nugget;
    m.m_factor = Eigen::MatrixXd::Zero(t + 1, t + 1);
    m.m_factor.topLeftCorner(t, t) = m_factor;
    m.m_factor.block(t, 0, 1, t) = row.transpose();
    m.m_factor(t, t) = std::sqrt(pivot);
    m.solve_weights();
    return m;
}

void SurrogateModel::solve_weights() {
    const Eigen::Map<const Eigen::VectorXd> y(m_values.data(), static_cast<Eigen::Index>(m_values.size()));
    const Eigen::VectorXd z = m_factor.triangularView<Eigen::Lower>().solve(y);
    m_weights = m_factor.triangularView<Eigen::Lower>().transpose().solve(z);
}

Eigen::MatrixXd SurrogateModel::kernel_matrix() const {
    const auto t = static_cast<Eigen::Index>(m_candidates.size());
    Eigen::MatrixXd k(t, t);
    for (Eigen::Index i = 0; i < t; ++i) {
        k(i, i) = m_params.sigma * m_params.sigma;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double c = kernel(m_candidates[static_cast<std::size_t>(i)],
                                    m_candidates[static_cast<std::size_t>(j)], m_params);
            k(i, j) = c;
            k(j, i) = c;
        }
    }
    return k;
}

double SurrogateModel::evaluate(const Mat3& x) const {
    double f = 0.0;
    for (std::size_t i = 0; i < m_candidates.size(); ++i)
        f += m_weights(static_cast<Eigen::Index>(i)) * kernel(x, m_candidates[i].matrix(), m_params);
    return f;
}

Mat3 SurrogateModel::gradient(const Mat3& x) const {
    Mat3 grad;
    static_cast<void>(evaluate_with_gradient(x, grad));
    return grad;
}

double SurrogateModel::evaluate_with_gradient(const Mat3& x, Mat3& grad) const {
    const double inv_l2 = 1.0 / (m_params.lengthscale * m_params.lengthscale);
    double f = 0.0;
    grad.setZero();
    for (std::size_t i = 0; i < m_candidates.size(); ++i) {
        const Mat3& ri = m_candidates[i].matrix();
        const double wc = m_weights(static_cast<Eigen::Index>(i)) * kernel(x, ri, m_params);
        f += wc;
        grad += (wc * inv_l2) * (ri - x);
    }
    return f;
}

} // namespace volalign
