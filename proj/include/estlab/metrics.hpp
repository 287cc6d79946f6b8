#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

#include "estlab/core.hpp"

namespace estlab {

enum class MetricVariant { ZerothDet, ZerothRand, RegularizedMC, RawMC };

constexpr std::string_view to_string(MetricVariant v) noexcept
{
    switch (v) {
    case MetricVariant::ZerothDet: return "zeroth-det";
    case MetricVariant::ZerothRand: return "zeroth-rand";
    case MetricVariant::RegularizedMC: return "regularized-mc";
    case MetricVariant::RawMC: return "raw-mc";
    }
    return "unknown";
}

/// A metric evaluation. Closed forms leave std_error at 0 and trials at 0.
struct MetricValue {
    double value = 0.0;
    MetricVariant variant = MetricVariant::ZerothDet;
    double std_error = 0.0;
    std::uint64_t trials = 0;
};

/// phi = f^H u_exp.
inline Complex phi(const EstimatorFilter& filter, const TrainingDesign& design) { return inner(filter.f, design.u()); }

namespace detail {

inline void require_nonzero_filter(const EstimatorFilter& filter)
{
    if (norm_sq(filter.f) == 0.0)
        throw Error(ErrorKind::DegenerateFilter, "filter must be nonzero");
}

/// Shared pieces of the deterministic zeroth-order ratio
///   B / A = (|theta|^2 |phi-1|^2 + s) / (|theta|^2 |phi|^2 + s),  s = sigma_e^2 ||f||^2.
struct DetTerms {
    Complex phi;
    double theta_sq;
    double f_sq;
    double numer; // B
    double denom; // A
};

inline DetTerms det_terms(const EstimatorFilter& filter, const TrainingDesign& design, const ModelParams& params)
{
    params.check();
    require_nonzero_filter(filter);
    if (params.theta == Complex{})
        throw Error(ErrorKind::SingularModel, "theta must be nonzero for the zero-forcing metric");
    DetTerms t{};
    t.phi = phi(filter, design);
    t.theta_sq = std::norm(params.theta);
    t.f_sq = norm_sq(filter.f);
    const double noise = params.sigma_e_sq * t.f_sq;
    t.numer = t.theta_sq * std::norm(t.phi - 1.0) + noise;
    t.denom = t.theta_sq * std::norm(t.phi) + noise;
    if (t.denom == 0.0)
        throw Error(ErrorKind::DegenerateFilter, "phi = 0 with noiseless training gives a 0/0 metric");
    return t;
}

} // namespace detail

/// Ratio factor E|theta_hat - theta|^2 / E|theta_hat|^2 for a fixed theta, expectations over e_exp.
inline double zeroth_det_ratio(const EstimatorFilter& filter, const TrainingDesign& design, const ModelParams& params)
{
    const auto t = detail::det_terms(filter, design, params);
    return t.numer / t.denom;
}

/// Zeroth-order excess MSE of the ZF input estimator, deterministic theta.
inline MetricValue zeroth_det_metric(const EstimatorFilter& filter, const TrainingDesign& design,
                                     const ModelParams& params)
{
    const auto t = detail::det_terms(filter, design, params);
    const double gain = params.sigma_u_sq + params.sigma_e_sq / t.theta_sq;
    return {t.numer / t.denom * gain, MetricVariant::ZerothDet};
}

/// Numerator of the derivative of zeroth_det_metric with respect to conj(f):
///   A (|theta|^2 conj(phi-1) u + sigma_e^2 f) - B (|theta|^2 conj(phi) u + sigma_e^2 f).
/// The true gradient is this vector times the positive scalar gain / A^2.
inline CVector zeroth_det_gradient_numerator(const EstimatorFilter& filter, const TrainingDesign& design,
                                             const ModelParams& params)
{
    const auto t = detail::det_terms(filter, design, params);
    const auto u = design.u();
    CVector out(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
        const Complex d_numer = t.theta_sq * std::conj(t.phi - 1.0) * u[k] + params.sigma_e_sq * filter.f[k];
        const Complex d_denom = t.theta_sq * std::conj(t.phi) * u[k] + params.sigma_e_sq * filter.f[k];
        out[k] = t.denom * d_numer - t.numer * d_denom;
    }
    return out;
}

/// Zeroth-order excess MSE of the ZF input estimator with theta averaged over a
/// zero-mean prior with moments (m2, m4).
inline MetricValue zeroth_rand_metric(const EstimatorFilter& filter, const TrainingDesign& design,
                                      const PriorMoments& prior, double sigma_u_sq, double sigma_e_sq)
{
    prior.check();
    ModelParams{Complex{1.0}, sigma_u_sq, sigma_e_sq}.check();
    detail::require_nonzero_filter(filter);

    const Complex p = phi(filter, design);
    const double noise = sigma_e_sq * norm_sq(filter.f);
    const double denom = prior.m4 * std::norm(p) + noise * prior.m2;
    if (denom == 0.0)
        throw Error(ErrorKind::DegenerateFilter, "phi = 0 with noiseless training gives a 0/0 metric");
    const double bias_term = std::norm(p - 1.0) * (prior.m4 * sigma_u_sq + prior.m2 * sigma_e_sq);
    const double noise_term = noise * (prior.m2 * sigma_u_sq + sigma_e_sq);
    return {bias_term / denom + noise_term / denom, MetricVariant::ZerothRand};
}

/// zeroth_rand_metric at the MVU filter for a training input of the given
/// energy; depends on the input only through its energy.
inline MetricValue mvu_optimal_rand_value(double energy, const PriorMoments& prior, double sigma_u_sq,
                                          double sigma_e_sq)
{
    if (!(energy > 0.0) || !std::isfinite(energy))
        throw Error(ErrorKind::InvalidParameter, "energy must be positive and finite");
    prior.check();
    ModelParams{Complex{1.0}, sigma_u_sq, sigma_e_sq}.check();
    const double value =
        sigma_e_sq * (prior.m2 * sigma_u_sq + sigma_e_sq) / (prior.m4 * energy + sigma_e_sq * prior.m2);
    return {value, MetricVariant::ZerothRand};
}

} // namespace estlab
