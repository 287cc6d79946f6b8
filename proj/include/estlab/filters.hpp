#pragma once

#include <cmath>
#include <string_view>

#include "estlab/core.hpp"

namespace estlab {

/// Trim radius for the regularized estimator.
struct TrimPolicy {
    double lambda = 0.1;

    void check() const
    {
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw Error(ErrorKind::InvalidParameter, "lambda must be positive and finite");
    }

    bool operator==(const TrimPolicy&) const = default;
};

enum class InputFilterKind { ClairvoyantMmse, ZeroForcing };

constexpr std::string_view to_string(InputFilterKind kind) noexcept
{
    return kind == InputFilterKind::ZeroForcing ? "zf" : "clairvoyant-mmse";
}

/// Scalar input-estimating coefficient c, applied as c y(n).
struct InputFilter {
    Complex c;
    InputFilterKind kind;
};

/// f = u / ||u||^2, the unbiased minimum-variance filter (f^H u = 1).
inline EstimatorFilter build_mvu_filter(const TrainingDesign& design)
{
    const double energy = design.energy();
    EstimatorFilter out{CVector(design.u().begin(), design.u().end()), FilterKind::Mvu};
    for (auto& z : out.f)
        z /= energy;
    return out;
}

/// f = m2 u / (m2 ||u||^2 + sigma_e^2). Assumes a zero-mean prior.
inline EstimatorFilter build_mmse_filter(const TrainingDesign& design, const PriorMoments& prior, double sigma_e_sq)
{
    prior.check();
    if (!(sigma_e_sq >= 0.0) || !std::isfinite(sigma_e_sq))
        throw Error(ErrorKind::InvalidParameter, "sigma_e_sq must be non-negative and finite");
    // Written as u / (||u||^2 + sigma_e^2 / m2) so that sigma_e^2 = 0 reproduces
    // the MVU filter bit for bit.
    const double denom = design.energy() + sigma_e_sq / prior.m2;
    EstimatorFilter out{CVector(design.u().begin(), design.u().end()), FilterKind::Mmse};
    for (auto& z : out.f)
        z /= denom;
    return out;
}

/// Projects estimates inside the disk |z| <= lambda onto its boundary circle.
/// z == 0 has no phase and maps to the real value lambda.
inline Complex trim(Complex z, const TrimPolicy& policy)
{
    const double r = std::abs(z);
    if (r > policy.lambda)
        return z;
    if (r == 0.0)
        return {policy.lambda, 0.0};
    return z * (policy.lambda / r);
}

/// c(theta) = sigma_u^2 conj(theta) / (|theta|^2 sigma_u^2 + sigma_e^2).
inline InputFilter clairvoyant_mmse_input_filter(const ModelParams& params)
{
    params.check();
    const double denom = std::norm(params.theta) * params.sigma_u_sq + params.sigma_e_sq;
    if (denom == 0.0)
        throw Error(ErrorKind::SingularModel, "theta = 0 with noiseless data has no MMSE input filter");
    return {params.sigma_u_sq * std::conj(params.theta) / denom, InputFilterKind::ClairvoyantMmse};
}

inline InputFilter zf_input_filter(Complex theta)
{
    if (!is_finite(theta))
        throw Error(ErrorKind::InvalidParameter, "theta must be finite");
    if (theta == Complex{})
        throw Error(ErrorKind::SingularModel, "zero forcing needs theta != 0");
    return {1.0 / theta, InputFilterKind::ZeroForcing};
}

} // namespace estlab
