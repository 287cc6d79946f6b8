#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "estlab/error.hpp"
#include "estlab/rng.hpp"

namespace estlab {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;

inline bool is_finite(Complex z) noexcept { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

/// Hermitian inner product a^H b = sum conj(a_k) b_k.
inline Complex inner(std::span<const Complex> a, std::span<const Complex> b)
{
    if (a.size() != b.size())
        throw Error(ErrorKind::Dimension,
                    "length mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    Complex acc{};
    for (std::size_t k = 0; k < a.size(); ++k)
        acc += std::conj(a[k]) * b[k];
    return acc;
}

inline double norm_sq(std::span<const Complex> a) noexcept
{
    double acc = 0.0;
    for (const auto& z : a)
        acc += std::norm(z);
    return acc;
}

// --------------------------------------------------------------------------
// Domain types
// --------------------------------------------------------------------------

/// Deterministic-scenario parameters of y(n) = theta u(n) + e(n).
struct ModelParams {
    Complex theta{1.0, 0.0};
    double sigma_u_sq = 1.0; ///< data-symbol variance
    double sigma_e_sq = 1.0; ///< noise variance

    void check() const
    {
        if (!is_finite(theta))
            throw Error(ErrorKind::InvalidParameter, "theta must be finite");
        if (!(sigma_u_sq > 0.0) || !std::isfinite(sigma_u_sq))
            throw Error(ErrorKind::InvalidParameter, "sigma_u_sq must be positive and finite");
        if (!(sigma_e_sq >= 0.0) || !std::isfinite(sigma_e_sq))
            throw Error(ErrorKind::InvalidParameter, "sigma_e_sq must be non-negative and finite");
    }

    bool operator==(const ModelParams&) const = default;
};

/// E|theta|^2 and E|theta|^4 of a zero-mean random system gain.
struct PriorMoments {
    double m2 = 1.0;
    double m4 = 2.0;

    void check() const
    {
        if (!(m2 > 0.0) || !std::isfinite(m2) || !(m4 > 0.0) || !std::isfinite(m4))
            throw Error(ErrorKind::InvalidParameter, "prior moments must be positive and finite");
        // |theta|^2 has variance m4 - m2^2 >= 0; allow rounding in the equality case.
        if (m4 < m2 * m2 * (1.0 - 1e-12))
            throw Error(ErrorKind::InvalidParameter, "prior moments violate m4 >= m2^2");
    }

    /// Moments of CN(0, variance): |theta|^2 is exponential, so E|theta|^4 = 2 variance^2.
    static PriorMoments circular_gaussian(double variance) { return {variance, 2.0 * variance * variance}; }

    bool operator==(const PriorMoments&) const = default;
};

/// Training input vector together with its energy budget.
class TrainingDesign {
public:
    TrainingDesign(CVector u_exp, double energy_budget) : u_(std::move(u_exp)), budget_(energy_budget)
    {
        if (u_.empty())
            throw Error(ErrorKind::InvalidDesign, "training length must be at least 1");
        if (!(budget_ > 0.0) || !std::isfinite(budget_))
            throw Error(ErrorKind::InvalidDesign, "energy budget must be positive and finite");
        for (const auto& z : u_)
            if (!is_finite(z))
                throw Error(ErrorKind::InvalidDesign, "training input must be finite");
        const double e = norm_sq(u_);
        if (e == 0.0)
            throw Error(ErrorKind::InvalidDesign, "training input must be nonzero");
        if (e > budget_ * (1.0 + 1e-12))
            throw Error(ErrorKind::InvalidDesign, "training energy exceeds the budget");
    }

    /// Uses the whole budget: u = sqrt(energy / N) (1, ..., 1).
    static TrainingDesign constant(std::size_t n, double energy)
    {
        if (n == 0)
            throw Error(ErrorKind::InvalidDesign, "training length must be at least 1");
        return TrainingDesign(CVector(n, Complex{std::sqrt(energy / static_cast<double>(n)), 0.0}), energy);
    }

    /// Rescales `direction` so that its energy equals the budget.
    static TrainingDesign along(CVector direction, double energy)
    {
        const double e = norm_sq(direction);
        if (e == 0.0 || !std::isfinite(e))
            throw Error(ErrorKind::InvalidDesign, "training direction must be nonzero and finite");
        const double scale = std::sqrt(energy / e);
        for (auto& z : direction)
            z *= scale;
        return TrainingDesign(std::move(direction), energy);
    }

    std::span<const Complex> u() const noexcept { return u_; }
    std::size_t size() const noexcept { return u_.size(); }
    double energy() const noexcept { return norm_sq(u_); }
    double energy_budget() const noexcept { return budget_; }

private:
    CVector u_;
    double budget_;
};

struct TrainingRealization {
    CVector y_exp;
    CVector e_exp;
};

enum class FilterKind { Mvu, Mmse, Custom };

constexpr std::string_view to_string(FilterKind kind) noexcept
{
    switch (kind) {
    case FilterKind::Mvu: return "mvu";
    case FilterKind::Mmse: return "mmse";
    case FilterKind::Custom: return "custom";
    }
    return "custom";
}

/// Linear system-parameter estimator theta_hat = f^H y_exp.
struct EstimatorFilter {
    CVector f;
    FilterKind kind = FilterKind::Custom;

    std::size_t size() const noexcept { return f.size(); }
};

// --------------------------------------------------------------------------
// Operations
// --------------------------------------------------------------------------

/// Fills `out` with i.i.d. CN(0, sigma_e_sq) samples.
inline void draw_noise(std::span<Complex> out, double sigma_e_sq, SplitMix64& rng)
{
    for (auto& z : out)
        z = draw_complex_gaussian(rng, sigma_e_sq);
}

/// One training block y_exp = theta u_exp + e_exp, bit-reproducible from `seed`.
inline TrainingRealization generate_training(const TrainingDesign& design, Complex theta, double sigma_e_sq,
                                             std::uint64_t seed)
{
    if (!is_finite(theta))
        throw Error(ErrorKind::InvalidParameter, "theta must be finite");
    if (!(sigma_e_sq >= 0.0) || !std::isfinite(sigma_e_sq))
        throw Error(ErrorKind::InvalidParameter, "sigma_e_sq must be non-negative and finite");

    TrainingRealization out{CVector(design.size()), CVector(design.size())};
    SplitMix64 rng(seed);
    draw_noise(out.e_exp, sigma_e_sq, rng);
    const auto u = design.u();
    for (std::size_t m = 0; m < u.size(); ++m)
        out.y_exp[m] = theta * u[m] + out.e_exp[m];
    return out;
}

/// theta_hat = f^H y_exp.
inline Complex apply_filter(const EstimatorFilter& filter, const TrainingRealization& realization)
{
    return inner(filter.f, realization.y_exp);
}

} // namespace estlab
