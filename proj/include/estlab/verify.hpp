#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "estlab/core.hpp"
#include "estlab/filters.hpp"
#include "estlab/metrics.hpp"
#include "estlab/parallel.hpp"
#include "estlab/sim.hpp"

namespace estlab {

// --------------------------------------------------------------------------
// Finite-difference gradients
// --------------------------------------------------------------------------

/// Real-valued function of a complex filter vector.
using MetricFn = std::function<double(std::span<const Complex>)>;

/// 1e-6 max(1, ||f||).
inline double default_fd_step(std::span<const Complex> f) { return 1e-6 * std::max(1.0, std::sqrt(norm_sq(f))); }

/// Central differences over the 2N real coordinates of f, assembled as the
/// derivative with respect to conj(f): g_k = (d/dRe f_k + i d/dIm f_k) / 2.
/// With this convention the gradient of ||f||^2 is f.
inline CVector fd_gradient(const MetricFn& metric, std::span<const Complex> f, double step)
{
    if (!(step > 0.0) || !std::isfinite(step))
        throw Error(ErrorKind::InvalidParameter, "finite-difference step must be positive");

    CVector probe(f.begin(), f.end());
    auto eval = [&]() {
        double v = 0.0;
        try {
            v = metric(probe);
        } catch (const std::exception& e) {
            throw Error(ErrorKind::EvaluationFailure, std::string("metric failed at a probe point: ") + e.what());
        }
        if (!std::isfinite(v))
            throw Error(ErrorKind::EvaluationFailure, "metric is not finite at a probe point");
        return v;
    };

    CVector grad(f.size());
    for (std::size_t k = 0; k < f.size(); ++k) {
        probe[k] = f[k] + Complex{step, 0.0};
        const double re_plus = eval();
        probe[k] = f[k] - Complex{step, 0.0};
        const double re_minus = eval();
        probe[k] = f[k] + Complex{0.0, step};
        const double im_plus = eval();
        probe[k] = f[k] - Complex{0.0, step};
        const double im_minus = eval();
        probe[k] = f[k];
        const double d_re = (re_plus - re_minus) / (2.0 * step);
        const double d_im = (im_plus - im_minus) / (2.0 * step);
        grad[k] = 0.5 * Complex{d_re, d_im};
    }
    return grad;
}

inline MetricFn zeroth_det_metric_fn(const TrainingDesign& design, const ModelParams& params)
{
    return [design, params](std::span<const Complex> f) {
        return zeroth_det_metric(EstimatorFilter{CVector(f.begin(), f.end())}, design, params).value;
    };
}

inline MetricFn zeroth_rand_metric_fn(const TrainingDesign& design, const PriorMoments& prior, double sigma_u_sq,
                                      double sigma_e_sq)
{
    return [design, prior, sigma_u_sq, sigma_e_sq](std::span<const Complex> f) {
        return zeroth_rand_metric(EstimatorFilter{CVector(f.begin(), f.end())}, design, prior, sigma_u_sq,
                                  sigma_e_sq)
            .value;
    };
}

/// ||g|| ||f|| / metric: a gradient norm made scale-free.
inline double relative_gradient_norm(std::span<const Complex> grad, std::span<const Complex> f, double metric_value)
{
    return std::sqrt(norm_sq(grad)) * std::sqrt(norm_sq(f)) / metric_value;
}

struct GradCheckReport {
    double analytic_norm = 0.0;
    double fd_norm = 0.0;
    double cosine_similarity = 0.0;
    /// max_k |s a_k - g_k| where s is the least-squares real scale of a onto g.
    double max_abs_entry_gap_after_scale = 0.0;
};

inline GradCheckReport compare_gradients(std::span<const Complex> analytic, std::span<const Complex> fd)
{
    GradCheckReport r;
    r.analytic_norm = std::sqrt(norm_sq(analytic));
    r.fd_norm = std::sqrt(norm_sq(fd));
    const double dot = inner(analytic, fd).real();
    if (r.analytic_norm > 0.0 && r.fd_norm > 0.0)
        r.cosine_similarity = std::clamp(dot / (r.analytic_norm * r.fd_norm), -1.0, 1.0);
    const double scale = r.analytic_norm > 0.0 ? dot / (r.analytic_norm * r.analytic_norm) : 0.0;
    for (std::size_t k = 0; k < analytic.size(); ++k)
        r.max_abs_entry_gap_after_scale = std::max(r.max_abs_entry_gap_after_scale, std::abs(scale * analytic[k] - fd[k]));
    return r;
}

/// Magnitude of the two terms that cancel in zeroth_det_gradient_numerator:
/// max over k of |A dB_k| and |B dA_k|. Residuals are judged against this.
inline double gradient_numerator_term_scale(const EstimatorFilter& filter, const TrainingDesign& design,
                                            const ModelParams& params)
{
    const auto t = detail::det_terms(filter, design, params);
    const auto u = design.u();
    double scale = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const Complex d_numer = t.theta_sq * std::conj(t.phi - 1.0) * u[k] + params.sigma_e_sq * filter.f[k];
        const Complex d_denom = t.theta_sq * std::conj(t.phi) * u[k] + params.sigma_e_sq * filter.f[k];
        scale = std::max({scale, std::abs(t.denom * d_numer), std::abs(t.numer * d_denom)});
    }
    return scale;
}

// --------------------------------------------------------------------------
// Trim probability
// --------------------------------------------------------------------------

struct TrimProbabilityPoint {
    double lambda = 0.0;
    double probability = 0.0;
    double probability_over_lambda_sq = 0.0;
};

/// Monte-Carlo estimate of Pr{|f^H y_exp| <= lambda} for each lambda, all from
/// the same draws.
inline std::vector<TrimProbabilityPoint> trim_probability_scaling(const EstimatorFilter& filter,
                                                                  const TrainingDesign& design,
                                                                  const ThetaModel& theta_model, double sigma_e_sq,
                                                                  std::span<const double> lambdas,
                                                                  std::uint64_t trials, std::uint64_t seed,
                                                                  Parallelism par = Parallelism::from_env())
{
    detail::check_trials(trials);
    for (double l : lambdas)
        TrimPolicy{l}.check();
    if (filter.size() != design.size())
        throw Error(ErrorKind::Dimension, "filter length does not match the training length");
    if (const auto* g = std::get_if<GaussianTheta>(&theta_model); g && !(g->variance > 0.0))
        throw Error(ErrorKind::InvalidParameter, "theta variance must be positive");
    if (!(sigma_e_sq >= 0.0))
        throw Error(ErrorKind::InvalidParameter, "sigma_e_sq must be non-negative");

    auto chunk = [&](std::uint64_t begin, std::uint64_t end) {
        std::vector<std::uint64_t> hits(lambdas.size(), 0);
        CVector y(design.size());
        for (std::uint64_t t = begin; t < end; ++t) {
            const Complex theta = detail::draw_theta(theta_model, seed, t);
            detail::draw_training(y, design, theta, sigma_e_sq, seed, t);
            const double r = std::abs(inner(filter.f, y));
            for (std::size_t j = 0; j < lambdas.size(); ++j)
                hits[j] += r <= lambdas[j] ? 1 : 0;
        }
        return hits;
    };
    std::vector<std::uint64_t> hits(lambdas.size(), 0);
    for (const auto& part : run_chunks(trials, chunk, par))
        for (std::size_t j = 0; j < hits.size(); ++j)
            hits[j] += part[j];

    std::vector<TrimProbabilityPoint> out;
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
        const double p = static_cast<double>(hits[j]) / static_cast<double>(trials);
        out.push_back({lambdas[j], p, p / (lambdas[j] * lambdas[j])});
    }
    return out;
}

/// Least-squares slope of log p against log lambda; NaN if any p is zero.
inline double loglog_slope(std::span<const TrimProbabilityPoint> points)
{
    if (points.size() < 2)
        return std::numeric_limits<double>::quiet_NaN();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : points) {
        if (!(p.probability > 0.0))
            return std::numeric_limits<double>::quiet_NaN();
        const double x = std::log(p.lambda);
        const double y = std::log(p.probability);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(points.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// --------------------------------------------------------------------------
// Ratio-of-means approximation
// --------------------------------------------------------------------------

/// Statistics of X = |f^H y - theta|^2 and Y = |f^H y|^2 on the no-trim event
/// |f^H y| > lambda (trimmed trials are discarded).
struct RatioGapReport {
    double gap = 0.0;            ///< |E[X/Y] - E[X]/E[Y]|
    double mean_of_ratio = 0.0;  ///< E[X/Y]
    double ratio_of_means = 0.0; ///< E[X]/E[Y]
    double zeroth_ratio = 0.0;   ///< closed-form ratio factor of the zeroth-order metric
    double kept_fraction = 0.0;
};

inline RatioGapReport ratio_approximation_gap(const EstimatorFilter& filter, const TrainingDesign& design,
                                              const ModelParams& params, const TrimPolicy& policy,
                                              std::uint64_t trials, std::uint64_t seed,
                                              Parallelism par = Parallelism::from_env())
{
    detail::check_trials(trials);
    policy.check();
    RatioGapReport report;
    report.zeroth_ratio = zeroth_det_ratio(filter, design, params);

    struct Acc {
        RunningStats ratio, x, y;
    };
    auto chunk = [&](std::uint64_t begin, std::uint64_t end) {
        Acc acc;
        CVector y(design.size());
        for (std::uint64_t t = begin; t < end; ++t) {
            detail::draw_training(y, design, params.theta, params.sigma_e_sq, seed, t);
            const Complex estimate = inner(filter.f, y);
            const double y_val = std::norm(estimate);
            if (std::sqrt(y_val) <= policy.lambda)
                continue;
            const double x_val = std::norm(estimate - params.theta);
            acc.ratio.add(x_val / y_val);
            acc.x.add(x_val);
            acc.y.add(y_val);
        }
        return acc;
    };
    Acc total;
    for (const auto& part : run_chunks(trials, chunk, par)) {
        total.ratio.merge(part.ratio);
        total.x.merge(part.x);
        total.y.merge(part.y);
    }
    report.kept_fraction = static_cast<double>(total.ratio.count()) / static_cast<double>(trials);
    if (total.ratio.count() == 0) {
        report.gap = report.mean_of_ratio = report.ratio_of_means = std::numeric_limits<double>::quiet_NaN();
        return report;
    }
    report.mean_of_ratio = total.ratio.mean();
    report.ratio_of_means = total.x.mean() / total.y.mean();
    report.gap = std::abs(report.mean_of_ratio - report.ratio_of_means);
    return report;
}

// --------------------------------------------------------------------------
// Regularized Monte-Carlo versus zeroth-order closed form, per grid point
// --------------------------------------------------------------------------

struct ApproxGapReport {
    double data_snr_db = 0.0;
    double lambda = 0.0;
    double trim_probability = 0.0; ///< MVU estimate trimmed
    double prob_over_lambda_sq = 0.0;
    double mc_mvu = 0.0;
    double mc_mmse = 0.0;
    double mc_combined_se = 0.0; ///< sqrt(se_mvu^2 + se_mmse^2)
    double mc_diff_se = 0.0;     ///< standard error of the paired per-trial difference
    double zeroth_mvu = 0.0;
    double zeroth_mmse = 0.0;
    double f_dependence_gap = 0.0; ///< |(MC_MVU - MC_MMSE) - (ZO_MVU - ZO_MMSE)|
    bool sign_agrees = false;
    bool sign_agrees_within_noise = false;
};

namespace detail {
inline int sign_of(double x) { return (x > 0.0) - (x < 0.0); }
} // namespace detail

inline std::vector<ApproxGapReport> regularized_vs_zeroth_report(SweepConfig config,
                                                                 Parallelism par = Parallelism::from_env())
{
    config.estimators = {FilterKind::Mvu, FilterKind::Mmse};
    config.validate();
    std::vector<ApproxGapReport> out;
    for (std::size_t i = 0; i < config.data_snr_grid_db.size(); ++i) {
        const auto point = evaluate_grid_point(config, i, par);
        ApproxGapReport r;
        r.data_snr_db = point.data_snr_db;
        r.lambda = config.lambda;
        r.trim_probability = point.mc.trimmed[0].mean();
        r.prob_over_lambda_sq = r.trim_probability / (config.lambda * config.lambda);
        r.mc_mvu = point.mc.excess[0].mean();
        r.mc_mmse = point.mc.excess[1].mean();
        r.mc_combined_se = std::hypot(point.mc.excess[0].std_error(), point.mc.excess[1].std_error());
        r.mc_diff_se = point.mc.diff_from_first[1].std_error();
        r.zeroth_mvu = point.zeroth[0].value;
        r.zeroth_mmse = point.zeroth[1].value;
        const double mc_diff = r.mc_mvu - r.mc_mmse;
        const double zo_diff = r.zeroth_mvu - r.zeroth_mmse;
        r.f_dependence_gap = std::abs(mc_diff - zo_diff);
        r.sign_agrees = detail::sign_of(mc_diff) == detail::sign_of(zo_diff);
        r.sign_agrees_within_noise = r.sign_agrees || std::abs(mc_diff) <= 3.0 * r.mc_combined_se;
        out.push_back(r);
    }
    return out;
}

/// Fits one vertical offset between the two curves on a logarithmic axis
/// (mc = zo e^c, the way the figures are drawn) and returns each point's
/// relative residual |mc / (zo e^c) - 1|.
inline std::vector<double> vertical_translation_residuals(std::span<const double> mc, std::span<const double> zo)
{
    if (mc.size() != zo.size() || mc.empty())
        throw Error(ErrorKind::Dimension, "residual fit needs equally sized, nonempty series");
    double offset = 0.0;
    for (std::size_t i = 0; i < mc.size(); ++i) {
        if (!(mc[i] > 0.0) || !(zo[i] > 0.0))
            throw Error(ErrorKind::InvalidParameter, "a logarithmic fit needs positive values");
        offset += std::log(mc[i]) - std::log(zo[i]);
    }
    offset /= static_cast<double>(mc.size());
    std::vector<double> out;
    for (std::size_t i = 0; i < mc.size(); ++i)
        out.push_back(std::abs(mc[i] / (zo[i] * std::exp(offset)) - 1.0));
    return out;
}

} // namespace estlab
