#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "estlab/core.hpp"
#include "estlab/filters.hpp"
#include "estlab/metrics.hpp"
#include "estlab/parallel.hpp"

namespace estlab {

// --------------------------------------------------------------------------
// How theta is produced in a Monte-Carlo trial
// --------------------------------------------------------------------------

struct FixedTheta {
    Complex value{1.0, 0.0};
};

/// theta ~ CN(0, variance).
struct GaussianTheta {
    double variance = 1.0;

    PriorMoments moments() const { return PriorMoments::circular_gaussian(variance); }
};

using ThetaModel = std::variant<FixedTheta, GaussianTheta>;

inline double dB_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// Per-trial excess MSE of the ZF input estimator given the (possibly trimmed)
/// estimate: |(theta_hat - theta) / theta_hat|^2 (sigma_u^2 + sigma_e^2 / |theta|^2).
inline double excess_integrand(Complex theta_hat, Complex theta, double sigma_u_sq, double sigma_e_sq)
{
    return std::norm((theta_hat - theta) / theta_hat) * (sigma_u_sq + sigma_e_sq / std::norm(theta));
}

inline EstimatorFilter build_filter(FilterKind kind, const TrainingDesign& design, const PriorMoments& prior,
                                    double sigma_e_sq)
{
    switch (kind) {
    case FilterKind::Mvu: return build_mvu_filter(design);
    case FilterKind::Mmse: return build_mmse_filter(design, prior, sigma_e_sq);
    case FilterKind::Custom: break;
    }
    throw Error(ErrorKind::InvalidParameter, "custom filters cannot be built from a kind");
}

// --------------------------------------------------------------------------
// Joint Monte-Carlo engine
// --------------------------------------------------------------------------

/// Accumulators for several filters evaluated on common draws: trial t uses
/// the same theta and the same e_exp for every filter.
struct JointEstimate {
    std::vector<RunningStats> excess;          ///< per filter
    std::vector<RunningStats> diff_from_first; ///< excess[i] - excess[0] per trial; entry 0 unused
    std::vector<RunningStats> trimmed;         ///< indicator of |f^H y_exp| <= lambda, per filter
};

namespace detail {

inline void check_trials(std::uint64_t trials)
{
    if (trials == 0)
        throw Error(ErrorKind::InvalidParameter, "trials must be at least 1");
}

inline void merge_into(std::vector<RunningStats>& into, const std::vector<RunningStats>& from)
{
    for (std::size_t i = 0; i < into.size(); ++i)
        into[i].merge(from[i]);
}

inline void check_theta_model(const ThetaModel& model)
{
    if (const auto* fixed = std::get_if<FixedTheta>(&model)) {
        if (!is_finite(fixed->value))
            throw Error(ErrorKind::InvalidParameter, "theta must be finite");
        if (fixed->value == Complex{})
            throw Error(ErrorKind::SingularModel, "theta must be nonzero for the zero-forcing metric");
    } else {
        const double v = std::get<GaussianTheta>(model).variance;
        if (!(v > 0.0) || !std::isfinite(v))
            throw Error(ErrorKind::InvalidParameter, "theta variance must be positive and finite");
    }
}

/// theta for trial `index`; random thetas come from their own stream.
inline Complex draw_theta(const ThetaModel& model, std::uint64_t seed, std::uint64_t index)
{
    if (const auto* fixed = std::get_if<FixedTheta>(&model))
        return fixed->value;
    SplitMix64 rng(derive_seed(seed, Stream::Theta, index));
    return draw_complex_gaussian(rng, std::get<GaussianTheta>(model).variance);
}

/// y_exp for trial `index`, drawn exactly as generate_training does for the
/// seed derive_seed(seed, Stream::Noise, index).
inline void draw_training(std::span<Complex> y, const TrainingDesign& design, Complex theta, double sigma_e_sq,
                          std::uint64_t seed, std::uint64_t index)
{
    SplitMix64 rng(derive_seed(seed, Stream::Noise, index));
    draw_noise(y, sigma_e_sq, rng);
    const auto u = design.u();
    for (std::size_t m = 0; m < u.size(); ++m)
        y[m] = theta * u[m] + y[m];
}

} // namespace detail

inline JointEstimate mc_excess_mse_joint(std::span<const EstimatorFilter> filters, const TrainingDesign& design,
                                         const ThetaModel& theta_model, double sigma_u_sq, double sigma_e_sq,
                                         const std::optional<TrimPolicy>& policy, std::uint64_t trials,
                                         std::uint64_t seed, Parallelism par = Parallelism::from_env())
{
    detail::check_trials(trials);
    detail::check_theta_model(theta_model);
    ModelParams{Complex{1.0}, sigma_u_sq, sigma_e_sq}.check();
    if (policy)
        policy->check();
    if (filters.empty())
        throw Error(ErrorKind::InvalidParameter, "at least one filter is required");
    for (const auto& f : filters) {
        if (f.size() != design.size())
            throw Error(ErrorKind::Dimension, "filter length does not match the training length");
        detail::require_nonzero_filter(f);
    }

    const std::size_t n_filters = filters.size();
    auto chunk = [&](std::uint64_t begin, std::uint64_t end) {
        JointEstimate acc{std::vector<RunningStats>(n_filters), std::vector<RunningStats>(n_filters),
                          std::vector<RunningStats>(n_filters)};
        CVector y(design.size());
        std::vector<double> values(n_filters);
        for (std::uint64_t t = begin; t < end; ++t) {
            const Complex theta = detail::draw_theta(theta_model, seed, t);
            detail::draw_training(y, design, theta, sigma_e_sq, seed, t);
            for (std::size_t i = 0; i < n_filters; ++i) {
                const Complex raw = inner(filters[i].f, y);
                const bool trims = policy && std::abs(raw) <= policy->lambda;
                const Complex estimate = policy ? trim(raw, *policy) : raw;
                values[i] = excess_integrand(estimate, theta, sigma_u_sq, sigma_e_sq);
                acc.excess[i].add(values[i]);
                acc.trimmed[i].add(trims ? 1.0 : 0.0);
                if (i > 0)
                    acc.diff_from_first[i].add(values[i] - values[0]);
            }
        }
        return acc;
    };

    JointEstimate total{std::vector<RunningStats>(n_filters), std::vector<RunningStats>(n_filters),
                        std::vector<RunningStats>(n_filters)};
    for (const auto& part : run_chunks(trials, chunk, par)) {
        detail::merge_into(total.excess, part.excess);
        detail::merge_into(total.diff_from_first, part.diff_from_first);
        detail::merge_into(total.trimmed, part.trimmed);
    }
    return total;
}

namespace detail {

inline MetricValue to_metric(const RunningStats& stats, MetricVariant variant)
{
    return {stats.mean(), variant, stats.std_error(), stats.count()};
}

} // namespace detail

/// Monte-Carlo excess MSE for a fixed theta. With a policy the estimate is
/// trimmed (RegularizedMC); without one it is the raw, heavy-tailed estimate (RawMC).
inline MetricValue mc_excess_mse_det(const EstimatorFilter& filter, const TrainingDesign& design,
                                     const ModelParams& params, const std::optional<TrimPolicy>& policy,
                                     std::uint64_t trials, std::uint64_t seed,
                                     Parallelism par = Parallelism::from_env())
{
    params.check();
    const auto joint = mc_excess_mse_joint(std::span(&filter, 1), design, FixedTheta{params.theta},
                                           params.sigma_u_sq, params.sigma_e_sq, policy, trials, seed, par);
    return detail::to_metric(joint.excess[0], policy ? MetricVariant::RegularizedMC : MetricVariant::RawMC);
}

/// Monte-Carlo excess MSE averaged over theta ~ CN(0, variance). The filter is
/// built from `kind`; the MMSE filter uses the moments of the same prior.
inline MetricValue mc_excess_mse_rand(FilterKind kind, const TrainingDesign& design, const GaussianTheta& prior,
                                      double sigma_u_sq, double sigma_e_sq, const std::optional<TrimPolicy>& policy,
                                      std::uint64_t trials, std::uint64_t seed,
                                      Parallelism par = Parallelism::from_env())
{
    detail::check_theta_model(prior);
    const auto filter = build_filter(kind, design, prior.moments(), sigma_e_sq);
    const auto joint = mc_excess_mse_joint(std::span(&filter, 1), design, prior, sigma_u_sq, sigma_e_sq, policy,
                                           trials, seed, par);
    return detail::to_metric(joint.excess[0], policy ? MetricVariant::RegularizedMC : MetricVariant::RawMC);
}

/// Separate sample means of the numerator and denominator of the random-theta
/// zeroth-order metric, using the untrimmed estimate.
struct ZerothRatioEstimate {
    RunningStats numerator;   ///< sigma_u^2 |theta|^2 |theta_hat - theta|^2 + sigma_e^2 |theta_hat - theta|^2
    RunningStats denominator; ///< |theta|^2 |theta_hat|^2

    double ratio() const { return numerator.mean() / denominator.mean(); }
};

inline ZerothRatioEstimate mc_zeroth_rand_ratio(const EstimatorFilter& filter, const TrainingDesign& design,
                                                const GaussianTheta& prior, double sigma_u_sq, double sigma_e_sq,
                                                std::uint64_t trials, std::uint64_t seed,
                                                Parallelism par = Parallelism::from_env())
{
    detail::check_trials(trials);
    detail::check_theta_model(prior);
    ModelParams{Complex{1.0}, sigma_u_sq, sigma_e_sq}.check();
    if (filter.size() != design.size())
        throw Error(ErrorKind::Dimension, "filter length does not match the training length");

    auto chunk = [&](std::uint64_t begin, std::uint64_t end) {
        ZerothRatioEstimate acc;
        CVector y(design.size());
        for (std::uint64_t t = begin; t < end; ++t) {
            const Complex theta = detail::draw_theta(prior, seed, t);
            detail::draw_training(y, design, theta, sigma_e_sq, seed, t);
            const Complex estimate = inner(filter.f, y);
            const double err_sq = std::norm(estimate - theta);
            const double theta_sq = std::norm(theta);
            acc.numerator.add(sigma_u_sq * theta_sq * err_sq + sigma_e_sq * err_sq);
            acc.denominator.add(theta_sq * std::norm(estimate));
        }
        return acc;
    };
    ZerothRatioEstimate total;
    for (const auto& part : run_chunks(trials, chunk, par)) {
        total.numerator.merge(part.numerator);
        total.denominator.merge(part.denominator);
    }
    return total;
}

/// Coefficient of variation of `batches` independent batch means of the
/// per-trial excess MSE. Without a policy the integrand has no finite mean and
/// the batch means scatter; with trimming they settle.
inline double tail_diagnostic(const EstimatorFilter& filter, const TrainingDesign& design, const ModelParams& params,
                              std::uint64_t trials_per_batch, std::uint64_t batches, std::uint64_t seed,
                              const std::optional<TrimPolicy>& policy = std::nullopt,
                              Parallelism par = Parallelism::from_env())
{
    if (batches < 10)
        throw Error(ErrorKind::InvalidParameter, "at least 10 batches are required");
    RunningStats batch_means;
    for (std::uint64_t b = 0; b < batches; ++b) {
        const auto m = mc_excess_mse_det(filter, design, params, policy, trials_per_batch,
                                         derive_seed(seed, Stream::Batch, b), par);
        batch_means.add(m.value);
    }
    if (batch_means.mean() == 0.0)
        return 0.0;
    return std::sqrt(batch_means.variance()) / batch_means.mean();
}

// --------------------------------------------------------------------------
// Sweep
// --------------------------------------------------------------------------

enum class ThetaMode { Random, Fixed };

constexpr std::string_view to_string(ThetaMode mode) noexcept
{
    return mode == ThetaMode::Fixed ? "fixed" : "random";
}

inline std::vector<double> default_data_snr_grid()
{
    std::vector<double> grid;
    for (int i = 0; i <= 12; ++i)
        grid.push_back(-5.0 + 2.5 * i);
    return grid;
}

/// Sweep over data SNR with the training block held fixed.
///
/// SNR conventions (gain_sq = E|theta|^2, or |theta|^2 in fixed mode):
///   training SNR = (||u_exp||^2 / N) gain_sq / sigma_e^2
///   data SNR     = sigma_u^2 gain_sq / sigma_e^2
/// sigma_e^2 stays fixed; the training energy and sigma_u^2 are derived from the
/// two SNRs. A noiseless config (sigma_e^2 = 0) uses 1 as the reference power.
struct SweepConfig {
    double training_snr_db = 0.0;
    std::vector<double> data_snr_grid_db = default_data_snr_grid();
    std::size_t n_train = 2;
    double lambda = 0.1;
    std::uint64_t trials = 1'000'000;
    std::uint64_t master_seed = 1;
    double theta_variance = 1.0;
    std::vector<FilterKind> estimators{FilterKind::Mvu, FilterKind::Mmse};
    double sigma_e_sq = 1.0;
    ThetaMode theta_mode = ThetaMode::Random;
    Complex fixed_theta{1.0, 0.0};
    CVector training_direction; ///< empty: constant vector

    static SweepConfig reference() { return SweepConfig{}; }

    void validate() const
    {
        if (!std::isfinite(training_snr_db))
            throw ConfigError("training_snr_db", "must be finite");
        if (data_snr_grid_db.empty())
            throw ConfigError("data_snr_grid_db", "grid must not be empty");
        for (double v : data_snr_grid_db)
            if (!std::isfinite(v))
                throw ConfigError("data_snr_grid_db", "grid values must be finite");
        if (n_train < 1)
            throw ConfigError("n_train", "must be at least 1");
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw ConfigError("lambda", "must be positive and finite");
        if (trials < 1)
            throw ConfigError("trials", "must be at least 1");
        if (!(theta_variance > 0.0) || !std::isfinite(theta_variance))
            throw ConfigError("theta_variance", "must be positive and finite");
        if (estimators.empty())
            throw ConfigError("estimators", "must list at least one estimator");
        for (auto k : estimators)
            if (k == FilterKind::Custom)
                throw ConfigError("estimators", "only mvu and mmse can be swept");
        if (!(sigma_e_sq >= 0.0) || !std::isfinite(sigma_e_sq))
            throw ConfigError("sigma_e_sq", "must be non-negative and finite");
        if (theta_mode == ThetaMode::Fixed && (!is_finite(fixed_theta) || fixed_theta == Complex{}))
            throw ConfigError("theta", "fixed theta must be finite and nonzero");
        if (!training_direction.empty()) {
            if (training_direction.size() != n_train)
                throw ConfigError("training_direction", "length must equal n_train");
            const double e = norm_sq(training_direction);
            if (e == 0.0 || !std::isfinite(e))
                throw ConfigError("training_direction", "must be nonzero and finite");
        }
    }

    PriorMoments prior() const { return PriorMoments::circular_gaussian(theta_variance); }

    ThetaModel theta_model() const
    {
        if (theta_mode == ThetaMode::Fixed)
            return FixedTheta{fixed_theta};
        return GaussianTheta{theta_variance};
    }

    double gain_sq() const { return theta_mode == ThetaMode::Fixed ? std::norm(fixed_theta) : theta_variance; }
    double reference_noise() const { return sigma_e_sq > 0.0 ? sigma_e_sq : 1.0; }

    double training_energy() const
    {
        return static_cast<double>(n_train) * dB_to_linear(training_snr_db) * reference_noise() / gain_sq();
    }

    double sigma_u_sq(double data_snr_db) const { return dB_to_linear(data_snr_db) * reference_noise() / gain_sq(); }

    TrainingDesign design() const
    {
        if (training_direction.empty())
            return TrainingDesign::constant(n_train, training_energy());
        return TrainingDesign::along(training_direction, training_energy());
    }

    bool operator==(const SweepConfig&) const = default;
};

struct SweepRow {
    double data_snr_db = 0.0;
    FilterKind estimator = FilterKind::Mvu;
    MetricVariant variant = MetricVariant::ZerothRand;
    double mean = 0.0;
    double std_error = 0.0;
    std::uint64_t trials = 0;

    bool operator==(const SweepRow&) const = default;
};

/// Seed for one grid point, keyed by the SNR value rather than its position so
/// that reordering or subsetting the grid leaves every row unchanged.
inline std::uint64_t grid_point_seed(std::uint64_t master_seed, double data_snr_db)
{
    const double key = data_snr_db == 0.0 ? 0.0 : data_snr_db; // fold -0.0
    return derive_seed(master_seed, Stream::GridPoint, std::bit_cast<std::uint64_t>(key));
}

/// Everything computed at one grid point; shared by run_sweep and the
/// approximation report so both see identical Monte-Carlo numbers.
struct GridPointResult {
    double data_snr_db = 0.0;
    double sigma_u_sq = 0.0;
    std::vector<EstimatorFilter> filters;
    std::vector<MetricValue> zeroth;
    JointEstimate mc;
};

inline GridPointResult evaluate_grid_point(const SweepConfig& config, std::size_t index,
                                           Parallelism par = Parallelism::from_env())
{
    const double db = config.data_snr_grid_db.at(index);
    try {
        GridPointResult out;
        out.data_snr_db = db;
        out.sigma_u_sq = config.sigma_u_sq(db);
        const auto design = config.design();
        const auto prior = config.prior();
        for (auto kind : config.estimators)
            out.filters.push_back(build_filter(kind, design, prior, config.sigma_e_sq));
        for (const auto& f : out.filters) {
            if (config.theta_mode == ThetaMode::Fixed)
                out.zeroth.push_back(
                    zeroth_det_metric(f, design, ModelParams{config.fixed_theta, out.sigma_u_sq, config.sigma_e_sq}));
            else
                out.zeroth.push_back(zeroth_rand_metric(f, design, prior, out.sigma_u_sq, config.sigma_e_sq));
        }
        out.mc = mc_excess_mse_joint(out.filters, design, config.theta_model(), out.sigma_u_sq, config.sigma_e_sq,
                                     TrimPolicy{config.lambda}, config.trials,
                                     grid_point_seed(config.master_seed, db), par);
        return out;
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw Error(e.kind(), "grid point " + std::to_string(index) + " (data SNR " + std::to_string(db) +
                                  " dB): " + e.what());
    }
}

/// Rows per grid point and estimator: the closed-form zeroth-order metric and
/// the trimmed Monte-Carlo metric, in grid order.
inline std::vector<SweepRow> run_sweep(const SweepConfig& config, Parallelism par = Parallelism::from_env())
{
    config.validate();
    std::vector<SweepRow> rows;
    for (std::size_t i = 0; i < config.data_snr_grid_db.size(); ++i) {
        const auto point = evaluate_grid_point(config, i, par);
        for (std::size_t k = 0; k < point.filters.size(); ++k) {
            rows.push_back({point.data_snr_db, point.filters[k].kind, point.zeroth[k].variant, point.zeroth[k].value,
                            0.0, config.trials});
            const auto& mc = point.mc.excess[k];
            rows.push_back({point.data_snr_db, point.filters[k].kind, MetricVariant::RegularizedMC, mc.mean(),
                            mc.std_error(), mc.count()});
        }
    }
    return rows;
}

} // namespace estlab
