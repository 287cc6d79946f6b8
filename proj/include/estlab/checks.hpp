#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "estlab/verify.hpp"

namespace estlab {

enum class CheckStatus { Pass, Fail, NotApplicable };

constexpr std::string_view to_string(CheckStatus s) noexcept
{
    switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::NotApplicable: return "not-applicable";
    }
    return "fail";
}

struct CheckResult {
    std::string group;
    std::string name;
    CheckStatus status = CheckStatus::Fail;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
};

inline const std::vector<std::string>& check_groups()
{
    static const std::vector<std::string> groups{"stationarity-mvu", "mmse-nonstationary", "closed-form",
                                                 "gradient-collinearity", "ordering", "lambda-scaling",
                                                 "ratio-gap"};
    return groups;
}

// --------------------------------------------------------------------------
// Random scenarios
// --------------------------------------------------------------------------

/// A random configuration for the closed-form checks:
/// N in 1..5, |theta| in [0.1, 10], sigma_u^2 and sigma_e^2 in [0.01, 100]
/// (log-uniform), ||u||^2 in [0.1, 10], m2 in [0.01, 100], m4 / m2^2 in [1, 3].
struct Scenario {
    TrainingDesign design;
    ModelParams params;
    PriorMoments prior;
};

namespace detail {

inline double log_uniform(SplitMix64& rng, double lo, double hi)
{
    return std::exp(std::log(lo) + rng.uniform_open() * (std::log(hi) - std::log(lo)));
}

inline CVector random_direction(SplitMix64& rng, std::size_t n)
{
    CVector v(n);
    for (auto& z : v)
        z = draw_complex_gaussian(rng, 1.0);
    return v;
}

} // namespace detail

inline Scenario random_scenario(std::uint64_t seed, std::uint64_t index)
{
    SplitMix64 rng(derive_seed(seed, Stream::Scenario, index));
    const auto n = static_cast<std::size_t>(1 + std::min<std::uint64_t>(4, rng() % 5));
    const double energy = detail::log_uniform(rng, 0.1, 10.0);
    auto design = TrainingDesign::along(detail::random_direction(rng, n), energy);
    const double radius = detail::log_uniform(rng, 0.1, 10.0);
    const Complex theta = std::polar(radius, 2.0 * std::numbers::pi * rng.uniform_open());
    const double su = detail::log_uniform(rng, 0.01, 100.0);
    const double se = detail::log_uniform(rng, 0.01, 100.0);
    const double m2 = detail::log_uniform(rng, 0.01, 100.0);
    const double m4 = m2 * m2 * (1.0 + 2.0 * rng.uniform_open());
    return {std::move(design), ModelParams{theta, su, se}, PriorMoments{m2, m4}};
}

// --------------------------------------------------------------------------
// Individual checks
// --------------------------------------------------------------------------

namespace detail {

inline CheckResult make_check(std::string group, std::string name, bool ok, double measured, double threshold,
                              std::string detail)
{
    return {std::move(group), std::move(name), ok ? CheckStatus::Pass : CheckStatus::Fail, measured, threshold,
            std::move(detail)};
}

inline std::string describe(double v)
{
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

} // namespace detail

/// The gradient-numerator residual at the MVU filter, relative to the size of
/// the terms that cancel; worst case over `count` scenarios.
inline double mvu_det_stationarity_residual(std::uint64_t seed, std::uint64_t count)
{
    double worst = 0.0;
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto s = random_scenario(seed, i);
        const auto f = build_mvu_filter(s.design);
        const auto g = zeroth_det_gradient_numerator(f, s.design, s.params);
        double max_entry = 0.0;
        for (const auto& z : g)
            max_entry = std::max(max_entry, std::abs(z));
        worst = std::max(worst, max_entry / gradient_numerator_term_scale(f, s.design, s.params));
    }
    return worst;
}

/// Relative finite-difference gradient norm of the random-theta metric at the
/// MVU filter; worst case over `count` scenarios.
inline double mvu_rand_stationarity_residual(std::uint64_t seed, std::uint64_t count)
{
    double worst = 0.0;
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto s = random_scenario(seed, i);
        const auto f = build_mvu_filter(s.design);
        const auto metric = zeroth_rand_metric_fn(s.design, s.prior, s.params.sigma_u_sq, s.params.sigma_e_sq);
        const auto g = fd_gradient(metric, f.f, default_fd_step(f.f));
        worst = std::max(worst, relative_gradient_norm(g, f.f, metric(f.f)));
    }
    return worst;
}

/// Smallest relative finite-difference gradient norm at the MMSE filter over
/// `count` scenarios, each forced into the regime sigma_e^2 >= 0.1 m2 ||u||^2.
inline double mmse_rand_min_gradient(std::uint64_t seed, std::uint64_t count)
{
    double smallest = std::numeric_limits<double>::infinity();
    for (std::uint64_t i = 0; i < count; ++i) {
        auto s = random_scenario(seed, i);
        const double floor = 0.1 * s.prior.m2 * s.design.energy();
        if (s.params.sigma_e_sq < floor)
            s.params.sigma_e_sq = floor * (1.0 + static_cast<double>(i % 10));
        const auto f = build_mmse_filter(s.design, s.prior, s.params.sigma_e_sq);
        const auto metric = zeroth_rand_metric_fn(s.design, s.prior, s.params.sigma_u_sq, s.params.sigma_e_sq);
        const auto g = fd_gradient(metric, f.f, default_fd_step(f.f));
        smallest = std::min(smallest, relative_gradient_norm(g, f.f, metric(f.f)));
    }
    return smallest;
}

inline std::vector<CheckResult> check_stationarity_mvu(std::uint64_t seed, std::uint64_t count = 100)
{
    const double det = mvu_det_stationarity_residual(seed, count);
    const double rand = mvu_rand_stationarity_residual(seed, count);
    return {
        detail::make_check("stationarity-mvu", "deterministic-gradient-numerator", det < 1e-10, det, 1e-10,
                           "max relative entry of the gradient numerator at f_MVU over " + std::to_string(count) +
                               " scenarios"),
        detail::make_check("stationarity-mvu", "random-fd-gradient", rand < 1e-6, rand, 1e-6,
                           "max relative finite-difference gradient norm at f_MVU over " + std::to_string(count) +
                               " scenarios"),
    };
}

inline std::vector<CheckResult> check_mmse_nonstationary(const SweepConfig& config, std::uint64_t count = 100)
{
    if (config.sigma_e_sq == 0.0)
        return {{"mmse-nonstationary", "random-fd-gradient", CheckStatus::NotApplicable, 0.0, 1e-3,
                 "sigma_e^2 = 0: the MMSE and MVU filters coincide"}};
    const double smallest = mmse_rand_min_gradient(config.master_seed, count);
    return {detail::make_check("mmse-nonstationary", "random-fd-gradient", smallest > 1e-3, smallest, 1e-3,
                               "min relative finite-difference gradient norm at f_MMSE over " +
                                   std::to_string(count) + " scenarios")};
}

/// Random-theta metric at f_MVU against the energy-only closed form, for random
/// designs and same-energy twins pointing elsewhere; plus strict decrease in energy.
inline std::vector<CheckResult> check_closed_form(std::uint64_t seed, std::uint64_t count = 1000)
{
    double worst = 0.0;
    std::uint64_t non_monotone = 0;
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto s = random_scenario(seed, i);
        SplitMix64 rng(derive_seed(seed, Stream::Scenario, count + i));
        const auto twin = TrainingDesign::along(detail::random_direction(rng, s.design.size()), s.design.energy());
        const double su = s.params.sigma_u_sq;
        const double se = s.params.sigma_e_sq;
        const double closed = mvu_optimal_rand_value(s.design.energy(), s.prior, su, se).value;
        for (const auto* d : {&s.design, &twin}) {
            const double v = zeroth_rand_metric(build_mvu_filter(*d), *d, s.prior, su, se).value;
            worst = std::max(worst, std::abs(v - closed) / closed);
        }
        double previous = std::numeric_limits<double>::infinity();
        for (double scale : {0.25, 0.5, 1.0, 2.0, 4.0}) {
            const double v = mvu_optimal_rand_value(s.design.energy() * scale, s.prior, su, se).value;
            if (!(v < previous))
                ++non_monotone;
            previous = v;
        }
    }
    return {
        detail::make_check("closed-form", "energy-only-value", worst < 1e-12, worst, 1e-12,
                           "max relative gap to the closed form over " + std::to_string(count) +
                               " designs and same-energy twins"),
        detail::make_check("closed-form", "strictly-decreasing", non_monotone == 0,
                           static_cast<double>(non_monotone), 0.0, "energy steps that failed to decrease the value"),
    };
}

/// Gradient numerator versus finite differences of the deterministic metric at
/// random filters: collinear, and both clearly nonzero away from f_MVU.
inline std::vector<CheckResult> check_gradient_collinearity(std::uint64_t seed, std::uint64_t count = 100)
{
    double worst_cos = 1.0;
    double smallest_fd = std::numeric_limits<double>::infinity();
    double smallest_numerator = std::numeric_limits<double>::infinity();
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto s = random_scenario(seed, i);
        SplitMix64 rng(derive_seed(seed, Stream::Scenario, 2 * count + i));
        const auto mvu = build_mvu_filter(s.design);
        EstimatorFilter f{detail::random_direction(rng, s.design.size()), FilterKind::Custom};
        for (auto& z : f.f)
            z *= std::sqrt(norm_sq(mvu.f));
        const auto analytic = zeroth_det_gradient_numerator(f, s.design, s.params);
        const auto metric = zeroth_det_metric_fn(s.design, s.params);
        const auto fd = fd_gradient(metric, f.f, default_fd_step(f.f));
        worst_cos = std::min(worst_cos, compare_gradients(analytic, fd).cosine_similarity);
        smallest_fd = std::min(smallest_fd, relative_gradient_norm(fd, f.f, metric(f.f)));
        double max_entry = 0.0;
        for (const auto& z : analytic)
            max_entry = std::max(max_entry, std::abs(z));
        smallest_numerator =
            std::min(smallest_numerator, max_entry / gradient_numerator_term_scale(f, s.design, s.params));
    }
    const double mvu_fd = [&] {
        double worst = 0.0;
        for (std::uint64_t i = 0; i < count; ++i) {
            const auto s = random_scenario(seed, i);
            const auto f = build_mvu_filter(s.design);
            const auto metric = zeroth_det_metric_fn(s.design, s.params);
            worst = std::max(worst,
                             relative_gradient_norm(fd_gradient(metric, f.f, default_fd_step(f.f)), f.f, metric(f.f)));
        }
        return worst;
    }();
    const double misalignment = 1.0 - worst_cos;
    const bool vanishing_ok = mvu_fd < 1e-6 && smallest_fd > 1e-6 && smallest_numerator > 1e-10;
    return {
        detail::make_check("gradient-collinearity", "cosine-similarity", misalignment < 1e-6, misalignment, 1e-6,
                           "1 - min cosine similarity between the gradient numerator and finite differences"),
        detail::make_check("gradient-collinearity", "vanishing-equivalence", vanishing_ok, mvu_fd, 1e-6,
                           "fd norm at f_MVU " + detail::describe(mvu_fd) + "; min fd norm at random filters " +
                               detail::describe(smallest_fd) + "; min numerator at random filters " +
                               detail::describe(smallest_numerator)),
    };
}

/// MVU at or below MMSE for the closed form at every grid point and for the
/// trimmed Monte-Carlo metric up to 3 combined standard errors; plus the sign
/// agreement of the two MVU-minus-MMSE differences.
inline std::vector<CheckResult> check_ordering(const SweepConfig& config, Parallelism par = Parallelism::from_env())
{
    const auto reports = regularized_vs_zeroth_report(config, par);
    std::size_t zo_bad = 0, mc_bad = 0, sign_bad = 0;
    for (const auto& r : reports) {
        zo_bad += r.zeroth_mvu <= r.zeroth_mmse ? 0 : 1;
        mc_bad += r.mc_mvu <= r.mc_mmse + 3.0 * r.mc_combined_se ? 0 : 1;
        sign_bad += r.sign_agrees ? 0 : 1;
    }
    const auto n = std::to_string(reports.size());
    return {
        detail::make_check("ordering", "zeroth-mvu-below-mmse", zo_bad == 0, static_cast<double>(zo_bad), 0.0,
                           "grid points (of " + n + ") where the closed-form MVU curve is above MMSE"),
        detail::make_check("ordering", "mc-mvu-below-mmse", mc_bad == 0, static_cast<double>(mc_bad), 0.0,
                           "grid points (of " + n + ") where MC MVU exceeds MC MMSE by more than 3 combined SE"),
        detail::make_check("ordering", "sign-agreement", sign_bad == 0, static_cast<double>(sign_bad), 0.0,
                           "grid points (of " + n + ") where sign(MC diff) != sign(zeroth diff)"),
    };
}

/// Log-log slope of the trim probability over lambda in {0.025, 0.05, 0.1},
/// using 10x the configured trials.
inline std::vector<CheckResult> check_lambda_scaling(const SweepConfig& config,
                                                     Parallelism par = Parallelism::from_env())
{
    if (config.sigma_e_sq == 0.0 && config.theta_mode == ThetaMode::Fixed)
        return {{"lambda-scaling", "loglog-slope", CheckStatus::NotApplicable, 0.0, 2.0,
                 "noiseless training with a fixed theta never enters the trim disk"}};
    const auto design = config.design();
    const auto f = build_mvu_filter(design);
    const std::vector<double> lambdas{0.025, 0.05, 0.1};
    const auto points = trim_probability_scaling(f, design, config.theta_model(), config.sigma_e_sq, lambdas,
                                                 10 * config.trials, config.master_seed, par);
    const double slope = loglog_slope(points);
    return {detail::make_check("lambda-scaling", "loglog-slope", slope >= 1.8 && slope <= 2.2, slope, 2.0,
                               "slope of log Pr{|f^H y| <= lambda} vs log lambda, accepted in [1.8, 2.2]")};
}

/// Gap between the mean of X/Y and the ratio of means on the no-trim event at
/// training SNR 0 dB and 20 dB, fixed theta with |theta|^2 = E|theta|^2 unless
/// the config fixes theta.
inline std::vector<CheckResult> check_ratio_gap(const SweepConfig& config, Parallelism par = Parallelism::from_env())
{
    if (config.sigma_e_sq == 0.0)
        return {{"ratio-gap", "trend", CheckStatus::NotApplicable, 0.0, 0.0,
                 "noiseless training: X and Y are deterministic"}};
    auto at = [&](double training_db) {
        SweepConfig c = config;
        c.training_snr_db = training_db;
        c.theta_mode = ThetaMode::Fixed;
        c.fixed_theta = config.theta_mode == ThetaMode::Fixed ? config.fixed_theta
                                                              : Complex{std::sqrt(config.theta_variance), 0.0};
        const auto design = c.design();
        const ModelParams params{c.fixed_theta, c.sigma_u_sq(0.0), c.sigma_e_sq};
        return ratio_approximation_gap(build_mvu_filter(design), design, params, TrimPolicy{c.lambda}, c.trials,
                                       c.master_seed, par);
    };
    const auto low = at(0.0);
    const auto high = at(20.0);
    const double match = std::abs(high.mean_of_ratio / high.zeroth_ratio - 1.0);
    return {
        detail::make_check("ratio-gap", "trend", high.gap < low.gap, high.gap, low.gap,
                           "gap at 20 dB (measured) must be below the gap at 0 dB (threshold)"),
        detail::make_check("ratio-gap", "zeroth-ratio-match", match < 0.1, match, 0.1,
                           "relative gap between E[X/Y | no trim] and the zeroth-order ratio at 20 dB"),
    };
}

/// Runs the selected groups (all when `groups` is empty).
inline std::vector<CheckResult> run_checks(const SweepConfig& config, const std::vector<std::string>& groups,
                                           Parallelism par = Parallelism::from_env())
{
    config.validate();
    for (const auto& g : groups)
        if (std::find(check_groups().begin(), check_groups().end(), g) == check_groups().end())
            throw ConfigError("check", "unknown check group '" + g + "'");
    auto wanted = [&](std::string_view g) {
        return groups.empty() || std::find(groups.begin(), groups.end(), g) != groups.end();
    };
    std::vector<CheckResult> out;
    auto append = [&](std::vector<CheckResult> more) {
        for (auto& r : more)
            out.push_back(std::move(r));
    };
    const auto seed = config.master_seed;
    if (wanted("stationarity-mvu"))
        append(check_stationarity_mvu(seed));
    if (wanted("mmse-nonstationary"))
        append(check_mmse_nonstationary(config));
    if (wanted("closed-form"))
        append(check_closed_form(seed));
    if (wanted("gradient-collinearity"))
        append(check_gradient_collinearity(seed));
    if (wanted("ordering"))
        append(check_ordering(config, par));
    if (wanted("lambda-scaling"))
        append(check_lambda_scaling(config, par));
    if (wanted("ratio-gap"))
        append(check_ratio_gap(config, par));
    return out;
}

} // namespace estlab
