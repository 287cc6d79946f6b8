#include "catch_amalgamated.hpp"

#include <cmath>
#include <random>

#include "estlab/verify.hpp"

using namespace estlab;
using Catch::Approx;

namespace {

const Parallelism kPar{4};

double max_gap(const CVector& a, const CVector& b)
{
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        worst = std::max(worst, std::abs(a[k] - b[k]));
    return worst;
}

} // namespace

TEST_CASE("finite differences of polynomial test metrics")
{
    const CVector f{Complex{0.7, -1.2}, Complex{2.0, 0.5}, Complex{-0.3, 0.1}};
    const double step = default_fd_step(f);
    CHECK(step == Approx(1e-6 * std::sqrt(norm_sq(f))));
    CHECK(default_fd_step(CVector{0.1}) == 1e-6);

    SECTION("squared norm has gradient f")
    {
        const auto g = fd_gradient([](std::span<const Complex> x) { return norm_sq(x); }, f, step);
        CHECK(max_gap(g, f) < 10 * step * step * std::sqrt(norm_sq(f)) + 1e-9 * std::sqrt(norm_sq(f)));
    }
    SECTION("quartic sum has gradient 2 |f_k|^2 f_k")
    {
        auto quartic = [](std::span<const Complex> x) {
            double s = 0.0;
            for (auto z : x)
                s += std::norm(z) * std::norm(z);
            return s;
        };
        CVector expected(f.size());
        for (std::size_t k = 0; k < f.size(); ++k)
            expected[k] = 2.0 * std::norm(f[k]) * f[k];
        const auto g = fd_gradient(quartic, f, step);
        CHECK(max_gap(g, expected) < 1e-7 * std::sqrt(norm_sq(expected)));
    }
    SECTION("real part of a^H f has gradient a / 2")
    {
        const CVector a{Complex{1.0, 2.0}, Complex{-3.0, 0.5}, Complex{0.0, -1.0}};
        const auto g =
            fd_gradient([&](std::span<const Complex> x) { return inner(a, x).real(); }, f, step);
        CVector half(a.size());
        for (std::size_t k = 0; k < a.size(); ++k)
            half[k] = 0.5 * a[k];
        CHECK(max_gap(g, half) < 1e-8);
    }
    SECTION("|phi|^2 with phi = f^H u has gradient conj(phi) u")
    {
        const CVector u{Complex{0.2, 0.9}, 1.0, Complex{0.0, -2.0}};
        const Complex p = inner(f, u);
        const auto g = fd_gradient([&](std::span<const Complex> x) { return std::norm(inner(x, u)); }, f, step);
        CVector expected(u.size());
        for (std::size_t k = 0; k < u.size(); ++k)
            expected[k] = std::conj(p) * u[k];
        CHECK(max_gap(g, expected) < 1e-7 * std::sqrt(norm_sq(expected)));
    }
}

TEST_CASE("finite-difference failures")
{
    const CVector f{1.0};
    CHECK_THROWS_AS(fd_gradient([](std::span<const Complex>) { return 0.0; }, f, 0.0), Error);
    try {
        fd_gradient([](std::span<const Complex> x) { return x[0].real() > 1.0 ? NAN : 0.0; }, f, 1e-6);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EvaluationFailure);
    }
    try {
        fd_gradient([](std::span<const Complex> x) -> double {
            if (x[0].imag() > 0)
                throw std::domain_error("outside");
            return 0.0;
        }, f, 1e-6);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::EvaluationFailure);
    }
}

TEST_CASE("gradients at the MVU and MMSE filters")
{
    const auto d = TrainingDesign::constant(2, 2.0);
    const ModelParams p{Complex{0.6, 0.8}, 1.0, 1.0};
    const auto mvu = build_mvu_filter(d);
    const auto det = zeroth_det_metric_fn(d, p);
    CHECK(relative_gradient_norm(fd_gradient(det, mvu.f, default_fd_step(mvu.f)), mvu.f, det(mvu.f)) < 1e-6);

    const PriorMoments prior{1.0, 2.0};
    const auto rnd = zeroth_rand_metric_fn(d, prior, 1.0, 1.0);
    CHECK(relative_gradient_norm(fd_gradient(rnd, mvu.f, default_fd_step(mvu.f)), mvu.f, rnd(mvu.f)) < 1e-6);
    const auto mmse = build_mmse_filter(d, prior, 1.0);
    CHECK(relative_gradient_norm(fd_gradient(rnd, mmse.f, default_fd_step(mmse.f)), mmse.f, rnd(mmse.f)) > 1e-3);
}

TEST_CASE("compare_gradients")
{
    const CVector a{Complex{1.0, 2.0}, Complex{-0.5, 0.0}};
    CVector b = a, c = a;
    for (auto& z : b)
        z *= 3.0;
    for (auto& z : c)
        z *= -0.5;
    const auto same = compare_gradients(a, b);
    CHECK(same.cosine_similarity == Approx(1.0));
    CHECK(same.max_abs_entry_gap_after_scale < 1e-14);
    CHECK(same.fd_norm == Approx(3 * same.analytic_norm));
    CHECK(compare_gradients(a, c).cosine_similarity == Approx(-1.0));
    const auto zero = compare_gradients(a, CVector{0.0, 0.0});
    CHECK(zero.cosine_similarity == 0.0);
    CHECK(zero.max_abs_entry_gap_after_scale == 0.0);
}

TEST_CASE("trim probability")
{
    const auto d = TrainingDesign::constant(2, 2.0);
    const auto f = build_mvu_filter(d);
    const std::vector<double> lambdas{0.025, 0.05, 0.1};

    SECTION("noiseless with a fixed theta never trims")
    {
        const auto pts = trim_probability_scaling(f, d, FixedTheta{Complex{0.5, 0.2}}, 0.0, lambdas, 10000, 1, kPar);
        for (const auto& p : pts)
            CHECK(p.probability == 0.0);
        CHECK(std::isnan(loglog_slope(pts)));
    }
    SECTION("random theta follows 1 - exp(-lambda^2 / v) with v = m2 |phi|^2 + sigma_e^2 ||f||^2")
    {
        const std::uint64_t trials = 2'000'000;
        const auto pts = trim_probability_scaling(f, d, GaussianTheta{1.0}, 1.0, lambdas, trials, 2, kPar);
        const double v = 1.0 + norm_sq(f.f);
        double lo = INFINITY, hi = 0.0;
        for (const auto& p : pts) {
            const double exact = 1 - std::exp(-p.lambda * p.lambda / v);
            const double se = std::sqrt(exact * (1 - exact) / trials);
            CHECK(std::abs(p.probability - exact) < 4 * se);
            CHECK(p.probability_over_lambda_sq == Approx(p.probability / (p.lambda * p.lambda)));
            lo = std::min(lo, p.probability_over_lambda_sq);
            hi = std::max(hi, p.probability_over_lambda_sq);
        }
        CHECK(hi / lo < 1.5);
        CHECK(pts[2].probability / pts[1].probability == Approx(4.0).epsilon(0.25));
        CHECK(pts[1].probability / pts[0].probability == Approx(4.0).epsilon(0.25));
    }
    SECTION("slope of exact quadratic points is 2")
    {
        std::vector<TrimProbabilityPoint> pts;
        for (double l : lambdas)
            pts.push_back({l, 3 * l * l, 3.0});
        CHECK(loglog_slope(pts) == Approx(2.0));
        CHECK(std::isnan(loglog_slope(std::span(pts).first(1))));
    }
    SECTION("argument checks")
    {
        CHECK_THROWS_AS(trim_probability_scaling(f, d, GaussianTheta{1.0}, 1.0, std::vector<double>{0.0}, 10, 1),
                        Error);
        CHECK_THROWS_AS(trim_probability_scaling(f, d, GaussianTheta{1.0}, 1.0, lambdas, 0, 1), Error);
    }
}

TEST_CASE("ratio approximation gap")
{
    auto at = [](double training_db, double sigma_e_sq, std::uint64_t trials) {
        const double energy = 2.0 * std::pow(10.0, training_db / 10.0) * (sigma_e_sq > 0 ? sigma_e_sq : 1.0);
        const auto d = TrainingDesign::constant(2, energy);
        return ratio_approximation_gap(build_mvu_filter(d), d, {1.0, 1.0, sigma_e_sq}, TrimPolicy{0.1}, trials, 3,
                                       kPar);
    };
    const auto low = at(0.0, 1.0, 1'000'000);
    const auto high = at(20.0, 1.0, 1'000'000);
    CHECK(high.gap < low.gap);
    CHECK(std::isfinite(high.gap));
    CHECK(std::abs(high.mean_of_ratio / high.zeroth_ratio - 1) < 0.1);
    CHECK(low.kept_fraction > 0.9);
    CHECK(low.kept_fraction < 1.0);
    CHECK(high.kept_fraction == 1.0);

    // Nearly noiseless training: X and Y are almost deterministic.
    const auto quiet = ratio_approximation_gap(build_mvu_filter(TrainingDesign::constant(2, 2.0)),
                                               TrainingDesign::constant(2, 2.0), {1.0, 1.0, 1e-10}, TrimPolicy{0.1},
                                               100'000, 3, kPar);
    CHECK(quiet.gap < 1e-12);
}

TEST_CASE("regularized versus zeroth-order report")
{
    SweepConfig c;
    c.trials = 100'000;
    c.data_snr_grid_db = {-5.0, 5.0, 15.0, 25.0};

    SECTION("reference settings: MC and closed form order the estimators alike")
    {
        const auto reports = regularized_vs_zeroth_report(c, kPar);
        REQUIRE(reports.size() == 4);
        for (const auto& r : reports) {
            CHECK(r.sign_agrees);
            CHECK(r.zeroth_mvu < r.zeroth_mmse);
            CHECK(r.trim_probability >= 0.0);
            CHECK(r.trim_probability <= 1.0);
            CHECK(r.prob_over_lambda_sq == Approx(r.trim_probability / 0.01));
            CHECK(r.f_dependence_gap == Approx(std::abs((r.mc_mvu - r.mc_mmse) - (r.zeroth_mvu - r.zeroth_mmse))));
            CHECK(r.mc_diff_se > 0.0);
        }
    }
    SECTION("noiseless training with a fixed theta")
    {
        c.sigma_e_sq = 0.0;
        c.theta_mode = ThetaMode::Fixed;
        for (const auto& r : regularized_vs_zeroth_report(c, kPar)) {
            CHECK(r.mc_mvu == 0.0);
            CHECK(r.mc_mmse == 0.0);
            CHECK(r.zeroth_mvu == 0.0);
            CHECK(r.zeroth_mmse == 0.0);
            CHECK(r.f_dependence_gap == 0.0);
        }
    }
    SECTION("20 dB training, fixed theta: MC is the closed form shifted on a log axis")
    {
        c.training_snr_db = 20.0;
        c.theta_mode = ThetaMode::Fixed;
        c.estimators = {FilterKind::Mvu};
        const auto reports = regularized_vs_zeroth_report(c, kPar);
        for (std::size_t k = 0; k < 2; ++k) {
            std::vector<double> mc, zo;
            for (const auto& r : reports) {
                mc.push_back(k == 0 ? r.mc_mvu : r.mc_mmse);
                zo.push_back(k == 0 ? r.zeroth_mvu : r.zeroth_mmse);
            }
            for (double res : vertical_translation_residuals(mc, zo))
                CHECK(res < 0.1);
        }
    }
}

TEST_CASE("vertical translation residuals")
{
    const std::vector<double> zo{1.0, 2.0, 4.0};
    const std::vector<double> mc{1.5, 3.0, 6.0};
    for (double r : vertical_translation_residuals(mc, zo))
        CHECK(r == Approx(0.0).margin(1e-15));
    const std::vector<double> bent{1.5, 3.0, 9.0};
    const auto r = vertical_translation_residuals(bent, zo);
    CHECK(r[2] > 0.0);
    CHECK(r[0] == Approx(std::abs(1.5 / (1.0 * std::cbrt(1.5 * 1.5 * 2.25)) - 1.0)));
    CHECK_THROWS_AS(vertical_translation_residuals(mc, std::vector<double>{1.0}), Error);
    CHECK_THROWS_AS(vertical_translation_residuals(std::vector<double>{}, std::vector<double>{}), Error);
    CHECK_THROWS_AS(vertical_translation_residuals(std::vector<double>{0.0}, std::vector<double>{1.0}), Error);
}
