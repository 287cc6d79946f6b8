#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "estlab/checks.hpp"
#include "estlab/config_io.hpp"
#include "estlab/report.hpp"
#include "estlab/sim.hpp"

namespace estlab::cli {

/// Exit codes shared by all subcommands.
enum ExitCode : int {
    kOk = 0,
    kChecksFailed = 1,
    kIoError = 1,
    kBadConfig = 2,
    kDomainError = 3,
};

struct CommonOptions {
    std::string config_path;
    std::string out_dir = "estlab-out";
    std::string preset;
    std::uint64_t seed = 0;
    std::uint64_t trials = 0;
    bool seed_given = false;
    bool trials_given = false;
    std::vector<std::string> overrides;
};

/// Defaults < preset < config file < --set overrides < --seed/--trials.
inline SweepConfig resolve_config(const CommonOptions& opts)
{
    SweepConfig config;
    if (!opts.preset.empty()) {
        if (opts.preset == "paper-fig2" || opts.preset == "paper-fig1")
            config = SweepConfig::reference();
        else
            throw ConfigError("preset", "unknown preset '" + opts.preset + "'");
    }
    if (!opts.config_path.empty())
        config = load_config_file(opts.config_path, config);
    for (const auto& o : opts.overrides)
        apply_override(config, o);
    if (opts.seed_given)
        config.master_seed = opts.seed;
    if (opts.trials_given)
        config.trials = opts.trials;
    config.validate();
    return config;
}

namespace detail {

template <class Fn>
int guarded(std::ostream& err, Fn&& fn)
{
    try {
        return fn();
    } catch (const ConfigError& e) {
        err << "estlab: invalid config: " << e.what() << '\n';
        return kBadConfig;
    } catch (const Error& e) {
        err << "estlab: " << to_string(e.kind()) << ": " << e.what() << '\n';
        return kDomainError;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "estlab: " << e.what() << '\n';
        return kIoError;
    }
}

inline std::filesystem::path prepare_out_dir(const std::string& dir)
{
    std::filesystem::path p(dir);
    std::filesystem::create_directories(p);
    return p;
}

inline void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out)
        throw std::filesystem::filesystem_error("cannot write", path, std::make_error_code(std::errc::io_error));
}

} // namespace detail

/// Writes rows.csv, manifest.json and plot.gp into the output directory.
inline int cmd_sweep(const CommonOptions& opts, std::ostream& out, std::ostream& err)
{
    return detail::guarded(err, [&] {
        const auto config = resolve_config(opts);
        RunManifest manifest;
        manifest.config_echo = config;
        manifest.started_at = utc_timestamp();
        const auto rows = run_sweep(config, Parallelism::from_env());
        manifest.finished_at = utc_timestamp();
        manifest.row_count = rows.size();

        const auto dir = detail::prepare_out_dir(opts.out_dir);
        std::ostringstream csv;
        write_rows_csv(csv, rows);
        detail::write_file(dir / "rows.csv", csv.str());
        detail::write_file(dir / "manifest.json", to_json(manifest).dump(2) + "\n");
        detail::write_file(dir / "plot.gp", plot_script(config));
        out << "wrote " << rows.size() << " rows to " << (dir / "rows.csv").string() << '\n';
        return static_cast<int>(kOk);
    });
}

/// Runs the check suite and writes verify.json; exit 0 iff nothing failed.
inline int cmd_verify(const CommonOptions& opts, const std::vector<std::string>& groups, std::ostream& out,
                      std::ostream& err)
{
    return detail::guarded(err, [&] {
        const auto config = resolve_config(opts);
        const auto results = run_checks(config, groups, Parallelism::from_env());
        const auto dir = detail::prepare_out_dir(opts.out_dir);
        const auto json = to_json(results);
        detail::write_file(dir / "verify.json", json.dump(2) + "\n");

        std::vector<std::string> failures;
        for (const auto& r : results) {
            out << std::left << std::setw(15) << to_string(r.status) << r.group << '/' << r.name
                << "  measured=" << format_double(r.measured) << "  (" << r.detail << ")\n";
            if (r.status == CheckStatus::Fail)
                failures.push_back(r.group + "/" + r.name);
        }
        if (!failures.empty()) {
            err << "estlab: " << failures.size() << " check(s) failed:";
            for (const auto& f : failures)
                err << ' ' << f;
            err << '\n';
            return static_cast<int>(kChecksFailed);
        }
        return static_cast<int>(kOk);
    });
}

/// Batch-mean coefficient of variation of the excess MSE with and without
/// trimming. theta is the configured fixed value, or sqrt(theta_variance) in
/// random mode; the data SNR is the first grid point.
inline int cmd_tail(const CommonOptions& opts, std::uint64_t batches, std::ostream& out, std::ostream& err)
{
    return detail::guarded(err, [&] {
        if (batches < 10)
            throw ConfigError("batches", "at least 10 batches are required, got " + std::to_string(batches));
        CommonOptions local = opts;
        if (!local.trials_given) {
            local.trials = 100'000;
            local.trials_given = true;
        }
        const auto config = resolve_config(local);
        const Complex theta = config.theta_mode == ThetaMode::Fixed
                                  ? config.fixed_theta
                                  : Complex{std::sqrt(config.theta_variance), 0.0};
        SweepConfig fixed = config;
        fixed.theta_mode = ThetaMode::Fixed;
        fixed.fixed_theta = theta;
        const auto design = fixed.design();
        const auto filter = build_mvu_filter(design);
        const ModelParams params{theta, fixed.sigma_u_sq(fixed.data_snr_grid_db.front()), fixed.sigma_e_sq};
        const auto par = Parallelism::from_env();
        const double untrimmed =
            tail_diagnostic(filter, design, params, config.trials, batches, config.master_seed, std::nullopt, par);
        const double trimmed = tail_diagnostic(filter, design, params, config.trials, batches, config.master_seed,
                                               TrimPolicy{config.lambda}, par);

        out << "untrimmed_cov " << format_double(untrimmed) << '\n';
        out << "trimmed_cov " << format_double(trimmed) << '\n';
        const nlohmann::json report{{"batches", batches},
                                    {"trials_per_batch", config.trials},
                                    {"lambda", config.lambda},
                                    {"untrimmed_cov", untrimmed},
                                    {"trimmed_cov", trimmed},
                                    {"config_echo", config_to_json(config)}};
        const auto dir = detail::prepare_out_dir(opts.out_dir);
        detail::write_file(dir / "tail.json", report.dump(2) + "\n");
        return static_cast<int>(kOk);
    });
}

inline void add_common_options(CLI::App& sub, CommonOptions& opts)
{
    sub.add_option("--config", opts.config_path, "flat key=value config file or a manifest.json");
    sub.add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    sub.add_option("--preset", opts.preset, "named configuration (paper-fig2)");
    sub.add_option("--set", opts.overrides, "override a config key, e.g. --set lambda=0.05")->take_all();
    sub.add_option_function<std::uint64_t>(
        "--seed", [&opts](const std::uint64_t& v) { opts.seed = v, opts.seed_given = true; }, "master seed");
    sub.add_option_function<std::uint64_t>(
        "--trials", [&opts](const std::uint64_t& v) { opts.trials = v, opts.trials_given = true; },
        "Monte-Carlo trials (per grid point; per batch for tail)");
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"estlab: MVU versus MMSE system estimators under excess-MSE metrics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(kToolVersion));

    CommonOptions opts;
    std::vector<std::string> groups;
    std::uint64_t batches = 20;

    auto* sweep = app.add_subcommand("sweep", "data-SNR sweep: rows.csv, manifest.json, plot.gp");
    add_common_options(*sweep, opts);
    auto* verify = app.add_subcommand("verify", "run the numerical check suite, write verify.json");
    add_common_options(*verify, opts);
    verify->add_option("--check", groups, "restrict to check groups")->take_all();
    auto* tail = app.add_subcommand("tail", "heavy-tail diagnostic, trimmed vs untrimmed");
    add_common_options(*tail, opts);
    tail->add_option("--batches", batches, "number of batches (>= 10)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : static_cast<int>(kBadConfig);
    }

    if (sweep->parsed())
        return cmd_sweep(opts, out, err);
    if (verify->parsed())
        return cmd_verify(opts, groups, out, err);
    return cmd_tail(opts, batches, out, err);
}

} // namespace estlab::cli
