#pragma once

#include <chrono>
#include <ctime>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "estlab/checks.hpp"
#include "estlab/config_io.hpp"
#include "estlab/sim.hpp"

namespace estlab {

inline constexpr std::string_view kToolVersion = "0.1.0";

inline constexpr std::string_view kCsvHeader = "data_snr_db,estimator,variant,mean,std_error,trials";

inline void write_rows_csv(std::ostream& out, const std::vector<SweepRow>& rows)
{
    out << kCsvHeader << '\n';
    for (const auto& r : rows)
        out << format_double(r.data_snr_db) << ',' << to_string(r.estimator) << ',' << to_string(r.variant) << ','
            << format_double(r.mean) << ',' << format_double(r.std_error) << ',' << r.trials << '\n';
}

/// gnuplot script drawing the closed-form panel and the Monte-Carlo panel
/// from rows.csv sitting next to it.
inline std::string plot_script(const SweepConfig& config, std::string_view csv_name = "rows.csv")
{
    const std::string zeroth =
        config.theta_mode == ThetaMode::Fixed ? "zeroth-det" : "zeroth-rand";
    const std::string csv(csv_name);
    auto series = [&](std::string_view est, std::string_view variant) {
        return "'< grep \"," + std::string(est) + "," + std::string(variant) + ",\" " + csv + "'";
    };
    std::string s;
    s += "# gnuplot -p plot.gp\n";
    s += "set datafile separator ','\n";
    s += "set terminal pngcairo size 1200,480\n";
    s += "set output 'excess_mse.png'\n";
    s += "set multiplot layout 1,2\n";
    s += "set logscale y\n";
    s += "set grid\n";
    s += "set xlabel 'data SNR [dB]'\n";
    s += "set key top left\n";
    s += "set title 'zeroth-order excess MSE (training SNR " + format_double(config.training_snr_db) +
         " dB, N=" + std::to_string(config.n_train) + ")'\n";
    s += "plot " + series("mvu", zeroth) + " using 1:4 with linespoints title 'MVU', \\\n     " +
         series("mmse", zeroth) + " using 1:4 with linespoints title 'MMSE'\n";
    s += "set title 'trimmed Monte-Carlo excess MSE (lambda=" + format_double(config.lambda) + ")'\n";
    s += "plot " + series("mvu", "regularized-mc") + " using 1:4:5 with yerrorlines title 'MVU', \\\n     " +
         series("mmse", "regularized-mc") + " using 1:4:5 with yerrorlines title 'MMSE'\n";
    s += "unset multiplot\n";
    return s;
}

inline std::string utc_timestamp()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// Run provenance; config_echo is enough to reproduce rows.csv.
struct RunManifest {
    SweepConfig config_echo;
    std::string tool_version{kToolVersion};
    std::string started_at;
    std::string finished_at;
    std::size_t row_count = 0;
};

inline nlohmann::json to_json(const RunManifest& m)
{
    return {{"tool", "estlab"},
            {"tool_version", m.tool_version},
            {"master_seed", m.config_echo.master_seed},
            {"started_at", m.started_at},
            {"finished_at", m.finished_at},
            {"row_count", m.row_count},
            {"config_echo", config_to_json(m.config_echo)}};
}

inline nlohmann::json to_json(const std::vector<CheckResult>& results)
{
    nlohmann::json checks = nlohmann::json::array();
    bool passed = true;
    for (const auto& r : results) {
        passed = passed && r.status != CheckStatus::Fail;
        checks.push_back({{"group", r.group},
                          {"name", r.name},
                          {"status", std::string(to_string(r.status))},
                          {"measured", r.measured},
                          {"threshold", r.threshold},
                          {"detail", r.detail}});
    }
    return {{"passed", passed}, {"checks", checks}};
}

} // namespace estlab
