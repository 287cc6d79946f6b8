#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "estlab/sim.hpp"

namespace estlab {

/// Shortest text that reads back as the same double, capped at 17 significant
/// digits ("%.17g" semantics, locale independent).
inline std::string format_double(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim_ws(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        parts.push_back(trim_ws(s.substr(start, pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return parts;
}

inline double parse_double(std::string_view field, std::string_view text)
{
    text = trim_ws(text);
    if (!text.empty() && text.front() == '+')
        text.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw ConfigError(std::string(field), "expected a number, got '" + std::string(text) + "'");
    return v;
}

inline std::uint64_t parse_uint(std::string_view field, std::string_view text)
{
    text = trim_ws(text);
    std::uint64_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
        throw ConfigError(std::string(field), "expected a non-negative integer, got '" + std::string(text) + "'");
    return v;
}

/// "a,b,c" or the range form "start:step:stop" (inclusive, within half a step).
inline std::vector<double> parse_grid(std::string_view field, std::string_view text)
{
    text = trim_ws(text);
    std::vector<double> out;
    if (text.empty())
        return out;
    if (text.find(':') != std::string_view::npos) {
        const auto parts = split(text, ':');
        if (parts.size() != 3)
            throw ConfigError(std::string(field), "range must be start:step:stop");
        const double start = parse_double(field, parts[0]);
        const double step = parse_double(field, parts[1]);
        const double stop = parse_double(field, parts[2]);
        if (!(step > 0.0) || stop < start)
            throw ConfigError(std::string(field), "range needs step > 0 and stop >= start");
        for (int i = 0;; ++i) {
            const double v = start + step * i;
            if (v > stop + 0.5 * step)
                break;
            out.push_back(v);
            if (i > 100000)
                throw ConfigError(std::string(field), "range is too long");
        }
        return out;
    }
    for (auto p : split(text, ','))
        out.push_back(parse_double(field, p));
    return out;
}

inline FilterKind parse_filter_kind(std::string_view field, std::string_view text)
{
    if (text == "mvu")
        return FilterKind::Mvu;
    if (text == "mmse")
        return FilterKind::Mmse;
    throw ConfigError(std::string(field), "unknown estimator '" + std::string(text) + "' (expected mvu or mmse)");
}

inline Complex parse_complex_pair(std::string_view field, std::string_view text)
{
    const auto parts = split(text, ',');
    if (parts.size() != 2)
        throw ConfigError(std::string(field), "expected 're,im', got '" + std::string(text) + "'");
    return {parse_double(field, parts[0]), parse_double(field, parts[1])};
}

} // namespace detail

/// Keys accepted by the flat config format, in serialization order.
inline const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys{
        "training_snr_db", "data_snr_grid_db", "n_train",    "lambda", "trials", "master_seed",
        "theta_variance",  "estimators",       "sigma_e_sq", "theta_mode", "theta", "training_direction"};
    return keys;
}

/// Applies one `key = value` setting.
inline void apply_setting(SweepConfig& config, std::string_view key, std::string_view value)
{
    using namespace detail;
    value = trim_ws(value);
    if (key == "training_snr_db") {
        config.training_snr_db = parse_double(key, value);
    } else if (key == "data_snr_grid_db") {
        config.data_snr_grid_db = parse_grid(key, value);
    } else if (key == "n_train") {
        config.n_train = static_cast<std::size_t>(parse_uint(key, value));
    } else if (key == "lambda") {
        config.lambda = parse_double(key, value);
    } else if (key == "trials") {
        config.trials = parse_uint(key, value);
    } else if (key == "master_seed") {
        config.master_seed = parse_uint(key, value);
    } else if (key == "theta_variance") {
        config.theta_variance = parse_double(key, value);
    } else if (key == "estimators") {
        config.estimators.clear();
        if (!value.empty())
            for (auto p : split(value, ','))
                config.estimators.push_back(parse_filter_kind(key, p));
    } else if (key == "sigma_e_sq") {
        config.sigma_e_sq = parse_double(key, value);
    } else if (key == "theta_mode") {
        if (value == "random")
            config.theta_mode = ThetaMode::Random;
        else if (value == "fixed")
            config.theta_mode = ThetaMode::Fixed;
        else
            throw ConfigError("theta_mode", "expected random or fixed, got '" + std::string(value) + "'");
    } else if (key == "theta") {
        config.fixed_theta = parse_complex_pair(key, value);
    } else if (key == "training_direction") {
        config.training_direction.clear();
        if (!value.empty())
            for (auto p : split(value, ';'))
                config.training_direction.push_back(parse_complex_pair(key, p));
    } else {
        throw ConfigError(std::string(key), "unknown config key");
    }
}

/// `key=value` form of a command-line override.
inline void apply_override(SweepConfig& config, std::string_view assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos)
        throw ConfigError(std::string(assignment), "override must look like key=value");
    apply_setting(config, detail::trim_ws(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

/// Flat text format: one `key = value` per line, `#` starts a comment.
/// Keys not mentioned keep their defaults.
inline SweepConfig parse_config(std::istream& in, SweepConfig base = {})
{
    std::string line;
    while (std::getline(in, line)) {
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos)
            view = view.substr(0, hash);
        view = detail::trim_ws(view);
        if (view.empty())
            continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(std::string(view), "line must look like key = value");
        apply_setting(base, detail::trim_ws(view.substr(0, eq)), view.substr(eq + 1));
    }
    return base;
}

inline SweepConfig parse_config(std::string_view text, SweepConfig base = {})
{
    std::istringstream in{std::string(text)};
    return parse_config(in, std::move(base));
}

inline std::string serialize_config(const SweepConfig& c)
{
    auto join = [](const auto& items, auto&& fmt, std::string_view sep) {
        std::string s;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (i > 0)
                s += sep;
            s += fmt(items[i]);
        }
        return s;
    };
    auto pair = [](Complex z) { return format_double(z.real()) + "," + format_double(z.imag()); };

    std::ostringstream out;
    out << "training_snr_db = " << format_double(c.training_snr_db) << "\n";
    out << "data_snr_grid_db = " << join(c.data_snr_grid_db, format_double, ",") << "\n";
    out << "n_train = " << c.n_train << "\n";
    out << "lambda = " << format_double(c.lambda) << "\n";
    out << "trials = " << c.trials << "\n";
    out << "master_seed = " << c.master_seed << "\n";
    out << "theta_variance = " << format_double(c.theta_variance) << "\n";
    out << "estimators = " << join(c.estimators, [](FilterKind k) { return std::string(to_string(k)); }, ",")
        << "\n";
    out << "sigma_e_sq = " << format_double(c.sigma_e_sq) << "\n";
    out << "theta_mode = " << to_string(c.theta_mode) << "\n";
    out << "theta = " << pair(c.fixed_theta) << "\n";
    out << "training_direction = " << join(c.training_direction, pair, ";") << "\n";
    return out.str();
}

// --------------------------------------------------------------------------
// JSON echo (manifest.json)
// --------------------------------------------------------------------------

inline nlohmann::json config_to_json(const SweepConfig& c)
{
    nlohmann::json j;
    j["training_snr_db"] = c.training_snr_db;
    j["data_snr_grid_db"] = c.data_snr_grid_db;
    j["n_train"] = c.n_train;
    j["lambda"] = c.lambda;
    j["trials"] = c.trials;
    j["master_seed"] = c.master_seed;
    j["theta_variance"] = c.theta_variance;
    j["estimators"] = nlohmann::json::array();
    for (auto k : c.estimators)
        j["estimators"].push_back(std::string(to_string(k)));
    j["sigma_e_sq"] = c.sigma_e_sq;
    j["theta_mode"] = std::string(to_string(c.theta_mode));
    j["theta"] = {c.fixed_theta.real(), c.fixed_theta.imag()};
    j["training_direction"] = nlohmann::json::array();
    for (const auto& z : c.training_direction)
        j["training_direction"].push_back({z.real(), z.imag()});
    return j;
}

inline SweepConfig config_from_json(const nlohmann::json& j)
{
    SweepConfig c;
    auto get = [&](const char* key, auto& into) {
        if (!j.contains(key))
            return;
        try {
            j.at(key).get_to(into);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(key, e.what());
        }
    };
    get("training_snr_db", c.training_snr_db);
    get("data_snr_grid_db", c.data_snr_grid_db);
    get("n_train", c.n_train);
    get("lambda", c.lambda);
    get("trials", c.trials);
    get("master_seed", c.master_seed);
    get("theta_variance", c.theta_variance);
    get("sigma_e_sq", c.sigma_e_sq);
    if (j.contains("estimators")) {
        std::vector<std::string> names;
        get("estimators", names);
        c.estimators.clear();
        for (const auto& n : names)
            c.estimators.push_back(detail::parse_filter_kind("estimators", n));
    }
    if (j.contains("theta_mode")) {
        std::string mode;
        get("theta_mode", mode);
        apply_setting(c, "theta_mode", mode);
    }
    if (j.contains("theta")) {
        std::vector<double> pair;
        get("theta", pair);
        if (pair.size() != 2)
            throw ConfigError("theta", "expected [re, im]");
        c.fixed_theta = {pair[0], pair[1]};
    }
    if (j.contains("training_direction")) {
        std::vector<std::vector<double>> pairs;
        get("training_direction", pairs);
        c.training_direction.clear();
        for (const auto& p : pairs) {
            if (p.size() != 2)
                throw ConfigError("training_direction", "expected [[re, im], ...]");
            c.training_direction.emplace_back(p[0], p[1]);
        }
    }
    return c;
}

/// Reads a flat config file, or a manifest.json (its config_echo) when the
/// file parses as a JSON object.
inline SweepConfig load_config_file(const std::string& path, SweepConfig base = {})
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config", "cannot open '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();
    if (const auto first = text.find_first_not_of(" \t\r\n"); first != std::string::npos && text[first] == '{') {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config", std::string("invalid JSON: ") + e.what());
        }
        return config_from_json(j.contains("config_echo") ? j.at("config_echo") : j);
    }
    return parse_config(std::string_view(text), std::move(base));
}

} // namespace estlab
