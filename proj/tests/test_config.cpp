#include "catch_amalgamated.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "estlab/config_io.hpp"
#include "estlab/report.hpp"

using namespace estlab;

namespace {

SweepConfig random_config(std::mt19937_64& gen)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> small(1, 6);
    auto awkward = [&](double scale) {
        // Values without short decimal forms stress the 17-digit round trip.
        return scale * std::ldexp(u(gen), small(gen) - 3) + std::nextafter(0.0, 1.0) * small(gen);
    };
    SweepConfig c;
    c.training_snr_db = awkward(20.0);
    c.data_snr_grid_db.clear();
    for (int i = 0, n = small(gen); i < n; ++i)
        c.data_snr_grid_db.push_back(awkward(30.0));
    c.n_train = static_cast<std::size_t>(small(gen));
    c.lambda = std::abs(awkward(1.0)) + 1e-3;
    c.trials = gen() % 10'000'000 + 1;
    c.master_seed = gen();
    c.theta_variance = std::abs(awkward(5.0)) + 0.01;
    c.estimators = gen() % 2 ? std::vector{FilterKind::Mmse} : std::vector{FilterKind::Mvu, FilterKind::Mmse};
    c.sigma_e_sq = gen() % 5 == 0 ? 0.0 : std::abs(awkward(3.0));
    c.theta_mode = gen() % 2 ? ThetaMode::Fixed : ThetaMode::Random;
    c.fixed_theta = {awkward(2.0) + 3.0, awkward(2.0)};
    if (gen() % 2) {
        c.training_direction.resize(c.n_train);
        for (auto& z : c.training_direction)
            z = {awkward(1.0), awkward(1.0) + 2.0};
    }
    return c;
}

} // namespace

TEST_CASE("flat config round trip on random configs")
{
    std::mt19937_64 gen(2718);
    for (int i = 0; i < 500; ++i) {
        const auto c = random_config(gen);
        REQUIRE_NOTHROW(c.validate());
        const auto text = serialize_config(c);
        CHECK(parse_config(text) == c);
        CHECK(serialize_config(parse_config(text)) == text);
    }
}

TEST_CASE("json config round trip on random configs")
{
    std::mt19937_64 gen(3141);
    for (int i = 0; i < 200; ++i) {
        const auto c = random_config(gen);
        CHECK(config_from_json(config_to_json(c)) == c);
        CHECK(config_from_json(nlohmann::json::parse(config_to_json(c).dump())) == c);
    }
}

TEST_CASE("defaults survive a round trip")
{
    CHECK(parse_config(serialize_config(SweepConfig{})) == SweepConfig{});
    CHECK(parse_config("") == SweepConfig{});
}

TEST_CASE("flat format details")
{
    const auto c = parse_config(R"(
# a comment
training_snr_db = 20   # trailing comment
data_snr_grid_db = 0:5:20
n_train=3
lambda = 0.05
estimators = mmse
theta_mode = fixed
theta = 0, 2
training_direction = 1,0; 0,1; 1,1
)");
    CHECK(c.training_snr_db == 20.0);
    CHECK(c.data_snr_grid_db == std::vector<double>{0, 5, 10, 15, 20});
    CHECK(c.n_train == 3);
    CHECK(c.lambda == 0.05);
    CHECK(c.estimators == std::vector{FilterKind::Mmse});
    CHECK(c.theta_mode == ThetaMode::Fixed);
    CHECK(c.fixed_theta == Complex{0, 2});
    REQUIRE(c.training_direction.size() == 3);
    CHECK(c.training_direction[2] == Complex{1, 1});
    CHECK(c.trials == SweepConfig{}.trials);

    CHECK(parse_config("data_snr_grid_db = -5:2.5:25").data_snr_grid_db == default_data_snr_grid());
    CHECK(parse_config("data_snr_grid_db = 1, 2 ,3").data_snr_grid_db == std::vector<double>{1, 2, 3});
}

TEST_CASE("config errors name the field")
{
    auto field_of = [](std::string_view text) {
        try {
            parse_config(text).validate();
        } catch (const ConfigError& e) {
            return e.field();
        }
        return std::string("<none>");
    };
    CHECK(field_of("lambda = abc") == "lambda");
    CHECK(field_of("lambda = -1") == "lambda");
    CHECK(field_of("trials = -3") == "trials");
    CHECK(field_of("trials = 0") == "trials");
    CHECK(field_of("bogus = 1") == "bogus");
    CHECK(field_of("estimators = zf") == "estimators");
    CHECK(field_of("data_snr_grid_db = 5:1:0") == "data_snr_grid_db");
    CHECK(field_of("data_snr_grid_db = 1:2") == "data_snr_grid_db");
    CHECK(field_of("theta_mode = sometimes") == "theta_mode");
    CHECK(field_of("theta = 1") == "theta");
    CHECK(field_of("theta_mode = fixed\ntheta = 0,0") == "theta");
    CHECK(field_of("n_train = 2\ntraining_direction = 1,0") == "training_direction");
    CHECK(field_of("sigma_e_sq = -0.5") == "sigma_e_sq");
    CHECK(field_of("just words") == "just words");
    CHECK(field_of("lambda = 0.2") == "<none>");

    SweepConfig c;
    CHECK_THROWS_AS(apply_override(c, "lambda"), ConfigError);
    apply_override(c, " lambda = 0.25 ");
    CHECK(c.lambda == 0.25);
}

TEST_CASE("config files: flat text and manifest json")
{
    const auto dir = std::filesystem::temp_directory_path() / "estlab_test_config";
    std::filesystem::create_directories(dir);
    SweepConfig c;
    c.trials = 1234;
    c.master_seed = 99;
    c.data_snr_grid_db = {0.1, 0.2};

    {
        std::ofstream(dir / "a.cfg") << serialize_config(c);
    }
    CHECK(load_config_file((dir / "a.cfg").string()) == c);

    RunManifest m;
    m.config_echo = c;
    m.row_count = 8;
    {
        std::ofstream(dir / "manifest.json") << to_json(m).dump(2);
    }
    CHECK(load_config_file((dir / "manifest.json").string()) == c);
    {
        std::ofstream(dir / "bad.json") << "{ not json";
    }
    CHECK_THROWS_AS(load_config_file((dir / "bad.json").string()), ConfigError);
    CHECK_THROWS_AS(load_config_file((dir / "missing.cfg").string()), ConfigError);
    {
        std::ofstream(dir / "wrong.json") << R"({"config_echo": {"lambda": "big"}})";
    }
    CHECK_THROWS_AS(load_config_file((dir / "wrong.json").string()), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("number formatting keeps 17 significant digits")
{
    CHECK(format_double(0.1) == "0.10000000000000001");
    CHECK(format_double(-5) == "-5");
    CHECK(format_double(2.5) == "2.5");
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("csv schema")
{
    std::ostringstream out;
    write_rows_csv(out, {{2.5, FilterKind::Mmse, MetricVariant::RegularizedMC, 0.1, 0.01, 1000}});
    CHECK(out.str() ==
          "data_snr_db,estimator,variant,mean,std_error,trials\n"
          "2.5,mmse,regularized-mc,0.10000000000000001,0.01,1000\n");
}

TEST_CASE("plot script and reports")
{
    const auto script = plot_script(SweepConfig{});
    CHECK(script.find("rows.csv") != std::string::npos);
    CHECK(script.find("zeroth-rand") != std::string::npos);
    CHECK(script.find("regularized-mc") != std::string::npos);
    SweepConfig fixed;
    fixed.theta_mode = ThetaMode::Fixed;
    CHECK(plot_script(fixed).find("zeroth-det") != std::string::npos);

    RunManifest m;
    m.row_count = 4;
    m.started_at = m.finished_at = utc_timestamp();
    const auto j = to_json(m);
    for (const char* key : {"tool_version", "master_seed", "started_at", "finished_at", "row_count", "config_echo"})
        CHECK(j.contains(key));
    CHECK(j["started_at"].get<std::string>().size() == 20);

    const auto v = to_json(std::vector<CheckResult>{{"g", "a", CheckStatus::Pass, 1, 2, ""},
                                                    {"g", "b", CheckStatus::NotApplicable, 0, 0, ""}});
    CHECK(v["passed"] == true);
    CHECK(v["checks"][1]["status"] == "not-applicable");
    const auto w = to_json(std::vector<CheckResult>{{"g", "a", CheckStatus::Fail, 1, 2, ""}});
    CHECK(w["passed"] == false);
}
