#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nrsync/cli.hpp"
#include "nrsync/output.hpp"

using namespace nrsync;
using namespace nrsync::cli;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = main_entry(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("nrsync_cli_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> data_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line[0] != '#') {
            lines.push_back(line);
        }
    }
    return lines;
}

}  // namespace

TEST_CASE("format_double round trips") {
    for (double v : {0.0, 1.0, -2.5, 260.4166666666667, 1e-300, 5e-324, 0.1 + 0.2}) {
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
    CHECK(format_double(260.0) == "260");
}

TEST_CASE("parse_args maps sim flags onto a scenario") {
    const CliConfig c =
        parse_args({"sim", "--scs", "30", "--sigma-rel", "0.5", "--trials", "100000", "--seed", "7"});
    CHECK(c.subcommand == Subcommand::sim);
    CHECK(c.format == Format::csv);
    const Scenario& s = c.sim.scenario;
    CHECK(s.numerology.mu() == 1);
    CHECK(s.trials == 100000);
    CHECK(s.seed == 7);
    const auto* m = std::get_if<LosGaussianModel>(&s.error_model);
    REQUIRE(m != nullptr);
    CHECK(m->sigma == doctest::Approx(0.5 * timing_constants(s.numerology).slot_width));
}

TEST_CASE("parse_args for other subcommands") {
    const CliConfig sw = parse_args({"sweep", "--avg", "1,4,16", "--model", "nlos", "--p-detect", "0.5",
                                     "--bias-ns", "300", "--sigma-blocked-ns", "100"});
    CHECK(sw.sim.windows == std::vector<int>{1, 4, 16});
    const auto* nl = std::get_if<NlosModel>(&sw.sim.scenario.error_model);
    REQUIRE(nl != nullptr);
    CHECK(nl->p_detect == 0.5);
    CHECK(nl->bias_bp == doctest::Approx(300e-9));
    CHECK(nl->sigma_blocked == doctest::Approx(100e-9));

    const CliConfig b = parse_args({"budget", "--scs", "60", "--policy", "root-sum-square",
                                    "--tae", "positioning", "--include-ul-tx-error"});
    CHECK(b.budget.scs_khz == 60);
    CHECK(b.budget.policy == AggregationPolicy::root_sum_square);
    CHECK(b.budget.tae == TaeVariant::positioning);
    CHECK(b.budget.include_ul_tx_error);

    const CliConfig p = parse_args({"pipeline", "--drift-ppm", "2.5", "--resync-ms", "50",
                                    "--granularity-ns", "0", "--epochs", "12"});
    CHECK(p.pipeline.clock.drift_ppm == 2.5);
    CHECK(p.pipeline.resync_period == doctest::Approx(0.05));
    CHECK(p.pipeline.scenario.rti_granularity == 0.0);
    CHECK(p.pipeline.epochs == 12);
}

TEST_CASE("usage errors exit 2 with a hint") {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {"sim", "--scs", "25"},
             {"sim", "--no-such-flag"},
             {"frobnicate"},
             {"sweep", "--avg", "1,x"},
             {"budget", "--policy", "median"},
         }) {
        const Outcome o = invoke(args);
        CHECK(o.code == exit_code::usage);
        CHECK_FALSE(o.err.empty());
    }
    const Outcome o = invoke({"sim", "--no-such-flag"});
    CHECK(o.err.find("--no-such-flag") != std::string::npos);
    CHECK(o.err.find("--help") != std::string::npos);
}

TEST_CASE("out-of-range flag values are usage errors") {
    CHECK(invoke({"sim", "--trials", "0"}).code == exit_code::usage);
    CHECK(invoke({"sim", "--sigma-rel", "-1"}).code == exit_code::usage);
    CHECK(invoke({"sim", "--confidence", "1.5"}).code == exit_code::usage);
}

TEST_CASE("invalid scenario files exit 3") {
    const fs::path dir = scratch_dir("invalid");
    for (const char* body : {R"({"trials": 0})", R"({"confidence": 1.5})",
                             R"({"error_model": {"kind": "los", "sigma_s": -1e-9}})",
                             R"({"avg_window": 0})"}) {
        const fs::path p = dir / "s.json";
        std::ofstream(p) << body;
        CHECK(invoke({"sim", "--config", p.string()}).code == exit_code::invalid_scenario);
    }
    fs::remove_all(dir);
}

TEST_CASE("help exits 0") {
    const Outcome o = invoke({"sim", "--help"});
    CHECK(o.code == exit_code::ok);
    CHECK(o.out.find("--sigma-rel") != std::string::npos);
}

TEST_CASE("constants json carries exact values") {
    const Outcome o = invoke({"constants", "--format", "json"});
    REQUIRE(o.code == exit_code::ok);
    const auto j = nlohmann::json::parse(o.out);
    CHECK(j.at("version") == NRSYNC_VERSION);
    REQUIRE(j.at("constants").size() == 4);
    for (const auto& row : j.at("constants")) {
        const auto n = Numerology::from_scs_khz(row.at("scs_khz").get<int>());
        const auto tc = timing_constants(n);
        CHECK(row.at("slot_width_s").get<double>() == tc.slot_width);
        CHECK(row.at("t_mu_s").get<double>() == tc.t_mu);
        CHECK(row.at("t_c_s").get<double>() == tc.t_c);
    }
}

TEST_CASE("budget output and target-miss exit code") {
    const Outcome j = invoke({"budget", "--scs", "15", "--format", "json"});
    REQUIRE(j.code == exit_code::ok);
    const auto report = nlohmann::json::parse(j.out).at("report");
    CHECK(report.at("total_ns").get<double>() == 1160.0);
    CHECK_FALSE(report.at("pass").get<bool>());

    CHECK(invoke({"budget", "--scs", "15", "--fail-on-target-miss"}).code == exit_code::target_missed);
    CHECK(invoke({"budget", "--scs", "30", "--fail-on-target-miss"}).code == exit_code::ok);
    CHECK(invoke({"budget", "--scs", "15", "--target-ns", "1200", "--fail-on-target-miss"}).code ==
          exit_code::ok);
}

TEST_CASE("budget --from-sim substitutes the simulated error") {
    const fs::path dir = scratch_dir("from_sim");
    const fs::path summary = dir / "summary.json";
    REQUIRE(invoke({"sim", "--trials", "20000", "--sigma-rel", "0", "--summary", summary.string(),
                    "-o", (dir / "cdf.csv").string()})
                .code == exit_code::ok);
    const auto s = nlohmann::json::parse(slurp(summary)).at("summary");
    const double pe = s.at("p_e_ns").get<double>();
    CHECK(pe <= 130.21);

    const Outcome o = invoke({"budget", "--scs", "15", "--format", "json", "--from-sim", summary.string()});
    REQUIRE(o.code == exit_code::ok);
    CHECK(nlohmann::json::parse(o.out).at("report").at("total_ns").get<double>() ==
          doctest::Approx(900.0 + pe));

    CHECK(invoke({"budget", "--scs", "30", "--from-sim", summary.string()}).code ==
          exit_code::invalid_scenario);
    fs::remove_all(dir);
}

TEST_CASE("--config merges with flags winning") {
    const fs::path dir = scratch_dir("config");
    const fs::path cfg = dir / "scenario.json";
    std::ofstream(cfg) << R"({"scs_khz": 60, "trials": 5000, "seed": 11,
        "error_model": {"kind": "los", "sigma_rel": 0.25}})";
    const CliConfig c = parse_args({"sim", "--config", cfg.string(), "--seed", "99"});
    CHECK(c.sim.scenario.numerology.mu() == 2);
    CHECK(c.sim.scenario.trials == 5000);
    CHECK(c.sim.scenario.seed == 99);

    std::ofstream(dir / "bad.json") << R"({"trials": 10, "colour": "blue"})";
    CHECK(invoke({"sim", "--config", (dir / "bad.json").string()}).code == exit_code::invalid_scenario);
    CHECK(invoke({"sim", "--config", (dir / "missing.json").string()}).code == exit_code::io_error);

    std::ofstream(dir / "budget.json") << R"({"scs": 120, "target_ns": 500})";
    const CliConfig b = parse_args({"budget", "--config", (dir / "budget.json").string()});
    CHECK(b.budget.scs_khz == 120);
    CHECK(b.budget.target_ns == 500.0);
    fs::remove_all(dir);
}

TEST_CASE("outputs are byte-identical across runs and worker counts") {
    const fs::path dir = scratch_dir("determinism");
    const std::vector<std::vector<std::string>> cases{
        {"sim", "--trials", "30000", "--seed", "5"},
        {"sweep", "--trials", "20000", "--avg", "1,2,4"},
        {"pipeline", "--epochs", "200", "--seed", "3"},
    };
    int idx = 0;
    for (const auto& base : cases) {
        std::vector<std::string> contents;
        for (const char* workers : {"1", "3", "1"}) {
            auto args = base;
            const fs::path out = dir / ("out" + std::to_string(idx++) + ".txt");
            args.insert(args.end(), {"--workers", workers, "-o", out.string()});
            REQUIRE(invoke(args).code == exit_code::ok);
            contents.push_back(slurp(out));
        }
        CHECK(contents[0] == contents[1]);
        CHECK(contents[0] == contents[2]);
        CHECK(contents[0].find("# nrsync ") == 0);
    }
    fs::remove_all(dir);
}

TEST_CASE("sim CSV parses back into a valid CDF") {
    const Outcome o = invoke({"sim", "--trials", "5000", "--sigma-rel", "1"});
    REQUIRE(o.code == exit_code::ok);
    const auto lines = data_lines(o.out);
    REQUIRE(lines.size() > 2);
    CHECK(lines[0] == "error_ns,cdf");
    double prev_x = -1.0;
    double prev_f = 0.0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto comma = lines[i].find(',');
        const double x = std::stod(lines[i].substr(0, comma));
        const double f = std::stod(lines[i].substr(comma + 1));
        CHECK(x > prev_x);
        CHECK(f > prev_f);
        prev_x = x;
        prev_f = f;
    }
    CHECK(prev_f == 1.0);
}

TEST_CASE("signed errors output") {
    const fs::path dir = scratch_dir("signed");
    const fs::path p = dir / "signed.csv";
    REQUIRE(invoke({"sim", "--trials", "1000", "--signed-output", p.string(), "-o",
                    (dir / "cdf.csv").string()})
                .code == exit_code::ok);
    const auto lines = data_lines(slurp(p));
    CHECK(lines.size() == 1001);
    fs::remove_all(dir);
}

TEST_CASE("unwritable output exits 5") {
    const Outcome o = invoke({"constants", "-o", "/nonexistent_dir/for/sure/out.txt"});
    CHECK(o.code == exit_code::io_error);
    CHECK(o.err.find("/nonexistent_dir") != std::string::npos);
}

TEST_CASE("NRSYNC_OUTPUT_DIR anchors relative output paths") {
    const fs::path dir = scratch_dir("envdir");
    ::setenv("NRSYNC_OUTPUT_DIR", dir.c_str(), 1);
    CHECK(resolve_output_path("a/b.csv") == dir / "a/b.csv");
    CHECK(resolve_output_path("/abs/x.csv") == fs::path("/abs/x.csv"));
    REQUIRE(invoke({"constants", "-o", "c.txt"}).code == exit_code::ok);
    CHECK(fs::exists(dir / "c.txt"));
    ::unsetenv("NRSYNC_OUTPUT_DIR");
    fs::remove_all(dir);
}

TEST_CASE("pipeline summary reports the resync interval") {
    const Outcome o = invoke({"pipeline", "--epochs", "10", "--drift-ppm", "10", "--residual-ns", "100",
                              "--format", "json"});
    REQUIRE(o.code == exit_code::ok);
    const auto j = nlohmann::json::parse(o.out);
    CHECK(j.at("summary").at("max_resync_interval_s").get<double>() == 0.01);
    CHECK(j.at("trace").size() == 10);
}
