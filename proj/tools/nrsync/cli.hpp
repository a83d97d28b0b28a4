#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "nrsync/budget.hpp"
#include "nrsync/rti_pipeline.hpp"
#include "nrsync/simulator.hpp"

namespace nrsync::cli {

enum class Subcommand { constants, sim, sweep, budget, pipeline };
enum class Format { csv, json, table };

// Documented in README; CI scripts assert on these.
namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int failure = 1;
inline constexpr int usage = 2;
inline constexpr int invalid_scenario = 3;
inline constexpr int target_missed = 4;
inline constexpr int io_error = 5;
}  // namespace exit_code

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Thrown by parse_args for --help; carries the rendered help text.
class HelpRequested : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ConstantsConfig {
    std::vector<int> scs_khz{15, 30, 60, 120};
};

struct SimConfig {
    Scenario scenario;
    std::vector<int> windows;  // sweep only
    std::size_t cdf_points = 0;  // 0 keeps one CSV row per distinct sample
    std::string summary_path;
    std::string signed_output_path;
};

struct BudgetConfig {
    int scs_khz = 15;
    AggregationPolicy policy = AggregationPolicy::worst_case_sum;
    TaeVariant tae = TaeVariant::tx_diversity;
    bool include_ul_tx_error = false;
    double target_ns = default_target_ns;
    std::string from_sim;
    bool fail_on_target_miss = false;
};

struct PipelineConfig {
    PipelineScenario scenario;
    DeviceClock clock;
    int epochs = 1000;
    double resync_period = 0.1;  // [s]
    std::optional<double> residual_budget_ns;
};

struct CliConfig {
    Subcommand subcommand = Subcommand::constants;
    Format format = Format::table;
    std::string output_path;  // empty writes to stdout
    unsigned workers = 0;     // execution detail; never echoed
    ConstantsConfig constants;
    SimConfig sim;
    BudgetConfig budget;
    PipelineConfig pipeline;
};

/// `args` excludes the program name. Throws UsageError naming the offending
/// flag, HelpRequested, InvalidScenario for a config that fails validation,
/// or IoError when a --config file cannot be read.
CliConfig parse_args(const std::vector<std::string>& args);

/// Every setting that influences the output, defaults included.
nlohmann::json resolved_config(const CliConfig& config);

/// Executes the subcommand; output goes to config.output_path or `out`.
int run(const CliConfig& config, std::ostream& out);

/// parse_args + run with errors mapped onto exit codes and reported on `err`.
int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nrsync::cli
