#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "nrsync/scenario_io.hpp"
#include "nrsync/simulator.hpp"

namespace nrsync {

enum class BudgetCategory { reference_time_indication, ta_related, other };

/// Per-SCS values are ordered [15, 30, 60, 120] kHz.
using PerScsValue = std::array<double, 4>;

struct BudgetComponent {
    std::string id;
    std::string name;
    BudgetCategory category;
    std::variant<double, PerScsValue> value_ns;
    bool included;
    std::string note;
    std::string exclusion_reason;  // shown when not included

    double value_at(int scs_khz) const;
};

enum class AggregationPolicy { worst_case_sum, root_sum_square };
enum class TaeVariant { tx_diversity, positioning };

std::string_view to_string(AggregationPolicy p);
std::string_view to_string(TaeVariant v);
std::string_view to_string(BudgetCategory c);
std::optional<AggregationPolicy> parse_policy(std::string_view s);
std::optional<TaeVariant> parse_tae_variant(std::string_view s);

namespace component_id {
inline constexpr std::string_view tae_tx_diversity = "tae-tx-diversity";
inline constexpr std::string_view tae_positioning = "tae-positioning";
inline constexpr std::string_view rti_granularity = "rti-granularity";
inline constexpr std::string_view dl_frame_timing = "dl-frame-timing";
inline constexpr std::string_view ta_granularity = "ta-granularity";
inline constexpr std::string_view ta_adjustment = "ta-adjustment";
inline constexpr std::string_view dl_ul_asymmetry = "dl-ul-asymmetry";
inline constexpr std::string_view ul_tx_timing = "ul-tx-timing";
inline constexpr std::string_view modem_host_interface = "modem-host-interface";
}  // namespace component_id

inline constexpr double default_target_ns = 1000.0;

struct BudgetOptions {
    TaeVariant tae = TaeVariant::tx_diversity;
    bool include_ul_tx_error = false;
};

/// The tabulated device-synchronization error sources with their default
/// inclusion. Both TAE variants are listed; exactly one is included.
std::vector<BudgetComponent> builtin_components(const BudgetOptions& options = {});

/// Scale index for [15, 30, 60, 120] kHz; throws UnsupportedNumerology otherwise.
int scs_column(int scs_khz);

struct BudgetLine {
    std::string id;
    std::string name;
    double contribution_ns;  // 0 when excluded
    bool included;
    std::string reason;  // why it is excluded, or what replaced it
};

struct BudgetReport {
    int scs_khz;
    AggregationPolicy policy;
    std::vector<BudgetLine> components;
    double total_ns;
    double target_ns;
    bool pass;
    double margin_ns;
};

BudgetReport aggregate(std::span<const BudgetComponent> components, int scs_khz,
                       AggregationPolicy policy, double target_ns = default_target_ns);

struct BudgetInputs {
    std::vector<BudgetComponent> components = builtin_components();
    int scs_khz = 15;
    AggregationPolicy policy = AggregationPolicy::worst_case_sum;
    double target_ns = default_target_ns;
};

/// Replaces the TA-granularity row with a simulated P_e, which already covers
/// quantization plus measurement error, and re-aggregates. Throws
/// InvalidArgument when the simulation ran at a different SCS.
BudgetReport substitute_ta_error(const BudgetInputs& inputs, const SimulatedTaError& sim);
BudgetReport substitute_ta_error(const BudgetInputs& inputs, const SimResult& sim);

struct TaeRequirement {
    std::string service;
    double requirement_ns;
    std::string note;
    /// Allowed device time offset, when the service defines one [ns].
    std::optional<std::pair<double, double>> device_offset_window_ns;
};

/// Inter-BS time alignment error requirements per service.
std::vector<TaeRequirement> tae_requirements();

}  // namespace nrsync
