#include "nrsync/budget.hpp"

#include <cmath>
#include <string>

#include "nrsync/error.hpp"

namespace nrsync {

int scs_column(int scs_khz) {
    return Numerology::from_scs_khz(scs_khz).mu();
}

double BudgetComponent::value_at(int scs_khz) const {
    const int col = scs_column(scs_khz);
    if (const auto* scalar = std::get_if<double>(&value_ns)) {
        return *scalar;
    }
    return std::get<PerScsValue>(value_ns)[static_cast<std::size_t>(col)];
}

std::string_view to_string(AggregationPolicy p) {
    return p == AggregationPolicy::worst_case_sum ? "worst-case-sum" : "root-sum-square";
}

std::string_view to_string(TaeVariant v) {
    return v == TaeVariant::tx_diversity ? "tx-diversity" : "positioning";
}

std::string_view to_string(BudgetCategory c) {
    switch (c) {
        case BudgetCategory::reference_time_indication:
            return "reference-time-indication";
        case BudgetCategory::ta_related:
            return "ta-related";
        case BudgetCategory::other:
            return "other";
    }
    return "other";
}

std::optional<AggregationPolicy> parse_policy(std::string_view s) {
    if (s == "worst-case-sum") {
        return AggregationPolicy::worst_case_sum;
    }
    if (s == "root-sum-square") {
        return AggregationPolicy::root_sum_square;
    }
    return std::nullopt;
}

std::optional<TaeVariant> parse_tae_variant(std::string_view s) {
    if (s == "tx-diversity") {
        return TaeVariant::tx_diversity;
    }
    if (s == "positioning") {
        return TaeVariant::positioning;
    }
    return std::nullopt;
}

std::vector<BudgetComponent> builtin_components(const BudgetOptions& options) {
    using C = BudgetCategory;
    const bool tx_div = options.tae == TaeVariant::tx_diversity;
    const PerScsValue dl_frame_timing{390.0, 260.0, 227.0, 114.0};

    std::vector<BudgetComponent> out;
    out.push_back({std::string(component_id::tae_tx_diversity),
                   "Time alignment error (Tx diversity)", C::reference_time_indication, 65.0,
                   tx_div, "approximately 65 ns; inter-BS alignment for MIMO / Tx diversity",
                   "positioning TAE variant selected"});
    out.push_back({std::string(component_id::tae_positioning),
                   "Time alignment error (positioning)", C::reference_time_indication, 10.0,
                   !tx_div, "approximately 10 ns; inter-BS alignment for positioning",
                   "Tx diversity TAE variant selected"});
    out.push_back({std::string(component_id::rti_granularity), "Reference time granularity",
                   C::reference_time_indication, 250.0, true,
                   "SIB16 timestamp granularity", ""});
    out.push_back({std::string(component_id::dl_frame_timing), "UE DL frame timing estimation",
                   C::reference_time_indication, dl_frame_timing, true,
                   "DL detection error and device processing jitter", ""});
    out.push_back({std::string(component_id::ta_granularity), "TA granularity", C::ta_related,
                   PerScsValue{260.0, 130.0, 65.0, 32.5}, true,
                   "+/-T with T = t_mu / 2; tabulated values (260.42 ns exact at 15 kHz)", ""});
    out.push_back({std::string(component_id::ta_adjustment), "TA adjustment error", C::ta_related,
                   PerScsValue{130.0, 130.0, 65.0, 16.0}, true,
                   "systematic and dynamic UE adjustment error", ""});
    out.push_back({std::string(component_id::dl_ul_asymmetry),
                   "Asymmetric DL/UL propagation delay", C::ta_related, 0.0, true,
                   "negligible in TDD; set a value for FDD", ""});
    out.push_back({std::string(component_id::ul_tx_timing), "UE UL transmit timing error",
                   C::ta_related, dl_frame_timing, options.include_ul_tx_error,
                   "same magnitude as UE DL frame timing estimation",
                   "considered negated by DL frame timing error"});
    out.push_back({std::string(component_id::modem_host_interface),
                   "UE modem to host interface delay", C::other, 65.0, true,
                   "approximately 65 ns chipset interface delay", ""});
    return out;
}

BudgetReport aggregate(std::span<const BudgetComponent> components, int scs_khz,
                       AggregationPolicy policy, double target_ns) {
    scs_column(scs_khz);

    BudgetReport r{scs_khz, policy, {}, 0.0, target_ns, true, 0.0};
    double sum = 0.0;
    double sum_sq = 0.0;
    for (const auto& c : components) {
        const double v = c.value_at(scs_khz);
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw InvalidArgument("budget component '" + c.id + "' has a negative value");
        }
        BudgetLine line{c.id, c.name, 0.0, c.included, ""};
        if (c.included) {
            line.contribution_ns = v;
            sum += v;
            sum_sq += v * v;
        } else {
            line.reason = c.exclusion_reason.empty() ? "excluded" : c.exclusion_reason;
        }
        r.components.push_back(std::move(line));
    }
    r.total_ns = policy == AggregationPolicy::worst_case_sum ? sum : std::sqrt(sum_sq);
    r.pass = r.total_ns <= target_ns;
    r.margin_ns = target_ns - r.total_ns;
    return r;
}

BudgetReport substitute_ta_error(const BudgetInputs& inputs, const SimulatedTaError& sim) {
    if (sim.numerology.scs_khz() != inputs.scs_khz) {
        throw InvalidArgument("simulation ran at " + std::to_string(sim.numerology.scs_khz()) +
                              " kHz but the budget is for " + std::to_string(inputs.scs_khz) +
                              " kHz");
    }
    std::vector<BudgetComponent> components = inputs.components;
    bool replaced = false;
    for (auto& c : components) {
        if (c.id == component_id::ta_granularity) {
            c.value_ns = sim.p_e * 1e9;
            c.included = true;
            c.note = "simulated P_e (quantization plus TOA measurement error)";
            replaced = true;
        }
    }
    if (!replaced) {
        throw InvalidArgument("component list has no TA granularity row to replace");
    }
    BudgetReport r = aggregate(components, inputs.scs_khz, inputs.policy, inputs.target_ns);
    for (auto& line : r.components) {
        if (line.id == component_id::ta_granularity) {
            line.reason = "replaced by simulated P_e";
        }
    }
    return r;
}

BudgetReport substitute_ta_error(const BudgetInputs& inputs, const SimResult& sim) {
    return substitute_ta_error(inputs, simulated_ta_error(sim));
}

std::vector<TaeRequirement> tae_requirements() {
    return {
        {"tx-diversity", 65.0, "MIMO and Tx diversity, +/-65 ns", std::nullopt},
        {"inter-bs-carrier-aggregation", 260.0, "inter-BS carrier aggregation, < 260 ns",
         std::nullopt},
        {"comp-inter-site", 260.0,
         "coordinated multi-point; device offset must stay within [-0.5, 2] us",
         std::make_pair(-500.0, 2000.0)},
        {"tdd-frame-structure", 390.0, "UL/DL slot alignment in TDD, +/-390 ns", std::nullopt},
        {"positioning", 10.0, "3 m positioning accuracy, +/-10 ns", std::nullopt},
    };
}

}  // namespace nrsync
