#pragma once

#include <json.hpp>

#include "nrsync/simulator.hpp"

namespace nrsync {

/// Scenario <-> JSON. Times are in seconds (keys ending in `_s`) so a
/// resolved scenario written out and read back reproduces every double.
/// `sigma_rel` may replace `sigma_s` on input and is resolved against the
/// slot width of the scenario's numerology.
///
///   { "scs_khz": 15,
///     "toa_prior": {"kind": "uniform-in-slot", "center_index": 100},
///     "error_model": {"kind": "los", "sigma_s": 1.3e-07},
///     "trials": 1000000, "avg_window": 1, "seed": 42, "confidence": 0.999 }
nlohmann::json scenario_to_json(const Scenario& s);

/// Overlays the keys present in `j` onto `base`. Unknown keys, wrong types
/// and out-of-range values raise InvalidScenario.
Scenario scenario_from_json(const nlohmann::json& j, Scenario base = {});

/// Machine-readable run summary; times in nanoseconds.
nlohmann::json summary_to_json(const SimResult& r);

/// The part of a summary the budget needs.
struct SimulatedTaError {
    Numerology numerology;
    double p_e;  // [s]
};

SimulatedTaError simulated_ta_error(const SimResult& r);
/// Reads `scs_khz` and `p_e_ns` from a summary document.
SimulatedTaError simulated_ta_error_from_summary(const nlohmann::json& summary);

}  // namespace nrsync
