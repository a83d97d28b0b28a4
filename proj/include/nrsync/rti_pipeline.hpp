#pragma once

#include <cstdint>
#include <vector>

#include "nrsync/channel.hpp"
#include "nrsync/simulator.hpp"

namespace nrsync {

/// Device clock relative to the reference. Between corrections the offset
/// grows linearly with the constant frequency error.
struct DeviceClock {
    double offset = 0.0;     // device time - reference time [s]
    double drift_ppm = 0.0;  // frequency error [ppm]
    double last_sync = 0.0;  // reference time of the last correction [s]

    void advance(double dt) { offset += drift_ppm * 1e-6 * dt; }
};

/// Reference-time indication as broadcast by the BS. The timestamp names the
/// instant the frame's reference point leaves the BS antenna.
struct RtiMessage {
    double timestamp;    // [s]
    double granularity;  // [s]; 0 means the timestamp is not quantized
};

inline constexpr double default_rti_granularity = 250e-9;

/// Timestamp floored onto the granularity grid, so the error lies in
/// [0, granularity). Throws InvalidArgument unless granularity > 0.
RtiMessage broadcast_rti(double true_time, double granularity);

/// The device sets its time to timestamp + toa_estimate + dl_timing_error at
/// the instant the frame arrives (reference time true_arrival). Throws
/// InvalidArgument for a negative TOA estimate.
DeviceClock device_correct(const DeviceClock& clock, const RtiMessage& msg, double toa_estimate,
                           double dl_timing_error, double true_arrival);

struct ResyncInterval {
    bool unbounded;  // zero drift never exhausts the budget
    double seconds;
};

/// Longest interval before drift consumes residual_budget_ns.
ResyncInterval max_resync_interval(double drift_ppm, double residual_budget_ns);

struct PipelineScenario {
    Numerology numerology = Numerology::from_mu(0);
    ToaPrior toa_prior = UniformInSlot{};  // redrawn every epoch
    ErrorModel error_model = LosGaussianModel{};
    int avg_window = 1;
    double rti_granularity = default_rti_granularity;  // 0 disables quantization
    double dl_timing_sigma = 0.0;                      // Gaussian DL frame timing error [s]
    double dl_ul_asymmetry = 0.0;                      // added to the TOA estimate [s]
    double host_interface_delay = 0.0;                 // constant device-side term [s]
    std::uint64_t seed = 42;
};

void validate(const PipelineScenario& s);

struct EpochRecord {
    int epoch;
    double pre_offset;   // just before the correction [s]
    double post_offset;  // just after [s]
};

struct SyncTrace {
    std::vector<EpochRecord> epochs;
    DeviceClock final_clock;
};

/// Per epoch: drift for resync_period, then one RTI correction with freshly
/// sampled granularity, TA and DL timing errors from RandomStream(seed, epoch).
SyncTrace simulate_sync_epochs(DeviceClock clock, const PipelineScenario& s, int epochs,
                               double resync_period);

}  // namespace nrsync
