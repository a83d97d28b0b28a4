#include "nrsync/rti_pipeline.hpp"

#include <cmath>

#include "nrsync/error.hpp"

namespace nrsync {

RtiMessage broadcast_rti(double true_time, double granularity) {
    if (!(granularity > 0.0) || !std::isfinite(granularity)) {
        throw InvalidArgument("RTI granularity must be positive");
    }
    return RtiMessage{std::floor(true_time / granularity) * granularity, granularity};
}

DeviceClock device_correct(const DeviceClock& clock, const RtiMessage& msg, double toa_estimate,
                           double dl_timing_error, double true_arrival) {
    if (!(toa_estimate >= 0.0)) {
        throw InvalidArgument("TOA estimate must be non-negative");
    }
    DeviceClock out = clock;
    const double local_time = msg.timestamp + toa_estimate + dl_timing_error;
    out.offset = local_time - true_arrival;
    out.last_sync = true_arrival;
    return out;
}

ResyncInterval max_resync_interval(double drift_ppm, double residual_budget_ns) {
    if (!(drift_ppm >= 0.0) || !std::isfinite(drift_ppm)) {
        throw InvalidArgument("drift must be a finite non-negative ppm value");
    }
    if (!(residual_budget_ns >= 0.0)) {
        throw InvalidArgument("residual budget must be non-negative");
    }
    if (drift_ppm == 0.0) {
        return ResyncInterval{true, 0.0};
    }
    // ns / ppm is microseconds-per-second scaled by 1e3; dividing the ratio by
    // 1e3 keeps round inputs exact (10 ppm, 100 ns -> 0.01 s).
    return ResyncInterval{false, residual_budget_ns / drift_ppm / 1000.0};
}

void validate(const PipelineScenario& s) {
    Scenario probe;
    probe.numerology = s.numerology;
    probe.toa_prior = s.toa_prior;
    probe.error_model = s.error_model;
    probe.avg_window = s.avg_window;
    probe.trials = 1;
    validate(probe);
    if (!(s.rti_granularity >= 0.0) || !std::isfinite(s.rti_granularity)) {
        throw InvalidScenario("RTI granularity must be >= 0");
    }
    if (!(s.dl_timing_sigma >= 0.0) || !std::isfinite(s.dl_timing_sigma)) {
        throw InvalidScenario("DL timing sigma must be >= 0");
    }
    if (!std::isfinite(s.dl_ul_asymmetry) || !std::isfinite(s.host_interface_delay)) {
        throw InvalidScenario("asymmetry and host interface delay must be finite");
    }
}

SyncTrace simulate_sync_epochs(DeviceClock clock, const PipelineScenario& s, int epochs,
                               double resync_period) {
    validate(s);
    if (epochs < 1) {
        throw InvalidScenario("epochs must be >= 1");
    }
    if (!(resync_period >= 0.0) || !std::isfinite(resync_period)) {
        throw InvalidScenario("resync period must be >= 0");
    }

    const TaGrid grid = TaGrid::for_numerology(s.numerology);
    SyncTrace trace;
    trace.epochs.reserve(static_cast<std::size_t>(epochs));

    for (int e = 0; e < epochs; ++e) {
        RandomStream rng(s.seed, static_cast<std::uint64_t>(e));

        clock.advance(resync_period);
        const double pre = clock.offset;

        double emission = (e + 1) * resync_period;
        RtiMessage msg{emission, 0.0};
        if (s.rti_granularity > 0.0) {
            emission += rng.uniform() * s.rti_granularity;
            msg = broadcast_rti(emission, s.rti_granularity);
        }

        const double tau = draw_true_toa(s.toa_prior, grid, rng);
        const TaEstimate est = estimate_toa_from_ta(tau, s.error_model, s.avg_window, grid, rng);
        const double dl_error =
            (s.dl_timing_sigma > 0.0 ? s.dl_timing_sigma * rng.standard_normal() : 0.0) +
            s.host_interface_delay;

        clock = device_correct(clock, msg, est.toa + s.dl_ul_asymmetry, dl_error, emission + tau);
        trace.epochs.push_back(EpochRecord{e, pre, clock.offset});
    }
    trace.final_clock = clock;
    return trace;
}

}  // namespace nrsync
