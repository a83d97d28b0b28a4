#include "nrsync/nr_timing.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nrsync/error.hpp"

namespace nrsync {

namespace {

constexpr double max_subcarrier_spacing_hz = 480e3;
constexpr double dft_size = 4096.0;

}  // namespace

Numerology Numerology::from_mu(int mu) {
    if (mu < 0 || mu > max_supported_mu) {
        throw UnsupportedNumerology("unsupported numerology mu=" + std::to_string(mu) +
                                    " (supported: 0..3)");
    }
    return Numerology(mu);
}

Numerology Numerology::from_scs_khz(int scs_khz) {
    for (int mu = 0; mu <= max_supported_mu; ++mu) {
        if (scs_khz == (15 << mu)) {
            return Numerology(mu);
        }
    }
    throw UnsupportedNumerology("unsupported subcarrier spacing " + std::to_string(scs_khz) +
                                " kHz (supported: 15, 30, 60, 120)");
}

TimingConstants timing_constants(Numerology n) {
    TimingConstants c{};
    c.t_c = 1.0 / (max_subcarrier_spacing_hz * dft_size);
    // Scaling by powers of two is exact, so slot_width halves exactly per mu step.
    c.t_mu = std::ldexp(16.0 * 64.0 * c.t_c, -n.mu());
    c.slot_width = c.t_mu / 2.0;
    return c;
}

TaCommandAbsolute::TaCommandAbsolute(int index) : index_(index) {
    if (index < 0 || index > max_index) {
        throw InvalidArgument("absolute TA index " + std::to_string(index) +
                              " outside [0, 3846]");
    }
}

TaCommandRelative::TaCommandRelative(int index) : index_(index) {
    if (index < 0 || index > max_index) {
        throw InvalidArgument("relative TA index " + std::to_string(index) + " outside [0, 63]");
    }
}

TaGrid TaGrid::for_numerology(Numerology n) {
    return TaGrid{timing_constants(n).slot_width, TaCommandAbsolute::max_index};
}

GridQuantization quantize_on_grid(double toa, const TaGrid& grid) {
    const double w = grid.slot_width;
    const double top = static_cast<double>(grid.max_index);

    GridQuantization q{0, Saturation::none};
    if (toa < 0.0) {
        q.saturation = Saturation::low;
        return q;
    }
    if (toa > grid.center(grid.max_index) + w / 2.0) {
        q.index = grid.max_index;
        q.saturation = Saturation::high;
        return q;
    }

    const double x = std::clamp(std::ceil(toa / w - 0.5), 0.0, top);
    int best = static_cast<int>(x);

    // The division above can land one bin off near a boundary; settle it by
    // comparing distances to the neighbouring centers directly.
    double best_dist = std::abs(toa - grid.center(best));
    for (int cand : {best - 1, best + 1}) {
        if (cand < 0 || cand > grid.max_index) {
            continue;
        }
        const double d = std::abs(toa - grid.center(cand));
        if (d < best_dist || (d == best_dist && cand < best)) {
            best = cand;
            best_dist = d;
        }
    }
    q.index = best;
    return q;
}

TaQuantization quantize_toa(double toa, Numerology n) {
    const GridQuantization q = quantize_on_grid(toa, TaGrid::for_numerology(n));
    return TaQuantization{TaCommandAbsolute(q.index), q.saturation};
}

double ta_to_toa_estimate(TaCommandAbsolute ta, Numerology n) {
    return TaGrid::for_numerology(n).center(ta.index());
}

AdvanceUpdate apply_relative_ta(double current_advance, TaCommandRelative cmd, Numerology n) {
    if (!(current_advance >= 0.0)) {
        throw InvalidArgument("current timing advance must be non-negative");
    }
    const int steps = cmd.index() - TaCommandRelative::neutral_index;
    if (steps == 0) {
        return AdvanceUpdate{current_advance, false};
    }
    const double updated = current_advance + steps * timing_constants(n).t_mu;
    if (updated < 0.0) {
        return AdvanceUpdate{0.0, true};
    }
    return AdvanceUpdate{updated, false};
}

QuantizationBound max_quantization_error(Numerology n) {
    const double w = timing_constants(n).slot_width;
    return QuantizationBound{w / 2.0, w};
}

}  // namespace nrsync
