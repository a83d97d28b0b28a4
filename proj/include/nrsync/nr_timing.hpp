#pragma once

#include <cstdint>

namespace nrsync {

/// NR numerology: subcarrier spacing is 15 kHz * 2^mu.
class Numerology {
public:
    static constexpr int max_supported_mu = 3;

    /// Throws UnsupportedNumerology for mu outside [0, 3].
    static Numerology from_mu(int mu);
    /// Throws UnsupportedNumerology unless scs_khz is one of 15/30/60/120.
    static Numerology from_scs_khz(int scs_khz);

    int mu() const { return mu_; }
    int scs_khz() const { return 15 << mu_; }

    friend bool operator==(Numerology, Numerology) = default;

private:
    explicit Numerology(int mu) : mu_(mu) {}
    int mu_;
};

struct TimingConstants {
    double t_c;         // basic time unit [s]
    double t_mu;        // TA alignment unit [s]
    double slot_width;  // one-way TOA quantization slot [s], t_mu / 2
};

TimingConstants timing_constants(Numerology n);

/// Absolute TA index issued in the random access response.
class TaCommandAbsolute {
public:
    static constexpr int max_index = 3846;

    explicit TaCommandAbsolute(int index);
    int index() const { return index_; }

    friend bool operator==(TaCommandAbsolute, TaCommandAbsolute) = default;

private:
    int index_;
};

/// Relative TA index used in connected mode; 31 means "no change".
class TaCommandRelative {
public:
    static constexpr int max_index = 63;
    static constexpr int neutral_index = 31;

    explicit TaCommandRelative(int index);
    int index() const { return index_; }

private:
    int index_;
};

enum class Saturation : std::uint8_t { none, low, high };

/// A uniform grid of TOA bin centers 0, w, 2w, ..., max_index * w.
///
/// The full NR grid has max_index 3846; smaller grids are used by tests that
/// enumerate every outcome exhaustively.
struct TaGrid {
    double slot_width;
    int max_index = TaCommandAbsolute::max_index;

    static TaGrid for_numerology(Numerology n);

    double center(int index) const { return static_cast<double>(index) * slot_width; }
};

struct GridQuantization {
    int index;
    Saturation saturation;
};

/// Nearest bin center, ties toward the lower index, clamped to [0, max_index].
/// Negative input is flagged low; input past the upper edge of the last bin
/// is flagged high.
GridQuantization quantize_on_grid(double toa, const TaGrid& grid);

struct TaQuantization {
    TaCommandAbsolute command;
    Saturation saturation;
};

/// Maps a measured one-way TOA to the absolute TA command the BS would issue.
/// Bin i covers i * slot_width +/- slot_width / 2.
TaQuantization quantize_toa(double toa, Numerology n);

/// Center of the command's bin in one-way TOA space.
double ta_to_toa_estimate(TaCommandAbsolute ta, Numerology n);

struct AdvanceUpdate {
    double advance;  // [s], never negative
    bool saturated_low;
};

/// Connected-mode adjustment: current + (index - 31) * t_mu, clamped at 0.
AdvanceUpdate apply_relative_ta(double current_advance, TaCommandRelative cmd, Numerology n);

struct QuantizationBound {
    double half_slot;  // worst-case center-estimator error, noiseless
    double full_slot;  // the +/-T bound tabulated as "TA granularity"
};

QuantizationBound max_quantization_error(Numerology n);

}  // namespace nrsync
