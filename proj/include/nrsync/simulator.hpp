#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "nrsync/channel.hpp"
#include "nrsync/nr_timing.hpp"

namespace nrsync {

/// True TOA uniform over the slot center_index * T +/- T/2.
struct UniformInSlot {
    int center_index = 100;
};

/// True TOA uniform over [lo, hi] seconds.
struct UniformInRange {
    double lo = 0.0;
    double hi = 0.0;
};

struct FixedToa {
    double toa = 0.0;
};

/// True TOA drawn uniformly from `points` equally spaced values in [lo, hi].
struct GridToa {
    double lo = 0.0;
    double hi = 0.0;
    int points = 1;
};

using ToaPrior = std::variant<UniformInSlot, UniformInRange, FixedToa, GridToa>;

inline constexpr std::int64_t max_retained_trials = 10'000'000;

struct Scenario {
    Numerology numerology = Numerology::from_mu(0);
    ToaPrior toa_prior = UniformInSlot{};
    ErrorModel error_model = LosGaussianModel{};
    std::int64_t trials = 1'000'000;
    int avg_window = 1;  // K measurements averaged per trial
    std::uint64_t seed = 42;
    double confidence = 0.999;
    /// Constant subtracted from every TOA estimate (NLOS bias compensation).
    double bias_correction = 0.0;
    /// Largest TA index of the quantizer grid; 3846 is the NR value.
    int ta_max_index = TaCommandAbsolute::max_index;

    TaGrid grid() const;
};

/// Throws InvalidScenario describing the first violated constraint.
void validate(const Scenario& s);

/// Right-continuous empirical CDF F(x) = #{s <= x} / n.
class EmpiricalCdf {
public:
    struct Step {
        double value;
        double cdf;
    };

    /// Throws InvalidArgument for an empty sample set.
    explicit EmpiricalCdf(std::vector<double> samples);

    std::size_t size() const { return sorted_.size(); }
    std::span<const double> sorted_samples() const { return sorted_; }
    double min() const { return sorted_.front(); }
    double max() const { return sorted_.back(); }

    double operator()(double x) const;
    /// sorted[ceil(q * n) - 1]; throws InvalidArgument unless 0 < q <= 1.
    double quantile(double q) const;
    /// One entry per distinct sample value, with F evaluated there.
    std::vector<Step> steps() const;

private:
    std::vector<double> sorted_;
};

EmpiricalCdf empirical_cdf(std::vector<double> samples);
double quantile(const EmpiricalCdf& cdf, double q);

struct SimResult {
    Numerology numerology;
    EmpiricalCdf cdf;  // absolute errors |estimate - true TOA| [s]
    double confidence;
    double p_e;  // quantile(confidence)
    double mean_abs_error;
    std::map<double, double> quantiles;
    /// Measurements that fell outside the TA grid and were clamped.
    std::int64_t saturation_count;
    /// estimate - true TOA, in trial order; only filled on request.
    std::vector<double> signed_errors;
};

struct RunOptions {
    unsigned workers = 0;  // 0 picks std::thread::hardware_concurrency()
    bool keep_signed_errors = false;
};

struct TaEstimate {
    double toa;  // mean of the K bin centers [s]
    int saturations;
};

/// Draws `avg_window` perturbed measurements of true_toa, quantizes each and
/// returns the mean bin center.
TaEstimate estimate_toa_from_ta(double true_toa, const ErrorModel& model, int avg_window,
                                const TaGrid& grid, RandomStream& rng);

double draw_true_toa(const ToaPrior& prior, const TaGrid& grid, RandomStream& rng);

/// Mean of the commands' bin centers. Throws InvalidArgument for an empty list.
double average_ta(std::span<const TaCommandAbsolute> commands, Numerology n);

/// Monte Carlo over s.trials; trial t uses RandomStream(s.seed, t), so the
/// result does not depend on the number of workers.
SimResult run_scenario(const Scenario& s, const RunOptions& options = {});

std::vector<std::pair<int, SimResult>> sweep_avg_windows(const Scenario& base,
                                                         std::span<const int> windows,
                                                         const RunOptions& options = {});

}  // namespace nrsync
