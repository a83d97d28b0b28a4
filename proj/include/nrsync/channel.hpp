#pragma once

#include <variant>
#include <vector>

#include "nrsync/random_stream.hpp"

namespace nrsync {

/// Zero-mean Gaussian TOA error (measurement noise plus LOS multipath).
struct LosGaussianModel {
    double sigma = 0.0;  // [s]
};

/// NLOS TOA error as a two-state mixture. With probability p_detect the
/// attenuated direct path is found and the error is N(0, sigma_detected^2);
/// otherwise the estimate locks onto a later path: bias_bp + N(0, sigma_blocked^2).
struct NlosModel {
    double sigma_detected = 0.0;  // [s]
    double sigma_blocked = 0.0;   // [s]
    double bias_bp = 0.0;         // [s]
    double p_detect = 1.0;
};

/// Error drawn uniformly from a finite list of values. Only useful where an
/// outcome space has to be enumerable (exact-enumeration cross-checks).
struct DiscreteErrorModel {
    std::vector<double> values;  // [s]
};

using ErrorModel = std::variant<LosGaussianModel, NlosModel, DiscreteErrorModel>;

/// Throws InvalidArgument when a field violates its invariant.
void validate(const ErrorModel& model);

double sample_error(const LosGaussianModel& model, RandomStream& rng);
double sample_error(const NlosModel& model, RandomStream& rng);
double sample_error(const DiscreteErrorModel& model, RandomStream& rng);
double sample_error(const ErrorModel& model, RandomStream& rng);

/// true_toa + sampled error. The result may be negative; the quantizer clamps.
double perturb_toa(double true_toa, const ErrorModel& model, RandomStream& rng);

}  // namespace nrsync
