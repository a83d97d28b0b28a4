#include "nrsync/channel.hpp"

#include <cmath>
#include <cstddef>

#include "nrsync/error.hpp"

namespace nrsync {

namespace {

bool finite_non_negative(double v) { return std::isfinite(v) && v >= 0.0; }

struct Validator {
    void operator()(const LosGaussianModel& m) const {
        if (!finite_non_negative(m.sigma)) {
            throw InvalidArgument("LOS sigma must be finite and >= 0");
        }
    }
    void operator()(const NlosModel& m) const {
        if (!finite_non_negative(m.sigma_detected) || !finite_non_negative(m.sigma_blocked)) {
            throw InvalidArgument("NLOS sigmas must be finite and >= 0");
        }
        if (!finite_non_negative(m.bias_bp)) {
            throw InvalidArgument("NLOS bias must be finite and >= 0");
        }
        if (!(m.p_detect >= 0.0 && m.p_detect <= 1.0)) {
            throw InvalidArgument("NLOS detection probability must lie in [0, 1]");
        }
    }
    void operator()(const DiscreteErrorModel& m) const {
        if (m.values.empty()) {
            throw InvalidArgument("discrete error model needs at least one value");
        }
        for (double v : m.values) {
            if (!std::isfinite(v)) {
                throw InvalidArgument("discrete error values must be finite");
            }
        }
    }
};

}  // namespace

void validate(const ErrorModel& model) { std::visit(Validator{}, model); }

double sample_error(const LosGaussianModel& model, RandomStream& rng) {
    if (model.sigma == 0.0) {
        return 0.0;
    }
    return model.sigma * rng.standard_normal();
}

double sample_error(const NlosModel& model, RandomStream& rng) {
    if (rng.uniform() < model.p_detect) {
        return sample_error(LosGaussianModel{model.sigma_detected}, rng);
    }
    return model.bias_bp + sample_error(LosGaussianModel{model.sigma_blocked}, rng);
}

double sample_error(const DiscreteErrorModel& model, RandomStream& rng) {
    const auto n = model.values.size();
    auto k = static_cast<std::size_t>(rng.uniform() * static_cast<double>(n));
    if (k >= n) {
        k = n - 1;
    }
    return model.values[k];
}

double sample_error(const ErrorModel& model, RandomStream& rng) {
    return std::visit([&rng](const auto& m) { return sample_error(m, rng); }, model);
}

double perturb_toa(double true_toa, const ErrorModel& model, RandomStream& rng) {
    if (!(true_toa >= 0.0)) {
        throw InvalidArgument("true TOA must be non-negative");
    }
    return true_toa + sample_error(model, rng);
}

}  // namespace nrsync
