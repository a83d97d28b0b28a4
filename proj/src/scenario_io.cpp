#include "nrsync/scenario_io.hpp"

#include <set>
#include <sstream>
#include <string>

#include "nrsync/error.hpp"

namespace nrsync {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const char* where) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.contains(key)) {
            throw InvalidScenario(std::string("unknown key '") + key + "' in " + where);
        }
    }
}

template <typename T>
T get_as(const json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InvalidScenario(std::string("bad or missing value for '") + key + "': " + e.what());
    }
}

json prior_to_json(const ToaPrior& prior) {
    struct Writer {
        json operator()(const UniformInSlot& p) const {
            return {{"kind", "uniform-in-slot"}, {"center_index", p.center_index}};
        }
        json operator()(const UniformInRange& p) const {
            return {{"kind", "uniform-in-range"}, {"lo_s", p.lo}, {"hi_s", p.hi}};
        }
        json operator()(const FixedToa& p) const { return {{"kind", "fixed"}, {"toa_s", p.toa}}; }
        json operator()(const GridToa& p) const {
            return {{"kind", "grid"}, {"lo_s", p.lo}, {"hi_s", p.hi}, {"points", p.points}};
        }
    };
    return std::visit(Writer{}, prior);
}

ToaPrior prior_from_json(const json& j) {
    if (!j.is_object()) {
        throw InvalidScenario("toa_prior must be an object");
    }
    const auto kind = get_as<std::string>(j, "kind");
    if (kind == "uniform-in-slot") {
        reject_unknown_keys(j, {"kind", "center_index"}, "toa_prior");
        return UniformInSlot{get_as<int>(j, "center_index")};
    }
    if (kind == "uniform-in-range") {
        reject_unknown_keys(j, {"kind", "lo_s", "hi_s"}, "toa_prior");
        return UniformInRange{get_as<double>(j, "lo_s"), get_as<double>(j, "hi_s")};
    }
    if (kind == "fixed") {
        reject_unknown_keys(j, {"kind", "toa_s"}, "toa_prior");
        return FixedToa{get_as<double>(j, "toa_s")};
    }
    if (kind == "grid") {
        reject_unknown_keys(j, {"kind", "lo_s", "hi_s", "points"}, "toa_prior");
        return GridToa{get_as<double>(j, "lo_s"), get_as<double>(j, "hi_s"),
                       get_as<int>(j, "points")};
    }
    throw InvalidScenario("unknown toa_prior kind '" + kind + "'");
}

json model_to_json(const ErrorModel& model) {
    struct Writer {
        json operator()(const LosGaussianModel& m) const {
            return {{"kind", "los"}, {"sigma_s", m.sigma}};
        }
        json operator()(const NlosModel& m) const {
            return {{"kind", "nlos"},
                    {"sigma_detected_s", m.sigma_detected},
                    {"sigma_blocked_s", m.sigma_blocked},
                    {"bias_s", m.bias_bp},
                    {"p_detect", m.p_detect}};
        }
        json operator()(const DiscreteErrorModel& m) const {
            return {{"kind", "discrete"}, {"values_s", m.values}};
        }
    };
    return std::visit(Writer{}, model);
}

// sigma_rel / sigma_s: exactly one may be given.
double read_sigma(const json& j, const char* abs_key, const char* rel_key, double slot_width,
                  double fallback) {
    const bool has_abs = j.contains(abs_key);
    const bool has_rel = j.contains(rel_key);
    if (has_abs && has_rel) {
        throw InvalidScenario(std::string("give either '") + abs_key + "' or '" + rel_key +
                              "', not both");
    }
    if (has_abs) {
        return get_as<double>(j, abs_key);
    }
    if (has_rel) {
        return get_as<double>(j, rel_key) * slot_width;
    }
    return fallback;
}

ErrorModel model_from_json(const json& j, double slot_width) {
    if (!j.is_object()) {
        throw InvalidScenario("error_model must be an object");
    }
    const auto kind = get_as<std::string>(j, "kind");
    if (kind == "los") {
        reject_unknown_keys(j, {"kind", "sigma_s", "sigma_rel"}, "error_model");
        return LosGaussianModel{read_sigma(j, "sigma_s", "sigma_rel", slot_width, 0.0)};
    }
    if (kind == "nlos") {
        reject_unknown_keys(j,
                            {"kind", "sigma_detected_s", "sigma_detected_rel", "sigma_blocked_s",
                             "sigma_blocked_rel", "bias_s", "p_detect"},
                            "error_model");
        NlosModel m;
        m.sigma_detected =
            read_sigma(j, "sigma_detected_s", "sigma_detected_rel", slot_width, 0.0);
        m.sigma_blocked = read_sigma(j, "sigma_blocked_s", "sigma_blocked_rel", slot_width, 0.0);
        if (j.contains("bias_s")) {
            m.bias_bp = get_as<double>(j, "bias_s");
        }
        if (j.contains("p_detect")) {
            m.p_detect = get_as<double>(j, "p_detect");
        }
        return m;
    }
    if (kind == "discrete") {
        reject_unknown_keys(j, {"kind", "values_s"}, "error_model");
        return DiscreteErrorModel{get_as<std::vector<double>>(j, "values_s")};
    }
    throw InvalidScenario("unknown error_model kind '" + kind + "'");
}

std::string probability_key(double q) {
    std::ostringstream os;
    os << q;
    return os.str();
}

}  // namespace

json scenario_to_json(const Scenario& s) {
    return {{"scs_khz", s.numerology.scs_khz()},
            {"toa_prior", prior_to_json(s.toa_prior)},
            {"error_model", model_to_json(s.error_model)},
            {"trials", s.trials},
            {"avg_window", s.avg_window},
            {"seed", s.seed},
            {"confidence", s.confidence},
            {"bias_correction_s", s.bias_correction},
            {"ta_max_index", s.ta_max_index}};
}

Scenario scenario_from_json(const json& j, Scenario base) {
    if (!j.is_object()) {
        throw InvalidScenario("scenario config must be a JSON object");
    }
    reject_unknown_keys(j,
                        {"scs_khz", "toa_prior", "error_model", "trials", "avg_window", "seed",
                         "confidence", "bias_correction_s", "ta_max_index"},
                        "scenario");
    Scenario s = std::move(base);
    if (j.contains("scs_khz")) {
        try {
            s.numerology = Numerology::from_scs_khz(get_as<int>(j, "scs_khz"));
        } catch (const UnsupportedNumerology& e) {
            throw InvalidScenario(e.what());
        }
    }
    if (j.contains("toa_prior")) {
        s.toa_prior = prior_from_json(j.at("toa_prior"));
    }
    if (j.contains("error_model")) {
        s.error_model = model_from_json(j.at("error_model"), timing_constants(s.numerology).slot_width);
    }
    if (j.contains("trials")) {
        s.trials = get_as<std::int64_t>(j, "trials");
    }
    if (j.contains("avg_window")) {
        s.avg_window = get_as<int>(j, "avg_window");
    }
    if (j.contains("seed")) {
        s.seed = get_as<std::uint64_t>(j, "seed");
    }
    if (j.contains("confidence")) {
        s.confidence = get_as<double>(j, "confidence");
    }
    if (j.contains("bias_correction_s")) {
        s.bias_correction = get_as<double>(j, "bias_correction_s");
    }
    if (j.contains("ta_max_index")) {
        s.ta_max_index = get_as<int>(j, "ta_max_index");
    }
    validate(s);
    return s;
}

json summary_to_json(const SimResult& r) {
    json quantiles = json::object();
    for (const auto& [q, v] : r.quantiles) {
        quantiles[probability_key(q)] = v * 1e9;
    }
    return {{"scs_khz", r.numerology.scs_khz()},
            {"trials", r.cdf.size()},
            {"confidence", r.confidence},
            {"p_e_ns", r.p_e * 1e9},
            {"mean_abs_error_ns", r.mean_abs_error * 1e9},
            {"max_error_ns", r.cdf.max() * 1e9},
            {"quantiles_ns", quantiles},
            {"saturation_count", r.saturation_count}};
}

SimulatedTaError simulated_ta_error(const SimResult& r) { return {r.numerology, r.p_e}; }

SimulatedTaError simulated_ta_error_from_summary(const json& summary) {
    // Accept either a bare summary or a CLI document that nests it.
    const json& body = summary.contains("summary") ? summary.at("summary") : summary;
    if (!body.is_object()) {
        throw InvalidScenario("simulation summary must be a JSON object");
    }
    Numerology n = Numerology::from_mu(0);
    try {
        n = Numerology::from_scs_khz(get_as<int>(body, "scs_khz"));
    } catch (const UnsupportedNumerology& e) {
        throw InvalidScenario(e.what());
    }
    const double p_e_ns = get_as<double>(body, "p_e_ns");
    if (!(p_e_ns >= 0.0)) {
        throw InvalidScenario("p_e_ns must be non-negative");
    }
    return SimulatedTaError{n, p_e_ns * 1e-9};
}

}  // namespace nrsync
