#include "nrsync/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "nrsync/error.hpp"
#include "nrsync/output.hpp"
#include "nrsync/scenario_io.hpp"

namespace nrsync::cli {

using nlohmann::json;

namespace {

constexpr const char* tool_name = "nrsync";

const std::vector<int> supported_scs{15, 30, 60, 120};

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read " + path + ": " + std::strerror(errno));
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidScenario("malformed JSON in " + path + ": " + e.what());
    }
}

std::string to_string(Format f) {
    switch (f) {
        case Format::csv:
            return "csv";
        case Format::json:
            return "json";
        case Format::table:
            return "table";
    }
    return "table";
}

std::string to_string(Subcommand s) {
    switch (s) {
        case Subcommand::constants:
            return "constants";
        case Subcommand::sim:
            return "sim";
        case Subcommand::sweep:
            return "sweep";
        case Subcommand::budget:
            return "budget";
        case Subcommand::pipeline:
            return "pipeline";
    }
    return "constants";
}

Format parse_format(const std::string& s) {
    if (s == "csv") {
        return Format::csv;
    }
    if (s == "json") {
        return Format::json;
    }
    return Format::table;
}

bool given(const CLI::App* app, const char* name) { return app->count(name) > 0; }

// Values from a flat --config document for options not set on the command
// line. Keys are long option names with '-' written as '_'.
void merge_flag_config(CLI::App* sub, const std::string& path) {
    const json j = read_json_file(path);
    if (!j.is_object()) {
        throw UsageError("--config: " + path + " must contain a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        std::string name = key;
        std::replace(name.begin(), name.end(), '_', '-');
        CLI::Option* opt = sub->get_option_no_throw("--" + name);
        if (opt == nullptr || name == "config") {
            throw UsageError("--config: unknown key '" + key + "' for " + sub->get_name());
        }
        if (opt->count() > 0) {
            continue;
        }
        std::vector<std::string> tokens;
        auto token = [](const json& v) {
            if (v.is_string()) {
                return v.get<std::string>();
            }
            if (v.is_boolean()) {
                return std::string(v.get<bool>() ? "true" : "false");
            }
            return v.dump();
        };
        if (value.is_array()) {
            for (const auto& v : value) {
                tokens.push_back(token(v));
            }
        } else {
            tokens.push_back(token(value));
        }
        try {
            for (auto& t : tokens) {
                opt->add_result(t);
            }
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw UsageError("--config: key '" + key + "': " + e.what());
        }
    }
}

struct SimFlags {
    int scs = 15;
    double sigma_rel = 0.5;
    double sigma_ns = 0.0;
    std::int64_t trials = 1'000'000;
    std::uint64_t seed = 42;
    int avg = 1;
    std::vector<int> avg_list{1, 2, 4, 8, 16};
    double confidence = 0.999;
    std::string prior = "slot";
    int center_index = 100;
    double toa_ns = 0.0;
    double lo_ns = 0.0;
    double hi_ns = 0.0;
    std::string model = "los";
    double p_detect = 1.0;
    double bias_ns = 0.0;
    double sigma_blocked_rel = 0.0;
    double sigma_blocked_ns = 0.0;
    double bias_correction_ns = 0.0;
    std::string config;
    std::string summary;
    std::string signed_output;
    std::size_t cdf_points = 0;
};

void add_sim_options(CLI::App* app, SimFlags& f, bool sweep) {
    app->add_option("--scs", f.scs, "Subcarrier spacing [kHz]")
        ->check(CLI::IsMember(supported_scs));
    auto* rel = app->add_option("--sigma-rel", f.sigma_rel,
                                "TOA error std as a fraction of the slot width (default 0.5)")
                    ->check(CLI::NonNegativeNumber);
    app->add_option("--sigma-ns", f.sigma_ns, "TOA error std [ns]")
        ->check(CLI::NonNegativeNumber)
        ->excludes(rel);
    app->add_option("--trials", f.trials, "Monte Carlo trials (default 1000000)")
        ->check(CLI::Range(std::int64_t{1}, max_retained_trials));
    app->add_option("--seed", f.seed, "Seed (default 42)");
    if (sweep) {
        app->add_option("--avg", f.avg_list, "Averaging window sizes, comma separated")
            ->delimiter(',')
            ->check(CLI::PositiveNumber);
    } else {
        app->add_option("--avg", f.avg, "TA measurements averaged per trial (default 1)")
            ->check(CLI::PositiveNumber);
    }
    app->add_option("--confidence", f.confidence, "Confidence level for P_e (default 0.999)")
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--prior", f.prior, "True TOA prior")
        ->check(CLI::IsMember({"slot", "range", "fixed"}));
    app->add_option("--center-index", f.center_index, "Slot index for the slot prior")
        ->check(CLI::Range(1, TaCommandAbsolute::max_index));
    app->add_option("--toa-ns", f.toa_ns, "True TOA for the fixed prior [ns]")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--lo-ns", f.lo_ns, "Lower bound of the range prior [ns]")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--hi-ns", f.hi_ns, "Upper bound of the range prior [ns]")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--model", f.model, "TOA error model")->check(CLI::IsMember({"los", "nlos"}));
    app->add_option("--p-detect", f.p_detect, "NLOS direct-path detection probability")
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--bias-ns", f.bias_ns, "NLOS excess delay when the direct path is lost [ns]")
        ->check(CLI::NonNegativeNumber);
    auto* brel = app->add_option("--sigma-blocked-rel", f.sigma_blocked_rel,
                                 "NLOS std when the direct path is lost, relative to the slot")
                     ->check(CLI::NonNegativeNumber);
    app->add_option("--sigma-blocked-ns", f.sigma_blocked_ns,
                    "NLOS std when the direct path is lost [ns]")
        ->check(CLI::NonNegativeNumber)
        ->excludes(brel);
    app->add_option("--bias-correction-ns", f.bias_correction_ns,
                    "Constant subtracted from each TOA estimate [ns]");
    app->add_option("--config", f.config, "Scenario JSON; explicit flags take precedence");
    app->add_option("--summary", f.summary, "Also write the JSON summary to this path");
    if (!sweep) {
        app->add_option("--signed-output", f.signed_output,
                        "Write signed errors (estimate - true) as CSV to this path");
    }
    app->add_option("--cdf-points", f.cdf_points,
                    "Thin the CDF CSV to at most this many rows (0 = every distinct sample)");
}

json build_prior(const CLI::App* app, const SimFlags& f, const json& existing) {
    const bool has_center = given(app, "--center-index");
    const bool has_toa = given(app, "--toa-ns");
    const bool has_range = given(app, "--lo-ns") || given(app, "--hi-ns");
    std::string kind;
    if (given(app, "--prior")) {
        kind = f.prior;
    } else if (has_center + has_toa + has_range > 1) {
        throw UsageError("--center-index, --toa-ns and --lo-ns/--hi-ns select different priors");
    } else if (has_toa) {
        kind = "fixed";
    } else if (has_range) {
        kind = "range";
    } else {
        kind = "slot";
    }

    const std::map<std::string, std::string> kind_name{
        {"slot", "uniform-in-slot"}, {"range", "uniform-in-range"}, {"fixed", "fixed"}};
    json p = existing.is_object() && existing.value("kind", "") == kind_name.at(kind)
                 ? existing
                 : json{{"kind", kind_name.at(kind)}};
    if (kind == "slot") {
        if (has_toa || has_range) {
            throw UsageError("--toa-ns/--lo-ns/--hi-ns do not apply to --prior slot");
        }
        if (has_center || !p.contains("center_index")) {
            p["center_index"] = f.center_index;
        }
    } else if (kind == "fixed") {
        if (has_center || has_range) {
            throw UsageError("--center-index/--lo-ns/--hi-ns do not apply to --prior fixed");
        }
        if (has_toa) {
            p["toa_s"] = f.toa_ns * 1e-9;
        } else if (!p.contains("toa_s")) {
            throw UsageError("--prior fixed requires --toa-ns");
        }
    } else {
        if (has_center || has_toa) {
            throw UsageError("--center-index/--toa-ns do not apply to --prior range");
        }
        if (given(app, "--lo-ns")) {
            p["lo_s"] = f.lo_ns * 1e-9;
        }
        if (given(app, "--hi-ns")) {
            p["hi_s"] = f.hi_ns * 1e-9;
        }
        if (!p.contains("lo_s") || !p.contains("hi_s")) {
            throw UsageError("--prior range requires --lo-ns and --hi-ns");
        }
    }
    return p;
}

void set_sigma(json& m, const std::string& stem, bool has_rel, double rel, bool has_abs,
               double abs_ns) {
    if (has_rel) {
        m.erase(stem + "_s");
        m[stem + "_rel"] = rel;
    } else if (has_abs) {
        m.erase(stem + "_rel");
        m[stem + "_s"] = abs_ns * 1e-9;
    }
}

json build_model(const CLI::App* app, const SimFlags& f, const json& existing) {
    const bool nlos_only = given(app, "--p-detect") || given(app, "--bias-ns") ||
                           given(app, "--sigma-blocked-rel") || given(app, "--sigma-blocked-ns");
    const bool has_rel = given(app, "--sigma-rel");
    const bool has_abs = given(app, "--sigma-ns");

    std::string kind = existing.is_object() ? existing.value("kind", "los") : "los";
    if (given(app, "--model")) {
        kind = f.model;
    } else if (nlos_only) {
        kind = "nlos";
    }
    if (kind == "los" && nlos_only) {
        throw UsageError("--p-detect/--bias-ns/--sigma-blocked-* require --model nlos");
    }

    json m = existing.is_object() && existing.value("kind", "") == kind ? existing
                                                                        : json{{"kind", kind}};
    if (kind == "los") {
        if (!has_rel && !has_abs && !m.contains("sigma_s") && !m.contains("sigma_rel")) {
            m["sigma_rel"] = f.sigma_rel;
        }
        set_sigma(m, "sigma", has_rel, f.sigma_rel, has_abs, f.sigma_ns);
        return m;
    }
    if (kind != "nlos") {
        throw UsageError("--model: config model '" + kind + "' cannot take NLOS/LOS flags");
    }
    if (!has_rel && !has_abs && !m.contains("sigma_detected_s") &&
        !m.contains("sigma_detected_rel")) {
        m["sigma_detected_rel"] = f.sigma_rel;
    }
    set_sigma(m, "sigma_detected", has_rel, f.sigma_rel, has_abs, f.sigma_ns);
    set_sigma(m, "sigma_blocked", given(app, "--sigma-blocked-rel"), f.sigma_blocked_rel,
              given(app, "--sigma-blocked-ns"), f.sigma_blocked_ns);
    if (given(app, "--p-detect")) {
        m["p_detect"] = f.p_detect;
    }
    if (given(app, "--bias-ns")) {
        m["bias_s"] = f.bias_ns * 1e-9;
    }
    return m;
}

SimConfig build_sim_config(const CLI::App* app, const SimFlags& f, bool sweep) {
    json j = f.config.empty() ? json::object() : read_json_file(f.config);
    if (!j.is_object()) {
        throw InvalidScenario("--config: scenario must be a JSON object");
    }
    if (given(app, "--scs")) {
        j["scs_khz"] = f.scs;
    }
    if (given(app, "--trials")) {
        j["trials"] = f.trials;
    }
    if (given(app, "--seed")) {
        j["seed"] = f.seed;
    }
    if (!sweep && given(app, "--avg")) {
        j["avg_window"] = f.avg;
    }
    if (given(app, "--confidence")) {
        j["confidence"] = f.confidence;
    }
    if (given(app, "--bias-correction-ns")) {
        j["bias_correction_s"] = f.bias_correction_ns * 1e-9;
    }

    const bool prior_flags = given(app, "--prior") || given(app, "--center-index") ||
                             given(app, "--toa-ns") || given(app, "--lo-ns") ||
                             given(app, "--hi-ns");
    if (prior_flags) {
        j["toa_prior"] = build_prior(app, f, j.value("toa_prior", json()));
    }

    const bool model_flags =
        given(app, "--model") || given(app, "--sigma-rel") || given(app, "--sigma-ns") ||
        given(app, "--p-detect") || given(app, "--bias-ns") ||
        given(app, "--sigma-blocked-rel") || given(app, "--sigma-blocked-ns");
    if (model_flags || !j.contains("error_model")) {
        j["error_model"] = build_model(app, f, j.value("error_model", json()));
    }

    SimConfig c;
    c.scenario = scenario_from_json(j);
    if (sweep) {
        c.windows = f.avg_list;
        c.scenario.avg_window = c.windows.front();
    }
    c.cdf_points = f.cdf_points;
    c.summary_path = f.summary;
    c.signed_output_path = f.signed_output;
    return c;
}

std::string csv_header_lines(const CliConfig& config) {
    std::string out = std::string("# ") + tool_name + " " + NRSYNC_VERSION + "\n";
    out += "# config: " + resolved_config(config).dump() + "\n";
    return out;
}

json document(const CliConfig& config) {
    return json{{"tool", tool_name}, {"version", NRSYNC_VERSION}, {"config", resolved_config(config)}};
}

// Steps of the CDF, thinned to at most `limit` rows by probability when limit > 0.
std::vector<EmpiricalCdf::Step> cdf_rows(const EmpiricalCdf& cdf, std::size_t limit) {
    std::vector<EmpiricalCdf::Step> steps = cdf.steps();
    if (limit == 0 || steps.size() <= limit) {
        return steps;
    }
    std::vector<EmpiricalCdf::Step> out;
    out.reserve(limit);
    for (std::size_t k = 1; k <= limit; ++k) {
        const double q = static_cast<double>(k) / static_cast<double>(limit);
        const double v = cdf.quantile(q);
        if (!out.empty() && out.back().value == v) {
            continue;
        }
        out.push_back(EmpiricalCdf::Step{v, cdf(v)});
    }
    return out;
}

void emit(const CliConfig& config, std::ostream& out, const std::string& text) {
    if (config.output_path.empty()) {
        out << text;
        return;
    }
    write_file_atomic(resolve_output_path(config.output_path), text);
}

void write_side_file(const std::string& path, const std::string& text) {
    write_file_atomic(resolve_output_path(path), text);
}

std::string ns(double seconds) { return format_double(seconds * 1e9); }

int run_constants(const CliConfig& config, std::ostream& out) {
    std::ostringstream os;
    if (config.format == Format::json) {
        json j = document(config);
        j["constants"] = json::array();
        for (int scs : config.constants.scs_khz) {
            const Numerology n = Numerology::from_scs_khz(scs);
            const TimingConstants c = timing_constants(n);
            const QuantizationBound b = max_quantization_error(n);
            j["constants"].push_back({{"scs_khz", scs},
                                      {"mu", n.mu()},
                                      {"t_c_s", c.t_c},
                                      {"t_mu_s", c.t_mu},
                                      {"slot_width_s", c.slot_width},
                                      {"t_c_ns", c.t_c * 1e9},
                                      {"t_mu_ns", c.t_mu * 1e9},
                                      {"slot_width_ns", c.slot_width * 1e9},
                                      {"half_slot_error_ns", b.half_slot * 1e9}});
        }
        os << j.dump(2) << "\n";
    } else if (config.format == Format::csv) {
        os << csv_header_lines(config);
        os << "scs_khz,mu,t_c_s,t_mu_s,slot_width_s\n";
        for (int scs : config.constants.scs_khz) {
            const Numerology n = Numerology::from_scs_khz(scs);
            const TimingConstants c = timing_constants(n);
            os << scs << "," << n.mu() << "," << format_double(c.t_c) << ","
               << format_double(c.t_mu) << "," << format_double(c.slot_width) << "\n";
        }
    } else {
        os << "# " << tool_name << " " << NRSYNC_VERSION << "\n";
        os << std::left << std::setw(10) << "SCS[kHz]" << std::setw(4) << "mu" << std::setw(12)
           << "T_c[ns]" << std::setw(12) << "T_mu[ns]" << std::setw(16) << "slot T[ns]"
           << "max err T/2[ns]\n";
        for (int scs : config.constants.scs_khz) {
            const Numerology n = Numerology::from_scs_khz(scs);
            const TimingConstants c = timing_constants(n);
            os << std::left << std::setw(10) << scs << std::setw(4) << n.mu() << std::fixed
               << std::setprecision(5) << std::setw(12) << c.t_c * 1e9 << std::setprecision(3)
               << std::setw(12) << c.t_mu * 1e9 << std::setw(16) << c.slot_width * 1e9
               << c.slot_width * 0.5e9 << "\n";
            os.unsetf(std::ios::floatfield);
        }
    }
    emit(config, out, os.str());
    return exit_code::ok;
}

int run_sim(const CliConfig& config, std::ostream& out) {
    const SimConfig& sc = config.sim;
    RunOptions opts;
    opts.workers = config.workers;
    opts.keep_signed_errors = !sc.signed_output_path.empty();
    const SimResult r = run_scenario(sc.scenario, opts);

    json doc = document(config);
    doc["summary"] = summary_to_json(r);

    if (!sc.summary_path.empty()) {
        write_side_file(sc.summary_path, doc.dump(2) + "\n");
    }
    if (!sc.signed_output_path.empty()) {
        std::ostringstream os;
        os << csv_header_lines(config) << "trial,signed_error_ns\n";
        for (std::size_t t = 0; t < r.signed_errors.size(); ++t) {
            os << t << "," << ns(r.signed_errors[t]) << "\n";
        }
        write_side_file(sc.signed_output_path, os.str());
    }

    std::ostringstream os;
    if (config.format == Format::json) {
        os << doc.dump(2) << "\n";
    } else if (config.format == Format::csv) {
        os << csv_header_lines(config) << "error_ns,cdf\n";
        for (const auto& step : cdf_rows(r.cdf, sc.cdf_points)) {
            os << ns(step.value) << "," << format_double(step.cdf) << "\n";
        }
    } else {
        os << "# " << tool_name << " " << NRSYNC_VERSION << "\n";
        os << "# config: " << resolved_config(config).dump() << "\n";
        os << "SCS                " << r.numerology.scs_khz() << " kHz\n";
        os << "trials             " << r.cdf.size() << "\n";
        os << "P_e @ " << r.confidence << "      " << ns(r.p_e) << " ns\n";
        os << "mean |error|       " << ns(r.mean_abs_error) << " ns\n";
        os << "max |error|        " << ns(r.cdf.max()) << " ns\n";
        for (const auto& [q, v] : r.quantiles) {
            os << "q" << std::left << std::setw(17) << q << ns(v) << " ns\n";
        }
        os << "saturated          " << r.saturation_count << "\n";
    }
    emit(config, out, os.str());
    return exit_code::ok;
}

int run_sweep(const CliConfig& config, std::ostream& out) {
    const SimConfig& sc = config.sim;
    RunOptions opts;
    opts.workers = config.workers;
    const auto results = sweep_avg_windows(sc.scenario, sc.windows, opts);

    json doc = document(config);
    doc["results"] = json::array();
    for (const auto& [k, r] : results) {
        json s = summary_to_json(r);
        s["avg_window"] = k;
        doc["results"].push_back(std::move(s));
    }
    if (!sc.summary_path.empty()) {
        write_side_file(sc.summary_path, doc.dump(2) + "\n");
    }

    std::ostringstream os;
    if (config.format == Format::json) {
        os << doc.dump(2) << "\n";
    } else if (config.format == Format::csv) {
        os << csv_header_lines(config);
        std::vector<std::vector<EmpiricalCdf::Step>> columns;
        std::size_t rows = 0;
        for (std::size_t i = 0; i < results.size(); ++i) {
            const int k = results[i].first;
            os << (i ? "," : "") << "error_ns_k" << k << ",cdf_k" << k;
            columns.push_back(cdf_rows(results[i].second.cdf, sc.cdf_points));
            rows = std::max(rows, columns.back().size());
        }
        os << "\n";
        for (std::size_t row = 0; row < rows; ++row) {
            for (std::size_t i = 0; i < columns.size(); ++i) {
                if (i) {
                    os << ",";
                }
                if (row < columns[i].size()) {
                    os << ns(columns[i][row].value) << "," << format_double(columns[i][row].cdf);
                } else {
                    os << ",";
                }
            }
            os << "\n";
        }
    } else {
        os << "# " << tool_name << " " << NRSYNC_VERSION << "\n";
        os << "# config: " << resolved_config(config).dump() << "\n";
        os << std::left << std::setw(6) << "K" << std::setw(24) << "mean |error| [ns]"
           << "P_e @ " << sc.scenario.confidence << " [ns]\n";
        for (const auto& [k, r] : results) {
            os << std::left << std::setw(6) << k << std::setw(24) << ns(r.mean_abs_error)
               << ns(r.p_e) << "\n";
        }
    }
    emit(config, out, os.str());
    return exit_code::ok;
}

json report_to_json(const BudgetReport& r) {
    json lines = json::array();
    for (const auto& l : r.components) {
        json line{{"id", l.id},
                  {"name", l.name},
                  {"contribution_ns", l.contribution_ns},
                  {"included", l.included}};
        if (!l.reason.empty()) {
            line["reason"] = l.reason;
        }
        lines.push_back(std::move(line));
    }
    return {{"scs_khz", r.scs_khz},
            {"policy", std::string(to_string(r.policy))},
            {"components", lines},
            {"total_ns", r.total_ns},
            {"target_ns", r.target_ns},
            {"pass", r.pass},
            {"margin_ns", r.margin_ns}};
}

int run_budget(const CliConfig& config, std::ostream& out) {
    const BudgetConfig& bc = config.budget;
    BudgetInputs inputs;
    inputs.components = builtin_components(BudgetOptions{bc.tae, bc.include_ul_tx_error});
    inputs.scs_khz = bc.scs_khz;
    inputs.policy = bc.policy;
    inputs.target_ns = bc.target_ns;

    BudgetReport report;
    json sim_source;
    if (!bc.from_sim.empty()) {
        const json summary = read_json_file(bc.from_sim);
        const SimulatedTaError sim = simulated_ta_error_from_summary(summary);
        try {
            report = substitute_ta_error(inputs, sim);
        } catch (const InvalidArgument& e) {
            throw InvalidScenario(std::string("--from-sim: ") + e.what());
        }
        sim_source = {{"scs_khz", sim.numerology.scs_khz()}, {"p_e_ns", sim.p_e * 1e9}};
    } else {
        report = aggregate(inputs.components, inputs.scs_khz, inputs.policy, inputs.target_ns);
    }

    std::ostringstream os;
    if (config.format == Format::json) {
        json doc = document(config);
        if (!sim_source.is_null()) {
            doc["simulated_ta_error"] = sim_source;
        }
        doc["report"] = report_to_json(report);
        os << doc.dump(2) << "\n";
    } else if (config.format == Format::csv) {
        os << csv_header_lines(config) << "id,contribution_ns,included\n";
        for (const auto& l : report.components) {
            os << l.id << "," << format_double(l.contribution_ns) << ","
               << (l.included ? "true" : "false") << "\n";
        }
        os << "total," << format_double(report.total_ns) << ",true\n";
    } else {
        os << "# " << tool_name << " " << NRSYNC_VERSION << "\n";
        os << "# config: " << resolved_config(config).dump() << "\n";
        os << "Device synchronization budget, " << report.scs_khz << " kHz, "
           << to_string(report.policy) << "\n\n";
        for (const auto& l : report.components) {
            os << "  " << std::left << std::setw(40) << l.name << std::right << std::setw(10)
               << format_double(l.contribution_ns) << " ns";
            if (!l.reason.empty()) {
                os << "  (" << l.reason << ")";
            }
            os << "\n";
        }
        os << "\n  " << std::left << std::setw(40) << "total" << std::right << std::setw(10)
           << format_double(report.total_ns) << " ns\n";
        os << "  " << std::left << std::setw(40) << "target" << std::right << std::setw(10)
           << format_double(report.target_ns) << " ns\n";
        os << "  " << std::left << std::setw(40) << "margin" << std::right << std::setw(10)
           << format_double(report.margin_ns) << " ns\n";
        os << "  " << (report.pass ? "PASS" : "FAIL") << "\n";
    }
    emit(config, out, os.str());

    if (!report.pass && bc.fail_on_target_miss) {
        return exit_code::target_missed;
    }
    return exit_code::ok;
}

int run_pipeline(const CliConfig& config, std::ostream& out) {
    const PipelineConfig& pc = config.pipeline;
    const SyncTrace trace =
        simulate_sync_epochs(pc.clock, pc.scenario, pc.epochs, pc.resync_period);

    double sum_post = 0.0;
    double max_abs_pre = 0.0;
    double max_abs_post = 0.0;
    for (const auto& e : trace.epochs) {
        sum_post += e.post_offset;
        max_abs_pre = std::max(max_abs_pre, std::abs(e.pre_offset));
        max_abs_post = std::max(max_abs_post, std::abs(e.post_offset));
    }
    json summary{{"mean_post_offset_ns", sum_post / static_cast<double>(trace.epochs.size()) * 1e9},
                 {"max_abs_pre_offset_ns", max_abs_pre * 1e9},
                 {"max_abs_post_offset_ns", max_abs_post * 1e9}};
    if (pc.residual_budget_ns) {
        const ResyncInterval iv =
            max_resync_interval(std::abs(pc.clock.drift_ppm), *pc.residual_budget_ns);
        summary["max_resync_interval_s"] = iv.unbounded ? json(nullptr) : json(iv.seconds);
        summary["resync_unbounded"] = iv.unbounded;
    }

    std::ostringstream os;
    if (config.format == Format::json) {
        json doc = document(config);
        doc["summary"] = summary;
        json epochs = json::array();
        for (const auto& e : trace.epochs) {
            epochs.push_back({{"epoch", e.epoch},
                              {"pre_offset_ns", e.pre_offset * 1e9},
                              {"post_offset_ns", e.post_offset * 1e9}});
        }
        doc["trace"] = std::move(epochs);
        os << doc.dump(2) << "\n";
    } else {
        os << csv_header_lines(config);
        os << "# summary: " << summary.dump() << "\n";
        os << "epoch,pre_offset_ns,post_offset_ns\n";
        for (const auto& e : trace.epochs) {
            os << e.epoch << "," << ns(e.pre_offset) << "," << ns(e.post_offset) << "\n";
        }
    }
    emit(config, out, os.str());
    return exit_code::ok;
}

}  // namespace

CliConfig parse_args(const std::vector<std::string>& args) {
    CLI::App app{"Timing-advance based device time synchronization analysis", tool_name};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(tool_name) + " " + NRSYNC_VERSION);

    CliConfig config;
    std::string format;
    std::string output;
    unsigned workers = 0;

    auto add_common = [&](CLI::App* sub, const std::vector<std::string>& formats) {
        sub->add_option("--format", format, "Output format")->check(CLI::IsMember(formats));
        sub->add_option("-o,--output", output, "Output path (default: stdout)");
    };

    // constants
    auto* constants = app.add_subcommand("constants", "NR timing constants per SCS");
    add_common(constants, {"table", "json", "csv"});
    std::vector<int> const_scs;
    constants->add_option("--scs", const_scs, "Restrict to these SCS values [kHz]")
        ->delimiter(',')
        ->check(CLI::IsMember(supported_scs));

    // sim / sweep
    SimFlags sim_flags;
    auto* sim = app.add_subcommand("sim", "Monte Carlo of TOA-from-TA error (CDF data)");
    add_common(sim, {"csv", "json", "table"});
    add_sim_options(sim, sim_flags, false);
    sim->add_option("--workers", workers, "Worker threads (0 = all cores)");

    SimFlags sweep_flags;
    auto* sweep = app.add_subcommand("sweep", "Error versus number of averaged TA commands");
    add_common(sweep, {"csv", "json", "table"});
    add_sim_options(sweep, sweep_flags, true);
    sweep->add_option("--workers", workers, "Worker threads (0 = all cores)");

    // budget
    BudgetConfig& bc = config.budget;
    std::string policy = "worst-case-sum";
    std::string tae = "tx-diversity";
    std::string budget_config;
    auto* budget = app.add_subcommand("budget", "Device synchronization error budget");
    add_common(budget, {"table", "json", "csv"});
    budget->add_option("--scs", bc.scs_khz, "Subcarrier spacing [kHz]")
        ->check(CLI::IsMember(supported_scs));
    budget->add_option("--policy", policy, "Aggregation policy")
        ->check(CLI::IsMember({"worst-case-sum", "root-sum-square"}));
    budget->add_option("--tae", tae, "Time alignment error variant")
        ->check(CLI::IsMember({"tx-diversity", "positioning"}));
    budget->add_flag("--include-ul-tx-error", bc.include_ul_tx_error,
                     "Count UE UL transmit timing error as well");
    budget->add_option("--target-ns", bc.target_ns, "Synchronization target [ns]")
        ->check(CLI::NonNegativeNumber);
    budget->add_option("--from-sim", bc.from_sim,
                       "Replace TA granularity with P_e from a sim JSON summary");
    budget->add_flag("--fail-on-target-miss", bc.fail_on_target_miss,
                     "Exit with code 4 when the budget exceeds the target");
    budget->add_option("--config", budget_config, "JSON of option values; flags take precedence");

    // pipeline
    PipelineConfig& pc = config.pipeline;
    int pipe_scs = 15;
    double pipe_sigma_rel = 0.5;
    double pipe_sigma_ns = 0.0;
    double resync_ms = 100.0;
    double granularity_ns = 250.0;
    double dl_sigma_ns = 0.0;
    double asymmetry_ns = 0.0;
    double host_delay_ns = 0.0;
    double pipe_toa_ns = 0.0;
    int pipe_center = 100;
    int pipe_avg = 1;
    double initial_offset_ns = 0.0;
    double residual_ns = 0.0;
    std::string pipeline_config;
    pc.clock.drift_ppm = 1.0;
    auto* pipeline = app.add_subcommand("pipeline", "Drift and RTI correction trace per epoch");
    add_common(pipeline, {"csv", "json"});
    pipeline->add_option("--workers", workers,
                         "Accepted for symmetry with sim; epochs always run in order");
    pipeline->add_option("--drift-ppm", pc.clock.drift_ppm, "Device frequency error [ppm]");
    pipeline->add_option("--resync-ms", resync_ms, "Interval between corrections [ms]")
        ->check(CLI::NonNegativeNumber);
    pipeline->add_option("--epochs", pc.epochs, "Number of corrections")
        ->check(CLI::PositiveNumber);
    pipeline->add_option("--scs", pipe_scs, "Subcarrier spacing [kHz]")
        ->check(CLI::IsMember(supported_scs));
    auto* prel = pipeline->add_option("--sigma-rel", pipe_sigma_rel,
                                      "TOA error std relative to the slot width")
                     ->check(CLI::NonNegativeNumber);
    pipeline->add_option("--sigma-ns", pipe_sigma_ns, "TOA error std [ns]")
        ->check(CLI::NonNegativeNumber)
        ->excludes(prel);
    pipeline->add_option("--seed", pc.scenario.seed, "Seed (default 42)");
    pipeline->add_option("--avg", pipe_avg, "TA commands averaged per correction")
        ->check(CLI::PositiveNumber);
    auto* ptoa = pipeline->add_option("--toa-ns", pipe_toa_ns, "Fixed propagation delay [ns]")
                     ->check(CLI::NonNegativeNumber);
    pipeline->add_option("--center-index", pipe_center, "TA slot the device sits in")
        ->check(CLI::Range(1, TaCommandAbsolute::max_index))
        ->excludes(ptoa);
    pipeline->add_option("--granularity-ns", granularity_ns, "RTI timestamp granularity, 0 = none")
        ->check(CLI::NonNegativeNumber);
    pipeline->add_option("--dl-sigma-ns", dl_sigma_ns, "DL frame timing error std [ns]")
        ->check(CLI::NonNegativeNumber);
    pipeline->add_option("--asymmetry-ns", asymmetry_ns, "DL/UL propagation asymmetry [ns]");
    pipeline->add_option("--host-delay-ns", host_delay_ns, "Modem to host interface delay [ns]");
    pipeline->add_option("--initial-offset-ns", initial_offset_ns, "Device offset at start [ns]");
    pipeline->add_option("--residual-ns", residual_ns,
                         "Budget left for drift; reports the longest resync interval")
        ->check(CLI::NonNegativeNumber);
    pipeline->add_option("--config", pipeline_config,
                         "JSON of option values; flags take precedence");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
        if (!budget_config.empty()) {
            merge_flag_config(budget, budget_config);
        }
        if (!pipeline_config.empty()) {
            merge_flag_config(pipeline, pipeline_config);
        }
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested(app.help());
    } catch (const CLI::CallForAllHelp&) {
        throw HelpRequested(app.help("", CLI::AppFormatMode::All));
    } catch (const CLI::CallForVersion&) {
        throw HelpRequested(std::string(tool_name) + " " + NRSYNC_VERSION + "\n");
    } catch (const CLI::ParseError& e) {
        const auto subs = app.get_subcommands();
        const std::string hint = subs.empty() ? std::string(tool_name) + " --help"
                                              : std::string(tool_name) + " " +
                                                    subs.front()->get_name() + " --help";
        throw UsageError(std::string(e.what()) + " (see '" + hint + "')");
    }

    CLI::App* active = app.get_subcommands().front();
    const std::string name = active->get_name();
    config.output_path = output;
    config.workers = workers;

    if (name == "constants") {
        config.subcommand = Subcommand::constants;
        config.format = format.empty() ? Format::table : parse_format(format);
        if (!const_scs.empty()) {
            config.constants.scs_khz = const_scs;
        }
    } else if (name == "sim" || name == "sweep") {
        const bool is_sweep = name == "sweep";
        config.subcommand = is_sweep ? Subcommand::sweep : Subcommand::sim;
        config.format = format.empty() ? Format::csv : parse_format(format);
        config.sim = build_sim_config(active, is_sweep ? sweep_flags : sim_flags, is_sweep);
    } else if (name == "budget") {
        config.subcommand = Subcommand::budget;
        config.format = format.empty() ? Format::table : parse_format(format);
        bc.policy = *parse_policy(policy);
        bc.tae = *parse_tae_variant(tae);
    } else {
        config.subcommand = Subcommand::pipeline;
        config.format = format.empty() ? Format::csv : parse_format(format);
        PipelineScenario& ps = pc.scenario;
        ps.numerology = Numerology::from_scs_khz(pipe_scs);
        const double slot = timing_constants(ps.numerology).slot_width;
        const double sigma =
            given(pipeline, "--sigma-ns") ? pipe_sigma_ns * 1e-9 : pipe_sigma_rel * slot;
        ps.error_model = LosGaussianModel{sigma};
        ps.avg_window = pipe_avg;
        if (given(pipeline, "--toa-ns")) {
            ps.toa_prior = FixedToa{pipe_toa_ns * 1e-9};
        } else {
            ps.toa_prior = UniformInSlot{pipe_center};
        }
        ps.rti_granularity = granularity_ns * 1e-9;
        ps.dl_timing_sigma = dl_sigma_ns * 1e-9;
        ps.dl_ul_asymmetry = asymmetry_ns * 1e-9;
        ps.host_interface_delay = host_delay_ns * 1e-9;
        pc.resync_period = resync_ms * 1e-3;
        pc.clock.offset = initial_offset_ns * 1e-9;
        if (given(pipeline, "--residual-ns")) {
            pc.residual_budget_ns = residual_ns;
        }
        if (!std::isfinite(pc.clock.drift_ppm)) {
            throw UsageError("--drift-ppm must be finite");
        }
        validate(ps);
    }
    return config;
}

json resolved_config(const CliConfig& config) {
    json j{{"subcommand", to_string(config.subcommand)}, {"format", to_string(config.format)}};
    switch (config.subcommand) {
        case Subcommand::constants:
            j["scs_khz"] = config.constants.scs_khz;
            break;
        case Subcommand::sim:
        case Subcommand::sweep:
            j["scenario"] = scenario_to_json(config.sim.scenario);
            j["cdf_points"] = config.sim.cdf_points;
            if (config.subcommand == Subcommand::sweep) {
                j["avg_windows"] = config.sim.windows;
            }
            break;
        case Subcommand::budget: {
            const BudgetConfig& b = config.budget;
            j["scs_khz"] = b.scs_khz;
            j["policy"] = std::string(to_string(b.policy));
            j["tae"] = std::string(to_string(b.tae));
            j["include_ul_tx_error"] = b.include_ul_tx_error;
            j["target_ns"] = b.target_ns;
            j["from_sim"] = b.from_sim;
            j["fail_on_target_miss"] = b.fail_on_target_miss;
            break;
        }
        case Subcommand::pipeline: {
            const PipelineConfig& p = config.pipeline;
            Scenario probe;
            probe.numerology = p.scenario.numerology;
            probe.toa_prior = p.scenario.toa_prior;
            probe.error_model = p.scenario.error_model;
            probe.avg_window = p.scenario.avg_window;
            probe.seed = p.scenario.seed;
            const json s = scenario_to_json(probe);
            j["scs_khz"] = s["scs_khz"];
            j["toa_prior"] = s["toa_prior"];
            j["error_model"] = s["error_model"];
            j["avg_window"] = p.scenario.avg_window;
            j["seed"] = p.scenario.seed;
            j["rti_granularity_s"] = p.scenario.rti_granularity;
            j["dl_timing_sigma_s"] = p.scenario.dl_timing_sigma;
            j["dl_ul_asymmetry_s"] = p.scenario.dl_ul_asymmetry;
            j["host_interface_delay_s"] = p.scenario.host_interface_delay;
            j["drift_ppm"] = p.clock.drift_ppm;
            j["initial_offset_s"] = p.clock.offset;
            j["epochs"] = p.epochs;
            j["resync_period_s"] = p.resync_period;
            if (p.residual_budget_ns) {
                j["residual_budget_ns"] = *p.residual_budget_ns;
            }
            break;
        }
    }
    return j;
}

int run(const CliConfig& config, std::ostream& out) {
    switch (config.subcommand) {
        case Subcommand::constants:
            return run_constants(config, out);
        case Subcommand::sim:
            return run_sim(config, out);
        case Subcommand::sweep:
            return run_sweep(config, out);
        case Subcommand::budget:
            return run_budget(config, out);
        case Subcommand::pipeline:
            return run_pipeline(config, out);
    }
    return exit_code::failure;
}

int main_entry(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    try {
        const CliConfig config = parse_args(args);
        return run(config, out);
    } catch (const HelpRequested& h) {
        out << h.what();
        return exit_code::ok;
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << "\n";
        return exit_code::usage;
    } catch (const UnsupportedNumerology& e) {
        err << "usage error: " << e.what() << "\n";
        return exit_code::usage;
    } catch (const InvalidScenario& e) {
        err << "invalid scenario: " << e.what() << "\n";
        return exit_code::invalid_scenario;
    } catch (const InvalidArgument& e) {
        err << "invalid scenario: " << e.what() << "\n";
        return exit_code::invalid_scenario;
    } catch (const IoError& e) {
        err << "I/O error: " << e.what() << "\n";
        return exit_code::io_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code::failure;
    }
}

}  // namespace nrsync::cli
