// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "nrsync/budget.hpp"
#include "nrsync/nr_timing.hpp"
#include "nrsync/random_stream.hpp"
#include "nrsync/rti_pipeline.hpp"
#include "nrsync/simulator.hpp"
#include "oracles/enumeration_oracle.hpp"
#include "oracles/frozen_values.hpp"
#include "oracles/quantizer_oracle.hpp"

using namespace nrsync;
namespace fs = std::filesystem;

namespace {

struct Check {
    std::ostringstream detail;
    bool ok = true;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << (detail.tellp() > 0 ? "; " : "") << what;
        }
    }
};

double slot(int mu) { return timing_constants(Numerology::from_mu(mu)).slot_width; }

// 1. Slot widths per SCS against the tabulated TA granularity.
void slot_widths(Check& c) {
    const std::array<double, 4> table{260.0, 130.0, 65.0, 32.5};
    for (int mu = 0; mu < 4; ++mu) {
        const double ns = slot(mu) * 1e9;
        c.detail << "mu" << mu << "=" << ns << "ns ";
        c.require(std::abs(ns - table[mu]) <= 0.5, "mu " + std::to_string(mu) + " off");
    }
}

// 2. Default worst-case budgets.
void budgets(Check& c) {
    const std::array<int, 4> scs{15, 30, 60, 120};
    const std::array<double, 4> expected{1160.0, 900.0, 737.0, 542.5};
    const auto cs = builtin_components();
    for (std::size_t i = 0; i < 4; ++i) {
        const BudgetReport r = aggregate(cs, scs[i], AggregationPolicy::worst_case_sum);
        c.detail << scs[i] << "kHz=" << r.total_ns << (r.pass ? "(pass) " : "(fail) ");
        c.require(r.total_ns == expected[i], std::to_string(scs[i]) + " kHz total");
        c.require(r.pass == (scs[i] != 15), std::to_string(scs[i]) + " kHz pass flag");
    }
}

// 3. Quantizer against brute-force argmin over every bin center.
void quantizer(Check& c) {
    const Numerology n = Numerology::from_mu(0);
    const double w = slot(0);
    const int max = TaCommandAbsolute::max_index;
    RandomStream rng(2024, 3);
    int mismatches = 0;
    constexpr int samples = 100'000;
    for (int i = 0; i < samples; ++i) {
        const double toa = rng.uniform() * (max + 0.5) * w;
        if (quantize_toa(toa, n).command.index() != oracle::brute_force_bin(toa, w, max)) {
            ++mismatches;
        }
    }
    c.detail << samples - mismatches << "/" << samples << " agree";
    c.require(mismatches == 0, "mismatches");
}

// 4. Noiseless quantization: bounded by half a slot, mean a quarter slot.
void noiseless(Check& c) {
    Scenario s;
    s.error_model = LosGaussianModel{0.0};
    s.trials = 1'000'000;
    const SimResult r = run_scenario(s);
    const double w = slot(0);
    const double bound = std::nextafter(w / 2.0, std::numeric_limits<double>::infinity());
    const double rel = std::abs(r.mean_abs_error / (w / 4.0) - 1.0);
    c.detail << "max/w=" << r.cdf.max() / w << " mean/(w/4)-1=" << rel;
    c.require(r.cdf.max() <= bound, "max error exceeds w/2");
    c.require(rel <= 0.005, "mean off by more than 0.5%");
}

// 5. P_e falls with numerology; wider noise CDF lies below narrower.
void numerology_trend(Check& c) {
    double prev = std::numeric_limits<double>::infinity();
    for (int mu = 0; mu < 4; ++mu) {
        Scenario s;
        s.numerology = Numerology::from_mu(mu);
        s.error_model = LosGaussianModel{slot(mu) / 2.0};
        s.trials = 1'000'000;
        const SimResult r = run_scenario(s);
        c.detail << "Pe(mu" << mu << ")=" << r.p_e * 1e9 << "ns ";
        c.require(r.p_e < prev, "P_e not strictly decreasing at mu " + std::to_string(mu));
        prev = r.p_e;
    }

    Scenario half;
    half.error_model = LosGaussianModel{slot(0) / 2.0};
    half.trials = 1'000'000;
    Scenario full = half;
    full.error_model = LosGaussianModel{slot(0)};
    const SimResult rh = run_scenario(half);
    const SimResult rf = run_scenario(full);
    const double top = std::max(rh.cdf.max(), rf.cdf.max());
    int above = 0;
    constexpr int points = 1000;
    for (int i = 1; i <= points; ++i) {
        const double x = top * i / points;
        above += rf.cdf(x) > rh.cdf(x) ? 1 : 0;
    }
    c.detail << "dominance violations=" << above << "/" << points;
    c.require(above == 0, "sigma=T CDF above sigma=T/2 CDF");
}

// 6. Mean error versus averaging window.
void averaging_trend(Check& c) {
    const std::vector<int> windows(std::begin(frozen::windows), std::end(frozen::windows));
    std::array<std::vector<double>, 2> means;
    for (int which = 0; which < 2; ++which) {
        Scenario s;
        s.error_model = LosGaussianModel{which == 0 ? slot(0) / 2.0 : slot(0)};
        s.trials = 1'000'000;
        const auto results = sweep_avg_windows(s, windows);
        for (std::size_t i = 0; i < results.size(); ++i) {
            means[which].push_back(results[i].second.mean_abs_error / slot(0));
            if (i > 0) {
                c.require(means[which][i] <= means[which][i - 1] * 1.01,
                          "mean increases at K=" + std::to_string(windows[i]));
            }
            const double ref =
                which == 0 ? frozen::half_sigma_mean[i] : frozen::full_sigma_mean[i];
            c.require(std::abs(means[which][i] / ref - 1.0) <= 0.02,
                      "mean departs from convolution reference at K=" + std::to_string(windows[i]));
        }
    }
    const double ratio = means[0].back() / means[0].front();
    c.detail << "K16/K1(T/2)=" << ratio << " (reference " << frozen::half_sigma_k16_ratio << ")";
    c.require(ratio <= 0.60, "K=16 above 60% of K=1");
    c.require(std::abs(ratio / frozen::half_sigma_k16_ratio - 1.0) <= 0.02,
              "ratio departs from reference");
}

// 7. Three-bin quantizer with discrete TOA and noise grids versus enumeration.
void toy_enumeration(Check& c) {
    const double w = slot(0);
    oracle::ToyQuantizer toy{w, 2, {}, {}, 1};
    const GridToa prior{0.0, 2.5 * w, 64};
    for (int j = 0; j < 64; ++j) {
        toy.toa_points.push_back(prior.lo + j * ((prior.hi - prior.lo) / (prior.points - 1)));
        toy.noise_values.push_back(-1.2 * w + j * (2.4 * w / 63));
    }
    for (int k : {1, 2}) {
        toy.avg_window = k;
        const auto pmf = oracle::enumerate_error_pmf(toy);
        Scenario s;
        s.toa_prior = prior;
        s.error_model = DiscreteErrorModel{toy.noise_values};
        s.avg_window = k;
        s.ta_max_index = 2;
        s.trials = 200'000;
        s.seed = 99;
        const SimResult r = run_scenario(s);

        int foreign = 0;
        for (double e : r.cdf.sorted_samples()) {
            foreign += pmf.contains(e) ? 0 : 1;
        }
        const double z = oracle::normal_upper_quantile(0.005 / static_cast<double>(pmf.size()));
        const auto n = static_cast<double>(r.cdf.size());
        double exact = 0.0;
        int outside = 0;
        for (const auto& [value, mass] : pmf) {
            exact += mass;
            const double p = std::min(exact, 1.0);
            outside += std::abs(r.cdf(value) - p) > z * std::sqrt(p * (1.0 - p) / n) + 1e-12 ? 1 : 0;
        }
        c.detail << "K=" << k << ": " << pmf.size() << " atoms, " << outside << " outside bounds ";
        c.require(foreign == 0, "sample outside the enumerated support");
        c.require(outside == 0, "CDF outside 99% bounds for K=" + std::to_string(k));
    }
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

// 8. CLI outputs repeat byte for byte, also across worker counts.
void determinism(Check& c) {
    const fs::path dir = fs::temp_directory_path() / "nrsync_acceptance_determinism";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::vector<std::string> invocations{
        "sim --trials 200000 --seed 17 --sigma-rel 0.5",
        "sim --scs 60 --trials 100000 --model nlos --p-detect 0.7 --bias-ns 200 --format json",
        "sweep --trials 100000 --avg 1,2,4,8,16",
        "pipeline --epochs 2000 --drift-ppm 3 --dl-sigma-ns 20",
    };
    int run = 0;
    for (const auto& base : invocations) {
        std::vector<std::string> outputs;
        for (const char* workers : {"1", "4", "1", "0"}) {
            const fs::path out = dir / ("run" + std::to_string(run++));
            const std::string cmd = std::string("\"") + NRSYNC_CLI_PATH + "\" " + base +
                                    " --workers " + workers + " -o \"" + out.string() + "\"";
            const int rc = std::system(cmd.c_str());
            c.require(rc == 0, "'" + base + "' failed");
            outputs.push_back(slurp(out));
        }
        const bool same = std::all_of(outputs.begin(), outputs.end(),
                                      [&](const std::string& o) { return o == outputs[0]; });
        c.require(same && !outputs[0].empty(), "'" + base + "' differs between runs");
    }
    c.detail << invocations.size() << " invocations x 4 runs";
    fs::remove_all(dir);
}

// 9. Pipeline invariants.
void pipeline(Check& c) {
    PipelineScenario s;
    s.toa_prior = FixedToa{TaGrid::for_numerology(s.numerology).center(120)};
    s.error_model = LosGaussianModel{0.0};
    s.rti_granularity = 0.0;
    const SyncTrace zero = simulate_sync_epochs(DeviceClock{}, s, 10'000, 0.1);
    const bool all_zero = std::all_of(zero.epochs.begin(), zero.epochs.end(), [](const EpochRecord& e) {
        return e.pre_offset == 0.0 && e.post_offset == 0.0;
    });
    c.require(zero.epochs.size() == 10'000 && all_zero, "zero-error offsets not exactly 0");

    DeviceClock drifting;
    drifting.drift_ppm = 4.0;
    const double period = 0.2;
    const SyncTrace drift = simulate_sync_epochs(drifting, s, 10'000, period);
    const bool exact = std::all_of(drift.epochs.begin(), drift.epochs.end(), [&](const EpochRecord& e) {
        return e.pre_offset == 4.0 * 1e-6 * period;
    });
    c.require(exact, "drift pre-offset not exact");

    const ResyncInterval r = max_resync_interval(10.0, 100.0);
    c.detail << "resync(10ppm,100ns)=" << r.seconds << "s";
    c.require(!r.unbounded && r.seconds == 0.01, "resync interval not 10 ms");
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
        {"1 timing constants", slot_widths},
        {"2 budget reproduction", budgets},
        {"3 quantizer oracle", quantizer},
        {"4 noiseless quantization law", noiseless},
        {"5 error versus numerology", numerology_trend},
        {"6 error versus averaging window", averaging_trend},
        {"7 small-instance exact oracle", toy_enumeration},
        {"8 determinism", determinism},
        {"9 pipeline consistency", pipeline},
    };
    int failed = 0;
    for (const auto& [name, fn] : criteria) {
        Check c;
        const auto start = std::chrono::steady_clock::now();
        try {
            fn(c);
        } catch (const std::exception& e) {
            c.require(false, std::string("threw: ") + e.what());
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s [%s] %.1fs  %s\n", c.ok ? "PASS" : "FAIL", name.c_str(), secs,
                    c.detail.str().c_str());
        std::fflush(stdout);
        failed += c.ok ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
                criteria.size());
    return failed == 0 ? 0 : 1;
}
