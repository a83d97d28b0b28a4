#include "nrsync/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <string>
#include <thread>

#include "nrsync/error.hpp"

namespace nrsync {

TaGrid Scenario::grid() const {
    return TaGrid{timing_constants(numerology).slot_width, ta_max_index};
}

namespace {

struct PriorValidator {
    const Scenario& s;

    void operator()(const UniformInSlot& p) const {
        if (p.center_index < 1 || p.center_index > s.ta_max_index) {
            throw InvalidScenario("uniform-in-slot center index must lie in [1, " +
                                  std::to_string(s.ta_max_index) + "]");
        }
    }
    void operator()(const UniformInRange& p) const {
        if (!std::isfinite(p.lo) || !std::isfinite(p.hi) || p.lo < 0.0 || p.hi < p.lo) {
            throw InvalidScenario("uniform-in-range bounds must satisfy 0 <= lo <= hi");
        }
    }
    void operator()(const FixedToa& p) const {
        if (!std::isfinite(p.toa) || p.toa < 0.0) {
            throw InvalidScenario("fixed TOA must be finite and non-negative");
        }
    }
    void operator()(const GridToa& p) const {
        if (!std::isfinite(p.lo) || !std::isfinite(p.hi) || p.lo < 0.0 || p.hi < p.lo) {
            throw InvalidScenario("grid prior bounds must satisfy 0 <= lo <= hi");
        }
        if (p.points < 1) {
            throw InvalidScenario("grid prior needs at least one point");
        }
    }
};

struct Chunk {
    std::int64_t begin;
    std::int64_t end;
};

unsigned resolve_workers(unsigned requested, std::int64_t trials) {
    unsigned w = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
    return static_cast<unsigned>(std::min<std::int64_t>(w, trials));
}

}  // namespace

void validate(const Scenario& s) {
    if (s.trials < 1) {
        throw InvalidScenario("trials must be >= 1");
    }
    if (s.trials > max_retained_trials) {
        throw InvalidScenario("trials above 10^7 would need a streaming quantile sketch; "
                              "split the run instead");
    }
    if (s.avg_window < 1) {
        throw InvalidScenario("averaging window must be >= 1");
    }
    if (!(s.confidence > 0.0 && s.confidence <= 1.0)) {
        throw InvalidScenario("confidence must lie in (0, 1]");
    }
    if (!std::isfinite(s.bias_correction)) {
        throw InvalidScenario("bias correction must be finite");
    }
    if (s.ta_max_index < 1 || s.ta_max_index > TaCommandAbsolute::max_index) {
        throw InvalidScenario("TA grid size must lie in [1, 3846]");
    }
    try {
        validate(s.error_model);
    } catch (const InvalidArgument& e) {
        throw InvalidScenario(e.what());
    }
    std::visit(PriorValidator{s}, s.toa_prior);
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples)) {
    if (sorted_.empty()) {
        throw InvalidArgument("empirical CDF needs at least one sample");
    }
    std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double x) const {
    const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
    return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double EmpiricalCdf::quantile(double q) const {
    if (!(q > 0.0 && q <= 1.0)) {
        throw InvalidArgument("quantile probability must lie in (0, 1]");
    }
    const auto n = static_cast<double>(sorted_.size());
    auto rank = static_cast<std::size_t>(std::ceil(q * n));
    rank = std::clamp<std::size_t>(rank, 1, sorted_.size());
    return sorted_[rank - 1];
}

std::vector<EmpiricalCdf::Step> EmpiricalCdf::steps() const {
    std::vector<Step> out;
    const auto n = static_cast<double>(sorted_.size());
    for (std::size_t i = 0; i < sorted_.size(); ++i) {
        if (i + 1 < sorted_.size() && sorted_[i + 1] == sorted_[i]) {
            continue;
        }
        out.push_back(Step{sorted_[i], static_cast<double>(i + 1) / n});
    }
    return out;
}

EmpiricalCdf empirical_cdf(std::vector<double> samples) { return EmpiricalCdf(std::move(samples)); }

double quantile(const EmpiricalCdf& cdf, double q) { return cdf.quantile(q); }

double draw_true_toa(const ToaPrior& prior, const TaGrid& grid, RandomStream& rng) {
    struct Drawer {
        const TaGrid& grid;
        RandomStream& rng;

        double operator()(const UniformInSlot& p) const {
            return grid.center(p.center_index) + (rng.uniform() - 0.5) * grid.slot_width;
        }
        double operator()(const UniformInRange& p) const {
            return p.lo + rng.uniform() * (p.hi - p.lo);
        }
        double operator()(const FixedToa& p) const { return p.toa; }
        double operator()(const GridToa& p) const {
            if (p.points == 1) {
                return p.lo;
            }
            auto j = static_cast<int>(rng.uniform() * p.points);
            j = std::min(j, p.points - 1);
            return p.lo + j * ((p.hi - p.lo) / (p.points - 1));
        }
    };
    return std::visit(Drawer{grid, rng}, prior);
}

TaEstimate estimate_toa_from_ta(double true_toa, const ErrorModel& model, int avg_window,
                                const TaGrid& grid, RandomStream& rng) {
    std::int64_t index_sum = 0;
    int saturations = 0;
    for (int k = 0; k < avg_window; ++k) {
        const GridQuantization q = quantize_on_grid(perturb_toa(true_toa, model, rng), grid);
        index_sum += q.index;
        saturations += q.saturation != Saturation::none ? 1 : 0;
    }
    // Averaging indices first keeps symmetric sets (e.g. i-1, i, i+1) exact.
    const double mean_index = static_cast<double>(index_sum) / avg_window;
    return TaEstimate{mean_index * grid.slot_width, saturations};
}

double average_ta(std::span<const TaCommandAbsolute> commands, Numerology n) {
    if (commands.empty()) {
        throw InvalidArgument("cannot average an empty list of TA commands");
    }
    std::int64_t index_sum = 0;
    for (const auto& c : commands) {
        index_sum += c.index();
    }
    const double mean_index = static_cast<double>(index_sum) / static_cast<double>(commands.size());
    return mean_index * timing_constants(n).slot_width;
}

SimResult run_scenario(const Scenario& s, const RunOptions& options) {
    validate(s);

    const auto trials = static_cast<std::size_t>(s.trials);
    const TaGrid grid = s.grid();
    std::vector<double> abs_errors(trials);
    std::vector<double> signed_errors(options.keep_signed_errors ? trials : 0);

    const unsigned workers = resolve_workers(options.workers, s.trials);
    std::vector<std::int64_t> saturations(workers, 0);

    auto run_chunk = [&](unsigned w, Chunk chunk) {
        std::int64_t sat = 0;
        for (std::int64_t t = chunk.begin; t < chunk.end; ++t) {
            RandomStream rng(s.seed, static_cast<std::uint64_t>(t));
            const double tau = draw_true_toa(s.toa_prior, grid, rng);
            const TaEstimate est = estimate_toa_from_ta(tau, s.error_model, s.avg_window, grid, rng);
            const double err = (est.toa - s.bias_correction) - tau;
            abs_errors[static_cast<std::size_t>(t)] = std::abs(err);
            if (options.keep_signed_errors) {
                signed_errors[static_cast<std::size_t>(t)] = err;
            }
            sat += est.saturations;
        }
        saturations[w] = sat;
    };

    if (workers == 1) {
        run_chunk(0, Chunk{0, s.trials});
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> failures(workers);
        const std::int64_t per = s.trials / workers;
        const std::int64_t extra = s.trials % workers;
        std::int64_t begin = 0;
        for (unsigned w = 0; w < workers; ++w) {
            const std::int64_t end = begin + per + (w < extra ? 1 : 0);
            pool.emplace_back([&, w, begin, end] {
                try {
                    run_chunk(w, Chunk{begin, end});
                } catch (...) {
                    failures[w] = std::current_exception();
                }
            });
            begin = end;
        }
        for (auto& th : pool) {
            th.join();
        }
        for (const auto& f : failures) {
            if (f) {
                std::rethrow_exception(f);
            }
        }
    }

    // Summed in trial order so the value is independent of the partition.
    double total = 0.0;
    for (double e : abs_errors) {
        total += e;
    }
    std::int64_t saturation_count = 0;
    for (auto c : saturations) {
        saturation_count += c;
    }

    SimResult r{s.numerology,
                EmpiricalCdf(std::move(abs_errors)),
                s.confidence,
                0.0,
                total / static_cast<double>(trials),
                {},
                saturation_count,
                std::move(signed_errors)};
    r.p_e = r.cdf.quantile(s.confidence);
    for (double q : {0.5, 0.9, 0.99, 0.999, s.confidence}) {
        r.quantiles[q] = r.cdf.quantile(q);
    }
    return r;
}

std::vector<std::pair<int, SimResult>> sweep_avg_windows(const Scenario& base,
                                                         std::span<const int> windows,
                                                         const RunOptions& options) {
    if (windows.empty()) {
        throw InvalidScenario("averaging sweep needs at least one window size");
    }
    for (int k : windows) {
        if (k < 1) {
            throw InvalidScenario("averaging window sizes must be >= 1");
        }
    }
    std::vector<std::pair<int, SimResult>> out;
    out.reserve(windows.size());
    for (int k : windows) {
        Scenario s = base;
        s.avg_window = k;
        out.emplace_back(k, run_scenario(s, options));
    }
    return out;
}

}  // namespace nrsync
