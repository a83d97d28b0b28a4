#include "nrsync/random_stream.hpp"

#include <cmath>
#include <limits>

namespace nrsync {

namespace {

constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;

// rrmxmx (Pelle Evensen); a stronger finalizer than the splitmix64 one.
std::uint64_t mix(std::uint64_t v) {
    v ^= (v >> 49) ^ (v >> 24);
    v *= 0x9fb21c651e98df25ULL;
    v ^= v >> 28;
    v *= 0x9fb21c651e98df25ULL;
    return v ^ (v >> 28);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), key_(mix(mix(seed) ^ mix(stream_id + golden_gamma))) {}

std::uint64_t RandomStream::next_u64() {
    ++counter_;
    return mix(key_ + counter_ * golden_gamma);
}

double RandomStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::standard_normal() {
    if (spare_normal_) {
        const double z = *spare_normal_;
        spare_normal_.reset();
        return z;
    }
    double u = 0.0;
    double v = 0.0;
    double s = 0.0;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * portable_log(s) / s);
    spare_normal_ = v * f;
    return u * f;
}

double portable_log(double x) {
    if (std::isnan(x) || x < 0.0) {
        return std::numeric_limits<double>::quiet_NaN();
    }
    if (x == 0.0) {
        return -std::numeric_limits<double>::infinity();
    }
    if (std::isinf(x)) {
        return x;
    }

    // x = m * 2^e with m in [sqrt(1/2), sqrt(2)); ln m = 2 atanh((m-1)/(m+1)).
    int e = 0;
    double m = std::frexp(x, &e);
    if (m < 0.70710678118654752440) {
        m *= 2.0;
        --e;
    }
    const double s = (m - 1.0) / (m + 1.0);
    const double s2 = s * s;

    // |s| <= 0.1716, so terms past s^23 are below 2^-53 relative.
    double series = 1.0 / 23.0;
    for (int k = 21; k >= 1; k -= 2) {
        series = series * s2 + 1.0 / k;
    }
    const double ln_m = 2.0 * s * series;

    constexpr double ln2_hi = 6.93147180369123816490e-01;
    constexpr double ln2_lo = 1.90821492927058770002e-10;
    const double de = static_cast<double>(e);
    return de * ln2_hi + (de * ln2_lo + ln_m);
}

}  // namespace nrsync
