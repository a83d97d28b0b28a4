#pragma once

#include <cstdint>
#include <optional>

namespace nrsync {

/// Counter-based pseudo-random stream.
///
/// Output k of stream (seed, stream_id) depends only on those two values and
/// k, so trial i can own stream_id = i and see the same numbers no matter how
/// trials are partitioned across workers. Normals come from the Marsaglia
/// polar method with a logarithm built from IEEE basic operations only, which
/// keeps sequences bit-identical wherever doubles are IEEE-754 binary64 and
/// FMA contraction is disabled.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double standard_normal();

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::optional<double> spare_normal_;
};

/// Natural logarithm using only +, -, *, / and frexp/ldexp. Accurate to a few
/// ulp for positive finite x; returns -inf for 0 and NaN for negatives.
double portable_log(double x);

}  // namespace nrsync
