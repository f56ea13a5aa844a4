#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace softcon {

/// Seeded random stream with a platform-independent standard normal generator.
///
/// std::normal_distribution is implementation-defined, so normals are produced
/// here with the Marsaglia polar method on top of mt19937_64, whose output
/// sequence is fixed by the standard. Streams are plain values; copy one to
/// fork an identical sequence.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed);

    /// Independent sub-stream keyed by (seed, label, index).
    static RngStream derive(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double standard_normal();

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace softcon
