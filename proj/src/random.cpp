#include "softcon/random.hpp"

#include <cmath>
#include <vector>

namespace softcon {

namespace {

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

std::mt19937_64 seeded_engine(std::initializer_list<std::uint64_t> words) {
    std::vector<std::uint32_t> parts;
    for (auto w : words) {
        parts.push_back(static_cast<std::uint32_t>(w & 0xffffffffu));
        parts.push_back(static_cast<std::uint32_t>(w >> 32));
    }
    std::seed_seq seq(parts.begin(), parts.end());
    return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : engine_(seeded_engine({seed})) {}

RngStream RngStream::derive(std::uint64_t seed, std::string_view label, std::uint64_t index) {
    RngStream stream(0);
    stream.engine_ = seeded_engine({seed, fnv1a(label), index});
    return stream;
}

double RngStream::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::standard_normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
}

}  // namespace softcon
