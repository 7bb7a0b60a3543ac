#include "fbitw/rng.hpp"

#include "fbitw/numerics.hpp"

namespace fbitw {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t rep, StreamTag tag) {
    std::uint64_t s = mix(seed + kGolden);
    s = mix(s ^ (kGolden * (rep + 1)));
    s = mix(s ^ (kGolden * (static_cast<std::uint64_t>(tag) + 1)));
    state_ = s;
}

std::uint64_t RngStream::next_u64() {
    state_ += kGolden;
    return mix(state_);
}

double RngStream::next_uniform() {
    // 53-bit mantissa, offset by half a ulp so the value stays in (0,1).
    return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
}

double RngStream::next_normal() {
    return normal_quantile(next_uniform());
}

}  // namespace fbitw
