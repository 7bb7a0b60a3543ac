#pragma once

#include <cstdint>

namespace fbitw {

// Purpose tags keep draws for different model pieces on independent streams,
// so replication k is identical regardless of which methods run or in which
// order replications are scheduled.
enum class StreamTag : std::uint64_t {
    Factors = 1,
    Loadings = 2,
    Noise = 3,
    Treatment = 4,
    Aux = 5,
};

// SplitMix64 stream keyed by (seed, replication, tag). Normal draws use the
// inverse-CDF applied to the uniform stream.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t rep, StreamTag tag);

    std::uint64_t next_u64();
    double next_uniform();  // strictly inside (0,1)
    double next_normal();   // standard normal via inverse CDF

private:
    std::uint64_t state_;
};

}  // namespace fbitw
