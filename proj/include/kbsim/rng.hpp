#ifndef KBSIM_RNG_HPP
#define KBSIM_RNG_HPP

#include <cstdint>

namespace kbsim {

// SplitMix64 stream (Steele/Lea/Flood constants). One instance per
// (seed, replication, purpose) triple so replications can run in parallel
// and still reproduce bit-for-bit on any platform.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

enum class Stream : std::uint64_t {
    Arrival = 1,
    Purchase = 2,
    Policy = 3,
    History = 4,
};

// Derives an independent stream from (base seed, replication index, purpose).
inline RngStream make_stream(std::uint64_t base_seed, std::uint64_t replication, Stream purpose) {
    RngStream mixer(base_seed);
    std::uint64_t a = mixer.next_u64();
    RngStream mixer2(a ^ (0x9E3779B97F4A7C15ULL * (replication + 1)));
    std::uint64_t b = mixer2.next_u64();
    return RngStream(b ^ (0xD1B54A32D192ED03ULL * static_cast<std::uint64_t>(purpose)));
}

} // namespace kbsim

#endif
