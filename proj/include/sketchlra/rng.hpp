#ifndef SKETCHLRA_RNG_HPP
#define SKETCHLRA_RNG_HPP

#include <cstdint>
#include <cmath>
#include <string_view>

namespace sketchlra {

// Counter-based generator (Philox4x32-10). A draw is a pure function of
// (seed, stream_id, counter), so parallel workers can share a seed and
// partition work by stream without coordination, and any draw can be
// recomputed by index.
class RngStream {
public:
    static constexpr std::string_view algorithm_tag = "philox4x32-10";

    RngStream() = default;
    RngStream(std::uint64_t seed, std::uint64_t stream_id = 0)
        : seed_(seed), stream_(stream_id) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    // independent child stream; deterministic in (stream_id, sub)
    RngStream fork(std::uint64_t sub) const {
        return RngStream(seed_, mix64(stream_ ^ (0x9E3779B97F4A7C15ull + sub)));
    }

    // random access draws (do not advance internal counter)
    std::uint64_t u64_at(std::uint64_t ctr) const;
    double uniform_at(std::uint64_t ctr) const {   // [0,1)
        return static_cast<double>(u64_at(ctr) >> 11) * 0x1p-53;
    }
    double normal_at(std::uint64_t ctr) const {    // standard normal, Box-Muller
        const double u1 = static_cast<double>((u64_at(2 * ctr) >> 11) + 1) * 0x1p-53;
        const double u2 = uniform_at(2 * ctr + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    // sequential convenience
    std::uint64_t next_u64() { return u64_at(ctr_++); }
    double next_uniform() { return uniform_at(ctr_++); }
    double next_normal() { return normal_at(ctr_++); }
    // uniform integer in [0, bound) by rejection
    std::uint64_t next_index(std::uint64_t bound);
    double next_sign() { return (next_u64() & 1) ? 1.0 : -1.0; }

private:
    static std::uint64_t mix64(std::uint64_t x) {
        x ^= x >> 30; x *= 0xBF58476D1CE4E5B9ull;
        x ^= x >> 27; x *= 0x94D049BB133111EBull;
        x ^= x >> 31;
        return x;
    }

    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    std::uint64_t ctr_ = 0;
};

} // namespace sketchlra

#endif
