#include "sketchlra/rng.hpp"

namespace sketchlra {

namespace {

inline void philox_round(std::uint32_t& c0, std::uint32_t& c1,
                         std::uint32_t& c2, std::uint32_t& c3,
                         std::uint32_t k0, std::uint32_t k1) {
    const std::uint64_t p0 = 0xD2511F53ull * c0;
    const std::uint64_t p1 = 0xCD9E8D57ull * c2;
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    c0 = hi1 ^ c1 ^ k0;
    c1 = lo1;
    c2 = hi0 ^ c3 ^ k1;
    c3 = lo0;
}

} // namespace

std::uint64_t RngStream::u64_at(std::uint64_t ctr) const {
    // counter block = (ctr, stream), key = seed; 10 rounds
    std::uint32_t c0 = static_cast<std::uint32_t>(ctr);
    std::uint32_t c1 = static_cast<std::uint32_t>(ctr >> 32);
    std::uint32_t c2 = static_cast<std::uint32_t>(stream_);
    std::uint32_t c3 = static_cast<std::uint32_t>(stream_ >> 32);
    std::uint32_t k0 = static_cast<std::uint32_t>(seed_);
    std::uint32_t k1 = static_cast<std::uint32_t>(seed_ >> 32);
    for (int r = 0; r < 10; ++r) {
        philox_round(c0, c1, c2, c3, k0, k1);
        k0 += 0x9E3779B9u;
        k1 += 0xBB67AE85u;
    }
    return (static_cast<std::uint64_t>(c0) << 32) | c1;
}

std::uint64_t RngStream::next_index(std::uint64_t bound) {
    if (bound <= 1) return 0;
    const std::uint64_t lim = ~0ull - ~0ull % bound;
    std::uint64_t x;
    do { x = next_u64(); } while (x >= lim);
    return x % bound;
}

} // namespace sketchlra
