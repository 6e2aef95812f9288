#pragma once

#include <array>
#include <cstdint>

namespace dpre {

// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32(PhiloxCounter ctr, PhiloxKey key);

std::uint64_t splitmix64(std::uint64_t x);

// Purpose tags keep independent random sources apart under one user seed.
enum class Purpose : std::uint32_t {
    field = 1,
    tilted = 2,
    spine_walk = 3,
    spine_tilt = 4,
    resample = 5,
    walk_pair = 6,
    weights = 7,
};

PhiloxKey derive_key(std::uint64_t seed, Purpose purpose);

// Two open-interval uniforms extracted from one Philox block.
struct UniformPair {
    double u1;
    double u2;
};

double to_unit_open(std::uint32_t hi, std::uint32_t lo);

UniformPair uniforms_at(const PhiloxKey& key, std::uint32_t c0, std::uint32_t c1,
                        std::uint64_t c23);

// Sequential stream over counters (c0, c1, i) for i = 0, 1, 2, ...
class CounterStream {
public:
    CounterStream(std::uint64_t seed, Purpose purpose, std::uint32_t c0, std::uint32_t c1);

    UniformPair next_pair();
    double uniform();
    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);

private:
    PhiloxKey key_;
    std::uint32_t c0_;
    std::uint32_t c1_;
    std::uint64_t index_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace dpre
