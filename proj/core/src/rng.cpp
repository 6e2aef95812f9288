#include "dpre/rng.hpp"

namespace dpre {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(p >> 32);
    lo = static_cast<std::uint32_t>(p);
}

}  // namespace

PhiloxCounter philox4x32(PhiloxCounter c, PhiloxKey k) {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        mulhilo(kM0, c[0], hi0, lo0);
        mulhilo(kM1, c[2], hi1, lo1);
        c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
        k[0] += kW0;
        k[1] += kW1;
    }
    return c;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

PhiloxKey derive_key(std::uint64_t seed, Purpose purpose) {
    const std::uint64_t h =
        splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(purpose) * 0xA24BAED4963EE407ull));
    return {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
}

double to_unit_open(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

UniformPair uniforms_at(const PhiloxKey& key, std::uint32_t c0, std::uint32_t c1,
                        std::uint64_t c23) {
    const PhiloxCounter out = philox4x32(
        {c0, c1, static_cast<std::uint32_t>(c23), static_cast<std::uint32_t>(c23 >> 32)}, key);
    return {to_unit_open(out[0], out[1]), to_unit_open(out[2], out[3])};
}

CounterStream::CounterStream(std::uint64_t seed, Purpose purpose, std::uint32_t c0,
                             std::uint32_t c1)
    : key_(derive_key(seed, purpose)), c0_(c0), c1_(c1) {}

UniformPair CounterStream::next_pair() {
    has_spare_ = false;
    return uniforms_at(key_, c0_, c1_, index_++);
}

double CounterStream::uniform() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const UniformPair p = uniforms_at(key_, c0_, c1_, index_++);
    spare_ = p.u2;
    has_spare_ = true;
    return p.u1;
}

std::uint64_t CounterStream::below(std::uint64_t n) {
    if (n <= 1) return 0;
    const auto v = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    return v < n ? v : n - 1;
}

}  // namespace dpre
