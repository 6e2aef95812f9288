#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dpre/env_laws.hpp"
#include "dpre/lattice.hpp"

namespace dpre {

// omega(k, x) for time k >= 1 and site x.
using FieldFn = std::function<double(int, const int*)>;

// 64-bit site label; coordinates must fit 21 bits (d <= 3) or 16 bits (d = 4).
std::uint64_t site_key(int d, const int* x);

// Lazily evaluated environment: the value at (k, x) is a pure function of
// (seed, stream, k, x), so any box or iteration order sees the same numbers.
class CounterField {
public:
    CounterField(const EnvLaw& law, int d, std::uint64_t seed, std::uint32_t stream = 0,
                 Purpose purpose = Purpose::field);
    double operator()(int k, const int* x) const;
    FieldFn fn() const;

private:
    EnvLaw law_;
    int d_;
    PhiloxKey key_;
    std::uint32_t stream_;
};

// Materialised environment on [1, n] x box.
class LatticeField {
public:
    LatticeField() = default;
    LatticeField(int n, const Box& box, std::vector<double> values, std::uint64_t seed,
                 std::uint32_t stream);

    int horizon() const { return n_; }
    const Box& box() const { return box_; }
    std::uint64_t seed() const { return seed_; }
    std::uint32_t stream() const { return stream_; }
    const std::vector<double>& values() const { return values_; }

    // Row k (1-based), row-major over the box.
    double* row(int k) { return values_.data() + static_cast<std::size_t>(k - 1) * box_.size(); }
    const double* row(int k) const {
        return values_.data() + static_cast<std::size_t>(k - 1) * box_.size();
    }
    double at(int k, const int* x) const { return row(k)[box_.index(x)]; }
    FieldFn fn() const;

    // Binary dump: magic "DPREFLD1" then 8-byte little-endian words
    // (n, d, lo_1, hi_1, ..., lo_d, hi_d, seed, stream) then n * |box| doubles.
    void save(const std::string& path) const;
    static LatticeField load(const std::string& path);

private:
    int n_ = 0;
    Box box_;
    std::vector<double> values_;
    std::uint64_t seed_ = 0;
    std::uint32_t stream_ = 0;
};

LatticeField sample_field(const EnvLaw& law, int n, const Box& box, std::uint64_t seed,
                          std::uint32_t stream = 0);

}  // namespace dpre
