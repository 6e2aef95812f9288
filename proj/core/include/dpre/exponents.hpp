#pragma once

#include <cstdint>
#include <limits>
#include <string>

#include "dpre/stats.hpp"
#include "dpre/walk_laws.hpp"

namespace dpre {

struct ExponentFit {
    double value = 0.0;
    LogLogFit fit;
    std::string method;
};

struct WalkExponents {
    double eta = std::numeric_limits<double>::infinity();  // +inf for finite support
    double eta_bar = 1.0;
    LogLogFit eta_fit;  // points == 0 when eta is infinite
    ExponentFit nu;
    ExponentFit alpha;
    int k_lo = 0;
    int k_hi = 0;
    bool transient_difference = false;
    // nu <= alpha + 1 <= d / (2 min eta) with 0.15 slack; reported only.
    bool ordering_ok = true;
    std::string ordering_note;
};

// Regressions use the window [k_lo, k_hi / 2] (top octave dropped).
// alpha comes from the exact renewal when feasible, otherwise from mc_budget
// simulated pairs.
WalkExponents estimate_exponents(const WalkLaw& law, int k_lo, int k_hi, std::size_t mc_budget,
                                 std::uint64_t seed, int workers = 1);

}  // namespace dpre
