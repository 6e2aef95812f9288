#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpre/walk_laws.hpp"

namespace dpre {

// Interarrival law of a (possibly defective) renewal process on horizon [1, H].
struct RenewalLaw {
    std::vector<double> K;         // K[n-1] = P(tau_1 = n)
    std::vector<double> K_se;      // Monte Carlo standard errors; empty for exact modes
    std::vector<double> survival;  // survival[n] = P(tau_1 > n), n = 0..H
    double defect = 0.0;           // P(tau_1 > H)
    double defect_se = 0.0;
    // Upper bound 1 / (1 + sum_{n<=H} u_n) on P(tau_1 = infinity); exact modes only.
    double escape_upper = 0.0;
    std::string mode;  // taboo | deconvolution | mc | geometric | table
    std::size_t samples = 0;

    int horizon() const { return static_cast<int>(K.size()); }
    double k_at(int n) const { return n >= 1 && n <= horizon() ? K[static_cast<std::size_t>(n - 1)] : 0.0; }
};

// First meeting time of two independent copies of `walk`.
// mode: "exact" (taboo or deconvolution, whichever is feasible), "taboo",
// "deconvolution", "mc".
RenewalLaw intersection_renewal(const WalkLaw& walk, int horizon, const std::string& mode = "exact",
                                std::size_t mc_budget = 0, std::uint64_t seed = 0,
                                int workers = 1);

// K(n) = (1 - q) q^{n-1}.
RenewalLaw geometric_renewal(double q, int horizon);
// User-supplied K(1..H); the remaining mass is the defect.
RenewalLaw renewal_from_table(std::vector<double> K, double tolerance = 1e-12);

// K''(n) = factor * K(n), e.g. factor = 1 + chi(beta_2).
std::vector<double> tilted_interarrival(const RenewalLaw& law, double factor);

// u_m = P(m in tau), m = 0..n, by renewal convolution.
std::vector<double> renewal_mass(const RenewalLaw& law, int n);

struct CountBoundReport {
    int n = 0;
    int k = 0;
    double lhs = 0.0;       // P(|tau cap [1, n]| <= k) = P(tau_{k+1} > n)
    double lhs_se = 0.0;
    double alpha_n = 0.0;   // E[tau_1 min n]
    double rhs = 0.0;       // (k + 1) alpha_n / n
    double expected_count = 0.0;  // E|tau cap [1, n]|
    double count_cap = 0.0;       // min(1 / P(tau_1 > n), n)
    bool holds = false;
    bool count_ok = false;
    std::string mode;
};

// Refuses laws whose defect exceeds 0.05.
CountBoundReport renewal_count_bound_check(const RenewalLaw& law, int n, int k);

std::string renewal_table(const RenewalLaw& law);

}  // namespace dpre
