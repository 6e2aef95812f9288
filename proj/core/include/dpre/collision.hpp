#pragma once

#include <string>
#include <vector>

#include "dpre/walk_laws.hpp"

namespace dpre {

// P(S_{2n} = 0) for the simple walk on Z^d, n = 0..n_max, d in {1, 2, 3}.
// d = 3 uses the three-term recurrence of the cubic-lattice closed-walk counts.
std::vector<double> simple_return_probabilities(int d, int n_max);

// Per-step collision probabilities and sup norms from one streaming pass of
// kernel iteration; nothing but the current step is kept in memory.
struct KernelSummary {
    std::vector<double> collision;  // index k-1
    std::vector<double> sup;        // index k-1
    std::vector<double> loss;       // index k-1
};

KernelSummary kernel_summaries(const WalkLaw& law, int k_max, const KernelOptions& opts = {});

// c_k = P(X_k = X'_k) for k = 1..horizon.
struct CollisionSeries {
    std::vector<double> terms;
    std::string method;  // "closed-form" or "kernel"

    int horizon() const { return static_cast<int>(terms.size()); }
    // S_m = c_1 + ... + c_m, compensated summation.
    double partial_sum(int m) const;
};

// Simple walks in d <= 3 take the closed form; anything else iterates kernels.
CollisionSeries collision_series(const WalkLaw& law, int horizon);

// Neumaier-compensated sum.
class CompensatedSum {
public:
    void add(double x);
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace dpre
