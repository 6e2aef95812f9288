#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dpre/env_laws.hpp"
#include "dpre/field.hpp"
#include "dpre/walk_laws.hpp"

namespace dpre {

enum class BoxPolicy { enlarge, reject };

struct SpineOptions {
    BoxPolicy policy = BoxPolicy::enlarge;
    // Hard-wall radius for the polymer evolved on the composed field; default n * reach.
    std::optional<int> radius;
    int max_retries = 100;
};

// Base field off the spine, tilted values on it. Sources: base field
// (Purpose::field), spine steps (Purpose::spine_walk), tilts (Purpose::spine_tilt),
// all keyed by (seed, replica).
class SpineSample {
public:
    int horizon() const { return n_; }
    const std::vector<Point>& path() const { return path_; }     // X_0..X_n
    const std::vector<double>& tilts() const { return tilts_; }  // omega_hat_k, index k-1
    std::uint64_t seed() const { return seed_; }
    std::uint32_t replica() const { return replica_; }
    int attempts() const { return attempts_; }
    int radius() const { return radius_; }

    double base(int k, const int* x) const { return base_(k, x); }
    double operator()(int k, const int* x) const;
    FieldFn composed() const;

private:
    friend SpineSample spine_sample(const EnvLaw&, const WalkLaw&, double, int, std::uint64_t,
                                    std::uint32_t, const SpineOptions&);
    SpineSample(CounterField base) : base_(std::move(base)) {}
    CounterField base_;
    int n_ = 0;
    int d_ = 0;
    std::vector<Point> path_;
    std::vector<double> tilts_;
    std::uint64_t seed_ = 0;
    std::uint32_t replica_ = 0;
    int attempts_ = 1;
    int radius_ = 0;
};

SpineSample spine_sample(const EnvLaw& env, const WalkLaw& walk, double beta, int n,
                         std::uint64_t seed, std::uint32_t replica, const SpineOptions& opts = {});

// Sigma_n = sum_{k<=n} sum_x p_k(x)^2.
struct SigmaSeries {
    std::vector<double> partial;  // index n-1
    // S_{2h} - S_h over the last half of the horizon.
    double late_increment = 0.0;
    bool diverging = false;       // late increment above 0.05

    double at(int n) const { return partial[static_cast<std::size_t>(n - 1)]; }
};

SigmaSeries sigma_series(const WalkLaw& walk, int n);

struct RnValue {
    double R = 0.0;
    double Sigma = 0.0;
};

// R_n = sum_k sum_x p_k(x) omega_{k,x}.
RnValue rn_observable(const FieldFn& omega, const KernelTable& kernels, int n);

using FieldFunctional = std::function<double(const FieldFn&)>;
using FieldPredicate = std::function<bool(const FieldFn&)>;

struct SizeBiasReport {
    double spine_mean = 0.0;
    double spine_se = 0.0;
    double direct_mean = 0.0;  // E[W_n f(omega)]
    double direct_se = 0.0;
    double z_score = 0.0;
    std::size_t samples = 0;
};

// Compares the spine mean of f(omega~) with E[W_n f(omega)] from plain fields.
SizeBiasReport size_bias_check(const EnvLaw& env, const WalkLaw& walk, double beta, int n,
                               const FieldFunctional& f, std::size_t samples,
                               std::uint64_t seed, int workers = 1,
                               const SpineOptions& opts = {});

struct FractionalEventReport {
    double theta = 0.0;
    int n = 0;
    double p_event = 0.0;  // P(A)
    double p_event_se = 0.0;
    double p_tilde_complement = 0.0;  // P~_n(A^c)
    double p_tilde_complement_se = 0.0;
    double bound = 0.0;  // P(A)^{1-theta} + P~(A^c)^theta
    double bound_se = 0.0;
    double direct = 0.0;  // E[W_n^theta]
    double direct_se = 0.0;
    bool holds = false;   // direct <= bound + 4 combined SE
    std::size_t fields = 0;
    std::size_t spines = 0;
};

FractionalEventReport fractional_event_bound(const EnvLaw& env, const WalkLaw& walk, double beta,
                                             int n, double theta, const FieldPredicate& event,
                                             std::size_t mc_fields, std::size_t mc_spines,
                                             std::uint64_t seed, int workers = 1);

// A_n = {R_n >= Sigma_n^{3/4}}.
FieldPredicate rn_event(std::shared_ptr<const KernelTable> kernels, int n);

struct StrongDisorderRow {
    int n = 0;
    double sigma = 0.0;
    double chebyshev = 0.0;  // Sigma_n^{-1/2}
    FractionalEventReport report;
};

struct StrongDisorderDemo {
    double beta = 0.0;
    double theta = 0.0;
    std::vector<StrongDisorderRow> rows;
    bool p_event_decreasing = false;
    bool chebyshev_ok = false;
};

// Refuses walks whose collision series stops growing (transient difference walk).
StrongDisorderDemo strong_disorder_demo(const EnvLaw& env, const WalkLaw& walk, double beta,
                                        const std::vector<int>& n_grid, double theta,
                                        std::size_t mc_fields, std::size_t mc_spines,
                                        std::uint64_t seed, int workers = 1);

}  // namespace dpre
