#pragma once

#include <cstdint>
#include <vector>

#include "dpre/env_laws.hpp"
#include "dpre/field.hpp"
#include "dpre/polymer.hpp"
#include "dpre/walk_laws.hpp"

namespace dpre {

struct DoobStep {
    int k = 0;
    double overlap = 0.0;      // I_k
    double log_ratio = 0.0;    // log(W_k / W_{k-1}), realised
    double cond_log = 0.0;     // E[log(W_k / W_{k-1}) | F_{k-1}], estimated
    double cond_log_se = 0.0;
    double M = 0.0;
    double J = 0.0;            // J_k, realised
    double cond_dJ = 0.0;      // E[J_k - J_{k-1} | F_{k-1}], estimated
    double cond_dJ_se = 0.0;
    double A = 0.0;
    double N = 0.0;
    // Lower bounds on A_k - A_{k-1}: the three-term bound and (chi g0(0) - 1) I - C I^{3/2}.
    double rough_bound = 0.0;
    double lafete_bound = 0.0;
    bool jensen_ok = true;      // cond_log <= 4 SE
    bool aincrement_ok = true;  // checked only when I_k <= delta
};

struct DoobOptions {
    int n0 = 1;             // Green function truncation level
    double delta = 1.0;     // A-increment bound checked on steps with I_k <= delta
    double C = -1.0;        // negative: calibrate
    int workers = 1;
};

struct DoobTrace {
    double beta = 0.0;
    int n = 0;
    int n0 = 0;
    std::size_t resamples = 0;
    double g0_origin = 0.0;
    double C = 0.0;
    double C_bruteforce = 0.0;
    double C_analytic = 0.0;
    double delta = 0.0;
    double J0 = 0.0;
    std::vector<DoobStep> steps;  // k = 1..n
    bool jensen_ok = true;
    bool aincrement_ok = true;
};

// Exact conditional means by enumerating every row for finite-support
// environments on small instances: C = max over steps of the observed gap
// ((chi g0(0) - 1) I - dA) / I^{3/2}. Returns 0 when enumeration is impossible.
double calibrate_aincrement_constant(const WalkLaw& walk, const EnvLaw& env, double beta, int n0,
                                     int instances, int n_max, std::uint64_t seed);

// 4 chi n0 + 2 |chi_3|: bounds both correction terms of the three-term display by I^{3/2}.
double analytic_aincrement_constant(const EnvLaw& env, double beta, int n0);

DoobTrace doob_decompose(const FieldFn& omega, const WalkLaw& walk, const EnvLaw& env,
                         double beta, int n, std::size_t resamples, std::uint64_t seed,
                         const DoobOptions& opts = {});

}  // namespace dpre
