#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dpre/env_laws.hpp"
#include "dpre/renewal.hpp"
#include "dpre/walk_laws.hpp"

namespace dpre {

struct PinningState {
    double beta = 0.0;
    int n = 0;
    std::vector<double> omega_hat;  // index k-1
    std::vector<double> Z;          // free, index 0..n
    std::vector<double> Zc;         // endpoint-constrained, index 0..n
    // Z_n recomputed as sum_t Zc_t P(tau_1 > n - t); differs from Z by truncation only.
    std::vector<double> Z_survival;
};

// Renewal recursion on a fixed tilted sequence; n <= horizon of the law.
PinningState pinning_partition(const RenewalLaw& law, const EnvLaw& env, double beta,
                               const std::vector<double>& omega_hat);
// Draws omega_hat i.i.d. from the tilted law at beta.
PinningState pinning_partition(const RenewalLaw& law, const EnvLaw& env, double beta, int n,
                               std::uint64_t seed, std::uint32_t stream = 0);

// Zc_n by summing over every pair of n-step paths; tiny n only.
double pinning_bruteforce_constrained(const WalkLaw& walk, const EnvLaw& env, double beta,
                                      const std::vector<double>& omega_hat);
double pinning_bruteforce_free(const WalkLaw& walk, const EnvLaw& env, double beta,
                               const std::vector<double>& omega_hat);

struct AnnealedReport {
    int n = 0;
    double mc_mean = 0.0;
    double mc_se = 0.0;
    double annealed = 0.0;  // recursion with weight 1 + chi(beta)
    double z_score = 0.0;
};

// E over omega_hat of Zc_n against the annealed recursion.
AnnealedReport annealed_check(const RenewalLaw& law, const EnvLaw& env, double beta, int n,
                              std::size_t samples, std::uint64_t seed, int workers = 1);

struct ConstrainedMoments {
    double gamma = 0.0;
    double beta = 0.0;
    std::vector<double> B;         // B_a = E_hat[(Zc_a)^gamma]^{1/gamma}, a = 0..a_max
    std::vector<double> B_se;
    std::vector<double> annealed;  // E_hat[Zc_a], an upper bound on B_a
    std::size_t samples = 0;
};

ConstrainedMoments constrained_fractional_moments(const RenewalLaw& law, const EnvLaw& env,
                                                  double beta, double gamma, int a_max,
                                                  std::size_t samples, std::uint64_t seed,
                                                  int workers = 1);

struct SizeBiasLinkReport {
    int n = 0;
    double Z = 0.0;        // Z_n(omega_hat) from the recursion
    double mc_mean = 0.0;  // average of W_n over base fields and spine paths, tilts frozen
    double mc_se = 0.0;
    double z_score = 0.0;
};

SizeBiasLinkReport size_bias_link_check(const WalkLaw& walk, const EnvLaw& env, double beta,
                                        const std::vector<double>& omega_hat, int renewal_horizon,
                                        std::size_t samples, std::uint64_t seed, int workers = 1);

struct ChangeOfMeasure {
    double beta2 = 0.0;
    double beta = 0.0;   // beta_2 + 1/m^2
    double m = 0.0;
    double epsilon = 0.0;  // (m log m)^{-1/2}
    double gamma = 0.0;    // 1 - 1/log m
    double tilt_mean = 0.0;     // E_hat[g], exact
    double tilt_mean_mc = 0.0;  // Monte Carlo check
    double tilt_mean_se = 0.0;
    double penalty = 0.0;       // (1-gamma)/gamma log E_hat[g^{-gamma/(1-gamma)}]
    double curvature = 0.0;     // sup of lambda'' on [beta - eps, beta + gamma eps/(1-gamma)]
    double penalty_bound = 0.0; // curvature * m eps^2 / (1 - gamma)
};

// Refuses beta2 = 0 and m < 2; m must also exceed e so that gamma > 0.
ChangeOfMeasure change_of_measure_diagnostic(const EnvLaw& env, double beta2, double m,
                                             std::size_t mc_samples = 0, std::uint64_t seed = 0);

std::string pinning_table(const PinningState& state);

}  // namespace dpre
