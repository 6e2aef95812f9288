#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dpre/env_laws.hpp"
#include "dpre/walk_laws.hpp"

namespace dpre {

// ---- beta_2 ----

struct Beta2Options {
    int horizon = 10000;
    double tol = 1e-9;                 // bisection tolerance on chi(beta) S - 1
    double divergence_increment = 0.05;  // recurrent iff S_H - S_{H/2} exceeds this
};

struct Beta2Result {
    std::string verdict;  // recurrent | positive | inconclusive
    double beta2 = 0.0;
    double series = 0.0;  // S_H
    int horizon = 0;
    std::string method;   // closed-form | kernel
    double late_increment = 0.0;
    double decay_exponent = 0.0;  // fitted decay of the collision terms near H
    double remainder = 0.0;       // bound on sum_{k > H}
    // beta_2 solved with S + remainder; beta_2 lies in [beta2_lower, beta2].
    double beta2_lower = 0.0;
    double chi_times_series = 0.0;
    double tol = 0.0;
    int iterations = 0;
};

Beta2Result beta2(const WalkLaw& walk, const EnvLaw& env, const Beta2Options& opts = {});

// Root of chi(beta) S = 1 on the positive half of the domain.
double solve_chi_equation(const EnvLaw& env, double S, double tol, int* iterations = nullptr);

// ---- very strong disorder certificate ----

struct VsdOptions {
    std::optional<double> theta;
    std::optional<double> K;
    std::optional<double> eta_bar;  // default: 1 for finite support
};

struct VsdCertificate {
    int n = 0;
    int d = 0;
    double eta_bar = 0.0;
    double theta = 0.0;
    double K = 0.0;
    double estimate = 0.0;  // E[W_n^theta]
    double se = 0.0;
    double log_estimate = 0.0;
    double threshold = 0.0;      // 2 n^{-K}
    double log_threshold = 0.0;
    std::string verdict;  // certified | not-certified | underpowered
    std::string note;
    std::size_t fields = 0;
};

VsdCertificate vsd_certificate(const EnvLaw& env, const WalkLaw& walk, double beta, int n,
                               const VsdOptions& opts, std::size_t mc_fields, std::uint64_t seed,
                               int workers = 1);

extern const char* const kStatisticalNote;

// ---- free energy ----

struct FreeEnergyEstimate {
    int n = 0;
    double mean = 0.0;  // mean of (1/n) log W_n
    double se = 0.0;
    double leak = 0.0;
    bool leak_flag = false;
    std::size_t fields = 0;
};

FreeEnergyEstimate free_energy(const EnvLaw& env, const WalkLaw& walk, double beta, int n,
                               std::size_t mc_fields, std::uint64_t seed, int workers = 1,
                               std::optional<int> radius = std::nullopt);

// ---- p* interval ----

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;
    static Rational make(std::int64_t n, std::int64_t d);
    static Rational parse(const std::string& s);  // "3/2" or "2"
    double value() const { return static_cast<double>(num) / static_cast<double>(den); }
    std::string str() const;
    bool operator==(const Rational& o) const { return num == o.num && den == o.den; }
};

struct PstarBounds {
    int d = 0;
    std::string eta;  // "inf" or a rational / decimal
    std::string nu;
    double lower = 0.0;  // 1 + (2 min eta) / d
    double upper = 0.0;  // 1 + 1 / (nu max 1)
    std::string lower_exact;
    std::string upper_exact;
    bool exact = false;
    bool collapsed = false;
    bool ill_defined = false;   // d = 1 and eta > 1
    bool inconsistent = false;  // nu > d / (2 min eta)
    std::string note;
};

// eta = nullopt stands for eta = infinity.
PstarBounds pstar_bounds(std::optional<Rational> eta, Rational nu, int d);
PstarBounds pstar_bounds(double eta, double nu, int d);

// ---- martingale hitting and stopping ----

struct HittingRow {
    double u = 0.0;
    std::size_t hits = 0;
    double p = 0.0;
    double se = 0.0;
    double wilson_lo = 0.0;
    double wilson_hi = 0.0;
    double doob_bound = 0.0;  // 1 / u
    double scaled = 0.0;      // u p
    bool doob_ok = true;
};

struct HittingStats {
    double beta = 0.0;
    int horizon = 0;
    std::size_t replicas = 0;
    std::vector<HittingRow> rows;
    std::vector<double> sup_log_w;  // per replica
    double ratio_spread = 0.0;      // max(u p) / min(u p)
    bool doob_ok = true;
};

HittingStats hitting_statistics(const EnvLaw& env, const WalkLaw& walk, double beta,
                                const std::vector<double>& us, int horizon, std::size_t replicas,
                                std::uint64_t seed, int workers = 1);

struct StoppingReplica {
    int tau_u = -1;   // -1: not reached within the horizon
    int tau_Ku = -1;
    int sigma = -1;   // first n >= tau_u with W_n <= u / K
    double overlap_sum = 0.0;  // sum of I_n over (tau_u, tau_Ku]
    double overlap_max = 0.0;
    double w_at_tau_u = 0.0;
};

struct StoppingStats {
    double beta = 0.0;
    double u = 0.0;
    double K = 0.0;
    int horizon = 0;
    std::size_t replicas = 0;
    std::vector<StoppingReplica> per_replica;
    std::size_t reached_u = 0;
    std::size_t reached_Ku = 0;
    std::size_t dips = 0;  // sigma < tau_Ku <= horizon
    double p_dip = 0.0;
    double p_dip_se = 0.0;
    double dip_bound = 0.0;  // (reached_u / replicas) K^{-2}
    bool dip_ok = true;
    double dip_frequency = 0.0;  // dips among replicas reaching tau_u
    // Quantiles 10/50/90 of the accumulated overlap on (tau_u, tau_Ku].
    double overlap_q10 = 0.0, overlap_q50 = 0.0, overlap_q90 = 0.0;
    double overshoot2 = 0.0, overshoot2_se = 0.0;  // E[(W_{tau_u}/u)^2 | tau_u <= H]
    double overshoot6 = 0.0, overshoot6_se = 0.0;
    bool underpowered = false;
};

StoppingStats stopping_experiment(const EnvLaw& env, const WalkLaw& walk, double beta, double u,
                                  double K, int horizon, std::size_t replicas, std::uint64_t seed,
                                  int workers = 1);

// ---- tower walk demo ----

struct TowerDemo {
    std::vector<std::uint64_t> a;  // a_0..a_4
    double weight_sum = 0.0;       // sum of f over shells 0..4 plus the tail beyond
    bool weight_bound_ok = false;  // <= 5
    int cutoff = 0;
    double truncation_loss = 0.0;
    int N = 0;
    double p_contained = 0.0;  // exact lower bound on P(|X_{2N}| <= N)
    bool containment_ok = false;
    double beta = 0.0;
    std::vector<FreeEnergyEstimate> free_energy;  // on the N_k grid
    bool trend_ok = false;
};

struct TowerDemoOptions {
    int cutoff = 3;
    double beta = 1.0;
    std::size_t fields = 64;
    int radius = 1024;
    std::uint64_t seed = 0;
    int workers = 1;
};

// N_k = ceil(sqrt(a_{k-1})), k = 1..5, duplicates removed.
std::vector<int> tower_grid();
TowerDemo tower_demo(const TowerDemoOptions& opts);

}  // namespace dpre
