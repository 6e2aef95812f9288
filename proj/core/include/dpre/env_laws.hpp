#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "dpre/rng.hpp"

namespace dpre {

enum class EnvFamily { gaussian, rademacher, shifted_exponential, tabulated };

std::string family_name(EnvFamily f);
EnvFamily family_from_name(const std::string& name);

// Open interval (lo, hi) of inverse temperatures with finite log-mgf.
struct BetaDomain {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    bool contains(double beta) const { return beta > lo && beta < hi; }
};

// Standardised i.i.d. site law: mean 0, variance 1.
class EnvLaw {
public:
    static EnvLaw gaussian();
    static EnvLaw rademacher();
    // omega = E - 1 with E ~ Exp(1); lambda is finite only for beta < 1.
    static EnvLaw shifted_exponential();
    static EnvLaw tabulated(std::vector<double> values, std::vector<double> probs);

    EnvFamily family() const { return family_; }
    const BetaDomain& domain() const { return domain_; }
    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& probs() const { return probs_; }

    // Throws DomainError naming the boundary.
    void check_domain(double beta) const;

    double lambda(double beta) const;
    double lambda_prime(double beta) const;
    double lambda_second(double beta) const;

    // chi(beta) = exp(lambda(2 beta) - 2 lambda(beta)) - 1.
    double chi(double beta) const;
    // chi_3(beta) = E[(exp(beta omega - lambda(beta)) - 1)^3].
    double chi3(double beta) const;

    // One draw from a pair of open uniforms.
    double sample(const UniformPair& u) const;
    // One draw from the exponentially tilted law at beta.
    double sample_tilted(double beta, const UniformPair& u) const;

private:
    EnvLaw() = default;

    EnvFamily family_ = EnvFamily::gaussian;
    BetaDomain domain_;
    std::vector<double> values_;
    std::vector<double> probs_;
    std::vector<double> cdf_;
};

// Draws i = 0..count-1 from the tilted law; draw i depends on (seed, i) only.
std::vector<double> tilted_sample(const EnvLaw& law, double beta, std::size_t count,
                                  std::uint64_t seed, std::uint32_t stream = 0);

struct LogMomentReport {
    double mean_log_inv_u = 0.0;  // E[log 1/U]
    double se_log_inv_u = 0.0;
    double mean_log_u_sq = 0.0;   // E[(log U)^2]
    double se_log_u_sq = 0.0;
    double alpha_sq = 0.0;        // sum_i alpha_i^2
    double ratio_log_inv_u = 0.0; // E[log 1/U] / sum alpha^2
    double ratio_log_u_sq = 0.0;  // E[(log U)^2] / sum alpha^2
    std::size_t samples = 0;
};

// U = sum_i alpha_i exp(beta omega_i - lambda(beta)) for i.i.d. omega_i.
LogMomentReport convex_logmoment_check(const EnvLaw& law, const std::vector<double>& weights,
                                       double beta, std::size_t samples, std::uint64_t seed);

std::string env_to_json(const EnvLaw& law);
EnvLaw env_from_json(const std::string& text);

}  // namespace dpre
