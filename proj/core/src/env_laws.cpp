#include "dpre/env_laws.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "dpre/errors.hpp"
#include "dpre/stats.hpp"

namespace dpre {

namespace {

double log_sum_exp(const std::vector<double>& a) {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : a) m = std::max(m, v);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double v : a) s += std::exp(v - m);
    return m + std::log(s);
}

// Tilted weights w_i proportional to p_i exp(beta v_i).
std::vector<double> tilted_weights(const std::vector<double>& v, const std::vector<double>& p,
                                   double beta) {
    std::vector<double> lw(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) lw[i] = std::log(p[i]) + beta * v[i];
    const double z = log_sum_exp(lw);
    for (double& x : lw) x = std::exp(x - z);
    return lw;
}

std::size_t inverse_cdf(const std::vector<double>& cdf, double u) {
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    return static_cast<std::size_t>(
        std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
}

}  // namespace

std::string family_name(EnvFamily f) {
    switch (f) {
        case EnvFamily::gaussian: return "gaussian";
        case EnvFamily::rademacher: return "rademacher";
        case EnvFamily::shifted_exponential: return "shifted-exponential";
        case EnvFamily::tabulated: return "tabulated";
    }
    return "unknown";
}

EnvFamily family_from_name(const std::string& name) {
    if (name == "gaussian") return EnvFamily::gaussian;
    if (name == "rademacher") return EnvFamily::rademacher;
    if (name == "shifted-exponential") return EnvFamily::shifted_exponential;
    if (name == "tabulated") return EnvFamily::tabulated;
    throw ValidationError("unknown environment family '" + name +
                          "' (expected gaussian, rademacher, shifted-exponential, tabulated)");
}

EnvLaw EnvLaw::gaussian() {
    EnvLaw e;
    e.family_ = EnvFamily::gaussian;
    return e;
}

EnvLaw EnvLaw::rademacher() {
    EnvLaw e;
    e.family_ = EnvFamily::rademacher;
    e.values_ = {-1.0, 1.0};
    e.probs_ = {0.5, 0.5};
    return e;
}

EnvLaw EnvLaw::shifted_exponential() {
    EnvLaw e;
    e.family_ = EnvFamily::shifted_exponential;
    e.domain_.hi = 1.0;
    return e;
}

EnvLaw EnvLaw::tabulated(std::vector<double> values, std::vector<double> probs) {
    if (values.empty() || values.size() != probs.size())
        throw ValidationError("tabulated law needs matching nonempty values and probs");
    double total = 0.0, mean = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!(probs[i] > 0.0) || !std::isfinite(values[i]))
            throw ValidationError("tabulated law needs positive probabilities and finite values");
        total += probs[i];
        mean += probs[i] * values[i];
    }
    if (std::abs(total - 1.0) > 1e-12) throw ValidationError("tabulated probabilities must sum to 1");
    double var = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) var += probs[i] * values[i] * values[i];
    var -= mean * mean;
    if (std::abs(mean) > 1e-10 || std::abs(var - 1.0) > 1e-10) {
        std::ostringstream os;
        os << "tabulated law must be standardised (mean " << mean << ", variance " << var << ")";
        throw ValidationError(os.str());
    }
    EnvLaw e;
    e.family_ = EnvFamily::tabulated;
    e.values_ = std::move(values);
    e.probs_ = std::move(probs);
    double acc = 0.0;
    for (double p : e.probs_) e.cdf_.push_back(acc += p);
    e.cdf_.back() = 1.0;
    return e;
}

void EnvLaw::check_domain(double beta) const {
    if (!std::isfinite(beta)) throw DomainError("beta must be finite");
    if (!domain_.contains(beta)) {
        std::ostringstream os;
        os << "beta = " << beta << " outside the finite log-mgf domain of " << family_name(family_)
           << " (beta must be < " << domain_.hi << ")";
        throw DomainError(os.str());
    }
}

double EnvLaw::lambda(double beta) const {
    check_domain(beta);
    switch (family_) {
        case EnvFamily::gaussian: return 0.5 * beta * beta;
        case EnvFamily::rademacher: {
            const double a = std::abs(beta);
            return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
        }
        case EnvFamily::shifted_exponential: return -beta - std::log1p(-beta);
        case EnvFamily::tabulated: {
            std::vector<double> lw(values_.size());
            for (std::size_t i = 0; i < values_.size(); ++i)
                lw[i] = std::log(probs_[i]) + beta * values_[i];
            return log_sum_exp(lw);
        }
    }
    return 0.0;
}

double EnvLaw::lambda_prime(double beta) const {
    check_domain(beta);
    switch (family_) {
        case EnvFamily::gaussian: return beta;
        case EnvFamily::rademacher: return std::tanh(beta);
        case EnvFamily::shifted_exponential: return beta / (1.0 - beta);
        case EnvFamily::tabulated: {
            const auto w = tilted_weights(values_, probs_, beta);
            double m = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) m += w[i] * values_[i];
            return m;
        }
    }
    return 0.0;
}

double EnvLaw::lambda_second(double beta) const {
    check_domain(beta);
    switch (family_) {
        case EnvFamily::gaussian: return 1.0;
        case EnvFamily::rademacher: {
            const double t = std::tanh(beta);
            return 1.0 - t * t;
        }
        case EnvFamily::shifted_exponential: return 1.0 / ((1.0 - beta) * (1.0 - beta));
        case EnvFamily::tabulated: {
            const auto w = tilted_weights(values_, probs_, beta);
            double m = 0.0, m2 = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) {
                m += w[i] * values_[i];
                m2 += w[i] * values_[i] * values_[i];
            }
            return m2 - m * m;
        }
    }
    return 0.0;
}

double EnvLaw::chi(double beta) const {
    return std::expm1(lambda(2.0 * beta) - 2.0 * lambda(beta));
}

double EnvLaw::chi3(double beta) const {
    const double l1 = lambda(beta);
    return std::exp(lambda(3.0 * beta) - 3.0 * l1) - 3.0 * std::exp(lambda(2.0 * beta) - 2.0 * l1) +
           2.0;
}

double EnvLaw::sample(const UniformPair& u) const {
    switch (family_) {
        case EnvFamily::gaussian:
            return std::sqrt(-2.0 * std::log(u.u1)) * std::cos(2.0 * std::numbers::pi * u.u2);
        case EnvFamily::rademacher: return u.u1 < 0.5 ? -1.0 : 1.0;
        case EnvFamily::shifted_exponential: return -std::log(u.u1) - 1.0;
        case EnvFamily::tabulated: return values_[inverse_cdf(cdf_, u.u1)];
    }
    return 0.0;
}

double EnvLaw::sample_tilted(double beta, const UniformPair& u) const {
    check_domain(beta);
    switch (family_) {
        case EnvFamily::gaussian:
            return beta +
                   std::sqrt(-2.0 * std::log(u.u1)) * std::cos(2.0 * std::numbers::pi * u.u2);
        case EnvFamily::rademacher: {
            const double p_plus = 0.5 * (1.0 + std::tanh(beta));
            return u.u1 < 1.0 - p_plus ? -1.0 : 1.0;
        }
        case EnvFamily::shifted_exponential: return -std::log(u.u1) / (1.0 - beta) - 1.0;
        case EnvFamily::tabulated: {
            const auto w = tilted_weights(values_, probs_, beta);
            std::vector<double> cdf;
            double acc = 0.0;
            for (double x : w) cdf.push_back(acc += x);
            cdf.back() = 1.0;
            return values_[inverse_cdf(cdf, u.u1)];
        }
    }
    return 0.0;
}

std::vector<double> tilted_sample(const EnvLaw& law, double beta, std::size_t count,
                                  std::uint64_t seed, std::uint32_t stream) {
    law.check_domain(beta);
    const PhiloxKey key = derive_key(seed, Purpose::tilted);
    std::vector<double> out(count);
    if (law.family() == EnvFamily::tabulated) {
        const auto w = tilted_weights(law.values(), law.probs(), beta);
        std::vector<double> cdf;
        double acc = 0.0;
        for (double x : w) cdf.push_back(acc += x);
        cdf.back() = 1.0;
        for (std::size_t i = 0; i < count; ++i)
            out[i] = law.values()[inverse_cdf(cdf, uniforms_at(key, stream, 0, i).u1)];
        return out;
    }
    for (std::size_t i = 0; i < count; ++i)
        out[i] = law.sample_tilted(beta, uniforms_at(key, stream, 0, i));
    return out;
}

LogMomentReport convex_logmoment_check(const EnvLaw& law, const std::vector<double>& weights,
                                       double beta, std::size_t samples, std::uint64_t seed) {
    if (weights.empty()) throw ValidationError("weights must be nonempty");
    double total = 0.0, a2 = 0.0;
    for (double a : weights) {
        if (!(a >= 0.0)) throw ValidationError("weights must be nonnegative");
        total += a;
        a2 += a * a;
    }
    if (std::abs(total - 1.0) > 1e-10) throw ValidationError("weights must sum to 1");
    if (samples < 2) throw ValidationError("need at least 2 samples");
    const double lam = law.lambda(beta);
    const PhiloxKey key = derive_key(seed, Purpose::weights);

    std::vector<double> logw(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
        logw[i] = weights[i] > 0.0 ? std::log(weights[i]) : -std::numeric_limits<double>::infinity();

    RunningStats s1, s2;
    std::vector<double> terms(weights.size());
    for (std::size_t s = 0; s < samples; ++s) {
        for (std::size_t i = 0; i < weights.size(); ++i) {
            const double w = law.sample(uniforms_at(key, static_cast<std::uint32_t>(i), 0, s));
            terms[i] = logw[i] + beta * w - lam;
        }
        const double log_u = log_sum_exp(terms);
        s1.add(-log_u);
        s2.add(log_u * log_u);
    }
    LogMomentReport r;
    r.samples = samples;
    r.alpha_sq = a2;
    r.mean_log_inv_u = s1.mean();
    r.se_log_inv_u = s1.standard_error();
    r.mean_log_u_sq = s2.mean();
    r.se_log_u_sq = s2.standard_error();
    r.ratio_log_inv_u = r.mean_log_inv_u / a2;
    r.ratio_log_u_sq = r.mean_log_u_sq / a2;
    return r;
}

std::string env_to_json(const EnvLaw& law) {
    nlohmann::json j;
    j["family"] = family_name(law.family());
    if (law.family() == EnvFamily::tabulated) {
        j["values"] = law.values();
        j["probs"] = law.probs();
    }
    return j.dump();
}

EnvLaw env_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        const EnvFamily f = family_from_name(j.at("family").get<std::string>());
        switch (f) {
            case EnvFamily::gaussian: return EnvLaw::gaussian();
            case EnvFamily::rademacher: return EnvLaw::rademacher();
            case EnvFamily::shifted_exponential: return EnvLaw::shifted_exponential();
            case EnvFamily::tabulated:
                return EnvLaw::tabulated(j.at("values").get<std::vector<double>>(),
                                         j.at("probs").get<std::vector<double>>());
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("environment document: ") + ex.what());
    }
    throw ValidationError("environment document: unreachable family");
}

}  // namespace dpre
