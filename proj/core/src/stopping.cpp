#include <algorithm>
#include <cmath>

#include "dpre/criteria.hpp"
#include "dpre/errors.hpp"
#include "dpre/field.hpp"
#include "dpre/parallel.hpp"
#include "dpre/polymer.hpp"
#include "dpre/stats.hpp"

namespace dpre {

namespace {

PolymerState trace(const EnvLaw& env, const WalkLaw& walk, double beta, int horizon,
                   std::uint64_t seed, std::size_t replica, bool overlap) {
    const CounterField field(env, walk.dim(), seed, static_cast<std::uint32_t>(replica));
    EvolveOptions eo;
    eo.keep_rows = false;
    eo.track_overlap = overlap;
    eo.compute_leak = false;
    return evolve(field.fn(), walk, env, beta, horizon, eo);
}

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return i + 1 < v.size() ? v[i] * (1.0 - frac) + v[i + 1] * frac : v[i];
}

}  // namespace

HittingStats hitting_statistics(const EnvLaw& env, const WalkLaw& walk, double beta,
                                const std::vector<double>& us, int horizon, std::size_t replicas,
                                std::uint64_t seed, int workers) {
    if (us.empty()) throw ValidationError("threshold list is empty");
    for (double u : us)
        if (!(u >= 1.0)) throw ValidationError("thresholds must be >= 1");
    if (horizon < 1) throw ValidationError("horizon must be >= 1");
    if (replicas < 2) throw ValidationError("need at least 2 replicas");
    env.check_domain(beta);
    HittingStats h;
    h.beta = beta;
    h.horizon = horizon;
    h.replicas = replicas;
    h.sup_log_w.assign(replicas, 0.0);
    parallel_for(replicas, workers, [&](std::size_t r) {
        const PolymerState st = trace(env, walk, beta, horizon, seed, r, false);
        h.sup_log_w[r] = *std::max_element(st.log_w.begin(), st.log_w.end());
    });
    double lo = HUGE_VAL, hi = 0.0;
    const double nr = static_cast<double>(replicas);
    for (double u : us) {
        HittingRow row;
        row.u = u;
        const double lu = std::log(u);
        for (double s : h.sup_log_w)
            if (s >= lu) ++row.hits;
        row.p = static_cast<double>(row.hits) / nr;
        row.se = std::sqrt(row.p * (1.0 - row.p) / nr);
        const Interval w = wilson_interval(row.hits, replicas);
        row.wilson_lo = w.lo;
        row.wilson_hi = w.hi;
        row.doob_bound = 1.0 / u;
        row.scaled = u * row.p;
        row.doob_ok = row.p <= row.doob_bound + 4.0 * row.se;
        h.doob_ok = h.doob_ok && row.doob_ok;
        lo = std::min(lo, row.scaled);
        hi = std::max(hi, row.scaled);
        h.rows.push_back(row);
    }
    h.ratio_spread = lo > 0.0 ? hi / lo : HUGE_VAL;
    return h;
}

StoppingStats stopping_experiment(const EnvLaw& env, const WalkLaw& walk, double beta, double u,
                                  double K, int horizon, std::size_t replicas, std::uint64_t seed,
                                  int workers) {
    if (!(u > 1.0) || !(K > 1.0)) throw ValidationError("u and K must exceed 1");
    if (horizon < 1) throw ValidationError("horizon must be >= 1");
    if (replicas < 2) throw ValidationError("need at least 2 replicas");
    env.check_domain(beta);
    StoppingStats s;
    s.beta = beta;
    s.u = u;
    s.K = K;
    s.horizon = horizon;
    s.replicas = replicas;
    s.per_replica.resize(replicas);
    const double lu = std::log(u), lku = std::log(K * u), ldip = std::log(u / K);
    parallel_for(replicas, workers, [&](std::size_t r) {
        const PolymerState st = trace(env, walk, beta, horizon, seed, r, true);
        StoppingReplica& rep = s.per_replica[r];
        for (int k = 0; k <= horizon; ++k) {
            const double lw = st.log_w[static_cast<std::size_t>(k)];
            if (rep.tau_u < 0 && lw >= lu) {
                rep.tau_u = k;
                rep.w_at_tau_u = std::exp(lw);
            }
            if (rep.tau_u >= 0 && rep.sigma < 0 && lw <= ldip) rep.sigma = k;
            if (rep.tau_Ku < 0 && lw >= lku) {
                rep.tau_Ku = k;
                break;
            }
        }
        if (rep.tau_u >= 0) {
            const int end = rep.tau_Ku >= 0 ? rep.tau_Ku : horizon;
            for (int k = rep.tau_u + 1; k <= end; ++k) {
                const double ik = st.overlap[static_cast<std::size_t>(k)];
                rep.overlap_sum += ik;
                rep.overlap_max = std::max(rep.overlap_max, ik);
            }
        }
    });
    std::vector<double> acc, o2, o6;
    for (const auto& rep : s.per_replica) {
        if (rep.tau_u < 0) continue;
        ++s.reached_u;
        o2.push_back(std::pow(rep.w_at_tau_u / u, 2.0));
        o6.push_back(std::pow(rep.w_at_tau_u / u, 6.0));
        if (rep.tau_Ku >= 0) {
            ++s.reached_Ku;
            acc.push_back(rep.overlap_sum);
            if (rep.sigma >= 0 && rep.sigma < rep.tau_Ku) ++s.dips;
        }
    }
    const double nr = static_cast<double>(replicas);
    s.p_dip = static_cast<double>(s.dips) / nr;
    s.p_dip_se = std::sqrt(s.p_dip * (1.0 - s.p_dip) / nr);
    s.dip_bound = static_cast<double>(s.reached_u) / nr / (K * K);
    s.dip_ok = s.p_dip <= s.dip_bound + 4.0 * s.p_dip_se;
    s.dip_frequency = s.reached_u ? static_cast<double>(s.dips) / static_cast<double>(s.reached_u) : 0.0;
    s.overlap_q10 = quantile(acc, 0.1);
    s.overlap_q50 = quantile(acc, 0.5);
    s.overlap_q90 = quantile(acc, 0.9);
    if (o2.size() >= 2) {
        const Estimate e2 = estimate(o2), e6 = estimate(o6);
        s.overshoot2 = e2.mean;
        s.overshoot2_se = e2.se;
        s.overshoot6 = e6.mean;
        s.overshoot6_se = e6.se;
    } else if (o2.size() == 1) {
        s.overshoot2 = o2[0];
        s.overshoot6 = o6[0];
    }
    s.underpowered = s.reached_u == 0;
    return s;
}

}  // namespace dpre
