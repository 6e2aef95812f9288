#include "dpre/pinning.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "dpre/collision.hpp"
#include "dpre/errors.hpp"
#include "dpre/field.hpp"
#include "dpre/parallel.hpp"
#include "dpre/polymer.hpp"
#include "dpre/stats.hpp"

namespace dpre {

PinningState pinning_partition(const RenewalLaw& law, const EnvLaw& env, double beta,
                               const std::vector<double>& omega_hat) {
    env.check_domain(beta);
    const int n = static_cast<int>(omega_hat.size());
    if (n > law.horizon()) throw ValidationError("pinning length exceeds the renewal horizon");
    const double lam = env.lambda(beta);
    PinningState st;
    st.beta = beta;
    st.n = n;
    st.omega_hat = omega_hat;
    st.Z.assign(static_cast<std::size_t>(n) + 1, 1.0);
    st.Zc.assign(static_cast<std::size_t>(n) + 1, 1.0);
    st.Z_survival.assign(static_cast<std::size_t>(n) + 1, 1.0);
    for (int m = 1; m <= n; ++m) {
        const double h = beta * omega_hat[static_cast<std::size_t>(m - 1)] - lam;
        CompensatedSum acc;
        for (int t = 0; t < m; ++t) acc.add(st.Zc[static_cast<std::size_t>(t)] * law.k_at(m - t));
        const double zc = acc.value() * std::exp(h);
        st.Zc[static_cast<std::size_t>(m)] = zc;
        // Z_m - Z_{m-1} = Zc_m (1 - e^{-h}); exact at h = 0.
        st.Z[static_cast<std::size_t>(m)] = st.Z[static_cast<std::size_t>(m - 1)] - std::expm1(-h) * zc;
        CompensatedSum zs;
        for (int t = 0; t <= m; ++t)
            zs.add(st.Zc[static_cast<std::size_t>(t)] * law.survival[static_cast<std::size_t>(m - t)]);
        st.Z_survival[static_cast<std::size_t>(m)] = zs.value();
    }
    return st;
}

PinningState pinning_partition(const RenewalLaw& law, const EnvLaw& env, double beta, int n,
                               std::uint64_t seed, std::uint32_t stream) {
    if (n < 0) throw ValidationError("pinning length must be >= 0");
    return pinning_partition(law, env, beta,
                             tilted_sample(env, beta, static_cast<std::size_t>(n), seed, stream));
}

namespace {

// Sum over all pairs of n-step paths of P(pair) e^{H_n} (times delta_n if constrained).
double pinning_bruteforce(const WalkLaw& walk, const EnvLaw& env, double beta,
                          const std::vector<double>& omega_hat, bool constrained) {
    env.check_domain(beta);
    const int n = static_cast<int>(omega_hat.size());
    const auto& e = walk.entries();
    const double combos = std::pow(static_cast<double>(e.size()), 2.0 * n);
    if (combos > 2e7) throw ResourceError("brute-force pinning enumeration too large");
    if (n == 0) return 1.0;
    const double lam = env.lambda(beta);
    const int d = walk.dim();
    std::vector<std::size_t> digit(static_cast<std::size_t>(2 * n), 0);
    CompensatedSum total;
    for (;;) {
        Point x{}, y{};
        double p = 1.0, h = 0.0;
        bool meet = false;
        for (int k = 0; k < n; ++k) {
            const auto& a = e[digit[static_cast<std::size_t>(2 * k)]];
            const auto& b = e[digit[static_cast<std::size_t>(2 * k + 1)]];
            p *= a.prob * b.prob;
            meet = true;
            for (int i = 0; i < d; ++i) {
                x[i] += a.step[i];
                y[i] += b.step[i];
                meet = meet && x[i] == y[i];
            }
            if (meet) h += beta * omega_hat[static_cast<std::size_t>(k)] - lam;
        }
        if (!constrained || meet) total.add(p * std::exp(h));
        std::size_t i = 0;
        while (i < digit.size() && ++digit[i] == e.size()) digit[i++] = 0;
        if (i == digit.size()) break;
    }
    return total.value();
}

}  // namespace

double pinning_bruteforce_constrained(const WalkLaw& walk, const EnvLaw& env, double beta,
                                      const std::vector<double>& omega_hat) {
    return pinning_bruteforce(walk, env, beta, omega_hat, true);
}

double pinning_bruteforce_free(const WalkLaw& walk, const EnvLaw& env, double beta,
                               const std::vector<double>& omega_hat) {
    return pinning_bruteforce(walk, env, beta, omega_hat, false);
}

namespace {

// Every tilted weight replaced by its mean 1 + chi; returns a_0..a_n.
std::vector<double> annealed_recursion(const RenewalLaw& law, const EnvLaw& env, double beta, int n) {
    const double w = 1.0 + env.chi(beta);
    std::vector<double> a(static_cast<std::size_t>(n) + 1, 1.0);
    for (int m = 1; m <= n; ++m) {
        double s = 0.0;
        for (int t = 0; t < m; ++t) s += a[static_cast<std::size_t>(t)] * law.k_at(m - t);
        a[static_cast<std::size_t>(m)] = w * s;
    }
    return a;
}

}  // namespace

AnnealedReport annealed_check(const RenewalLaw& law, const EnvLaw& env, double beta, int n,
                              std::size_t samples, std::uint64_t seed, int workers) {
    if (samples < 2) throw ValidationError("need at least 2 samples");
    std::vector<double> zc(samples);
    parallel_for(samples, workers, [&](std::size_t i) {
        zc[i] = pinning_partition(law, env, beta, n, seed, static_cast<std::uint32_t>(i)).Zc.back();
    });
    const Estimate e = estimate(zc);
    AnnealedReport r;
    r.n = n;
    r.mc_mean = e.mean;
    r.mc_se = e.se;
    r.annealed = annealed_recursion(law, env, beta, n).back();
    r.z_score = e.se > 0.0 ? (e.mean - r.annealed) / e.se : 0.0;
    return r;
}

ConstrainedMoments constrained_fractional_moments(const RenewalLaw& law, const EnvLaw& env,
                                                  double beta, double gamma, int a_max,
                                                  std::size_t samples, std::uint64_t seed,
                                                  int workers) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("gamma must lie in (0, 1]");
    if (a_max < 0) throw ValidationError("a_max must be >= 0");
    if (samples < 2) throw ValidationError("need at least 2 samples");
    const auto len = static_cast<std::size_t>(a_max) + 1;
    // One tilted sequence gives Zc_a for every a <= a_max.
    std::vector<std::vector<double>> pw(samples);
    parallel_for(samples, workers, [&](std::size_t i) {
        const PinningState st = pinning_partition(law, env, beta, a_max, seed, static_cast<std::uint32_t>(i));
        pw[i].resize(len);
        for (std::size_t a = 0; a < len; ++a) pw[i][a] = std::pow(st.Zc[a], gamma);
    });
    ConstrainedMoments out;
    out.gamma = gamma;
    out.beta = beta;
    out.samples = samples;
    out.annealed = annealed_recursion(law, env, beta, a_max);
    for (std::size_t a = 0; a < len; ++a) {
        RunningStats rs;
        for (const auto& v : pw) rs.add(v[a]);
        const double m = rs.mean();
        const double B = std::pow(m, 1.0 / gamma);
        out.B.push_back(B);
        // Delta method on x -> x^{1/gamma}.
        out.B_se.push_back(m > 0.0 ? B / (gamma * m) * rs.standard_error() : 0.0);
    }
    return out;
}

SizeBiasLinkReport size_bias_link_check(const WalkLaw& walk, const EnvLaw& env, double beta,
                                        const std::vector<double>& omega_hat, int renewal_horizon,
                                        std::size_t samples, std::uint64_t seed, int workers) {
    if (samples < 2) throw ValidationError("need at least 2 samples");
    const int n = static_cast<int>(omega_hat.size());
    if (n < 1) throw ValidationError("tilted sequence is empty");
    const RenewalLaw law = intersection_renewal(walk, std::max(n, renewal_horizon));
    const PinningState st = pinning_partition(law, env, beta, omega_hat);
    const StepSampler sampler(walk);
    const int d = walk.dim();
    std::vector<double> w(samples);
    parallel_for(samples, workers, [&](std::size_t i) {
        const auto r = static_cast<std::uint32_t>(i);
        const CounterField base(env, d, seed, r);
        CounterStream cs(seed, Purpose::spine_walk, r, 0);
        std::vector<Point> path(1, Point{});
        for (int k = 1; k <= n; ++k) {
            Point x = path.back();
            const auto& e = sampler.draw(cs.uniform());
            for (int j = 0; j < d; ++j) x[j] += e.step[j];
            path.push_back(x);
        }
        const FieldFn composed = [&](int k, const int* x) {
            const Point& s = path[static_cast<std::size_t>(k)];
            for (int j = 0; j < d; ++j)
                if (s[j] != x[j]) return base(k, x);
            return omega_hat[static_cast<std::size_t>(k - 1)];
        };
        EvolveOptions opts;
        opts.keep_rows = false;
        opts.track_overlap = false;
        opts.compute_leak = false;
        w[i] = std::exp(evolve(composed, walk, env, beta, n, opts).log_w.back());
    });
    const Estimate e = estimate(w);
    SizeBiasLinkReport rep;
    rep.n = n;
    rep.Z = st.Z.back();
    rep.mc_mean = e.mean;
    rep.mc_se = e.se;
    rep.z_score = e.se > 0.0 ? (e.mean - rep.Z) / e.se : 0.0;
    return rep;
}

ChangeOfMeasure change_of_measure_diagnostic(const EnvLaw& env, double beta2, double m,
                                             std::size_t mc_samples, std::uint64_t seed) {
    if (!(beta2 > 0.0))
        throw ValidationError("change of measure needs beta_2 > 0; the walk gave beta_2 = 0");
    if (!(m >= 2.0)) throw ValidationError("m must be >= 2");
    if (!(std::log(m) > 1.0)) throw ValidationError("m must exceed e so that gamma = 1 - 1/log m > 0");
    ChangeOfMeasure c;
    c.beta2 = beta2;
    c.m = m;
    c.beta = beta2 + 1.0 / (m * m);
    c.epsilon = 1.0 / std::sqrt(m * std::log(m));
    c.gamma = 1.0 - 1.0 / std::log(m);
    const double q = c.gamma / (1.0 - c.gamma);
    const double lo = c.beta - c.epsilon, hi = c.beta + q * c.epsilon;
    env.check_domain(lo);
    env.check_domain(hi);
    const double lb = env.lambda(c.beta);
    const double down = lb - env.lambda(lo);
    c.tilt_mean = std::exp(m * down - m * down);
    c.penalty = m * ((env.lambda(hi) - lb) / q - down);
    for (int i = 0; i <= 200; ++i) c.curvature = std::max(c.curvature, env.lambda_second(lo + (hi - lo) * i / 200.0));
    c.penalty_bound = c.curvature * m * c.epsilon * c.epsilon / (1.0 - c.gamma);
    if (mc_samples >= 2) {
        const auto mi = static_cast<std::size_t>(std::llround(m));
        std::vector<double> g(mc_samples);
        for (std::size_t i = 0; i < mc_samples; ++i) {
            const auto w = tilted_sample(env, c.beta, mi, seed, static_cast<std::uint32_t>(i));
            double s = 0.0;
            for (double v : w) s += v;
            g[i] = std::exp(-c.epsilon * s + static_cast<double>(mi) * down);
        }
        const Estimate e = estimate(g);
        c.tilt_mean_mc = e.mean;
        c.tilt_mean_se = e.se;
    }
    return c;
}

std::string pinning_table(const PinningState& state) {
    std::ostringstream os;
    os << "n\tomega_hat\tZ\tZc\tZ_survival\n";
    char buf[160];
    for (int n = 0; n <= state.n; ++n) {
        const auto i = static_cast<std::size_t>(n);
        std::snprintf(buf, sizeof buf, "%d\t%.17g\t%.17g\t%.17g\t%.17g\n", n,
                      n == 0 ? 0.0 : state.omega_hat[i - 1], state.Z[i], state.Zc[i], state.Z_survival[i]);
        os << buf;
    }
    return os.str();
}

}  // namespace dpre
