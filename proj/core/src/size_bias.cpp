#include "dpre/size_bias.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "dpre/collision.hpp"
#include "dpre/errors.hpp"
#include "dpre/parallel.hpp"
#include "dpre/polymer.hpp"
#include "dpre/stats.hpp"

namespace dpre {

namespace {

// Spine randomness lives under its own seed so direct and spine estimates are independent.
std::uint64_t spine_seed(std::uint64_t seed) { return splitmix64(seed ^ 0x5350494e45ULL); }

double log_w(const FieldFn& omega, const WalkLaw& walk, const EnvLaw& env, double beta, int n) {
    EvolveOptions opts;
    opts.keep_rows = false;
    opts.track_overlap = false;
    opts.compute_leak = false;
    return evolve(omega, walk, env, beta, n, opts).log_w.back();
}

}  // namespace

double SpineSample::operator()(int k, const int* x) const {
    const Point& s = path_[static_cast<std::size_t>(k)];
    for (int i = 0; i < d_; ++i)
        if (s[i] != x[i]) return base_(k, x);
    return tilts_[static_cast<std::size_t>(k - 1)];
}

FieldFn SpineSample::composed() const {
    return [self = *this](int k, const int* x) { return self(k, x); };
}

SpineSample spine_sample(const EnvLaw& env, const WalkLaw& walk, double beta, int n,
                         std::uint64_t seed, std::uint32_t replica, const SpineOptions& opts) {
    if (n < 1) throw ValidationError("spine horizon must be >= 1");
    env.check_domain(beta);
    const int d = walk.dim();
    SpineSample s(CounterField(env, d, seed, replica, Purpose::field));
    s.n_ = n;
    s.d_ = d;
    s.seed_ = seed;
    s.replica_ = replica;
    int radius = opts.radius ? *opts.radius : n * walk.reach();
    const StepSampler sampler(walk);
    bool accepted = false;
    for (int attempt = 0; attempt <= opts.max_retries && !accepted; ++attempt) {
        CounterStream cs(seed, Purpose::spine_walk, replica, static_cast<std::uint32_t>(attempt));
        s.path_.assign(1, Point{});
        int far = 0;
        for (int k = 1; k <= n; ++k) {
            Point x = s.path_.back();
            const auto& e = sampler.draw(cs.uniform());
            for (int i = 0; i < d; ++i) {
                x[i] += e.step[i];
                far = std::max(far, std::abs(x[i]));
            }
            s.path_.push_back(x);
        }
        s.attempts_ = attempt + 1;
        if (far <= radius) {
            accepted = true;
        } else if (opts.policy == BoxPolicy::enlarge) {
            radius = far;
            accepted = true;
        }
    }
    if (!accepted)
        throw ValidationError("spine left the box on every one of " +
                              std::to_string(opts.max_retries + 1) +
                              " attempts; enlarge the radius or use the enlarge policy");
    s.radius_ = radius;
    const PhiloxKey key = derive_key(seed, Purpose::spine_tilt);
    for (int k = 1; k <= n; ++k)
        s.tilts_.push_back(env.sample_tilted(beta, uniforms_at(key, static_cast<std::uint32_t>(k), replica, 0)));
    return s;
}

SigmaSeries sigma_series(const WalkLaw& walk, int n) {
    if (n < 1) throw ValidationError("Sigma horizon must be >= 1");
    const CollisionSeries cs = collision_series(walk, n);
    SigmaSeries s;
    CompensatedSum acc;
    for (double c : cs.terms) {
        acc.add(c);
        s.partial.push_back(acc.value());
    }
    s.late_increment = s.partial.back() - (n >= 2 ? s.at(n / 2) : 0.0);
    s.diverging = s.late_increment > 0.05;
    return s;
}

RnValue rn_observable(const FieldFn& omega, const KernelTable& kernels, int n) {
    if (n < 1 || n > kernels.k_max()) throw ValidationError("kernels not available to n");
    RnValue v;
    for (int k = 1; k <= n; ++k) {
        const Grid& g = kernels.step(k);
        for (BoxCursor c(g.box); c.valid(); c.next()) {
            const double p = g.values[c.index()];
            if (p == 0.0) continue;
            v.R += p * omega(k, c.coords());
        }
        v.Sigma += g.sum_squares();
    }
    return v;
}

SizeBiasReport size_bias_check(const EnvLaw& env, const WalkLaw& walk, double beta, int n,
                               const FieldFunctional& f, std::size_t samples,
                               std::uint64_t seed, int workers, const SpineOptions& opts) {
    if (samples < 2) throw ValidationError("need at least 2 samples");
    std::vector<double> direct(samples), spine(samples);
    const std::uint64_t sseed = spine_seed(seed);
    parallel_for(samples, workers, [&](std::size_t i) {
        const CounterField field(env, walk.dim(), seed, static_cast<std::uint32_t>(i));
        const FieldFn fn = field.fn();
        direct[i] = std::exp(log_w(fn, walk, env, beta, n)) * f(fn);
        const SpineSample s = spine_sample(env, walk, beta, n, sseed, static_cast<std::uint32_t>(i), opts);
        spine[i] = f(s.composed());
    });
    const Estimate d = estimate(direct);
    const Estimate s = estimate(spine);
    SizeBiasReport r;
    r.samples = samples;
    r.direct_mean = d.mean;
    r.direct_se = d.se;
    r.spine_mean = s.mean;
    r.spine_se = s.se;
    const double se = std::hypot(d.se, s.se);
    r.z_score = se > 0.0 ? (s.mean - d.mean) / se : 0.0;
    return r;
}

FractionalEventReport fractional_event_bound(const EnvLaw& env, const WalkLaw& walk, double beta,
                                             int n, double theta, const FieldPredicate& event,
                                             std::size_t mc_fields, std::size_t mc_spines,
                                             std::uint64_t seed, int workers) {
    if (!(theta > 0.0 && theta < 1.0)) throw ValidationError("theta must lie in (0, 1)");
    if (mc_fields < 2 || mc_spines < 2) throw ValidationError("need at least 2 fields and 2 spines");
    std::vector<double> wt(mc_fields), in_a(mc_fields), out_a(mc_spines);
    parallel_for(mc_fields, workers, [&](std::size_t i) {
        const CounterField field(env, walk.dim(), seed, static_cast<std::uint32_t>(i));
        const FieldFn fn = field.fn();
        wt[i] = std::exp(theta * log_w(fn, walk, env, beta, n));
        in_a[i] = event(fn) ? 1.0 : 0.0;
    });
    const std::uint64_t sseed = spine_seed(seed);
    parallel_for(mc_spines, workers, [&](std::size_t i) {
        const SpineSample s = spine_sample(env, walk, beta, n, sseed, static_cast<std::uint32_t>(i));
        out_a[i] = event(s.composed()) ? 0.0 : 1.0;
    });
    const Estimate w = estimate(wt), a = estimate(in_a), ac = estimate(out_a);
    FractionalEventReport r;
    r.theta = theta;
    r.n = n;
    r.fields = mc_fields;
    r.spines = mc_spines;
    r.direct = w.mean;
    r.direct_se = w.se;
    r.p_event = a.mean;
    r.p_event_se = a.se;
    r.p_tilde_complement = ac.mean;
    r.p_tilde_complement_se = ac.se;
    r.bound = std::pow(a.mean, 1.0 - theta) + std::pow(ac.mean, theta);
    // Delta method; a zero estimate contributes no spread.
    const double da = a.mean > 0.0 ? (1.0 - theta) * std::pow(a.mean, -theta) * a.se : 0.0;
    const double dc = ac.mean > 0.0 ? theta * std::pow(ac.mean, theta - 1.0) * ac.se : 0.0;
    r.bound_se = std::hypot(da, dc);
    r.holds = r.direct <= r.bound + 4.0 * std::hypot(r.direct_se, r.bound_se);
    return r;
}

FieldPredicate rn_event(std::shared_ptr<const KernelTable> kernels, int n) {
    if (!kernels || kernels->k_max() < n) throw ValidationError("kernels not available to n");
    return [kernels = std::move(kernels), n](const FieldFn& omega) {
        const RnValue v = rn_observable(omega, *kernels, n);
        return v.R >= std::pow(v.Sigma, 0.75);
    };
}

StrongDisorderDemo strong_disorder_demo(const EnvLaw& env, const WalkLaw& walk, double beta,
                                        const std::vector<int>& n_grid, double theta,
                                        std::size_t mc_fields, std::size_t mc_spines,
                                        std::uint64_t seed, int workers) {
    if (n_grid.empty()) throw ValidationError("n grid is empty");
    const int n_max = *std::max_element(n_grid.begin(), n_grid.end());
    const SigmaSeries sig = sigma_series(walk, std::max(n_max, 256));
    if (!sig.diverging)
        throw ValidationError("refused: Sigma_n grows by only " + std::to_string(sig.late_increment) +
                              " over the last half of the horizon, so the difference walk looks "
                              "transient and the strong-disorder demo does not apply");
    auto kernels = std::make_shared<const KernelTable>(iterate_kernel(walk, n_max));
    StrongDisorderDemo demo;
    demo.beta = beta;
    demo.theta = theta;
    demo.chebyshev_ok = true;
    demo.p_event_decreasing = true;
    for (int n : n_grid) {
        StrongDisorderRow row;
        row.n = n;
        row.sigma = sig.at(n);
        row.chebyshev = 1.0 / std::sqrt(row.sigma);
        row.report = fractional_event_bound(env, walk, beta, n, theta, rn_event(kernels, n), mc_fields,
                                            mc_spines, splitmix64(seed + static_cast<std::uint64_t>(n)),
                                            workers);
        if (row.report.p_event > row.chebyshev + 4.0 * row.report.p_event_se) demo.chebyshev_ok = false;
        if (!demo.rows.empty() && row.report.p_event > demo.rows.back().report.p_event)
            demo.p_event_decreasing = false;
        demo.rows.push_back(row);
    }
    return demo;
}

}  // namespace dpre
