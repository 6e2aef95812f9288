#include "dpre/criteria.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dpre/collision.hpp"
#include "dpre/errors.hpp"
#include "dpre/field.hpp"
#include "dpre/parallel.hpp"
#include "dpre/polymer.hpp"
#include "dpre/report.hpp"
#include "dpre/stats.hpp"

namespace dpre {

const char* const kStatisticalNote =
    "statistical certificate: the verdict compares a Monte Carlo estimate plus 4 standard errors "
    "with the threshold; it is not a rigorous proof";

double solve_chi_equation(const EnvLaw& env, double S, double tol, int* iterations) {
    if (!(S > 0.0)) throw ValidationError("series must be positive");
    const BetaDomain& dom = env.domain();
    // chi needs 2 beta inside the domain.
    const double cap = std::isfinite(dom.hi) ? dom.hi / 2.0 : HUGE_VAL;
    auto g = [&](double b) { return env.chi(b) * S - 1.0; };
    double lo = 0.0, hi = std::min(1.0, cap * (1.0 - 1e-12));
    while (g(hi) < 0.0) {
        if (std::isfinite(cap)) {
            if (hi >= cap * (1.0 - 1e-12)) throw ValidationError("chi(beta) S stays below 1 on the whole domain");
            hi = std::min(2.0 * hi, cap * (1.0 - 1e-12));
        } else {
            if (hi > 1e3) throw ValidationError("chi(beta) S stays below 1 for beta <= 1000");
            hi *= 2.0;
        }
    }
    int it = 0;
    for (; it < 200 && hi - lo > 1e-16 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double v = g(mid);
        if (std::abs(v) <= tol * 1e-6) {
            lo = hi = mid;
            break;
        }
        (v < 0.0 ? lo : hi) = mid;
    }
    if (iterations) *iterations = it;
    return 0.5 * (lo + hi);
}

Beta2Result beta2(const WalkLaw& walk, const EnvLaw& env, const Beta2Options& opts) {
    if (opts.horizon < 8) throw ValidationError("beta2 horizon must be >= 8");
    if (!(opts.tol > 0.0)) throw ValidationError("tolerance must be positive");
    const CollisionSeries cs = collision_series(walk, opts.horizon);
    Beta2Result r;
    r.horizon = opts.horizon;
    r.method = cs.method;
    r.tol = opts.tol;
    r.series = cs.partial_sum(opts.horizon);
    r.late_increment = r.series - cs.partial_sum(opts.horizon / 2);
    if (r.late_increment > opts.divergence_increment) {
        r.verdict = "recurrent";
        r.beta2 = 0.0;
        r.remainder = HUGE_VAL;
        return r;
    }
    std::vector<double> xs, ys;
    for (int k : log_grid(opts.horizon / 4, opts.horizon, 8)) {
        xs.push_back(k);
        ys.push_back(cs.terms[static_cast<std::size_t>(k - 1)]);
    }
    r.decay_exponent = fit_power_law(xs, ys).exponent;
    if (!(r.decay_exponent > 1.05)) {
        r.verdict = "inconclusive";
        r.remainder = HUGE_VAL;
        return r;
    }
    r.remainder = cs.terms.back() * opts.horizon / (r.decay_exponent - 1.0);
    if (r.remainder > 0.05 * r.series) {
        r.verdict = "inconclusive";
        return r;
    }
    r.verdict = "positive";
    r.beta2 = solve_chi_equation(env, r.series, opts.tol, &r.iterations);
    r.beta2_lower = solve_chi_equation(env, r.series + r.remainder, opts.tol);
    r.chi_times_series = env.chi(r.beta2) * r.series;
    return r;
}

VsdCertificate vsd_certificate(const EnvLaw& env, const WalkLaw& walk, double beta, int n,
                               const VsdOptions& opts, std::size_t mc_fields, std::uint64_t seed,
                               int workers) {
    if (n < 1) throw ValidationError("n must be >= 1");
    if (mc_fields < 2) throw ValidationError("need at least 2 fields");
    env.check_domain(beta);
    VsdCertificate c;
    c.n = n;
    c.d = walk.dim();
    if (opts.eta_bar) {
        c.eta_bar = *opts.eta_bar;
    } else if (walk.finite_support()) {
        c.eta_bar = 1.0;
    } else {
        throw ValidationError("walk has truncated support; pass eta_bar explicitly");
    }
    if (!(c.eta_bar > 0.0 && c.eta_bar <= 1.0)) throw ValidationError("eta_bar must lie in (0, 1]");
    c.theta = opts.theta ? *opts.theta : 1.0 - c.eta_bar / (4.0 * c.d);
    c.K = opts.K ? *opts.K : 20.0 * c.d / c.eta_bar;
    if (!(c.theta > 0.0 && c.theta < 1.0)) throw ValidationError("theta must lie in (0, 1)");
    if (!(c.K > 0.0)) throw ValidationError("K must be positive");
    c.fields = mc_fields;
    c.note = kStatisticalNote;

    std::vector<double> logs(mc_fields);
    parallel_for(mc_fields, workers, [&](std::size_t i) {
        const CounterField field(env, walk.dim(), seed, static_cast<std::uint32_t>(i));
        EvolveOptions eo;
        eo.keep_rows = false;
        eo.track_overlap = false;
        eo.compute_leak = false;
        logs[i] = c.theta * evolve(field.fn(), walk, env, beta, n, eo).log_w.back();
    });
    // Scale by the largest term so tiny moments stay representable.
    const double top = *std::max_element(logs.begin(), logs.end());
    std::vector<double> scaled(mc_fields);
    for (std::size_t i = 0; i < mc_fields; ++i) scaled[i] = std::exp(logs[i] - top);
    const Estimate e = estimate(scaled);
    c.log_estimate = top + std::log(e.mean);
    c.estimate = std::exp(c.log_estimate);
    c.se = std::exp(top) * e.se;
    c.log_threshold = std::log(2.0) - c.K * std::log(static_cast<double>(n));
    c.threshold = std::exp(c.log_threshold);
    const double log_upper = top + std::log(e.mean + 4.0 * e.se);
    const double log_se = e.se > 0.0 ? top + std::log(e.se) : -HUGE_VAL;
    if (log_upper < c.log_threshold)
        c.verdict = "certified";
    else if (log_se >= c.log_threshold)
        c.verdict = "underpowered";
    else
        c.verdict = "not-certified";
    return c;
}

FreeEnergyEstimate free_energy(const EnvLaw& env, const WalkLaw& walk, double beta, int n,
                               std::size_t mc_fields, std::uint64_t seed, int workers,
                               std::optional<int> radius) {
    if (n < 1) throw ValidationError("n must be >= 1");
    if (mc_fields < 2) throw ValidationError("need at least 2 fields");
    env.check_domain(beta);
    std::vector<double> f(mc_fields);
    parallel_for(mc_fields, workers, [&](std::size_t i) {
        const CounterField field(env, walk.dim(), seed, static_cast<std::uint32_t>(i));
        EvolveOptions eo;
        eo.keep_rows = false;
        eo.track_overlap = false;
        eo.compute_leak = false;
        eo.radius = radius;
        f[i] = evolve(field.fn(), walk, env, beta, n, eo).log_w.back() / n;
    });
    const Estimate e = estimate(f);
    FreeEnergyEstimate r;
    r.n = n;
    r.mean = e.mean;
    r.se = e.se;
    r.fields = mc_fields;
    r.leak = box_leak(walk, default_box(walk, n, radius), n);
    r.leak_flag = r.leak > 1e-6;
    return r;
}

Rational Rational::make(std::int64_t n, std::int64_t d) {
    if (d == 0) throw ValidationError("zero denominator");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    const std::int64_t g = std::gcd(n < 0 ? -n : n, d);
    return {n / (g ? g : 1), d / (g ? g : 1)};
}

Rational Rational::parse(const std::string& s) {
    const auto slash = s.find('/');
    auto whole = [&](const std::string& t) {
        std::size_t used = 0;
        const long long v = std::stoll(t, &used);
        if (used != t.size()) throw std::invalid_argument(t);
        return v;
    };
    try {
        if (slash == std::string::npos) return make(whole(s), 1);
        return make(whole(s.substr(0, slash)), whole(s.substr(slash + 1)));
    } catch (const std::logic_error&) {
        throw ValidationError("cannot parse '" + s + "' as a rational");
    }
}

std::string Rational::str() const {
    return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

namespace {

Rational add(Rational a, Rational b) { return Rational::make(a.num * b.den + b.num * a.den, a.den * b.den); }
Rational div(Rational a, Rational b) { return Rational::make(a.num * b.den, a.den * b.num); }
bool less(Rational a, Rational b) { return a.num * b.den < b.num * a.den; }

void annotate(PstarBounds& p) {
    if (p.ill_defined) p.note = "interval ill-defined for d = 1 and eta > 1";
    else if (p.inconsistent) p.note = "input exponents violate nu <= d / (2 min eta)";
    else if (p.collapsed) p.note = "interval collapses to a point";
}

}  // namespace

PstarBounds pstar_bounds(std::optional<Rational> eta, Rational nu, int d) {
    if (d < 1) throw ValidationError("d must be >= 1");
    if (nu.num < 0) throw ValidationError("nu must be nonnegative");
    const Rational two = Rational::make(2, 1), one = Rational::make(1, 1), rd = Rational::make(d, 1);
    const Rational m = eta && less(*eta, two) ? *eta : two;  // 2 min eta
    if (m.num <= 0) throw ValidationError("eta must be positive");
    const Rational lower = add(one, div(m, rd));
    const Rational nu1 = less(nu, one) ? one : nu;
    const Rational upper = add(one, div(one, nu1));
    PstarBounds p;
    p.d = d;
    p.eta = eta ? eta->str() : "inf";
    p.nu = nu.str();
    p.exact = true;
    p.lower = lower.value();
    p.upper = upper.value();
    p.lower_exact = lower.str();
    p.upper_exact = upper.str();
    p.collapsed = lower == upper;
    p.ill_defined = d == 1 && (!eta || less(one, *eta));
    p.inconsistent = less(div(rd, m), nu);
    annotate(p);
    return p;
}

PstarBounds pstar_bounds(double eta, double nu, int d) {
    if (d < 1) throw ValidationError("d must be >= 1");
    if (!(eta > 0.0)) throw ValidationError("eta must be positive");
    if (!(nu >= 0.0)) throw ValidationError("nu must be nonnegative");
    const double m = std::min(2.0, eta);
    PstarBounds p;
    p.d = d;
    p.eta = std::isfinite(eta) ? fmt_num(eta) : "inf";
    p.nu = fmt_num(nu);
    p.lower = 1.0 + m / d;
    p.upper = 1.0 + 1.0 / std::max(nu, 1.0);
    p.collapsed = std::abs(p.lower - p.upper) <= 1e-12;
    p.ill_defined = d == 1 && eta > 1.0;
    p.inconsistent = nu > d / m + 1e-12;
    annotate(p);
    return p;
}

std::vector<int> tower_grid() {
    std::vector<int> g;
    for (int k = 1; k <= 5; ++k) {
        const auto a = static_cast<double>(tower_term(k - 1));
        const int v = static_cast<int>(std::ceil(std::sqrt(a) - 1e-12));
        if (g.empty() || g.back() != v) g.push_back(v);
    }
    return g;
}

TowerDemo tower_demo(const TowerDemoOptions& opts) {
    TowerDemo t;
    for (int k = 0; k <= 4; ++k) t.a.push_back(tower_term(k));
    const double a4 = static_cast<double>(t.a[4]);
    t.weight_sum = tower_weight_sum(4) + 1.0 / std::pow(a4, 4);
    t.weight_bound_ok = t.weight_sum <= 5.0;

    const WalkLaw law = make_tower_walk(opts.cutoff);
    t.cutoff = opts.cutoff;
    t.truncation_loss = law.truncation_loss();
    const auto a2 = static_cast<int>(t.a[2]);
    t.N = a2 * a2 * a2;
    // Sub-stochastic iteration: paths using only retained shells, a lower bound.
    Grid cur(Box::point(1), 1.0);
    for (int k = 0; k < 2 * t.N; ++k) cur = push_forward(cur, law, nullptr, nullptr);
    double p = 0.0;
    for (BoxCursor c(cur.box); c.valid(); c.next())
        if (std::abs(c.coords()[0]) <= t.N) p += cur.values[c.index()];
    t.p_contained = p;
    t.containment_ok = p >= 0.9;

    t.beta = opts.beta;
    const EnvLaw env = EnvLaw::gaussian();
    for (int n : tower_grid())
        t.free_energy.push_back(free_energy(env, law, opts.beta, n, opts.fields, opts.seed, opts.workers,
                                            std::min(opts.radius, n * law.reach())));
    t.trend_ok = true;
    for (std::size_t i = 1; i < t.free_energy.size(); ++i) {
        const auto& a = t.free_energy[i - 1];
        const auto& b = t.free_energy[i];
        if (std::abs(b.mean) > std::abs(a.mean) + 4.0 * std::hypot(a.se, b.se)) t.trend_ok = false;
    }
    return t;
}

}  // namespace dpre
