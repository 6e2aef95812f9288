#include "dpre/doob.hpp"

#include <cmath>

#include "dpre/errors.hpp"
#include "dpre/parallel.hpp"
#include "dpre/stats.hpp"

namespace dpre {

namespace {

struct Site {
    Point x;
    double a;  // (D mu_{k-1})(x)
};

std::vector<Site> support_of(const Grid& g) {
    std::vector<Site> out;
    for (BoxCursor c(g.box); c.valid(); c.next()) {
        const double a = g.values[c.index()];
        if (a <= 0.0) continue;
        Site s{};
        std::copy(c.coords(), c.coords() + g.box.dim(), s.x.begin());
        s.a = a;
        out.push_back(s);
    }
    return out;
}

// mu_k given the pushed-forward measure and one row of tilted weights.
double reweighted_green(const Grid& dmu, const std::vector<Site>& sites,
                        const std::vector<double>& weight, const Grid& g0) {
    Grid mu(dmu.box, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < sites.size(); ++i) total += sites[i].a * weight[i];
    for (std::size_t i = 0; i < sites.size(); ++i)
        mu.values[dmu.box.index(sites[i].x.data())] = sites[i].a * weight[i] / total;
    return green_quadratic(mu, g0);
}

Grid make_g0(const WalkLaw& walk, int n0) {
    if (n0 < 1) throw ValidationError("n0 must be >= 1");
    const WalkLaw diff = difference_walk(walk);
    return truncated_green(iterate_kernel(diff, n0), n0);
}

// Three-term lower bound with G0 applied to D mu_{k-1}.
double rough_term(const Grid& dmu, const Grid& g0, double chi, double chi3, double ik) {
    const int d = dmu.box.dim();
    double cross = 0.0, cubes = 0.0;
    int y[kMaxDim];
    for (BoxCursor c(dmu.box); c.valid(); c.next()) {
        const double a = dmu.values[c.index()];
        if (a == 0.0) continue;
        cubes += a * a * a;
        double gx = 0.0;
        for (BoxCursor z(g0.box); z.valid(); z.next()) {
            const double g = g0.values[z.index()];
            if (g == 0.0) continue;
            for (int i = 0; i < d; ++i) y[i] = c.coords()[i] + z.coords()[i];
            gx += g * dmu.at(y);
        }
        cross += a * a * gx;
    }
    const double g00 = g0.at(Point{}.data());
    return (chi * g00 - 1.0) * ik - 4.0 * chi * cross - 2.0 * chi3 * cubes;
}

}  // namespace

double analytic_aincrement_constant(const EnvLaw& env, double beta, int n0) {
    return 4.0 * env.chi(beta) * n0 + 2.0 * std::abs(env.chi3(beta));
}

double calibrate_aincrement_constant(const WalkLaw& walk, const EnvLaw& env, double beta, int n0,
                                     int instances, int n_max, std::uint64_t seed) {
    const auto& vals = env.values();
    const auto& probs = env.probs();
    if (vals.empty()) return 0.0;
    const Grid g0 = make_g0(walk, n0);
    const double chi = env.chi(beta);
    const double lam = env.lambda(beta);
    const double g00 = g0.at(Point{}.data());
    double worst = 0.0;
    for (int inst = 0; inst < instances; ++inst) {
        const CounterField field(env, walk.dim(), seed, static_cast<std::uint32_t>(inst));
        EvolveOptions opts;
        opts.track_overlap = false;
        opts.compute_leak = false;
        opts.radius = n_max * walk.reach();
        const PolymerState st = evolve(field.fn(), walk, env, beta, n_max - 1, opts);
        for (int k = 1; k <= n_max; ++k) {
            const Grid dmu = endpoint_pushforward(st, walk, k);
            const auto sites = support_of(dmu);
            const double combos = std::pow(static_cast<double>(vals.size()), static_cast<double>(sites.size()));
            if (combos > 2e6) continue;
            const double j_prev = green_quadratic(st.endpoint(k - 1), g0);
            double ik = 0.0;
            for (const auto& s : sites) ik += s.a * s.a;
            // Odometer over value assignments.
            std::vector<std::size_t> digit(sites.size(), 0);
            std::vector<double> weight(sites.size());
            double expect = 0.0;
            for (;;) {
                double pr = 1.0;
                for (std::size_t i = 0; i < sites.size(); ++i) {
                    pr *= probs[digit[i]];
                    weight[i] = std::exp(beta * vals[digit[i]] - lam);
                }
                expect += pr * reweighted_green(dmu, sites, weight, g0);
                std::size_t i = 0;
                while (i < digit.size() && ++digit[i] == vals.size()) digit[i++] = 0;
                if (i == digit.size()) break;
            }
            const double gap = (chi * g00 - 1.0) * ik - (expect - j_prev);
            worst = std::max(worst, gap / std::pow(ik, 1.5));
        }
    }
    return worst;
}

DoobTrace doob_decompose(const FieldFn& omega, const WalkLaw& walk, const EnvLaw& env,
                         double beta, int n, std::size_t resamples, std::uint64_t seed,
                         const DoobOptions& opts) {
    if (resamples < 100) throw ValidationError("doob_decompose needs at least 100 resamples");
    if (n < 1) throw ValidationError("horizon must be >= 1");
    env.check_domain(beta);
    const Grid g0 = make_g0(walk, opts.n0);

    EvolveOptions eo;
    eo.green = &g0;
    eo.compute_leak = false;
    const PolymerState st = evolve(omega, walk, env, beta, n, eo);

    DoobTrace tr;
    tr.beta = beta;
    tr.n = n;
    tr.n0 = opts.n0;
    tr.resamples = resamples;
    tr.g0_origin = g0.at(Point{}.data());
    tr.delta = opts.delta;
    tr.C_analytic = analytic_aincrement_constant(env, beta, opts.n0);
    if (opts.C >= 0.0) {
        tr.C = opts.C;
    } else {
        tr.C_bruteforce = calibrate_aincrement_constant(walk, env, beta, opts.n0, 8, 6, seed);
        tr.C = std::max(tr.C_bruteforce, tr.C_analytic);
    }
    tr.J0 = st.green_form[0];

    const double chi = env.chi(beta);
    const double chi3 = env.chi3(beta);
    const double lam = env.lambda(beta);
    double M = 0.0, A = 0.0;
    for (int k = 1; k <= n; ++k) {
        const Grid dmu = endpoint_pushforward(st, walk, k);
        const auto sites = support_of(dmu);
        const double j_prev = st.green_form[static_cast<std::size_t>(k - 1)];
        std::vector<double> logs(resamples), djs(resamples);
        parallel_for(resamples, opts.workers, [&](std::size_t r) {
            const CounterField fresh(env, walk.dim(), seed, static_cast<std::uint32_t>(r),
                                     Purpose::resample);
            std::vector<double> weight(sites.size());
            double ratio = 0.0;
            for (std::size_t i = 0; i < sites.size(); ++i) {
                weight[i] = std::exp(beta * fresh(k, sites[i].x.data()) - lam);
                ratio += sites[i].a * weight[i];
            }
            logs[r] = std::log(ratio);
            djs[r] = reweighted_green(dmu, sites, weight, g0) - j_prev;
        });
        const Estimate el = estimate(logs);
        const Estimate ej = estimate(djs);

        DoobStep s;
        s.k = k;
        s.overlap = st.overlap[static_cast<std::size_t>(k)];
        s.log_ratio = st.log_w[static_cast<std::size_t>(k)] - st.log_w[static_cast<std::size_t>(k - 1)];
        s.cond_log = el.mean;
        s.cond_log_se = el.se;
        M += s.log_ratio - s.cond_log;
        s.M = M;
        s.J = st.green_form[static_cast<std::size_t>(k)];
        s.cond_dJ = ej.mean;
        s.cond_dJ_se = ej.se;
        A += s.cond_dJ;
        s.A = A;
        s.N = (s.J - tr.J0) - A;
        s.rough_bound = rough_term(dmu, g0, chi, chi3, s.overlap);
        s.lafete_bound = (chi * tr.g0_origin - 1.0) * s.overlap - tr.C * std::pow(s.overlap, 1.5);
        s.jensen_ok = s.cond_log <= 4.0 * s.cond_log_se + 1e-15;
        if (s.overlap <= opts.delta)
            s.aincrement_ok = s.cond_dJ >= s.lafete_bound - 4.0 * s.cond_dJ_se - 1e-12;
        tr.jensen_ok = tr.jensen_ok && s.jensen_ok;
        tr.aincrement_ok = tr.aincrement_ok && s.aincrement_ok;
        tr.steps.push_back(s);
    }
    return tr;
}

}  // namespace dpre
