#include "dpre/renewal.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "dpre/collision.hpp"
#include "dpre/errors.hpp"
#include "dpre/parallel.hpp"
#include "dpre/rng.hpp"

namespace dpre {

namespace {

void finish_survival(RenewalLaw& law) {
    law.survival.assign(law.K.size() + 1, 1.0);
    double s = 1.0;
    for (std::size_t n = 0; n < law.K.size(); ++n) {
        s -= law.K[n];
        law.survival[n + 1] = std::max(0.0, s);
    }
    law.defect = law.survival.back();
}

RenewalLaw taboo_renewal(const WalkLaw& walk, int horizon) {
    const WalkLaw diff = difference_walk(walk);
    const double side = 2.0 * horizon * diff.reach() + 1.0;
    const double cells = std::pow(side, diff.dim());
    if (cells > 5e7 || cells * horizon * static_cast<double>(diff.entries().size()) > 5e11)
        throw ResourceError("taboo recursion too large for this horizon; use mode mc");
    RenewalLaw law;
    law.mode = "taboo";
    Grid cur(Box::point(diff.dim()), 1.0);
    const Point origin{};
    for (int n = 1; n <= horizon; ++n) {
        cur = push_forward(cur, diff, nullptr, nullptr);
        double& at0 = cur.values[cur.box.index(origin.data())];
        law.K.push_back(at0);
        at0 = 0.0;
    }
    finish_survival(law);
    CompensatedSum u;
    const auto mass = renewal_mass(law, horizon);
    for (std::size_t m = 1; m < mass.size(); ++m) u.add(mass[m]);
    law.escape_upper = 1.0 / (1.0 + u.value());
    return law;
}

RenewalLaw deconvolution_renewal(const WalkLaw& walk, int horizon) {
    const CollisionSeries cs = collision_series(walk, horizon);
    const auto& u = cs.terms;  // u[n-1] = P(Y_n = 0)
    RenewalLaw law;
    law.mode = "deconvolution";
    law.K.resize(static_cast<std::size_t>(horizon));
    for (int n = 1; n <= horizon; ++n) {
        double acc = u[static_cast<std::size_t>(n - 1)];
        for (int m = 1; m < n; ++m)
            acc -= law.K[static_cast<std::size_t>(m - 1)] * u[static_cast<std::size_t>(n - m - 1)];
        law.K[static_cast<std::size_t>(n - 1)] = std::max(0.0, acc);
    }
    finish_survival(law);
    law.escape_upper = 1.0 / (1.0 + cs.partial_sum(horizon));
    return law;
}

RenewalLaw mc_renewal(const WalkLaw& walk, int horizon, std::size_t budget, std::uint64_t seed,
                      int workers) {
    if (budget < 2) throw ValidationError("mc renewal needs a budget of at least 2 pairs");
    const StepSampler sampler(walk);
    const int d = walk.dim();
    std::vector<int> meet(budget, 0);  // 0 = no meeting within horizon
    parallel_for(budget, workers, [&](std::size_t i) {
        CounterStream cs(seed, Purpose::walk_pair, static_cast<std::uint32_t>(i),
                         static_cast<std::uint32_t>(i >> 32));
        Point y{};
        for (int t = 1; t <= horizon; ++t) {
            const auto& a = sampler.draw(cs.uniform());
            const auto& b = sampler.draw(cs.uniform());
            bool zero = true;
            for (int j = 0; j < d; ++j) {
                y[j] += a.step[j] - b.step[j];
                zero = zero && y[j] == 0;
            }
            if (zero) {
                meet[i] = t;
                return;
            }
        }
    });
    RenewalLaw law;
    law.mode = "mc";
    law.samples = budget;
    std::vector<std::size_t> counts(static_cast<std::size_t>(horizon), 0);
    for (int t : meet)
        if (t > 0) ++counts[static_cast<std::size_t>(t - 1)];
    const double nb = static_cast<double>(budget);
    for (std::size_t c : counts) {
        const double p = static_cast<double>(c) / nb;
        law.K.push_back(p);
        law.K_se.push_back(std::sqrt(p * (1.0 - p) / nb));
    }
    finish_survival(law);
    law.defect_se = std::sqrt(law.defect * (1.0 - law.defect) / nb);
    return law;
}

}  // namespace

RenewalLaw intersection_renewal(const WalkLaw& walk, int horizon, const std::string& mode,
                                std::size_t mc_budget, std::uint64_t seed, int workers) {
    if (horizon < 1) throw ValidationError("renewal horizon must be >= 1");
    if (mode == "taboo") return taboo_renewal(walk, horizon);
    if (mode == "deconvolution") return deconvolution_renewal(walk, horizon);
    if (mode == "mc") return mc_renewal(walk, horizon, mc_budget, seed, workers);
    if (mode != "exact") throw ValidationError("unknown renewal mode '" + mode + "'");
    if (walk.is_simple() && walk.dim() >= 2 && walk.dim() <= 3)
        return deconvolution_renewal(walk, horizon);
    return taboo_renewal(walk, horizon);
}

RenewalLaw geometric_renewal(double q, int horizon) {
    if (!(q >= 0.0 && q < 1.0)) throw ValidationError("geometric parameter must lie in [0, 1)");
    if (horizon < 1) throw ValidationError("renewal horizon must be >= 1");
    RenewalLaw law;
    law.mode = "geometric";
    double w = 1.0 - q;
    for (int n = 1; n <= horizon; ++n) {
        law.K.push_back(w);
        w *= q;
    }
    finish_survival(law);
    // Exact survival q^n.
    for (int n = 0; n <= horizon; ++n) law.survival[static_cast<std::size_t>(n)] = std::pow(q, n);
    law.defect = law.survival.back();
    return law;
}

RenewalLaw renewal_from_table(std::vector<double> K, double tolerance) {
    if (K.empty()) throw ValidationError("empty interarrival table");
    double total = 0.0;
    for (double k : K) {
        if (!(k >= 0.0)) throw ValidationError("interarrival probabilities must be nonnegative");
        total += k;
    }
    if (total > 1.0 + tolerance) throw ValidationError("interarrival probabilities sum above 1");
    RenewalLaw law;
    law.mode = "table";
    law.K = std::move(K);
    finish_survival(law);
    return law;
}

std::vector<double> tilted_interarrival(const RenewalLaw& law, double factor) {
    std::vector<double> out(law.K.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = factor * law.K[i];
    return out;
}

std::vector<double> renewal_mass(const RenewalLaw& law, int n) {
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    u[0] = 1.0;
    for (int m = 1; m <= n; ++m) {
        double s = 0.0;
        for (int j = 1; j <= m; ++j) s += law.k_at(j) * u[static_cast<std::size_t>(m - j)];
        u[static_cast<std::size_t>(m)] = s;
    }
    return u;
}

CountBoundReport renewal_count_bound_check(const RenewalLaw& law, int n, int k) {
    if (n < 1 || n > law.horizon()) throw ValidationError("n must lie in [1, horizon]");
    if (k < 0) throw ValidationError("k must be >= 0");
    if (law.defect > 0.05)
        throw ValidationError("renewal defect " + std::to_string(law.defect) +
                              " exceeds 0.05; the count bound is for recurrent renewals");
    CountBoundReport r;
    r.n = n;
    r.k = k;
    r.mode = law.mode;
    // Distribution of tau_{k+1} on [0, n] by repeated convolution.
    std::vector<double> dist(static_cast<std::size_t>(n) + 1, 0.0);
    dist[0] = 1.0;
    for (int j = 0; j <= k; ++j) {
        std::vector<double> next(dist.size(), 0.0);
        for (int m = 0; m <= n; ++m) {
            const double a = dist[static_cast<std::size_t>(m)];
            if (a == 0.0) continue;
            for (int t = 1; m + t <= n; ++t) next[static_cast<std::size_t>(m + t)] += a * law.k_at(t);
        }
        dist.swap(next);
    }
    double reached = 0.0;
    for (double v : dist) reached += v;
    r.lhs = std::max(0.0, 1.0 - reached);
    if (law.samples > 0) r.lhs_se = std::sqrt(r.lhs * (1.0 - r.lhs) / static_cast<double>(law.samples));
    for (int j = 0; j < n; ++j) r.alpha_n += law.survival[static_cast<std::size_t>(j)];
    r.rhs = (k + 1) * r.alpha_n / n;
    const auto u = renewal_mass(law, n);
    for (int m = 1; m <= n; ++m) r.expected_count += u[static_cast<std::size_t>(m)];
    const double tail = law.survival[static_cast<std::size_t>(n)];
    r.count_cap = tail > 0.0 ? std::min(1.0 / tail, static_cast<double>(n)) : static_cast<double>(n);
    const double slack = law.samples > 0 ? 4.0 * r.lhs_se : 1e-12;
    r.holds = r.lhs <= r.rhs + slack;
    r.count_ok = r.expected_count <= r.count_cap + 1e-9;
    return r;
}

std::string renewal_table(const RenewalLaw& law) {
    std::ostringstream os;
    os << "n\tK\tK_se\tsurvival\n";
    char buf[128];
    for (int n = 1; n <= law.horizon(); ++n) {
        const auto i = static_cast<std::size_t>(n - 1);
        std::snprintf(buf, sizeof buf, "%d\t%.17g\t%.17g\t%.17g\n", n, law.K[i],
                      law.K_se.empty() ? 0.0 : law.K_se[i], law.survival[i + 1]);
        os << buf;
    }
    return os.str();
}

}  // namespace dpre
