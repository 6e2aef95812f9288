#include "dpre/exponents.hpp"

#include <cmath>
#include <map>

#include "dpre/collision.hpp"
#include "dpre/errors.hpp"
#include "dpre/polymer.hpp"
#include "dpre/renewal.hpp"

namespace dpre {

namespace {

double euclid(const Point& x, int d) {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += static_cast<double>(x[i]) * x[i];
    return std::sqrt(s);
}

LogLogFit tail_fit(const WalkLaw& law) {
    // P(|X_1| >= u) on a geometric grid of u; truncated mass counts as far away.
    std::map<double, double> mass_at;
    for (const auto& e : law.entries()) mass_at[euclid(e.step, law.dim())] += e.prob;
    std::vector<double> xs, ys;
    const double rmax = law.support_radius();
    for (double u = 1.0; u <= rmax; u *= std::sqrt(2.0)) {
        double tail = law.truncation_loss();
        for (auto it = mass_at.lower_bound(u - 1e-12); it != mass_at.end(); ++it) tail += it->second;
        xs.push_back(u);
        ys.push_back(tail);
    }
    return fit_power_law(xs, ys);
}

}  // namespace

WalkExponents estimate_exponents(const WalkLaw& law, int k_lo, int k_hi, std::size_t mc_budget,
                                 std::uint64_t seed, int workers) {
    if (k_lo < 1 || k_hi < 2 * k_lo) throw ValidationError("k range must satisfy 1 <= k_lo, 2 k_lo <= k_hi");
    WalkExponents ex;
    ex.k_lo = k_lo;
    ex.k_hi = k_hi;
    const int d = law.dim();

    if (!law.finite_support()) {
        ex.eta_fit = tail_fit(law);
        ex.eta = ex.eta_fit.exponent;
    }
    ex.eta_bar = std::min(ex.eta, 1.0);

    const std::vector<double> sup = sup_norm_series(law, k_hi);
    const std::vector<int> grid = log_grid(k_lo, k_hi / 2, 4, law.symmetric());
    std::vector<double> xs, ys;
    for (int k : grid) {
        xs.push_back(k);
        ys.push_back(sup[static_cast<std::size_t>(k - 1)]);
    }
    ex.nu.fit = fit_power_law(xs, ys);
    ex.nu.value = ex.nu.fit.exponent;
    ex.nu.method = law.symmetric() ? "even-step collision identity" : "kernel iteration";

    const CollisionSeries cs = collision_series(law, k_hi);
    ex.transient_difference = cs.partial_sum(k_hi) - cs.partial_sum(k_hi / 2) <= 0.05;

    RenewalLaw ren;
    try {
        ren = intersection_renewal(law, k_hi, "exact");
    } catch (const ResourceError&) {
        if (mc_budget < 2) throw;
        ren = intersection_renewal(law, k_hi, "mc", mc_budget, seed, workers);
    }
    ex.alpha.method = ren.mode;
    // P(n <= T < infinity): the part of the survival beyond the horizon counts only when recurrent.
    const double beyond = ex.transient_difference ? 0.0 : ren.defect;
    xs.clear();
    ys.clear();
    for (int n : log_grid(k_lo, k_hi / 2, 4)) {
        xs.push_back(n);
        ys.push_back(ren.survival[static_cast<std::size_t>(n - 1)] - ren.defect + beyond);
    }
    ex.alpha.fit = fit_power_law(xs, ys);
    ex.alpha.value = ex.alpha.fit.exponent;

    if (ex.transient_difference) {
        const double cap = d / std::min(2.0, ex.eta);
        const double slack = 0.15;
        ex.ordering_ok = ex.nu.value <= ex.alpha.value + 1.0 + slack &&
                         ex.alpha.value + 1.0 <= cap + slack;
        ex.ordering_note = ex.ordering_ok ? "nu <= alpha + 1 <= d / (2 min eta) within 0.15"
                                          : "fitted exponents violate nu <= alpha + 1 <= d / (2 min eta)";
    } else {
        ex.ordering_note = "difference walk recurrent; ordering not applicable";
    }
    return ex;
}

}  // namespace dpre
