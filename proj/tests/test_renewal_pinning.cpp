#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "dpre/collision.hpp"
#include "dpre/criteria.hpp"
#include "dpre/errors.hpp"
#include "dpre/field.hpp"
#include "dpre/pinning.hpp"
#include "dpre/renewal.hpp"
#include "dpre/rng.hpp"

using namespace dpre;

namespace {

WalkLaw lazy_walk() { return WalkLaw(1, {{Point{-1}, 0.3}, {Point{0}, 0.2}, {Point{1}, 0.5}}, "lazy drift"); }

// P(Bin(n, p) <= k).
double binomial_cdf(int n, double p, int k) {
    double s = 0.0;
    for (int j = 0; j <= std::min(k, n); ++j)
        s += std::exp(oracle::log_choose(n, j) + j * std::log(p) + (n - j) * std::log1p(-p));
    return s;
}

std::vector<double> tilted_draws(const EnvLaw& env, double beta, int n, std::uint64_t seed) {
    return tilted_sample(env, beta, static_cast<std::size_t>(n), seed);
}

}  // namespace

TEST_CASE("first meeting law against path enumeration") {
    const RenewalLaw s = intersection_renewal(make_simple_walk(1), 8);
    CHECK(s.k_at(1) == 0.5);
    for (const WalkLaw& w : {make_simple_walk(1), lazy_walk()}) {
        const RenewalLaw r = intersection_renewal(w, 7);
        const auto K = oracle::brute_first_meeting_1d(w, 7);
        for (int n = 1; n <= 7; ++n) CHECK(r.k_at(n) == doctest::Approx(K[static_cast<std::size_t>(n - 1)]).epsilon(1e-12));
    }
}

TEST_CASE("exact modes agree") {
    const WalkLaw w = lazy_walk();
    const RenewalLaw a = intersection_renewal(w, 120, "taboo");
    const RenewalLaw b = intersection_renewal(w, 120, "deconvolution");
    CHECK(a.mode == "taboo");
    CHECK(b.mode == "deconvolution");
    for (int n = 1; n <= 120; ++n) CHECK(a.k_at(n) == doctest::Approx(b.k_at(n)).epsilon(1e-9));
    CHECK(a.defect == doctest::Approx(b.defect).epsilon(1e-9));
}

TEST_CASE("Monte Carlo mode against the exact law") {
    const WalkLaw w = make_simple_walk(1);
    const RenewalLaw e = intersection_renewal(w, 40);
    const RenewalLaw m = intersection_renewal(w, 40, "mc", 40000, 9);
    CHECK(m.mode == "mc");
    CHECK(m.samples == 40000);
    for (int n = 1; n <= 40; ++n) {
        const double se = m.K_se[static_cast<std::size_t>(n - 1)];
        CHECK(std::abs(m.k_at(n) - e.k_at(n)) <= 4.0 * se + 1e-12);
    }
    CHECK(std::abs(m.defect - e.defect) <= 4.0 * m.defect_se + 1e-12);
}

TEST_CASE("survival is nonincreasing and consistent with K") {
    for (const WalkLaw& w : {make_simple_walk(1), make_simple_walk(2), make_simple_walk(3)}) {
        const RenewalLaw r = intersection_renewal(w, 300);
        REQUIRE(r.survival.size() == 301);
        CHECK(r.survival[0] == 1.0);
        double run = 1.0;
        for (int n = 1; n <= 300; ++n) {
            CHECK(r.survival[static_cast<std::size_t>(n)] <= r.survival[static_cast<std::size_t>(n - 1)]);
            run -= r.k_at(n);
            CHECK(r.survival[static_cast<std::size_t>(n)] == doctest::Approx(run).epsilon(1e-9));
        }
        CHECK(r.defect == r.survival.back());
        CHECK(r.escape_upper > 0.0);
    }
}

TEST_CASE("recurrence and transience of the meeting time") {
    const RenewalLaw one = intersection_renewal(make_simple_walk(1), 10000);
    CHECK(one.defect < 0.02);
    const RenewalLaw a = intersection_renewal(make_simple_walk(3), 500);
    const RenewalLaw b = intersection_renewal(make_simple_walk(3), 1000);
    CHECK(a.defect > 0.5);
    CHECK(std::abs(a.defect - b.defect) < 0.01);
    // Escape probability 1 / (1 + sum_k P(S_{2k} = 0)).
    double S = 0.0;
    for (int k = 1; k <= 1000; ++k) S += oracle::simple3_return(k);
    CHECK(b.escape_upper == doctest::Approx(1.0 / (1.0 + S)).epsilon(1e-8));
    // Upper bound on the true escape probability 1 / (1 + 0.5164...).
    CHECK(b.escape_upper >= 0.659);
}

TEST_CASE("renewal mass") {
    const RenewalLaw g = geometric_renewal(0.5, 30);
    const auto u = renewal_mass(g, 30);
    CHECK(u[0] == 1.0);
    for (int m = 1; m <= 30; ++m) CHECK(u[static_cast<std::size_t>(m)] == doctest::Approx(0.5).epsilon(1e-13));
    // Walk renewal: u_m = P(X_m = X'_m).
    const RenewalLaw r = intersection_renewal(make_simple_walk(1), 50);
    const auto v = renewal_mass(r, 50);
    for (int m = 1; m <= 50; ++m) CHECK(v[static_cast<std::size_t>(m)] == doctest::Approx(oracle::simple1_return(m)).epsilon(1e-10));
}

TEST_CASE("count bound on the geometric renewal") {
    const RenewalLaw g = geometric_renewal(0.5, 64);
    for (int n = 1; n <= 20; ++n)
        for (int k = 0; k <= 10; ++k) {
            const CountBoundReport r = renewal_count_bound_check(g, n, k);
            CHECK(r.lhs == doctest::Approx(binomial_cdf(n, 0.5, k)).epsilon(1e-11));
            CHECK(r.alpha_n == doctest::Approx((1.0 - std::pow(0.5, n)) / 0.5).epsilon(1e-12));
            CHECK(r.rhs == doctest::Approx((k + 1) * r.alpha_n / n).epsilon(1e-14));
            CHECK(r.lhs <= r.rhs);
            CHECK(r.holds);
            CHECK(r.expected_count == doctest::Approx(0.5 * n).epsilon(1e-12));
            CHECK(r.count_ok);
        }
    const CountBoundReport big = renewal_count_bound_check(g, 5, 7);
    CHECK(big.holds);
    const RenewalLaw leaky = renewal_from_table({0.5, 0.1});
    CHECK(leaky.defect == doctest::Approx(0.4));
    CHECK_THROWS_AS(renewal_count_bound_check(leaky, 2, 1), ValidationError);
}

TEST_CASE("count bound on the walk renewal") {
    const RenewalLaw r = intersection_renewal(make_simple_walk(1), 10000);
    for (int n : {10, 100, 1000})
        for (int k : {0, 2, 8}) {
            const CountBoundReport c = renewal_count_bound_check(r, n, k);
            CHECK(c.holds);
            CHECK(c.count_ok);
        }
}

TEST_CASE("pinning recursion against two-walk enumeration") {
    const EnvLaw env = EnvLaw::gaussian();
    for (const WalkLaw& w : {make_simple_walk(1), lazy_walk()}) {
        const RenewalLaw law = intersection_renewal(w, 6);
        for (double beta : {0.3, 1.0})
            for (int n = 1; n <= 6; ++n) {
                const auto om = tilted_draws(env, beta, n, 100 + n);
                const PinningState s = pinning_partition(law, env, beta, om);
                const long double c = oracle::brute_pinning_1d(w, env, beta, om, true);
                const long double f = oracle::brute_pinning_1d(w, env, beta, om, false);
                CHECK(std::abs(s.Zc[static_cast<std::size_t>(n)] - static_cast<double>(c)) < 1e-10);
                CHECK(std::abs(s.Z[static_cast<std::size_t>(n)] - static_cast<double>(f)) < 1e-10);
                CHECK(pinning_bruteforce_constrained(w, env, beta, om) == doctest::Approx(static_cast<double>(c)).epsilon(1e-12));
                CHECK(pinning_bruteforce_free(w, env, beta, om) == doctest::Approx(static_cast<double>(f)).epsilon(1e-12));
                CHECK(s.Z_survival[static_cast<std::size_t>(n)] == doctest::Approx(s.Z[static_cast<std::size_t>(n)]).epsilon(1e-12));
            }
    }
}

TEST_CASE("pinning at beta = 0") {
    const EnvLaw env = EnvLaw::rademacher();
    const RenewalLaw law = intersection_renewal(make_simple_walk(1), 200);
    const PinningState s = pinning_partition(law, env, 0.0, 200, 4);
    const auto u = renewal_mass(law, 200);
    for (int n = 0; n <= 200; ++n) {
        CHECK(s.Z[static_cast<std::size_t>(n)] == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s.Zc[static_cast<std::size_t>(n)] == doctest::Approx(u[static_cast<std::size_t>(n)]).epsilon(1e-12));
    }
    CHECK_THROWS_AS(pinning_partition(law, env, 0.5, 201, 4), ValidationError);
}

TEST_CASE("annealed and size-bias identities") {
    const EnvLaw env = EnvLaw::gaussian();
    const RenewalLaw law = intersection_renewal(make_simple_walk(1), 10);
    const AnnealedReport a = annealed_check(law, env, 0.5, 10, 20000, 3);
    CHECK(std::abs(a.z_score) < 4.0);
    CHECK(a.annealed > 0.0);
    const auto om = tilted_draws(env, 0.5, 8, 21);
    const SizeBiasLinkReport l = size_bias_link_check(make_simple_walk(1), env, 0.5, om, 8, 20000, 5);
    CHECK(std::abs(l.z_score) < 4.0);
    const PinningState s = pinning_partition(intersection_renewal(make_simple_walk(1), 8), env, 0.5, om);
    CHECK(l.Z == doctest::Approx(s.Z[8]).epsilon(1e-12));
}

TEST_CASE("tilted interarrival normalises at beta_2 in d = 3") {
    const EnvLaw env = EnvLaw::gaussian();
    Beta2Options o;
    o.horizon = 2000;
    const Beta2Result b = beta2(make_simple_walk(3), env, o);
    REQUIRE(b.verdict == "positive");
    const RenewalLaw law = intersection_renewal(make_simple_walk(3), 2000);
    const double chi = env.chi(b.beta2);
    const auto kpp = tilted_interarrival(law, 1.0 + chi);
    double s = 0.0;
    for (double v : kpp) s += v;
    CHECK(kpp[0] == doctest::Approx((1.0 + chi) * law.k_at(1)).epsilon(1e-15));
    CHECK(std::abs(s - 1.0) <= (1.0 + chi) * b.remainder + 1e-6);
}

TEST_CASE("change of measure diagnostic") {
    const EnvLaw env = EnvLaw::gaussian();
    const double m = std::exp(4.0);
    const ChangeOfMeasure c = change_of_measure_diagnostic(env, 0.6, m, 20000, 2);
    CHECK(c.epsilon == doctest::Approx(1.0 / std::sqrt(m * 4.0)).epsilon(1e-12));
    CHECK(c.epsilon == doctest::Approx(0.0677).epsilon(0.01));
    CHECK(c.gamma == doctest::Approx(0.75).epsilon(1e-12));
    CHECK(c.beta == doctest::Approx(0.6 + 1.0 / (m * m)).epsilon(1e-12));
    CHECK(c.tilt_mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(c.tilt_mean_mc - 1.0) < 4.0 * c.tilt_mean_se);
    CHECK(c.penalty >= 0.0);
    CHECK(c.penalty <= c.penalty_bound * (1.0 + 1e-9));
    CHECK(c.curvature == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(change_of_measure_diagnostic(env, 0.0, m), ValidationError);
    CHECK_THROWS_AS(change_of_measure_diagnostic(env, 0.6, 2.0), ValidationError);
    const ChangeOfMeasure r = change_of_measure_diagnostic(EnvLaw::rademacher(), 0.6, m, 20000, 3);
    CHECK(r.tilt_mean == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("fractional moments of the constrained partition function") {
    const EnvLaw env = EnvLaw::gaussian();
    const RenewalLaw law = intersection_renewal(make_simple_walk(1), 30);
    const ConstrainedMoments one = constrained_fractional_moments(law, env, 0.5, 1.0, 10, 20000, 3);
    const AnnealedReport a = annealed_check(law, env, 0.5, 10, 20000, 3);
    // gamma = 1 is the plain mean, computed from the same sequences.
    CHECK(one.B[10] == doctest::Approx(a.mc_mean).epsilon(1e-12));
    CHECK(one.annealed[10] == doctest::Approx(a.annealed).epsilon(1e-14));
    const ConstrainedMoments cm = constrained_fractional_moments(law, env, 0.5, 0.75, 30, 5000, 4);
    CHECK(cm.B[0] == 1.0);
    for (std::size_t k = 0; k < cm.B.size(); ++k) CHECK(cm.B[k] <= cm.annealed[k] + 4.0 * cm.B_se[k]);
    const ConstrainedMoments zero = constrained_fractional_moments(law, env, 0.0, 0.5, 20, 10, 1);
    const auto u = renewal_mass(law, 20);
    for (int k = 0; k <= 20; ++k) CHECK(zero.B[static_cast<std::size_t>(k)] == doctest::Approx(u[static_cast<std::size_t>(k)]).epsilon(1e-12));
    CHECK_THROWS_AS(constrained_fractional_moments(law, env, 0.5, 1.5, 10, 10, 1), ValidationError);
}
