#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "dpre/env_laws.hpp"
#include "dpre/errors.hpp"
#include "dpre/rng.hpp"
#include "dpre/stats.hpp"

using namespace dpre;

namespace {

std::vector<EnvLaw> families() {
    return {EnvLaw::gaussian(), EnvLaw::rademacher(), EnvLaw::shifted_exponential(),
            EnvLaw::tabulated({-2.0, 0.5}, {0.2, 0.8})};
}

}  // namespace

TEST_CASE("log-mgf closed forms") {
    const EnvLaw g = EnvLaw::gaussian();
    CHECK(g.lambda(0.0) == 0.0);
    CHECK(g.lambda(0.7) == doctest::Approx(0.245).epsilon(1e-15));
    const EnvLaw r = EnvLaw::rademacher();
    CHECK(r.lambda(1.0) == doctest::Approx(std::log(std::cosh(1.0))).epsilon(1e-15));
    CHECK(r.lambda(1.0) == doctest::Approx(0.4338).epsilon(1e-4));
    const EnvLaw e = EnvLaw::shifted_exponential();
    CHECK(e.lambda(0.5) == doctest::Approx(-0.5 - std::log(0.5)).epsilon(1e-14));
}

TEST_CASE("log-mgf against numerical quadrature") {
    const EnvLaw g = EnvLaw::gaussian();
    const EnvLaw e = EnvLaw::shifted_exponential();
    for (double b : {-1.5, -0.3, 0.25, 0.9, 2.0})
        CHECK(g.lambda(b) == doctest::Approx(oracle::gaussian_lambda_quadrature(b)).epsilon(1e-10));
    for (double b : {-2.0, -0.5, 0.2, 0.6, 0.9})
        CHECK(e.lambda(b) == doctest::Approx(oracle::shifted_exponential_lambda_quadrature(b)).epsilon(1e-10));
}

TEST_CASE("every family is standardised") {
    for (const EnvLaw& law : families()) {
        CAPTURE(family_name(law.family()));
        CHECK(std::abs(law.lambda(0.0)) < 1e-15);
        CHECK(std::abs(law.lambda_prime(0.0)) < 1e-10);
        CHECK(law.lambda_second(0.0) == doctest::Approx(1.0).epsilon(1e-10));
    }
    CHECK_THROWS_AS(EnvLaw::tabulated({0.0, 1.0}, {0.5, 0.5}), ValidationError);
}

TEST_CASE("domain errors name the boundary") {
    const EnvLaw e = EnvLaw::shifted_exponential();
    CHECK_THROWS_AS(e.lambda(1.0), DomainError);
    try {
        e.check_domain(1.5);
        FAIL("no throw");
    } catch (const DomainError& err) {
        CHECK(std::string(err.what()).find('1') != std::string::npos);
    }
    CHECK_THROWS_AS(e.chi(0.6), DomainError);  // needs 2 beta < 1
    CHECK_NOTHROW(e.chi(0.4));
}

TEST_CASE("chi and chi3") {
    const EnvLaw g = EnvLaw::gaussian();
    CHECK(g.chi(0.0) == 0.0);
    CHECK(g.chi(1.0) == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
    CHECK(g.chi3(1.0) == doctest::Approx(std::exp(3.0) - 3.0 * std::exp(1.0) + 2.0).epsilon(1e-13));
    CHECK(g.chi3(1.0) == doctest::Approx(13.93).epsilon(1e-3));
    for (const EnvLaw& law : families())
        for (double b : {-0.3, 0.1, 0.4}) CHECK(law.chi(b) > 0.0);
}

TEST_CASE("lambda is convex on a grid") {
    for (const EnvLaw& law : families()) {
        const double hi = std::min(3.0, law.domain().hi - 0.05);
        const double lo = std::max(-3.0, law.domain().lo + 0.05);
        const int m = 200;
        const double h = (hi - lo) / m;
        for (int i = 1; i < m; ++i) {
            const double b = lo + i * h;
            CHECK(law.lambda(b + h) - 2.0 * law.lambda(b) + law.lambda(b - h) >= -1e-9);
        }
    }
}

TEST_CASE("tilted sampling") {
    const EnvLaw g = EnvLaw::gaussian();
    {
        const auto a = tilted_sample(g, 0.0, 1000, 3);
        // beta = 0 draws from the base law.
        RunningStats st;
        for (double v : a) st.add(v);
        CHECK(std::abs(st.mean()) < 4.0 * st.standard_error());
    }
    {
        const auto a = tilted_sample(g, 0.5, 100000, 4);
        RunningStats st;
        for (double v : a) st.add(v);
        CHECK(std::abs(st.mean() - 0.5) < 3.0 / std::sqrt(1e5));
    }
    {
        const auto a = tilted_sample(EnvLaw::rademacher(), 1.0, 100000, 5);
        double plus = 0.0;
        for (double v : a) plus += v > 0.0;
        const double p = std::exp(1.0) / (std::exp(1.0) + std::exp(-1.0));
        CHECK(p == doctest::Approx(0.8808).epsilon(1e-4));
        CHECK(std::abs(plus / 1e5 - p) < 4.0 * std::sqrt(p * (1 - p) / 1e5));
    }
}

TEST_CASE("tilt mean identity for every family") {
    for (const EnvLaw& law : families())
        for (double b : {0.25, 0.5, 0.9}) {
            CAPTURE(family_name(law.family()));
            CAPTURE(b);
            const auto a = tilted_sample(law, b, 40000, 6);
            RunningStats st;
            for (double v : a) st.add(v);
            CHECK(std::abs(st.mean() - law.lambda_prime(b)) < 4.0 * st.standard_error());
        }
}

TEST_CASE("size-bias consistency: E[e^{beta w - lambda} f(w)] equals the tilted mean of f") {
    const double beta = 0.5;
    for (const EnvLaw& law : families()) {
        CAPTURE(family_name(law.family()));
        const double lam = law.lambda(beta);
        RunningStats d1, d2, t1, t2;
        CounterStream s(9, Purpose::field, 0, 0);
        for (int i = 0; i < 40000; ++i) {
            const double w = law.sample(s.next_pair());
            const double weight = std::exp(beta * w - lam);
            d1.add(weight * w);
            d2.add(weight * w * w);
        }
        for (double w : tilted_sample(law, beta, 40000, 10)) {
            t1.add(w);
            t2.add(w * w);
        }
        CHECK(std::abs(d1.mean() - t1.mean()) < 4.0 * std::hypot(d1.standard_error(), t1.standard_error()));
        CHECK(std::abs(d2.mean() - t2.mean()) < 4.0 * std::hypot(d2.standard_error(), t2.standard_error()));
    }
}

TEST_CASE("sampled moments for every family") {
    for (const EnvLaw& law : families()) {
        CAPTURE(family_name(law.family()));
        RunningStats st;
        CounterStream s(12, Purpose::field, 0, 0);
        for (int i = 0; i < 200000; ++i) st.add(law.sample(s.next_pair()));
        CHECK(std::abs(st.mean()) < 4.0 * st.standard_error());
        CHECK(std::abs(st.variance() - 1.0) < 0.03);
    }
}

TEST_CASE("convex log-moment check") {
    const EnvLaw g = EnvLaw::gaussian();
    const LogMomentReport one = convex_logmoment_check(g, {1.0}, 0.5, 20000, 1);
    // log U = beta omega - lambda, so E[log 1/U] = lambda(0.5) = 0.125.
    CHECK(std::abs(one.mean_log_inv_u - 0.125) < 4.0 * one.se_log_inv_u);
    const LogMomentReport flat = convex_logmoment_check(g, {0.5, 0.5}, 0.0, 1000, 1);
    CHECK(flat.mean_log_inv_u == 0.0);
    const std::vector<double> uniform(100, 0.01);
    const LogMomentReport u = convex_logmoment_check(g, uniform, 0.5, 100000, 2);
    CHECK(u.alpha_sq == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(u.ratio_log_inv_u >= 0.05);
    CHECK(u.ratio_log_inv_u <= 5.0);
    // Bracket measured once on the gaussian family across spread-out weights.
    for (int m : {2, 10, 50}) {
        const std::vector<double> w(static_cast<std::size_t>(m), 1.0 / m);
        const LogMomentReport r = convex_logmoment_check(g, w, 0.5, 50000, 3);
        CHECK(r.ratio_log_inv_u > 0.05);
        CHECK(r.ratio_log_inv_u < 0.2);
        CHECK(r.ratio_log_u_sq > 0.1);
        CHECK(r.ratio_log_u_sq < 0.5);
    }
    CHECK_THROWS_AS(convex_logmoment_check(g, {0.3, 0.3}, 0.5, 10, 1), ValidationError);
}

TEST_CASE("environment document round trip") {
    for (const EnvLaw& law : families()) {
        const EnvLaw r = env_from_json(env_to_json(law));
        CHECK(r.family() == law.family());
        CHECK(r.values() == law.values());
        CHECK(r.probs() == law.probs());
        CHECK(r.lambda(0.3) == law.lambda(0.3));
    }
    CHECK_THROWS_AS(env_from_json("{\"family\": \"cauchy\"}"), ValidationError);
}
