#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include "doctest.h"

#include "dpre/env_laws.hpp"
#include "dpre/errors.hpp"
#include "dpre/field.hpp"
#include "dpre/lattice.hpp"
#include "dpre/parallel.hpp"
#include "dpre/report.hpp"
#include "dpre/rng.hpp"
#include "dpre/stats.hpp"

using namespace dpre;

TEST_CASE("philox known-answer vectors") {
    // Reference outputs of Philox4x32-10 published with Random123.
    CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == PhiloxCounter{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          PhiloxCounter{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          PhiloxCounter{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("uniforms stay in the open unit interval") {
    CHECK(to_unit_open(0, 0) > 0.0);
    CHECK(to_unit_open(0xffffffffu, 0xffffffffu) < 1.0);
    CounterStream s(7, Purpose::field, 0, 0);
    RunningStats st;
    for (int i = 0; i < 100000; ++i) {
        const double u = s.uniform();
        REQUIRE(u > 0.0);
        REQUIRE(u < 1.0);
        st.add(u);
    }
    CHECK(std::abs(st.mean() - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / 1e5));
}

TEST_CASE("purposes and streams give distinct sequences") {
    CounterStream a(1, Purpose::field, 0, 0), b(1, Purpose::tilted, 0, 0), c(1, Purpose::field, 1, 0);
    const double x = a.uniform(), y = b.uniform(), z = c.uniform();
    CHECK(x != y);
    CHECK(x != z);
    CounterStream again(1, Purpose::field, 0, 0);
    CHECK(again.uniform() == x);
}

TEST_CASE("below is uniform on small ranges") {
    CounterStream s(3, Purpose::weights, 0, 0);
    std::vector<int> hist(5, 0);
    for (int i = 0; i < 50000; ++i) ++hist[s.below(5)];
    for (int h : hist) CHECK(std::abs(h - 10000) < 4 * std::sqrt(50000 * 0.2 * 0.8));
}

TEST_CASE("box indexing round trip") {
    const Box b(2, Point{-1, -2}, Point{1, 2});
    CHECK(b.size() == 15);
    for (std::size_t i = 0; i < b.size(); ++i) {
        Point x{};
        b.coords(i, x.data());
        CHECK(b.contains(x.data()));
        CHECK(b.index(x.data()) == i);
    }
    std::size_t n = 0;
    for (BoxCursor c(b); c.valid(); c.next()) {
        CHECK(c.index() == n);
        ++n;
    }
    CHECK(n == b.size());
    const Box d = Box::cube(1, 2).dilate(Box::cube(1, 1));
    CHECK(d == Box::cube(1, 3));
    CHECK(Box::cube(1, 3).intersect(Box(1, Point{2}, Point{7})) == Box(1, Point{2}, Point{3}));
}

TEST_CASE("estimate and wilson interval") {
    const Estimate e = estimate({1.0, 2.0, 3.0, 4.0});
    CHECK(e.mean == doctest::Approx(2.5));
    CHECK(e.se == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
    const Interval w = wilson_interval(0, 10);
    CHECK(w.lo == doctest::Approx(0.0));
    CHECK(w.hi > 0.0);
    const Interval w2 = wilson_interval(50, 100);
    CHECK(w2.lo < 0.5);
    CHECK(w2.hi > 0.5);
}

TEST_CASE("power-law fit recovers an exact exponent") {
    std::vector<double> x, y;
    for (int k : log_grid(16, 1024, 4)) {
        x.push_back(k);
        y.push_back(3.0 * std::pow(k, -1.5));
    }
    const LogLogFit f = fit_power_law(x, y);
    CHECK(f.exponent == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(f.residual < 1e-10);
    CHECK_THROWS_AS(fit_power_law({1.0, 2.0}, {1.0, 0.5}), ValidationError);
}

TEST_CASE("log grid is increasing and respects parity") {
    const auto g = log_grid(10, 1000, 4, true);
    CHECK(g.front() >= 10);
    CHECK(g.back() <= 1000);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
    for (int v : g) CHECK(v % 2 == 0);
}

TEST_CASE("field sampling is a pure function of seed and site") {
    const EnvLaw env = EnvLaw::gaussian();
    const LatticeField a = sample_field(env, 1, Box::point(1), 11);
    const LatticeField b = sample_field(env, 1, Box::point(1), 11);
    CHECK(a.values() == b.values());

    const Box box = Box::cube(2, 3);
    const LatticeField f = sample_field(env, 4, box, 99, 2);
    const CounterField lazy(env, 2, 99, 2);
    for (int k = 1; k <= 4; ++k)
        for (BoxCursor c(box); c.valid(); c.next()) CHECK(f.at(k, c.coords()) == lazy(k, c.coords()));
    // A larger box sees the same numbers on the overlap.
    const LatticeField g = sample_field(env, 4, Box::cube(2, 5), 99, 2);
    for (BoxCursor c(box); c.valid(); c.next()) CHECK(g.at(3, c.coords()) == f.at(3, c.coords()));
}

TEST_CASE("field moments over a million sites") {
    const LatticeField f = sample_field(EnvLaw::gaussian(), 1000, Box::cube(1, 499), 5);
    RunningStats s;
    for (double v : f.values()) s.add(v);
    CHECK(s.count() == 999000);
    CHECK(std::abs(s.mean()) < 0.005);
    CHECK(std::abs(s.variance() - 1.0) < 0.01);
}

TEST_CASE("field dump round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "dpre_field_test";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "f.bin").string();
    const LatticeField f = sample_field(EnvLaw::rademacher(), 3, Box(2, Point{-1, 0}, Point{2, 1}), 42, 7);
    f.save(path);
    const LatticeField g = LatticeField::load(path);
    CHECK(g.horizon() == 3);
    CHECK(g.box() == f.box());
    CHECK(g.seed() == 42);
    CHECK(g.stream() == 7);
    CHECK(g.values() == f.values());
    std::filesystem::remove_all(dir);
}

TEST_CASE("parallel_for output does not depend on the worker count") {
    auto run = [](int workers) {
        std::vector<double> out(257);
        parallel_for(out.size(), workers, [&](std::size_t i) {
            CounterStream s(5, Purpose::resample, static_cast<std::uint32_t>(i), 0);
            out[i] = s.uniform();
        });
        return out;
    };
    CHECK(run(1) == run(4));
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                        if (i == 7) throw ValidationError("boom");
                    }),
                    ValidationError);
}

TEST_CASE("report layout") {
    Report r("demo");
    r.set_config("{\"a\":1}");
    r.set_columns({"k", "v"});
    r.add_row({"1", fmt_num(0.5)});
    r.put("total", 0.1);
    r.put("ok", true);
    const std::string t = r.table_text();
    CHECK(t == "# command=demo\n# config={\"a\":1}\nk\tv\n1\t0.5\n# summary\n# total\t0.10000000000000001\n# ok\ttrue\n");
    CHECK(r.value("total") == "0.10000000000000001");
    CHECK(std::stod(r.value("total")) == 0.1);
    CHECK_THROWS(r.add_row({"only one"}));
    CHECK(fmt_num(HUGE_VAL) == "inf");
    CHECK(r.summary_json().find("\"total\": \"0.10000000000000001\"") != std::string::npos);
}
