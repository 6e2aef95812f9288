// One PASS/FAIL line per criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "oracles.hpp"

#include "dpre/collision.hpp"
#include "dpre/criteria.hpp"
#include "dpre/exponents.hpp"
#include "dpre/field.hpp"
#include "dpre/pinning.hpp"
#include "dpre/polymer.hpp"
#include "dpre/renewal.hpp"
#include "dpre/report.hpp"
#include "dpre/size_bias.hpp"
#include "dpre/stats.hpp"

using namespace dpre;

namespace {

constexpr std::uint64_t kSeed = 20240611;

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void criterion(int id, const char* name, const std::function<Outcome()>& body) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass) ++failures;
    std::printf("%s %2d %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs);
    std::fflush(stdout);
}

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

EvolveOptions lean() {
    EvolveOptions o;
    o.keep_rows = false;
    o.track_overlap = false;
    o.compute_leak = false;
    return o;
}

HittingStats run_hitting(int workers) {
    return hitting_statistics(EnvLaw::gaussian(), make_simple_walk(1), 1.0, {2.0, 5.0, 10.0}, 200, 10000, kSeed,
                              workers);
}

std::string hitting_table(const HittingStats& h) {
    Report r("hitting");
    r.set_columns({"u", "hits", "p", "se", "u_p"});
    for (const auto& row : h.rows)
        r.add_row({fmt_num(row.u), fmt_num(row.hits), fmt_num(row.p), fmt_num(row.se), fmt_num(row.scaled)});
    Report reps("hitting-replicas");
    reps.set_columns({"replica", "sup_log_W"});
    for (std::size_t i = 0; i < h.sup_log_w.size(); ++i) reps.add_row({fmt_num(i), fmt_num(h.sup_log_w[i])});
    return r.table_text() + reps.table_text();
}

FractionalEventReport run_babac(int workers) {
    const int n = 64;
    const auto t = std::make_shared<const KernelTable>(iterate_kernel(make_simple_walk(1), n));
    return fractional_event_bound(EnvLaw::gaussian(), make_simple_walk(1), 1.0, n, 0.75, rn_event(t, n), 10000,
                                  10000, kSeed, workers);
}

std::string babac_table(const FractionalEventReport& f) {
    Report r("babac");
    r.set_columns({"p_event", "p_event_se", "p_tilde_complement", "p_tilde_complement_se", "bound", "bound_se",
                   "direct", "direct_se"});
    r.add_row({fmt_num(f.p_event), fmt_num(f.p_event_se), fmt_num(f.p_tilde_complement),
               fmt_num(f.p_tilde_complement_se), fmt_num(f.bound), fmt_num(f.bound_se), fmt_num(f.direct),
               fmt_num(f.direct_se)});
    return r.table_text();
}

// Kept for criterion 12.
std::string hitting_w1, babac_w1;

}  // namespace

int main() {
    criterion(1, "brute-force equivalence", [] {
        const auto t0 = std::chrono::steady_clock::now();
        const EnvLaw env = EnvLaw::gaussian();
        const WalkLaw w = make_simple_walk(1);
        double worst = 0.0;
        for (int i = 0; i < 50; ++i) {
            const int n = 1 + i % 6;
            const double beta = (i / 6) % 2 == 0 ? 0.5 : 1.0;
            const CounterField f(env, 1, kSeed, static_cast<std::uint32_t>(i));
            const double lw = evolve(f.fn(), w, env, beta, n).log_w[static_cast<std::size_t>(n)];
            const double brute = std::log(static_cast<double>(oracle::brute_w(w, env, beta, f.fn(), n)));
            worst = std::max(worst, std::abs(lw - brute));
        }
        const double secs = elapsed(t0);
        return Outcome{worst < 1e-10 && secs < 10.0, "50 instances, max |log W_n - brute| = " + g(worst)};
    });

    criterion(2, "martingale mean", [] {
        const auto t0 = std::chrono::steady_clock::now();
        const EnvLaw env = EnvLaw::gaussian();
        const WalkLaw w = make_simple_walk(1);
        std::vector<double> ws(10000);
        for (std::size_t i = 0; i < ws.size(); ++i) {
            const CounterField f(env, 1, kSeed, static_cast<std::uint32_t>(i));
            ws[i] = std::exp(evolve(f.fn(), w, env, 0.5, 20, lean()).log_w[20]);
        }
        const Estimate e = estimate(ws);
        const double secs = elapsed(t0);
        const double z = (e.mean - 1.0) / e.se;
        return Outcome{std::abs(z) < 4.0 && secs < 30.0,
                       "mean W_20 = " + g(e.mean) + " +- " + g(e.se) + " (z = " + g(z) + ")"};
    });

    criterion(3, "bracket identity", [] {
        const auto t0 = std::chrono::steady_clock::now();
        const EnvLaw env = EnvLaw::gaussian();
        const CounterField f(env, 1, kSeed, 0);
        const BracketReport b = bracket_identity_check(f.fn(), make_simple_walk(1), env, 0.5, 10, 100000, kSeed);
        const double secs = elapsed(t0);
        return Outcome{std::abs(b.z_score) < 4.0 && b.relative_error < 0.02 && secs < 60.0,
                       "estimate " + g(b.estimate) + " vs chi I_n " + g(b.closed_form) + " (z = " + g(b.z_score) +
                           ", rel " + g(b.relative_error) + ")"};
    });

    criterion(4, "size-bias mean of R_n", [] {
        const EnvLaw env = EnvLaw::gaussian();
        const WalkLaw w = make_simple_walk(1);
        const int n = 32;
        const double beta = 1.0;
        const KernelTable t = iterate_kernel(w, n);
        double run = 0.0;
        for (int k = 1; k <= n; ++k) run += collision_probability(t, k);
        const double sigma = sigma_series(w, n).at(n);
        RunningStats rs;
        for (std::uint32_t r = 0; r < 10000; ++r) {
            const SpineSample s = spine_sample(env, w, beta, n, kSeed, r);
            rs.add(rn_observable(s.composed(), t, n).R);
        }
        const double target = env.lambda_prime(beta) * sigma;
        const double z = (rs.mean() - target) / rs.standard_error();
        return Outcome{std::abs(z) < 4.0 && sigma == run,
                       "spine mean " + g(rs.mean()) + " vs lambda' Sigma_n " + g(target) + " (z = " + g(z) +
                           "), |Sigma_n - sum I| = " + g(std::abs(sigma - run))};
    });

    criterion(5, "beta_2 pipeline", [] {
        const auto t0 = std::chrono::steady_clock::now();
        const EnvLaw env = EnvLaw::gaussian();
        const Beta2Result b1 = beta2(make_simple_walk(1), env);
        const Beta2Result b2 = beta2(make_simple_walk(2), env);
        const Beta2Result b3 = beta2(make_simple_walk(3), env);
        double S = 0.0;
        for (int k = 1; k <= b3.horizon; ++k) S += oracle::simple3_return(k);
        const double gap = std::abs(env.chi(b3.beta2) * S - 1.0);
        const double secs = elapsed(t0);
        const bool ok = b1.verdict == "recurrent" && b1.beta2 == 0.0 && b2.verdict == "recurrent" &&
                        b2.beta2 == 0.0 && b3.verdict == "positive" && b3.beta2 > 0.0 &&
                        gap <= 1e-6 + b3.remainder && b3.horizon == 10000 && secs < 60.0;
        return Outcome{ok, "d=1 " + b1.verdict + ", d=2 " + b2.verdict + ", d=3 beta_2 = " + g(b3.beta2) +
                               ", |chi S - 1| = " + g(gap) + " (remainder " + g(b3.remainder) + ")"};
    });

    criterion(6, "p* interval", [] {
        const PstarBounds d3 = pstar_bounds(std::nullopt, Rational::make(3, 2), 3);
        const PstarBounds d4 = pstar_bounds(std::nullopt, Rational::make(2, 1), 4);
        const bool ok = d3.lower_exact == "5/3" && d3.upper_exact == "5/3" && d4.lower_exact == "3/2" &&
                        d4.upper_exact == "3/2" && d3.exact && d4.exact;
        return Outcome{ok, "d=3 [" + d3.lower_exact + ", " + d3.upper_exact + "], d=4 [" + d4.lower_exact + ", " +
                               d4.upper_exact + "]"};
    });

    criterion(7, "Doob hitting bound", [] {
        const auto t0 = std::chrono::steady_clock::now();
        const HittingStats h = run_hitting(1);
        const double secs = elapsed(t0);
        hitting_w1 = hitting_table(h);
        bool ok = secs < 120.0;
        std::string detail;
        double lo = HUGE_VAL, hi = 0.0;
        for (const auto& r : h.rows) {
            ok = ok && r.p <= 1.0 / r.u + 4.0 * r.se;
            lo = std::min(lo, r.scaled);
            hi = std::max(hi, r.scaled);
            detail += "u=" + g(r.u) + " p=" + g(r.p) + " ";
        }
        ok = ok && lo > 0.0 && hi <= 3.0 * lo;
        return Outcome{ok, detail + "u p in [" + g(lo) + ", " + g(hi) + "]"};
    });

    criterion(8, "fractional moment bound", [] {
        const auto t0 = std::chrono::steady_clock::now();
        const FractionalEventReport f = run_babac(1);
        const double secs = elapsed(t0);
        babac_w1 = babac_table(f);
        const double se = std::hypot(f.direct_se, f.bound_se);
        return Outcome{f.direct <= f.bound + 4.0 * se && secs < 120.0,
                       "E[W^theta] = " + g(f.direct) + " vs bound " + g(f.bound) + " (P(A) = " + g(f.p_event) +
                           ", P~(A^c) = " + g(f.p_tilde_complement) + ")"};
    });

    criterion(9, "renewal bounds", [] {
        const RenewalLaw geo = geometric_renewal(0.5, 64);
        bool count_ok = true;
        for (int n = 1; n <= 20; ++n)
            for (int k = 0; k <= 10; ++k) {
                const CountBoundReport c = renewal_count_bound_check(geo, n, k);
                count_ok = count_ok && c.lhs <= c.rhs;
            }
        const RenewalLaw r = intersection_renewal(make_simple_walk(1), 10000);
        const WalkExponents e = estimate_exponents(make_simple_walk(1), 16, 1024, 0, kSeed);
        const bool ok = count_ok && r.defect < 0.02 && std::abs(e.alpha.value - 0.5) <= 0.1;
        return Outcome{ok, std::string("count bound ") + (count_ok ? "holds" : "violated") + " on n<=20, k<=10; defect " +
                               g(r.defect) + ", alpha " + g(e.alpha.value)};
    });

    criterion(10, "pinning recursion", [] {
        const EnvLaw env = EnvLaw::gaussian();
        const WalkLaw w = make_simple_walk(1);
        const RenewalLaw law = intersection_renewal(w, 6);
        double worst = 0.0;
        for (int n = 1; n <= 6; ++n) {
            const auto om = tilted_sample(env, 0.7, static_cast<std::size_t>(n), kSeed + n);
            const PinningState s = pinning_partition(law, env, 0.7, om);
            worst = std::max(worst, std::abs(s.Zc[static_cast<std::size_t>(n)] -
                                             static_cast<double>(oracle::brute_pinning_1d(w, env, 0.7, om, true))));
        }
        const PinningState zero = pinning_partition(intersection_renewal(w, 100), env, 0.0, 100, kSeed);
        bool flat = true;
        for (double z : zero.Z) flat = flat && z == 1.0;
        const Beta2Result b = beta2(make_simple_walk(3), env);
        const RenewalLaw l3 = intersection_renewal(make_simple_walk(3), b.horizon);
        const double chi = env.chi(b.beta2);
        double s = 0.0;
        for (double v : tilted_interarrival(l3, 1.0 + chi)) s += v;
        const double tol = (1.0 + chi) * b.remainder + 1e-6;
        const bool ok = worst < 1e-10 && flat && std::abs(s - 1.0) <= tol;
        return Outcome{ok, "max |Zc - brute| = " + g(worst) + ", beta=0 Z " + (flat ? "== 1" : "!= 1") +
                               ", |sum K'' - 1| = " + g(std::abs(s - 1.0)) + " <= " + g(tol)};
    });

    criterion(11, "tower walk", [] {
        TowerDemoOptions o;
        o.seed = kSeed;
        const TowerDemo t = tower_demo(o);
        const bool seq = t.a == std::vector<std::uint64_t>{1, 2, 4, 16, 65536};
        std::string fe;
        for (const auto& f : t.free_energy) fe += " " + g(f.mean);
        const bool ok = seq && t.weight_sum <= 5.0 && t.N == 64 && t.p_contained >= 0.9 && t.trend_ok;
        return Outcome{ok, std::string("a ") + (seq ? "exact" : "wrong") + ", sum f = " + g(t.weight_sum) +
                               ", P(|X_128| <= 64) >= " + g(t.p_contained) + ", f_N:" + fe};
    });

    criterion(12, "determinism across worker counts", [] {
        const bool h = hitting_table(run_hitting(4)) == hitting_w1;
        const bool b = babac_table(run_babac(3)) == babac_w1;
        return Outcome{h && b && !hitting_w1.empty(), std::string("hitting tables ") + (h ? "identical" : "differ") +
                                                          " (1 vs 4 workers), fractional-moment tables " +
                                                          (b ? "identical" : "differ") + " (1 vs 3)"};
    });

    return failures == 0 ? 0 : 1;
}
