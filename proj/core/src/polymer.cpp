#include "dpre/polymer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "dpre/collision.hpp"
#include "dpre/errors.hpp"
#include "dpre/parallel.hpp"
#include "dpre/stats.hpp"

namespace dpre {

double log_sum_exp(const double* a, std::size_t n) {
    double mx = kNegInf;
    for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, a[i]);
    if (mx == kNegInf) return kNegInf;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(a[i] - mx);
    return mx + std::log(s);
}

TransferStencil::TransferStencil(const WalkLaw& law, const Box& box)
    : box_(box), law_box_(law.support_box()), d_(law.dim()) {
    if (box.dim() != law.dim()) throw ValidationError("box and walk dimensions differ");
    for (const auto& e : law.entries()) {
        steps_.push_back(e.step);
        log_probs_.push_back(std::log(e.prob));
        std::int64_t o = 0;
        for (int i = 0; i < d_; ++i) o += e.step[i] * box.stride(i);
        offsets_.push_back(o);
    }
}

Box TransferStencil::grow(const Box& active) const {
    return active.dilate(law_box_).intersect(box_);
}

Box TransferStencil::propagate(const std::vector<double>& prev, const Box& active,
                               std::vector<double>& conv) const {
    conv.assign(box_.size(), kNegInf);
    const Box target = grow(active);
    if (target.empty()) return target;
    const std::size_t m = steps_.size();
    std::vector<double> vals(m);
    Point inner_lo{}, inner_hi{};
    for (int i = 0; i < d_; ++i) {
        inner_lo[i] = active.lo()[i] + law_box_.hi()[i];
        inner_hi[i] = active.hi()[i] + law_box_.lo()[i];
    }
    int y[kMaxDim];
    for (BoxCursor c(target); c.valid(); c.next()) {
        const int* x = c.coords();
        const auto ix = static_cast<std::int64_t>(box_.index(x));
        bool interior = true;
        for (int i = 0; i < d_; ++i)
            if (x[i] < inner_lo[i] || x[i] > inner_hi[i]) interior = false;
        std::size_t cnt = 0;
        double mx = kNegInf;
        for (std::size_t j = 0; j < m; ++j) {
            if (!interior) {
                for (int i = 0; i < d_; ++i) y[i] = x[i] - steps_[j][i];
                if (!active.contains(y)) continue;
            }
            const double v = prev[static_cast<std::size_t>(ix - offsets_[j])];
            if (v == kNegInf) continue;
            const double t = v + log_probs_[j];
            vals[cnt++] = t;
            mx = std::max(mx, t);
        }
        if (cnt == 0) continue;
        double s = 0.0;
        for (std::size_t j = 0; j < cnt; ++j) s += std::exp(vals[j] - mx);
        conv[static_cast<std::size_t>(ix)] = mx + std::log(s);
    }
    return target;
}

const std::vector<double>& PolymerState::log_row(int k) const {
    if (k < 0 || k > n) throw ValidationError("row index out of range");
    if (log_rows.size() == static_cast<std::size_t>(n) + 1) return log_rows[static_cast<std::size_t>(k)];
    if (k == n && !log_rows.empty()) return log_rows.back();
    throw ValidationError("row " + std::to_string(k) + " was not kept; evolve with keep_rows");
}

Grid PolymerState::endpoint(int k) const {
    const auto& row = log_row(k);
    Grid g(box, 0.0);
    const double lw = log_w[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < row.size(); ++i)
        if (row[i] != kNegInf) g.values[i] = std::exp(row[i] - lw);
    return g;
}

Box default_box(const WalkLaw& law, int n, std::optional<int> radius) {
    if (n < 0) throw ValidationError("horizon must be >= 0");
    if (radius && *radius < 0) throw ValidationError("box radius must be >= 0");
    const std::int64_t r = radius ? *radius : static_cast<std::int64_t>(n) * law.reach();
    if (r > (1 << 20)) throw ResourceError("box radius too large; set an explicit radius");
    return Box::cube(law.dim(), static_cast<int>(r));
}

namespace {

// The n-fold support box fits inside `box` and nothing was truncated.
bool contains_range(const WalkLaw& law, const Box& box, int n) {
    if (!law.finite_support()) return false;
    Box range = Box::point(law.dim());
    for (int k = 0; k < n; ++k) range = range.dilate(law.support_box());
    return range.intersect(box) == range;
}

}  // namespace

double box_leak(const WalkLaw& law, const Box& box, int n) {
    if (contains_range(law, box, n)) return 0.0;
    Grid cur(Box::point(law.dim()), 1.0);
    for (int k = 0; k < n; ++k) {
        double lost = 0.0;
        cur = push_forward(cur, law, &box, &lost);
    }
    return std::max(0.0, 1.0 - cur.sum());
}

namespace {

void check_budget(const Box& box, std::size_t rows) {
    const double cells = static_cast<double>(box.size()) * static_cast<double>(rows);
    if (cells > 4e8)
        throw ResourceError("polymer rows would need " + std::to_string(cells * 8.0 / 1e9) +
                            " GB; pass a smaller radius or disable keep_rows");
}

PolymerState run_evolve(const FieldFn& omega, const WalkLaw& walk, const EnvLaw& env,
                        double beta, int n, const Box& box, const EvolveOptions& opts) {
    if (box.empty()) throw ValidationError("empty box");
    if (n < 0) throw ValidationError("horizon must be >= 0");
    env.check_domain(beta);
    const int d = walk.dim();
    Point origin{};
    if (!box.contains(origin.data())) throw ValidationError("box does not contain the origin");
    if (opts.green && opts.green->box.dim() != d)
        throw ValidationError("Green function dimension does not match the walk");
    check_budget(box, opts.keep_rows ? static_cast<std::size_t>(n) + 1 : 2);

    const double lam = env.lambda(beta);
    const TransferStencil stencil(walk, box);
    // beta = 0 without wall loss: W_k = 1 identically, keep it free of rounding.
    const bool free_walk = beta == 0.0 && contains_range(walk, box, n);

    PolymerState st;
    st.beta = beta;
    st.n = n;
    st.box = box;
    st.log_w.assign(static_cast<std::size_t>(n) + 1, 0.0);
    st.overlap.assign(static_cast<std::size_t>(n) + 1, 0.0);
    st.log_max_prev.assign(static_cast<std::size_t>(n) + 1, 0.0);
    if (opts.green) st.green_form.assign(static_cast<std::size_t>(n) + 1, 0.0);

    std::vector<double> row(box.size(), kNegInf);
    row[box.index(origin.data())] = 0.0;
    Box active = Box::point(d);
    if (opts.green) {
        Grid mu(active, 1.0);
        st.green_form[0] = green_quadratic(mu, *opts.green);
    }
    if (opts.keep_rows) st.log_rows.push_back(row);

    std::vector<double> conv;
    for (int k = 1; k <= n; ++k) {
        const double lw_prev = st.log_w[static_cast<std::size_t>(k - 1)];
        double mx = kNegInf;
        for (BoxCursor c(active); c.valid(); c.next())
            mx = std::max(mx, row[box.index(c.coords())]);
        st.log_max_prev[static_cast<std::size_t>(k)] = mx;

        const Box target = stencil.propagate(row, active, conv);
        double ik = 0.0;
        for (BoxCursor c(target); c.valid(); c.next()) {
            const std::size_t i = box.index(c.coords());
            const double v = conv[i];
            if (v == kNegInf) continue;
            if (opts.track_overlap) ik += std::exp(2.0 * (v - lw_prev));
            conv[i] = v + beta * omega(k, c.coords()) - lam;
        }
        st.overlap[static_cast<std::size_t>(k)] = ik;

        // Log-sum-exp over the active region only.
        double top = kNegInf;
        for (BoxCursor c(target); c.valid(); c.next()) top = std::max(top, conv[box.index(c.coords())]);
        double s = 0.0;
        if (top != kNegInf)
            for (BoxCursor c(target); c.valid(); c.next()) {
                const double v = conv[box.index(c.coords())];
                if (v != kNegInf) s += std::exp(v - top);
            }
        const double lw = free_walk ? 0.0 : top == kNegInf ? kNegInf : top + std::log(s);
        st.log_w[static_cast<std::size_t>(k)] = lw;

        row.swap(conv);
        active = target;
        if (opts.green) {
            Grid mu(active, 0.0);
            for (BoxCursor c(active); c.valid(); c.next()) {
                const double v = row[box.index(c.coords())];
                if (v != kNegInf) mu.values[c.index()] = std::exp(v - lw);
            }
            st.green_form[static_cast<std::size_t>(k)] = green_quadratic(mu, *opts.green);
        }
        if (opts.keep_rows) st.log_rows.push_back(row);
    }
    if (!opts.keep_rows) st.log_rows.push_back(std::move(row));
    if (opts.compute_leak) {
        st.leak = box_leak(walk, box, n);
        st.leak_flag = st.leak > 1e-6;
    }
    return st;
}

}  // namespace

PolymerState evolve(const FieldFn& omega, const WalkLaw& walk, const EnvLaw& env, double beta,
                    int n, const EvolveOptions& opts) {
    return run_evolve(omega, walk, env, beta, n, default_box(walk, n, opts.radius), opts);
}

PolymerState evolve(const LatticeField& field, const WalkLaw& walk, const EnvLaw& env,
                    double beta, const EvolveOptions& opts) {
    if (field.box().dim() != walk.dim()) throw ValidationError("field and walk dimensions differ");
    return run_evolve(field.fn(), walk, env, beta, field.horizon(), field.box(), opts);
}

Grid endpoint_pushforward(const PolymerState& state, const WalkLaw& walk, int k) {
    if (k < 1) throw ValidationError("endpoint_pushforward needs k >= 1");
    const Grid mu = state.endpoint(k - 1);
    double lost = 0.0;
    return push_forward(mu, walk, &state.box, &lost);
}

double overlap(const PolymerState& state, int k) {
    if (k < 1 || k > state.n) throw ValidationError("overlap needs 1 <= k <= n");
    return state.overlap[static_cast<std::size_t>(k)];
}

double green_quadratic(const Grid& mu, const Grid& g0) {
    if (mu.box.dim() != g0.box.dim()) throw ValidationError("mismatched dimensions in Green form");
    if (g0.box.empty()) return 0.0;
    const int d = mu.box.dim();
    std::vector<std::pair<Point, double>> g;
    for (BoxCursor c(g0.box); c.valid(); c.next()) {
        const double v = g0.values[c.index()];
        if (v == 0.0) continue;
        Point z{};
        std::copy(c.coords(), c.coords() + d, z.begin());
        g.emplace_back(z, v);
    }
    CompensatedSum total;
    int y[kMaxDim];
    for (BoxCursor c(mu.box); c.valid(); c.next()) {
        const double mx = mu.values[c.index()];
        if (mx == 0.0) continue;
        const int* x = c.coords();
        double inner = 0.0;
        for (const auto& [z, v] : g) {
            for (int i = 0; i < d; ++i) y[i] = x[i] + z[i];
            inner += v * mu.at(y);
        }
        total.add(mx * inner);
    }
    return total.value();
}

double green_form(const PolymerState& state, int k, const Grid& g0) {
    return green_quadratic(state.endpoint(k), g0);
}

BracketReport bracket_identity_check(const FieldFn& omega, const WalkLaw& walk,
                                     const EnvLaw& env, double beta, int k,
                                     std::size_t resamples, std::uint64_t seed,
                                     std::optional<int> radius) {
    if (k < 1) throw ValidationError("bracket check needs k >= 1");
    if (resamples < 2) throw ValidationError("bracket check needs at least 2 resamples");
    EvolveOptions opts;
    opts.keep_rows = false;
    opts.radius = radius ? radius : std::optional<int>(k * walk.reach());
    opts.compute_leak = false;
    const PolymerState prefix = evolve(omega, walk, env, beta, k - 1, opts);
    const Grid dmu = endpoint_pushforward(prefix, walk, k);

    std::vector<std::pair<Point, double>> sites;
    double ik = 0.0;
    for (BoxCursor c(dmu.box); c.valid(); c.next()) {
        const double a = dmu.values[c.index()];
        if (a <= 0.0) continue;
        Point x{};
        std::copy(c.coords(), c.coords() + walk.dim(), x.begin());
        sites.emplace_back(x, a);
        ik += a * a;
    }
    const double lam = env.lambda(beta);
    RunningStats stats;
    for (std::size_t r = 0; r < resamples; ++r) {
        const CounterField fresh(env, walk.dim(), seed, static_cast<std::uint32_t>(r),
                                 Purpose::resample);
        double ratio = 0.0;
        for (const auto& [x, a] : sites) ratio += a * std::exp(beta * fresh(k, x.data()) - lam);
        stats.add((ratio - 1.0) * (ratio - 1.0));
    }
    BracketReport rep;
    rep.k = k;
    rep.estimate = stats.mean();
    rep.se = stats.standard_error();
    rep.overlap = ik;
    rep.closed_form = env.chi(beta) * ik;
    rep.resamples = resamples;
    const double diff = rep.estimate - rep.closed_form;
    rep.relative_error = rep.closed_form > 0.0 ? std::abs(diff) / rep.closed_form : std::abs(diff);
    rep.z_score = rep.se > 0.0 ? diff / rep.se : (diff == 0.0 ? 0.0 : HUGE_VAL);
    return rep;
}

FractionalBoundReport checkpoint_fractional_bound(const EnvLaw& env, const WalkLaw& walk,
                                                  double beta, double theta, int n, int m,
                                                  std::size_t mc_fields, std::uint64_t seed,
                                                  int workers) {
    if (!(theta > 0.0 && theta < 1.0)) throw ValidationError("theta must lie in (0, 1)");
    if (n < 1 || m < 1) throw ValidationError("n and m must be >= 1");
    if (mc_fields < 2) throw ValidationError("need at least 2 fields");
    env.check_domain(beta);
    std::vector<double> whole(mc_fields), sites(mc_fields);
    parallel_for(mc_fields, workers, [&](std::size_t f) {
        const CounterField field(env, walk.dim(), seed, static_cast<std::uint32_t>(f));
        EvolveOptions opts;
        opts.keep_rows = false;
        opts.track_overlap = false;
        opts.compute_leak = false;
        const PolymerState full = evolve(field.fn(), walk, env, beta, n * m, opts);
        whole[f] = std::exp(theta * full.log_w.back());
        const PolymerState part = evolve(field.fn(), walk, env, beta, n, opts);
        double s = 0.0;
        for (double v : part.log_rows.back())
            if (v != kNegInf) s += std::exp(theta * v);
        sites[f] = s;
    });
    const Estimate lhs = estimate(whole);
    const Estimate ss = estimate(sites);
    FractionalBoundReport rep;
    rep.theta = theta;
    rep.n = n;
    rep.m = m;
    rep.fields = mc_fields;
    rep.lhs = lhs.mean;
    rep.lhs_se = lhs.se;
    rep.site_sum = ss.mean;
    rep.site_sum_se = ss.se;
    rep.rhs = std::pow(ss.mean, m);
    rep.rhs_se = m * std::pow(ss.mean, m - 1) * ss.se;
    rep.holds = rep.lhs <= rep.rhs + 4.0 * std::hypot(rep.lhs_se, rep.rhs_se);
    return rep;
}

std::vector<double> sup_norm_series(const WalkLaw& law, int s_max) {
    if (s_max < 1) throw ValidationError("s_max must be >= 1");
    std::vector<double> sup(static_cast<std::size_t>(s_max));
    if (law.symmetric()) {
        // sup_x p_{2j}(x) = p_{2j}(0) = P(X_j = X'_j); odd steps bounded by the even step below.
        const int half = s_max / 2;
        std::vector<double> even(static_cast<std::size_t>(half) + 1, 1.0);
        if (half > 0) {
            const CollisionSeries cs = collision_series(law, half);
            for (int j = 1; j <= half; ++j) even[static_cast<std::size_t>(j)] = cs.terms[static_cast<std::size_t>(j - 1)];
        }
        for (int s = 1; s <= s_max; ++s) sup[static_cast<std::size_t>(s - 1)] = even[static_cast<std::size_t>(s / 2)];
        return sup;
    }
    const KernelSummary ks = kernel_summaries(law, s_max);
    return ks.sup;
}

YQuantity y_quantity(const Grid& mu, const WalkLaw& walk, double p, int s_max, int s_table) {
    if (s_max < 1) throw ValidationError("s_max must be >= 1");
    if (!(p > 1.0)) throw ValidationError("p must exceed 1");
    if (mu.box.dim() != walk.dim()) throw ValidationError("measure and walk dimensions differ");
    YQuantity y;
    y.p = p;
    y.s_max = s_max;
    Grid cur = mu;
    CompensatedSum partial;
    for (int s = 1; s <= s_max; ++s) {
        cur = push_forward(cur, walk, nullptr, nullptr);
        double t = 0.0;
        for (double v : cur.values)
            if (v > 0.0) t += std::pow(v, p);
        y.terms.push_back(t);
        partial.add(t);
    }
    y.partial_sum = partial.value();

    if (s_table <= 0) s_table = (walk.is_simple() && walk.dim() <= 3) ? std::max(1024, 8 * s_max) : 4 * s_max;
    s_table = std::max(s_table, s_max + 8);
    y.s_table = s_table;
    const std::vector<double> sup = sup_norm_series(walk, s_table);
    const double q = p - 1.0;
    CompensatedSum table;
    for (int s = s_max + 1; s <= s_table; ++s) table.add(std::pow(sup[static_cast<std::size_t>(s - 1)], q));
    y.remainder_table = table.value();

    // Decay fit on even s over the top two octaves of the table.
    std::vector<double> xs, ys;
    for (int s = std::max(2, s_table / 4); s <= s_table; ++s)
        if (s % 2 == 0) {
            xs.push_back(s);
            ys.push_back(sup[static_cast<std::size_t>(s - 1)]);
        }
    double nu = 0.0;
    if (xs.size() >= 3) nu = fit_power_law(xs, ys).exponent;
    y.nu_fit = nu;
    const double rate = nu * q;
    if (rate > 1.0 + 1e-3) {
        const double last = sup[static_cast<std::size_t>(s_table - 1)];
        y.remainder_tail = std::pow(last, q) * s_table / (rate - 1.0);
        y.certified = true;
    } else {
        y.remainder_tail = HUGE_VAL;
        y.certified = false;
        y.note = "no finite certificate";
    }
    return y;
}

YQuantity y_quantity(const PolymerState& state, const WalkLaw& walk, int T, double p, int s_max) {
    if (T < 1 || T > state.n + 1) throw ValidationError("T must satisfy 1 <= T <= n + 1");
    return y_quantity(state.endpoint(T - 1), walk, p, s_max);
}

std::string polymer_table(const PolymerState& state) {
    std::ostringstream os;
    os << "k\tlog_W\tI\tJ\tleak\n";
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (int k = 0; k <= state.n; ++k) {
        const auto i = static_cast<std::size_t>(k);
        os << k << '\t' << num(state.log_w[i]) << '\t' << (k == 0 ? std::string("nan") : num(state.overlap[i]))
           << '\t' << (state.green_form.empty() ? std::string("nan") : num(state.green_form[i])) << '\t'
           << num(state.leak) << '\n';
    }
    return os.str();
}

}  // namespace dpre
