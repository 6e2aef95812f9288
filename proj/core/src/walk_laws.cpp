#include "dpre/walk_laws.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "dpre/errors.hpp"

namespace dpre {

WalkLaw::WalkLaw(int d, std::vector<WalkEntry> entries, std::string label,
                 double truncation_loss, double tolerance)
    : d_(d), label_(std::move(label)), loss_(truncation_loss) {
    if (d < 1 || d > kMaxDim) throw ValidationError("walk dimension must be in [1, 6]");
    if (!(truncation_loss >= 0.0 && truncation_loss < 1.0))
        throw ValidationError("truncation loss must lie in [0, 1)");

    std::map<Point, double> merged;
    for (const auto& e : entries) {
        if (!(e.prob >= 0.0) || !std::isfinite(e.prob))
            throw ValidationError("walk probabilities must be finite and nonnegative");
        if (e.prob == 0.0) continue;
        Point z{};
        for (int i = 0; i < d; ++i) z[i] = e.step[i];
        merged[z] += e.prob;
    }
    if (merged.empty()) throw ValidationError("walk law has empty support");

    double total = 0.0;
    for (const auto& [z, p] : merged) {
        entries_.push_back({z, p});
        total += p;
    }
    if (std::abs(total + loss_ - 1.0) > tolerance)
        throw ValidationError("walk probabilities sum to " + std::to_string(total) +
                              ", expected 1 - truncation_loss");

    Point lo{}, hi{};
    for (int i = 0; i < d; ++i) {
        lo[i] = hi[i] = entries_.front().step[i];
    }
    for (const auto& e : entries_) {
        double r2 = 0.0;
        for (int i = 0; i < d; ++i) {
            lo[i] = std::min(lo[i], e.step[i]);
            hi[i] = std::max(hi[i], e.step[i]);
            reach_ = std::max(reach_, std::abs(e.step[i]));
            r2 += static_cast<double>(e.step[i]) * e.step[i];
        }
        radius_ = std::max(radius_, std::sqrt(r2));
    }
    bbox_ = Box(d, lo, hi);

    symmetric_ = true;
    for (const auto& [z, p] : merged) {
        Point m{};
        for (int i = 0; i < d; ++i) m[i] = -z[i];
        auto it = merged.find(m);
        if (it == merged.end() || std::abs(it->second - p) > 1e-15 * p) {
            symmetric_ = false;
            break;
        }
    }

    simple_ = loss_ == 0.0 && static_cast<int>(entries_.size()) == 2 * d;
    for (const auto& e : entries_) {
        if (!simple_) break;
        int l1 = 0;
        for (int i = 0; i < d; ++i) l1 += std::abs(e.step[i]);
        if (l1 != 1 || std::abs(e.prob - 1.0 / (2.0 * d)) > 1e-15) simple_ = false;
    }
}

double WalkLaw::pmf(const int* x) const {
    for (const auto& e : entries_) {
        bool eq = true;
        for (int i = 0; i < d_ && eq; ++i) eq = e.step[i] == x[i];
        if (eq) return e.prob;
    }
    return 0.0;
}

StepSampler::StepSampler(const WalkLaw& law) : law_(&law) {
    double acc = 0.0;
    for (const auto& e : law.entries()) {
        acc += e.prob;
        cdf_.push_back(acc);
    }
    for (double& c : cdf_) c /= acc;
    cdf_.back() = 1.0;
}

const WalkEntry& StepSampler::draw(double u) const {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto j = static_cast<std::size_t>(std::min<std::ptrdiff_t>(
        it - cdf_.begin(), static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
    return law_->entries()[j];
}

WalkLaw make_simple_walk(int d) {
    if (d < 1) throw ValidationError("simple walk needs d >= 1");
    if (d > kMaxDim) throw ValidationError("simple walk dimension above 6 unsupported");
    std::vector<WalkEntry> entries;
    for (int i = 0; i < d; ++i) {
        for (int s : {-1, 1}) {
            WalkEntry e;
            e.step[i] = s;
            e.prob = 1.0 / (2.0 * d);
            entries.push_back(e);
        }
    }
    return WalkLaw(d, std::move(entries), "simple-d" + std::to_string(d));
}

WalkLaw make_point_mass(int d) {
    return WalkLaw(d, {WalkEntry{Point{}, 1.0}}, "point-mass-d" + std::to_string(d));
}

std::uint64_t tower_term(int k) {
    if (k < 0) throw ValidationError("tower index must be nonnegative");
    if (k > 4) throw ValidationError("tower term a_" + std::to_string(k) +
                                     " overflows 64-bit integers (a_5 = 2^65536)");
    std::uint64_t a = 1;
    for (int i = 0; i < k; ++i) a = std::uint64_t{1} << a;
    return a;
}

int tower_shell(std::int64_t x) {
    const std::uint64_t ax = static_cast<std::uint64_t>(x < 0 ? -x : x);
    if (ax <= 1) return 0;
    for (int k = 1; k <= 4; ++k)
        if (ax <= tower_term(k)) return k;
    return 5;
}

double tower_weight(std::int64_t x) {
    const int k = tower_shell(x);
    if (k == 0) return 1.0;
    if (k == 5) return 0.0;  // below double resolution: (2 a_5 + 1) a_4^4 > 2^65536
    const double ak = static_cast<double>(tower_term(k));
    const double akm1 = static_cast<double>(tower_term(k - 1));
    return 1.0 / ((2.0 * ak + 1.0) * std::pow(akm1, 4));
}

double tower_weight_sum(int max_shell) {
    if (max_shell < 0) return 0.0;
    const auto a = static_cast<std::int64_t>(tower_term(std::min(max_shell, 4)));
    double s = 0.0;
    for (std::int64_t x = -a; x <= a; ++x) s += tower_weight(x);
    return s;
}

WalkLaw make_tower_walk(int shell_cutoff) {
    if (shell_cutoff < 1) throw ValidationError("tower shell_cutoff must be >= 1");
    if (shell_cutoff > 4)
        throw ValidationError("tower shell_cutoff " + std::to_string(shell_cutoff) +
                              " needs a_5 = 2^65536, which overflows; use <= 4");
    // Shells >= 5 carry 2(a_5 - a_4) / ((2 a_5 + 1) a_4^4) ~ a_4^{-4} in total.
    const double a4 = static_cast<double>(tower_term(4));
    const double total = tower_weight_sum(4) + 1.0 / std::pow(a4, 4);
    const double kept = tower_weight_sum(shell_cutoff);
    const auto a = static_cast<std::int64_t>(tower_term(shell_cutoff));
    std::vector<WalkEntry> entries;
    entries.reserve(static_cast<std::size_t>(2 * a + 1));
    for (std::int64_t x = -a; x <= a; ++x) {
        WalkEntry e;
        e.step[0] = static_cast<int>(x);
        e.prob = tower_weight(x) / total;
        entries.push_back(e);
    }
    return WalkLaw(1, std::move(entries), "tower-cutoff" + std::to_string(shell_cutoff),
                   1.0 - kept / total);
}

WalkLaw difference_walk(const WalkLaw& law, double warn_loss) {
    const auto& e = law.entries();
    if (static_cast<double>(e.size()) * static_cast<double>(e.size()) > 5e7)
        throw ResourceError("difference walk of a law with " + std::to_string(e.size()) +
                            " support points is too large; truncate the law first");
    std::map<Point, double> acc;
    for (const auto& a : e) {
        for (const auto& b : e) {
            Point z{};
            for (int i = 0; i < law.dim(); ++i) z[i] = a.step[i] - b.step[i];
            acc[z] += a.prob * b.prob;
        }
    }
    std::vector<WalkEntry> out;
    out.reserve(acc.size());
    for (const auto& [z, p] : acc) out.push_back({z, p});
    const double kept = 1.0 - law.truncation_loss();
    const double loss = 1.0 - kept * kept;
    WalkLaw diff(law.dim(), std::move(out), "diff(" + law.label() + ")", loss);
    if (loss > warn_loss)
        diff.add_warning("difference walk truncation loss " + std::to_string(loss) +
                         " exceeds tolerance");
    return diff;
}

std::string walk_to_json(const WalkLaw& law) {
    nlohmann::json j;
    j["label"] = law.label();
    j["d"] = law.dim();
    j["truncation_loss"] = law.truncation_loss();
    auto arr = nlohmann::json::array();
    for (const auto& e : law.entries()) {
        std::vector<int> v(e.step.begin(), e.step.begin() + law.dim());
        arr.push_back(nlohmann::json::array({v, e.prob}));
    }
    j["entries"] = arr;
    return j.dump();
}

WalkLaw walk_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("walk document: ") + ex.what());
    }
    try {
        const int d = j.at("d").get<int>();
        std::vector<WalkEntry> entries;
        for (const auto& item : j.at("entries")) {
            const auto v = item.at(0).get<std::vector<int>>();
            if (static_cast<int>(v.size()) != d)
                throw ValidationError("walk entry has wrong dimension");
            WalkEntry e;
            std::copy(v.begin(), v.end(), e.step.begin());
            e.prob = item.at(1).get<double>();
            entries.push_back(e);
        }
        return WalkLaw(d, std::move(entries), j.value("label", std::string("custom")),
                       j.value("truncation_loss", 0.0));
    } catch (const nlohmann::json::exception& ex) {
        throw ValidationError(std::string("walk document: ") + ex.what());
    }
}

Grid push_forward(const Grid& src, const WalkLaw& law, const Box* window, double* lost) {
    Box target = src.box.dilate(law.support_box());
    if (window) target = target.intersect(*window);
    Grid out(target, 0.0);
    double dropped = 0.0;
    const int d = law.dim();
    const auto& entries = law.entries();
    const bool clipped = window != nullptr;

    std::vector<std::int64_t> offset(entries.size());
    for (std::size_t j = 0; j < entries.size(); ++j) {
        std::int64_t o = 0;
        for (int i = 0; i < d; ++i) o += entries[j].step[i] * target.stride(i);
        offset[j] = o;
    }

    int x[kMaxDim];
    for (BoxCursor c(src.box); c.valid(); c.next()) {
        const double v = src.values[c.index()];
        if (v == 0.0) continue;
        const int* y = c.coords();
        if (!clipped) {
            const auto base = static_cast<std::int64_t>(target.index(y));
            for (std::size_t j = 0; j < entries.size(); ++j)
                out.values[static_cast<std::size_t>(base + offset[j])] += v * entries[j].prob;
            continue;
        }
        for (std::size_t j = 0; j < entries.size(); ++j) {
            for (int i = 0; i < d; ++i) x[i] = y[i] + entries[j].step[i];
            const double w = v * entries[j].prob;
            if (target.contains(x))
                out.values[target.index(x)] += w;
            else
                dropped += w;
        }
    }
    if (lost) *lost = dropped;
    return out;
}

namespace {

// Removes outer slabs whose mass fits in `budget`; returns the removed mass.
double prune_slabs(Grid& g, double budget) {
    double removed = 0.0;
    const int d = g.box.dim();
    bool changed = true;
    while (changed && g.box.size() > 1) {
        changed = false;
        for (int axis = 0; axis < d; ++axis) {
            for (int side = 0; side < 2; ++side) {
                if (g.box.extent(axis) <= 1) continue;
                const int coord = side == 0 ? g.box.lo()[axis] : g.box.hi()[axis];
                double slab = 0.0;
                for (BoxCursor c(g.box); c.valid(); c.next())
                    if (c.coords()[axis] == coord) slab += g.values[c.index()];
                if (removed + slab > budget) continue;
                Point lo = g.box.lo(), hi = g.box.hi();
                if (side == 0) ++lo[axis]; else --hi[axis];
                Box nb(d, lo, hi);
                Grid ng(nb, 0.0);
                for (BoxCursor c(nb); c.valid(); c.next())
                    ng.values[c.index()] = g.values[g.box.index(c.coords())];
                g = std::move(ng);
                removed += slab;
                changed = true;
            }
        }
    }
    return removed;
}

}  // namespace

const Grid& KernelTable::step(int k) const {
    if (k < 1 || k > k_max())
        throw ValidationError("kernel index " + std::to_string(k) + " outside [1, " +
                              std::to_string(k_max()) + "]");
    return steps_[static_cast<std::size_t>(k - 1)];
}

double KernelTable::loss(int k) const {
    step(k);
    return losses_[static_cast<std::size_t>(k - 1)];
}

std::vector<std::pair<Point, double>> KernelTable::sparse(int k) const {
    const Grid& g = step(k);
    std::vector<std::pair<Point, double>> out;
    for (BoxCursor c(g.box); c.valid(); c.next()) {
        const double v = g.values[c.index()];
        if (v == 0.0) continue;
        Point x{};
        std::copy(c.coords(), c.coords() + d_, x.begin());
        out.emplace_back(x, v);
    }
    return out;
}

KernelTable iterate_kernel(const WalkLaw& law, int k_max, const KernelOptions& opts) {
    if (k_max < 1) throw ValidationError("k_max must be >= 1");
    const int d = law.dim();
    double cells = 1.0;
    for (int i = 0; i < d; ++i) {
        const double ext = 2.0 * k_max * law.reach() + 1.0;
        cells *= opts.window_radius ? std::min(ext, 2.0 * *opts.window_radius + 1.0) : ext;
    }
    if (cells * k_max > 4e9)
        throw ResourceError("kernel table of " + std::to_string(k_max) +
                            " steps exceeds the memory budget; lower k_max or use a window");

    std::optional<Box> window;
    if (opts.window_radius) window = Box::cube(d, *opts.window_radius);

    KernelTable t;
    t.d_ = d;
    Grid cur(Box::point(d), 1.0);
    double prev_mass = 1.0;
    for (int k = 1; k <= k_max; ++k) {
        double lost = 0.0;
        Grid next = push_forward(cur, law, window ? &*window : nullptr, &lost);
        double pruned = 0.0;
        if (opts.trunc_tol > 0.0) pruned = prune_slabs(next, opts.trunc_tol);
        // Step loss: window and pruning plus the law's own truncated mass.
        const double step_loss = lost + pruned + prev_mass * law.truncation_loss();
        prev_mass = next.sum();
        t.losses_.push_back(step_loss);
        t.steps_.push_back(next);
        cur = std::move(next);
    }
    return t;
}

double collision_probability(const KernelTable& table, int k) {
    return table.step(k).sum_squares();
}

double sup_norm(const KernelTable& table, int k) { return table.step(k).max(); }

Grid truncated_green(const KernelTable& diff_table, int n0) {
    if (n0 < 0) throw ValidationError("n0 must be nonnegative");
    const int d = diff_table.dim();
    if (n0 == 0) {
        Point lo{}, hi{};
        for (int i = 0; i < d; ++i) hi[i] = -1;
        return Grid(Box(d, lo, hi), 0.0);
    }
    if (n0 > diff_table.k_max())
        throw ValidationError("n0 = " + std::to_string(n0) + " exceeds kernel horizon " +
                              std::to_string(diff_table.k_max()));
    Box span = diff_table.step(1).box;
    for (int n = 2; n <= n0; ++n) {
        const Box& b = diff_table.step(n).box;
        Point lo{}, hi{};
        for (int i = 0; i < d; ++i) {
            lo[i] = std::min(span.lo()[i], b.lo()[i]);
            hi[i] = std::max(span.hi()[i], b.hi()[i]);
        }
        span = Box(d, lo, hi);
    }
    Grid g(span, 0.0);
    for (int n = 1; n <= n0; ++n) {
        const Grid& p = diff_table.step(n);
        for (BoxCursor c(p.box); c.valid(); c.next()) {
            const double v = p.values[c.index()];
            if (v != 0.0) g.values[g.box.index(c.coords())] += v;
        }
    }
    return g;
}

}  // namespace dpre
