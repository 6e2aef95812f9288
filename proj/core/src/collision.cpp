#include "dpre/collision.hpp"

#include <cmath>

#include "dpre/errors.hpp"

namespace dpre {

void CompensatedSum::add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
        comp_ += (sum_ - t) + x;
    else
        comp_ += (x - t) + sum_;
    sum_ = t;
}

std::vector<double> simple_return_probabilities(int d, int n_max) {
    if (d < 1 || d > 3) throw ValidationError("closed-form return series only for d <= 3");
    if (n_max < 0) throw ValidationError("n_max must be nonnegative");
    std::vector<double> r(static_cast<std::size_t>(n_max) + 1);
    r[0] = 1.0;
    if (d <= 2) {
        double q = 1.0;  // C(2n, n) / 4^n
        for (int n = 1; n <= n_max; ++n) {
            q *= (2.0 * n - 1.0) / (2.0 * n);
            r[static_cast<std::size_t>(n)] = d == 1 ? q : q * q;
        }
        return r;
    }
    // a(n) = sum_k C(2n,n) C(n,k)^2 C(2k,k) closed walks of length 2n; r(n) = a(n) / 36^n.
    // n^3 a(n) = 2(2n-1)(10n^2-10n+3) a(n-1) - 36(n-1)(2n-1)(2n-3) a(n-2).
    if (n_max >= 1) r[1] = 1.0 / 6.0;
    for (int n = 2; n <= n_max; ++n) {
        const double x = n;
        const double a = 2.0 * (2.0 * x - 1.0) * (10.0 * x * x - 10.0 * x + 3.0) / 36.0;
        const double b = (x - 1.0) * (2.0 * x - 1.0) * (2.0 * x - 3.0) / 36.0;
        r[static_cast<std::size_t>(n)] =
            (a * r[static_cast<std::size_t>(n - 1)] - b * r[static_cast<std::size_t>(n - 2)]) /
            (x * x * x);
    }
    return r;
}

KernelSummary kernel_summaries(const WalkLaw& law, int k_max, const KernelOptions& opts) {
    if (k_max < 1) throw ValidationError("k_max must be >= 1");
    const int d = law.dim();
    double cells = 1.0;
    for (int i = 0; i < d; ++i) {
        const double ext = 2.0 * k_max * law.reach() + 1.0;
        cells *= opts.window_radius ? std::min(ext, 2.0 * *opts.window_radius + 1.0) : ext;
    }
    const double work = cells * static_cast<double>(law.entries().size()) * k_max / (d + 1.0);
    if (cells > 5e8 || work > 5e11)
        throw ResourceError("kernel iteration to k = " + std::to_string(k_max) + " in d = " +
                            std::to_string(d) + " exceeds the work budget");
    std::optional<Box> window;
    if (opts.window_radius) window = Box::cube(d, *opts.window_radius);

    KernelSummary s;
    Grid cur(Box::point(d), 1.0);
    double prev_mass = 1.0;
    for (int k = 1; k <= k_max; ++k) {
        double lost = 0.0;
        cur = push_forward(cur, law, window ? &*window : nullptr, &lost);
        s.collision.push_back(cur.sum_squares());
        s.sup.push_back(cur.max());
        s.loss.push_back(lost + prev_mass * law.truncation_loss());
        prev_mass = cur.sum();
    }
    return s;
}

double CollisionSeries::partial_sum(int m) const {
    if (m < 0 || m > horizon())
        throw ValidationError("partial sum index outside the computed horizon");
    CompensatedSum s;
    for (int k = 0; k < m; ++k) s.add(terms[static_cast<std::size_t>(k)]);
    return s.value();
}

CollisionSeries collision_series(const WalkLaw& law, int horizon) {
    if (horizon < 1) throw ValidationError("collision horizon must be >= 1");
    CollisionSeries out;
    if (law.is_simple() && law.dim() <= 3) {
        // Symmetric law: P(X_k = X'_k) = P(X_{2k} = 0).
        const auto r = simple_return_probabilities(law.dim(), horizon);
        out.terms.assign(r.begin() + 1, r.end());
        out.method = "closed-form";
        return out;
    }
    out.terms = kernel_summaries(law, horizon).collision;
    out.method = "kernel";
    return out;
}

}  // namespace dpre
