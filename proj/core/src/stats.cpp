#include "dpre/stats.hpp"

#include <algorithm>
#include <cmath>

#include "dpre/errors.hpp"

namespace dpre {

void RunningStats::add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
}

double RunningStats::variance() const {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
}

double RunningStats::standard_error() const {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

Estimate estimate(const std::vector<double>& xs) {
    RunningStats s;
    for (double x : xs) s.add(x);
    return {s.mean(), s.standard_error(), s.count()};
}

Interval wilson_interval(std::size_t hits, std::size_t trials, double z) {
    if (trials == 0) return {0.0, 1.0};
    const double n = static_cast<double>(trials);
    const double p = static_cast<double>(hits) / n;
    const double z2 = z * z;
    const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

LogLogFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y,
                        double residual_flag) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(y[i])) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    if (lx.size() < 3)
        throw ValidationError("degenerate regression: fewer than 3 usable points");
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx <= 0.0) throw ValidationError("degenerate regression: all abscissae equal");
    const double slope = sxy / sxx;
    LogLogFit f;
    f.exponent = -slope;
    f.intercept = my - slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - (f.intercept + slope * lx[i]);
        rss += r * r;
    }
    f.residual = std::sqrt(rss / n);
    f.points = static_cast<int>(lx.size());
    f.x_lo = std::exp(*std::min_element(lx.begin(), lx.end()));
    f.x_hi = std::exp(*std::max_element(lx.begin(), lx.end()));
    f.low_confidence = f.residual > residual_flag;
    return f;
}

std::vector<int> log_grid(int lo, int hi, int per_octave, bool even_only) {
    std::vector<int> out;
    if (lo < 1) lo = 1;
    if (hi < lo) return out;
    const double step = std::pow(2.0, 1.0 / std::max(1, per_octave));
    for (double v = lo; v <= hi * (1.0 + 1e-12); v *= step) {
        int k = static_cast<int>(std::lround(v));
        if (even_only && (k & 1)) ++k;
        if (k > hi || k < lo) continue;
        if (out.empty() || out.back() != k) out.push_back(k);
    }
    return out;
}

}  // namespace dpre
