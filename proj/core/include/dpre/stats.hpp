#pragma once

#include <cstddef>
#include <vector>

namespace dpre {

// Welford accumulator; feed values in a fixed order for reproducible output.
class RunningStats {
public:
    void add(double x);
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const;  // unbiased
    double standard_error() const;

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

// Mean and standard error of a sample held in memory.
struct Estimate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};
Estimate estimate(const std::vector<double>& xs);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};
// Wilson score interval at z standard deviations.
Interval wilson_interval(std::size_t hits, std::size_t trials, double z = 1.96);

// Least squares of log y on log x: y ~ C x^{-exponent}.
struct LogLogFit {
    double exponent = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  // RMS residual in log space
    double x_lo = 0.0;
    double x_hi = 0.0;
    int points = 0;
    bool low_confidence = false;
};

// Throws ValidationError for fewer than three usable (x, y > 0) points.
LogLogFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y,
                        double residual_flag = 0.2);

// Roughly geometric integer grid in [lo, hi] with `per_octave` points per doubling.
std::vector<int> log_grid(int lo, int hi, int per_octave, bool even_only = false);

}  // namespace dpre
