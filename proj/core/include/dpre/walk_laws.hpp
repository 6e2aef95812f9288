#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpre/lattice.hpp"

namespace dpre {

struct WalkEntry {
    Point step{};
    double prob = 0.0;
};

// Increment law of a random walk on Z^d. Entries cover the true support only;
// mass dropped by truncating an infinite support is kept in truncation_loss.
class WalkLaw {
public:
    WalkLaw() = default;
    WalkLaw(int d, std::vector<WalkEntry> entries, std::string label,
            double truncation_loss = 0.0, double tolerance = 1e-12);

    int dim() const { return d_; }
    const std::vector<WalkEntry>& entries() const { return entries_; }
    const std::string& label() const { return label_; }
    double truncation_loss() const { return loss_; }
    double support_radius() const { return radius_; }
    // Smallest box containing the support.
    const Box& support_box() const { return bbox_; }
    // Largest |z_i| over the support and all axes.
    int reach() const { return reach_; }
    bool finite_support() const { return loss_ == 0.0; }
    bool symmetric() const { return symmetric_; }
    bool is_simple() const { return simple_; }

    double pmf(const int* x) const;

    const std::vector<std::string>& warnings() const { return warnings_; }
    void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

private:
    std::vector<std::string> warnings_;
    int d_ = 0;
    std::vector<WalkEntry> entries_;
    std::string label_;
    double loss_ = 0.0;
    double radius_ = 0.0;
    int reach_ = 0;
    Box bbox_;
    bool symmetric_ = false;
    bool simple_ = false;
};

WalkLaw make_simple_walk(int d);
WalkLaw make_point_mass(int d);

// Tower sequence a_0 = 1, a_{k+1} = 2^{a_k}; throws past a_4 = 65536.
std::uint64_t tower_term(int k);
// Unnormalised weight f(x) of the tower construction (all shells).
double tower_weight(std::int64_t x);
// Index k of the shell containing |x|; 0 for |x| <= 1.
int tower_shell(std::int64_t x);
// Sum of f(x) over shells 0..max_shell by direct summation over x.
double tower_weight_sum(int max_shell);

// Draws increments by inverse cdf. Truncated laws are renormalised, i.e.
// sampled conditionally on staying inside the retained support.
class StepSampler {
public:
    explicit StepSampler(const WalkLaw& law);
    const WalkEntry& draw(double u) const;

private:
    const WalkLaw* law_;
    std::vector<double> cdf_;
};

// One-dimensional tower walk with shells beyond shell_cutoff truncated.
// The pmf is f / sum(f) over all shells, so the retained mass is 1 - loss.
WalkLaw make_tower_walk(int shell_cutoff);

// Law of X_1 - X'_1 for two independent copies.
WalkLaw difference_walk(const WalkLaw& law, double warn_loss = 1e-12);

// Structured text: {"label", "d", "entries": [[[x...], p], ...], "truncation_loss"}.
std::string walk_to_json(const WalkLaw& law);
WalkLaw walk_from_json(const std::string& text);

// One convolution step y -> y + z restricted to `window` (if given); returns
// the pushed grid and writes the mass that fell outside the window.
Grid push_forward(const Grid& src, const WalkLaw& law, const Box* window, double* lost);

struct KernelOptions {
    // Per-step pruning budget for low-mass boundary slabs.
    double trunc_tol = 0.0;
    // Hard spatial window; mass leaving it is recorded as loss.
    std::optional<int> window_radius;
};

// p_k(x) = P(X_k = x) for k = 1..k_max.
class KernelTable {
public:
    int dim() const { return d_; }
    int k_max() const { return static_cast<int>(steps_.size()); }
    const Grid& step(int k) const;
    // Mass dropped at step k (truncation of the law included).
    double loss(int k) const;
    std::vector<std::pair<Point, double>> sparse(int k) const;

private:
    friend KernelTable iterate_kernel(const WalkLaw&, int, const KernelOptions&);
    int d_ = 0;
    std::vector<Grid> steps_;
    std::vector<double> losses_;
};

KernelTable iterate_kernel(const WalkLaw& law, int k_max, const KernelOptions& opts = {});

double collision_probability(const KernelTable& table, int k);
double sup_norm(const KernelTable& table, int k);

// g0(x) = sum_{n=1}^{n0} P(Y_n = x) from the kernel table of the difference walk.
Grid truncated_green(const KernelTable& diff_table, int n0);

}  // namespace dpre
