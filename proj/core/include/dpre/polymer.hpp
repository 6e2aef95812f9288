#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpre/env_laws.hpp"
#include "dpre/field.hpp"
#include "dpre/walk_laws.hpp"

namespace dpre {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const double* a, std::size_t n);
inline double log_add(double a, double b) {
    if (a < b) std::swap(a, b);
    if (b == kNegInf) return a;
    return a + std::log1p(std::exp(b - a));
}

// Log-space convolution of a row on a fixed box with a walk law.
class TransferStencil {
public:
    TransferStencil(const WalkLaw& law, const Box& box);

    const Box& box() const { return box_; }
    // Sites of `box` reachable in one step from `active`.
    Box grow(const Box& active) const;
    // conv(x) = logsumexp_y [prev(y) + log p(x - y)] for x in grow(active),
    // -inf elsewhere; `prev` is -inf outside `active`.
    Box propagate(const std::vector<double>& prev, const Box& active,
                  std::vector<double>& conv) const;

private:
    Box box_;
    Box law_box_;
    int d_;
    std::vector<Point> steps_;
    std::vector<double> log_probs_;
    std::vector<std::int64_t> offsets_;
};

struct EvolveOptions {
    // Cube radius of the hard-wall box; default n * reach (exact containment).
    std::optional<int> radius;
    // Store log W_k(x) for every k (needed by the per-step observables).
    bool keep_rows = true;
    bool track_overlap = true;
    // Difference-walk Green function g0; enables J_k.
    const Grid* green = nullptr;
    bool compute_leak = true;
};

struct PolymerState {
    double beta = 0.0;
    int n = 0;
    Box box;
    std::vector<std::vector<double>> log_rows;  // log W_k(x), k = 0..n (or only the last)
    std::vector<double> log_w;                  // log W_k, k = 0..n
    std::vector<double> overlap;                // I_k, k = 0..n (I_0 unset)
    std::vector<double> green_form;             // J_k, k = 0..n when g0 given
    std::vector<double> log_max_prev;           // log max_x W_{k-1}(x), k = 1..n
    double leak = 0.0;       // beta = 0 mass lost to the wall and law truncation
    bool leak_flag = false;  // leak > 1e-6

    const std::vector<double>& log_row(int k) const;
    // mu_k(x) over the box.
    Grid endpoint(int k) const;
};

double box_leak(const WalkLaw& law, const Box& box, int n);
Box default_box(const WalkLaw& law, int n, std::optional<int> radius = std::nullopt);

PolymerState evolve(const FieldFn& omega, const WalkLaw& walk, const EnvLaw& env, double beta,
                    int n, const EvolveOptions& opts = {});
PolymerState evolve(const LatticeField& field, const WalkLaw& walk, const EnvLaw& env,
                    double beta, const EvolveOptions& opts = {});

// (D mu_{k-1})(x) = P_{omega, k-1}(X_k = x), over the state's box.
Grid endpoint_pushforward(const PolymerState& state, const WalkLaw& walk, int k);
double overlap(const PolymerState& state, int k);
// J = sum_{x,y} mu(x) g0(y - x) mu(y).
double green_quadratic(const Grid& mu, const Grid& g0);
double green_form(const PolymerState& state, int k, const Grid& g0);

// Row-resampling check of E[(W_k - W_{k-1})^2 | F_{k-1}] = chi W_{k-1}^2 I_k.
// Reported in units of W_{k-1}^2.
struct BracketReport {
    int k = 0;
    double estimate = 0.0;
    double se = 0.0;
    double closed_form = 0.0;
    double overlap = 0.0;
    double relative_error = 0.0;
    double z_score = 0.0;
    std::size_t resamples = 0;
};

BracketReport bracket_identity_check(const FieldFn& omega, const WalkLaw& walk,
                                     const EnvLaw& env, double beta, int k,
                                     std::size_t resamples, std::uint64_t seed,
                                     std::optional<int> radius = std::nullopt);

struct FractionalBoundReport {
    double theta = 0.0;
    int n = 0;
    int m = 0;
    double lhs = 0.0;  // E[W_{nm}^theta]
    double lhs_se = 0.0;
    double site_sum = 0.0;  // sum_x E[W_n(x)^theta]
    double site_sum_se = 0.0;
    double rhs = 0.0;  // site_sum^m
    double rhs_se = 0.0;
    bool holds = false;  // lhs <= rhs + 4 combined SE
    std::size_t fields = 0;
};

FractionalBoundReport checkpoint_fractional_bound(const EnvLaw& env, const WalkLaw& walk,
                                                  double beta, double theta, int n, int m,
                                                  std::size_t mc_fields, std::uint64_t seed,
                                                  int workers = 1);

// ||D^s||_inf for s = 1..s_max; exact for even s of simple walks in d <= 3
// and an upper bound ||D^{s-1}||_inf for odd s there; kernel iteration otherwise.
std::vector<double> sup_norm_series(const WalkLaw& law, int s_max);

struct YQuantity {
    double p = 0.0;
    int s_max = 0;
    double partial_sum = 0.0;
    std::vector<double> terms;     // s = 1..s_max
    double remainder_table = 0.0;  // sum over s_max < s <= s_table of ||D^s||^{p-1}
    double remainder_tail = 0.0;   // extrapolated beyond s_table from the fitted decay
    int s_table = 0;
    double nu_fit = 0.0;
    bool certified = false;  // remainder finite
    std::string note;
};

// Y = sum_s sum_x (D^s mu)^p for a probability vector mu (e.g. mu_{T-1}).
YQuantity y_quantity(const Grid& mu, const WalkLaw& walk, double p, int s_max,
                     int s_table = 0);
YQuantity y_quantity(const PolymerState& state, const WalkLaw& walk, int T, double p, int s_max);

// Tab-separated columns k, log_W, I, J, leak.
std::string polymer_table(const PolymerState& state);

}  // namespace dpre
