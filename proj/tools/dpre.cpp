// dpre: command-line front end for the directed polymer toolkit.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpre/collision.hpp"
#include "dpre/criteria.hpp"
#include "dpre/env_laws.hpp"
#include "dpre/errors.hpp"
#include "dpre/exponents.hpp"
#include "dpre/field.hpp"
#include "dpre/pinning.hpp"
#include "dpre/polymer.hpp"
#include "dpre/renewal.hpp"
#include "dpre/report.hpp"
#include "dpre/size_bias.hpp"
#include "dpre/walk_laws.hpp"

using nlohmann::ordered_json;
using namespace dpre;

namespace {

constexpr std::uint64_t kDefaultSeed = 20240611;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitInconclusive = 3;

// One option that may come from the config file or the command line; the
// flag wins when both are present.
struct Binding {
    std::string key;
    CLI::Option* opt = nullptr;
    std::function<void(const ordered_json&)> load;
    std::function<ordered_json()> dump;
    bool in_config = true;  // part of the resolved config embedded in reports
};

class Command {
public:
    Command(CLI::App& root, const std::string& name, const std::string& help)
        : app_(root.add_subcommand(name, help)), name_(name) {}

    template <class T>
    void bind(const std::string& key, T& var, const std::string& help, bool in_config = true) {
        Binding b;
        b.key = key;
        b.opt = app_->add_option("--" + key, var, help)->capture_default_str();
        b.load = [&var](const ordered_json& j) { var = j.get<T>(); };
        b.dump = [&var] { return ordered_json(var); };
        b.in_config = in_config;
        bindings_.push_back(std::move(b));
    }

    CLI::App* app() const { return app_; }
    const std::string& name() const { return name_; }

    void apply_config(const ordered_json& cfg) {
        for (const auto& k : cfg.items()) {
            if (k.key() == "command") continue;
            bool known = false;
            for (const auto& b : bindings_) known = known || b.key == k.key();
            if (!known) throw ValidationError("config key '" + k.key() + "' is not an option of '" + name_ + "'");
        }
        for (auto& b : bindings_) {
            if (b.opt->count() > 0 || !cfg.contains(b.key)) continue;
            try {
                b.load(cfg.at(b.key));
            } catch (const ordered_json::exception&) {
                throw ValidationError("config key '" + b.key + "' has the wrong type");
            }
        }
    }

    std::string resolved() const {
        ordered_json j;
        j["command"] = name_;
        for (const auto& b : bindings_)
            if (b.in_config) j[b.key] = b.dump();
        return j.dump();
    }

    std::function<int()> run;

private:
    CLI::App* app_;
    std::string name_;
    std::vector<Binding> bindings_;
};

struct Common {
    std::string walk = "simple:1";
    std::string env = "gaussian";
    std::uint64_t seed = kDefaultSeed;
    int workers = 1;
    std::string out;
    std::string config;
    bool json = false;
};

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ValidationError("cannot read " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

bool looks_like_json(const std::string& s) { return !s.empty() && s.front() == '{'; }

WalkLaw parse_walk(const std::string& desc) {
    if (looks_like_json(desc)) return walk_from_json(desc);
    const auto colon = desc.find(':');
    if (colon != std::string::npos) {
        const std::string kind = desc.substr(0, colon);
        int arg = 0;
        try {
            std::size_t used = 0;
            arg = std::stoi(desc.substr(colon + 1), &used);
            if (used != desc.size() - colon - 1) throw std::invalid_argument(desc);
        } catch (const std::logic_error&) {
            throw ValidationError("walk '" + desc + "': expected an integer after ':'");
        }
        if (kind == "simple") return make_simple_walk(arg);
        if (kind == "point") return make_point_mass(arg);
        if (kind == "tower") return make_tower_walk(arg);
        throw ValidationError("unknown walk kind '" + kind + "'; use simple:d, point:d, tower:cutoff or a JSON file");
    }
    return walk_from_json(read_file(desc));
}

EnvLaw parse_env(const std::string& desc) {
    if (looks_like_json(desc)) return env_from_json(desc);
    if (desc == "gaussian") return EnvLaw::gaussian();
    if (desc == "rademacher") return EnvLaw::rademacher();
    if (desc == "shifted-exponential") return EnvLaw::shifted_exponential();
    std::ifstream probe(desc);
    if (!probe) throw ValidationError("unknown environment '" + desc + "'; use gaussian, rademacher, shifted-exponential or a JSON file");
    return env_from_json(read_file(desc));
}

template <class T>
std::vector<T> parse_list(const std::string& text, const char* what) {
    std::vector<T> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::istringstream is(item);
        T x{};
        if (!(is >> x) || !(is >> std::ws).eof())
            throw ValidationError(std::string("cannot parse '") + item + "' in " + what);
        v.push_back(x);
    }
    if (v.empty()) throw ValidationError(std::string(what) + " is empty");
    return v;
}

void require(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}

std::size_t positive_budget(long long v, const char* name) {
    require(v > 0, std::string(name) + " must be > 0");
    return static_cast<std::size_t>(v);
}

// Single-row table mirroring the summary block.
void summary_as_row(Report& r) {
    std::vector<std::string> cols, row;
    for (const auto& [k, v] : r.summary()) {
        cols.push_back(k);
        row.push_back(v);
    }
    r.set_columns(cols);
    r.add_row(row);
}

std::string out_dir(const Common& c) {
    if (!c.out.empty()) return c.out;
    if (const char* e = std::getenv("DPRE_OUT_DIR"); e && *e) return e;
    return ".";
}

void emit(const Report& r, const Common& c) {
    const std::string path = r.write(out_dir(c), r.command());
    if (c.json) {
        std::cout << r.summary_json();
    } else {
        std::cout << r.summary_text();
        std::cout << "table=" << path << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App root{"Directed polymer experiments: simulation, criteria and certificates"};
    root.require_subcommand(1);
    Common c;
    std::vector<std::unique_ptr<Command>> cmds;

    auto make = [&](const std::string& name, const std::string& help, bool walk_env) {
        cmds.push_back(std::make_unique<Command>(root, name, help));
        Command& cmd = *cmds.back();
        if (walk_env) {
            cmd.bind("walk", c.walk, "walk law: simple:d, point:d, tower:cutoff, JSON file or inline JSON");
            cmd.bind("env", c.env, "environment: gaussian, rademacher, shifted-exponential, JSON file or inline JSON");
        }
        cmd.bind("seed", c.seed, "random seed");
        cmd.bind("workers", c.workers, "worker threads (results do not depend on it)", false);
        cmd.bind("out", c.out, "output directory (default $DPRE_OUT_DIR, else .)", false);
        cmd.app()->add_option("--config", c.config, "JSON config file; flags override its keys");
        cmd.app()->add_flag("--json", c.json, "print the summary as JSON");
        return &cmd;
    };

    // simulate
    double sim_beta = 0.5;
    int sim_n = 20, sim_replica = 0, sim_radius = 0, sim_n0 = 0;
    {
        Command* cmd = make("simulate", "evolve one polymer and print its trace", true);
        cmd->bind("beta", sim_beta, "inverse temperature");
        cmd->bind("n", sim_n, "number of steps");
        cmd->bind("replica", sim_replica, "field stream index");
        cmd->bind("radius", sim_radius, "box radius, 0 for n * reach");
        cmd->bind("n0", sim_n0, "Green function truncation for J_k, 0 to skip");
        cmd->run = [&, cmd] {
            require(sim_n >= 1, "n must be >= 1");
            require(sim_replica >= 0, "replica must be >= 0");
            const WalkLaw walk = parse_walk(c.walk);
            const EnvLaw env = parse_env(c.env);
            EvolveOptions eo;
            if (sim_radius > 0) eo.radius = sim_radius;
            Grid g0;
            if (sim_n0 > 0) {
                g0 = truncated_green(iterate_kernel(difference_walk(walk), sim_n0), sim_n0);
                eo.green = &g0;
            }
            const CounterField field(env, walk.dim(), c.seed, static_cast<std::uint32_t>(sim_replica));
            const PolymerState st = evolve(field.fn(), walk, env, sim_beta, sim_n, eo);
            Report r("simulate");
            r.set_config(cmd->resolved());
            r.add_table_text(polymer_table(st));
            r.put("n", st.n);
            r.put("log_W_n", st.log_w.back());
            r.put("I_n", st.overlap.back());
            if (!st.green_form.empty()) r.put("J_n", st.green_form.back());
            r.put("leak", st.leak);
            r.put("leak_flag", st.leak_flag);
            emit(r, c);
            return kExitOk;
        };
    }

    // beta2
    int b2_horizon = 10000;
    double b2_tol = 1e-9;
    {
        Command* cmd = make("beta2", "L2 critical temperature from the collision series", true);
        cmd->bind("horizon", b2_horizon, "collision series horizon");
        cmd->bind("tol", b2_tol, "bisection tolerance");
        cmd->run = [&, cmd] {
            const WalkLaw walk = parse_walk(c.walk);
            const EnvLaw env = parse_env(c.env);
            Beta2Options o;
            o.horizon = b2_horizon;
            o.tol = b2_tol;
            const Beta2Result b = beta2(walk, env, o);
            Report r("beta2");
            r.set_config(cmd->resolved());
            r.put("verdict", b.verdict);
            r.put("beta2", b.beta2);
            r.put("beta2_lower", b.beta2_lower);
            r.put("series", b.series);
            r.put("horizon", b.horizon);
            r.put("method", b.method);
            r.put("late_increment", b.late_increment);
            r.put("decay_exponent", b.decay_exponent);
            r.put("remainder", b.remainder);
            r.put("chi_times_series", b.chi_times_series);
            r.put("tol", b.tol);
            r.put("iterations", b.iterations);
            summary_as_row(r);
            emit(r, c);
            return b.verdict == "inconclusive" ? kExitInconclusive : kExitOk;
        };
    }

    // vsd
    double vsd_beta = 1.0, vsd_theta = 0.0, vsd_K = 0.0, vsd_eta_bar = 0.0;
    int vsd_n = 32;
    long long vsd_fields = 1000;
    {
        Command* cmd = make("vsd", "finite-volume very strong disorder certificate", true);
        cmd->bind("beta", vsd_beta, "inverse temperature");
        cmd->bind("n", vsd_n, "polymer length");
        cmd->bind("fields", vsd_fields, "Monte Carlo environments");
        cmd->bind("theta", vsd_theta, "fractional moment, 0 for 1 - eta_bar/(4d)");
        cmd->bind("K", vsd_K, "threshold exponent, 0 for 20d/eta_bar");
        cmd->bind("eta-bar", vsd_eta_bar, "tail exponent min(eta,1), 0 to infer from the walk");
        cmd->run = [&, cmd] {
            const WalkLaw walk = parse_walk(c.walk);
            const EnvLaw env = parse_env(c.env);
            VsdOptions o;
            if (vsd_theta != 0.0) o.theta = vsd_theta;
            if (vsd_K != 0.0) o.K = vsd_K;
            if (vsd_eta_bar != 0.0) o.eta_bar = vsd_eta_bar;
            const VsdCertificate v = vsd_certificate(env, walk, vsd_beta, vsd_n, o,
                                                     positive_budget(vsd_fields, "fields"), c.seed, c.workers);
            Report r("vsd");
            r.set_config(cmd->resolved());
            r.put("n", v.n);
            r.put("d", v.d);
            r.put("eta_bar", v.eta_bar);
            r.put("theta", v.theta);
            r.put("K", v.K);
            r.put("estimate", v.estimate);
            r.put("se", v.se);
            r.put("log_estimate", v.log_estimate);
            r.put("threshold", v.threshold);
            r.put("log_threshold", v.log_threshold);
            r.put("fields", v.fields);
            r.put("verdict", v.verdict);
            r.put("note", v.note);
            summary_as_row(r);
            emit(r, c);
            return v.verdict == "underpowered" ? kExitInconclusive : kExitOk;
        };
    }

    // free-energy
    double fe_beta = 1.0;
    std::string fe_grid = "8,16,32";
    long long fe_fields = 64;
    int fe_radius = 0;
    {
        Command* cmd = make("free-energy", "Monte Carlo estimate of (1/n) E log W_n on an n grid", true);
        cmd->bind("beta", fe_beta, "inverse temperature");
        cmd->bind("n-grid", fe_grid, "comma-separated lengths");
        cmd->bind("fields", fe_fields, "Monte Carlo environments per length");
        cmd->bind("radius", fe_radius, "box radius, 0 for n * reach");
        cmd->run = [&, cmd] {
            const WalkLaw walk = parse_walk(c.walk);
            const EnvLaw env = parse_env(c.env);
            const auto grid = parse_list<int>(fe_grid, "n-grid");
            const auto fields = positive_budget(fe_fields, "fields");
            Report r("free-energy");
            r.set_config(cmd->resolved());
            r.set_columns({"n", "mean", "se", "leak", "leak_flag"});
            bool any_leak = false;
            for (int n : grid) {
                std::optional<int> radius;
                if (fe_radius > 0) radius = fe_radius;
                const FreeEnergyEstimate f = free_energy(env, walk, fe_beta, n, fields, c.seed, c.workers, radius);
                r.add_row({fmt_num(f.n), fmt_num(f.mean), fmt_num(f.se), fmt_num(f.leak),
                           f.leak_flag ? "true" : "false"});
                any_leak = any_leak || f.leak_flag;
            }
            r.put("lengths", grid.size());
            r.put("fields", fields);
            r.put("leak_flag", any_leak);
            emit(r, c);
            return kExitOk;
        };
    }

    // spine
    double sp_beta = 1.0, sp_theta = 0.0;
    int sp_n = 32;
    long long sp_samples = 1000;
    {
        Command* cmd = make("spine", "size-biased spine sampling and the R_n observable", true);
        cmd->bind("beta", sp_beta, "inverse temperature");
        cmd->bind("n", sp_n, "polymer length");
        cmd->bind("samples", sp_samples, "spines and plain fields");
        cmd->bind("theta", sp_theta, "if > 0 also bound E[W_n^theta] through the event R_n >= Sigma_n^(3/4)");
        cmd->run = [&, cmd] {
            require(sp_n >= 1, "n must be >= 1");
            const WalkLaw walk = parse_walk(c.walk);
            const EnvLaw env = parse_env(c.env);
            const auto samples = positive_budget(sp_samples, "samples");
            auto kernels = std::make_shared<const KernelTable>(iterate_kernel(walk, sp_n));
            const int n = sp_n;
            const FieldFunctional rn = [kernels, n](const FieldFn& w) { return rn_observable(w, *kernels, n).R; };
            const SizeBiasReport sb = size_bias_check(env, walk, sp_beta, sp_n, rn, samples, c.seed, c.workers);
            const SigmaSeries sig = sigma_series(walk, sp_n);
            const SpineSample first = spine_sample(env, walk, sp_beta, sp_n, c.seed, 0);

            Report r("spine");
            r.set_config(cmd->resolved());
            std::vector<std::string> cols{"k"};
            for (int i = 0; i < walk.dim(); ++i) cols.push_back("x" + std::to_string(i + 1));
            cols.push_back("omega_hat");
            r.set_columns(cols);
            for (int k = 0; k <= sp_n; ++k) {
                std::vector<std::string> row{fmt_num(k)};
                for (int i = 0; i < walk.dim(); ++i) row.push_back(fmt_num(first.path()[static_cast<std::size_t>(k)][i]));
                row.push_back(k == 0 ? "nan" : fmt_num(first.tilts()[static_cast<std::size_t>(k - 1)]));
                r.add_row(row);
            }
            r.put("n", sp_n);
            r.put("sigma_n", sig.at(sp_n));
            r.put("target", env.lambda_prime(sp_beta) * sig.at(sp_n));
            r.put("spine_mean", sb.spine_mean);
            r.put("spine_se", sb.spine_se);
            r.put("direct_mean", sb.direct_mean);
            r.put("direct_se", sb.direct_se);
            r.put("z_score", sb.z_score);
            r.put("samples", sb.samples);
            if (sp_theta > 0.0) {
                const FractionalEventReport fe = fractional_event_bound(
                    env, walk, sp_beta, sp_n, sp_theta, rn_event(kernels, sp_n), samples, samples, c.seed, c.workers);
                r.put("theta", fe.theta);
                r.put("p_event", fe.p_event);
                r.put("p_event_se", fe.p_event_se);
                r.put("p_tilde_complement", fe.p_tilde_complement);
                r.put("p_tilde_complement_se", fe.p_tilde_complement_se);
                r.put("bound", fe.bound);
                r.put("bound_se", fe.bound_se);
                r.put("direct_fractional", fe.direct);
                r.put("direct_fractional_se", fe.direct_se);
                r.put("bound_holds", fe.holds);
            }
            emit(r, c);
            return kExitOk;
        };
    }

    // hitting
    double hit_beta = 1.0;
    std::string hit_us = "2,5,10";
    int hit_horizon = 200;
    long long hit_replicas = 2000;
    {
        Command* cmd = make("hitting", "empirical P(sup_k W_k >= u) against 1/u", true);
        cmd->bind("beta", hit_beta, "inverse temperature");
        cmd->bind("u", hit_us, "comma-separated thresholds >= 1");
        cmd->bind("horizon", hit_horizon, "polymer length");
        cmd->bind("replicas", hit_replicas, "independent environments");
        cmd->run = [&, cmd] {
            const WalkLaw walk = parse_walk(c.walk);
            const EnvLaw env = parse_env(c.env);
            const HittingStats h = hitting_statistics(env, walk, hit_beta, parse_list<double>(hit_us, "u"), hit_horizon,
                                                      positive_budget(hit_replicas, "replicas"), c.seed, c.workers);
            Report r("hitting");
            r.set_config(cmd->resolved());
            r.set_columns({"u", "hits", "p", "se", "wilson_lo", "wilson_hi", "bound", "u_p", "bound_ok"});
            for (const auto& row : h.rows)
                r.add_row({fmt_num(row.u), fmt_num(row.hits), fmt_num(row.p), fmt_num(row.se), fmt_num(row.wilson_lo),
                           fmt_num(row.wilson_hi), fmt_num(row.doob_bound), fmt_num(row.scaled),
                           row.doob_ok ? "true" : "false"});
            r.put("replicas", h.replicas);
            r.put("horizon", h.horizon);
            r.put("ratio_spread", h.ratio_spread);
            r.put("bound_ok", h.doob_ok);
            emit(r, c);
            return kExitOk;
        };
    }

    // stopping
    double st_beta = 1.0, st_u = 2.0, st_K = 4.0;
    int st_horizon = 200;
    long long st_replicas = 2000;
    {
        Command* cmd = make("stopping", "stopping times tau_u, tau_Ku and dips below u/K", true);
        cmd->bind("beta", st_beta, "inverse temperature");
        cmd->bind("u", st_u, "level u > 1");
        cmd->bind("K", st_K, "ratio K > 1");
        cmd->bind("horizon", st_horizon, "polymer length");
        cmd->bind("replicas", st_replicas, "independent environments");
        cmd->run = [&, cmd] {
            const WalkLaw walk = parse_walk(c.walk);
            const EnvLaw env = parse_env(c.env);
            const StoppingStats s = stopping_experiment(env, walk, st_beta, st_u, st_K, st_horizon,
                                                        positive_budget(st_replicas, "replicas"), c.seed, c.workers);
            Report r("stopping");
            r.set_config(cmd->resolved());
            r.set_columns({"replica", "tau_u", "tau_Ku", "sigma", "overlap_sum", "overlap_max", "w_at_tau_u"});
            for (std::size_t i = 0; i < s.per_replica.size(); ++i) {
                const auto& p = s.per_replica[i];
                r.add_row({fmt_num(i), fmt_num(p.tau_u), fmt_num(p.tau_Ku), fmt_num(p.sigma), fmt_num(p.overlap_sum),
                           fmt_num(p.overlap_max), fmt_num(p.w_at_tau_u)});
            }
            r.put("reached_u", s.reached_u);
            r.put("reached_Ku", s.reached_Ku);
            r.put("dips", s.dips);
            r.put("p_dip", s.p_dip);
            r.put("p_dip_se", s.p_dip_se);
            r.put("dip_bound", s.dip_bound);
            r.put("dip_ok", s.dip_ok);
            r.put("dip_frequency", s.dip_frequency);
            r.put("overlap_q10", s.overlap_q10);
            r.put("overlap_q50", s.overlap_q50);
            r.put("overlap_q90", s.overlap_q90);
            r.put("overshoot2", s.overshoot2);
            r.put("overshoot2_se", s.overshoot2_se);
            r.put("overshoot6", s.overshoot6);
            r.put("overshoot6_se", s.overshoot6_se);
            r.put("underpowered", s.underpowered);
            emit(r, c);
            return s.underpowered ? kExitInconclusive : kExitOk;
        };
    }

    // renewal
    int rn_horizon = 1000, rn_count_n = 0, rn_count_k = 0;
    double rn_q = 0.0;
    std::string rn_mode = "exact";
    long long rn_budget = 0;
    {
        Command* cmd = make("renewal", "interarrival law of the two-walk intersection renewal", true);
        cmd->bind("horizon", rn_horizon, "renewal horizon H");
        cmd->bind("mode", rn_mode, "exact, taboo, deconvolution or mc");
        cmd->bind("mc-budget", rn_budget, "simulated pairs for mode mc");
        cmd->bind("geometric", rn_q, "if in (0,1), use K(n) = (1-q) q^(n-1) instead of the walk");
        cmd->bind("count-n", rn_count_n, "n of the count bound, 0 to skip");
        cmd->bind("count-k", rn_count_k, "k of the count bound");
        cmd->run = [&, cmd] {
            RenewalLaw law;
            if (rn_q != 0.0) {
                law = geometric_renewal(rn_q, rn_horizon);
            } else {
                require(rn_budget >= 0, "mc-budget must be >= 0");
                law = intersection_renewal(parse_walk(c.walk), rn_horizon, rn_mode,
                                           static_cast<std::size_t>(rn_budget), c.seed, c.workers);
            }
            Report r("renewal");
            r.set_config(cmd->resolved());
            r.add_table_text(renewal_table(law));
            r.put("horizon", law.horizon());
            r.put("mode", law.mode);
            r.put("defect", law.defect);
            r.put("defect_se", law.defect_se);
            r.put("escape_upper", law.escape_upper);
            r.put("samples", law.samples);
            if (rn_count_n > 0) {
                const CountBoundReport b = renewal_count_bound_check(law, rn_count_n, rn_count_k);
                r.put("count_n", b.n);
                r.put("count_k", b.k);
                r.put("count_lhs", b.lhs);
                r.put("count_lhs_se", b.lhs_se);
                r.put("alpha_n", b.alpha_n);
                r.put("count_rhs", b.rhs);
                r.put("expected_count", b.expected_count);
                r.put("count_cap", b.count_cap);
                r.put("count_bound_holds", b.holds);
                r.put("count_cap_ok", b.count_ok);
            }
            emit(r, c);
            return kExitOk;
        };
    }

    // pinning
    double pin_beta = 0.3, pin_m = 0.0, pin_gamma = 0.0;
    int pin_n = 50, pin_rh = 0, pin_b2h = 10000;
    long long pin_samples = 0;
    {
        Command* cmd = make("pinning", "pinning partition functions for a tilted sequence", true);
        cmd->bind("beta", pin_beta, "inverse temperature");
        cmd->bind("n", pin_n, "length");
        cmd->bind("renewal-horizon", pin_rh, "horizon of the intersection renewal, 0 for n");
        cmd->bind("samples", pin_samples, "tilted sequences for the annealed comparison, 0 to skip");
        cmd->bind("m", pin_m, "block length of the change-of-measure diagnostic, 0 to skip");
        cmd->bind("beta2-horizon", pin_b2h, "collision horizon used for beta_2");
        cmd->bind("gamma", pin_gamma, "exponent for B_a = E[(Zc_a)^gamma]^(1/gamma), a <= n; 0 to skip (needs samples)");
        cmd->run = [&, cmd] {
            require(pin_n >= 1, "n must be >= 1");
            const WalkLaw walk = parse_walk(c.walk);
            const EnvLaw env = parse_env(c.env);
            const RenewalLaw law = intersection_renewal(walk, std::max(pin_n, pin_rh));
            const PinningState st = pinning_partition(law, env, pin_beta, pin_n, c.seed);
            Report r("pinning");
            r.set_config(cmd->resolved());
            r.add_table_text(pinning_table(st));
            r.put("n", st.n);
            r.put("Z_n", st.Z.back());
            r.put("Zc_n", st.Zc.back());
            r.put("Z_survival_n", st.Z_survival.back());
            r.put("renewal_defect", law.defect);
            if (pin_samples > 0) {
                const AnnealedReport a = annealed_check(law, env, pin_beta, pin_n, static_cast<std::size_t>(pin_samples),
                                                        c.seed, c.workers);
                r.put("annealed", a.annealed);
                r.put("mc_mean", a.mc_mean);
                r.put("mc_se", a.mc_se);
                r.put("z_score", a.z_score);
            }
            if (pin_gamma > 0.0) {
                require(pin_samples >= 2, "gamma needs --samples >= 2");
                const ConstrainedMoments cm = constrained_fractional_moments(
                    law, env, pin_beta, pin_gamma, pin_n, static_cast<std::size_t>(pin_samples), c.seed, c.workers);
                double max_bg = 0.0;
                bool below = true;
                for (std::size_t a = 0; a < cm.B.size(); ++a) {
                    max_bg = std::max(max_bg, std::pow(cm.B[a], pin_gamma));
                    below = below && cm.B[a] <= cm.annealed[a] + 4.0 * cm.B_se[a];
                }
                r.put("B_n", cm.B.back());
                r.put("B_n_se", cm.B_se.back());
                r.put("annealed_n", cm.annealed.back());
                r.put("max_B_gamma", max_bg);
                r.put("B_below_annealed", below);
            }
            if (pin_m > 0.0) {
                Beta2Options o;
                o.horizon = pin_b2h;
                const Beta2Result b = beta2(walk, env, o);
                require(b.verdict == "positive", "change of measure needs beta_2 > 0; beta2 verdict is " + b.verdict);
                double tilted = 0.0;
                for (double k : tilted_interarrival(law, 1.0 + env.chi(b.beta2))) tilted += k;
                const ChangeOfMeasure cm = change_of_measure_diagnostic(env, b.beta2, pin_m);
                r.put("beta2", b.beta2);
                r.put("tilted_mass", tilted);
                r.put("com_beta", cm.beta);
                r.put("com_epsilon", cm.epsilon);
                r.put("com_gamma", cm.gamma);
                r.put("com_tilt_mean", cm.tilt_mean);
                r.put("com_penalty", cm.penalty);
                r.put("com_penalty_bound", cm.penalty_bound);
            }
            emit(r, c);
            return kExitOk;
        };
    }

    // exponents
    int ex_lo = 16, ex_hi = 1024;
    long long ex_budget = 0;
    {
        Command* cmd = make("exponents", "tail, local-limit and renewal exponents of a walk", true);
        cmd->bind("k-lo", ex_lo, "first step of the fitting window");
        cmd->bind("k-hi", ex_hi, "last step of the fitting window");
        cmd->bind("mc-budget", ex_budget, "simulated pairs when the exact renewal is infeasible");
        cmd->run = [&, cmd] {
            require(ex_budget >= 0, "mc-budget must be >= 0");
            const WalkLaw walk = parse_walk(c.walk);
            const WalkExponents e = estimate_exponents(walk, ex_lo, ex_hi, static_cast<std::size_t>(ex_budget),
                                                       c.seed, c.workers);
            Report r("exponents");
            r.set_config(cmd->resolved());
            r.put("eta", e.eta);
            r.put("eta_bar", e.eta_bar);
            r.put("nu", e.nu.value);
            r.put("nu_method", e.nu.method);
            r.put("nu_residual", e.nu.fit.residual);
            r.put("alpha", e.alpha.value);
            r.put("alpha_method", e.alpha.method);
            r.put("alpha_residual", e.alpha.fit.residual);
            r.put("transient_difference", e.transient_difference);
            r.put("ordering_ok", e.ordering_ok);
            r.put("ordering_note", e.ordering_note);
            summary_as_row(r);
            emit(r, c);
            return kExitOk;
        };
    }

    // tower-demo
    TowerDemoOptions tw;
    long long tw_fields = 64;
    {
        Command* cmd = make("tower-demo", "tower walk: weights, containment and free-energy trend", false);
        cmd->bind("cutoff", tw.cutoff, "last retained shell");
        cmd->bind("beta", tw.beta, "inverse temperature");
        cmd->bind("fields", tw_fields, "environments per free-energy point");
        cmd->bind("radius", tw.radius, "box radius cap");
        cmd->run = [&, cmd] {
            tw.fields = positive_budget(tw_fields, "fields");
            tw.seed = c.seed;
            tw.workers = c.workers;
            const TowerDemo t = tower_demo(tw);
            Report r("tower-demo");
            r.set_config(cmd->resolved());
            r.set_columns({"n", "mean", "se", "leak", "leak_flag"});
            for (const auto& f : t.free_energy)
                r.add_row({fmt_num(f.n), fmt_num(f.mean), fmt_num(f.se), fmt_num(f.leak), f.leak_flag ? "true" : "false"});
            for (std::size_t k = 0; k < t.a.size(); ++k) r.put("a" + std::to_string(k), static_cast<std::int64_t>(t.a[k]));
            r.put("weight_sum", t.weight_sum);
            r.put("weight_bound_ok", t.weight_bound_ok);
            r.put("truncation_loss", t.truncation_loss);
            r.put("N", t.N);
            r.put("p_contained", t.p_contained);
            r.put("containment_ok", t.containment_ok);
            r.put("trend_ok", t.trend_ok);
            emit(r, c);
            return t.trend_ok ? kExitOk : kExitInconclusive;
        };
    }

    // pstar
    int ps_d = 3;
    std::string ps_eta = "inf", ps_nu;
    {
        Command* cmd = make("pstar", "bounds on the critical fractional exponent p*", false);
        cmd->bind("d", ps_d, "dimension");
        cmd->bind("eta", ps_eta, "tail exponent: inf, a rational like 3/2, or a decimal");
        cmd->bind("nu", ps_nu, "local-limit exponent; empty for the simple-walk value d/2");
        cmd->run = [&, cmd] {
            std::optional<Rational> eta_r, nu_r;
            double eta_d = HUGE_VAL, nu_d = 0.0;
            auto rational = [](const std::string& s) -> std::optional<Rational> {
                try {
                    return Rational::parse(s);
                } catch (const ValidationError&) {
                    return std::nullopt;
                }
            };
            auto decimal = [](const std::string& s, const char* what) {
                try {
                    std::size_t used = 0;
                    const double v = std::stod(s, &used);
                    if (used == s.size()) return v;
                } catch (const std::logic_error&) {
                }
                throw ValidationError(std::string("cannot parse '") + s + "' as " + what);
            };
            const std::string nu_text = ps_nu.empty() ? Rational::make(ps_d, 2).str() : ps_nu;
            nu_r = rational(nu_text);
            if (ps_eta != "inf") eta_r = rational(ps_eta);
            PstarBounds p;
            if (nu_r && (ps_eta == "inf" || eta_r)) {
                p = pstar_bounds(eta_r, *nu_r, ps_d);
            } else {
                if (ps_eta != "inf") eta_d = decimal(ps_eta, "eta");
                nu_d = decimal(nu_text, "nu");
                p = pstar_bounds(eta_d, nu_d, ps_d);
            }
            Report r("pstar");
            r.set_config(cmd->resolved());
            r.put("d", p.d);
            r.put("eta", p.eta);
            r.put("nu", p.nu);
            r.put("lower", p.lower);
            r.put("upper", p.upper);
            r.put("lower_exact", p.exact ? p.lower_exact : fmt_num(p.lower));
            r.put("upper_exact", p.exact ? p.upper_exact : fmt_num(p.upper));
            r.put("exact", p.exact);
            r.put("collapsed", p.collapsed);
            r.put("ill_defined", p.ill_defined);
            r.put("inconsistent", p.inconsistent);
            r.put("note", p.note);
            summary_as_row(r);
            emit(r, c);
            if (p.inconsistent) {
                std::cerr << "dpre: error: " << p.note << "; check --eta and --nu\n";
                return kExitInvalid;
            }
            return p.ill_defined ? kExitInconclusive : kExitOk;
        };
    }

    try {
        root.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return root.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return root.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "dpre: error: " << e.what() << " (see dpre --help)\n";
        return kExitInvalid;
    }

    try {
        for (auto& cmd : cmds) {
            if (!cmd->app()->parsed()) continue;
            if (!c.config.empty()) {
                ordered_json cfg;
                try {
                    cfg = ordered_json::parse(read_file(c.config));
                } catch (const ordered_json::parse_error& e) {
                    throw ValidationError("config " + c.config + " is not valid JSON: " + e.what());
                }
                require(cfg.is_object(), "config " + c.config + " must be a JSON object");
                if (cfg.contains("command") && cfg["command"] != cmd->name())
                    throw ValidationError("config is for '" + cfg["command"].dump() + "', not '" + cmd->name() + "'");
                cmd->apply_config(cfg);
            }
            require(c.workers >= 1, "workers must be >= 1");
            return cmd->run();
        }
    } catch (const ValidationError& e) {
        std::cerr << "dpre: error: " << e.what() << '\n';
        return kExitInvalid;
    } catch (const ResourceError& e) {
        std::cerr << "dpre: error: " << e.what() << "; reduce n, the horizon or the box radius\n";
        return kExitInvalid;
    } catch (const std::exception& e) {
        std::cerr << "dpre: internal error: " << e.what() << '\n';
        return 1;
    }
    return kExitInvalid;
}
