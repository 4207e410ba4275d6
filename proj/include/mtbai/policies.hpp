// policies.hpp
//
// Online algorithms: the two-phase identification procedure (D-tracking +
// Chernoff stopping + decision), the per-task track-and-stop second phase,
// the unstructured track-and-stop baseline, and the threshold calculus.
//
// Phase 2 and the baseline reuse the phase-1 engine through instance
// reduction: predictors of the chosen representation become an X'=1,
// G'=H, H'=1 instance; a flattened task becomes X'=1, G'=G*H, H'=1.
#pragma once
#include <cassert>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mtbai/errors.hpp"
#include "mtbai/model.hpp"
#include "mtbai/oracle.hpp"
#include "mtbai/transport.hpp"

namespace mtbai {

// ---- threshold calculus --------------------------------------------------

// p(u) = u - ln u on [1, inf); inverse by bisection to 1e-12.
inline double p_func(double u) { return u - std::log(u); }

inline double p_inverse(double y) {
    if (!(y >= 1.0)) throw usage_error("p_inverse requires y >= 1");
    double lo = 1.0, hi = 2.0;
    while (p_func(hi) < y) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
        const double mid = 0.5 * (lo + hi);
        (p_func(mid) < y ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline constexpr double zeta2() { return 1.6449340668482264; } // pi^2 / 6

// Two-branch helper, z in [1, e].
inline double p_tilde(double z, double x) {
    if (x >= p_inverse(1.0 / std::log(z))) {
        const double u = p_inverse(x);
        return std::exp(1.0 / u) * u;
    }
    return z * (x - std::log(std::log(z)));
}

// phi(x) = 2 ptilde_{3/2}((p^{-1}(1+x) + ln(2 zeta(2))) / 2)
inline double phi(double x) {
    if (!(x >= 0.0)) throw usage_error("phi requires a nonnegative argument");
    return 2.0 * p_tilde(1.5, (p_inverse(1.0 + x) + std::log(2.0 * zeta2())) / 2.0);
}

// beta_2(delta_G) = K phi(ln((G-1)/delta_G) / K), K = X*G*H.
inline double beta2_osrl(int G, int K, double delta_g) {
    if (G < 2) throw usage_error("beta2_osrl requires G >= 2");
    if (!(delta_g > 0.0 && delta_g < 1.0)) throw usage_error("delta_g must lie in (0,1)");
    return K * phi(std::log((G - 1) / delta_g) / K);
}

// beta_1(t) = 3 sum_{x,g,h} ln(1 + ln N_t(x,g,h)); unpulled arms contribute 0.
inline double beta1_osrl(const CountTensor& counts) {
    double s = 0.0;
    for (auto n : counts.pulls())
        if (n >= 1) s += std::log(1.0 + std::log(static_cast<double>(n)));
    return 3.0 * s;
}

inline double beta_osrl(const CountTensor& counts, double delta_g) {
    return beta1_osrl(counts) +
           beta2_osrl(counts.representations(), counts.arms(), delta_g);
}

// beta_t(delta) = ln(2 t (A-1) / delta) for an A-armed reduced instance.
inline double beta_simple(std::int64_t t, int arms, double delta) {
    if (t < 1) throw usage_error("beta_simple requires t >= 1");
    if (arms < 2) throw usage_error("beta_simple requires at least 2 arms");
    return std::log(2.0 * static_cast<double>(t) * (arms - 1) / delta);
}

struct ThresholdParams {
    enum class Variant { osrl, simple };
    Variant variant = Variant::osrl;
    int arms = 0; // arm count A for the simple variant

    static ThresholdParams osrl() { return {Variant::osrl, 0}; }
    static ThresholdParams simple(int arms) { return {Variant::simple, arms}; }
};

// ---- phase-1 engine --------------------------------------------------------

struct Phase1Config {
    double delta_g = 0.1;
    double delta_h = 0.1;
    SolverOptions solver{};
    int recompute_period = 0; // 0 -> X*G*H of the instance
    ThresholdParams thresholds = ThresholdParams::osrl();
    bool record_series = false;
    std::int64_t max_rounds = 50'000'000;
};

// One point per oracle recomputation; differences are against the previous
// recomputation.
struct OracleTrace {
    std::int64_t t = 0;
    double mu_hat_l2 = 0.0;
    double dmu_l2_normalized = 0.0;   // ||mu_hat_t - mu_hat_prev||_2 / sqrt(XGH)
    double c_sigma_inv = 0.0;          // rho_sigma^*(mu_hat_t)
    double q_change_l2_normalized = 0.0;
    double q_change_linf = 0.0;
};

struct StopCheck {
    bool stop = false;
    double psi = 0.0;
    double beta = 0.0;
};

class Phase1State {
public:
    Phase1State(const ModelTensor& model, Phase1Config config, std::uint64_t seed)
        : counts_(model), config_(std::move(config)), rng_(seed) {
        if (config_.recompute_period <= 0) config_.recompute_period = model.arms();
        beta2_cache_ = config_.thresholds.variant == ThresholdParams::Variant::osrl
                           ? beta2_osrl(model.representations(), model.arms(), config_.delta_g)
                           : 0.0;
    }

    CountTensor& counts() { return counts_; }
    const CountTensor& counts() const { return counts_; }
    const Phase1Config& config() const { return config_; }
    Rng& rng() { return rng_; }
    bool stopped() const { return stopped_; }
    void mark_stopped() { stopped_ = true; }
    std::int64_t tracking_violations() const { return tracking_violations_; }
    std::int64_t oracle_recomputes() const { return oracle_recomputes_; }
    const std::vector<OracleTrace>& series() const { return series_; }
    const std::optional<Allocation>& cached_q() const { return cached_q_; }

    friend ArmIndex phase1_step(Phase1State& state, const ModelTensor& model);
    friend StopCheck phase1_should_stop(Phase1State& state);

private:
    CountTensor counts_;
    Phase1Config config_;
    Rng rng_;
    std::optional<Allocation> cached_q_;
    std::int64_t cached_round_ = -1;
    std::vector<double> prev_mu_;     // empirical means at the previous recompute
    double beta2_cache_ = 0.0;
    bool stopped_ = false;
    std::int64_t tracking_violations_ = 0;
    std::int64_t oracle_recomputes_ = 0;
    std::vector<OracleTrace> series_;
};

// D-tracking action: forced exploration of the least-sampled triple whenever
// some count is under sqrt(t) - K/2 or the empirical model leaves the class;
// otherwise argmax of t q*(x,g,h) - N(x,g,h). Ties break lexicographically.
inline ArmIndex phase1_step(Phase1State& state, const ModelTensor& model) {
    const CountTensor& counts = state.counts_;
    const int K = model.arms();
    const auto t = counts.round();
    const double td = static_cast<double>(t);

    // tracking lower bound N > (sqrt(t) - K/2)_+ - 1, checked every round
    const double bound = std::max(std::sqrt(td) - K / 2.0, 0.0) - 1.0;
    for (auto n : counts.pulls())
        if (!(static_cast<double>(n) > bound)) {
            ++state.tracking_violations_;
            assert(false && "tracking bound violated");
            break;
        }

    const ModelTensor mu_hat = counts.empirical_model();
    const auto verdict = membership_check(mu_hat);

    bool undersampled = false;
    const double forced_thr = std::sqrt(td) - K / 2.0;
    for (auto n : counts.pulls())
        if (static_cast<double>(n) < forced_thr) { undersampled = true; break; }

    const int X = model.tasks(), G = model.representations(), H = model.predictors();
    if (undersampled || !verdict.in_class) {
        ArmIndex best{0, 0, 0};
        std::int64_t least = counts.pulls(0, 0, 0);
        for (int x = 0; x < X; ++x)
            for (int g = 0; g < G; ++g)
                for (int h = 0; h < H; ++h)
                    if (counts.pulls(x, g, h) < least) {
                        least = counts.pulls(x, g, h);
                        best = {x, g, h};
                    }
        return best;
    }

    if (!state.cached_q_ ||
        (t % state.config_.recompute_period == 0 && state.cached_round_ != t)) {
        OracleSolution sol = solve_allocation(mu_hat, state.config_.solver, state.cached_q_);
        ++state.oracle_recomputes_;
        if (state.config_.record_series) {
            OracleTrace tr;
            tr.t = t;
            tr.c_sigma_inv = sol.rho_star;
            const double sqrt_n = std::sqrt(static_cast<double>(K));
            double l2 = 0.0, dl2 = 0.0;
            for (int i = 0; i < K; ++i) {
                const double m = mu_hat.means()[i];
                l2 += m * m;
                if (!state.prev_mu_.empty()) {
                    const double d = m - state.prev_mu_[i];
                    dl2 += d * d;
                }
            }
            tr.mu_hat_l2 = std::sqrt(l2);
            tr.dmu_l2_normalized = state.prev_mu_.empty() ? 0.0 : std::sqrt(dl2) / sqrt_n;
            if (state.cached_q_) {
                double qdl2 = 0.0, qdinf = 0.0;
                for (int i = 0; i < K; ++i) {
                    const double d = sol.q_star.weights[i] - state.cached_q_->weights[i];
                    qdl2 += d * d;
                    qdinf = std::max(qdinf, std::abs(d));
                }
                tr.q_change_l2_normalized = std::sqrt(qdl2) / sqrt_n;
                tr.q_change_linf = qdinf;
            }
            state.series_.push_back(tr);
        }
        state.prev_mu_ = mu_hat.means();
        state.cached_q_ = std::move(sol.q_star);
        state.cached_round_ = t;
    }

    const Allocation& q = *state.cached_q_;
    ArmIndex best{0, 0, 0};
    double best_score = -std::numeric_limits<double>::infinity();
    for (int x = 0; x < X; ++x)
        for (int g = 0; g < G; ++g)
            for (int h = 0; h < H; ++h) {
                const double score = td * q.at(x, g, h) -
                                     static_cast<double>(counts.pulls(x, g, h));
                if (score > best_score) {
                    best_score = score;
                    best = {x, g, h};
                }
            }
    return best;
}

// Chernoff stopping check: false while the empirical model sits outside the
// class; otherwise compares Psi_t at the empirical best representation
// (where the max over candidates is attained) against the threshold.
inline StopCheck phase1_should_stop(Phase1State& state) {
    const CountTensor& counts = state.counts_;
    StopCheck out;
    const auto t = counts.round();
    if (t < 1) return out;
    const ModelTensor mu_hat = counts.empirical_model();
    const auto verdict = membership_check(mu_hat);
    if (state.config_.thresholds.variant == ThresholdParams::Variant::osrl)
        out.beta = beta1_osrl(counts) + state.beta2_cache_;
    else
        out.beta = beta_simple(t, state.config_.thresholds.arms, state.config_.delta_g);
    if (!verdict.in_class) return out;
    const Allocation eta = Allocation::from_counts(counts);
    out.psi = detail::rho_of(mu_hat, eta, verdict.best_representation,
                             state.config_.solver.clamp)
                  .value;
    out.stop = out.psi > out.beta;
    if (out.stop) state.stopped_ = true;
    return out;
}

// Decision rule: the common empirically-best representation at stopping.
inline int phase1_decide(const Phase1State& state) {
    if (!state.stopped())
        throw usage_error("phase1_decide called before the stopping condition was met");
    const auto verdict = membership_check(state.counts().empirical_model());
    if (!verdict.in_class)
        throw structure_error("empirical model left the class after stopping");
    return verdict.best_representation;
}

// Full sampling loop on one instance (full model for phase 1, reduced
// instance for phase 2 / the baseline). Returns the state at stopping.
inline Phase1State run_tracking_loop(const ModelTensor& model, const Phase1Config& config,
                                     std::uint64_t seed) {
    Phase1State state(model, config, seed);
    while (true) {
        if (phase1_should_stop(state).stop) break;
        if (state.counts().round() >= config.max_rounds)
            throw numerical_error("tracking loop exceeded max_rounds = " +
                                  std::to_string(config.max_rounds));
        const ArmIndex a = phase1_step(state, model);
        const int r = sample_reward(model, a, state.rng());
        state.counts().update(a, r);
    }
    return state;
}

// Same loop driven by an external reward stream (used by phase 2 and the
// baseline so one replicate consumes a single RNG stream).
inline Phase1State run_tracking_loop(const ModelTensor& model, const Phase1Config& config,
                                     Rng& rng) {
    Phase1State state(model, config, 0);
    while (true) {
        if (phase1_should_stop(state).stop) break;
        if (state.counts().round() >= config.max_rounds)
            throw numerical_error("tracking loop exceeded max_rounds = " +
                                  std::to_string(config.max_rounds));
        const ArmIndex a = phase1_step(state, model);
        const int r = sample_reward(model, a, rng);
        state.counts().update(a, r);
    }
    return state;
}

// ---- phase 2 and the baseline ---------------------------------------------

struct Phase2Result {
    std::vector<int> h_hat;            // empirical best predictor per task
    std::int64_t tau_h = 0;            // summed per-task stopping times
    std::vector<std::int64_t> per_task_tau;
    std::int64_t tracking_violations = 0;
};

// Per-task track-and-stop on the arms (g_hat, h), h = 1..H, with the simple
// threshold ln(2 t (H-1) / delta_h). H = 1 returns immediately.
inline Phase2Result phase2_run(const ModelTensor& model, int g_hat, double delta_h,
                               const SolverOptions& opts, Rng& rng) {
    if (g_hat < 0 || g_hat >= model.representations())
        throw usage_error("phase2_run: representation out of range");
    Phase2Result out;
    const int H = model.predictors();
    if (H == 1) {
        out.h_hat.assign(model.tasks(), 0);
        out.per_task_tau.assign(model.tasks(), 0);
        return out;
    }
    for (int x = 0; x < model.tasks(); ++x) {
        const ModelTensor reduced = reduce_to_predictors(model, x, g_hat);
        Phase1Config cfg;
        cfg.delta_g = delta_h; // the reduced engine reads its risk from delta_g
        cfg.solver = opts;
        cfg.thresholds = ThresholdParams::simple(H);
        Phase1State st = run_tracking_loop(reduced, cfg, rng);
        out.h_hat.push_back(phase1_decide(st));
        out.per_task_tau.push_back(st.counts().round());
        out.tau_h += st.counts().round();
        out.tracking_violations += st.tracking_violations();
    }
    return out;
}

enum class TasTaskMode { one_random, all_sum };

struct TasResult {
    std::vector<int> tasks;                 // tasks actually run
    std::vector<GhPair> best_pairs;         // identified (g, h) per run task
    std::int64_t tau = 0;                   // summed stopping times
    std::vector<std::int64_t> per_task_tau;
    std::vector<std::int64_t> counts;       // pulls mapped back onto (x,g,h)
    std::int64_t tracking_violations = 0;
};

// Unstructured baseline: flatten one task's G*H arms and run track-and-stop
// with threshold ln(2 t (GH-1) / delta).
inline TasResult tas_baseline(const ModelTensor& model, double delta, TasTaskMode mode,
                              const SolverOptions& opts, Rng& rng) {
    TasResult out;
    std::vector<int> tasks;
    if (mode == TasTaskMode::one_random) {
        const int x = std::min(model.tasks() - 1,
                               static_cast<int>(canonical_u01(rng) * model.tasks()));
        tasks.push_back(x);
    } else {
        for (int x = 0; x < model.tasks(); ++x) tasks.push_back(x);
    }
    const int A = model.arms_per_task();
    out.counts.assign(model.arms(), 0);
    for (int x : tasks) {
        const ModelTensor flat = flatten_task(model, x);
        Phase1Config cfg;
        cfg.delta_g = delta;
        cfg.solver = opts;
        cfg.thresholds = ThresholdParams::simple(A);
        Phase1State st = run_tracking_loop(flat, cfg, rng);
        const int arm = phase1_decide(st);
        out.tasks.push_back(x);
        out.best_pairs.emplace_back(arm / model.predictors(), arm % model.predictors());
        out.per_task_tau.push_back(st.counts().round());
        out.tau += st.counts().round();
        out.tracking_violations += st.tracking_violations();
        for (int a = 0; a < A; ++a)
            out.counts[model.flat(x, a / model.predictors(), a % model.predictors())] +=
                st.counts().pulls(0, a, 0);
    }
    return out;
}

} // namespace mtbai
