// oracle.hpp
//
// Lower-bound / optimal-allocation solver: maximize rho_sigma over the
// simplex by entropic mirror ascent, plus the characteristic-time and
// feasibility quantities built on top of it.
//
// The objective is concave and piecewise smooth; a valid supergradient
// comes from the envelope form: with (gbar*, hbar*) the active challenger
// of rho at q and U_x its confusing set per task,
//
//   d rho / d q(x,g,h) = kl(mu(x,g,h), m(x,q,U_x))   if (g,h) in U_x,
//                        0                            otherwise,
//
// because m is the weighted mean, i.e. the inner minimizer, so its own
// q-derivative drops out. The sigma term contributes -q/sigma everywhere.
//
// Mirror ascent with entropic projection: q <- q * exp(step_k * grad),
// step_k = (1/L) sqrt(2 ln(XGH) / k), L >= max pairwise kl of the means.
// The best iterate by objective value is returned, matching the
// max_{1<=s<=k} form of the classical guarantee.
#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mtbai/divergence.hpp"
#include "mtbai/errors.hpp"
#include "mtbai/model.hpp"
#include "mtbai/transport.hpp"

namespace mtbai {

struct SolverOptions {
    double sigma = 1e5;            // strong-concavity regularizer of (P_sigma)
    int max_iters_cold = 3000;     // budget from a uniform start
    int max_iters_warm = 300;      // budget when warm-started
    double tol = 1e-7;             // relative best-objective change
    double grad_clip = 6.0;        // symmetric gradient clamp
    double warmstart_mix = 0.5;    // convex mix of warm start and uniform
    double lipschitz_floor = 1e-3; // lower bound on L for near-flat instances
    ClampPolicy clamp{};

    void validate() const {
        if (!(sigma > 0.0)) throw usage_error("sigma must be positive");
        if (max_iters_cold < 1 || max_iters_warm < 1)
            throw usage_error("iteration budgets must be >= 1");
        if (!(tol > 0.0)) throw usage_error("tol must be positive");
        if (!(grad_clip > 0.0)) throw usage_error("grad_clip must be positive");
        if (!(warmstart_mix >= 0.0 && warmstart_mix <= 1.0))
            throw usage_error("warmstart_mix must lie in [0,1]");
        if (!(lipschitz_floor > 0.0)) throw usage_error("lipschitz_floor must be positive");
    }
};

struct OracleSolution {
    Allocation q_star;
    double rho_star = 0.0;  // rho_sigma at q_star
    double c_sigma = 0.0;   // 1 / rho_star when rho_star > 0
    int iterations = 0;
    bool converged = false;
    std::vector<double> best_objective_history; // filled on request
};

// L >= max over ordered pairs of kl(mu_i, mu_j), floored for flat instances.
inline double lipschitz_constant(const ModelTensor& model, const SolverOptions& opts) {
    double L = 0.0;
    for (double a : model.means())
        for (double b : model.means())
            L = std::max(L, bern_kl(a, b, opts.clamp));
    return std::max(L, opts.lipschitz_floor);
}

namespace detail {

// kl(mu, m) over the active confusing set of one task, written in place.
inline void accumulate_envelope_terms(const ModelTensor& model, int x, GhPair ch,
                                      const Allocation& q, const ClampPolicy& clamp,
                                      std::vector<double>& grad) {
    const int n = model.arms_per_task();
    unsigned char stack_mem[kStackArms];
    std::vector<unsigned char> heap_mem;
    unsigned char* mem = stack_mem;
    if (n > kStackArms) {
        heap_mem.resize(n);
        mem = heap_mem.data();
    }
    double m = 0.0, total = 0.0;
    if (!fill_membership(model, x, ch, q, mem, &m, &total)) return;
    const size_t base = model.flat(x, 0, 0);
    const double* mu = model.means().data() + base;
    for (int a = 0; a < n; ++a)
        if (mem[a]) grad[base + a] = bern_kl(mu[a], m, clamp);
}

} // namespace detail

// Envelope supergradient of rho_sigma at a strictly positive normalized q.
// Entries are clamped to [-grad_clip, +grad_clip].
inline std::vector<double> supergradient(const ModelTensor& model, const Allocation& q,
                                         const SolverOptions& opts = {}) {
    opts.validate();
    const RhoResult active = rho(model, q, opts.clamp);
    std::vector<double> grad(q.weights.size(), 0.0);
    for (int x = 0; x < model.tasks(); ++x)
        detail::accumulate_envelope_terms(model, x, {active.gbar, active.hbar[x]}, q, opts.clamp,
                                          grad);
    for (size_t i = 0; i < grad.size(); ++i) {
        grad[i] -= q.weights[i] / opts.sigma;
        grad[i] = std::clamp(grad[i], -opts.grad_clip, opts.grad_clip);
    }
    return grad;
}

// Entropic mirror ascent for max_q rho_sigma(q, mu). Returns the best
// iterate; `converged` means the relative best-objective change stayed
// below tol for 25 consecutive iterations.
inline OracleSolution solve_allocation(const ModelTensor& model, const SolverOptions& opts = {},
                                       const std::optional<Allocation>& warm_start = std::nullopt,
                                       bool record_history = false) {
    opts.validate();
    const auto verdict = membership_check(model);
    if (!verdict.in_class)
        throw structure_error("solve_allocation requires a model inside the structured class");

    const int n = model.arms();
    std::vector<double> w(n, 1.0 / n);
    if (warm_start) {
        const Allocation warm = warm_start->normalized ? *warm_start : warm_start->normalized_copy();
        for (int i = 0; i < n; ++i)
            w[i] = opts.warmstart_mix * warm.weights[i] + (1.0 - opts.warmstart_mix) / n;
    }
    const int max_iters = warm_start ? opts.max_iters_warm : opts.max_iters_cold;
    const double L = lipschitz_constant(model, opts);
    const double step_base = std::sqrt(2.0 * std::log(static_cast<double>(n))) / L;

    constexpr int kStallWindow = 25;
    constexpr double kFloor = 1e-12;

    OracleSolution sol;
    double best_v = -std::numeric_limits<double>::infinity();
    std::vector<double> best_w = w;
    int stall = 0;
    int k = 0;
    Allocation q(model.tasks(), model.representations(), model.predictors(), w, false);
    std::vector<double> grad(n), logw(n);

    while (k < max_iters) {
        ++k;
        q.weights = w;
        q.normalized = true;
        const RhoResult active = detail::rho_of(model, q, verdict.best_representation, opts.clamp);
        const double v = active.value - q.l2_norm_sq() / (2.0 * opts.sigma);
        if (!std::isfinite(v))
            throw numerical_error("solve_allocation: objective became non-finite at iteration " +
                                  std::to_string(k));
        if (v > best_v) {
            const double rel = std::isfinite(best_v)
                                   ? (v - best_v) / std::max(std::abs(best_v), 1e-300)
                                   : std::numeric_limits<double>::infinity();
            stall = rel > opts.tol ? 0 : stall + 1;
            best_v = v;
            best_w = w;
        } else {
            ++stall;
        }
        if (record_history) sol.best_objective_history.push_back(best_v);
        if (stall >= kStallWindow) {
            sol.converged = true;
            break;
        }
        if (k == max_iters) break;

        // gradient at the current iterate, reusing the active challenger
        std::fill(grad.begin(), grad.end(), 0.0);
        for (int x = 0; x < model.tasks(); ++x)
            detail::accumulate_envelope_terms(model, x, {active.gbar, active.hbar[x]}, q,
                                              opts.clamp, grad);
        const double step = step_base / std::sqrt(static_cast<double>(k));
        double wmax = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            double gi = std::clamp(grad[i] - w[i] / opts.sigma, -opts.grad_clip, opts.grad_clip);
            logw[i] = std::log(w[i]) + step * gi;
            wmax = std::max(wmax, logw[i]);
        }
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            w[i] = std::max(std::exp(logw[i] - wmax), kFloor);
            total += w[i];
        }
        for (int i = 0; i < n; ++i) w[i] /= total;
    }

    sol.iterations = k;
    sol.q_star = Allocation(model.tasks(), model.representations(), model.predictors(),
                            std::move(best_w), true);
    sol.rho_star = best_v;
    sol.c_sigma = best_v > 0.0 ? 1.0 / best_v : std::numeric_limits<double>::infinity();
    return sol;
}

// K*_{G,sigma}(mu, delta_g) = C_sigma(mu) * kl(delta_g, 1 - delta_g).
inline double char_time_G(const ModelTensor& model, const SolverOptions& opts, double delta_g) {
    if (!(delta_g > 0.0 && delta_g < 1.0)) throw usage_error("delta_g must lie in (0,1)");
    const double risk = kl_binary_risk(delta_g, opts.clamp);
    if (risk == 0.0) return 0.0;
    return solve_allocation(model, opts).c_sigma * risk;
}

// K*_H(mu, delta_h) = sum_x T*(x, g*) * kl(delta_h, 1 - delta_h), with each
// per-task time solved on the reduced instance over arms mu(x, g*, .).
// H = 1 contributes nothing: there is no predictor to identify.
inline double char_time_H(const ModelTensor& model, const SolverOptions& opts, double delta_h) {
    if (!(delta_h > 0.0 && delta_h < 1.0)) throw usage_error("delta_h must lie in (0,1)");
    const auto verdict = membership_check(model);
    if (!verdict.in_class)
        throw structure_error("char_time_H requires a model inside the structured class");
    if (model.predictors() == 1) return 0.0;
    const double risk = kl_binary_risk(delta_h, opts.clamp);
    if (risk == 0.0) return 0.0;
    double total = 0.0;
    for (int x = 0; x < model.tasks(); ++x) {
        const ModelTensor reduced = reduce_to_predictors(model, x, verdict.best_representation);
        total += solve_allocation(reduced, opts).c_sigma;
    }
    return total * risk;
}

struct FeasibilityReport {
    std::vector<double> cons1_values;  // per task: min_{h != h*_x} f(eta, x, h)
    double cons1_rhs = 0.0;            // kl(delta_h, 1 - delta_h)
    double cons2_value = 0.0;          // min_gbar sum_x min_hbar l(eta, gbar, hbar)
    double cons2_rhs = 0.0;            // kl(delta_g, 1 - delta_g)
    bool feasible = false;
    bool degenerate = false;           // some constraint evaluated at zero weight

    double cons1_slack() const {
        double worst = std::numeric_limits<double>::infinity();
        for (double v : cons1_values) worst = std::min(worst, v - cons1_rhs);
        return worst;
    }
    double cons2_slack() const { return cons2_value - cons2_rhs; }
};

// Evaluates both lower-bound constraints at an unnormalized budget eta.
inline FeasibilityReport check_feasibility(const ModelTensor& model, const Allocation& eta,
                                           double delta_g, double delta_h,
                                           const ClampPolicy& clamp = {}) {
    if (!(delta_g > 0.0 && delta_g < 1.0) || !(delta_h > 0.0 && delta_h < 1.0))
        throw usage_error("risks must lie in (0,1)");
    const auto verdict = membership_check(model);
    if (!verdict.in_class)
        throw structure_error("check_feasibility requires a model inside the structured class");
    const int gstar = verdict.best_representation;

    FeasibilityReport rep;
    rep.cons1_rhs = kl_binary_risk(delta_h, clamp);
    rep.cons2_rhs = kl_binary_risk(delta_g, clamp);

    for (int x = 0; x < model.tasks(); ++x) {
        const int hstar = verdict.best_predictors[x];
        double worst = std::numeric_limits<double>::infinity();
        for (int h = 0; h < model.predictors(); ++h) {
            if (h == hstar) continue;
            const double a = eta.at(x, gstar, hstar), b = eta.at(x, gstar, h);
            double f = 0.0;
            if (a + b > 0.0) {
                const double alpha = a / (a + b);
                f = (a + b) * jensen_shannon_alpha(alpha, model.mean(x, gstar, hstar),
                                                   model.mean(x, gstar, h), clamp);
            } else {
                rep.degenerate = true;
            }
            worst = std::min(worst, f);
        }
        rep.cons1_values.push_back(worst); // +inf when H == 1: nothing to learn
    }

    if (model.representations() >= 2) {
        rep.cons2_value = detail::rho_of(model, eta, gstar, clamp).value;
    } else {
        rep.cons2_value = std::numeric_limits<double>::infinity();
    }
    if (eta.total() <= 0.0) rep.degenerate = true;

    rep.feasible = rep.cons2_value >= rep.cons2_rhs;
    for (double v : rep.cons1_values)
        if (!(v >= rep.cons1_rhs)) rep.feasible = false;
    return rep;
}

} // namespace mtbai
