// transport.hpp
//
// Confusing-set machinery behind the sample-complexity lower bound and the
// GLRT stopping statistic.
//
// For a task x and a challenger pair (gbar, hbar), the cheapest alternative
// model making the challenger optimal moves every arm of the set U to their
// weighted mean m and leaves the rest untouched. U is defined pointwise:
//
//   (g',h') in U  iff  mu(x,g',h') >= m(x, eta, N_{g',h'}),
//   N_{g',h'} = { arms with mean >= mu(x,g',h') } u { (gbar,hbar) },
//
// with (gbar,hbar) always a member. Ties use the inclusive ">=" convention,
// which makes this direct definition agree with the recursive-enlargement
// procedure and with exhaustive fixed-point search.
//
// transport_cost is the resulting KL budget sum_{U} eta kl(mu, m(U)); it is
// positively homogeneous of degree 1 in eta and equals the constrained
// infimum over alternative models exactly (checked against 1-D convex
// minimization in the tests). Zero-weight members cost nothing; if every
// member has zero weight the infimum is 0 and the weighted mean undefined.
#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mtbai/divergence.hpp"
#include "mtbai/errors.hpp"
#include "mtbai/model.hpp"

namespace mtbai {

// Nonnegative weights over (x,g,h): a simplex point q or an unnormalized
// budget eta (e.g. pull counts).
struct Allocation {
    int X = 0, G = 0, H = 0;
    std::vector<double> weights;
    bool normalized = false;

    Allocation() = default;
    Allocation(int X_, int G_, int H_, std::vector<double> w, bool norm = false)
        : X(X_), G(G_), H(H_), weights(std::move(w)), normalized(norm) {
        if (weights.size() != static_cast<size_t>(X) * G * H)
            throw usage_error("Allocation size does not match X*G*H");
        double total = 0.0;
        for (double v : weights) {
            if (!(v >= 0.0)) throw usage_error("Allocation weights must be nonnegative");
            total += v;
        }
        if (normalized && std::abs(total - 1.0) > 1e-9)
            throw usage_error("Allocation flagged normalized but sums to " + std::to_string(total));
    }

    static Allocation uniform(const ModelTensor& m) {
        return Allocation(m.tasks(), m.representations(), m.predictors(),
                          std::vector<double>(m.arms(), 1.0 / m.arms()), true);
    }
    static Allocation zeros(const ModelTensor& m) {
        return Allocation(m.tasks(), m.representations(), m.predictors(),
                          std::vector<double>(m.arms(), 0.0), false);
    }
    static Allocation from_counts(const CountTensor& c) {
        std::vector<double> w(c.pulls().begin(), c.pulls().end());
        return Allocation(c.tasks(), c.representations(), c.predictors(), std::move(w), false);
    }

    size_t flat(int x, int g, int h) const { return (static_cast<size_t>(x) * G + g) * H + h; }
    double at(int x, int g, int h) const { return weights[flat(x, g, h)]; }
    double& at(int x, int g, int h) { return weights[flat(x, g, h)]; }

    double total() const {
        double s = 0.0;
        for (double v : weights) s += v;
        return s;
    }
    double l2_norm_sq() const {
        double s = 0.0;
        for (double v : weights) s += v * v;
        return s;
    }
    Allocation normalized_copy() const {
        const double s = total();
        if (s <= 0.0) throw degenerate_weight_error("cannot normalize an all-zero allocation");
        Allocation out = *this;
        for (double& v : out.weights) v /= s;
        out.normalized = true;
        return out;
    }
};

using GhPair = std::pair<int, int>; // (g, h) within one task

struct ConfusingSet {
    int task = 0;
    GhPair challenger{};
    std::vector<GhPair> members;   // ascending (g, h), includes challenger and (g*,h*_x)
    double weighted_mean = 0.0;    // m(x, eta, members)
};

namespace detail {

// Shared evaluator for confusing_set / transport_cost / gradients.
struct TransportEval {
    std::vector<GhPair> members;
    double total_weight = 0.0;
    double m = 0.0;          // valid iff total_weight > 0
    double cost = 0.0;       // exact inner infimum (0 when total_weight == 0)
};

// Fills mem[a] for the task's flat arm index a = g*H + h and returns the
// weighted mean over members, accumulating nothing else. mem must hold
// arms_per_task() entries.
inline bool fill_membership(const ModelTensor& model, int x, GhPair ch, const Allocation& eta,
                            unsigned char* mem, double* m_out, double* total_out) {
    const int G = model.representations(), H = model.predictors();
    if (x < 0 || x >= model.tasks()) throw usage_error("task index out of range");
    if (ch.first < 0 || ch.first >= G || ch.second < 0 || ch.second >= H)
        throw usage_error("challenger index out of range");
    const size_t base = model.flat(x, 0, 0);
    const double* mu = model.means().data() + base;
    const double* w = eta.weights.data() + base;
    const int n = G * H;
    const int chi = ch.first * H + ch.second;

    for (int a = 0; a < n; ++a) {
        if (a == chi) { mem[a] = 1; continue; }
        const double cand = mu[a];
        // N set: arms at least as good as the candidate, plus the challenger.
        double sw = 0.0, swm = 0.0;
        for (int b = 0; b < n; ++b)
            if (mu[b] >= cand || b == chi) {
                sw += w[b];
                swm += w[b] * mu[b];
            }
        mem[a] = sw > 0.0 && cand >= swm / sw;
    }
    double total = 0.0, swm = 0.0;
    for (int a = 0; a < n; ++a)
        if (mem[a]) {
            total += w[a];
            swm += w[a] * mu[a];
        }
    *total_out = total;
    *m_out = total > 0.0 ? swm / total : 0.0;
    return total > 0.0;
}

constexpr int kStackArms = 256;

// Allocation-free cost evaluation for the hot loops.
inline double transport_cost_only(const ModelTensor& model, int x, GhPair ch,
                                  const Allocation& eta, const ClampPolicy& clamp = {}) {
    const int n = model.arms_per_task();
    unsigned char stack_mem[kStackArms];
    std::vector<unsigned char> heap_mem;
    unsigned char* mem = stack_mem;
    if (n > kStackArms) {
        heap_mem.resize(n);
        mem = heap_mem.data();
    }
    double m = 0.0, total = 0.0;
    if (!fill_membership(model, x, ch, eta, mem, &m, &total))
        return 0.0; // all confused arms unobserved: the alternative is free
    const size_t base = model.flat(x, 0, 0);
    const double* mu = model.means().data() + base;
    const double* w = eta.weights.data() + base;
    double cost = 0.0;
    for (int a = 0; a < n; ++a)
        if (mem[a] && w[a] > 0.0) cost += w[a] * bern_kl(mu[a], m, clamp);
    return cost;
}

inline TransportEval eval_transport(const ModelTensor& model, int x, GhPair ch,
                                    const Allocation& eta, const ClampPolicy& clamp = {}) {
    const int H = model.predictors();
    const int n = model.arms_per_task();
    std::vector<unsigned char> mem(n);
    TransportEval out;
    fill_membership(model, x, ch, eta, mem.data(), &out.m, &out.total_weight);
    const size_t base = model.flat(x, 0, 0);
    const double* mu = model.means().data() + base;
    const double* w = eta.weights.data() + base;
    for (int a = 0; a < n; ++a) {
        if (!mem[a]) continue;
        out.members.emplace_back(a / H, a % H);
        if (out.total_weight > 0.0 && w[a] > 0.0)
            out.cost += w[a] * bern_kl(mu[a], out.m, clamp);
    }
    return out;
}

} // namespace detail

// Weighted average reward over a subset of one task's arms.
inline double weighted_mean(const ModelTensor& model, int x, const Allocation& alloc,
                            const std::vector<GhPair>& members) {
    if (members.empty()) throw usage_error("weighted_mean over an empty member set");
    double sw = 0.0, swm = 0.0;
    for (const auto& [g, h] : members) {
        if (g < 0 || g >= model.representations() || h < 0 || h >= model.predictors())
            throw usage_error("weighted_mean member out of range");
        const double w = alloc.at(x, g, h);
        sw += w;
        swm += w * model.mean(x, g, h);
    }
    if (sw <= 0.0) throw degenerate_weight_error("weighted_mean over zero total weight");
    return swm / sw;
}

inline ConfusingSet confusing_set(const ModelTensor& model, int x, GhPair challenger,
                                  const Allocation& alloc, const ClampPolicy& clamp = {}) {
    auto ev = detail::eval_transport(model, x, challenger, alloc, clamp);
    if (ev.total_weight <= 0.0)
        throw degenerate_weight_error(
            "confusing set for task " + std::to_string(x) + " carries zero total weight");
    ConfusingSet cs;
    cs.task = x;
    cs.challenger = challenger;
    cs.members = std::move(ev.members);
    cs.weighted_mean = ev.m;
    return cs;
}

// KL budget to move the empirical model into the cheapest alternative where
// the challenger pair is optimal in task x.
inline double transport_cost(const ModelTensor& model, int x, GhPair challenger,
                             const Allocation& alloc, const ClampPolicy& clamp = {}) {
    return detail::transport_cost_only(model, x, challenger, alloc, clamp);
}

struct RhoResult {
    double value = 0.0;
    int gbar = -1;                // active challenger representation
    std::vector<int> hbar;        // active challenger predictor per task
};

namespace detail {

// min over gbar != gstar of sum_x min over hbar of the transport cost, with
// lexicographic tie-breaking (smallest gbar, then smallest hbar per task).
inline RhoResult rho_of(const ModelTensor& model, const Allocation& eta, int gstar,
                        const ClampPolicy& clamp = {}) {
    const int G = model.representations(), H = model.predictors();
    if (G < 2) throw usage_error("rho requires at least two representations");
    RhoResult best;
    best.value = std::numeric_limits<double>::infinity();
    for (int gbar = 0; gbar < G; ++gbar) {
        if (gbar == gstar) continue;
        double total = 0.0;
        std::vector<int> hvec(model.tasks(), 0);
        for (int x = 0; x < model.tasks(); ++x) {
            double cbest = std::numeric_limits<double>::infinity();
            for (int hbar = 0; hbar < H; ++hbar) {
                const double c = transport_cost_only(model, x, {gbar, hbar}, eta, clamp);
                if (c < cbest) { cbest = c; hvec[x] = hbar; }
            }
            total += cbest;
        }
        if (total < best.value) {
            best.value = total;
            best.gbar = gbar;
            best.hbar = std::move(hvec);
        }
    }
    return best;
}

} // namespace detail

// rho(q, mu) for a model in M and a normalized allocation.
inline RhoResult rho(const ModelTensor& model, const Allocation& q, const ClampPolicy& clamp = {}) {
    const auto verdict = membership_check(model);
    if (!verdict.in_class)
        throw structure_error("rho is undefined outside the structured class");
    if (!q.normalized)
        throw usage_error("rho expects a normalized allocation");
    return detail::rho_of(model, q, verdict.best_representation, clamp);
}

// rho_sigma(q, mu) = rho(q, mu) - ||q||_2^2 / (2 sigma).
inline double rho_sigma(const ModelTensor& model, const Allocation& q, double sigma,
                        const ClampPolicy& clamp = {}) {
    if (!(sigma > 0.0)) throw usage_error("sigma must be positive");
    return rho(model, q, clamp).value - q.l2_norm_sq() / (2.0 * sigma);
}

// Chernoff GLRT statistic Psi_t(g_tilde) built from the empirical model and
// the raw counts; for g_tilde = empirical best representation it equals
// t * rho(N_t / t, mu_hat_t).
inline double glrt_statistic(const CountTensor& counts, int candidate_g,
                             const ClampPolicy& clamp = {}) {
    const ModelTensor mu_hat = counts.empirical_model();
    if (candidate_g < 0 || candidate_g >= mu_hat.representations())
        throw usage_error("candidate representation out of range");
    if (!membership_check(mu_hat).in_class)
        throw structure_error("GLRT statistic undefined: empirical model outside the class");
    const Allocation eta = Allocation::from_counts(counts);
    return detail::rho_of(mu_hat, eta, candidate_g, clamp).value;
}

} // namespace mtbai
