// divergence.hpp
//
// Scalar information-theoretic kernels used everywhere else.
//
// bern_kl(a,b) = a ln(a/b) + (1-a) ln((1-a)/(1-b)) with the conventions
// 0 ln 0 = 0 and the *second* argument clamped into [eps, 1-eps]. The first
// argument is an empirical mean and is never clamped, so exact zeros stay
// exact while kl(mu_hat, .) remains finite when an alternative touches the
// boundary.
#pragma once
#include <cmath>
#include <string>

#include "mtbai/errors.hpp"

namespace mtbai {

// Clamp applied to the second (hypothesized) KL argument only.
struct ClampPolicy {
    double epsilon = 1e-12; // must satisfy 0 < epsilon < 0.5

    double clamp(double b) const {
        if (b < epsilon) return epsilon;
        if (b > 1.0 - epsilon) return 1.0 - epsilon;
        return b;
    }
};

namespace detail {
inline void check_mean(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0))
        throw usage_error(std::string(name) + " must lie in [0,1], got " + std::to_string(v));
}
} // namespace detail

// KL divergence between Bernoulli(a) and Bernoulli(b).
inline double bern_kl(double a, double b, const ClampPolicy& clamp = {}) {
    detail::check_mean(a, "bern_kl first argument");
    detail::check_mean(b, "bern_kl second argument");
    const double bc = clamp.clamp(b);
    double v = 0.0;
    if (a > 0.0) v += a * std::log(a / bc);
    if (a < 1.0) v += (1.0 - a) * std::log((1.0 - a) / (1.0 - bc));
    return v < 0.0 ? 0.0 : v; // tiny negatives from rounding at a == b
}

// I_alpha(m1, m2) = alpha kl(m1, d) + (1-alpha) kl(m2, d), d = alpha m1 + (1-alpha) m2.
// Generalized Jensen-Shannon divergence.
inline double jensen_shannon_alpha(double alpha, double m1, double m2,
                                   const ClampPolicy& clamp = {}) {
    detail::check_mean(alpha, "jensen_shannon_alpha weight");
    detail::check_mean(m1, "jensen_shannon_alpha m1");
    detail::check_mean(m2, "jensen_shannon_alpha m2");
    const double d = alpha * m1 + (1.0 - alpha) * m2;
    double v = 0.0;
    if (alpha > 0.0) v += alpha * bern_kl(m1, d, clamp);
    if (alpha < 1.0) v += (1.0 - alpha) * bern_kl(m2, d, clamp);
    return v;
}

// kl(d, 1-d), the risk term of the lower-bound constraints.
inline double kl_binary_risk(double d, const ClampPolicy& clamp = {}) {
    if (!(d > 0.0 && d < 1.0))
        throw usage_error("kl_binary_risk requires d in (0,1), got " + std::to_string(d));
    return bern_kl(d, 1.0 - d, clamp);
}

} // namespace mtbai
