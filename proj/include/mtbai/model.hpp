// model.hpp
//
// Bandit-instance representation: the X x G x H grid of Bernoulli means,
// membership in the structured class (one representation strictly dominant
// in every task), reward sampling, and pull-count bookkeeping.
#pragma once
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "mtbai/errors.hpp"

namespace mtbai {

using Rng = std::mt19937_64;

// Uniform double in [0,1) from the top 53 bits; keeps reward draws
// reproducible per (engine, seed) without touching std distributions.
inline double canonical_u01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct ArmIndex {
    int x = 0;
    int g = 0;
    int h = 0;
    bool operator==(const ArmIndex&) const = default;
};

// X tasks, G representations, H predictors; means indexed [x][g][h].
class ModelTensor {
public:
    ModelTensor(int X, int G, int H, std::vector<double> means)
        : X_(X), G_(G), H_(H), means_(std::move(means)) {
        if (X_ < 1 || G_ < 1 || H_ < 1)
            throw usage_error("ModelTensor dimensions must be >= 1");
        if (means_.size() != static_cast<size_t>(X_) * G_ * H_)
            throw usage_error("ModelTensor means size does not match X*G*H");
        for (double m : means_)
            if (!(m >= 0.0 && m <= 1.0))
                throw usage_error("ModelTensor mean outside [0,1]: " + std::to_string(m));
    }

    int tasks() const { return X_; }
    int representations() const { return G_; }
    int predictors() const { return H_; }
    int arms() const { return X_ * G_ * H_; }          // total (x,g,h) triples
    int arms_per_task() const { return G_ * H_; }

    size_t flat(int x, int g, int h) const {
        return (static_cast<size_t>(x) * G_ + g) * H_ + h;
    }
    double mean(int x, int g, int h) const { return means_[flat(x, g, h)]; }
    const std::vector<double>& means() const { return means_; }

    void check_arm(const ArmIndex& a) const {
        if (a.x < 0 || a.x >= X_ || a.g < 0 || a.g >= G_ || a.h < 0 || a.h >= H_)
            throw usage_error("arm index out of range");
    }

private:
    int X_, G_, H_;
    std::vector<double> means_;
};

struct StructuredVerdict {
    bool in_class = false;
    int best_representation = -1;        // g*, valid iff in_class
    std::vector<int> best_predictors;    // h*_x per task, valid iff in_class
};

// Membership in M: a unique strict per-task argmax exists and all tasks
// agree on its representation. Any tie makes the verdict negative.
inline StructuredVerdict membership_check(const ModelTensor& model) {
    StructuredVerdict v;
    v.best_predictors.assign(model.tasks(), -1);
    int gstar = -1;
    for (int x = 0; x < model.tasks(); ++x) {
        int bg = 0, bh = 0;
        double best = -1.0;
        bool tie = false;
        for (int g = 0; g < model.representations(); ++g)
            for (int h = 0; h < model.predictors(); ++h) {
                const double m = model.mean(x, g, h);
                if (m > best) {
                    best = m; bg = g; bh = h; tie = false;
                } else if (m == best) {
                    tie = true;
                }
            }
        if (tie) return {};
        if (x == 0) gstar = bg;
        else if (bg != gstar) return {};
        v.best_predictors[x] = bh;
    }
    v.in_class = true;
    v.best_representation = gstar;
    return v;
}

// One Bernoulli draw from arm (x,g,h).
inline int sample_reward(const ModelTensor& model, const ArmIndex& arm, Rng& rng) {
    model.check_arm(arm);
    return canonical_u01(rng) < model.mean(arm.x, arm.g, arm.h) ? 1 : 0;
}

// Pull counts N_t and running reward sums; sum of pulls equals the round.
class CountTensor {
public:
    CountTensor(int X, int G, int H)
        : X_(X), G_(G), H_(H),
          pulls_(static_cast<size_t>(X) * G * H, 0),
          sums_(static_cast<size_t>(X) * G * H, 0.0) {}

    explicit CountTensor(const ModelTensor& m)
        : CountTensor(m.tasks(), m.representations(), m.predictors()) {}

    int tasks() const { return X_; }
    int representations() const { return G_; }
    int predictors() const { return H_; }
    int arms() const { return X_ * G_ * H_; }
    std::int64_t round() const { return round_; }

    size_t flat(int x, int g, int h) const {
        return (static_cast<size_t>(x) * G_ + g) * H_ + h;
    }
    std::int64_t pulls(int x, int g, int h) const { return pulls_[flat(x, g, h)]; }
    double reward_sum(int x, int g, int h) const { return sums_[flat(x, g, h)]; }
    const std::vector<std::int64_t>& pulls() const { return pulls_; }

    // Empirical mean, 0 for an unpulled arm (matches the N_1, mu_hat_1 <- 0 init).
    double empirical_mean(int x, int g, int h) const {
        const auto n = pulls_[flat(x, g, h)];
        return n > 0 ? sums_[flat(x, g, h)] / static_cast<double>(n) : 0.0;
    }

    ModelTensor empirical_model() const {
        std::vector<double> m(pulls_.size());
        for (int x = 0; x < X_; ++x)
            for (int g = 0; g < G_; ++g)
                for (int h = 0; h < H_; ++h)
                    m[flat(x, g, h)] = empirical_mean(x, g, h);
        return ModelTensor(X_, G_, H_, std::move(m));
    }

    void update(const ArmIndex& a, int reward) {
        if (reward != 0 && reward != 1)
            throw usage_error("reward must be 0 or 1");
        if (a.x < 0 || a.x >= X_ || a.g < 0 || a.g >= G_ || a.h < 0 || a.h >= H_)
            throw usage_error("arm index out of range");
        pulls_[flat(a.x, a.g, a.h)] += 1;
        sums_[flat(a.x, a.g, a.h)] += reward;
        round_ += 1;
    }

private:
    int X_, G_, H_;
    std::vector<std::int64_t> pulls_;
    std::vector<double> sums_;
    std::int64_t round_ = 0;
};

inline CountTensor update_counts(CountTensor counts, const ArmIndex& arm, int reward) {
    counts.update(arm, reward);
    return counts;
}

// --- canonical fixtures -------------------------------------------------

// Two symmetric tasks, three representations, two predictors; the second
// and third representation rows are swapped between tasks.
inline ModelTensor symmetric_two_task_model() {
    return ModelTensor(2, 3, 2,
                       {0.5, 0.45, 0.35, 0.33, 0.10, 0.05,
                        0.5, 0.45, 0.10, 0.05, 0.35, 0.33});
}

// Single-task view of one representation's predictors: X'=1, G'=H, H'=1.
inline ModelTensor reduce_to_predictors(const ModelTensor& model, int x, int g) {
    std::vector<double> m(model.predictors());
    for (int h = 0; h < model.predictors(); ++h) m[h] = model.mean(x, g, h);
    return ModelTensor(1, model.predictors(), 1, std::move(m));
}

// Single-task view of all G*H arms flattened: X'=1, G'=G*H, H'=1.
// Flat arm a maps back to (g, h) = (a / H, a % H).
inline ModelTensor flatten_task(const ModelTensor& model, int x) {
    std::vector<double> m(model.arms_per_task());
    for (int g = 0; g < model.representations(); ++g)
        for (int h = 0; h < model.predictors(); ++h)
            m[static_cast<size_t>(g) * model.predictors() + h] = model.mean(x, g, h);
    return ModelTensor(1, model.arms_per_task(), 1, std::move(m));
}

} // namespace mtbai
