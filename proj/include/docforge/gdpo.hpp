// Group-relative advantage computation over multi-dimensional rewards.
//
// The production path normalizes each reward dimension across the rollout
// group before mixing, so a dimension whose values differ always contributes
// signal. The scalar baseline (normalize after summing) is kept for
// comparison: when per-dimension differences cancel in the weighted sum, it
// emits all-zero advantages and the group carries no gradient at all.
#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "docforge/corpus.hpp"
#include "docforge/rewards.hpp"

namespace docforge::gdpo {

inline constexpr size_t kDims = 4;  // text, formula, table, structure

inline std::array<double, kDims> reward_array(const rewards::RewardVector& rv) {
    return {rv.text, rv.formula, rv.table, rv.structure};
}

inline std::array<double, kDims> weight_array(const EngineConfig& cfg) {
    return {cfg.w_text, cfg.w_formula, cfg.w_table, cfg.w_struct};
}

struct GroupStats {
    double mean = 0.0;
    double stddev = 0.0;  // population form: sqrt(sum((x-mean)^2)/n)
};

inline GroupStats group_stats(const std::vector<double>& xs) {
    GroupStats s;
    if (xs.empty()) return s;
    for (const double x : xs) s.mean += x;
    s.mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (const double x : xs) var += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(var / static_cast<double>(xs.size()));
    return s;
}

// (x - mean) / (stddev + eps), elementwise over the group. A constant group
// short-circuits to exact zeros instead of accumulating rounding dust.
inline std::vector<double> group_normalize(const std::vector<double>& xs, double eps) {
    if (!xs.empty()) {
        bool constant = true;
        for (const double x : xs)
            if (x != xs.front()) { constant = false; break; }
        if (constant) return std::vector<double>(xs.size(), 0.0);
    }
    const GroupStats s = group_stats(xs);
    std::vector<double> out(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) out[i] = (xs[i] - s.mean) / (s.stddev + eps);
    return out;
}

struct DimensionAdvantages {
    // per-dimension normalized scores, one row per rollout
    std::vector<std::array<double, kDims>> normalized;
    std::vector<double> weighted;    // weighted sum of normalized dims
    std::vector<double> advantages;  // weighted sums rescaled across the batch
};

// Normalize each dimension within the group, mix with the dimension weights,
// then rescale the mixed scores once more so the optimizer sees a unit-scale
// signal regardless of how many dimensions were active.
inline DimensionAdvantages dimension_advantages(const std::vector<rewards::RewardVector>& group,
                                                const EngineConfig& cfg) {
    DimensionAdvantages res;
    const size_t n = group.size();
    if (n == 0) return res;
    res.normalized.assign(n, {});
    std::vector<double> column(n);
    for (size_t d = 0; d < kDims; ++d) {
        for (size_t i = 0; i < n; ++i) column[i] = reward_array(group[i])[d];
        const std::vector<double> norm = group_normalize(column, cfg.epsilon);
        for (size_t i = 0; i < n; ++i) res.normalized[i][d] = norm[i];
    }
    const std::array<double, kDims> w = weight_array(cfg);
    res.weighted.resize(n);
    for (size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (size_t d = 0; d < kDims; ++d) sum += w[d] * res.normalized[i][d];
        res.weighted[i] = sum;
    }
    res.advantages = group_normalize(res.weighted, cfg.epsilon);
    return res;
}

struct ScalarAdvantages {
    std::vector<double> summed;      // weighted scalar reward per rollout
    std::vector<double> advantages;  // group-normalized scalar
};

// The baseline that loses per-dimension information: collapse the reward
// vector to one number first, then normalize across the group.
inline ScalarAdvantages summed_advantages(const std::vector<rewards::RewardVector>& group,
                                          const EngineConfig& cfg) {
    ScalarAdvantages res;
    const std::array<double, kDims> w = weight_array(cfg);
    res.summed.reserve(group.size());
    for (const rewards::RewardVector& rv : group) {
        const std::array<double, kDims> r = reward_array(rv);
        double sum = 0.0;
        for (size_t d = 0; d < kDims; ++d) sum += w[d] * r[d];
        res.summed.push_back(sum);
    }
    res.advantages = group_normalize(res.summed, cfg.epsilon);
    return res;
}

inline double spread(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double lo = xs[0], hi = xs[0];
    for (const double x : xs) {
        if (x < lo) lo = x;
        if (x > hi) hi = x;
    }
    return hi - lo;
}

}  // namespace docforge::gdpo
