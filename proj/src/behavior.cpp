#include "nudgesim/behavior.hpp"

#include <algorithm>
#include <cmath>

namespace nudgesim {

double decay_f(double n, const DecayParams& p) { return p.a0 * std::exp(-p.k_a * n); }

double decay_g(double n, const DecayParams& p) {
    if (std::abs(p.k_b - p.k_a) < kRateSingularityEps) {
        return p.b0 * p.k_a * n * std::exp(-p.k_a * n);
    }
    return p.b0 * p.k_a * (std::exp(-p.k_a * n) - std::exp(-p.k_b * n)) / (p.k_b - p.k_a);
}

double decay_h(double n, const DecayParams& p) {
    if (std::abs(p.k_b - p.k_a) < kRateSingularityEps) {
        return p.c0 * (1.0 - std::exp(-p.k_a * n) * (1.0 + p.k_a * n));
    }
    return p.c0 *
           (p.k_a * (std::exp(-p.k_b * n) - 1.0) - p.k_b * (std::exp(-p.k_a * n) - 1.0)) /
           (p.k_b - p.k_a);
}

ActivityResponse activity_response(double n, const UserModel& user, const DecayParams& p) {
    ActivityResponse response;
    response.n = n;
    response.value =
        user.alpha * decay_f(n, p) + user.beta * decay_g(n, p) + user.gamma * decay_h(n, p);
    return response;
}

int nudge_count(const std::vector<NudgeHistoryEntry>& history, int current_day, int d) {
    int count = 0;
    for (const auto& entry : history) {
        if (entry.delivered && entry.day > current_day - d && entry.day <= current_day) {
            ++count;
        }
    }
    return count;
}

EngagementMultiplier engagement_multiplier(const UserModel& user, double n,
                                           const DecayParams& p) {
    if (n == 0.0) return {1.0};
    const double response_n = activity_response(n, user, p).value;
    const double response_0 = activity_response(0.0, user, p).value;
    const double sigma = (1.0 + response_n) / (1.0 + response_0);
    return {std::clamp(sigma, kSigmaMin, kSigmaMax)};
}

TransitionMatrix modulate_matrix(const TransitionMatrix& base, double sigma) {
    if (sigma == 1.0) return base;
    TransitionMatrix out = base;
    const std::size_t n = base.states.size();
    const std::size_t out_idx = static_cast<std::size_t>(base.out_index);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == out_idx) continue;  // absorbing row stays fixed
        auto& row = out.rows[i];
        double engagement_mass = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == out_idx) continue;
            row[j] = base.rows[i][j] * sigma;
            engagement_mass += row[j];
        }
        if (engagement_mass > 1.0 - kOutProbFloor) {
            const double rescale = (1.0 - kOutProbFloor) / engagement_mass;
            for (std::size_t j = 0; j < n; ++j) {
                if (j != out_idx) row[j] *= rescale;
            }
            row[out_idx] = kOutProbFloor;
        } else {
            row[out_idx] = 1.0 - engagement_mass;
        }
    }
    return out;
}

}  // namespace nudgesim
