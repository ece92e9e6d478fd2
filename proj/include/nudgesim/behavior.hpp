#pragma once

#include "nudgesim/env_model.hpp"

namespace nudgesim {

/// Engagement-multiplier clamp range and the minimum out-of-app probability
/// kept in every modulated row.
inline constexpr double kSigmaMin = 0.05;
inline constexpr double kSigmaMax = 20.0;
inline constexpr double kOutProbFloor = 0.01;

/// Rate difference below which the decay functions switch to their
/// k_a == k_b analytic limit forms to avoid catastrophic cancellation.
inline constexpr double kRateSingularityEps = 1e-9;

/// f(n) = a0 * exp(-k_a * n). Peak response with no nudges, strictly
/// decreasing in n when a0 > 0.
double decay_f(double n, const DecayParams& p);

/// g(n) = b0 * k_a * (exp(-k_a n) - exp(-k_b n)) / (k_b - k_a). Zero at n = 0,
/// rises to a single peak, then fatigues back toward zero. Near k_a == k_b the
/// limit form b0 * k_a * n * exp(-k_a n) is used.
double decay_g(double n, const DecayParams& p);

/// h(n) = c0 * (k_a (exp(-k_b n) - 1) - k_b (exp(-k_a n) - 1)) / (k_b - k_a).
/// Zero at n = 0, monotone nondecreasing, saturating at c0. Near k_a == k_b
/// the limit form c0 * (1 - exp(-k_a n) (1 + k_a n)) is used.
double decay_h(double n, const DecayParams& p);

/// a_i(n) = alpha * f(n) + beta * g(n) + gamma * h(n).
struct ActivityResponse {
    double value = 0.0;
    double n = 0.0;
};

ActivityResponse activity_response(double n, const UserModel& user, const DecayParams& p);

/// Delivered nudges with day in the half-open window (current_day - d, current_day].
int nudge_count(const std::vector<NudgeHistoryEntry>& history, int current_day, int d);

/// sigma = (1 + a(n)) / (1 + a(0)), clamped to [kSigmaMin, kSigmaMax];
/// exactly 1 when n = 0.
struct EngagementMultiplier {
    double sigma = 1.0;
};

EngagementMultiplier engagement_multiplier(const UserModel& user, double n,
                                           const DecayParams& p);

/// Scales every engagement entry of each non-absorbing row by sigma and gives
/// the remainder to out_of_app. If the scaled engagement mass would exceed
/// 1 - kOutProbFloor it is rescaled proportionally so the out-of-app entry
/// keeps at least the floor. sigma == 1 returns the base matrix bit-identical.
TransitionMatrix modulate_matrix(const TransitionMatrix& base, double sigma);

}  // namespace nudgesim
