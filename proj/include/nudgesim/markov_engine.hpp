#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nudgesim/env_model.hpp"
#include "nudgesim/rng.hpp"
#include "nudgesim/time_util.hpp"

namespace nudgesim {

/// One in-app action. `state` indexes into the matrix state list and is never
/// the out_of_app state. Metadata currently carries the action category
/// (state-name prefix before '/', or the state name itself).
struct ActionEvent {
    std::string user_id;
    int day = 0;
    TimestampMs ts = 0;
    std::string session_id;
    std::string state_name;
    bool online = true;
    std::vector<std::pair<std::string, std::string>> metadata;
};

struct SessionPlan {
    std::uint64_t session_count = 0;
    std::vector<TimestampMs> start_times;  // sorted, within active hours
    std::vector<bool> online_flags;
};

/// session_count ~ Poisson(lambda * sigma), start times i.i.d. uniform over
/// the context's active hours (sorted), online flags ~ Bernoulli(p_online).
SessionPlan plan_day(const ContextSpec& ctx, double sigma, int day, rng::RngStream& stream);

/// Markov walk: first state from the initial distribution, then row draws,
/// stopping on absorption into out_of_app (not emitted) or at max_len.
/// Returns indices into matrix.states; only engagement states appear.
std::vector<int> walk_session(const TransitionMatrix& matrix, int max_len,
                              rng::RngStream& stream);

inline constexpr int kDefaultMaxWalkLen = 1000;

/// Timestamps for a walk: first event at session_start, then i.i.d.
/// lognormal(mu = ln 20 s, sigma = 0.8) gaps rounded to milliseconds with a
/// 1 ms minimum, so the sequence is strictly increasing.
std::vector<TimestampMs> assign_timestamps(std::size_t n_states, TimestampMs session_start,
                                           rng::RngStream& stream);

inline constexpr double kGapLogMu = 2.99573227355399099;  // ln(20 s)
inline constexpr double kGapLogSigma = 0.8;

/// All of the user's events for one day under the given (already modulated)
/// matrix. Sessions truncate at the end of the active-hours window so every
/// event of day k lies inside day k's window. Deterministic given the stream
/// keys; the caller derives streams from (master seed, user index, day).
std::vector<ActionEvent> simulate_day(const UserModel& user, const ContextSpec& ctx,
                                      const TransitionMatrix& matrix, int day,
                                      const SessionPlan& plan, rng::RngStream& walk_stream);

/// Category label for a state name: prefix before the first '/', or the whole
/// name when it has none.
std::string state_category(const std::string& state_name);

}  // namespace nudgesim
