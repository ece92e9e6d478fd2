#include "nudgesim/markov_engine.hpp"

#include <algorithm>
#include <cmath>

namespace nudgesim {

std::string state_category(const std::string& state_name) {
    const auto slash = state_name.find('/');
    if (slash == std::string::npos) return state_name;
    return state_name.substr(0, slash);
}

SessionPlan plan_day(const ContextSpec& ctx, double sigma, int day, rng::RngStream& stream) {
    SessionPlan plan;
    plan.session_count = stream.poisson(ctx.session_rate_per_day * sigma);
    const TimestampMs window_start =
        day_start_ms(day) + static_cast<TimestampMs>(ctx.active_hours_start * kMsPerHour);
    const TimestampMs window_end =
        day_start_ms(day) + static_cast<TimestampMs>(ctx.active_hours_end * kMsPerHour);
    plan.start_times.reserve(plan.session_count);
    plan.online_flags.reserve(plan.session_count);
    for (std::uint64_t i = 0; i < plan.session_count; ++i) {
        const double u = stream.uniform();
        plan.start_times.push_back(
            window_start +
            static_cast<TimestampMs>(u * static_cast<double>(window_end - window_start)));
    }
    std::sort(plan.start_times.begin(), plan.start_times.end());
    for (std::uint64_t i = 0; i < plan.session_count; ++i) {
        plan.online_flags.push_back(stream.bernoulli(ctx.p_online));
    }
    return plan;
}

std::vector<int> walk_session(const TransitionMatrix& matrix, int max_len,
                              rng::RngStream& stream) {
    std::vector<int> walk;
    const int out_idx = matrix.out_index;
    int state = static_cast<int>(stream.categorical(matrix.initial));
    while (state != out_idx && static_cast<int>(walk.size()) < max_len) {
        walk.push_back(state);
        state = static_cast<int>(stream.categorical(matrix.rows[state]));
    }
    return walk;
}

std::vector<TimestampMs> assign_timestamps(std::size_t n_states, TimestampMs session_start,
                                           rng::RngStream& stream) {
    std::vector<TimestampMs> timestamps;
    timestamps.reserve(n_states);
    TimestampMs ts = session_start;
    for (std::size_t i = 0; i < n_states; ++i) {
        if (i > 0) {
            const double gap_s = stream.lognormal(kGapLogMu, kGapLogSigma);
            const auto gap_ms = static_cast<TimestampMs>(std::llround(gap_s * 1000.0));
            ts += std::max<TimestampMs>(gap_ms, 1);
        }
        timestamps.push_back(ts);
    }
    return timestamps;
}

std::vector<ActionEvent> simulate_day(const UserModel& user, const ContextSpec& ctx,
                                      const TransitionMatrix& matrix, int day,
                                      const SessionPlan& plan,
                                      rng::RngStream& walk_stream) {
    std::vector<ActionEvent> events;
    const TimestampMs window_end =
        day_start_ms(day) + static_cast<TimestampMs>(ctx.active_hours_end * kMsPerHour);
    for (std::uint64_t s = 0; s < plan.session_count; ++s) {
        const std::vector<int> walk = walk_session(matrix, kDefaultMaxWalkLen, walk_stream);
        if (walk.empty()) continue;
        const std::vector<TimestampMs> timestamps =
            assign_timestamps(walk.size(), plan.start_times[s], walk_stream);
        std::string session_id =
            user.user_id + "-" + std::to_string(day) + "-" + std::to_string(s + 1);
        for (std::size_t i = 0; i < walk.size(); ++i) {
            if (timestamps[i] >= window_end) break;  // session truncates at window end
            ActionEvent event;
            event.user_id = user.user_id;
            event.day = day;
            event.ts = timestamps[i];
            event.session_id = session_id;
            event.state_name = matrix.states[walk[i]];
            event.online = plan.online_flags[s];
            event.metadata.emplace_back("category", state_category(event.state_name));
            events.push_back(std::move(event));
        }
    }
    return events;
}

}  // namespace nudgesim
