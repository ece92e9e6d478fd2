#include <doctest.h>

#include <set>
#include <string>

#include "nudgesim/env_model.hpp"
#include "test_support.hpp"

using namespace nudgesim;

namespace {

std::string minimal_config(const std::string& rows = "[[0.5, 0.5], [0.0, 1.0]]") {
    return R"({
      "seed": 7,
      "schedule": {"horizon_days": 1},
      "contexts": [{
        "context_id": "ctx_a",
        "baseline_matrix": {
          "states": ["session_start", "out_of_app"],
          "rows": )" + rows + R"(,
          "initial": [1.0, 0.0]
        }
      }],
      "population": [{"context_id": "ctx_a", "user_count": 1}]
    })";
}

}  // namespace

TEST_CASE("minimal config loads with defaults") {
    const Environment env = load_environment(minimal_config());
    CHECK(env.contexts.size() == 1);
    CHECK(env.seed == 7);
    CHECK(env.schedule.horizon_days == 1);
    CHECK(env.schedule.nudge_window_days == 5);  // default window
    CHECK(env.schedule.decisions_per_day == 1);
    CHECK(env.rl.reward_metric == "daily_action_count");
    CHECK(env.rl.action_set == std::vector<std::string>{"no_nudge", "nudge"});
    CHECK(env.delivery.p_open_base == 0.3);
    CHECK(env.delivery.count_blocked_nudges);
    CHECK(env.total_users() == 1);
}

TEST_CASE("bad row sum is rejected with the offending value") {
    try {
        load_environment(minimal_config("[[0.6, 0.6], [0.0, 1.0]]"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        const std::string what = e.what();
        CHECK(what.find("row sum") != std::string::npos);
        CHECK(what.find("1.2") != std::string::npos);
        CHECK(e.path().find("baseline_matrix") != std::string::npos);
    }
}

TEST_CASE("metric names are resolved against the catalog") {
    test::ConfigOptions opt;
    opt.reward_metric = "daily_action_count";
    CHECK_NOTHROW(load_environment(test::make_config(opt)));

    opt.reward_metric = "no_such_metric";
    CHECK_THROWS_AS(load_environment(test::make_config(opt)), ConfigError);
}

TEST_CASE("load_environment rejects structural errors with paths") {
    SUBCASE("unknown context in population") {
        std::string cfg = test::make_config();
        auto doc = nlohmann::ordered_json::parse(cfg);
        doc["population"][0]["context_id"] = "ctx_missing";
        CHECK_THROWS_WITH_AS(load_environment(doc.dump()),
                             doctest::Contains("ctx_missing"), ConfigError);
    }
    SUBCASE("malformed JSON") {
        CHECK_THROWS_AS(load_environment("{ not json"), ConfigError);
    }
    SUBCASE("decisions_per_day other than 1") {
        auto doc = nlohmann::ordered_json::parse(test::make_config());
        doc["schedule"]["decisions_per_day"] = 2;
        CHECK_THROWS_AS(load_environment(doc.dump()), ConfigError);
    }
    SUBCASE("inverted active hours") {
        auto doc = nlohmann::ordered_json::parse(test::make_config());
        doc["contexts"][0]["active_hours"] = {20.0, 8.0};
        CHECK_THROWS_AS(load_environment(doc.dump()), ConfigError);
    }
    SUBCASE("action set without no_nudge") {
        auto doc = nlohmann::ordered_json::parse(test::make_config());
        doc["rl"]["action_set"] = {"nudge_a", "nudge_b"};
        CHECK_THROWS_AS(load_environment(doc.dump()), ConfigError);
    }
    SUBCASE("nonpositive session rate") {
        auto doc = nlohmann::ordered_json::parse(test::make_config());
        doc["contexts"][0]["session_rate_per_day"] = 0.0;
        CHECK_THROWS_AS(load_environment(doc.dump()), ConfigError);
    }
}

TEST_CASE("validate_matrix reports every violation") {
    TransitionMatrix m;
    m.states = {"session_start", "out_of_app"};
    m.rows = {{0.5, 0.5}, {0.0, 1.0}};
    m.initial = {1.0, 0.0};
    m.index_states();
    CHECK(validate_matrix(m).ok());

    SUBCASE("negative entry") {
        m.rows[0] = {-0.1, 1.1};
        const auto report = validate_matrix(m);
        CHECK(report.joined().find("negative entry at (0,0)") != std::string::npos);
    }
    SUBCASE("non-absorbing out row") {
        m.rows[1] = {0.1, 0.9};
        const auto report = validate_matrix(m);
        CHECK(report.joined().find("not absorbing") != std::string::npos);
    }
    SUBCASE("initial mass on out_of_app") {
        m.initial = {0.5, 0.5};
        const auto report = validate_matrix(m);
        CHECK(report.joined().find("out_of_app") != std::string::npos);
    }
    SUBCASE("missing distinguished state") {
        m.states = {"a", "out_of_app"};
        m.index_states();
        const auto report = validate_matrix(m);
        CHECK_FALSE(report.ok());
    }
}

TEST_CASE("sample_population counts, determinism, and ids") {
    test::ConfigOptions opt;
    opt.users = 5;
    const Environment env = test::make_env(opt);
    const auto users = sample_population(env);
    REQUIRE(users.size() == 5);
    CHECK(users[0].user_id == "u000001");
    CHECK(users[4].user_id == "u000005");
    for (const auto& user : users) {
        CHECK(user.context_id == "ctx_a");
        CHECK(user.alpha == 1.0);  // point masses
        CHECK(user.beta == 0.0);
        CHECK(user.gamma == 0.0);
        CHECK(user.signup_day == 0);
        CHECK_FALSE(user.blocked);
    }

    const auto again = sample_population(env);
    REQUIRE(again.size() == users.size());
    for (std::size_t i = 0; i < users.size(); ++i) {
        CHECK(again[i].user_id == users[i].user_id);
        CHECK(again[i].alpha == users[i].alpha);
        CHECK(again[i].beta == users[i].beta);
        CHECK(again[i].gamma == users[i].gamma);
    }
}

TEST_CASE("continuous weight distributions react to the seed") {
    auto doc = nlohmann::ordered_json::parse(test::make_config());
    doc["contexts"][0]["weight_distributions"]["alpha"] = {
        {"type", "uniform"}, {"lo", 0.0}, {"hi", 2.0}};
    doc["contexts"][0]["weight_distributions"]["gamma"] = {
        {"type", "lognormal"}, {"mu", 0.0}, {"sigma", 0.5}};
    Environment env = load_environment(doc.dump());
    const auto pop_a = sample_population(env);
    env.seed += 1;
    const auto pop_b = sample_population(env);
    REQUIRE(pop_a.size() == pop_b.size());
    bool any_diff = false;
    for (std::size_t i = 0; i < pop_a.size(); ++i) {
        any_diff |= pop_a[i].alpha != pop_b[i].alpha;
        any_diff |= pop_a[i].gamma != pop_b[i].gamma;
        CHECK(pop_a[i].alpha >= 0.0);
        CHECK(pop_a[i].gamma >= 0.0);
    }
    CHECK(any_diff);
}

TEST_CASE("serialize/load round-trip is idempotent") {
    test::ConfigOptions opt;
    opt.users = 3;
    opt.policy = "lin_ucb";
    const Environment env = test::make_env(opt);
    const std::string first = serialize_environment(env);
    const Environment reloaded = load_environment(first);
    CHECK(serialize_environment(reloaded) == first);
    CHECK(reloaded.seed == env.seed);
    CHECK(reloaded.schedule.horizon_days == env.schedule.horizon_days);
    CHECK(reloaded.contexts.size() == env.contexts.size());
    CHECK(reloaded.contexts[0].baseline_matrix == env.contexts[0].baseline_matrix);
    CHECK(reloaded.rl.context_features == env.rl.context_features);
    CHECK(reloaded.rl.policy.name == env.rl.policy.name);
}

TEST_CASE("matrices accepted by load_environment pass validate_matrix") {
    const Environment env = test::make_env();
    for (const auto& ctx : env.contexts) {
        CHECK(validate_matrix(ctx.baseline_matrix).ok());
    }
}
