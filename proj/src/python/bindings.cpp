#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nudgesim/behavior.hpp"
#include "nudgesim/env_model.hpp"
#include "nudgesim/logkit.hpp"
#include "nudgesim/markov_engine.hpp"
#include "nudgesim/metrics.hpp"
#include "nudgesim/rl_harness.hpp"
#include "nudgesim/time_util.hpp"

namespace py = pybind11;
using namespace nudgesim;

PYBIND11_MODULE(_core, m) {
    m.doc() = "Markov-process mobile-health engagement simulator core";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    py::class_<DecayParams>(m, "DecayParams")
        .def(py::init([](double k_a, double k_b, double a0, double b0, double c0) {
                 return DecayParams{k_a, k_b, a0, b0, c0};
             }),
             py::arg("k_a") = 0.2, py::arg("k_b") = 1.0, py::arg("a0") = 1.0,
             py::arg("b0") = 1.0, py::arg("c0") = 1.0)
        .def_readwrite("k_a", &DecayParams::k_a)
        .def_readwrite("k_b", &DecayParams::k_b)
        .def_readwrite("a0", &DecayParams::a0)
        .def_readwrite("b0", &DecayParams::b0)
        .def_readwrite("c0", &DecayParams::c0);

    py::class_<TransitionMatrix>(m, "TransitionMatrix")
        .def_readonly("states", &TransitionMatrix::states)
        .def_readonly("rows", &TransitionMatrix::rows)
        .def_readonly("initial", &TransitionMatrix::initial);

    py::class_<UserModel>(m, "UserModel")
        .def_readonly("user_id", &UserModel::user_id)
        .def_readonly("context_id", &UserModel::context_id)
        .def_readonly("alpha", &UserModel::alpha)
        .def_readonly("beta", &UserModel::beta)
        .def_readonly("gamma", &UserModel::gamma)
        .def_readonly("blocked", &UserModel::blocked)
        .def_readonly("signup_day", &UserModel::signup_day);

    py::class_<Environment>(m, "Environment")
        .def_readonly("seed", &Environment::seed)
        .def_property_readonly("horizon_days",
                               [](const Environment& e) { return e.schedule.horizon_days; })
        .def_property_readonly(
            "nudge_window_days",
            [](const Environment& e) { return e.schedule.nudge_window_days; })
        .def_property_readonly("action_set",
                               [](const Environment& e) { return e.rl.action_set; })
        .def_property_readonly("total_users", &Environment::total_users)
        .def_property_readonly("context_ids",
                               [](const Environment& e) {
                                   std::vector<std::string> ids;
                                   for (const auto& ctx : e.contexts)
                                       ids.push_back(ctx.context_id);
                                   return ids;
                               })
        .def(
            "baseline_matrix",
            [](const Environment& e, const std::string& id) {
                return e.context(id).baseline_matrix;
            },
            py::arg("context_id"));

    py::class_<Decision>(m, "Decision")
        .def_readonly("user_id", &Decision::user_id)
        .def_readonly("day", &Decision::day)
        .def_readonly("action", &Decision::action)
        .def_readonly("policy_name", &Decision::policy_name);

    py::class_<MetricRow>(m, "MetricRow")
        .def_readonly("user_id", &MetricRow::user_id)
        .def_readonly("day", &MetricRow::day)
        .def_readonly("daily_action_count", &MetricRow::daily_action_count)
        .def_readonly("session_count", &MetricRow::session_count)
        .def_readonly("active", &MetricRow::active)
        .def_readonly("nudges_delivered", &MetricRow::nudges_delivered)
        .def_readonly("nudges_opened", &MetricRow::nudges_opened)
        .def_readonly("open_rate", &MetricRow::open_rate)
        .def_readonly("online_fraction", &MetricRow::online_fraction);

    py::class_<DayAggregate>(m, "DayAggregate")
        .def_readonly("day", &DayAggregate::day)
        .def_readonly("action_counts", &DayAggregate::action_counts)
        .def_readonly("mean_reward", &DayAggregate::mean_reward)
        .def_readonly("cumulative_mean_reward", &DayAggregate::cumulative_mean_reward);

    py::class_<ExperimentResult>(m, "ExperimentResult")
        .def_readonly("policy_name", &ExperimentResult::policy_name)
        .def_readonly("action_set", &ExperimentResult::action_set)
        .def_readonly("per_day", &ExperimentResult::per_day)
        .def_readonly("total_mean_reward", &ExperimentResult::total_mean_reward);

    py::class_<RunOutputs>(m, "RunOutputs")
        .def_readonly("decisions", &RunOutputs::decisions)
        .def_readonly("result", &RunOutputs::result)
        .def_readonly("users", &RunOutputs::users)
        .def_property_readonly("metric_rows",
                               [](const RunOutputs& o) { return o.store.rows(); })
        .def_property_readonly(
            "logs_jsonl", [](const RunOutputs& o) { return serialize_records(o.logs); });

    m.def("load_environment", &load_environment, py::arg("config_text"),
          "Parse and validate a JSON config document.");
    m.def("serialize_environment", &serialize_environment, py::arg("env"));
    m.def("sample_population", &sample_population, py::arg("env"));

    m.def(
        "decay_f",
        [](double n, const DecayParams& p) { return decay_f(n, p); },
        py::arg("n"), py::arg("params") = DecayParams{});
    m.def(
        "decay_g",
        [](double n, const DecayParams& p) { return decay_g(n, p); },
        py::arg("n"), py::arg("params") = DecayParams{});
    m.def(
        "decay_h",
        [](double n, const DecayParams& p) { return decay_h(n, p); },
        py::arg("n"), py::arg("params") = DecayParams{});
    m.def(
        "activity_response",
        [](double n, double alpha, double beta, double gamma, const DecayParams& p) {
            UserModel user;
            user.alpha = alpha;
            user.beta = beta;
            user.gamma = gamma;
            return activity_response(n, user, p).value;
        },
        py::arg("n"), py::arg("alpha"), py::arg("beta"), py::arg("gamma"),
        py::arg("params") = DecayParams{});
    m.def(
        "engagement_multiplier",
        [](double n, double alpha, double beta, double gamma, const DecayParams& p) {
            UserModel user;
            user.alpha = alpha;
            user.beta = beta;
            user.gamma = gamma;
            return engagement_multiplier(user, n, p).sigma;
        },
        py::arg("n"), py::arg("alpha"), py::arg("beta"), py::arg("gamma"),
        py::arg("params") = DecayParams{});
    m.def("modulate_matrix", &modulate_matrix, py::arg("base"), py::arg("sigma"));
    m.def(
        "validate_matrix",
        [](const TransitionMatrix& matrix) { return validate_matrix(matrix).issues; },
        py::arg("matrix"), "List of invariant violations; empty when valid.");

    m.def(
        "walk_session",
        [](const TransitionMatrix& matrix, int max_len, std::uint64_t seed) {
            rng::RngStream stream(seed);
            std::vector<std::string> names;
            for (int idx : walk_session(matrix, max_len, stream)) {
                names.push_back(matrix.states[idx]);
            }
            return names;
        },
        py::arg("matrix"), py::arg("max_len") = kDefaultMaxWalkLen, py::arg("seed") = 0,
        "One seeded Markov walk; returns visited state names.");

    m.def(
        "run",
        [](const Environment& env, const std::string& policy, bool keep_logs, int workers) {
            PolicySpec spec = env.rl.policy;
            if (!policy.empty()) spec.name = policy;
            RunOptions options;
            options.keep_logs = keep_logs;
            options.workers = workers;
            return run_experiment(env, spec, options);
        },
        py::arg("env"), py::arg("policy") = std::string(), py::arg("keep_logs") = true,
        py::arg("workers") = 1,
        "Run the full daily simulation loop and return its outputs.");
}
