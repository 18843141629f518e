#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "agentsim/bench.hpp"
#include "agentsim/builtin.hpp"
#include "agentsim/classify.hpp"

using namespace agentsim;

namespace {

AgentPolicy knob_policy(const std::string& knob) {
    AgentPolicy p;
    p.kind = "noisy";
    if (knob == "navigation") p.p_navigation = 1.0;
    if (knob == "state") p.p_state = 1.0;
    if (knob == "compute") p.p_compute = 1.0;
    if (knob == "rule") p.p_rule = 1.0;
    if (knob == "verbosity") p.p_verbosity = 1.0;
    return p;
}

FailureAnnotation classify_run(const std::string& wl, const std::string& task_id,
                               const std::string& knob, Trace* trace_out = nullptr) {
    const ScenarioFixture& fx = builtin::fixture_for(wl);
    const SubtaskMap& map = builtin::subtask_map_for(wl);
    const TaskDef& task = builtin::find_task(wl, task_id);
    auto [trace, outcome] =
        run_task(task, fx, map, knob_policy(knob), OptimizationConfig{}, Budget{}, 0);
    REQUIRE(outcome != Outcome::success);
    const auto localized = localize_first_failure(trace, task.expected, map);
    const FailureAnnotation note =
        classify_failure(trace, localized, task.expected, map, &fx);
    if (trace_out) *trace_out = trace;
    return note;
}

}  // namespace

TEST_CASE("canonical category order is frozen") {
    const std::vector<std::string> want{"state_awareness",          "state_space_navigation",
                                       "domain_rule_violation",    "tool_output_processing",
                                       "user_instruction_following", "resource_exhaustion"};
    CHECK(failure_categories() == want);
}

TEST_CASE("oracle traces evaluate clean on every workload") {
    for (const auto& wl : builtin::workloads()) {
        const ScenarioFixture& fx = builtin::fixture_for(wl);
        const SubtaskMap& map = builtin::subtask_map_for(wl);
        const TaskDef& task = builtin::tasks_for(wl).front();
        auto [trace, outcome] =
            run_task(task, fx, map, AgentPolicy::oracle(), OptimizationConfig{}, Budget{}, 0);
        CHECK(outcome == Outcome::success);
        CHECK(!localize_first_failure(trace, task.expected, map).has_value());
        CHECK(missing_context_items(trace, task.expected).empty());
    }
}

TEST_CASE("verbosity burnout lands as resource exhaustion") {
    Trace trace;
    const FailureAnnotation note = classify_run("crm", "crm-001", "verbosity", &trace);
    CHECK(trace.outcome == Outcome::exhausted);
    CHECK(trace.budget.exceeded());
    CHECK(note.category == "resource_exhaustion");
    CHECK(note.evidence.find("budget exhausted") != std::string::npos);
    CHECK(note.turn == trace.turns.back().index);
}

TEST_CASE("navigation detours land as state space navigation") {
    const FailureAnnotation note = classify_run("file_system", "fs-001", "navigation");
    CHECK(note.category == "state_space_navigation");
    CHECK(note.evidence.find("critical context missing") != std::string::npos);
}

TEST_CASE("stale working-directory mistakes land as state awareness") {
    const FailureAnnotation note = classify_run("file_system", "fs-013", "state");
    CHECK(note.category == "state_awareness");
}

TEST_CASE("executed rule violations land as invalid_action") {
    const FailureAnnotation note = classify_run("crm", "crm-013", "rule");
    CHECK(note.category == "domain_rule_violation");
    CHECK(note.subtype == "invalid_action");
    CHECK(note.evidence.find("no_escalated_updates") != std::string::npos);
}

TEST_CASE("refusals of permitted actions land as lack_of_correct_action") {
    const FailureAnnotation note = classify_run("crm", "crm-014", "rule");
    CHECK(note.category == "domain_rule_violation");
    CHECK(note.subtype == "lack_of_correct_action");
}

TEST_CASE("miscomputed values land as tool output processing with op subtype") {
    // med-001 derives a max: retrieval. med-019 counts above a threshold:
    // comparison. med-013 derives a mean: calculation.
    FailureAnnotation note = classify_run("medical", "med-001", "compute");
    CHECK(note.category == "tool_output_processing");
    CHECK(note.subtype == "retrieval");
    CHECK(note.evidence.find("recomputed max") != std::string::npos);

    note = classify_run("medical", "med-019", "compute");
    CHECK(note.category == "tool_output_processing");
    CHECK(note.subtype == "comparison");

    note = classify_run("medical", "med-013", "compute");
    CHECK(note.category == "tool_output_processing");
    CHECK(note.subtype == "calculation");
}

TEST_CASE("unattributable answer divergence falls back to instruction following") {
    const ScenarioFixture& fx = builtin::fixture_for("retail");
    const SubtaskMap& map = builtin::subtask_map_for("retail");
    const TaskDef& task = builtin::tasks_for("retail").front();
    auto [trace, outcome] =
        run_task(task, fx, map, AgentPolicy::oracle(), OptimizationConfig{}, Budget{}, 0);
    REQUIRE(outcome == Outcome::success);

    // Same calls, same context — but the graded final state disagrees.
    ExpectedExecution doctored = task.expected;
    doctored.expected_final_state_hash = "0000000000000000";
    CHECK(evaluate_task(trace, doctored, map) == Outcome::failure);
    trace.outcome = Outcome::failure;
    const auto localized = localize_first_failure(trace, doctored, map);
    CHECK(!localized.has_value());
    const FailureAnnotation note = classify_failure(trace, localized, doctored, map, &fx);
    CHECK(note.category == "user_instruction_following");
}

TEST_CASE("self-corrected transients are never reported") {
    const ScenarioFixture& fx = builtin::fixture_for("file_system");
    const SubtaskMap& map = builtin::subtask_map_for("file_system");
    const TaskDef& task = builtin::find_task("file_system", "fs-001");
    auto [trace, outcome] =
        run_task(task, fx, map, AgentPolicy::oracle(), OptimizationConfig{}, Budget{}, 0);
    REQUIRE(outcome == Outcome::success);
    REQUIRE(!localize_first_failure(trace, task.expected, map).has_value());

    // Splice a wrong cd immediately before the first real one. The very next
    // call completes the same reference entry, so the slip is forgiven.
    auto it = std::find_if(trace.turns.begin(), trace.turns.end(), [](const Turn& t) {
        return !t.calls.empty() && t.calls[0].tool_name == "cd";
    });
    REQUIRE(it != trace.turns.end());
    Turn detour;
    detour.index = it->index;
    detour.actor = Actor::agent;
    detour.text = "Heading into the archive first.";
    detour.calls.push_back(ToolCall{"cd", json{{"path", "/archive"}}, "surgery-1"});
    ToolResponse resp;
    resp.call_id = "surgery-1";
    resp.payload = json{{"working_directory", "/archive"}};
    detour.responses.push_back(resp);
    trace.turns.insert(it, detour);

    CHECK(!localize_first_failure(trace, task.expected, map).has_value());
}

TEST_CASE("every failed noisy trace gets exactly one canonical category") {
    const auto& cats = failure_categories();
    int failures_seen = 0;
    for (const auto& wl : builtin::workloads()) {
        const ScenarioFixture& fx = builtin::fixture_for(wl);
        const SubtaskMap& map = builtin::subtask_map_for(wl);
        for (const auto& task : builtin::tasks_for(wl)) {
            if (task.set_name != "analysis") continue;
            auto [trace, outcome] = run_task(task, fx, map, AgentPolicy::noisy_default(),
                                             OptimizationConfig{}, Budget{}, 7);
            if (outcome == Outcome::success) continue;
            ++failures_seen;
            const auto localized = localize_first_failure(trace, task.expected, map);
            const FailureAnnotation note =
                classify_failure(trace, localized, task.expected, map, &fx);
            CHECK(std::count(cats.begin(), cats.end(), note.category) == 1);
            CHECK(!note.evidence.empty());
            if (trace.outcome == Outcome::exhausted)
                CHECK(note.category == "resource_exhaustion");
        }
    }
    CHECK(failures_seen > 30);  // the noisy default breaks a healthy share
}

TEST_CASE("failure breakdown zero-fills all six categories") {
    std::vector<FailureAnnotation> notes;
    FailureAnnotation a;
    a.task_id = "x-001";
    a.workload = "crm";
    a.category = "resource_exhaustion";
    notes.push_back(a);
    a.task_id = "x-002";
    a.category = "resource_exhaustion";
    notes.push_back(a);
    a.task_id = "x-003";
    a.category = "state_awareness";
    notes.push_back(a);
    const auto table = failure_breakdown(notes);
    REQUIRE(table.count("crm") == 1);
    CHECK(table.at("crm").size() == 6);
    CHECK(table.at("crm").at("resource_exhaustion") == 2);
    CHECK(table.at("crm").at("state_awareness") == 1);
    CHECK(table.at("crm").at("domain_rule_violation") == 0);
    CHECK(table.at("crm").at("tool_output_processing") == 0);
    CHECK(table.at("crm").at("user_instruction_following") == 0);
    CHECK(table.at("crm").at("state_space_navigation") == 0);
}
