#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "agentsim/env/table_worlds.hpp"
#include "agentsim/expected.hpp"
#include "agentsim/subtask.hpp"
#include "agentsim/trace.hpp"

namespace agentsim {

enum class DeviationKind {
    wrong_arguments,
    wrong_tool,
    missing_call,
    unexpected_mutation,
    missing_context
};

inline std::string to_string(DeviationKind k) {
    switch (k) {
        case DeviationKind::wrong_arguments: return "wrong_arguments";
        case DeviationKind::wrong_tool: return "wrong_tool";
        case DeviationKind::missing_call: return "missing_call";
        case DeviationKind::unexpected_mutation: return "unexpected_mutation";
        case DeviationKind::missing_context: return "missing_context";
    }
    return "";
}

struct LocalizedFailure {
    std::string subtask;
    std::int64_t turn = 0;
    DeviationKind kind = DeviationKind::wrong_arguments;
    int reference_index = -1;  // deviated-from entry in expected.reference_calls
    int call_seq = -1;         // index into collect_calls, -1 when nothing executed
    std::string detail;
};

namespace detail {

// Attribution of a call to one subtask: the first decomposition child when a
// rule fires, with a recipe-declared override for derived arguments.
inline std::string attribute_subtask(const SubtaskMap& map, const ToolCall& call,
                                     const json& payload, const ReferenceCall* ref,
                                     const std::string& deviating_arg) {
    if (ref && !deviating_arg.empty())
        for (const auto& recipe : ref->computed)
            if (recipe.arg == deviating_arg && !recipe.subtask.empty()) return recipe.subtask;
    return subtasks_for_call(map, call, payload).front();
}

inline bool is_exploration_call(const SubtaskMap& map, const ToolCall& call, const json& payload) {
    const auto subtasks = subtasks_for_call(map, call, payload);
    return map.kind_of(subtasks.front()) == SubtaskKind::exploration;
}

struct Candidate {
    LocalizedFailure failure;
    bool forgivable = false;
    int seq = 0;  // call order position where the deviation happened
};

}  // namespace detail

// Critical-context items whose string never appears in any successful
// response payload of the trace.
inline std::vector<std::string> missing_context_items(const Trace& trace,
                                                      const ExpectedExecution& expected) {
    std::vector<std::string> missing;
    if (expected.critical_context.empty()) return missing;
    std::string haystack;
    for (const auto& site : collect_calls(trace))
        if (site.response && !site.response->is_error) {
            haystack += canonical_text(site.response->payload);
            haystack += '\n';
        }
    for (const auto& item : expected.critical_context)
        if (haystack.find(item.item) == std::string::npos) missing.push_back(item.item);
    return missing;
}

// Walks the trace against the reference call sequence and returns the
// earliest confirmed deviation. Exploration calls that match no reference
// entry are harmless extras; a deviation that the agent repairs (a later
// exact match of the same entry) is forgiven unless a dependent subtask ran
// or a mutation succeeded inside the window.
inline std::optional<LocalizedFailure> localize_first_failure(const Trace& trace,
                                                              const ExpectedExecution& expected,
                                                              const SubtaskMap& map) {
    if (!expected.task_id.empty() && trace.task_id != expected.task_id)
        throw ValidationError("task_id mismatch",
                              trace.task_id + " vs expected " + expected.task_id);

    const auto sites = collect_calls(trace);
    const auto& refs = expected.reference_calls;
    const int m = static_cast<int>(refs.size());

    auto is_mutating = [&](const std::string& tool) { return map.mutating_tools.count(tool) != 0; };
    auto payload_of = [&](const CallSite& site) {
        return site.response ? site.response->payload : json();
    };
    auto succeeded = [&](const CallSite& site) { return site.response && !site.response->is_error; };

    std::vector<detail::Candidate> candidates;
    std::set<int> deviated_entries;  // one candidate per reference entry
    // Per call: the smallest reference entry it exactly matches (repair scan),
    // whether it was a successful mutation, and its subtask names.
    std::vector<int> exact_match(sites.size(), -1);
    std::vector<bool> mutated(sites.size(), false);
    std::vector<std::vector<std::string>> call_subtasks(sites.size());

    for (std::size_t s = 0; s < sites.size(); ++s) {
        const CallSite& site = sites[s];
        call_subtasks[s] = subtasks_for_call(map, *site.call, payload_of(site));
        mutated[s] = is_mutating(site.call->tool_name) && succeeded(site);
        for (int k = 0; k < m; ++k)
            if (refs[k].matches(*site.call)) {
                exact_match[s] = k;
                break;
            }
    }

    auto add_candidate = [&](LocalizedFailure f, bool forgivable, int seq, int entry) {
        if (entry >= 0) {
            if (deviated_entries.count(entry)) return;
            deviated_entries.insert(entry);
        }
        detail::Candidate c;
        c.failure = std::move(f);
        c.forgivable = forgivable;
        c.seq = seq;
        candidates.push_back(std::move(c));
    };

    int r = 0;
    for (std::size_t s = 0; s < sites.size(); ++s) {
        const CallSite& site = sites[s];
        const ToolCall& call = *site.call;
        const json payload = payload_of(site);

        if (r < m && call.tool_name == refs[r].tool_name) {
            if (refs[r].matcher.matches(call.arguments) && succeeded(site)) {
                ++r;
                continue;
            }
            if (!refs[r].matcher.matches(call.arguments)) {
                const std::string arg =
                    refs[r].matcher.first_mismatch(call.arguments).value_or("");
                LocalizedFailure f;
                f.kind = DeviationKind::wrong_arguments;
                f.turn = site.turn;
                f.reference_index = r;
                f.call_seq = static_cast<int>(s);
                f.subtask = detail::attribute_subtask(map, call, payload, &refs[r], arg);
                json shown = refs[r].matcher.exact_value(arg).value_or(json());
                f.detail = "turn " + std::to_string(site.turn) + ": " + call.tool_name +
                           " argument " + arg + " expected " + canonical_text(shown) + " got " +
                           canonical_text(call.arguments.value(arg, json()));
                // A mutation that actually executed cannot be walked back.
                add_candidate(std::move(f), !mutated[s], static_cast<int>(s), r);
            }
            continue;  // errored-but-matching calls: wait for the retry
        }

        // Not the expected tool: does it complete a later entry exactly?
        if (exact_match[s] > r && succeeded(site)) {
            const int k = exact_match[s];
            if (r < m) {
                LocalizedFailure f;
                f.kind = DeviationKind::missing_call;
                f.turn = site.turn;
                f.reference_index = r;
                f.call_seq = -1;
                f.subtask = refs[r].computed.empty() || refs[r].computed.front().subtask.empty()
                                ? map.tool_rules.count(refs[r].tool_name)
                                      ? subtasks_for_call(
                                            map, ToolCall{refs[r].tool_name, json::object(), ""},
                                            json())
                                            .front()
                                      : refs[r].tool_name
                                : refs[r].computed.front().subtask;
                f.detail = "reference call " + std::to_string(r) + " (" + refs[r].tool_name +
                           ") never executed";
                add_candidate(std::move(f), true, static_cast<int>(s), r);
            }
            r = k + 1;
            continue;
        }

        if (detail::is_exploration_call(map, call, payload)) continue;  // harmless extra

        if (mutated[s]) {
            LocalizedFailure f;
            f.kind = r < m && is_mutating(refs[r].tool_name) ? DeviationKind::wrong_tool
                                                             : DeviationKind::unexpected_mutation;
            f.turn = site.turn;
            f.reference_index = r < m ? r : -1;
            f.call_seq = static_cast<int>(s);
            f.subtask = detail::attribute_subtask(map, call, payload, nullptr, "");
            f.detail = "turn " + std::to_string(site.turn) + ": unexpected mutation " +
                       call.tool_name + " " + canonical_text(call.arguments);
            add_candidate(std::move(f), false, static_cast<int>(s), -1);
            continue;
        }
        // Off-script non-mutating, non-exploration call (rejected mutation
        // attempts, redundant computations): no direct effect, skip.
    }

    if (r < m) {
        LocalizedFailure f;
        f.kind = DeviationKind::missing_call;
        f.turn = trace.turns.empty() ? 0 : trace.turns.back().index;
        f.reference_index = r;
        f.call_seq = -1;
        f.subtask = map.tool_rules.count(refs[r].tool_name)
                        ? subtasks_for_call(map, ToolCall{refs[r].tool_name, json::object(), ""},
                                            json())
                              .front()
                        : refs[r].tool_name;
        f.detail =
            "reference call " + std::to_string(r) + " (" + refs[r].tool_name + ") never executed";
        add_candidate(std::move(f), false, static_cast<int>(sites.size()), r);
    }

    // Forgiveness pass: a candidate is dropped when a later call exactly
    // matches its entry and the window between them is clean.
    auto depends_on = [&](const std::string& from, const std::string& to) {
        for (const auto& [a, b] : map.dependencies)
            if (a == from && b == to) return true;
        return false;
    };
    std::optional<LocalizedFailure> first;
    int first_seq = -1;
    for (const auto& cand : candidates) {
        bool forgiven = false;
        if (cand.forgivable && cand.failure.reference_index >= 0) {
            for (std::size_t s = cand.seq + 1; s < sites.size() && !forgiven; ++s) {
                if (exact_match[s] == cand.failure.reference_index && succeeded(sites[s])) {
                    bool clean = true;
                    for (std::size_t w = cand.seq + 1; w < s && clean; ++w) {
                        if (mutated[w]) clean = false;
                        for (const auto& t : call_subtasks[w])
                            if (depends_on(cand.failure.subtask, t)) clean = false;
                    }
                    forgiven = clean;
                    break;
                }
            }
        }
        if (forgiven) continue;
        if (!first || cand.seq < first_seq ||
            (cand.seq == first_seq && cand.failure.turn < first->turn)) {
            first = cand.failure;
            first_seq = cand.seq;
        }
    }
    if (first) return first;

    // Clean alignment: a trace can still have failed to surface critical data.
    const auto missing = missing_context_items(trace, expected);
    if (!missing.empty()) {
        LocalizedFailure f;
        f.kind = DeviationKind::missing_context;
        f.turn = trace.turns.empty() ? 0 : trace.turns.back().index;
        f.reference_index = -1;
        f.call_seq = -1;
        for (const auto& item : expected.critical_context)
            if (item.item == missing.front()) f.subtask = item.subtask;
        f.detail = "critical context item '" + missing.front() + "' never retrieved";
        return f;
    }
    return std::nullopt;
}

// Success requires a clean alignment and the expected final state.
inline Outcome evaluate_task(const Trace& trace, const ExpectedExecution& expected,
                             const SubtaskMap& map) {
    if (trace.budget.exceeded()) return Outcome::exhausted;
    if (localize_first_failure(trace, expected, map)) return Outcome::failure;
    if (!expected.expected_final_state_hash.empty() &&
        trace.final_state_hash != expected.expected_final_state_hash)
        return Outcome::failure;
    return Outcome::success;
}

struct FailureAnnotation {
    std::string task_id;
    std::string workload;
    std::string failed_subtask;
    std::string category;
    std::string subtype;
    std::int64_t turn = 0;
    std::string evidence;
};

inline const std::vector<std::string>& failure_categories() {
    static const std::vector<std::string> order{
        "state_awareness",          "state_space_navigation",    "domain_rule_violation",
        "tool_output_processing",   "user_instruction_following", "resource_exhaustion"};
    return order;
}

namespace detail {

// Replays the trace's successful calls (in order, strictly before `upto`)
// against a fresh world built from the fixture.
inline std::unique_ptr<World> replay_world(const ScenarioFixture& fixture, const Trace& trace,
                                           int upto) {
    auto world = make_world(fixture);
    const auto sites = collect_calls(trace);
    for (int s = 0; s < upto && s < static_cast<int>(sites.size()); ++s) {
        if (!sites[s].response || sites[s].response->is_error) continue;
        if (sites[s].call->tool_name == "submit_answer") continue;
        try {
            world->invoke_tool(sites[s].call->tool_name, sites[s].call->arguments);
        } catch (const ToolFault&) {
            // Replay of a recorded success cannot fault unless the fixture
            // differs; ignore so classification degrades instead of dying.
        }
    }
    return world;
}

// Stale-path detector: the agent's path argument resolves to the expected
// target from some *earlier* working directory.
inline std::optional<std::string> stale_path_evidence(const ScenarioFixture& fixture,
                                                      const Trace& trace,
                                                      const LocalizedFailure& localized,
                                                      const ExpectedExecution& expected) {
    if (fixture.workload != "file_system" || localized.call_seq < 0) return std::nullopt;
    const auto sites = collect_calls(trace);
    const ToolCall& call = *sites[localized.call_seq].call;
    if (localized.reference_index < 0) return std::nullopt;
    const ReferenceCall& ref = expected.reference_calls[localized.reference_index];

    // Working-directory history up to the deviating call.
    auto world = make_world(fixture);
    std::vector<std::string> history{world->agent_state().value("working_directory",
                                                                std::string("/"))};
    for (int s = 0; s < localized.call_seq; ++s) {
        if (!sites[s].response || sites[s].response->is_error) continue;
        if (sites[s].call->tool_name == "submit_answer") continue;
        try {
            world->invoke_tool(sites[s].call->tool_name, sites[s].call->arguments);
        } catch (const ToolFault&) {
        }
        const std::string cwd = world->agent_state().value("working_directory", std::string("/"));
        if (history.back() != cwd) history.push_back(cwd);
    }
    const std::string current = world->agent_state().value("working_directory", std::string("/"));

    if (!call.arguments.is_object()) return std::nullopt;
    for (const auto& [arg, agent_value] : call.arguments.items()) {
        if (!agent_value.is_string()) continue;
        const auto expected_value = ref.matcher.exact_value(arg);
        if (!expected_value || !expected_value->is_string() || *expected_value == agent_value)
            continue;
        const std::string want =
            FsWorld::resolve(current, expected_value->get<std::string>());
        for (const auto& prior : history) {
            if (prior == current) continue;
            if (FsWorld::resolve(prior, agent_value.get<std::string>()) == want)
                return "stale working directory: '" + agent_value.get<std::string>() +
                       "' is correct relative to " + prior + ", not " + current;
        }
    }
    return std::nullopt;
}

inline bool has_refusal_text(const Trace& trace) {
    static const std::vector<std::string> markers{"cannot", "not allowed", "not permitted",
                                                  "unable to"};
    for (const auto& turn : trace.turns) {
        if (turn.actor != Actor::agent) continue;
        for (const auto& marker : markers)
            if (turn.text.find(marker) != std::string::npos) return true;
    }
    return false;
}

// First guardrail rejection for the given tool: an error payload carrying the
// rejecting rule's name.
inline std::optional<std::pair<std::int64_t, json>> guardrail_rejection(const Trace& trace,
                                                                        const std::string& tool) {
    for (const auto& site : collect_calls(trace)) {
        if (site.call->tool_name != tool) continue;
        if (!site.response || !site.response->is_error) continue;
        if (site.response->payload.is_object() && site.response->payload.contains("rule"))
            return std::make_pair(site.turn, site.response->payload);
    }
    return std::nullopt;
}

}  // namespace detail

// The fixed decision procedure over the six categories. The fixture is
// optional: without it the state-awareness replay and the rule re-evaluation
// of executed mutations are skipped.
inline FailureAnnotation classify_failure(const Trace& trace,
                                          const std::optional<LocalizedFailure>& localized,
                                          const ExpectedExecution& expected, const SubtaskMap& map,
                                          const ScenarioFixture* fixture = nullptr) {
    FailureAnnotation note;
    note.task_id = trace.task_id;
    note.workload = trace.workload;
    const auto sites = collect_calls(trace);

    if (localized) {
        note.failed_subtask = localized->subtask;
        note.turn = localized->turn;
        note.evidence = localized->detail;
    } else if (!sites.empty()) {
        note.failed_subtask =
            subtasks_for_call(map, *sites.back().call,
                              sites.back().response ? sites.back().response->payload : json())
                .front();
        note.turn = sites.back().turn;
    }

    // (1) Exhaustion outranks everything else.
    if (trace.outcome == Outcome::exhausted) {
        note.category = "resource_exhaustion";
        note.turn = trace.turns.empty() ? 0 : trace.turns.back().index;
        note.evidence = "budget exhausted: turns " + std::to_string(trace.budget.used_turns) + "/" +
                        std::to_string(trace.budget.max_turns) + ", tokens " +
                        std::to_string(trace.budget.used_tokens) + "/" +
                        std::to_string(trace.budget.max_tokens);
        return note;
    }

    const auto missing = missing_context_items(trace, expected);

    // (2) Exploration deviation with critical context never surfaced.
    if (localized && !missing.empty()) {
        const bool exploration_site =
            localized->kind == DeviationKind::missing_context ||
            (map.kinds.count(localized->subtask) &&
             map.kind_of(localized->subtask) == SubtaskKind::exploration);
        if (exploration_site) {
            note.category = "state_space_navigation";
            note.evidence = "critical context missing: '" + missing.front() + "'; " +
                            localized->detail;
            return note;
        }
    }

    // (3) Stale agent-state assumption (file-system working directory).
    if (localized && fixture) {
        if (auto stale = detail::stale_path_evidence(*fixture, trace, *localized, expected)) {
            note.category = "state_awareness";
            note.evidence = *stale + "; " + localized->detail;
            return note;
        }
    }

    // (4) Domain rules: executed violations, rejected attempts, refusals.
    if (localized) {
        const ReferenceCall* ref = localized->reference_index >= 0
                                       ? &expected.reference_calls[localized->reference_index]
                                       : nullptr;
        // 4a: the deviating call is an executed mutation that the rules forbid.
        if (localized->call_seq >= 0 && fixture) {
            const CallSite& site = sites[localized->call_seq];
            if (map.mutating_tools.count(site.call->tool_name) && site.response &&
                !site.response->is_error) {
                auto world = detail::replay_world(*fixture, trace, localized->call_seq);
                const RuleDecision d = world->rules().check(
                    site.call->tool_name, site.call->arguments, world->store_view());
                if (d.rejected) {
                    note.category = "domain_rule_violation";
                    note.subtype = "invalid_action";
                    note.evidence = "rule " + d.rule + ": " + d.message + "; " + localized->detail;
                    return note;
                }
            }
        }
        // 4b/4c: the required mutation never happened.
        if (localized->kind == DeviationKind::missing_call && ref &&
            map.mutating_tools.count(ref->tool_name)) {
            if (auto rejection = detail::guardrail_rejection(trace, ref->tool_name)) {
                note.category = "domain_rule_violation";
                note.subtype = "invalid_action";
                note.evidence = "turn " + std::to_string(rejection->first) +
                                ": guardrail rejected " + ref->tool_name + " (" +
                                rejection->second.value("rule", std::string()) + "); " +
                                localized->detail;
                return note;
            }
            if (detail::has_refusal_text(trace)) {
                note.category = "domain_rule_violation";
                note.subtype = "lack_of_correct_action";
                note.evidence = "agent refused the permitted call " + ref->tool_name + "; " +
                                localized->detail;
                return note;
            }
        }
    }

    // (5) A derived value disagrees with recomputation over the trace's data.
    if (localized && localized->call_seq >= 0 && localized->reference_index >= 0) {
        const ReferenceCall& ref = expected.reference_calls[localized->reference_index];
        const CallSite& site = sites[localized->call_seq];
        for (const auto& recipe : ref.computed) {
            if (!site.call->arguments.is_object() || !site.call->arguments.contains(recipe.arg))
                continue;
            const json recomputed = recompute_recipe(recipe, trace);
            if (recomputed.is_null()) continue;
            const json actual = site.call->arguments[recipe.arg];
            if (actual != recomputed) {
                note.category = "tool_output_processing";
                note.subtype = recipe_subtype(recipe.op);
                if (!recipe.subtask.empty()) note.failed_subtask = recipe.subtask;
                note.evidence = "recomputed " + recipe.op + " over " + recipe.from_tool +
                                " gives " + canonical_text(recomputed) + " but agent used " +
                                canonical_text(actual);
                return note;
            }
        }
    }

    // (6) Total fallback.
    note.category = "user_instruction_following";
    if (note.evidence.empty()) note.evidence = "deviation not attributable to environment signals";
    return note;
}

// Zero-filled six-row count table per workload.
inline std::map<std::string, std::map<std::string, std::int64_t>> failure_breakdown(
    const std::vector<FailureAnnotation>& annotations) {
    std::map<std::string, std::map<std::string, std::int64_t>> table;
    for (const auto& a : annotations) {
        auto& row = table[a.workload];
        if (row.empty())
            for (const auto& c : failure_categories()) row[c] = 0;
        row[a.category] += 1;
    }
    for (auto& [wl, row] : table) {
        (void)wl;
        for (const auto& c : failure_categories())
            if (!row.count(c)) row[c] = 0;
    }
    return table;
}

}  // namespace agentsim
