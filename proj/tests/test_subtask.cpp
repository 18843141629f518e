#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "agentsim/bench.hpp"
#include "agentsim/builtin.hpp"
#include "agentsim/subtask.hpp"

using namespace agentsim;

TEST_CASE("fraction formatting frozen values") {
    CHECK(format_fraction(Fraction(3, 30)) == "0.1");
    CHECK(format_fraction(Fraction(15, 30)) == "0.5");
    CHECK(format_fraction(Fraction(1, 1)) == "1");
    CHECK(format_fraction(Fraction(1, 3)) == "0.333333");
    CHECK(format_fraction(Fraction(0, 7)) == "0");
}

// A minimal trace: one agent turn per call, successful empty responses.
static Trace trace_of_calls(const std::string& task_id, const std::string& workload,
                            const std::vector<std::pair<std::string, json>>& calls) {
    Trace t;
    t.task_id = task_id;
    t.workload = workload;
    int n = 0;
    for (const auto& [tool, args] : calls) {
        Turn turn;
        turn.index = static_cast<int>(t.turns.size());
        turn.actor = Actor::agent;
        ToolCall call{tool, args, "c" + std::to_string(++n)};
        ToolResponse resp;
        resp.call_id = call.call_id;
        resp.payload = json::object();
        turn.calls.push_back(call);
        turn.responses.push_back(resp);
        t.turns.push_back(std::move(turn));
        t.budget.used_turns += 1;
    }
    return t;
}

TEST_CASE("four-subtask flight-change graph has the exact edge set") {
    // Ad-hoc map: user lookup, reservation review, flight search, modification
    // -- no judge decomposition.
    SubtaskMap m;
    m.workload = "airline";
    m.tool_rules = {{"get_user_details", "identify user"},
                    {"get_reservations", "review reservations"},
                    {"find_flights", "find cheapest flight"},
                    {"modify_reservation", "modify reservation"}};
    m.kinds = {{"identify user", SubtaskKind::exploration},
               {"review reservations", SubtaskKind::exploration},
               {"find cheapest flight", SubtaskKind::exploration},
               {"modify reservation", SubtaskKind::exploitation}};
    m.dependencies = {{"identify user", "review reservations"},
                      {"review reservations", "modify reservation"},
                      {"find cheapest flight", "modify reservation"}};
    m.validate();

    const Trace t = trace_of_calls(
        "flight-change", "airline",
        {{"get_user_details", json{{"user_id", "u-1"}}},
         {"get_reservations", json{{"user_id", "u-1"}}},
         {"find_flights", json{{"origin", "SFO"}}},
         {"modify_reservation", json{{"reservation_id", "r-1"}}}});
    const auto occurrences = map_trace_to_subtasks(t, m);
    REQUIRE(occurrences.size() == 4);
    const SubtaskGraph g = build_subtask_graph(t.task_id, occurrences, m);
    CHECK(g.nodes == std::set<std::string>{"identify user", "review reservations",
                                           "find cheapest flight", "modify reservation"});
    const std::set<Edge> want{{"identify user", "review reservations"},
                              {"review reservations", "modify reservation"},
                              {"find cheapest flight", "modify reservation"}};
    CHECK(g.edges == want);
}

TEST_CASE("decomposition rules split calls into judge + act occurrences") {
    const SubtaskMap& crm = builtin::subtask_map_for("crm");
    ToolCall update{"update_case", json{{"case_id", "C-1030"}, {"status", "closed"}}, "c1"};
    const auto subs = subtasks_for_call(crm, update, json::object());
    REQUIRE(subs.size() == 2);
    CHECK(subs[0] == "judge case update");
    CHECK(subs[1] == "update case");

    const SubtaskMap& retail = builtin::subtask_map_for("retail");
    ToolCall browse{"list_products", json{{"category", "electronics"}}, "c2"};
    const auto split = subtasks_for_call(retail, browse, json::object());
    REQUIRE(split.size() == 2);
    CHECK(split[0] == "browse products");
    CHECK(split[1] == "filter product items");
    // Without the predicate field the split does not fire.
    ToolCall plain{"list_products", json::object(), "c3"};
    const auto whole = subtasks_for_call(retail, plain, json::object());
    REQUIRE(whole.size() == 1);
    CHECK(whole[0] == "browse products");
}

TEST_CASE("unmapped tools are a mapping error") {
    const SubtaskMap& crm = builtin::subtask_map_for("crm");
    ToolCall stranger{"no_such_tool", json::object(), "c1"};
    CHECK_THROWS_AS(subtasks_for_call(crm, stranger, json()), MappingError);
}

TEST_CASE("merged weights are exact per-task presence fractions") {
    // 30 tasks; "rare" appears in 3, "common" in 15, "always" in all.
    std::vector<SubtaskGraph> graphs;
    for (int i = 0; i < 30; ++i) {
        SubtaskGraph g;
        g.task_id = "t" + std::to_string(i);
        g.nodes.insert("always");
        if (i < 15) {
            g.nodes.insert("common");
            g.edges.insert({"always", "common"});
            g.edge_counts[{"always", "common"}] = 2;  // only per-occurrence mode reads this
        }
        if (i < 3) g.nodes.insert("rare");
        graphs.push_back(std::move(g));
    }
    const MergedSubtaskGraph merged = merge_graphs(graphs);
    CHECK(merged.task_count == 30);
    CHECK(merged.node_weights.at("rare") == Fraction(3, 30));
    CHECK(format_fraction(merged.node_weights.at("rare")) == "0.1");
    CHECK(merged.node_weights.at("common") == Fraction(15, 30));
    CHECK(format_fraction(merged.node_weights.at("common")) == "0.5");
    CHECK(merged.node_weights.at("always") == Fraction(1, 1));
    CHECK(merged.edge_weights.at({"always", "common"}) == Fraction(1, 2));

    const MergedSubtaskGraph per_occ =
        merge_graphs(graphs, nullptr, EdgeCountMode::per_occurrence);
    CHECK(per_occ.edge_counts.at({"always", "common"}) == 30);  // 15 tasks x count 2
    CHECK(per_occ.edge_weights.at({"always", "common"}) == Fraction(1, 1));
}

TEST_CASE("merged weights match brute force over oracle retail traces") {
    const std::string wl = "retail";
    const ScenarioFixture& fx = builtin::fixture_for(wl);
    const SubtaskMap& map = builtin::subtask_map_for(wl);
    std::vector<SubtaskGraph> graphs;
    std::map<std::string, std::int64_t> brute_nodes;
    std::int64_t n_tasks = 0;
    for (const auto& task : builtin::tasks_for(wl)) {
        if (task.set_name != "analysis") continue;
        auto [trace, outcome] = run_task(task, fx, map, AgentPolicy::oracle(),
                                         OptimizationConfig{}, Budget{}, 0);
        REQUIRE(outcome == Outcome::success);
        const auto occ = map_trace_to_subtasks(trace, map);
        graphs.push_back(build_subtask_graph(task.task_id, occ, map));
        std::set<std::string> present;
        for (const auto& o : occ) present.insert(o.name);
        for (const auto& name : present) brute_nodes[name] += 1;
        ++n_tasks;
    }
    REQUIRE(n_tasks == 30);
    const MergedSubtaskGraph merged = merge_graphs(graphs, &map);
    for (const auto& [name, count] : brute_nodes)
        CHECK(merged.node_weights.at(name) == Fraction(count, n_tasks));
    // Every analysis task starts with profile then orders: weight exactly 1.
    CHECK(merged.edge_weights.at({"find user", "get orders"}) == Fraction(1, 1));
    CHECK(merged.node_kinds.at("find user") == SubtaskKind::exploration);
    CHECK(merged.node_kinds.at("cancel order") == SubtaskKind::exploitation);

    // DOT export is deterministic and carries the exact weight.
    const std::string dot = export_graph_dot(merged);
    CHECK(dot == export_graph_dot(merged));
    CHECK(dot.find("\"find user\" -> \"get orders\" [weight=1") != std::string::npos);

    std::ostringstream a, b;
    write_weights_csv(a, merged);
    write_weights_csv(b, merged);
    CHECK(a.str() == b.str());
    CHECK(a.str().find("edge,find user,get orders,30,1") != std::string::npos);
}

TEST_CASE("brittleness frequencies sum to one and sort by leverage") {
    const std::string wl = "medical";
    const ScenarioFixture& fx = builtin::fixture_for(wl);
    const SubtaskMap& map = builtin::subtask_map_for(wl);
    std::vector<Trace> traces;
    for (const auto& task : builtin::tasks_for(wl)) {
        if (task.set_name != "analysis") continue;
        auto [trace, outcome] = run_task(task, fx, map, AgentPolicy::oracle(),
                                         OptimizationConfig{}, Budget{}, 0);
        traces.push_back(std::move(trace));
    }
    const std::vector<std::string> failed{"get patient vital data", "get patient vital data",
                                          "file order"};
    const auto rows = brittleness_table(traces, failed, map);
    Fraction freq_sum(0, 1);
    for (const auto& row : rows) freq_sum += row.frequency;
    CHECK(freq_sum == Fraction(1, 1));
    for (std::size_t i = 1; i < rows.size(); ++i)
        CHECK(rows[i - 1].leverage >= rows[i].leverage);
    // Annotations must reference subtasks that actually occur.
    CHECK_THROWS_AS(brittleness_table(traces, {"no such subtask"}, map), ValidationError);
}

TEST_CASE("subtask map round trips through json") {
    for (const auto& wl : builtin::workloads()) {
        const SubtaskMap& map = builtin::subtask_map_for(wl);
        SubtaskMap back = SubtaskMap::from_json(map.to_json());
        back.validate();
        CHECK(back.to_json() == map.to_json());
    }
}

TEST_CASE("dependency cycles are rejected") {
    SubtaskMap m;
    m.workload = "x";
    m.tool_rules = {{"a", "A"}, {"b", "B"}};
    m.kinds = {{"A", SubtaskKind::exploration}, {"B", SubtaskKind::exploitation}};
    m.dependencies = {{"A", "B"}, {"B", "A"}};
    CHECK_THROWS_AS(m.validate(), CycleError);
}
