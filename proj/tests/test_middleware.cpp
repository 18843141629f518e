#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "agentsim/bench.hpp"
#include "agentsim/builtin.hpp"
#include "agentsim/env/table_worlds.hpp"
#include "agentsim/middleware.hpp"
#include "agentsim/subtask.hpp"

using namespace agentsim;

namespace {

ToolCall call(std::string tool, json args) {
    ToolCall c;
    c.tool_name = std::move(tool);
    c.arguments = std::move(args);
    return c;
}

}  // namespace

TEST_CASE("all-off middleware is a byte-identical passthrough") {
    const std::map<std::string, std::vector<ToolCall>> scripts{
        {"file_system",
         {call("cd", {{"path", "docs"}}), call("ls", json::object()),
          call("cat", {{"path", "reports/q1_summary.md"}}),
          call("mkdir", {{"path", "scratch"}}), call("pwd", json::object())}},
        {"medical",
         {call("get_patient", {{"name", "Maria Gonzalez"}}),
          call("get_records", {{"patient_id", "p-042"}, {"page", 2}}),
          call("lookup_code", {{"vital", "heart_rate"}}),
          call("post_order",
               {{"patient_id", "p-042"}, {"order_type", "review"}, {"value", 181}})}},
        {"retail",
         {call("get_user_profile", {{"email", "dana@example.com"}}),
          call("get_user_orders", {{"user_id", "u-301"}}),
          call("list_products", {{"category", "electronics"}}),
          call("cancel_order", {{"order_id", "o-9001"}})}},
        {"crm",
         {call("get_cases", {{"assigned_to", "mei.lin"}, {"status", "open"}}),
          call("calculate_avg", {{"values", json::array({2, 4, 6})}}),
          call("get_shipping_state", {{"case_id", "C-1030"}}),
          call("update_case", {{"case_id", "C-1030"}, {"status", "closed"}})}},
        {"airline",
         {call("get_user_details", {{"user_id", "u-501"}}),
          call("get_reservations", {{"user_id", "u-501"}}),
          call("search_direct_flight", {{"origin", "SFO"}, {"destination", "JFK"}}),
          call("cancel_reservation", {{"reservation_id", "r-708"}})}}};

    for (const auto& [wl, calls] : scripts) {
        const ScenarioFixture& fx = builtin::fixture_for(wl);
        auto wrapped_world = make_world(fx);
        auto plain_world = make_world(fx);
        Session wrapped(*wrapped_world, "w", Budget{});
        Session plain(*plain_world, "p", Budget{});
        Middleware mw(wrapped, builtin::baseline_optimizations());
        for (const auto& c : calls) {
            const ToolResponse a = mw.intercept(c);
            const ToolResponse b = plain.direct_invoke(c);
            CHECK(a.payload.dump() == b.payload.dump());
            CHECK(a.is_error == b.is_error);
            CHECK(a.augmentations.empty());
        }
        CHECK(state_hash(*wrapped_world) == state_hash(*plain_world));
    }
}

TEST_CASE("state confirmation rides only state-changing tools") {
    auto world = make_world(builtin::fixture_for("file_system"));
    Session session(*world, "t", Budget{});
    OptimizationConfig cfg;
    cfg.state_confirmation_enabled = true;
    Middleware mw(session, cfg);

    const ToolResponse moved = mw.intercept(call("cd", {{"path", "docs"}}));
    REQUIRE(moved.augmentations.count("state_confirmation") == 1);
    const json& conf = moved.augmentations.at("state_confirmation");
    CHECK(conf["working_directory"] == "/docs");
    CHECK(conf.contains("listing"));

    const ToolResponse listed = mw.intercept(call("ls", json::object()));
    CHECK(listed.augmentations.count("state_confirmation") == 0);
    const ToolResponse read = mw.intercept(call("cat", {{"path", "guide.md"}}));
    CHECK(read.augmentations.count("state_confirmation") == 0);
}

TEST_CASE("lookahead reports pagination and adjacency") {
    OptimizationConfig cfg;
    cfg.lookahead_enabled = true;
    cfg.lookahead_depth = 2;

    auto med = make_world(builtin::fixture_for("medical"));
    Session msess(*med, "m", Budget{});
    Middleware mmw(msess, cfg);
    const ToolResponse page =
        mmw.intercept(call("get_records", {{"patient_id", "p-042"}, {"page", 1}}));
    REQUIRE(page.augmentations.count("lookahead") == 1);
    CHECK(page.augmentations.at("lookahead")["total"] == 25);
    CHECK(page.augmentations.at("lookahead")["retrieved"] == 10);
    // A non-paginated lookup yields no lookahead payload at all.
    const ToolResponse who = mmw.intercept(call("get_patient", {{"name", "Maria Gonzalez"}}));
    CHECK(who.augmentations.count("lookahead") == 0);

    auto retail = make_world(builtin::fixture_for("retail"));
    Session rsess(*retail, "r", Budget{});
    Middleware rmw(rsess, cfg);
    const ToolResponse products = rmw.intercept(call("list_products", {{"category", "electronics"}}));
    REQUIRE(products.augmentations.count("lookahead") == 1);
    CHECK(products.augmentations.at("lookahead")["total"] == 17);
    CHECK(products.augmentations.at("lookahead")["retrieved"] == 10);

    auto fs = make_world(builtin::fixture_for("file_system"));
    Session fsess(*fs, "f", Budget{});
    Middleware fmw(fsess, cfg);
    const ToolResponse ls = fmw.intercept(call("ls", json::object()));
    REQUIRE(ls.augmentations.count("lookahead") == 1);
    const json& adj = ls.augmentations.at("lookahead")["adjacent"];
    REQUIRE(adj.is_array());
    CHECK(!adj.empty());
    CHECK(adj.dump().find("reports") != std::string::npos);  // depth 2 from /
}

TEST_CASE("precomputed aggregates match brute force and frozen values") {
    auto world = make_world(builtin::fixture_for("crm"));
    Session session(*world, "c", Budget{});
    Middleware mw(session, builtin::default_optimizations());

    const ToolResponse resp =
        mw.intercept(call("get_cases", {{"assigned_to", "mei.lin"}, {"status", "open"}}));
    REQUIRE(resp.augmentations.count("precomputed") == 1);
    const json& pre = resp.augmentations.at("precomputed");
    const json& cases = resp.payload["cases"];
    REQUIRE(cases.size() == 8);

    CHECK(pre["count"] == 8);
    const json& stats = pre["fields"]["handle_time_hours"];
    CHECK(stats["min"] == 3.5);
    CHECK(stats["max"] == 12.0);
    CHECK(stats["sum"] == 60.0);
    CHECK(stats["mean"] == 7.5);

    // Brute-force the same aggregates straight from the payload.
    double sum = 0, mn = 1e18, mx = -1e18;
    std::vector<std::pair<double, std::string>> order;
    for (const auto& c : cases) {
        const double h = c["handle_time_hours"].get<double>();
        sum += h;
        mn = std::min(mn, h);
        mx = std::max(mx, h);
        order.emplace_back(h, c["case_id"].get<std::string>());
    }
    CHECK(stats["min"].get<double>() == mn);
    CHECK(stats["max"].get<double>() == mx);
    CHECK(stats["sum"].get<double>() == sum);
    CHECK(stats["mean"].get<double>() == sum / 8.0);
    std::stable_sort(order.begin(), order.end());
    REQUIRE(stats["sort_by"].size() == order.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        CHECK(stats["sort_by"][i] == order[i].second);
    CHECK(stats["sort_by"][0] == "C-1001");
    CHECK(stats["sort_by"][7] == "C-1003");

    // Low-cardinality text fields get value histograms; unique text does not.
    const json& filters = pre["filters"];
    CHECK(filters["status"]["open"] == 8);
    CHECK(filters["assigned_to"]["mei.lin"] == 8);
    CHECK(!filters.contains("description"));

    // Scalar payloads carry no precomputed block.
    const ToolResponse avg =
        mw.intercept(call("calculate_avg", {{"values", json::array({1, 2})}}));
    CHECK(avg.augmentations.count("precomputed") == 0);
}

TEST_CASE("rule hints agree with guardrail verdicts entity by entity") {
    auto world = make_world(builtin::fixture_for("airline"));
    const RuleSet& rules = world->rules();

    for (const std::string& uid : {"u-501", "u-502", "u-503"}) {
        const json payload = world->invoke_tool("get_reservations", json{{"user_id", uid}});
        const json hints = Middleware::rule_hints(*world, payload);
        REQUIRE(!payload["reservations"].empty());
        for (const auto& r : payload["reservations"]) {
            const std::string rid = r["reservation_id"].get<std::string>();
            REQUIRE(hints.contains(rid));
            for (const auto& rule : rules.rules) {
                if (rule.effect != RuleEffect::forbid) continue;
                const RuleDecision d = rules.check(rule.applies_to, json{{rule.id_arg, rid}},
                                                   world->store_view());
                const bool forbidden = d.rejected && d.rule == rule.name;
                REQUIRE(hints[rid].contains(rule.name));
                CHECK(hints[rid][rule.name] == (forbidden ? "forbidden" : "permitted"));
            }
        }
    }

    // Frozen spot checks: gold permit wins, staleness forbids, cancel is free.
    const json gold = world->invoke_tool("get_reservations", json{{"user_id", "u-501"}});
    const json h = Middleware::rule_hints(*world, gold);
    CHECK(h["r-702"]["no_basic_economy_changes"] == "permitted");
    CHECK(h["r-707"]["no_stale_modifications"] == "forbidden");
    CHECK(h["r-701"]["no_cancel_cancelled"] == "permitted");
}

TEST_CASE("guardrails veto forbidden mutations before execution") {
    OptimizationConfig cfg;
    cfg.guardrails_enabled = true;

    auto retail = make_world(builtin::fixture_for("retail"));
    Session rsess(*retail, "r", Budget{});
    Middleware rmw(rsess, cfg);
    const std::string before = state_hash(*retail);
    const ToolResponse vetoed = rmw.intercept(call("cancel_order", {{"order_id", "o-9002"}}));
    CHECK(vetoed.is_error);
    CHECK(vetoed.payload["rule"] == "cancel_requires_pending");
    CHECK(vetoed.payload.contains("error"));
    CHECK(state_hash(*retail) == before);  // rejected before execution

    const ToolResponse allowed = rmw.intercept(call("cancel_order", {{"order_id", "o-9001"}}));
    CHECK(!allowed.is_error);
    CHECK(state_hash(*retail) != before);

    auto crm = make_world(builtin::fixture_for("crm"));
    Session csess(*crm, "c", Budget{});
    Middleware cmw(csess, cfg);
    const std::string chash = state_hash(*crm);
    const ToolResponse locked =
        cmw.intercept(call("update_case", {{"case_id", "C-1022"}, {"status", "closed"}}));
    CHECK(locked.is_error);
    CHECK(locked.payload["rule"] == "no_escalated_updates");
    CHECK(state_hash(*crm) == chash);

    auto air = make_world(builtin::fixture_for("airline"));
    Session asess(*air, "a", Budget{});
    Middleware amw(asess, cfg);
    const ToolResponse basic = amw.intercept(
        call("modify_reservation", {{"reservation_id", "r-704"}, {"new_flight_id", "F-88"}}));
    CHECK(basic.is_error);
    CHECK(basic.payload["rule"] == "no_basic_economy_changes");
}

TEST_CASE("speculation: hit saves a turn, mutation expires the bundle") {
    const ScenarioFixture& fx = builtin::fixture_for("crm");
    const SubtaskMap& map = builtin::subtask_map_for("crm");
    const AgentPolicy oracle = AgentPolicy::oracle();

    // crm-001 averages open-case handle time: the bundled calculate_avg is
    // exactly the agent's next call, so the optimized run lands one turn early.
    const TaskDef& avg_task = builtin::find_task("crm", "crm-001");
    auto [base_trace, base_outcome] =
        run_task(avg_task, fx, map, oracle, builtin::baseline_optimizations(), Budget{}, 0);
    SpeculationStats stats;
    auto [opt_trace, opt_outcome] = run_task(avg_task, fx, map, oracle,
                                             builtin::default_optimizations(), Budget{}, 0, &stats);
    CHECK(base_outcome == Outcome::success);
    CHECK(opt_outcome == Outcome::success);
    CHECK(opt_trace.budget.used_turns == base_trace.budget.used_turns - 1);
    CHECK(stats.issued == 1);
    CHECK(stats.hits == 1);
    CHECK(stats.misses == 0);
    CHECK(stats.turns_saved == 1);
    CHECK(stats.hits + stats.misses == stats.issued);

    // crm-013 updates a pending case: the bundle never matches and the first
    // successful mutation expires it as a miss.
    const TaskDef& update_task = builtin::find_task("crm", "crm-013");
    SpeculationStats miss_stats;
    auto [miss_trace, miss_outcome] =
        run_task(update_task, fx, map, oracle, builtin::default_optimizations(), Budget{}, 0,
                 &miss_stats);
    CHECK(miss_outcome == Outcome::success);
    CHECK(miss_stats.issued == 1);
    CHECK(miss_stats.hits == 0);
    CHECK(miss_stats.misses == 1);
    CHECK(miss_stats.turns_saved == 0);
    CHECK(miss_stats.hits + miss_stats.misses == miss_stats.issued);
}

TEST_CASE("speculation config hygiene") {
    auto world = make_world(builtin::fixture_for("crm"));
    Session session(*world, "s", Budget{});

    // Mutating targets are rejected outright.
    OptimizationConfig bad;
    bad.speculation_enabled = true;
    SpeculationEntry entry;
    entry.trigger = "get_cases";
    entry.target = "update_case";
    entry.weight = Fraction(1, 1);
    bad.speculation_table.push_back(entry);
    CHECK_THROWS_AS(Middleware(session, bad), ConfigError);

    // Entries whose target is not in this registry are skipped, not fatal.
    auto fs = make_world(builtin::fixture_for("file_system"));
    Session fsess(*fs, "f", Budget{});
    Middleware ok(fsess, builtin::default_optimizations());
    CHECK(ok.stats().issued == 0);

    // Waived billing marks the bundle key as uncharged.
    auto crm2 = make_world(builtin::fixture_for("crm"));
    Session free_sess(*crm2, "g", Budget{});
    OptimizationConfig waived = builtin::default_optimizations();
    waived.speculation_charge_tokens = false;
    Middleware free_mw(free_sess, waived);
    CHECK(free_sess.uncharged_augmentation_keys.count("speculative_bundle") == 1);
}

TEST_CASE("speculation table weights equal merged analysis edge weights") {
    const OptimizationConfig defaults = builtin::default_optimizations();

    const auto merged_edge = [&](const std::string& wl, const std::string& from,
                                 const std::string& to) {
        const ScenarioFixture& fx = builtin::fixture_for(wl);
        const SubtaskMap& map = builtin::subtask_map_for(wl);
        std::vector<SubtaskGraph> graphs;
        for (const auto& task : builtin::tasks_for(wl)) {
            if (task.set_name != "analysis") continue;
            auto [trace, outcome] = run_task(task, fx, map, AgentPolicy::oracle(),
                                             OptimizationConfig{}, Budget{}, 0);
            REQUIRE(outcome == Outcome::success);
            graphs.push_back(
                build_subtask_graph(task.task_id, map_trace_to_subtasks(trace, map), map));
        }
        REQUIRE(graphs.size() == 30);
        return merge_graphs(graphs, &map).edge_weights.at({from, to});
    };

    const Fraction crm_weight =
        merged_edge("crm", "find assigned cases", "compute average handle time");
    const Fraction retail_weight = merged_edge("retail", "find user", "get orders");
    CHECK(crm_weight == Fraction(3, 5));
    CHECK(retail_weight == Fraction(1, 1));

    // The shipped table is exactly the analysis result, not a hand number.
    for (const auto& entry : defaults.speculation_table) {
        if (entry.trigger == "get_cases") CHECK(entry.weight == crm_weight);
        if (entry.trigger == "get_user_profile") CHECK(entry.weight == retail_weight);
    }
    CHECK(defaults.speculation_table.size() == 2);
}
