#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "agentsim/builtin.hpp"
#include "agentsim/env/fs_world.hpp"
#include "agentsim/env/table_worlds.hpp"

using namespace agentsim;

TEST_CASE("fs path resolution") {
    CHECK(FsWorld::resolve("/docs", "reports") == "/docs/reports");
    CHECK(FsWorld::resolve("/docs/reports", "..") == "/docs");
    CHECK(FsWorld::resolve("/a/b", "/x") == "/x");
    CHECK(FsWorld::resolve("/", "docs/reports") == "/docs/reports");
    CHECK(FsWorld::resolve("/docs", ".") == "/docs");
    CHECK(FsWorld::resolve("/", "..") == "/");
}

TEST_CASE("fs world: navigation, reads, and mutation faults") {
    auto world = make_world(builtin::fixture_for("file_system"));
    CHECK(world->workload() == "file_system");
    CHECK(world->agent_state()["working_directory"] == "/");

    world->invoke_tool("cd", json{{"path", "docs"}});
    CHECK(world->agent_state()["working_directory"] == "/docs");

    const json listing = world->invoke_tool("ls", json::object());
    REQUIRE(listing.contains("entries"));
    bool saw_reports = false;
    for (const auto& e : listing["entries"])
        if (e["name"] == "reports" && e["type"] == "dir") saw_reports = true;
    CHECK(saw_reports);

    const json read = world->invoke_tool("cat", json{{"path", "reports/q1_summary.md"}});
    CHECK(read["content"] == "Q1 revenue held flat at 2.1 million after the seasonal dip.");

    // Missing file faults; faults never change state.
    const std::string before = state_hash(*world);
    CHECK_THROWS_AS(world->invoke_tool("cat", json{{"path", "missing.md"}}), ToolFault);
    CHECK(state_hash(*world) == before);

    // Writing identical content is a no-effect fault; new content mutates.
    world->invoke_tool("cd", json{{"path", "/notes"}});
    world->invoke_tool("write_file", json{{"path", "out.txt"}, {"content", "x"}});
    const std::string after_write = state_hash(*world);
    CHECK(after_write != before);
    CHECK_THROWS_AS(world->invoke_tool("write_file", json{{"path", "out.txt"}, {"content", "x"}}),
                    ToolFault);
    CHECK(state_hash(*world) == after_write);
    world->invoke_tool("write_file", json{{"path", "out.txt"}, {"content", "y"}});
    CHECK(state_hash(*world) != after_write);
}

TEST_CASE("medical world: lookup, pagination probe, orders") {
    auto world = make_world(builtin::fixture_for("medical"));
    const json patient = world->invoke_tool("get_patient", json{{"name", "Maria Gonzalez"}});
    CHECK(patient["patient_id"] == "p-042");
    CHECK(patient["age"] == 67);
    CHECK_THROWS_AS(world->invoke_tool("get_patient", json{{"name", "Nobody"}}), ToolFault);

    const json page1 =
        world->invoke_tool("get_records", json{{"patient_id", "p-042"}, {"page", 1}});
    REQUIRE(page1["records"].is_array());
    CHECK(page1["records"].size() == 10);
    // Frozen pagination probe: 25 records total, 10 retrieved on page 1.
    const auto info =
        world->page_info("get_records", json{{"patient_id", "p-042"}, {"page", 1}});
    REQUIRE(info.has_value());
    CHECK(info->total == 25);
    CHECK(info->retrieved == 10);
    const json page3 =
        world->invoke_tool("get_records", json{{"patient_id", "p-042"}, {"page", 3}});
    CHECK(page3["records"].size() == 5);

    CHECK(world->invoke_tool("lookup_code", json{{"vital", "heart_rate"}})["code"] == "HR-8867");

    const json order = json{{"patient_id", "p-042"}, {"order_type", "review"}, {"value", 181}};
    const std::string before = state_hash(*world);
    world->invoke_tool("post_order", order);
    CHECK(state_hash(*world) != before);
    // Duplicate filing has no effect and faults.
    CHECK_THROWS_AS(world->invoke_tool("post_order", order), ToolFault);
}

TEST_CASE("crm world: filtering and averaging") {
    auto world = make_world(builtin::fixture_for("crm"));
    const json open_cases =
        world->invoke_tool("get_cases", json{{"assigned_to", "mei.lin"}, {"status", "open"}});
    REQUIRE(open_cases["cases"].is_array());
    CHECK(open_cases["cases"].size() == 8);

    const json all_cases = world->invoke_tool("get_cases", json::object());
    CHECK(all_cases["cases"].size() == 150);

    const json avg = world->invoke_tool("calculate_avg", json{{"values", json::array({2, 4, 6})}});
    CHECK(avg["average"] == 4.0);
    CHECK_THROWS_AS(world->invoke_tool("calculate_avg", json{{"values", json::array()}}),
                    ToolFault);

    const json ship = world->invoke_tool("get_shipping_state", json{{"case_id", "C-1030"}});
    CHECK(ship["case_id"] == "C-1030");
    world->invoke_tool("update_case", json{{"case_id", "C-1030"}, {"status", "closed"}});
    // Setting the same status again is a no-effect fault.
    CHECK_THROWS_AS(
        world->invoke_tool("update_case", json{{"case_id", "C-1030"}, {"status", "closed"}}),
        ToolFault);
}

TEST_CASE("retail world: catalog pagination and order mutations") {
    auto world = make_world(builtin::fixture_for("retail"));
    const json profile =
        world->invoke_tool("get_user_profile", json{{"email", "dana@example.com"}});
    CHECK(profile["user_id"] == "u-301");
    const json orders = world->invoke_tool("get_user_orders", json{{"user_id", "u-301"}});
    CHECK(orders["orders"].size() == 3);
    for (const auto& o : orders["orders"]) CHECK(!o.contains("items"));  // summaries only

    const json page1 = world->invoke_tool("list_products", json{{"category", "electronics"}});
    CHECK(page1["products"].size() == 10);
    const json page2 =
        world->invoke_tool("list_products", json{{"category", "electronics"}, {"page", 2}});
    CHECK(page2["products"].size() == 7);
    CHECK_THROWS_AS(world->invoke_tool("list_products", json{{"category", "nope"}}), ToolFault);

    // Worlds execute mutations mechanically; domain rules live in the rule
    // engine, not the world. Returning from a shipped order executes.
    const std::string before = state_hash(*world);
    world->invoke_tool("return_item", json{{"order_id", "o-9002"}, {"item_id", "i-3"}});
    CHECK(state_hash(*world) != before);
    CHECK_THROWS_AS(
        world->invoke_tool("return_item", json{{"order_id", "o-9002"}, {"item_id", "i-3"}}),
        ToolFault);  // already returned

    world->invoke_tool("cancel_order", json{{"order_id", "o-9001"}});
    CHECK_THROWS_AS(world->invoke_tool("cancel_order", json{{"order_id", "o-9001"}}), ToolFault);
}

TEST_CASE("airline rules: forbids, permits, and joins") {
    auto world = make_world(builtin::fixture_for("airline"));
    const RuleSet& rules = world->rules();
    const auto view = world->store_view();

    // Basic economy is locked for a silver member...
    RuleDecision d = rules.check("modify_reservation",
                                 json{{"reservation_id", "r-704"}, {"new_flight_id", "F-88"}},
                                 view);
    CHECK(d.rejected);
    CHECK(d.rule == "no_basic_economy_changes");

    // ...but the gold permit overrides the forbid (user.membership join).
    d = rules.check("modify_reservation",
                    json{{"reservation_id", "r-702"}, {"new_flight_id", "F-72"}}, view);
    CHECK(!d.rejected);

    // Stale reservations are locked regardless of cabin.
    d = rules.check("modify_reservation",
                    json{{"reservation_id", "r-707"}, {"new_flight_id", "F-75"}}, view);
    CHECK(d.rejected);
    CHECK(d.rule == "no_stale_modifications");

    // Cancelled reservations cannot be cancelled again.
    d = rules.check("cancel_reservation", json{{"reservation_id", "r-706"}}, view);
    CHECK(d.rejected);
    CHECK(d.rule == "no_cancel_cancelled");

    // An untouched active reservation passes.
    d = rules.check("cancel_reservation", json{{"reservation_id", "r-708"}}, view);
    CHECK(!d.rejected);

    // The world itself executes a rule-forbidden mutation without complaint.
    const json moved = world->invoke_tool(
        "modify_reservation", json{{"reservation_id", "r-704"}, {"new_flight_id", "F-88"}});
    CHECK(moved["flight_id"] == "F-88");
}

TEST_CASE("airline world: search and modification faults") {
    auto world = make_world(builtin::fixture_for("airline"));
    const json flights =
        world->invoke_tool("search_direct_flight", json{{"origin", "SFO"}, {"destination", "JFK"}});
    CHECK(flights["flights"].size() == 3);
    // Moving onto the currently booked flight has no effect.
    CHECK_THROWS_AS(world->invoke_tool("modify_reservation", json{{"reservation_id", "r-701"},
                                                                  {"new_flight_id", "F-90"}}),
                    ToolFault);
    // Unknown flights fault.
    CHECK_THROWS_AS(world->invoke_tool("modify_reservation", json{{"reservation_id", "r-701"},
                                                                  {"new_flight_id", "F-999"}}),
                    ToolFault);
}

TEST_CASE("argument validation surfaces as error payloads through sessions") {
    auto world = make_world(builtin::fixture_for("medical"));
    Session session(*world, "args", Budget{});
    const Turn& turn =
        session.add_agent_turn("bad call", {ToolCall{"get_patient", json::object(), ""}});
    REQUIRE(turn.responses.size() == 1);
    CHECK(turn.responses[0].is_error);
    CHECK(turn.responses[0].payload["error"].get<std::string>().find("name") !=
          std::string::npos);
}

TEST_CASE("canonical state and hashing are deterministic") {
    for (const auto& wl : builtin::workloads()) {
        auto a = make_world(builtin::fixture_for(wl));
        auto b = make_world(builtin::fixture_for(wl));
        CHECK(a->canonical_state() == b->canonical_state());
        CHECK(state_hash(*a) == state_hash(*b));
    }
}

TEST_CASE("fixtures round trip through json") {
    for (const auto& wl : builtin::workloads()) {
        const ScenarioFixture& f = builtin::fixture_for(wl);
        const ScenarioFixture back = ScenarioFixture::from_json(f.to_json());
        CHECK(back.to_json() == f.to_json());
    }
}
