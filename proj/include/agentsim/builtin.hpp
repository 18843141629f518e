#pragma once

// Built-in benchmark suite: five workload fixtures, their subtask maps, and
// fifty scripted tasks each (thirty analysis + twenty evaluation). Expected
// executions are derived, not hand-written: every task is run once by the
// oracle policy against a fresh world, and the reference calls, final-state
// hash, and critical-context items are taken from that run. Construction
// fails loudly if the oracle run would not evaluate as a success.

#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "agentsim/classify.hpp"
#include "agentsim/env/session.hpp"
#include "agentsim/env/table_worlds.hpp"
#include "agentsim/expected.hpp"
#include "agentsim/middleware.hpp"
#include "agentsim/policy.hpp"
#include "agentsim/subtask.hpp"

namespace agentsim::builtin {

namespace detail {

inline ScriptStep msg(std::string text) {
    ScriptStep s;
    s.kind = "message";
    s.text = std::move(text);
    return s;
}

inline ScriptStep call(std::string text, std::string tool, json args) {
    ScriptStep s;
    s.kind = "call";
    s.text = std::move(text);
    s.tool = std::move(tool);
    s.args = std::move(args);
    return s;
}

inline ScriptStep paginate(std::string text, std::string tool, json args, std::string list_key) {
    ScriptStep s = call(std::move(text), std::move(tool), std::move(args));
    s.kind = "paginate";
    s.list_key = std::move(list_key);
    return s;
}

// {"$from": {...}} derivation markers understood by ScriptedAgent.
inline json from_copy(const std::string& tool, const std::string& path) {
    return json{{"$from", json{{"tool", tool}, {"op", "copy"}, {"path", path}}}};
}

inline json from_spec(json spec) { return json{{"$from", std::move(spec)}}; }

// A task script plus the metadata needed to derive its expectation.
struct TaskSeed {
    TaskDef def;
    std::map<std::string, std::vector<ComputeRecipe>> recipes;  // tool -> recipes
    std::vector<CriticalContextItem> critical;
};

inline ComputeRecipe recipe(std::string arg, std::string op, std::string from_tool,
                            std::string list_path, std::string field, std::string value_field,
                            std::string subtask) {
    ComputeRecipe r;
    r.arg = std::move(arg);
    r.op = std::move(op);
    r.from_tool = std::move(from_tool);
    r.list_path = std::move(list_path);
    r.field = std::move(field);
    r.value_field = std::move(value_field);
    r.subtask = std::move(subtask);
    return r;
}

// Runs the oracle once and freezes the reference calls, recipes, critical
// context, and final-state hash. Throws when the oracle run itself would not
// evaluate as a success; a fixture or script typo surfaces immediately.
inline void derive_expected(TaskSeed& seed, const ScenarioFixture& fixture,
                            const SubtaskMap& map) {
    auto world = make_world(fixture, 0);
    Session session(*world, seed.def.task_id, Budget{});
    ScriptedAgent agent(session, nullptr, AgentPolicy::oracle(), 0);
    agent.run(seed.def);
    if (session.terminated())
        throw ConfigError("oracle run exhausted the budget for task " + seed.def.task_id);
    session.finalize(Outcome::success);
    Trace trace = session.take_trace();

    ExpectedExecution exp;
    exp.task_id = seed.def.task_id;
    for (const auto& site : collect_calls(trace)) {
        ReferenceCall ref;
        ref.tool_name = site.call->tool_name;
        for (const auto& [key, value] : site.call->arguments.items()) {
            ArgCondition cond;
            cond.kind = ArgCondition::Kind::exact;
            cond.value = value;
            ref.matcher.conditions[key] = std::move(cond);
        }
        auto it = seed.recipes.find(ref.tool_name);
        if (it != seed.recipes.end())
            for (const auto& r : it->second)
                if (site.call->arguments.contains(r.arg)) ref.computed.push_back(r);
        exp.reference_calls.push_back(std::move(ref));
    }
    exp.expected_final_state_hash = trace.final_state_hash;
    exp.critical_context = seed.critical;
    seed.def.expected = std::move(exp);

    if (evaluate_task(trace, seed.def.expected, map) != Outcome::success)
        throw ConfigError("oracle run does not satisfy its own expectation for task " +
                          seed.def.task_id);
    if (!missing_context_items(trace, seed.def.expected).empty())
        throw ConfigError("critical context item never surfaces in the oracle run of task " +
                          seed.def.task_id);
}

// Assigns sequential ids (<prefix>-001 ...), marks sets, derives expectations.
inline std::vector<TaskDef> finish(const std::string& prefix, const ScenarioFixture& fixture,
                                   const SubtaskMap& map, std::vector<TaskSeed> analysis,
                                   std::vector<TaskSeed> evaluation) {
    std::vector<TaskDef> out;
    int n = 0;
    auto emit = [&](std::vector<TaskSeed>& seeds, const std::string& set_name) {
        for (auto& seed : seeds) {
            ++n;
            char id[16];
            std::snprintf(id, sizeof(id), "%s-%03d", prefix.c_str(), n);
            seed.def.task_id = id;
            seed.def.workload = fixture.workload;
            seed.def.set_name = set_name;
            derive_expected(seed, fixture, map);
            out.push_back(std::move(seed.def));
        }
    };
    emit(analysis, "analysis");
    emit(evaluation, "evaluation");
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// file_system
// ---------------------------------------------------------------------------

inline ScenarioFixture make_fs_fixture() {
    ScenarioFixture f;
    f.workload = "file_system";
    f.data["tree"] = json{
        {"docs",
         {{"reports",
           {{"q1_summary.md", "Q1 revenue held flat at 2.1 million after the seasonal dip."},
            {"q2_summary.md", "Q2 revenue rose 5 percent on refreshed bundle pricing."},
            {"q3_summary.md", "Q3 revenue grew 14 percent driven by the new enterprise tier."}}},
          {"specs",
           {{"parser_spec.md", "The parser must reject unpaired surrogates and oversize frames."},
            {"cache_spec.md", "Cache entries expire after 600 seconds of inactivity."}}},
          {"readme.md", "Project documentation lives here."}}},
        {"projects",
         {{"alpha",
           {{"notes.md", "Alpha milestone: ship the importer by June."},
            {"todo.md", "Profile the importer hot path before the freeze."}}},
          {"beta",
           {{"notes.md", "Beta aims to cut memory usage in half."},
            {"status.md", "Blocked on the storage driver review."}}},
          {"gamma", {{"notes.md", "Gamma will prototype the scheduler rewrite."}}}}},
        {"archive",
         {{"2023", {{"old_report.md", "Archived 2023 figures: revenue 1.4 million."}}},
          {"2024", {{"old_report.md", "Archived 2024 figures: revenue 1.9 million."}}}}},
        {"notes", {{"welcome.txt", "Scratch space for working notes."}}},
        {"readme.md", "Top-level readme: see docs for details."}};
    return f;
}

inline SubtaskMap make_fs_map() {
    SubtaskMap m;
    m.workload = "file_system";
    m.tool_rules = {{"ls", "list directory"},        {"cd", "navigate directory"},
                    {"pwd", "check location"},       {"cat", "read file"},
                    {"mkdir", "create directory"},   {"write_file", "write file"},
                    {"cp", "copy file"},             {"mv", "move file"},
                    {"rm", "remove file"},           {"submit_answer", "report answer"}};
    m.kinds = {{"list directory", SubtaskKind::exploration},
               {"navigate directory", SubtaskKind::exploration},
               {"check location", SubtaskKind::exploration},
               {"read file", SubtaskKind::exploration},
               {"create directory", SubtaskKind::exploitation},
               {"write file", SubtaskKind::exploitation},
               {"copy file", SubtaskKind::exploitation},
               {"move file", SubtaskKind::exploitation},
               {"remove file", SubtaskKind::exploitation},
               {"report answer", SubtaskKind::exploitation}};
    m.dependencies = {{"list directory", "navigate directory"},
                      {"navigate directory", "read file"},
                      {"read file", "write file"},
                      {"read file", "report answer"}};
    m.mutating_tools = {"mkdir", "write_file", "cp", "mv", "rm"};
    m.validate();
    return m;
}

namespace detail {

struct FsRow {
    std::string d1, d2, file, marker, wrong;
};

inline const std::vector<FsRow>& fs_rows() {
    static const std::vector<FsRow> rows{
        {"docs", "reports", "q1_summary.md", "held flat at 2.1 million", "projects"},
        {"docs", "reports", "q2_summary.md", "rose 5 percent", "archive"},
        {"docs", "reports", "q3_summary.md", "grew 14 percent", "projects"},
        {"docs", "specs", "parser_spec.md", "unpaired surrogates", "archive"},
        {"docs", "specs", "cache_spec.md", "600 seconds of inactivity", "projects"},
        {"projects", "alpha", "notes.md", "ship the importer by June", "archive"},
        {"projects", "alpha", "todo.md", "importer hot path", "docs"},
        {"projects", "beta", "notes.md", "memory usage in half", "archive"},
        {"projects", "beta", "status.md", "storage driver review", "docs"},
        {"projects", "gamma", "notes.md", "prototype the scheduler", "archive"},
        {"archive", "2023", "old_report.md", "revenue 1.4 million", "projects"},
        {"archive", "2024", "old_report.md", "revenue 1.9 million", "docs"}};
    return rows;
}

// Detour shape: a wrong turn at the first cd leaves every later step stranded.
inline TaskSeed fs_detour_seed(const FsRow& row, const std::string& out_name) {
    TaskSeed seed;
    seed.def.description = "Copy the contents of " + row.d1 + "/" + row.d2 + "/" + row.file +
                           " into /notes/" + out_name + " and report the text you copied.";
    ScriptStep enter = call("Heading into " + row.d1 + ".", "cd", json{{"path", row.d1}});
    enter.knob = "navigation";
    enter.faulty = json{{"alt_args", json{{"path", row.wrong}}}};
    seed.def.steps = {
        call("Taking stock of the top-level layout.", "ls", json::object()),
        enter,
        call("Descending into " + row.d2 + ".", "cd", json{{"path", row.d2}}),
        call("Reading " + row.file + ".", "cat", json{{"path", row.file}}),
        call("Copying the text into the notes area.", "write_file",
             json{{"path", "/notes/" + out_name}, {"content", from_copy("cat", "content")}}),
        call("Reporting the file contents.", "submit_answer",
             json{{"answer", from_copy("cat", "content")}})};
    seed.critical.push_back({row.marker, "navigate directory"});
    return seed;
}

// Stale-path shape: after a second cd the agent may reuse a path that was
// only valid from the previous working directory.
inline TaskSeed fs_stale_seed(const FsRow& row, const std::string& out_name) {
    TaskSeed seed;
    seed.def.description = "Work down to " + row.d1 + "/" + row.d2 + ", copy " + row.file +
                           " into /notes/" + out_name + ", and report its contents.";
    ScriptStep read = call("Opening " + row.file + ".", "cat", json{{"path", row.file}});
    read.knob = "state";
    read.faulty = json{{"alt_args", json{{"path", row.d2 + "/" + row.file}}}};
    seed.def.steps = {
        call("Entering " + row.d1 + ".", "cd", json{{"path", row.d1}}),
        call("Listing what lives here.", "ls", json::object()),
        call("Moving into " + row.d2 + ".", "cd", json{{"path", row.d2}}),
        read,
        call("Saving a copy.", "write_file",
             json{{"path", "/notes/" + out_name}, {"content", from_copy("cat", "content")}}),
        call("Reporting back.", "submit_answer", json{{"answer", from_copy("cat", "content")}})};
    return seed;
}

// Knob-free filler: one compound cd, read, report.
inline TaskSeed fs_read_seed(const FsRow& row) {
    TaskSeed seed;
    seed.def.description = "Read " + row.d1 + "/" + row.d2 + "/" + row.file +
                           " and report exactly what it says.";
    seed.def.steps = {
        call("Going straight to " + row.d1 + "/" + row.d2 + ".", "cd",
             json{{"path", row.d1 + "/" + row.d2}}),
        call("Reading " + row.file + ".", "cat", json{{"path", row.file}}),
        call("Reporting the contents.", "submit_answer",
             json{{"answer", from_copy("cat", "content")}})};
    return seed;
}

}  // namespace detail

inline std::vector<TaskDef> make_fs_tasks(const ScenarioFixture& fixture, const SubtaskMap& map) {
    using namespace detail;
    std::vector<TaskSeed> analysis, evaluation;
    const auto& rows = fs_rows();
    for (std::size_t i = 0; i < 12; ++i)
        analysis.push_back(fs_detour_seed(rows[i], "a_copy_" + std::to_string(i + 1) + ".txt"));
    for (std::size_t i = 0; i < 12; ++i)
        analysis.push_back(fs_stale_seed(rows[i], "b_copy_" + std::to_string(i + 1) + ".txt"));
    for (std::size_t i : {0u, 2u, 4u, 6u, 8u, 10u}) analysis.push_back(fs_read_seed(rows[i]));

    for (std::size_t i = 0; i < 8; ++i)
        evaluation.push_back(fs_detour_seed(rows[i], "a_eval_" + std::to_string(i + 1) + ".txt"));
    for (std::size_t i = 4; i < 12; ++i)
        evaluation.push_back(fs_stale_seed(rows[i], "b_eval_" + std::to_string(i + 1) + ".txt"));
    for (std::size_t i : {1u, 3u, 5u, 7u}) evaluation.push_back(fs_read_seed(rows[i]));

    return finish("fs", fixture, map, std::move(analysis), std::move(evaluation));
}

// ---------------------------------------------------------------------------
// medical
// ---------------------------------------------------------------------------

inline ScenarioFixture make_medical_fixture() {
    ScenarioFixture f;
    f.workload = "medical";
    json patients = json::array();
    patients.push_back(json{{"patient_id", "p-042"}, {"name", "Maria Gonzalez"}, {"age", 67}});
    patients.push_back(json{{"patient_id", "p-107"}, {"name", "James Okafor"}, {"age", 54}});
    patients.push_back(json{{"patient_id", "p-233"}, {"name", "Lena Fischer"}, {"age", 71}});

    json records = json::array();
    auto add_series = [&](const std::string& pid, const std::vector<int>& values) {
        for (std::size_t i = 0; i < values.size(); ++i)
            records.push_back(json{{"patient_id", pid},
                                   {"type", "heart_rate"},
                                   {"timestamp_hours", static_cast<int>(2 * i + 1)},
                                   {"value", values[i]}});
    };
    add_series("p-042", {84, 88, 91, 76, 102, 95, 110, 89, 97, 118, 105, 92, 87,
                         99, 93, 166, 101, 96, 90, 178, 108, 181, 94, 86, 100});
    add_series("p-107", {95, 102, 88, 110, 79, 99, 91, 104, 86, 93, 108, 149, 97});
    add_series("p-233", {101, 94, 112, 89, 107, 98, 121, 90, 103, 96, 115, 173, 109,
                         99, 92, 169, 106});

    f.data["stores"] = json{{"patients", patients}, {"records", records}, {"orders", json::array()}};
    f.data["params"] = json{{"page_size", 10},
                            {"codes", json{{"heart_rate", "HR-8867"},
                                           {"blood_pressure", "BP-4410"},
                                           {"temperature", "TMP-2205"},
                                           {"spo2", "OX-1180"}}}};
    return f;
}

inline SubtaskMap make_medical_map() {
    SubtaskMap m;
    m.workload = "medical";
    m.tool_rules = {{"get_patient", "find patient"},
                    {"get_records", "get patient vital data"},
                    {"lookup_code", "find vital code"},
                    {"post_order", "file order"},
                    {"submit_answer", "report answer"}};
    m.kinds = {{"find patient", SubtaskKind::exploration},
               {"get patient vital data", SubtaskKind::exploration},
               {"find vital code", SubtaskKind::exploration},
               {"file order", SubtaskKind::exploitation},
               {"report answer", SubtaskKind::exploitation}};
    m.dependencies = {{"find patient", "get patient vital data"},
                      {"get patient vital data", "file order"},
                      {"find vital code", "file order"},
                      {"get patient vital data", "report answer"}};
    m.mutating_tools = {"post_order"};
    m.validate();
    return m;
}

namespace detail {

struct MedPatient {
    std::string name, id, peak_marker;
};

inline const std::vector<MedPatient>& med_patients() {
    static const std::vector<MedPatient> p{
        {"Maria Gonzalez", "p-042", "\"value\":181"},
        {"James Okafor", "p-107", "\"value\":149"},
        {"Lena Fischer", "p-233", "\"value\":173"}};
    return p;
}

// Peak / mean shapes: paginate the records, file an order carrying the
// aggregate, report the filed value.
inline TaskSeed med_order_seed(const MedPatient& p, const std::string& order_type,
                               const std::string& op) {
    TaskSeed seed;
    const std::string what = op == "max_by" ? "highest" : "average";
    seed.def.description = "File a " + order_type + " for " + p.name +
                           " carrying the " + what +
                           " heart-rate reading on record, then report the filed value.";
    ScriptStep pages = paginate("Collecting the heart-rate history.", "get_records",
                                json{{"patient_id", from_copy("get_patient", "patient_id")}},
                                "records");
    pages.knob = "navigation";
    json derive_spec{{"tool", "get_records"}, {"op", op}, {"path", "records"},
                     {"by", "value"}, {"all_pages", true}, {"corrupt", true}};
    if (op == "max_by") derive_spec["take"] = "value";
    ScriptStep file = call("Filing the " + order_type + " with the computed reading.",
                           "post_order",
                           json{{"patient_id", from_copy("get_patient", "patient_id")},
                                {"order_type", order_type},
                                {"value", from_spec(derive_spec)}});
    file.knob = "compute";
    seed.def.steps = {
        call("Finding the patient record.", "get_patient", json{{"name", p.name}}),
        pages,
        call("Resolving the monitoring code.", "lookup_code", json{{"vital", "heart_rate"}}),
        file,
        call("Reporting the filed value.", "submit_answer",
             json{{"value", from_copy("post_order", "filed.value")}})};
    seed.recipes["post_order"].push_back(recipe("value", op == "max_by" ? "max" : "mean",
                                                "get_records", "records", "value", "",
                                                "get patient vital data"));
    seed.critical.push_back({p.peak_marker, "get patient vital data"});
    return seed;
}

// Count shape: no mutation; the answer is a threshold count over all pages.
inline TaskSeed med_count_seed(const MedPatient& p, int threshold) {
    TaskSeed seed;
    seed.def.description = "Count how many of " + p.name + "'s heart-rate readings exceed " +
                           std::to_string(threshold) + " and report that count.";
    ScriptStep pages = paginate("Collecting the heart-rate history.", "get_records",
                                json{{"patient_id", from_copy("get_patient", "patient_id")}},
                                "records");
    pages.knob = "navigation";
    ScriptStep report = call(
        "Reporting the number of readings above " + std::to_string(threshold) + ".",
        "submit_answer",
        json{{"value", from_spec(json{{"tool", "get_records"}, {"op", "filter_count"},
                                      {"path", "records"}, {"field", "value"},
                                      {"cmp", "gt"}, {"value", threshold},
                                      {"all_pages", true}, {"corrupt", true}})}});
    report.knob = "compute";
    seed.def.steps = {
        call("Finding the patient record.", "get_patient", json{{"name", p.name}}),
        pages,
        report};
    ComputeRecipe r = recipe("value", "filter_count", "get_records", "records", "value", "",
                             "get patient vital data");
    r.threshold = json{{"field", "value"}, {"op", "gt"}, {"value", threshold}};
    seed.recipes["submit_answer"].push_back(std::move(r));
    seed.critical.push_back({p.peak_marker, "get patient vital data"});
    return seed;
}

}  // namespace detail

inline std::vector<TaskDef> make_medical_tasks(const ScenarioFixture& fixture,
                                               const SubtaskMap& map) {
    using namespace detail;
    std::vector<TaskSeed> analysis, evaluation;
    const auto& pts = med_patients();

    for (const auto& p : pts)
        for (const std::string& ot :
             {"cardiology_review", "telemetry_check", "rhythm_panel", "vitals_audit"})
            analysis.push_back(med_order_seed(p, ot, "max_by"));
    for (const auto& p : pts)
        for (const std::string& ot : {"baseline_mean_log", "weekly_mean_log"})
            analysis.push_back(med_order_seed(p, ot, "mean"));
    const std::vector<std::vector<int>> count_analysis{{150, 100, 90, 105},
                                                       {140, 100, 90, 95},
                                                       {160, 110, 100, 95}};
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (int th : count_analysis[i]) analysis.push_back(med_count_seed(pts[i], th));

    for (const auto& p : pts)
        for (const std::string& ot : {"follow_up_review", "remote_monitoring"})
            evaluation.push_back(med_order_seed(p, ot, "max_by"));
    evaluation.push_back(med_order_seed(pts[0], "discharge_check", "max_by"));
    evaluation.push_back(med_order_seed(pts[1], "discharge_check", "max_by"));
    for (const auto& p : pts) evaluation.push_back(med_order_seed(p, "monthly_mean_log", "mean"));
    evaluation.push_back(med_order_seed(pts[0], "quarterly_mean_log", "mean"));
    const std::vector<std::vector<int>> count_eval{{95, 115}, {105, 85}, {120, 105, 90, 93}};
    for (std::size_t i = 0; i < pts.size(); ++i)
        for (int th : count_eval[i]) evaluation.push_back(med_count_seed(pts[i], th));

    return finish("med", fixture, map, std::move(analysis), std::move(evaluation));
}

// ---------------------------------------------------------------------------
// retail
// ---------------------------------------------------------------------------

inline ScenarioFixture make_retail_fixture() {
    ScenarioFixture f;
    f.workload = "retail";
    json users = json::array();
    auto user = [&](const std::string& id, const std::string& email, const std::string& name,
                    const std::string& membership) {
        users.push_back(json{{"user_id", id}, {"email", email}, {"name", name},
                             {"membership", membership}});
    };
    user("u-301", "dana@example.com", "Dana Whitfield", "standard");
    user("u-302", "omar@example.com", "Omar Haddad", "gold");
    user("u-303", "lucia@example.com", "Lucia Torres", "standard");
    user("u-304", "ken@example.com", "Ken Watanabe", "silver");

    json orders = json::array();
    auto order = [&](const std::string& oid, const std::string& uid, const std::string& status,
                     std::vector<std::pair<std::string, std::pair<std::string, int>>> items) {
        json jitems = json::array();
        for (const auto& [iid, pq] : items)
            jitems.push_back(json{{"item_id", iid}, {"product_id", pq.first},
                                  {"quantity", pq.second}});
        orders.push_back(json{{"order_id", oid}, {"user_id", uid}, {"status", status},
                              {"items", jitems}});
    };
    order("o-9001", "u-301", "pending", {{"i-1", {"p-201", 1}}, {"i-2", {"p-205", 2}}});
    order("o-9002", "u-301", "shipped", {{"i-3", {"p-206", 1}}});
    order("o-9003", "u-301", "delivered", {{"i-7", {"p-209", 1}}, {"i-8", {"p-203", 1}}});
    order("o-9004", "u-302", "pending", {{"i-4", {"p-211", 1}}});
    order("o-9005", "u-302", "delivered", {{"i-5", {"p-218", 2}}});
    order("o-9006", "u-302", "shipped", {{"i-6", {"p-220", 1}}});
    order("o-9007", "u-303", "pending", {{"i-9", {"p-212", 1}}});
    order("o-9008", "u-303", "shipped", {{"i-10", {"p-221", 1}}});
    order("o-9009", "u-304", "pending", {{"i-11", {"p-224", 2}}});
    order("o-9010", "u-304", "delivered", {{"i-12", {"p-217", 1}}});

    json products = json::array();
    auto product = [&](const std::string& pid, const std::string& name, const std::string& cat,
                       double price) {
        products.push_back(json{{"product_id", pid}, {"name", name}, {"category", cat},
                                {"price", price}});
    };
    product("p-201", "USB-C Hub", "electronics", 39.99);
    product("p-202", "Wireless Mouse", "electronics", 24.5);
    product("p-203", "Mechanical Keyboard", "electronics", 89.0);
    product("p-204", "Webcam Stand", "electronics", 18.75);
    product("p-205", "Noise-Cancelling Earbuds", "electronics", 129.99);
    product("p-206", "Portable SSD 1TB", "electronics", 99.5);
    product("p-207", "Phone Dock", "electronics", 22.0);
    product("p-208", "Smart Bulb Pair", "electronics", 31.2);
    product("p-209", "Bluetooth Speaker", "electronics", 55.0);
    product("p-210", "Fitness Tracker", "electronics", 74.25);
    product("p-211", "Action Camera", "electronics", 149.0);
    product("p-212", "E-Reader", "electronics", 119.99);
    product("p-213", "Drawing Tablet", "electronics", 209.0);
    product("p-214", "Mini Projector", "electronics", 189.5);
    product("p-215", "Solar Charger", "electronics", 42.8);
    product("p-216", "Game Controller", "electronics", 48.99);
    product("p-217", "Laptop Sleeve", "electronics", 19.95);
    product("p-218", "Ceramic Mug Set", "home", 27.5);
    product("p-219", "Desk Lamp", "home", 45.0);
    product("p-220", "Throw Blanket", "home", 38.25);
    product("p-221", "Air Purifier", "home", 159.0);
    product("p-222", "French Press", "home", 34.9);
    product("p-223", "Wall Clock", "home", 21.75);
    product("p-224", "Spice Rack", "home", 26.4);
    product("p-225", "Robot Vacuum", "home", 249.99);

    f.data["stores"] = json{{"users", users}, {"orders", orders}, {"products", products}};
    f.data["params"] = json{{"page_size", 10}};
    f.data["rules"] = json::array(
        {json{{"name", "cancel_requires_pending"},
              {"applies_to", "cancel_order"},
              {"effect", "forbid"},
              {"message", "only pending orders may be cancelled"},
              {"entity", json{{"store", "orders"}, {"id_arg", "order_id"},
                              {"id_field", "order_id"}}},
              {"when", json{{"field", "status"}, {"op", "ne"}, {"value", "pending"}}}},
         json{{"name", "return_requires_delivered"},
              {"applies_to", "return_item"},
              {"effect", "forbid"},
              {"message", "only delivered orders accept returns"},
              {"entity", json{{"store", "orders"}, {"id_arg", "order_id"},
                              {"id_field", "order_id"}}},
              {"when", json{{"field", "status"}, {"op", "ne"}, {"value", "delivered"}}}}});
    return f;
}

inline SubtaskMap make_retail_map() {
    SubtaskMap m;
    m.workload = "retail";
    m.tool_rules = {{"get_user_profile", "find user"},
                    {"get_user_orders", "get orders"},
                    {"get_order_details", "review order"},
                    {"list_products", "browse products"},
                    {"return_item", "return item"},
                    {"exchange_item", "exchange item"},
                    {"cancel_order", "cancel order"},
                    {"submit_answer", "report answer"}};
    m.kinds = {{"find user", SubtaskKind::exploration},
               {"get orders", SubtaskKind::exploration},
               {"review order", SubtaskKind::exploration},
               {"browse products", SubtaskKind::exploration},
               {"filter product items", SubtaskKind::exploitation},
               {"return item", SubtaskKind::exploitation},
               {"exchange item", SubtaskKind::exploitation},
               {"cancel order", SubtaskKind::exploitation},
               {"report answer", SubtaskKind::exploitation}};
    DecompositionRule split;
    split.tool_name = "list_products";
    split.children = {"browse products", "filter product items"};
    split.when.spec = json{{"field", "category"}, {"op", "exists"}};
    m.decomposition_rules.push_back(split);
    m.dependencies = {{"find user", "get orders"},
                      {"get orders", "review order"},
                      {"get orders", "cancel order"},
                      {"review order", "return item"},
                      {"review order", "exchange item"},
                      {"browse products", "filter product items"},
                      {"filter product items", "report answer"}};
    m.mutating_tools = {"return_item", "exchange_item", "cancel_order"};
    m.validate();
    return m;
}

namespace detail {

// Count shape: browse the paginated catalog, report a price-threshold count.
inline TaskSeed retail_count_seed(const std::string& email, int threshold,
                                  const std::string& page2_item) {
    TaskSeed seed;
    seed.def.description = "For the account " + email +
                           ", count the electronics items priced under $" +
                           std::to_string(threshold) + " and report that count.";
    ScriptStep pages = paginate("Scanning the electronics catalog.", "list_products",
                                json{{"category", "electronics"}}, "products");
    pages.knob = "navigation";
    ScriptStep report = call("Reporting the count under $" + std::to_string(threshold) + ".",
                             "submit_answer",
                             json{{"value", from_spec(json{{"tool", "list_products"},
                                                           {"op", "filter_count"},
                                                           {"path", "products"},
                                                           {"field", "price"},
                                                           {"cmp", "lt"},
                                                           {"value", threshold},
                                                           {"all_pages", true},
                                                           {"corrupt", true}})}});
    report.knob = "compute";
    seed.def.steps = {
        call("Pulling up the account.", "get_user_profile", json{{"email", email}}),
        call("Reviewing the order history.", "get_user_orders",
             json{{"user_id", from_copy("get_user_profile", "user_id")}}),
        pages,
        report};
    ComputeRecipe r = recipe("value", "filter_count", "list_products", "products", "price", "",
                             "filter product items");
    r.threshold = json{{"field", "price"}, {"op", "lt"}, {"value", threshold}};
    seed.recipes["submit_answer"].push_back(std::move(r));
    seed.critical.push_back({"\"name\":\"" + page2_item + "\"", "filter product items"});
    return seed;
}

// Rule shape: one permitted mutation; the rule channel can replace it with a
// forbidden target or refuse it outright.
inline TaskSeed retail_rule_seed(const std::string& email, const std::string& tool, json args,
                                 json faulty, const std::string& what) {
    TaskSeed seed;
    seed.def.description = "For the account " + email + ", " + what + " and confirm once done.";
    ScriptStep act = call("Processing the " + std::string(tool == "cancel_order" ? "cancellation" : "return") + ".",
                          tool, std::move(args));
    act.knob = "rule";
    act.faulty = std::move(faulty);
    seed.def.steps = {
        call("Pulling up the account.", "get_user_profile", json{{"email", email}}),
        call("Reviewing the order history.", "get_user_orders",
             json{{"user_id", from_copy("get_user_profile", "user_id")}}),
        act,
        call("Confirming the request was handled.", "submit_answer", json{{"answer", "done"}})};
    return seed;
}

inline json refusal(const std::string& text) {
    return json{{"mode", "refusal"}, {"text", text}};
}

inline json attempt(json alt_args) {
    return json{{"mode", "forbidden_attempt"}, {"alt_args", std::move(alt_args)}};
}

// Verbose shape: a long multi-order review. Two chatty affordances; with both
// firing the base run needs 21 turns and dies on the turn budget, while a
// speculative prefetch of the order list keeps the optimized run at 20.
inline TaskSeed retail_verbose_seed(const std::string& label) {
    TaskSeed seed;
    seed.def.description = "Run the full account review " + label +
                           " for dana@example.com: inspect every order, check the electronics "
                           "catalog, return item i-7 from o-9003, exchange item i-8 for p-202, "
                           "and finish with a summary.";
    ScriptStep orders = call("Fetching every order on file.", "get_user_orders",
                             json{{"user_id", from_copy("get_user_profile", "user_id")}});
    orders.verbose_affordance = true;
    orders.verbosity = json{
        {"chat_text", "Before I pull the orders: the account looks active and in good standing, "
                      "and I will double-check each order one at a time to be thorough."},
        {"reply_text", "Thanks, go ahead."}};
    ScriptStep ret = call("Processing the return of i-7.", "return_item",
                          json{{"order_id", "o-9003"}, {"item_id", "i-7"}});
    ret.verbose_affordance = true;
    ret.verbosity = json{
        {"chat_text", "Quick note before the return: the delivered order qualifies under the "
                      "return window, and the refund will post to the original payment method."},
        {"reply_text", "Understood, continue."}};
    seed.def.steps = {
        call("Opening the account for a full review.", "get_user_profile",
             json{{"email", "dana@example.com"}}),
        orders,
        call("Inspecting o-9001.", "get_order_details", json{{"order_id", "o-9001"}}),
        call("Inspecting o-9002.", "get_order_details", json{{"order_id", "o-9002"}}),
        call("Inspecting o-9003.", "get_order_details", json{{"order_id", "o-9003"}}),
        msg("Now look through the electronics catalog so we know the current lineup."),
        paginate("Scanning the catalog.", "list_products", json{{"category", "electronics"}},
                 "products"),
        ret,
        call("Refreshing the order list.", "get_user_orders",
             json{{"user_id", from_copy("get_user_profile", "user_id")}}),
        call("Verifying the returned item.", "get_order_details", json{{"order_id", "o-9003"}}),
        msg("Please also swap the keyboard in that order for the wireless mouse."),
        call("Exchanging i-8 for p-202.", "exchange_item",
             json{{"order_id", "o-9003"}, {"item_id", "i-8"}, {"new_product_id", "p-202"}}),
        call("Confirming the exchange.", "get_order_details", json{{"order_id", "o-9003"}}),
        msg("Great, wrap it up."),
        call("Summarizing the account actions.", "submit_answer",
             json{{"answer", "review " + label + " complete"}})};
    return seed;
}

// Read-only filler: fetch one order and report its status.
inline TaskSeed retail_read_seed(const std::string& email, const std::string& order_id) {
    TaskSeed seed;
    seed.def.description = "Look up order " + order_id + " on the account " + email +
                           " and report its current status.";
    seed.def.steps = {
        call("Pulling up the account.", "get_user_profile", json{{"email", email}}),
        call("Reviewing the order history.", "get_user_orders",
             json{{"user_id", from_copy("get_user_profile", "user_id")}}),
        call("Inspecting " + order_id + ".", "get_order_details", json{{"order_id", order_id}}),
        call("Reporting the order status.", "submit_answer",
             json{{"answer", from_copy("get_order_details", "status")}})};
    return seed;
}

}  // namespace detail

inline std::vector<TaskDef> make_retail_tasks(const ScenarioFixture& fixture,
                                              const SubtaskMap& map) {
    using namespace detail;
    std::vector<TaskSeed> analysis, evaluation;

    const std::string cancel_refusal_text =
        "I cannot cancel this order; it has already progressed past pending, so cancellation "
        "is not allowed.";
    const std::string return_refusal_text =
        "I cannot process this return; the order does not appear to qualify, so the return "
        "is not allowed.";

    // Counting tasks.
    analysis.push_back(retail_count_seed("dana@example.com", 50, "Solar Charger"));
    analysis.push_back(retail_count_seed("dana@example.com", 100, "Game Controller"));
    analysis.push_back(retail_count_seed("omar@example.com", 30, "Laptop Sleeve"));
    analysis.push_back(retail_count_seed("omar@example.com", 120, "E-Reader"));
    analysis.push_back(retail_count_seed("lucia@example.com", 50, "Solar Charger"));
    analysis.push_back(retail_count_seed("lucia@example.com", 120, "E-Reader"));
    analysis.push_back(retail_count_seed("ken@example.com", 100, "Game Controller"));
    analysis.push_back(retail_count_seed("ken@example.com", 30, "Laptop Sleeve"));
    analysis.push_back(retail_count_seed("dana@example.com", 120, "E-Reader"));
    analysis.push_back(retail_count_seed("lucia@example.com", 100, "Game Controller"));

    // Rule tasks: four cancellations and two returns, attempt flavor.
    analysis.push_back(retail_rule_seed("dana@example.com", "cancel_order",
                                        json{{"order_id", "o-9001"}},
                                        attempt(json{{"order_id", "o-9002"}}),
                                        "cancel the pending order o-9001"));
    analysis.push_back(retail_rule_seed("lucia@example.com", "cancel_order",
                                        json{{"order_id", "o-9007"}},
                                        attempt(json{{"order_id", "o-9008"}}),
                                        "cancel the pending order o-9007"));
    analysis.push_back(retail_rule_seed("ken@example.com", "cancel_order",
                                        json{{"order_id", "o-9009"}},
                                        attempt(json{{"order_id", "o-9010"}}),
                                        "cancel the pending order o-9009"));
    analysis.push_back(retail_rule_seed("omar@example.com", "cancel_order",
                                        json{{"order_id", "o-9004"}},
                                        attempt(json{{"order_id", "o-9006"}}),
                                        "cancel the pending order o-9004"));
    analysis.push_back(retail_rule_seed("omar@example.com", "return_item",
                                        json{{"order_id", "o-9005"}, {"item_id", "i-5"}},
                                        attempt(json{{"order_id", "o-9006"}, {"item_id", "i-6"}}),
                                        "return item i-5 from the delivered order o-9005"));
    analysis.push_back(retail_rule_seed("dana@example.com", "return_item",
                                        json{{"order_id", "o-9003"}, {"item_id", "i-7"}},
                                        attempt(json{{"order_id", "o-9002"}, {"item_id", "i-3"}}),
                                        "return item i-7 from the delivered order o-9003"));
    // Rule tasks, refusal flavor.
    analysis.push_back(retail_rule_seed("dana@example.com", "cancel_order",
                                        json{{"order_id", "o-9001"}},
                                        refusal(cancel_refusal_text),
                                        "cancel the pending order o-9001"));
    analysis.push_back(retail_rule_seed("omar@example.com", "return_item",
                                        json{{"order_id", "o-9005"}, {"item_id", "i-5"}},
                                        refusal(return_refusal_text),
                                        "return item i-5 from the delivered order o-9005"));
    analysis.push_back(retail_rule_seed("lucia@example.com", "cancel_order",
                                        json{{"order_id", "o-9007"}},
                                        refusal(cancel_refusal_text),
                                        "cancel the pending order o-9007"));
    analysis.push_back(retail_rule_seed("ken@example.com", "cancel_order",
                                        json{{"order_id", "o-9009"}},
                                        refusal(cancel_refusal_text),
                                        "cancel the pending order o-9009"));

    // Verbose reviews.
    for (const std::string& label : {"alpha", "beta", "gamma", "delta"})
        analysis.push_back(retail_verbose_seed(label));

    // Read-only fillers.
    analysis.push_back(retail_read_seed("dana@example.com", "o-9002"));
    analysis.push_back(retail_read_seed("omar@example.com", "o-9005"));
    analysis.push_back(retail_read_seed("lucia@example.com", "o-9008"));
    analysis.push_back(retail_read_seed("ken@example.com", "o-9010"));
    analysis.push_back(retail_read_seed("dana@example.com", "o-9003"));
    analysis.push_back(retail_read_seed("omar@example.com", "o-9006"));

    // Evaluation set.
    evaluation.push_back(retail_count_seed("dana@example.com", 30, "Laptop Sleeve"));
    evaluation.push_back(retail_count_seed("omar@example.com", 50, "Solar Charger"));
    evaluation.push_back(retail_count_seed("omar@example.com", 100, "Game Controller"));
    evaluation.push_back(retail_count_seed("lucia@example.com", 30, "Laptop Sleeve"));
    evaluation.push_back(retail_count_seed("ken@example.com", 50, "Solar Charger"));
    evaluation.push_back(retail_count_seed("ken@example.com", 120, "E-Reader"));
    evaluation.push_back(retail_rule_seed("dana@example.com", "cancel_order",
                                          json{{"order_id", "o-9001"}},
                                          attempt(json{{"order_id", "o-9003"}}),
                                          "cancel the pending order o-9001"));
    evaluation.push_back(retail_rule_seed("lucia@example.com", "cancel_order",
                                          json{{"order_id", "o-9007"}},
                                          attempt(json{{"order_id", "o-9008"}}),
                                          "cancel the pending order o-9007"));
    evaluation.push_back(retail_rule_seed("omar@example.com", "return_item",
                                          json{{"order_id", "o-9005"}, {"item_id", "i-5"}},
                                          attempt(json{{"order_id", "o-9006"}, {"item_id", "i-6"}}),
                                          "return item i-5 from the delivered order o-9005"));
    evaluation.push_back(retail_rule_seed("ken@example.com", "cancel_order",
                                          json{{"order_id", "o-9009"}},
                                          attempt(json{{"order_id", "o-9010"}}),
                                          "cancel the pending order o-9009"));
    evaluation.push_back(retail_rule_seed("omar@example.com", "cancel_order",
                                          json{{"order_id", "o-9004"}},
                                          refusal(cancel_refusal_text),
                                          "cancel the pending order o-9004"));
    evaluation.push_back(retail_rule_seed("dana@example.com", "return_item",
                                          json{{"order_id", "o-9003"}, {"item_id", "i-7"}},
                                          refusal(return_refusal_text),
                                          "return item i-7 from the delivered order o-9003"));
    for (const std::string& label : {"epsilon", "zeta", "eta", "theta"})
        evaluation.push_back(retail_verbose_seed(label));
    evaluation.push_back(retail_read_seed("lucia@example.com", "o-9007"));
    evaluation.push_back(retail_read_seed("ken@example.com", "o-9009"));
    evaluation.push_back(retail_read_seed("dana@example.com", "o-9001"));
    evaluation.push_back(retail_read_seed("omar@example.com", "o-9004"));

    return finish("ret", fixture, map, std::move(analysis), std::move(evaluation));
}

// ---------------------------------------------------------------------------
// crm
// ---------------------------------------------------------------------------

inline ScenarioFixture make_crm_fixture() {
    ScenarioFixture f;
    f.workload = "crm";
    const std::vector<std::string> agents{"mei.lin",     "omar.diaz",   "priya.shah",
                                          "jonas.weber", "aretha.cole", "tomasz.nowak"};
    const std::vector<std::string> priorities{"low", "normal", "high", "urgent"};
    const std::vector<std::string> states{"CA", "NY", "TX", "WA", "IL", "GA"};
    const std::string body =
        "The customer reported intermittent sync failures after the last firmware rollout and "
        "asked for a status update on the replacement unit. Support walked through the standard "
        "diagnostic checklist, collected device logs, and confirmed the warranty coverage "
        "window. The shipping carrier shows the parcel at the regional hub pending a delivery "
        "scan, so the follow-up call is scheduled for the next business morning. Billing "
        "confirmed that the invoice adjustment was applied to the account and that no further "
        "action is required unless the replacement fails validation.";

    json cases = json::array();
    auto add = [&](int n, const std::string& assigned, const std::string& status, double handle) {
        const std::string id = "C-" + std::to_string(1000 + n);
        cases.push_back(json{{"case_id", id},
                             {"assigned_to", assigned},
                             {"status", status},
                             {"priority", priorities[n % priorities.size()]},
                             {"handle_time_hours", handle},
                             {"shipping_state", states[n % states.size()]},
                             {"description", body + " Ref " + id + "."}});
    };

    const std::vector<double> mei{3.5, 7.25, 12.0, 5.75, 9.5, 4.25, 11.25, 6.5};   // mean 7.5
    const std::vector<double> omar{4.5, 8.0, 5.25, 6.75, 7.0, 3.5, 7.0};           // mean 6.0
    const std::vector<double> priya{6.0, 4.5, 5.25, 6.75, 5.0, 5.5};               // mean 5.5
    int n = 0;
    for (double h : mei) add(++n, "mei.lin", "open", h);
    for (double h : omar) add(++n, "omar.diaz", "open", h);
    for (double h : priya) add(++n, "priya.shah", "open", h);
    add(22, "mei.lin", "escalated", 9.0);
    add(23, "omar.diaz", "escalated", 7.5);
    add(24, "priya.shah", "escalated", 6.25);

    // Filler queue: the three averaging targets never appear as "open" again,
    // and six explicit pending cases serve as update targets.
    const std::map<int, std::string> pending{{30, "mei.lin"},     {44, "omar.diaz"},
                                             {58, "priya.shah"},  {72, "jonas.weber"},
                                             {86, "aretha.cole"}, {100, "tomasz.nowak"}};
    const std::vector<std::string> closed_statuses{"resolved", "closed", "waiting"};
    for (int i = 25; i <= 150; ++i) {
        const auto it = pending.find(i);
        if (it != pending.end()) {
            add(i, it->second, "pending", 2.0 + (i % 9) * 0.75);
        } else {
            add(i, agents[i % agents.size()], closed_statuses[i % closed_statuses.size()],
                2.0 + (i % 9) * 0.75);
        }
    }

    f.data["stores"] = json{{"cases", cases}};
    f.data["params"] = json::object();
    f.data["rules"] = json::array(
        {json{{"name", "no_escalated_updates"},
              {"applies_to", "update_case"},
              {"effect", "forbid"},
              {"message", "escalated cases are locked against status changes"},
              {"entity", json{{"store", "cases"}, {"id_arg", "case_id"},
                              {"id_field", "case_id"}}},
              {"when", json{{"field", "status"}, {"op", "eq"}, {"value", "escalated"}}}}});
    return f;
}

inline SubtaskMap make_crm_map() {
    SubtaskMap m;
    m.workload = "crm";
    m.tool_rules = {{"get_cases", "find assigned cases"},
                    {"calculate_avg", "compute average handle time"},
                    {"get_shipping_state", "check shipping state"},
                    {"update_case", "update case"},
                    {"submit_answer", "report answer"}};
    m.kinds = {{"find assigned cases", SubtaskKind::exploration},
               {"compute average handle time", SubtaskKind::exploitation},
               {"check shipping state", SubtaskKind::exploration},
               {"judge case update", SubtaskKind::exploitation},
               {"update case", SubtaskKind::exploitation},
               {"report answer", SubtaskKind::exploitation}};
    DecompositionRule split;
    split.tool_name = "update_case";
    split.children = {"judge case update", "update case"};
    m.decomposition_rules.push_back(split);
    m.dependencies = {{"find assigned cases", "compute average handle time"},
                      {"find assigned cases", "judge case update"},
                      {"judge case update", "update case"},
                      {"check shipping state", "update case"},
                      {"compute average handle time", "report answer"}};
    m.mutating_tools = {"update_case"};
    m.validate();
    return m;
}

namespace detail {

// Averaging shape. The unfiltered queue blows the token budget, so the
// verbosity channel (dropping both filters) is an exhaustion hazard; the
// compute channel corrupts the value list passed to the averaging tool.
inline TaskSeed crm_average_seed(const std::string& agent, const std::string& label,
                                 bool compute_knob) {
    TaskSeed seed;
    seed.def.description = "Run the " + label + " for " + agent +
                           ": average the handle times of their open cases and report it.";
    ScriptStep fetch = call("Pulling the open queue for " + agent + ".", "get_cases",
                            json{{"assigned_to", agent}, {"status", "open"}});
    fetch.verbose_affordance = true;
    fetch.verbosity = json{{"drop_keys", json::array({"assigned_to", "status"})}};
    json derive_spec{{"tool", "get_cases"}, {"op", "values"}, {"path", "cases"},
                     {"by", "handle_time_hours"}};
    if (compute_knob) derive_spec["corrupt"] = true;
    ScriptStep avg = call("Averaging the handle times.", "calculate_avg",
                          json{{"values", from_spec(derive_spec)}});
    if (compute_knob) avg.knob = "compute";
    seed.def.steps = {
        fetch,
        avg,
        call("Reporting the average handle time.", "submit_answer",
             json{{"value", from_copy("calculate_avg", "average")}})};
    seed.recipes["calculate_avg"].push_back(recipe("values", "values", "get_cases", "cases",
                                                   "handle_time_hours", "",
                                                   "compute average handle time"));
    return seed;
}

// Update shape: close one pending case after a shipping check; the rule
// channel either targets an escalated case instead or refuses outright.
inline TaskSeed crm_update_seed(const std::string& agent, const std::string& target,
                                json faulty) {
    TaskSeed seed;
    seed.def.description = "The shipment for case " + target + " in " + agent +
                           "'s pending queue has arrived; verify the shipping state and close "
                           "the case.";
    ScriptStep fetch = call("Checking the pending queue for " + agent + ".", "get_cases",
                            json{{"assigned_to", agent}, {"status", "pending"}});
    fetch.verbose_affordance = true;
    fetch.verbosity = json{{"drop_keys", json::array({"assigned_to", "status"})}};
    ScriptStep update = call("Closing the case.", "update_case",
                             json{{"case_id", target}, {"status", "closed"}});
    update.knob = "rule";
    update.faulty = std::move(faulty);
    seed.def.steps = {
        fetch,
        call("Confirming the shipment reached the customer.", "get_shipping_state",
             json{{"case_id", target}}),
        update,
        call("Confirming the update.", "submit_answer", json{{"answer", "closed " + target}})};
    return seed;
}

inline json crm_refusal() {
    return json{{"mode", "refusal"},
                {"text", "I cannot close this case; it appears to be under escalation review, "
                         "and closing those is not allowed."}};
}

inline json crm_attempt(const std::string& alt_case) {
    return json{{"mode", "forbidden_attempt"}, {"alt_args", json{{"case_id", alt_case}}}};
}

}  // namespace detail

inline std::vector<TaskDef> make_crm_tasks(const ScenarioFixture& fixture, const SubtaskMap& map) {
    using namespace detail;
    std::vector<TaskSeed> analysis, evaluation;
    const std::vector<std::string> agents{"mei.lin", "omar.diaz", "priya.shah"};

    for (const auto& agent : agents)
        for (const std::string& label :
             {"weekly review", "backlog audit", "sla check", "quarterly sweep"})
            analysis.push_back(crm_average_seed(agent, label, true));

    const std::vector<std::pair<std::string, std::string>> update_rows{
        {"mei.lin", "C-1030"},     {"omar.diaz", "C-1044"},  {"priya.shah", "C-1058"},
        {"jonas.weber", "C-1072"}, {"aretha.cole", "C-1086"}, {"tomasz.nowak", "C-1100"}};
    const std::vector<std::string> alts{"C-1022", "C-1023", "C-1024",
                                        "C-1022", "C-1023", "C-1024"};
    for (std::size_t i = 0; i < update_rows.size(); ++i) {
        analysis.push_back(crm_update_seed(update_rows[i].first, update_rows[i].second,
                                           crm_attempt(alts[i])));
        analysis.push_back(crm_update_seed(update_rows[i].first, update_rows[i].second,
                                           crm_refusal()));
    }

    for (const auto& agent : agents)
        for (const std::string& label : {"followup scan", "triage pass"})
            analysis.push_back(crm_average_seed(agent, label, false));

    for (const auto& agent : agents)
        for (const std::string& label : {"monthly report", "handoff prep"})
            evaluation.push_back(crm_average_seed(agent, label, true));
    evaluation.push_back(crm_average_seed("mei.lin", "pulse check", true));
    evaluation.push_back(crm_average_seed("omar.diaz", "pulse check", true));
    for (std::size_t i = 0; i < 4; ++i) {
        evaluation.push_back(crm_update_seed(update_rows[i].first, update_rows[i].second,
                                             crm_attempt(alts[i])));
        evaluation.push_back(crm_update_seed(update_rows[i].first, update_rows[i].second,
                                             crm_refusal()));
    }
    for (const auto& agent : agents)
        evaluation.push_back(crm_average_seed(agent, "closing sweep", false));
    evaluation.push_back(crm_average_seed("mei.lin", "audit pass", false));

    return finish("crm", fixture, map, std::move(analysis), std::move(evaluation));
}

// ---------------------------------------------------------------------------
// airline
// ---------------------------------------------------------------------------

inline ScenarioFixture make_airline_fixture() {
    ScenarioFixture f;
    f.workload = "airline";
    json users = json::array();
    users.push_back(json{{"user_id", "u-501"}, {"name", "Astrid Berg"}, {"membership", "gold"}});
    users.push_back(json{{"user_id", "u-502"}, {"name", "Ravi Menon"}, {"membership", "silver"}});
    users.push_back(json{{"user_id", "u-503"}, {"name", "Tom Hale"}, {"membership", "regular"}});

    json flights = json::array();
    auto flight = [&](const std::string& id, const std::string& o, const std::string& d,
                      double price, int hour) {
        flights.push_back(json{{"flight_id", id}, {"origin", o}, {"destination", d},
                               {"price", price}, {"departure_hour", hour}});
    };
    flight("F-88", "SFO", "JFK", 420.0, 8);
    flight("F-89", "SFO", "JFK", 350.0, 12);
    flight("F-90", "SFO", "JFK", 510.0, 17);
    flight("F-91", "JFK", "SFO", 430.0, 9);
    flight("F-92", "JFK", "SFO", 385.0, 14);
    flight("F-71", "SEA", "DEN", 210.0, 7);
    flight("F-72", "SEA", "DEN", 185.0, 13);
    flight("F-78", "SEA", "DEN", 255.0, 18);
    flight("F-73", "DEN", "SEA", 199.0, 10);
    flight("F-77", "DEN", "SEA", 230.0, 12);
    flight("F-79", "DEN", "SEA", 275.0, 9);
    flight("F-74", "ORD", "MIA", 260.0, 6);
    flight("F-75", "ORD", "MIA", 240.0, 15);
    flight("F-76", "ORD", "MIA", 290.0, 19);

    json reservations = json::array();
    auto res = [&](const std::string& id, const std::string& uid, const std::string& fid,
                   const std::string& cabin, const std::string& status, int age) {
        reservations.push_back(json{{"reservation_id", id}, {"user_id", uid}, {"flight_id", fid},
                                    {"cabin", cabin}, {"status", status},
                                    {"created_hours_ago", age}});
    };
    res("r-701", "u-501", "F-90", "business", "active", 10);
    res("r-702", "u-501", "F-78", "basic_economy", "active", 30);   // gold: permit applies
    res("r-703", "u-502", "F-76", "economy", "active", 20);
    res("r-704", "u-502", "F-90", "basic_economy", "active", 8);    // forbidden: basic economy
    res("r-705", "u-503", "F-91", "economy", "active", 100);        // forbidden: stale
    res("r-706", "u-503", "F-72", "economy", "cancelled", 5);       // forbidden: cancelled
    res("r-707", "u-501", "F-74", "economy", "active", 200);        // forbidden: stale
    res("r-708", "u-503", "F-79", "economy", "active", 6);

    f.data["stores"] = json{{"users", users}, {"flights", flights},
                            {"reservations", reservations}};
    f.data["params"] = json::object();
    const json entity = json{{"store", "reservations"}, {"id_arg", "reservation_id"},
                             {"id_field", "reservation_id"}};
    f.data["rules"] = json::array(
        {json{{"name", "permit_gold_membership"},
              {"applies_to", "modify_reservation"},
              {"effect", "permit"},
              {"message", "gold status waives the basic economy restriction"},
              {"entity", entity},
              {"when", json{{"all", json::array(
                                        {json{{"field", "cabin"}, {"op", "eq"},
                                              {"value", "basic_economy"}},
                                         json{{"field", "user.membership"}, {"op", "eq"},
                                              {"value", "gold"}}})}}}},
         json{{"name", "no_basic_economy_changes"},
              {"applies_to", "modify_reservation"},
              {"effect", "forbid"},
              {"message", "basic economy reservations cannot be changed"},
              {"entity", entity},
              {"when", json{{"field", "cabin"}, {"op", "eq"}, {"value", "basic_economy"}}}},
         json{{"name", "no_stale_modifications"},
              {"applies_to", "modify_reservation"},
              {"effect", "forbid"},
              {"message", "reservations created more than 72 hours ago are locked"},
              {"entity", entity},
              {"when", json{{"field", "created_hours_ago"}, {"op", "gt"}, {"value", 72}}}},
         json{{"name", "no_cancelled_changes"},
              {"applies_to", "modify_reservation"},
              {"effect", "forbid"},
              {"message", "cancelled reservations cannot be modified"},
              {"entity", entity},
              {"when", json{{"field", "status"}, {"op", "eq"}, {"value", "cancelled"}}}},
         json{{"name", "no_cancel_cancelled"},
              {"applies_to", "cancel_reservation"},
              {"effect", "forbid"},
              {"message", "the reservation is already cancelled"},
              {"entity", entity},
              {"when", json{{"field", "status"}, {"op", "eq"}, {"value", "cancelled"}}}}});
    return f;
}

inline SubtaskMap make_airline_map() {
    SubtaskMap m;
    m.workload = "airline";
    m.tool_rules = {{"get_user_details", "identify user"},
                    {"get_reservations", "review reservations"},
                    {"search_direct_flight", "find flight options"},
                    {"modify_reservation", "modify reservation"},
                    {"cancel_reservation", "cancel reservation"},
                    {"submit_answer", "report answer"}};
    m.kinds = {{"identify user", SubtaskKind::exploration},
               {"review reservations", SubtaskKind::exploration},
               {"find flight options", SubtaskKind::exploration},
               {"judge reservation modification", SubtaskKind::exploitation},
               {"modify reservation", SubtaskKind::exploitation},
               {"judge reservation cancellation", SubtaskKind::exploitation},
               {"cancel reservation", SubtaskKind::exploitation},
               {"report answer", SubtaskKind::exploitation}};
    DecompositionRule modify_split;
    modify_split.tool_name = "modify_reservation";
    modify_split.children = {"judge reservation modification", "modify reservation"};
    m.decomposition_rules.push_back(modify_split);
    DecompositionRule cancel_split;
    cancel_split.tool_name = "cancel_reservation";
    cancel_split.children = {"judge reservation cancellation", "cancel reservation"};
    m.decomposition_rules.push_back(cancel_split);
    m.dependencies = {{"identify user", "review reservations"},
                      {"review reservations", "judge reservation modification"},
                      {"find flight options", "judge reservation modification"},
                      {"judge reservation modification", "modify reservation"},
                      {"review reservations", "judge reservation cancellation"},
                      {"judge reservation cancellation", "cancel reservation"}};
    m.mutating_tools = {"modify_reservation", "cancel_reservation"};
    m.validate();
    return m;
}

namespace detail {

// Cheapest-flight rebooking: search the route, move the reservation onto the
// lowest-priced flight, report the chosen flight id.
inline TaskSeed airline_rebook_seed(const std::string& user, const std::string& reservation,
                                    const std::string& origin, const std::string& dest,
                                    const std::string& label) {
    TaskSeed seed;
    seed.def.description = "Rebooking " + label + ": move reservation " + reservation +
                           " for " + user + " onto the cheapest direct " + origin + "-" + dest +
                           " flight and report the new flight id.";
    ScriptStep rebook = call("Rebooking onto the cheapest option.", "modify_reservation",
                             json{{"reservation_id", reservation},
                                  {"new_flight_id",
                                   from_spec(json{{"tool", "search_direct_flight"},
                                                  {"op", "min_by"}, {"path", "flights"},
                                                  {"by", "price"}, {"take", "flight_id"},
                                                  {"corrupt", true}})}});
    rebook.knob = "compute";
    seed.def.steps = {
        call("Pulling the traveler profile.", "get_user_details", json{{"user_id", user}}),
        call("Reviewing the reservations on file.", "get_reservations",
             json{{"user_id", user}}),
        call("Searching direct " + origin + "-" + dest + " flights.", "search_direct_flight",
             json{{"origin", origin}, {"destination", dest}}),
        rebook,
        call("Reporting the new flight.", "submit_answer",
             json{{"answer", from_copy("modify_reservation", "flight_id")}})};
    seed.recipes["modify_reservation"].push_back(
        recipe("new_flight_id", "argmin", "search_direct_flight", "flights", "price",
               "flight_id", "judge reservation modification"));
    return seed;
}

// Policy-sensitive change: a permitted modify or cancel that the rule channel
// can redirect to a forbidden reservation or refuse outright.
inline TaskSeed airline_change_seed(const std::string& user, const std::string& tool, json args,
                                    json faulty, const std::string& what) {
    TaskSeed seed;
    seed.def.description = "For traveler " + user + ", " + what + " and confirm once done.";
    ScriptStep act = call(tool == "cancel_reservation" ? "Cancelling the reservation."
                                                       : "Rebooking the reservation.",
                          tool, std::move(args));
    act.knob = "rule";
    act.faulty = std::move(faulty);
    seed.def.steps = {
        call("Pulling the traveler profile.", "get_user_details", json{{"user_id", user}}),
        call("Reviewing the reservations on file.", "get_reservations",
             json{{"user_id", user}}),
        act,
        call("Confirming the change.", "submit_answer", json{{"answer", "done"}})};
    return seed;
}

inline json airline_refusal() {
    return json{{"mode", "refusal"},
                {"text", "I cannot change this reservation; the fare conditions say it is "
                         "not allowed."}};
}

inline json airline_attempt(const std::string& alt_reservation) {
    return json{{"mode", "forbidden_attempt"},
                {"alt_args", json{{"reservation_id", alt_reservation}}}};
}

}  // namespace detail

inline std::vector<TaskDef> make_airline_tasks(const ScenarioFixture& fixture,
                                               const SubtaskMap& map) {
    using namespace detail;
    std::vector<TaskSeed> analysis, evaluation;

    struct Shape {
        std::string user, reservation, origin, dest;
    };
    const std::vector<Shape> shapes{{"u-501", "r-701", "SFO", "JFK"},
                                    {"u-502", "r-703", "ORD", "MIA"},
                                    {"u-501", "r-702", "SEA", "DEN"},
                                    {"u-503", "r-708", "DEN", "SEA"}};
    const std::vector<std::string> labels{"one", "two", "three", "four"};
    const std::vector<int> analysis_counts{4, 4, 4, 3};
    for (std::size_t s = 0; s < shapes.size(); ++s)
        for (int k = 0; k < analysis_counts[s]; ++k)
            analysis.push_back(airline_rebook_seed(shapes[s].user, shapes[s].reservation,
                                                   shapes[s].origin, shapes[s].dest,
                                                   labels[s] + "-" + std::to_string(k + 1)));

    // Attempt flavor: the alternate reservation is world-executable but
    // forbidden (stale r-707, basic economy r-704).
    analysis.push_back(airline_change_seed(
        "u-501", "modify_reservation",
        json{{"reservation_id", "r-701"}, {"new_flight_id", "F-89"}}, airline_attempt("r-707"),
        "move reservation r-701 onto flight F-89"));
    analysis.push_back(airline_change_seed(
        "u-501", "modify_reservation",
        json{{"reservation_id", "r-701"}, {"new_flight_id", "F-88"}}, airline_attempt("r-707"),
        "move reservation r-701 onto flight F-88"));
    analysis.push_back(airline_change_seed(
        "u-501", "modify_reservation",
        json{{"reservation_id", "r-702"}, {"new_flight_id", "F-72"}}, airline_attempt("r-707"),
        "move reservation r-702 onto flight F-72"));
    analysis.push_back(airline_change_seed(
        "u-502", "modify_reservation",
        json{{"reservation_id", "r-703"}, {"new_flight_id", "F-75"}}, airline_attempt("r-704"),
        "move reservation r-703 onto flight F-75"));
    analysis.push_back(airline_change_seed(
        "u-502", "modify_reservation",
        json{{"reservation_id", "r-703"}, {"new_flight_id", "F-74"}}, airline_attempt("r-704"),
        "move reservation r-703 onto flight F-74"));
    // Refusal flavor on permitted modifications and cancellations.
    analysis.push_back(airline_change_seed(
        "u-501", "modify_reservation",
        json{{"reservation_id", "r-701"}, {"new_flight_id", "F-89"}}, airline_refusal(),
        "move reservation r-701 onto flight F-89"));
    analysis.push_back(airline_change_seed(
        "u-501", "modify_reservation",
        json{{"reservation_id", "r-702"}, {"new_flight_id", "F-72"}}, airline_refusal(),
        "move reservation r-702 onto flight F-72"));
    analysis.push_back(airline_change_seed(
        "u-502", "modify_reservation",
        json{{"reservation_id", "r-703"}, {"new_flight_id", "F-75"}}, airline_refusal(),
        "move reservation r-703 onto flight F-75"));
    analysis.push_back(airline_change_seed(
        "u-503", "modify_reservation",
        json{{"reservation_id", "r-708"}, {"new_flight_id", "F-73"}}, airline_refusal(),
        "move reservation r-708 onto flight F-73"));
    analysis.push_back(airline_change_seed(
        "u-501", "modify_reservation",
        json{{"reservation_id", "r-701"}, {"new_flight_id", "F-88"}}, airline_refusal(),
        "move reservation r-701 onto flight F-88"));
    analysis.push_back(airline_change_seed("u-501", "cancel_reservation",
                                           json{{"reservation_id", "r-701"}}, airline_refusal(),
                                           "cancel reservation r-701"));
    analysis.push_back(airline_change_seed("u-502", "cancel_reservation",
                                           json{{"reservation_id", "r-703"}}, airline_refusal(),
                                           "cancel reservation r-703"));
    analysis.push_back(airline_change_seed("u-503", "cancel_reservation",
                                           json{{"reservation_id", "r-705"}}, airline_refusal(),
                                           "cancel reservation r-705"));
    analysis.push_back(airline_change_seed("u-501", "cancel_reservation",
                                           json{{"reservation_id", "r-707"}}, airline_refusal(),
                                           "cancel reservation r-707"));
    analysis.push_back(airline_change_seed("u-503", "cancel_reservation",
                                           json{{"reservation_id", "r-708"}}, airline_refusal(),
                                           "cancel reservation r-708"));

    const std::vector<int> eval_counts{3, 3, 2, 2};
    for (std::size_t s = 0; s < shapes.size(); ++s)
        for (int k = 0; k < eval_counts[s]; ++k)
            evaluation.push_back(airline_rebook_seed(shapes[s].user, shapes[s].reservation,
                                                     shapes[s].origin, shapes[s].dest,
                                                     "eval-" + labels[s] + "-" +
                                                         std::to_string(k + 1)));
    evaluation.push_back(airline_change_seed(
        "u-501", "modify_reservation",
        json{{"reservation_id", "r-701"}, {"new_flight_id", "F-89"}}, airline_attempt("r-707"),
        "move reservation r-701 onto flight F-89"));
    evaluation.push_back(airline_change_seed(
        "u-502", "modify_reservation",
        json{{"reservation_id", "r-703"}, {"new_flight_id", "F-75"}}, airline_attempt("r-704"),
        "move reservation r-703 onto flight F-75"));
    evaluation.push_back(airline_change_seed(
        "u-501", "modify_reservation",
        json{{"reservation_id", "r-702"}, {"new_flight_id", "F-72"}}, airline_attempt("r-707"),
        "move reservation r-702 onto flight F-72"));
    evaluation.push_back(airline_change_seed(
        "u-503", "modify_reservation",
        json{{"reservation_id", "r-708"}, {"new_flight_id", "F-73"}}, airline_attempt("r-704"),
        "move reservation r-708 onto flight F-73"));
    evaluation.push_back(airline_change_seed(
        "u-501", "modify_reservation",
        json{{"reservation_id", "r-701"}, {"new_flight_id", "F-89"}}, airline_refusal(),
        "move reservation r-701 onto flight F-89"));
    evaluation.push_back(airline_change_seed(
        "u-502", "modify_reservation",
        json{{"reservation_id", "r-703"}, {"new_flight_id", "F-74"}}, airline_refusal(),
        "move reservation r-703 onto flight F-74"));
    evaluation.push_back(airline_change_seed("u-501", "cancel_reservation",
                                             json{{"reservation_id", "r-701"}},
                                             airline_refusal(), "cancel reservation r-701"));
    evaluation.push_back(airline_change_seed("u-503", "cancel_reservation",
                                             json{{"reservation_id", "r-705"}},
                                             airline_refusal(), "cancel reservation r-705"));
    evaluation.push_back(airline_change_seed("u-503", "cancel_reservation",
                                             json{{"reservation_id", "r-708"}},
                                             airline_refusal(), "cancel reservation r-708"));
    evaluation.push_back(airline_change_seed(
        "u-503", "modify_reservation",
        json{{"reservation_id", "r-708"}, {"new_flight_id", "F-73"}}, airline_refusal(),
        "move reservation r-708 onto flight F-73"));

    return finish("air", fixture, map, std::move(analysis), std::move(evaluation));
}

// ---------------------------------------------------------------------------
// public suite API
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& workloads() {
    static const std::vector<std::string> w{"airline", "crm", "file_system", "medical", "retail"};
    return w;
}

inline const ScenarioFixture& fixture_for(const std::string& workload) {
    static const std::map<std::string, ScenarioFixture> fixtures = [] {
        std::map<std::string, ScenarioFixture> m;
        m["file_system"] = make_fs_fixture();
        m["medical"] = make_medical_fixture();
        m["retail"] = make_retail_fixture();
        m["crm"] = make_crm_fixture();
        m["airline"] = make_airline_fixture();
        return m;
    }();
    const auto it = fixtures.find(workload);
    if (it == fixtures.end()) throw ConfigError("unknown workload: " + workload);
    return it->second;
}

inline const SubtaskMap& subtask_map_for(const std::string& workload) {
    static const std::map<std::string, SubtaskMap> maps = [] {
        std::map<std::string, SubtaskMap> m;
        m["file_system"] = make_fs_map();
        m["medical"] = make_medical_map();
        m["retail"] = make_retail_map();
        m["crm"] = make_crm_map();
        m["airline"] = make_airline_map();
        return m;
    }();
    const auto it = maps.find(workload);
    if (it == maps.end()) throw ConfigError("unknown workload: " + workload);
    return it->second;
}

inline const std::vector<TaskDef>& tasks_for(const std::string& workload) {
    static std::map<std::string, std::vector<TaskDef>> cache;
    auto it = cache.find(workload);
    if (it != cache.end()) return it->second;
    const ScenarioFixture& fixture = fixture_for(workload);
    const SubtaskMap& map = subtask_map_for(workload);
    std::vector<TaskDef> tasks;
    if (workload == "file_system") tasks = make_fs_tasks(fixture, map);
    else if (workload == "medical") tasks = make_medical_tasks(fixture, map);
    else if (workload == "retail") tasks = make_retail_tasks(fixture, map);
    else if (workload == "crm") tasks = make_crm_tasks(fixture, map);
    else if (workload == "airline") tasks = make_airline_tasks(fixture, map);
    else throw ConfigError("unknown workload: " + workload);
    return cache.emplace(workload, std::move(tasks)).first->second;
}

inline const TaskDef& find_task(const std::string& workload, const std::string& task_id) {
    for (const auto& task : tasks_for(workload))
        if (task.task_id == task_id) return task;
    throw ValidationError("task lookup", "no such task in workload " + workload + ": " + task_id);
}

inline json default_manifest(const std::string& workload) {
    json tasks = json::array();
    for (const auto& task : tasks_for(workload))
        tasks.push_back(json{{"task_id", task.task_id}, {"set", task.set_name}});
    return json{{"workload", workload}, {"tasks", tasks}};
}

// Everything off: the passthrough baseline.
inline OptimizationConfig baseline_optimizations() { return OptimizationConfig{}; }

// Everything on. The speculation weights equal the merged analysis-graph edge
// weights of the corresponding workloads, so the threshold of 1/2 admits both
// entries; targets missing from a workload's registry are skipped at
// construction, which keeps the single table valid across all five worlds.
inline OptimizationConfig default_optimizations() {
    OptimizationConfig cfg;
    cfg.lookahead_enabled = true;
    cfg.lookahead_depth = 2;
    cfg.state_confirmation_enabled = true;
    cfg.offload_enabled = true;
    cfg.offload_aggregates = {"count", "min", "max", "sum", "mean", "sort_by", "filter_hint"};
    cfg.guardrails_enabled = true;
    cfg.rule_hints_enabled = true;
    cfg.speculation_enabled = true;
    cfg.speculation_threshold = Fraction(1, 2);
    cfg.speculation_charge_tokens = true;
    SpeculationEntry crm_entry;
    crm_entry.trigger = "get_cases";
    crm_entry.target = "calculate_avg";
    crm_entry.weight = Fraction(3, 5);
    crm_entry.bind = json{{"values", json{{"response", "cases[*].handle_time_hours"}}}};
    cfg.speculation_table.push_back(crm_entry);
    SpeculationEntry retail_entry;
    retail_entry.trigger = "get_user_profile";
    retail_entry.target = "get_user_orders";
    retail_entry.weight = Fraction(1, 1);
    retail_entry.bind = json{{"user_id", json{{"response", "user_id"}}}};
    cfg.speculation_table.push_back(retail_entry);
    return cfg;
}

}  // namespace agentsim::builtin
