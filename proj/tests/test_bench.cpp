#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "agentsim/bench.hpp"
#include "agentsim/builtin.hpp"

using namespace agentsim;

TEST_CASE("oracle agents complete every task under both configurations") {
    const std::vector<NamedPolicy> policies{{"oracle", AgentPolicy::oracle()}};
    const std::vector<NamedConfig> configs{{"base", builtin::baseline_optimizations()},
                                           {"opt", builtin::default_optimizations()}};
    std::int64_t total = 0;
    for (const auto& wl : builtin::workloads()) {
        const RunReport report =
            run_suite(builtin::default_manifest(wl), policies, configs, {0});
        for (const auto& row : report.rows) {
            CHECK(row.error.empty());
            CHECK(row.outcome == Outcome::success);
        }
        CHECK(report.rows.size() == 100);  // 50 tasks x 2 configs
        total += static_cast<std::int64_t>(report.rows.size());
    }
    CHECK(total == 500);
}

TEST_CASE("run_suite output is deterministic end to end") {
    const json manifest = builtin::default_manifest("retail");
    const std::vector<NamedPolicy> policies{{"oracle", AgentPolicy::oracle()},
                                            {"noisy", AgentPolicy::noisy_default()}};
    const std::vector<NamedConfig> configs{{"base", builtin::baseline_optimizations()},
                                           {"opt", builtin::default_optimizations()}};
    const std::vector<std::uint64_t> seeds{0, 1};
    const PricingTable pricing{3.0, 0.3, 15.0};

    const RunReport a = run_suite(manifest, policies, configs, seeds);
    const RunReport b = run_suite(manifest, policies, configs, seeds);
    std::ostringstream csv_a, csv_b;
    write_runs_csv(csv_a, a, pricing);
    write_runs_csv(csv_b, b, pricing);
    CHECK(csv_a.str() == csv_b.str());
    REQUIRE(a.traces.size() == b.traces.size());
    for (std::size_t i = 0; i < a.traces.size(); i += 37)
        CHECK(serialize_trace(a.traces[i]) == serialize_trace(b.traces[i]));
    std::ostringstream sum_a, sum_b;
    write_summary_csv(sum_a, a, pricing);
    write_summary_csv(sum_b, b, pricing);
    CHECK(sum_a.str() == sum_b.str());
    CHECK(sum_a.str().find("base->opt") != std::string::npos);
}

TEST_CASE("row bookkeeping conserves trace totals exactly") {
    const json manifest = builtin::default_manifest("medical");
    const RunReport report = run_suite(
        manifest, {{"noisy", AgentPolicy::noisy_default()}},
        {{"base", builtin::baseline_optimizations()}}, {3});
    REQUIRE(report.rows.size() == report.traces.size());
    std::map<std::string, std::pair<std::int64_t, std::int64_t>> per_set;  // successes, runs
    for (std::size_t i = 0; i < report.rows.size(); ++i) {
        const RunRow& row = report.rows[i];
        const Trace& trace = report.traces[i];
        REQUIRE(row.error.empty());
        const TokenCost t = trace_tokens(trace);
        CHECK(row.tokens.prompt == t.prompt);
        CHECK(row.tokens.cached == t.cached);
        CHECK(row.tokens.completion == t.completion);
        CHECK(row.turns == trace.budget.used_turns);
        CHECK(trace.budget.used_tokens == t.total());
        auto& cell = per_set[row.set_name];
        cell.second += 1;
        if (row.outcome == Outcome::success) cell.first += 1;
    }
    // One aggregate per manifest set, each with an exact rational rate.
    const auto aggs = aggregate_report(report, PricingTable{});
    REQUIRE(aggs.size() == per_set.size());
    std::int64_t total_runs = 0;
    for (const auto& agg : aggs) {
        const auto& cell = per_set.at(agg.set_name);
        CHECK(agg.runs == cell.second);
        CHECK(agg.success_rate == Fraction(cell.first, cell.second));
        total_runs += agg.runs;
    }
    CHECK(total_runs == 50);
}

TEST_CASE("cost arithmetic is exact at the million-token scale") {
    TokenCost t;
    t.prompt = 1000000;
    PricingTable p;
    p.prompt_per_million = 2.0;
    const CostBreakdown c = cost_of(t, p);
    CHECK(c.prompt == 2.0);
    CHECK(c.total == 2.0);
    CHECK(c.cached == 0.0);

    TokenCost mixed{500000, 1000000, 200000};
    const PricingTable full{3.0, 0.3, 15.0};
    const CostBreakdown m = cost_of(mixed, full);
    CHECK(m.prompt == 1.5);
    CHECK(m.cached == 0.3);
    CHECK(m.completion == 3.0);
    CHECK(m.total == 4.8);
}

TEST_CASE("pricing validation rejects negative rates") {
    PricingTable p;
    p.cached_per_million = -0.1;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    const PricingTable parsed = PricingTable::from_json(
        json{{"prompt_per_million", 1.0}, {"cached_per_million", 0.1},
             {"completion_per_million", 5.0}});
    CHECK(parsed.completion_per_million == 5.0);
    CHECK(PricingTable::from_json(parsed.to_json()).to_json() == parsed.to_json());
}

TEST_CASE("percentage deltas are frozen at one decimal") {
    CHECK(format_pct_delta(10.0, 5.0) == "-50.0");
    CHECK(format_pct_delta(0.0, 7.0) == "0.0");
    CHECK(format_pct_delta(8.0, 8.0) == "0.0");
    CHECK(format_pct_delta(3.0, 4.0) == "33.3");
}

TEST_CASE("optimization flips the matched failure mode") {
    // med-001 fails on a corrupted max under the bare environment; once the
    // precomputed aggregates are in context, zero sensitivity means the agent
    // stops corrupting derived values and the task goes through.
    AgentPolicy compute;
    compute.kind = "noisy";
    compute.p_compute = 1.0;
    compute.augmentation_sensitivity = 0.0;
    const ScenarioFixture& fx = builtin::fixture_for("medical");
    const SubtaskMap& map = builtin::subtask_map_for("medical");
    const TaskDef& task = builtin::find_task("medical", "med-001");
    auto [bt, base] =
        run_task(task, fx, map, compute, builtin::baseline_optimizations(), Budget{}, 0);
    auto [ot, opt] =
        run_task(task, fx, map, compute, builtin::default_optimizations(), Budget{}, 0);
    CHECK(base == Outcome::failure);
    CHECK(opt == Outcome::success);
}

TEST_CASE("cost/turn report carries per-trace rows and a TOTAL row") {
    const RunReport report = run_suite(
        builtin::default_manifest("file_system"), {{"oracle", AgentPolicy::oracle()}},
        {{"base", builtin::baseline_optimizations()}}, {0});
    std::ostringstream out;
    write_cost_turns_csv(out, report.traces, PricingTable{3.0, 0.3, 15.0});
    const auto rows = parse_csv(out.str());
    REQUIRE(rows.size() == 52);  // header + 50 traces + TOTAL
    CHECK(rows.back()[0] == "TOTAL");
    std::int64_t turns = 0, prompt = 0;
    for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
        turns += std::stoll(rows[i][3]);
        prompt += std::stoll(rows[i][4]);
    }
    CHECK(std::stoll(rows.back()[3]) == turns);
    CHECK(std::stoll(rows.back()[4]) == prompt);
}

TEST_CASE("annotation CSV round trips hostile evidence") {
    std::vector<FailureAnnotation> notes;
    FailureAnnotation a;
    a.task_id = "ret-002";
    a.workload = "retail";
    a.failed_subtask = "filter product items";
    a.category = "tool_output_processing";
    a.subtype = "comparison";
    a.turn = 9;
    a.evidence = "expected 4, got \"7\", note: a,b and \"quoted, comma\"";
    notes.push_back(a);
    FailureAnnotation b;
    b.task_id = "crm-003";
    b.workload = "crm";
    b.failed_subtask = "update case";
    b.category = "domain_rule_violation";
    b.subtype = "invalid_action";
    b.turn = 4;
    b.evidence = "plain text";
    notes.push_back(b);

    std::ostringstream out;
    write_annotations_csv(out, notes);
    const std::string text = out.str();
    CHECK(text.rfind("task_id,failed_subtask,category,subtype,turn,evidence", 0) == 0);
    const auto parsed = parse_annotations_csv(text);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].task_id == a.task_id);
    CHECK(parsed[0].failed_subtask == a.failed_subtask);
    CHECK(parsed[0].category == a.category);
    CHECK(parsed[0].subtype == a.subtype);
    CHECK(parsed[0].turn == a.turn);
    CHECK(parsed[0].evidence == a.evidence);
    CHECK(parsed[1].evidence == "plain text");

    CHECK_THROWS_AS(parse_annotations_csv("task_id,failed_subtask\nx,y\n"), ParseError);
}

TEST_CASE("failure breakdown CSV emits six canonical rows per workload") {
    std::vector<FailureAnnotation> base_notes;
    FailureAnnotation a;
    a.task_id = "med-004";
    a.workload = "medical";
    a.category = "tool_output_processing";
    base_notes.push_back(a);
    std::ostringstream out;
    write_failure_breakdown_csv(out, {{"Base", base_notes}, {"Opt", {}}}, {"retail"});
    const auto rows = parse_csv(out.str());
    REQUIRE(rows.size() == 13);  // header + 2 workloads x 6 categories
    CHECK(rows[0] == std::vector<std::string>{"workload", "category", "Base", "Opt"});
    int medical_rows = 0, retail_rows = 0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i][0] == "medical") ++medical_rows;
        if (rows[i][0] == "retail") ++retail_rows;
        if (rows[i][0] == "medical" && rows[i][1] == "tool_output_processing")
            CHECK(rows[i][2] == "1");
        else
            CHECK(rows[i][2] == "0");
        CHECK(rows[i][3] == "0");
    }
    CHECK(medical_rows == 6);
    CHECK(retail_rows == 6);
}

TEST_CASE("run_suite records per-row errors instead of aborting") {
    json manifest = builtin::default_manifest("crm");
    manifest["tasks"].push_back(json{{"task_id", "crm-999"}, {"set", "analysis"}});
    const RunReport report =
        run_suite(manifest, {{"oracle", AgentPolicy::oracle()}},
                  {{"base", builtin::baseline_optimizations()}}, {0});
    REQUIRE(report.rows.size() == 51);
    CHECK(report.rows.back().error.find("crm-999") != std::string::npos);
    CHECK(report.rows.back().turns == 0);
    CHECK(report.traces.back().task_id.empty());
    for (std::size_t i = 0; i + 1 < report.rows.size(); ++i)
        CHECK(report.rows[i].error.empty());
}
