#pragma once

// Experiment harness: seeded policy x config sweeps over the built-in task
// suites, per-run token/cost accounting, and the CSV writers behind the CLI
// and the reports. Everything here is a pure function of its inputs; a suite
// run is reproducible from (manifest, policies, configs, seeds) alone.

#include <algorithm>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "agentsim/builtin.hpp"
#include "agentsim/classify.hpp"
#include "agentsim/middleware.hpp"
#include "agentsim/policy.hpp"

namespace agentsim {

// ---------------------------------------------------------------------------
// pricing
// ---------------------------------------------------------------------------

// Price per million tokens for each billing category. The shipped default is
// zeroed: concrete prices are run configuration, not ground truth.
struct PricingTable {
    double prompt_per_million = 0.0;
    double cached_per_million = 0.0;
    double completion_per_million = 0.0;

    void validate() const {
        if (prompt_per_million < 0 || cached_per_million < 0 || completion_per_million < 0)
            throw ConfigError("pricing must be non-negative");
    }

    json to_json() const {
        return json{{"prompt_per_million", prompt_per_million},
                    {"cached_per_million", cached_per_million},
                    {"completion_per_million", completion_per_million}};
    }

    static PricingTable from_json(const json& j) {
        PricingTable p;
        p.prompt_per_million = j.value("prompt_per_million", 0.0);
        p.cached_per_million = j.value("cached_per_million", 0.0);
        p.completion_per_million = j.value("completion_per_million", 0.0);
        p.validate();
        return p;
    }
};

struct CostBreakdown {
    double prompt = 0.0;
    double cached = 0.0;
    double completion = 0.0;
    double total = 0.0;
};

inline CostBreakdown cost_of(const TokenCost& tokens, const PricingTable& pricing) {
    CostBreakdown c;
    c.prompt = static_cast<double>(tokens.prompt) * pricing.prompt_per_million / 1e6;
    c.cached = static_cast<double>(tokens.cached) * pricing.cached_per_million / 1e6;
    c.completion = static_cast<double>(tokens.completion) * pricing.completion_per_million / 1e6;
    c.total = c.prompt + c.cached + c.completion;
    return c;
}

inline TokenCost trace_tokens(const Trace& trace) {
    TokenCost t;
    for (const auto& turn : trace.turns) {
        t.prompt += turn.token_cost.prompt;
        t.cached += turn.token_cost.cached;
        t.completion += turn.token_cost.completion;
    }
    return t;
}

// ---------------------------------------------------------------------------
// single-task execution
// ---------------------------------------------------------------------------

// Drives the scripted policy against an intercepted session until the script
// ends or the budget trips, then grades the trace against the expectation.
// Deterministic given (task, fixture, policy, config, seed).
inline std::pair<Trace, Outcome> run_task(const TaskDef& task, const ScenarioFixture& fixture,
                                          const SubtaskMap& map, const AgentPolicy& policy,
                                          const OptimizationConfig& config, Budget budget,
                                          std::uint64_t seed,
                                          SpeculationStats* stats_out = nullptr) {
    policy.validate();
    config.validate();
    auto world = make_world(fixture, seed);
    Session session(*world, task.task_id, budget);
    Middleware middleware(session, config);
    ScriptedAgent agent(session, &middleware, policy, seed);
    agent.run(task);
    if (!session.terminated()) session.finalize(Outcome::success);
    Trace trace = session.take_trace();
    trace.outcome = evaluate_task(trace, task.expected, map);
    if (stats_out) *stats_out = middleware.stats();
    const Outcome outcome = trace.outcome;
    return {std::move(trace), outcome};
}

// ---------------------------------------------------------------------------
// suite execution
// ---------------------------------------------------------------------------

struct NamedPolicy {
    std::string name;
    AgentPolicy policy;
};

struct NamedConfig {
    std::string name;
    OptimizationConfig config;
};

struct RunRow {
    std::string workload;
    std::string task_id;
    std::string set_name;
    std::string policy_name;
    std::string config_name;
    std::uint64_t seed = 0;
    Outcome outcome = Outcome::failure;
    std::string error;  // nonempty when the run aborted before producing a trace
    std::int64_t turns = 0;
    TokenCost tokens;
    SpeculationStats speculation;
};

struct RunReport {
    std::vector<RunRow> rows;
    std::vector<Trace> traces;  // aligned with rows; aborted runs leave an empty trace
};

// Cross-product execution over the manifest's tasks. Partial failures are
// recorded per row; the suite never aborts on a task failure. Row order is
// the deterministic nesting (manifest task, policy, config, seed).
inline RunReport run_suite(const json& manifest, const std::vector<NamedPolicy>& policies,
                           const std::vector<NamedConfig>& configs,
                           const std::vector<std::uint64_t>& seeds) {
    const std::string workload = manifest.at("workload").get<std::string>();
    const ScenarioFixture& fixture = builtin::fixture_for(workload);
    const SubtaskMap& map = builtin::subtask_map_for(workload);
    RunReport report;
    for (const auto& entry : manifest.at("tasks")) {
        const std::string task_id = entry.at("task_id").get<std::string>();
        const TaskDef* task = nullptr;
        std::string lookup_error;
        try {
            task = &builtin::find_task(workload, task_id);
        } catch (const std::exception& e) {
            lookup_error = e.what();
        }
        const std::string set_name = entry.value("set", task ? task->set_name : std::string());
        for (const auto& np : policies)
            for (const auto& nc : configs)
                for (const std::uint64_t seed : seeds) {
                    RunRow row;
                    row.workload = workload;
                    row.task_id = task_id;
                    row.set_name = set_name;
                    row.policy_name = np.name;
                    row.config_name = nc.name;
                    row.seed = seed;
                    if (!task) {
                        row.outcome = Outcome::failure;
                        row.error = lookup_error;
                        report.traces.emplace_back();
                        report.rows.push_back(std::move(row));
                        continue;
                    }
                    try {
                        SpeculationStats stats;
                        auto [trace, outcome] = run_task(*task, fixture, map, np.policy,
                                                         nc.config, Budget{}, seed, &stats);
                        row.outcome = outcome;
                        row.turns = trace.budget.used_turns;
                        row.tokens = trace_tokens(trace);
                        row.speculation = stats;
                        report.traces.push_back(std::move(trace));
                    } catch (const std::exception& e) {
                        row.outcome = Outcome::failure;
                        row.error = e.what();
                        report.traces.emplace_back();
                    }
                    report.rows.push_back(std::move(row));
                }
    }
    return report;
}

// ---------------------------------------------------------------------------
// aggregates
// ---------------------------------------------------------------------------

struct SetAggregate {
    std::string workload;
    std::string set_name;
    std::string policy_name;
    std::string config_name;
    std::int64_t runs = 0;
    std::int64_t successes = 0;
    Fraction success_rate{0, 1};
    double mean_turns = 0.0;
    TokenCost tokens;  // summed over runs
    CostBreakdown cost;  // summed over runs
};

inline std::vector<SetAggregate> aggregate_report(const RunReport& report,
                                                  const PricingTable& pricing) {
    using Key = std::tuple<std::string, std::string, std::string, std::string>;
    std::map<Key, SetAggregate> groups;
    for (const auto& row : report.rows) {
        const Key key{row.workload, row.set_name, row.policy_name, row.config_name};
        SetAggregate& agg = groups[key];
        if (agg.runs == 0) {
            agg.workload = row.workload;
            agg.set_name = row.set_name;
            agg.policy_name = row.policy_name;
            agg.config_name = row.config_name;
        }
        agg.runs += 1;
        if (row.outcome == Outcome::success) agg.successes += 1;
        agg.mean_turns += static_cast<double>(row.turns);
        agg.tokens.prompt += row.tokens.prompt;
        agg.tokens.cached += row.tokens.cached;
        agg.tokens.completion += row.tokens.completion;
    }
    std::vector<SetAggregate> out;
    for (auto& [key, agg] : groups) {
        (void)key;
        agg.success_rate = Fraction(agg.successes, agg.runs);
        agg.mean_turns /= static_cast<double>(agg.runs);
        agg.cost = cost_of(agg.tokens, pricing);
        out.push_back(agg);
    }
    return out;
}

// Percentage delta rendered with one decimal place; a zero baseline reports
// 0.0 so zero-priced runs stay well defined.
inline std::string format_pct_delta(double before, double after) {
    const double pct = before == 0.0 ? 0.0 : (after - before) / before * 100.0;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.1f", pct);
    return std::string(buf);
}

// ---------------------------------------------------------------------------
// CSV writers
// ---------------------------------------------------------------------------

namespace csv {

inline void row(std::ostream& os, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) os << ',';
        os << csv_escape(fields[i]);
    }
    os << '\n';
}

inline std::string num(std::int64_t v) { return std::to_string(v); }

inline std::string dec(double v) { return format_double(v); }

}  // namespace csv

inline void write_runs_csv(std::ostream& os, const RunReport& report,
                           const PricingTable& pricing) {
    csv::row(os, {"workload", "task_id", "set", "policy", "config", "seed", "outcome", "turns",
                  "prompt_tokens", "cached_tokens", "completion_tokens", "cost_prompt",
                  "cost_cached", "cost_completion", "cost_total", "spec_issued", "spec_hits",
                  "spec_misses", "spec_turns_saved", "spec_tokens_saved",
                  "spec_miss_tokens_wasted", "error"});
    for (const auto& r : report.rows) {
        const CostBreakdown c = cost_of(r.tokens, pricing);
        csv::row(os, {r.workload, r.task_id, r.set_name, r.policy_name, r.config_name,
                      std::to_string(r.seed), to_string(r.outcome), csv::num(r.turns),
                      csv::num(r.tokens.prompt), csv::num(r.tokens.cached),
                      csv::num(r.tokens.completion), csv::dec(c.prompt), csv::dec(c.cached),
                      csv::dec(c.completion), csv::dec(c.total), csv::num(r.speculation.issued),
                      csv::num(r.speculation.hits), csv::num(r.speculation.misses),
                      csv::num(r.speculation.turns_saved), csv::num(r.speculation.tokens_saved),
                      csv::num(r.speculation.miss_tokens_wasted), r.error});
    }
}

// Aggregate rows per (workload, set, policy, config) followed by delta rows
// for every ordered config pair within the same (workload, set, policy).
inline void write_summary_csv(std::ostream& os, const RunReport& report,
                              const PricingTable& pricing) {
    const std::vector<SetAggregate> aggs = aggregate_report(report, pricing);
    csv::row(os, {"row_type", "workload", "set", "policy", "config", "runs", "successes",
                  "success_rate", "mean_turns", "prompt_tokens", "cached_tokens",
                  "completion_tokens", "cost_total", "turns_delta_pct", "cost_delta_pct",
                  "success_delta_pct"});
    for (const auto& a : aggs)
        csv::row(os, {"aggregate", a.workload, a.set_name, a.policy_name, a.config_name,
                      csv::num(a.runs), csv::num(a.successes), format_fraction(a.success_rate),
                      csv::dec(a.mean_turns), csv::num(a.tokens.prompt),
                      csv::num(a.tokens.cached), csv::num(a.tokens.completion),
                      csv::dec(a.cost.total), "", "", ""});
    for (std::size_t i = 0; i < aggs.size(); ++i)
        for (std::size_t j = 0; j < aggs.size(); ++j) {
            if (i == j) continue;
            const SetAggregate& a = aggs[i];
            const SetAggregate& b = aggs[j];
            if (a.workload != b.workload || a.set_name != b.set_name ||
                a.policy_name != b.policy_name || a.config_name >= b.config_name)
                continue;
            csv::row(os, {"delta", a.workload, a.set_name, a.policy_name,
                          a.config_name + "->" + b.config_name, "", "", "", "", "", "", "", "",
                          format_pct_delta(a.mean_turns, b.mean_turns),
                          format_pct_delta(a.cost.total, b.cost.total),
                          format_pct_delta(static_cast<double>(a.success_rate.numerator()) /
                                               static_cast<double>(a.success_rate.denominator()),
                                           static_cast<double>(b.success_rate.numerator()) /
                                               static_cast<double>(b.success_rate.denominator()))});
        }
}

// Per-trace cost/turn rows plus a trailing TOTAL row.
inline void write_cost_turns_csv(std::ostream& os, const std::vector<Trace>& traces,
                                 const PricingTable& pricing) {
    csv::row(os, {"task_id", "workload", "outcome", "turns", "prompt_tokens", "cached_tokens",
                  "completion_tokens", "cost_prompt", "cost_cached", "cost_completion",
                  "cost_total"});
    TokenCost total;
    std::int64_t total_turns = 0;
    for (const auto& trace : traces) {
        if (trace.task_id.empty()) continue;
        const TokenCost t = trace_tokens(trace);
        const CostBreakdown c = cost_of(t, pricing);
        csv::row(os, {trace.task_id, trace.workload, to_string(trace.outcome),
                      csv::num(trace.budget.used_turns), csv::num(t.prompt), csv::num(t.cached),
                      csv::num(t.completion), csv::dec(c.prompt), csv::dec(c.cached),
                      csv::dec(c.completion), csv::dec(c.total)});
        total.prompt += t.prompt;
        total.cached += t.cached;
        total.completion += t.completion;
        total_turns += trace.budget.used_turns;
    }
    const CostBreakdown c = cost_of(total, pricing);
    csv::row(os, {"TOTAL", "", "", csv::num(total_turns), csv::num(total.prompt),
                  csv::num(total.cached), csv::num(total.completion), csv::dec(c.prompt),
                  csv::dec(c.cached), csv::dec(c.completion), csv::dec(c.total)});
}

// Six rows per workload in the canonical category order, one count column per
// named annotation set (e.g. Base, Opt).
inline void write_failure_breakdown_csv(
    std::ostream& os,
    const std::vector<std::pair<std::string, std::vector<FailureAnnotation>>>& columns,
    const std::vector<std::string>& extra_workloads = {}) {
    std::vector<std::string> header{"workload", "category"};
    std::vector<std::map<std::string, std::map<std::string, std::int64_t>>> tables;
    std::vector<std::string> workloads_seen = extra_workloads;
    for (const auto& [name, annotations] : columns) {
        header.push_back(name);
        tables.push_back(failure_breakdown(annotations));
        for (const auto& [wl, row] : tables.back()) {
            (void)row;
            if (std::find(workloads_seen.begin(), workloads_seen.end(), wl) ==
                workloads_seen.end())
                workloads_seen.push_back(wl);
        }
    }
    std::sort(workloads_seen.begin(), workloads_seen.end());
    workloads_seen.erase(std::unique(workloads_seen.begin(), workloads_seen.end()),
                         workloads_seen.end());
    csv::row(os, header);
    for (const auto& wl : workloads_seen)
        for (const auto& category : failure_categories()) {
            std::vector<std::string> fields{wl, category};
            for (const auto& table : tables) {
                const auto it = table.find(wl);
                fields.push_back(csv::num(it == table.end() ? 0 : it->second.at(category)));
            }
            csv::row(os, fields);
        }
}

// Fixed annotation column set: task_id, failed_subtask, category, subtype,
// turn, evidence.
inline void write_annotations_csv(std::ostream& os,
                                  const std::vector<FailureAnnotation>& annotations) {
    csv::row(os, {"task_id", "failed_subtask", "category", "subtype", "turn", "evidence"});
    for (const auto& a : annotations)
        csv::row(os, {a.task_id, a.failed_subtask, a.category, a.subtype, csv::num(a.turn),
                      a.evidence});
}

// Merged-graph weights: node rows then edge rows, exact fractional weights.
inline void write_weights_csv(std::ostream& os, const MergedSubtaskGraph& merged) {
    csv::row(os, {"type", "from", "to", "count", "weight"});
    for (const auto& [node, weight] : merged.node_weights)
        csv::row(os, {"node", node, "", csv::num(merged.node_counts.at(node)),
                      format_fraction(weight)});
    for (const auto& [edge, weight] : merged.edge_weights)
        csv::row(os, {"edge", edge.first, edge.second, csv::num(merged.edge_counts.at(edge)),
                      format_fraction(weight)});
}

inline void write_brittleness_csv(std::ostream& os, const std::vector<BrittlenessRow>& rows) {
    csv::row(os, {"subtask", "occurrences", "total_occurrences", "failures", "frequency",
                  "failure_rate", "leverage"});
    for (const auto& r : rows)
        csv::row(os, {r.subtask, csv::num(r.occurrences), csv::num(r.total_occurrences),
                      csv::num(r.failures), format_fraction(r.frequency),
                      format_fraction(r.failure_rate), format_fraction(r.leverage)});
}

// ---------------------------------------------------------------------------
// CSV parsing (annotations round-trip for the report subcommand)
// ---------------------------------------------------------------------------

inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    std::size_t i = 0;
    const auto end_field = [&] {
        fields.push_back(std::move(field));
        field.clear();
    };
    const auto end_row = [&] {
        end_field();
        rows.push_back(std::move(fields));
        fields.clear();
    };
    while (i < text.size()) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\n') {
            end_row();
        } else if (c != '\r') {
            field += c;
        }
        ++i;
    }
    if (!field.empty() || !fields.empty()) end_row();
    return rows;
}

inline std::vector<FailureAnnotation> parse_annotations_csv(const std::string& text) {
    const auto rows = parse_csv(text);
    std::vector<FailureAnnotation> out;
    if (rows.empty()) return out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (r.size() < 6)
            throw ParseError("annotations row needs 6 fields", static_cast<std::int64_t>(i + 1));
        FailureAnnotation a;
        a.task_id = r[0];
        a.failed_subtask = r[1];
        a.category = r[2];
        a.subtype = r[3];
        try {
            a.turn = std::stoll(r[4]);
        } catch (const std::exception&) {
            throw ParseError("annotations turn must be an integer",
                             static_cast<std::int64_t>(i + 1));
        }
        a.evidence = r[5];
        out.push_back(std::move(a));
    }
    return out;
}

}  // namespace agentsim
