#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "agentsim/common.hpp"
#include "agentsim/errors.hpp"
#include "agentsim/trace.hpp"

namespace agentsim {

enum class SubtaskKind { exploration, exploitation };

inline std::string to_string(SubtaskKind k) {
    return k == SubtaskKind::exploration ? "exploration" : "exploitation";
}

inline SubtaskKind subtask_kind_from_string(const std::string& s) {
    if (s == "exploration" || s == "explore") return SubtaskKind::exploration;
    if (s == "exploitation" || s == "exploit") return SubtaskKind::exploitation;
    throw ConfigError("unknown subtask kind: " + s);
}

enum class SubtaskOrigin { tool_mapped, decomposed };

struct Subtask {
    std::string name;
    SubtaskKind kind = SubtaskKind::exploration;
    SubtaskOrigin origin = SubtaskOrigin::tool_mapped;
};

// One subtask occurrence produced by mapping a tool call.
struct SubtaskOccurrence {
    std::string name;
    std::int64_t turn = 0;
    std::size_t call_index = 0;  // position in collect_calls order
};

// Declarative predicate over a call's arguments/response used by
// decomposition rules: {"field": ..., "op": exists|equals|contains, "value": ...}.
// An empty predicate always fires.
struct SplitPredicate {
    json spec = json::object();

    bool matches(const json& arguments, const json& response_payload) const {
        if (spec.empty()) return true;
        const std::string field = spec.value("field", std::string());
        const std::string op = spec.value("op", std::string("exists"));
        json value;
        if (field.rfind("response.", 0) == 0)
            value = extract_path(response_payload, field.substr(9));
        else
            value = extract_path(arguments, field);
        if (op == "exists") return !value.is_null();
        if (op == "equals") return value == spec.value("value", json());
        if (op == "contains") {
            if (value.is_string() && spec.contains("value") && spec["value"].is_string())
                return value.get<std::string>().find(spec["value"].get<std::string>()) !=
                       std::string::npos;
            if (value.is_array()) {
                for (const auto& item : value)
                    if (item == spec.value("value", json())) return true;
            }
            return false;
        }
        throw ConfigError("unknown split predicate op: " + op);
    }
};

struct DecompositionRule {
    std::string tool_name;                // parent tool the rule applies to
    std::vector<std::string> children;    // ordered replacement subtasks
    SplitPredicate when;
};

struct SubtaskMap {
    std::string workload;
    std::map<std::string, std::string> tool_rules;          // tool name -> subtask name
    std::map<std::string, SubtaskKind> kinds;               // subtask vocabulary
    std::vector<DecompositionRule> decomposition_rules;
    std::vector<std::pair<std::string, std::string>> dependencies;  // (from, to)
    std::set<std::string> mutating_tools;  // lets trace analysis spot mutations without a fixture

    SubtaskKind kind_of(const std::string& subtask) const {
        auto it = kinds.find(subtask);
        if (it == kinds.end()) throw ConfigError("subtask missing from vocabulary: " + subtask);
        return it->second;
    }

    void validate() const {
        for (const auto& [tool, subtask] : tool_rules) {
            (void)tool;
            if (!kinds.count(subtask)) throw ConfigError("subtask missing from vocabulary: " + subtask);
        }
        for (const auto& rule : decomposition_rules) {
            if (rule.children.empty())
                throw ConfigError("decomposition rule with no children: " + rule.tool_name);
            for (const auto& child : rule.children)
                if (!kinds.count(child)) throw ConfigError("subtask missing from vocabulary: " + child);
        }
        for (const auto& [from, to] : dependencies) {
            if (!kinds.count(from)) throw ConfigError("dependency endpoint not in vocabulary: " + from);
            if (!kinds.count(to)) throw ConfigError("dependency endpoint not in vocabulary: " + to);
        }
        check_dependency_acyclicity();
    }

    // Declared dependencies must be a DAG; raises CycleError listing a cycle.
    void check_dependency_acyclicity() const {
        std::map<std::string, std::vector<std::string>> adj;
        for (const auto& [from, to] : dependencies) adj[from].push_back(to);
        std::map<std::string, int> state;  // 0 unseen, 1 on stack, 2 done
        std::vector<std::string> stack;
        std::vector<std::string> cycle;
        std::function<bool(const std::string&)> dfs = [&](const std::string& node) {
            state[node] = 1;
            stack.push_back(node);
            for (const auto& next : adj[node]) {
                if (state[next] == 1) {
                    auto it = std::find(stack.begin(), stack.end(), next);
                    cycle.assign(it, stack.end());
                    cycle.push_back(next);
                    return true;
                }
                if (state[next] == 0 && dfs(next)) return true;
            }
            stack.pop_back();
            state[node] = 2;
            return false;
        };
        for (const auto& [from, to] : dependencies) {
            (void)to;
            if (state[from] == 0 && dfs(from)) {
                std::string path;
                for (std::size_t i = 0; i < cycle.size(); ++i) {
                    if (i) path += " -> ";
                    path += cycle[i];
                }
                throw CycleError("cyclic dependency declaration: " + path);
            }
        }
    }

    json to_json() const {
        json jt = json::object();
        for (const auto& [tool, subtask] : tool_rules) jt[tool] = subtask;
        json jk = json::object();
        for (const auto& [name, kind] : kinds) jk[name] = to_string(kind);
        json jd = json::array();
        for (const auto& rule : decomposition_rules) {
            json r{{"tool", rule.tool_name}, {"children", rule.children}};
            if (!rule.when.spec.empty()) r["when"] = rule.when.spec;
            jd.push_back(r);
        }
        json je = json::array();
        for (const auto& [from, to] : dependencies) je.push_back(json{{"from", from}, {"to", to}});
        return json{{"workload", workload},
                    {"tool_rules", jt},
                    {"subtasks", jk},
                    {"decomposition_rules", jd},
                    {"dependencies", je},
                    {"mutating_tools", json(mutating_tools)}};
    }

    static SubtaskMap from_json(const json& j) {
        SubtaskMap map;
        map.workload = j.at("workload").get<std::string>();
        for (const auto& [tool, subtask] : j.at("tool_rules").items())
            map.tool_rules[tool] = subtask.get<std::string>();
        for (const auto& [name, kind] : j.at("subtasks").items())
            map.kinds[name] = subtask_kind_from_string(kind.get<std::string>());
        for (const auto& r : j.value("decomposition_rules", json::array())) {
            DecompositionRule rule;
            rule.tool_name = r.at("tool").get<std::string>();
            for (const auto& c : r.at("children")) rule.children.push_back(c.get<std::string>());
            if (r.contains("when")) rule.when.spec = r["when"];
            map.decomposition_rules.push_back(rule);
        }
        for (const auto& e : j.value("dependencies", json::array()))
            map.dependencies.emplace_back(e.at("from").get<std::string>(), e.at("to").get<std::string>());
        for (const auto& t : j.value("mutating_tools", json::array()))
            map.mutating_tools.insert(t.get<std::string>());
        map.validate();
        return map;
    }
};

// Maps one call to its ordered subtask occurrences: the decomposition rule
// replaces the tool-mapped subtask when its predicate fires.
inline std::vector<std::string> subtasks_for_call(const SubtaskMap& map, const ToolCall& call,
                                                  const json& response_payload) {
    auto it = map.tool_rules.find(call.tool_name);
    if (it == map.tool_rules.end())
        throw MappingError("tool not covered by subtask map: " + call.tool_name);
    for (const auto& rule : map.decomposition_rules) {
        if (rule.tool_name != call.tool_name) continue;
        if (rule.when.matches(call.arguments, response_payload)) return rule.children;
    }
    return {it->second};
}

// Ordered subtask occurrences of a full trace.
inline std::vector<SubtaskOccurrence> map_trace_to_subtasks(const Trace& trace, const SubtaskMap& map) {
    std::vector<SubtaskOccurrence> out;
    const auto calls = collect_calls(trace);
    for (std::size_t i = 0; i < calls.size(); ++i) {
        const json payload = calls[i].response ? calls[i].response->payload : json();
        for (const auto& name : subtasks_for_call(map, *calls[i].call, payload)) {
            SubtaskOccurrence occ;
            occ.name = name;
            occ.turn = calls[i].turn;
            occ.call_index = i;
            out.push_back(occ);
        }
    }
    return out;
}

using Edge = std::pair<std::string, std::string>;

struct SubtaskGraph {
    std::string task_id;
    std::set<std::string> nodes;
    std::set<Edge> edges;
    // Realized transition counts per edge; >= 1 for every member of `edges`.
    // Only the per-occurrence merge mode reads the multiplicities.
    std::map<Edge, std::int64_t> edge_counts;
};

// Per-task graph: nodes are the distinct occurrence names, edges are the
// declared dependencies with both endpoints present. An edge's count is the
// number of occurrences of the target that follow at least one occurrence of
// the source.
inline SubtaskGraph build_subtask_graph(const std::string& task_id,
                                        const std::vector<SubtaskOccurrence>& occurrences,
                                        const SubtaskMap& map) {
    map.check_dependency_acyclicity();
    SubtaskGraph graph;
    graph.task_id = task_id;
    for (const auto& occ : occurrences) graph.nodes.insert(occ.name);
    for (const auto& [from, to] : map.dependencies) {
        if (!graph.nodes.count(from) || !graph.nodes.count(to)) continue;
        std::int64_t count = 0;
        bool seen_from = false;
        for (const auto& occ : occurrences) {
            if (occ.name == to && seen_from) ++count;
            if (occ.name == from) seen_from = true;
        }
        graph.edges.insert({from, to});
        graph.edge_counts[{from, to}] = std::max<std::int64_t>(count, 1);
    }
    return graph;
}

enum class EdgeCountMode { per_task_presence, per_occurrence };

struct MergedSubtaskGraph {
    std::int64_t task_count = 0;
    std::map<std::string, Fraction> node_weights;
    std::map<Edge, Fraction> edge_weights;
    std::map<std::string, std::int64_t> node_counts;
    std::map<Edge, std::int64_t> edge_counts;
    std::map<std::string, SubtaskKind> node_kinds;  // filled when a vocabulary is supplied
};

inline MergedSubtaskGraph merge_graphs(const std::vector<SubtaskGraph>& graphs,
                                       const SubtaskMap* vocabulary = nullptr,
                                       EdgeCountMode mode = EdgeCountMode::per_task_presence) {
    if (graphs.empty()) throw ValidationError("empty merge input", "merge_graphs needs at least one graph");
    MergedSubtaskGraph merged;
    merged.task_count = static_cast<std::int64_t>(graphs.size());
    for (const auto& graph : graphs) {
        for (const auto& node : graph.nodes) merged.node_counts[node] += 1;
        for (const auto& edge : graph.edges) {
            if (mode == EdgeCountMode::per_task_presence) {
                merged.edge_counts[edge] += 1;
            } else {
                auto it = graph.edge_counts.find(edge);
                merged.edge_counts[edge] += it == graph.edge_counts.end() ? 1 : it->second;
            }
        }
    }
    for (const auto& [node, count] : merged.node_counts)
        merged.node_weights[node] = Fraction(count, merged.task_count);
    for (const auto& [edge, count] : merged.edge_counts)
        merged.edge_weights[edge] = Fraction(count, merged.task_count);
    if (vocabulary)
        for (const auto& [node, count] : merged.node_counts) {
            (void)count;
            merged.node_kinds[node] = vocabulary->kind_of(node);
        }
    return merged;
}

// Deterministic DOT rendering: nodes then edges, both sorted; penwidth scales
// with weight (weight 1 is maximal).
inline std::string export_graph_dot(const MergedSubtaskGraph& graph) {
    constexpr double kMaxPenwidth = 4.0;
    constexpr double kMinPenwidth = 0.5;
    auto penwidth = [&](const Fraction& w) {
        double v = static_cast<double>(w.numerator()) / static_cast<double>(w.denominator());
        if (v > 1.0) v = 1.0;
        return kMinPenwidth + (kMaxPenwidth - kMinPenwidth) * v;
    };
    std::ostringstream out;
    out << "digraph merged_subtasks {\n";
    out << "  rankdir=LR;\n";
    for (const auto& [node, weight] : graph.node_weights) {
        out << "  \"" << node << "\" [weight=" << format_fraction(weight);
        auto kind = graph.node_kinds.find(node);
        if (kind != graph.node_kinds.end())
            out << ", kind=" << (kind->second == SubtaskKind::exploration ? "explore" : "exploit");
        out << ", penwidth=" << format_double(penwidth(weight)) << "];\n";
    }
    for (const auto& [edge, weight] : graph.edge_weights) {
        out << "  \"" << edge.first << "\" -> \"" << edge.second
            << "\" [weight=" << format_fraction(weight)
            << ", penwidth=" << format_double(penwidth(weight)) << "];\n";
    }
    out << "}\n";
    return out.str();
}

struct BrittlenessRow {
    std::string subtask;
    std::int64_t occurrences = 0;
    std::int64_t total_occurrences = 0;
    std::int64_t failures = 0;
    Fraction frequency{0, 1};
    Fraction failure_rate{0, 1};
    Fraction leverage{0, 1};  // failure_rate * frequency, the sort key
};

// Brittleness over a corpus: frequency is occurrences / all occurrences,
// failure_rate is failures / occurrences of that subtask. `failed_subtasks`
// holds one entry per failed trace (the annotated failed subtask).
inline std::vector<BrittlenessRow> brittleness_table(const std::vector<Trace>& traces,
                                                     const std::vector<std::string>& failed_subtasks,
                                                     const SubtaskMap& map) {
    std::map<std::string, std::int64_t> occurrence_counts;
    std::int64_t total = 0;
    for (const auto& trace : traces) {
        for (const auto& occ : map_trace_to_subtasks(trace, map)) {
            occurrence_counts[occ.name] += 1;
            ++total;
        }
    }
    std::map<std::string, std::int64_t> failure_counts;
    for (const auto& name : failed_subtasks) {
        if (!occurrence_counts.count(name))
            throw ValidationError("annotation references subtask with no occurrences", name);
        failure_counts[name] += 1;
    }
    std::vector<BrittlenessRow> rows;
    for (const auto& [name, count] : occurrence_counts) {
        BrittlenessRow row;
        row.subtask = name;
        row.occurrences = count;
        row.total_occurrences = total;
        row.failures = failure_counts.count(name) ? failure_counts[name] : 0;
        row.frequency = Fraction(count, total);
        row.failure_rate = Fraction(row.failures, count);
        row.leverage = row.failure_rate * row.frequency;
        rows.push_back(row);
    }
    std::sort(rows.begin(), rows.end(), [](const BrittlenessRow& a, const BrittlenessRow& b) {
        if (a.leverage != b.leverage) return a.leverage > b.leverage;
        return a.subtask < b.subtask;
    });
    return rows;
}

}  // namespace agentsim
