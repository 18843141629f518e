#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "agentsim/common.hpp"
#include "agentsim/config.hpp"
#include "agentsim/env/session.hpp"
#include "agentsim/env/world.hpp"

namespace agentsim {

// One row of the speculation table: after `trigger` succeeds, pre-execute
// `target` with arguments built from the binding spec. Binding spec per
// target argument: {"response": "<path>"} (extract from trigger payload),
// {"arg": "<key>"} (copy trigger argument), or {"const": <value>}.
struct SpeculationEntry {
    std::string trigger;
    std::string target;
    Fraction weight = Fraction(0);
    json bind = json::object();

    json to_json() const {
        return json{{"trigger", trigger},
                    {"target", target},
                    {"weight", format_fraction(weight)},
                    {"bind", bind}};
    }
    static SpeculationEntry from_json(const json& j) {
        SpeculationEntry e;
        e.trigger = j.at("trigger").get<std::string>();
        e.target = j.at("target").get<std::string>();
        e.weight = fraction_from_json(j.at("weight"));
        e.bind = j.value("bind", json::object());
        return e;
    }
};

struct OptimizationConfig {
    bool lookahead_enabled = false;
    int lookahead_depth = 1;
    bool state_confirmation_enabled = false;
    bool offload_enabled = false;
    std::set<std::string> offload_aggregates;
    bool guardrails_enabled = false;
    bool rule_hints_enabled = false;
    bool speculation_enabled = false;
    Fraction speculation_threshold = Fraction(1, 2);
    bool speculation_charge_tokens = true;
    std::vector<SpeculationEntry> speculation_table;

    bool any_enabled() const {
        return lookahead_enabled || state_confirmation_enabled || offload_enabled ||
               guardrails_enabled || rule_hints_enabled || speculation_enabled;
    }

    void validate() const {
        if (lookahead_depth < 1) throw ConfigError("lookahead_depth must be >= 1");
        if (speculation_threshold <= Fraction(0) || speculation_threshold > Fraction(1))
            throw ConfigError("speculation_threshold must be in (0, 1]");
        static const std::set<std::string> known{"sort_by", "min",   "max",        "mean",
                                                "sum",     "count", "filter_hint"};
        for (const auto& a : offload_aggregates)
            if (!known.count(a)) throw ConfigError("unknown offload aggregate: " + a);
        if (speculation_enabled && speculation_table.empty())
            throw ConfigError("speculation enabled but speculation_table is empty");
    }

    json to_json() const {
        json table = json::array();
        for (const auto& e : speculation_table) table.push_back(e.to_json());
        return json{{"lookahead", json{{"enabled", lookahead_enabled}, {"depth", lookahead_depth}}},
                    {"state_confirmation", json{{"enabled", state_confirmation_enabled}}},
                    {"offload", json{{"enabled", offload_enabled},
                                     {"aggregates", json(offload_aggregates)}}},
                    {"guardrails", json{{"enabled", guardrails_enabled}}},
                    {"rule_hints", json{{"enabled", rule_hints_enabled}}},
                    {"speculation", json{{"enabled", speculation_enabled},
                                         {"threshold", format_fraction(speculation_threshold)},
                                         {"charge_tokens", speculation_charge_tokens},
                                         {"table", table}}}};
    }

    static OptimizationConfig from_json(const json& j) {
        OptimizationConfig c;
        if (j.contains("lookahead")) {
            c.lookahead_enabled = j["lookahead"].value("enabled", false);
            c.lookahead_depth = j["lookahead"].value("depth", 1);
        }
        if (j.contains("state_confirmation"))
            c.state_confirmation_enabled = j["state_confirmation"].value("enabled", false);
        if (j.contains("offload")) {
            c.offload_enabled = j["offload"].value("enabled", false);
            for (const auto& a : j["offload"].value("aggregates", json::array()))
                c.offload_aggregates.insert(a.get<std::string>());
        }
        if (j.contains("guardrails")) c.guardrails_enabled = j["guardrails"].value("enabled", false);
        if (j.contains("rule_hints")) c.rule_hints_enabled = j["rule_hints"].value("enabled", false);
        if (j.contains("speculation")) {
            const json& s = j["speculation"];
            c.speculation_enabled = s.value("enabled", false);
            if (s.contains("threshold")) c.speculation_threshold = fraction_from_json(s["threshold"]);
            c.speculation_charge_tokens = s.value("charge_tokens", true);
            for (const auto& e : s.value("table", json::array()))
                c.speculation_table.push_back(SpeculationEntry::from_json(e));
        }
        c.validate();
        return c;
    }

    static OptimizationConfig load(const std::string& path) {
        return from_json(load_config_file(path));
    }
};

struct SpeculationStats {
    std::int64_t issued = 0;
    std::int64_t hits = 0;
    std::int64_t misses = 0;
    std::int64_t turns_saved = 0;
    std::int64_t tokens_saved = 0;
    std::int64_t miss_tokens_wasted = 0;

    json to_json() const {
        return json{{"issued", issued},
                    {"hits", hits},
                    {"misses", misses},
                    {"turns_saved", turns_saved},
                    {"tokens_saved", tokens_saved},
                    {"miss_tokens_wasted", miss_tokens_wasted}};
    }
};

// Locates the record list inside a payload: the payload itself when it is an
// array of objects, else the first object member (in key order) that is one.
struct RecordListRef {
    const json* records = nullptr;
    std::string key;
};
inline std::optional<RecordListRef> find_record_list(const json& payload) {
    auto is_record_list = [](const json& v) {
        if (!v.is_array() || v.empty()) return false;
        for (const auto& r : v)
            if (!r.is_object()) return false;
        return true;
    };
    if (is_record_list(payload)) return RecordListRef{&payload, ""};
    if (payload.is_object())
        for (const auto& [k, v] : payload.items())
            if (is_record_list(v)) return RecordListRef{&v, k};
    return std::nullopt;
}

inline std::string identifier_field(const json& records) {
    const json& first = records[0];
    for (const auto& [k, v] : first.items()) {
        (void)v;
        if (k.size() > 3 && k.rfind("_id") == k.size() - 3) return k;
    }
    if (first.contains("name")) return "name";
    return "";
}

// The interceptor chain between agent and environment. Wraps a session's
// executor: guardrail pre-check, base invocation, then response-side
// augmentations. The base payload is never rewritten.
class Middleware {
public:
    Middleware(Session& session, OptimizationConfig config)
        : session_(session), config_(std::move(config)) {
        config_.validate();
        for (const auto& e : config_.speculation_table) {
            if (!session_.world().registry().contains(e.target)) continue;
            if (session_.world().registry().get(e.target).mutating)
                throw ConfigError("speculation target must be non-mutating: " + e.target);
        }
        if (!config_.speculation_charge_tokens)
            session_.uncharged_augmentation_keys.insert("speculative_bundle");
        session_.set_executor([this](const ToolCall& call) { return intercept(call); });
    }

    const OptimizationConfig& config() const { return config_; }
    const SpeculationStats& stats() const { return stats_; }

    ToolResponse intercept(const ToolCall& call) {
        World& world = session_.world();
        const bool known_tool = world.registry().contains(call.tool_name);
        const bool mutating = known_tool && world.registry().get(call.tool_name).mutating;

        if (config_.guardrails_enabled && mutating) {
            const RuleDecision decision =
                world.rules().check(call.tool_name, call.arguments, world.store_view());
            if (decision.rejected) {
                ToolResponse resp;
                resp.call_id = call.call_id;
                resp.is_error = true;
                resp.payload = json{{"error", decision.message}, {"rule", decision.rule}};
                return resp;  // rejected before execution: state untouched
            }
        }

        if (pending_ && call.tool_name == pending_->target && call.arguments != pending_->arguments)
            expire_miss();

        ToolResponse resp = session_.direct_invoke(call);

        if (pending_ && mutating && !resp.is_error) expire_miss();
        if (resp.is_error) return resp;  // base errors pass through unaugmented

        const ToolSpec& spec = world.registry().get(call.tool_name);
        if (config_.state_confirmation_enabled && spec.changes_agent_state)
            attach(resp, "state_confirmation", state_confirmation(world));
        if (config_.lookahead_enabled && spec.exploration)
            attach(resp, "lookahead", lookahead(world, call));
        if (config_.offload_enabled) attach(resp, "precomputed", precomputed(resp.payload));
        if (config_.rule_hints_enabled) attach(resp, "rule_hint", rule_hints(world, resp.payload));
        if (config_.speculation_enabled) speculate(call, resp);
        return resp;
    }

    // Called by the driver before it spends a turn on `intended`: on a hit
    // the bundled response is returned and the agent call is recorded inside
    // the trigger turn by the caller.
    std::optional<ToolResponse> serve_from_bundle(const ToolCall& intended) {
        if (!pending_ || intended.tool_name != pending_->target) return std::nullopt;
        if (intended.arguments != pending_->arguments) {
            expire_miss();
            return std::nullopt;
        }
        stats_.hits += 1;
        stats_.turns_saved += 1;
        stats_.tokens_saved += estimate_tokens(intended.arguments);
        ToolResponse resp;
        resp.payload = pending_->payload;
        resp.is_error = false;
        pending_.reset();
        return resp;
    }

    // A bundle still pending when the trace ends counts as a miss.
    void note_trace_end() {
        if (pending_) expire_miss();
    }

    // --- augmentation builders (also used directly by soundness tests) ---

    static json state_confirmation(const World& world) {
        json out = world.agent_state();
        const json listing = world.position_listing();
        if (!listing.is_null()) out["listing"] = listing;
        return out;
    }

    json lookahead(const World& world, const ToolCall& call) const {
        json out = json::object();
        if (auto info = world.page_info(call.tool_name, call.arguments))
            out = json{{"total", info->total}, {"retrieved", info->retrieved}};
        const std::vector<std::string> adjacent = world.neighborhood(config_.lookahead_depth);
        if (!adjacent.empty() || world.workload() == "file_system") out["adjacent"] = adjacent;
        return out;
    }

    json precomputed(const json& payload) const {
        const auto list = find_record_list(payload);
        if (!list) return json::object();
        const json& records = *list->records;
        const std::string id_field = identifier_field(records);
        const auto& aggs = config_.offload_aggregates;

        json out = json::object();
        if (aggs.count("count")) out["count"] = records.size();

        // Fields typed consistently across every record.
        std::vector<std::string> numeric, textual;
        for (const auto& [k, v] : records[0].items()) {
            (void)v;
            bool all_num = true, all_text = true;
            for (const auto& r : records) {
                if (!r.contains(k)) {
                    all_num = all_text = false;
                    break;
                }
                if (!r[k].is_number()) all_num = false;
                if (!r[k].is_string() && !r[k].is_boolean()) all_text = false;
            }
            if (all_num) numeric.push_back(k);
            if (all_text) textual.push_back(k);
        }

        json fields = json::object();
        for (const auto& f : numeric) {
            json stats = json::object();
            double sum = 0;
            bool integral = true;
            json minv = records[0][f], maxv = records[0][f];
            for (const auto& r : records) {
                if (r[f] < minv) minv = r[f];
                if (r[f] > maxv) maxv = r[f];
                sum += r[f].get<double>();
                if (!r[f].is_number_integer()) integral = false;
            }
            if (aggs.count("min")) stats["min"] = minv;
            if (aggs.count("max")) stats["max"] = maxv;
            if (aggs.count("sum")) {
                if (integral)
                    stats["sum"] = static_cast<std::int64_t>(sum);
                else
                    stats["sum"] = sum;
            }
            if (aggs.count("mean")) stats["mean"] = sum / static_cast<double>(records.size());
            if (aggs.count("sort_by") && !id_field.empty()) {
                std::vector<std::pair<json, json>> order;  // (value, id)
                for (const auto& r : records) order.emplace_back(r[f], r.value(id_field, json()));
                std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
                    if (a.first != b.first) return a.first < b.first;
                    return a.second < b.second;
                });
                json ids = json::array();
                for (const auto& [v, id] : order) ids.push_back(id);
                stats["sort_by"] = ids;
            }
            if (!stats.empty()) fields[f] = stats;
        }
        if (!fields.empty()) out["fields"] = fields;

        if (aggs.count("filter_hint")) {
            json filters = json::object();
            for (const auto& f : textual) {
                if (f == id_field) continue;
                std::map<std::string, std::int64_t> counts;
                for (const auto& r : records) counts[canonical_text(r[f])] += 1;
                if (counts.size() < records.size()) {
                    json per = json::object();
                    for (const auto& [v, n] : counts) per[v] = n;
                    filters[f] = per;
                }
            }
            if (!filters.empty()) out["filters"] = filters;
        }
        return out;
    }

    // Per entity in the payload, the verdict of every forbid rule that binds
    // an entity of that rule's store, evaluated on a hypothetical call
    // carrying only the entity id.
    static json rule_hints(const World& world, const json& payload) {
        const RuleSet& rules = world.rules();
        if (rules.rules.empty()) return json::object();
        std::vector<json> entities;
        if (auto list = find_record_list(payload))
            for (const auto& r : *list->records) entities.push_back(r);
        if (entities.empty() && payload.is_object()) entities.push_back(payload);

        json out = json::object();
        for (const auto& entity : entities) {
            for (const auto& rule : rules.rules) {
                if (rule.effect != RuleEffect::forbid) continue;
                const std::string idf = rule.id_field.empty() ? rule.id_arg : rule.id_field;
                if (idf.empty() || !entity.contains(idf)) continue;
                const json hypothetical{{rule.id_arg, entity[idf]}};
                const RuleDecision d =
                    rules.check(rule.applies_to, hypothetical, world.store_view());
                const bool forbidden = d.rejected && d.rule == rule.name;
                out[canonical_text(entity[idf])][rule.name] =
                    forbidden ? "forbidden" : "permitted";
            }
        }
        return out;
    }

private:
    struct PendingBundle {
        std::string target;
        json arguments;
        json payload;
        std::int64_t payload_tokens = 0;
    };

    void attach(ToolResponse& resp, const std::string& key, json value) {
        if (value.is_object() && value.empty()) return;
        resp.augmentations[key] = std::move(value);
    }

    void expire_miss() {
        stats_.misses += 1;
        stats_.miss_tokens_wasted += pending_->payload_tokens;
        pending_.reset();
    }

    void speculate(const ToolCall& trigger, ToolResponse& resp) {
        for (const auto& entry : config_.speculation_table) {
            if (entry.trigger != trigger.tool_name) continue;
            if (entry.weight < config_.speculation_threshold) continue;
            json bound = json::object();
            bool ok = true;
            for (const auto& [arg, spec] : entry.bind.items()) {
                json value;
                if (spec.is_object() && spec.contains("response"))
                    value = extract_path(resp.payload, spec["response"].get<std::string>());
                else if (spec.is_object() && spec.contains("arg"))
                    value = trigger.arguments.value(spec["arg"].get<std::string>(), json());
                else if (spec.is_object() && spec.contains("const"))
                    value = spec["const"];
                if (value.is_null()) {
                    ok = false;  // binding failure: silently skip speculation
                    break;
                }
                bound[arg] = value;
            }
            if (!ok) continue;

            ToolCall target;
            target.tool_name = entry.target;
            target.arguments = bound;
            const ToolResponse result = session_.direct_invoke(target);
            if (result.is_error) continue;  // never bundle a failed execution

            if (pending_) expire_miss();  // replacement expires the old bundle
            PendingBundle bundle;
            bundle.target = entry.target;
            bundle.arguments = bound;
            bundle.payload = result.payload;
            bundle.payload_tokens = estimate_tokens(result.payload);
            stats_.issued += 1;
            resp.augmentations["speculative_bundle"] = json{{"tool", entry.target},
                                                            {"arguments", bound},
                                                            {"payload", result.payload}};
            pending_ = std::move(bundle);
            return;
        }
    }

    Session& session_;
    OptimizationConfig config_;
    SpeculationStats stats_;
    std::optional<PendingBundle> pending_;
};

}  // namespace agentsim
