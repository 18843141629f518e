#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "agentsim/env/session.hpp"
#include "agentsim/expected.hpp"
#include "agentsim/middleware.hpp"

namespace agentsim {

// Error profile of a scripted agent. Each rate is the chance that the step
// carrying the matching knob misbehaves; the sensitivity factor scales a rate
// down once the mitigating augmentation has appeared in context.
struct AgentPolicy {
    std::string kind = "oracle";  // "oracle" | "noisy"
    double p_navigation = 0.0;
    double p_state = 0.0;
    double p_compute = 0.0;
    double p_rule = 0.0;
    double p_verbosity = 0.0;
    double augmentation_sensitivity = 0.0;

    static AgentPolicy oracle() { return AgentPolicy{}; }

    static AgentPolicy noisy_default() {
        AgentPolicy p;
        p.kind = "noisy";
        p.p_navigation = p.p_state = p.p_compute = p.p_rule = p.p_verbosity = 0.5;
        p.augmentation_sensitivity = 0.0;
        return p;
    }

    double rate(const std::string& knob) const {
        if (knob == "navigation") return p_navigation;
        if (knob == "state") return p_state;
        if (knob == "compute") return p_compute;
        if (knob == "rule") return p_rule;
        if (knob == "verbosity") return p_verbosity;
        return 0.0;
    }

    void validate() const {
        if (kind != "oracle" && kind != "noisy")
            throw ConfigError("agent kind must be oracle or noisy, got: " + kind);
        for (double p : {p_navigation, p_state, p_compute, p_rule, p_verbosity,
                         augmentation_sensitivity})
            if (p < 0.0 || p > 1.0)
                throw ConfigError("agent probabilities must lie in [0, 1]");
        if (kind == "oracle" &&
            (p_navigation != 0 || p_state != 0 || p_compute != 0 || p_rule != 0 ||
             p_verbosity != 0))
            throw ConfigError("oracle agents must have all error rates at zero");
    }

    json to_json() const {
        return json{{"kind", kind},
                    {"error_rates",
                     {{"navigation", p_navigation},
                      {"state", p_state},
                      {"compute", p_compute},
                      {"rule", p_rule},
                      {"verbosity", p_verbosity}}},
                    {"augmentation_sensitivity", augmentation_sensitivity}};
    }

    static AgentPolicy from_json(const json& j) {
        AgentPolicy p;
        p.kind = j.value("kind", std::string("oracle"));
        const json rates = j.value("error_rates", json::object());
        p.p_navigation = rates.value("navigation", 0.0);
        p.p_state = rates.value("state", 0.0);
        p.p_compute = rates.value("compute", 0.0);
        p.p_rule = rates.value("rule", 0.0);
        p.p_verbosity = rates.value("verbosity", 0.0);
        p.augmentation_sensitivity = j.value("augmentation_sensitivity", 0.0);
        p.validate();
        return p;
    }

    static AgentPolicy load(const std::string& path) { return from_json(load_config_file(path)); }
};

// One step of a task script.
//  kind "message":  a user turn with `text`.
//  kind "call":     one agent turn issuing `tool` with `args`; argument values
//                   may be derivations {"$from": {...}} over earlier responses.
//  kind "paginate": repeated calls with an incrementing "page" argument until
//                   a short page arrives.
// `knob` names the error channel that can corrupt this step; `faulty` carries
// the concrete misbehavior; `verbose_affordance` marks where the verbosity
// channel can fire.
struct ScriptStep {
    std::string kind = "call";
    std::string text;
    std::string tool;
    json args = json::object();
    std::string list_key;
    std::string knob;
    json faulty = json::object();
    bool verbose_affordance = false;
    json verbosity = json::object();
};

struct TaskDef {
    std::string task_id;
    std::string workload;
    std::string description;
    std::vector<ScriptStep> steps;
    ExpectedExecution expected;
    std::string set_name = "analysis";  // "analysis" | "evaluation"
};

namespace detail {

// Numeric-or-string ordering key used by min/max derivations.
inline bool derive_less(const json& a, const json& b) {
    if (a.is_number() && b.is_number()) return a.get<double>() < b.get<double>();
    return canonical_text(a) < canonical_text(b);
}

}  // namespace detail

// Replays a task script against a session, rolling the policy's error
// channels. Exactly two uniform draws happen at the start of every step, so
// the random stream is identical whatever the optimization configuration or
// the outcome of earlier steps.
class ScriptedAgent {
public:
    ScriptedAgent(Session& session, Middleware* middleware, AgentPolicy policy,
                  std::uint64_t seed)
        : session_(session), middleware_(middleware), policy_(std::move(policy)),
          seed_base_(seed) {
        policy_.validate();
    }

    void run(const TaskDef& task) {
        rng_.seed(mix_seed(task.task_id));
        session_.add_user_message(task.description);
        for (const auto& step : task.steps) {
            if (session_.terminated()) break;
            const double r1 = next_u01();
            const double r2 = next_u01();
            if (step.kind == "message") {
                run_message(step, r2);
            } else if (step.kind == "paginate") {
                run_paginate(step, r1);
            } else if (step.kind == "call") {
                run_call(step, r1, r2);
            } else {
                throw ConfigError("unknown script step kind: " + step.kind);
            }
        }
        if (middleware_) middleware_->note_trace_end();
    }

private:
    // Per-task stream: one agent object can serve several tasks; the stream
    // depends only on (seed, task_id), never on the optimization setup.
    std::uint64_t mix_seed(const std::string& task_id) const {
        return seed_base_ ^ fnv1a64(task_id);
    }

    double next_u01() { return u01(rng_()); }

    // Effective firing probability: scaled down once the knob's mitigating
    // augmentation has been seen. The verbosity channel has no augmentation.
    double effective_rate(const std::string& knob) const {
        double p = policy_.rate(knob);
        static const std::map<std::string, std::string> mitigation{
            {"navigation", "lookahead"},
            {"state", "state_confirmation"},
            {"compute", "precomputed"},
            {"rule", "rule_hint"}};
        const auto it = mitigation.find(knob);
        if (it != mitigation.end() && seen_keys_.count(it->second))
            p *= policy_.augmentation_sensitivity;
        return p;
    }

    void run_message(const ScriptStep& step, double r2) {
        if (chatty_fires(step, r2) && !chat_exchange(step)) return;
        if (session_.terminated()) return;
        session_.add_user_message(step.text);
    }

    void run_call(const ScriptStep& step, double r1, double r2) {
        const bool verbose = chatty_fires(step, r2) || drop_fires(step, r2);
        if (step.verbosity.contains("chat_text") && verbose && !chat_exchange(step)) return;
        if (session_.terminated()) return;

        const bool corrupt = step.knob == "compute" && r1 < effective_rate("compute");
        json args = resolve_args(step.args, corrupt);

        if (step.knob == "rule" && r1 < effective_rate("rule")) {
            if (step.faulty.value("mode", std::string()) == "refusal") {
                session_.add_agent_turn(
                    step.faulty.value("text",
                                      std::string("I cannot perform this action; it is not "
                                                  "allowed by policy.")),
                    {});
                return;  // the scripted mutation is skipped entirely
            }
            json attempt = args;
            merge_into(attempt, step.faulty.value("alt_args", json::object()));
            const ToolResponse* resp = issue(step.tool, attempt, step.text);
            if (session_.terminated() || !resp) return;
            if (resp->is_error && resp->payload.is_object() && resp->payload.contains("rule")) {
                // Guardrail rescue: retry with the scripted arguments.
                issue(step.tool, args, "");
            }
            return;  // an executed forbidden attempt is not followed up
        }

        if ((step.knob == "navigation" || step.knob == "state") &&
            r1 < effective_rate(step.knob))
            merge_into(args, step.faulty.value("alt_args", json::object()));

        if (step.verbosity.contains("drop_keys") && verbose)
            for (const auto& key : step.verbosity["drop_keys"])
                args.erase(key.get<std::string>());

        issue(step.tool, args, step.text);
    }

    void run_paginate(const ScriptStep& step, double r1) {
        int page = 1;
        std::int64_t first_page_count = -1;
        while (!session_.terminated()) {
            json args = resolve_args(step.args, false);
            args["page"] = page;
            const ToolResponse* resp = issue(step.tool, args, page == 1 ? step.text : "");
            if (!resp || resp->is_error) return;
            std::int64_t count = 0;
            if (resp->payload.is_object() && resp->payload.contains(step.list_key) &&
                resp->payload[step.list_key].is_array())
                count = static_cast<std::int64_t>(resp->payload[step.list_key].size());
            if (page == 1) {
                first_page_count = count;
                // The truncation decision is taken after the first page, when
                // any lookahead augmentation is already in context.
                if (step.knob == "navigation" && r1 < effective_rate("navigation")) return;
            }
            if (count < first_page_count || count == 0) return;  // short page: done
            ++page;
        }
    }

    bool chatty_fires(const ScriptStep& step, double r2) const {
        return step.verbose_affordance && step.verbosity.contains("chat_text") &&
               r2 < effective_rate("verbosity");
    }

    bool drop_fires(const ScriptStep& step, double r2) const {
        return step.verbose_affordance && step.verbosity.contains("drop_keys") &&
               r2 < effective_rate("verbosity");
    }

    // The two chatty turns; returns false when the budget died mid-exchange.
    bool chat_exchange(const ScriptStep& step) {
        session_.add_agent_turn(step.verbosity.value("chat_text", std::string()), {});
        if (session_.terminated()) return false;
        session_.add_user_message(
            step.verbosity.value("reply_text", std::string("Understood, please continue.")));
        return !session_.terminated();
    }

    // Issues one call, preferring a speculative bundle when it matches
    // exactly. Returns the response (owned by the trace) or nullptr when the
    // session terminated first.
    const ToolResponse* issue(const std::string& tool, json args, const std::string& text) {
        ToolCall call{tool, std::move(args), ""};
        if (middleware_) {
            if (auto served = middleware_->serve_from_bundle(call)) {
                session_.append_served_call(call, *served);
                note_response(tool, *served);
                for (auto it = session_.trace().turns.rbegin();
                     it != session_.trace().turns.rend(); ++it)
                    if (it->actor == Actor::agent) return &it->responses.back();
                return nullptr;
            }
        }
        Turn& turn = session_.add_agent_turn(text, {std::move(call)});
        const ToolResponse& resp = turn.responses.back();
        note_response(tool, resp);
        return &resp;
    }

    void note_response(const std::string& tool, const ToolResponse& resp) {
        if (!resp.is_error) responses_by_tool_[tool].push_back(resp.payload);
        for (const auto& [key, value] : resp.augmentations.items()) {
            (void)value;
            seen_keys_.insert(key);
        }
    }

    static void merge_into(json& target, const json& overrides) {
        if (!overrides.is_object()) return;
        for (const auto& [k, v] : overrides.items()) target[k] = v;
    }

    // Walks an argument template, replacing {"$from": {...}} markers with
    // values derived from recorded responses.
    json resolve_args(const json& tmpl, bool corrupt) {
        if (tmpl.is_object()) {
            if (tmpl.size() == 1 && tmpl.contains("$from"))
                return derive(tmpl["$from"], corrupt && tmpl["$from"].value("corrupt", false));
            json out = json::object();
            for (const auto& [k, v] : tmpl.items()) out[k] = resolve_args(v, corrupt);
            return out;
        }
        if (tmpl.is_array()) {
            json out = json::array();
            for (const auto& v : tmpl) out.push_back(resolve_args(v, corrupt));
            return out;
        }
        return tmpl;
    }

    // Derivation over earlier responses of one tool. `corrupt` applies the
    // compute-channel distortion: +1 on scalars, dropped head on lists,
    // second-best on extremum picks.
    json derive(const json& spec, bool corrupt) {
        const std::string tool = spec.value("tool", std::string());
        const auto it = responses_by_tool_.find(tool);
        if (it == responses_by_tool_.end() || it->second.empty()) return json("");
        const std::string path = spec.value("path", std::string());

        json records;
        if (spec.value("all_pages", false)) {
            records = json::array();
            for (const auto& payload : it->second) {
                const json part = extract_path(payload, path);
                if (part.is_array())
                    for (const auto& r : part) records.push_back(r);
            }
        } else {
            records = extract_path(it->second.back(), path);
        }

        if (spec.contains("where") && records.is_array()) {
            const json& cond = spec["where"];
            json kept = json::array();
            for (const auto& r : records)
                if (r.is_object() && r.value(cond.value("field", std::string()), json()) ==
                                         cond.value("equals", json()))
                    kept.push_back(r);
            records = std::move(kept);
        }

        const std::string op = spec.value("op", std::string("copy"));
        const std::string by = spec.value("by", std::string());
        const std::string take = spec.value("take", std::string());

        if (op == "copy") {
            if (corrupt && records.is_number_integer())
                return json(records.get<std::int64_t>() + 1);
            if (corrupt && records.is_number_float()) return json(records.get<double>() + 1.0);
            return records;
        }
        if (!records.is_array()) return json("");

        if (op == "values") {
            json out = json::array();
            for (const auto& r : records)
                out.push_back(by.empty() ? r : r.value(by, json()));
            if (corrupt && !out.empty()) out.erase(0);
            return out;
        }
        if (op == "count") {
            std::int64_t n = static_cast<std::int64_t>(records.size());
            return json(corrupt ? n + 1 : n);
        }
        if (op == "filter_count") {
            const std::string field = spec.value("field", std::string());
            const std::string cmp = spec.value("cmp", std::string("gt"));
            const double threshold = spec.value("value", 0.0);
            std::int64_t n = 0;
            for (const auto& r : records) {
                if (!r.is_object() || !r.contains(field) || !r[field].is_number()) continue;
                const double v = r[field].get<double>();
                if ((cmp == "lt" && v < threshold) || (cmp == "le" && v <= threshold) ||
                    (cmp == "gt" && v > threshold) || (cmp == "ge" && v >= threshold))
                    ++n;
            }
            return json(corrupt ? n + 1 : n);
        }
        if (op == "mean" || op == "sum") {
            double total = 0.0;
            std::int64_t n = 0;
            for (const auto& r : records) {
                const json v = by.empty() ? r : r.value(by, json());
                if (!v.is_number()) continue;
                total += v.get<double>();
                ++n;
            }
            if (n == 0) return json("");
            double result = op == "mean" ? total / static_cast<double>(n) : total;
            if (corrupt) result += 1.0;
            return json(result);
        }
        if (op == "min_by" || op == "max_by" || op == "earliest" || op == "latest") {
            const bool want_max = op == "max_by" || op == "latest";
            auto pick = [&](const json& pool) -> json {
                json best;
                json best_key;
                for (const auto& r : pool) {
                    if (!r.is_object() || !r.contains(by)) continue;
                    const json& k = r[by];
                    if (best.is_null() || (want_max ? detail::derive_less(best_key, k)
                                                    : detail::derive_less(k, best_key))) {
                        best = r;
                        best_key = k;
                    }
                }
                return best;
            };
            json winner = pick(records);
            if (winner.is_null()) return json("");
            if (corrupt) {
                json rest = json::array();
                for (const auto& r : records)
                    if (r != winner) rest.push_back(r);
                const json second = pick(rest);
                if (!second.is_null()) winner = second;
            }
            return take.empty() ? winner : winner.value(take, json());
        }
        throw ConfigError("unknown derivation op: " + op);
    }

    Session& session_;
    Middleware* middleware_;
    AgentPolicy policy_;
    std::mt19937_64 rng_;
    std::uint64_t seed_base_ = 0;
    std::map<std::string, std::vector<json>> responses_by_tool_;
    std::set<std::string> seen_keys_;
};

}  // namespace agentsim
