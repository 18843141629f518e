#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agentsim/common.hpp"
#include "agentsim/errors.hpp"
#include "agentsim/trace.hpp"

namespace agentsim {

// Matches one argument: exact value, membership in a set, or wildcard
// (present with any value). Keys not mentioned by a matcher are unconstrained.
struct ArgCondition {
    enum class Kind { exact, one_of, any };
    Kind kind = Kind::exact;
    json value;            // exact
    std::vector<json> options;  // one_of

    bool matches(const json& actual) const {
        switch (kind) {
            case Kind::exact: return actual == value;
            case Kind::one_of:
                return std::find(options.begin(), options.end(), actual) != options.end();
            case Kind::any: return true;
        }
        return false;
    }

    json to_json() const {
        switch (kind) {
            case Kind::exact: return json{{"eq", value}};
            case Kind::one_of: return json{{"in", options}};
            case Kind::any: return json{{"any", true}};
        }
        return json::object();
    }
    static ArgCondition from_json(const json& j) {
        ArgCondition c;
        if (j.contains("eq")) {
            c.kind = Kind::exact;
            c.value = j["eq"];
        } else if (j.contains("in")) {
            c.kind = Kind::one_of;
            for (const auto& v : j["in"]) c.options.push_back(v);
        } else if (j.contains("any")) {
            c.kind = Kind::any;
        } else {
            throw ConfigError("argument condition needs eq/in/any: " + j.dump());
        }
        return c;
    }
};

struct ArgMatcher {
    std::map<std::string, ArgCondition> conditions;

    bool matches(const json& arguments) const {
        for (const auto& [key, cond] : conditions) {
            if (!arguments.is_object() || !arguments.contains(key)) return false;
            if (!cond.matches(arguments[key])) return false;
        }
        return true;
    }

    // First constrained key whose condition fails against the given
    // arguments; used to name the deviating argument.
    std::optional<std::string> first_mismatch(const json& arguments) const {
        for (const auto& [key, cond] : conditions) {
            if (!arguments.is_object() || !arguments.contains(key)) return key;
            if (!cond.matches(arguments[key])) return key;
        }
        return std::nullopt;
    }

    std::optional<json> exact_value(const std::string& key) const {
        auto it = conditions.find(key);
        if (it == conditions.end() || it->second.kind != ArgCondition::Kind::exact)
            return std::nullopt;
        return std::optional<json>(std::in_place, it->second.value);
    }

    json to_json() const {
        json out = json::object();
        for (const auto& [key, cond] : conditions) out[key] = cond.to_json();
        return out;
    }
    static ArgMatcher from_json(const json& j) {
        ArgMatcher m;
        for (const auto& [key, cond] : j.items()) m.conditions[key] = ArgCondition::from_json(cond);
        return m;
    }
};

// How an argument value is supposed to be derived from data returned earlier
// in the trace. The classifier recomputes it independently; a mismatch is a
// tool-output-processing failure whose subtype follows from the op.
struct ComputeRecipe {
    std::string arg;          // argument (or "answer") holding the derived value
    std::string op;           // mean|sum|count|min|max|argmin|argmax|earliest|latest|filter_count|values|copy
    std::string from_tool;    // responses of this tool are the data source
    std::string list_path;    // path to the record list inside the payload ("" = payload itself)
    std::string field;        // numeric/orderable field the op runs over
    std::string value_field;  // field reported for argmin/argmax/earliest/latest
    json where = json::object();   // optional {field, equals} record filter
    json threshold = json();       // filter_count: {field, op(lt|le|gt|ge), value}
    std::string subtask;      // failure attribution override (optional)

    json to_json() const {
        json out{{"arg", arg}, {"op", op}, {"from_tool", from_tool}};
        if (!list_path.empty()) out["list_path"] = list_path;
        if (!field.empty()) out["field"] = field;
        if (!value_field.empty()) out["value_field"] = value_field;
        if (!where.empty()) out["where"] = where;
        if (!threshold.is_null()) out["threshold"] = threshold;
        if (!subtask.empty()) out["subtask"] = subtask;
        return out;
    }
    static ComputeRecipe from_json(const json& j) {
        ComputeRecipe r;
        r.arg = j.at("arg").get<std::string>();
        r.op = j.at("op").get<std::string>();
        r.from_tool = j.at("from_tool").get<std::string>();
        r.list_path = j.value("list_path", std::string());
        r.field = j.value("field", std::string());
        r.value_field = j.value("value_field", std::string());
        r.where = j.value("where", json::object());
        r.threshold = j.value("threshold", json());
        r.subtask = j.value("subtask", std::string());
        return r;
    }
};

struct ReferenceCall {
    std::string tool_name;
    ArgMatcher matcher;
    std::vector<ComputeRecipe> computed;

    bool matches(const ToolCall& call) const {
        return call.tool_name == tool_name && matcher.matches(call.arguments);
    }

    json to_json() const {
        json out{{"tool", tool_name}, {"args", matcher.to_json()}};
        if (!computed.empty()) {
            json jc = json::array();
            for (const auto& r : computed) jc.push_back(r.to_json());
            out["computed"] = jc;
        }
        return out;
    }
    static ReferenceCall from_json(const json& j) {
        ReferenceCall c;
        c.tool_name = j.at("tool").get<std::string>();
        c.matcher = ArgMatcher::from_json(j.value("args", json::object()));
        for (const auto& r : j.value("computed", json::array()))
            c.computed.push_back(ComputeRecipe::from_json(r));
        return c;
    }
};

// A data item the agent must have retrieved, and the exploration subtask
// whose responses are supposed to surface it.
struct CriticalContextItem {
    std::string item;
    std::string subtask;

    json to_json() const { return json{{"item", item}, {"subtask", subtask}}; }
    static CriticalContextItem from_json(const json& j) {
        CriticalContextItem c;
        c.item = j.at("item").get<std::string>();
        c.subtask = j.at("subtask").get<std::string>();
        return c;
    }
};

struct ExpectedExecution {
    std::string task_id;
    std::vector<ReferenceCall> reference_calls;
    std::string expected_final_state_hash;
    std::vector<CriticalContextItem> critical_context;

    json to_json() const {
        json jr = json::array();
        for (const auto& c : reference_calls) jr.push_back(c.to_json());
        json jc = json::array();
        for (const auto& item : critical_context) jc.push_back(item.to_json());
        return json{{"task_id", task_id},
                    {"reference_calls", jr},
                    {"expected_final_state_hash", expected_final_state_hash},
                    {"critical_context", jc}};
    }
    static ExpectedExecution from_json(const json& j) {
        ExpectedExecution e;
        e.task_id = j.at("task_id").get<std::string>();
        for (const auto& c : j.at("reference_calls")) e.reference_calls.push_back(ReferenceCall::from_json(c));
        e.expected_final_state_hash = j.value("expected_final_state_hash", std::string());
        for (const auto& c : j.value("critical_context", json::array()))
            e.critical_context.push_back(CriticalContextItem::from_json(c));
        return e;
    }
};

// Recomputes a recipe from the trace's own responses: gathers the record
// lists of every successful `from_tool` response in turn order (pagination
// concatenates), filters, then applies the op. Returns null when no source
// data exists.
inline json recompute_recipe(const ComputeRecipe& recipe, const Trace& trace) {
    json records = json::array();
    json scalar;
    bool any_source = false;
    for (const auto& site : collect_calls(trace)) {
        if (site.call->tool_name != recipe.from_tool) continue;
        if (!site.response || site.response->is_error) continue;
        any_source = true;
        json part = extract_path(site.response->payload, recipe.list_path);
        if (part.is_array())
            for (const auto& r : part) records.push_back(r);
        else if (!part.is_null())
            scalar = part;
    }
    if (!any_source) return json();
    if (recipe.op == "copy") return scalar;

    json filtered = json::array();
    for (const auto& r : records) {
        if (!recipe.where.empty()) {
            const json v = extract_path(r, recipe.where.value("field", std::string()));
            if (v != recipe.where.value("equals", json())) continue;
        }
        filtered.push_back(r);
    }
    auto field_of = [&](const json& r) { return recipe.field.empty() ? r : extract_path(r, recipe.field); };

    if (recipe.op == "count") return static_cast<std::int64_t>(filtered.size());
    if (recipe.op == "values") {
        json out = json::array();
        for (const auto& r : filtered) out.push_back(field_of(r));
        return out;
    }
    if (recipe.op == "filter_count") {
        const std::string tfield = recipe.threshold.value("field", recipe.field);
        const std::string top = recipe.threshold.value("op", std::string("lt"));
        const double bound = recipe.threshold.value("value", 0.0);
        std::int64_t n = 0;
        for (const auto& r : filtered) {
            const json v = extract_path(r, tfield);
            if (!v.is_number()) continue;
            const double x = v.get<double>();
            const bool hit = top == "lt" ? x < bound
                           : top == "le" ? x <= bound
                           : top == "gt" ? x > bound
                           : top == "ge" ? x >= bound
                                         : false;
            if (hit) ++n;
        }
        return n;
    }
    if (filtered.empty()) return json();
    if (recipe.op == "mean" || recipe.op == "sum") {
        double sum = 0;
        std::int64_t n = 0;
        for (const auto& r : filtered) {
            const json v = field_of(r);
            if (!v.is_number()) continue;
            sum += v.get<double>();
            ++n;
        }
        if (n == 0) return json();
        return recipe.op == "sum" ? json(sum) : json(sum / static_cast<double>(n));
    }
    if (recipe.op == "min" || recipe.op == "max") {
        std::optional<double> best;
        for (const auto& r : filtered) {
            const json v = field_of(r);
            if (!v.is_number()) continue;
            const double x = v.get<double>();
            if (!best || (recipe.op == "min" ? x < *best : x > *best)) best = x;
        }
        return best ? json(*best) : json();
    }
    if (recipe.op == "argmin" || recipe.op == "argmax" || recipe.op == "earliest" ||
        recipe.op == "latest") {
        const bool want_min = recipe.op == "argmin" || recipe.op == "earliest";
        const json* best = nullptr;
        json best_key;
        for (const auto& r : filtered) {
            const json k = field_of(r);
            if (k.is_null()) continue;
            if (!best || (want_min ? k < best_key : k > best_key)) {
                best = &r;
                best_key = k;
            }
        }
        if (!best) return json();
        return recipe.value_field.empty() ? *best : extract_path(*best, recipe.value_field);
    }
    throw ConfigError("unknown recipe op: " + recipe.op);
}

// Subtype of a tool-output-processing failure, by the operation kind.
inline std::string recipe_subtype(const std::string& op) {
    if (op == "mean" || op == "sum" || op == "count" || op == "values") return "calculation";
    if (op == "min" || op == "max" || op == "argmin" || op == "argmax" || op == "copy")
        return "retrieval";
    if (op == "earliest" || op == "latest") return "sorting";
    if (op == "filter_count") return "comparison";
    throw ConfigError("unknown recipe op: " + op);
}

}  // namespace agentsim
