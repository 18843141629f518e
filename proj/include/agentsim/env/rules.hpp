#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "agentsim/common.hpp"
#include "agentsim/errors.hpp"

namespace agentsim {

// Read-only view of a workload's entity stores used by rule predicates:
// store name -> array of records. Join fields follow the <name>_id convention
// ("user.membership" resolves entity["user_id"] inside the "users" store).
using StoreView = std::function<const json*(const std::string&)>;

inline const json* find_record(const StoreView& stores, const std::string& store,
                               const std::string& id_field, const json& id) {
    const json* table = stores(store);
    if (!table || !table->is_array()) return nullptr;
    for (const auto& record : *table)
        if (record.is_object() && record.value(id_field, json()) == id) return &record;
    return nullptr;
}

// One comparison: {"field": ..., "op": eq|ne|lt|le|gt|ge|in|not_in, "value": ...}
// or a conjunction/disjunction {"all": [...]} / {"any": [...]}. Field paths:
//   "cabin"            field of the bound entity
//   "arg:new_flight_id" argument of the call under evaluation
//   "user.membership"  joined record: entity["user_id"] looked up in "users"
struct RuleCondition {
    json spec = json::object();

    // Returns nullopt when a referenced argument/field is unavailable (rule
    // hints evaluate hypothetical calls that lack most arguments).
    std::optional<bool> evaluate(const json& arguments, const json& entity,
                                 const StoreView& stores) const {
        if (spec.contains("all")) {
            for (const auto& sub : spec["all"]) {
                auto r = RuleCondition{sub}.evaluate(arguments, entity, stores);
                if (!r) return std::nullopt;
                if (!*r) return false;
            }
            return true;
        }
        if (spec.contains("any")) {
            for (const auto& sub : spec["any"]) {
                auto r = RuleCondition{sub}.evaluate(arguments, entity, stores);
                if (!r) return std::nullopt;
                if (*r) return true;
            }
            return false;
        }
        const std::string field = spec.value("field", std::string());
        if (field.empty()) throw ConfigError("rule condition without field: " + spec.dump());
        json actual = resolve(field, arguments, entity, stores);
        if (actual.is_null()) return std::nullopt;
        const std::string op = spec.value("op", std::string("eq"));
        const json expect = spec.value("value", json());
        if (op == "eq") return actual == expect;
        if (op == "ne") return actual != expect;
        if (op == "lt") return actual < expect;
        if (op == "le") return actual <= expect;
        if (op == "gt") return actual > expect;
        if (op == "ge") return actual >= expect;
        if (op == "in" || op == "not_in") {
            bool found = false;
            for (const auto& v : expect)
                if (v == actual) found = true;
            return op == "in" ? found : !found;
        }
        throw ConfigError("unknown rule op: " + op);
    }

    static json resolve(const std::string& field, const json& arguments, const json& entity,
                        const StoreView& stores) {
        if (field.rfind("arg:", 0) == 0) {
            const std::string key = field.substr(4);
            if (!arguments.is_object() || !arguments.contains(key)) return json();
            return arguments[key];
        }
        const auto dot = field.find('.');
        if (dot == std::string::npos)
            return entity.is_object() ? entity.value(field, json()) : json();
        const std::string rel = field.substr(0, dot);
        const std::string sub = field.substr(dot + 1);
        const std::string key_field = rel + "_id";
        if (!entity.is_object() || !entity.contains(key_field)) return json();
        const json* joined = find_record(stores, rel + "s", key_field, entity[key_field]);
        if (!joined) return json();
        return joined->value(sub, json());
    }
};

enum class RuleEffect { forbid, permit };

struct Rule {
    std::string name;
    std::string applies_to;  // mutating tool the rule governs
    RuleEffect effect = RuleEffect::forbid;
    std::string message;     // rejection text shown to the agent
    std::string entity_store;  // store holding the governed entity
    std::string id_arg;        // call argument carrying the entity id
    std::string id_field;      // id field inside the store (defaults to id_arg)
    RuleCondition when;

    json to_json() const {
        json out{{"name", name},
                 {"applies_to", applies_to},
                 {"effect", effect == RuleEffect::forbid ? "forbid" : "permit"},
                 {"message", message}};
        if (!entity_store.empty())
            out["entity"] = json{{"store", entity_store},
                                 {"id_arg", id_arg},
                                 {"id_field", id_field.empty() ? id_arg : id_field}};
        if (!when.spec.empty()) out["when"] = when.spec;
        return out;
    }
    static Rule from_json(const json& j) {
        Rule r;
        r.name = j.at("name").get<std::string>();
        r.applies_to = j.at("applies_to").get<std::string>();
        r.effect = j.value("effect", std::string("forbid")) == "permit" ? RuleEffect::permit
                                                                        : RuleEffect::forbid;
        r.message = j.value("message", std::string());
        if (j.contains("entity")) {
            r.entity_store = j["entity"].value("store", std::string());
            r.id_arg = j["entity"].value("id_arg", std::string());
            r.id_field = j["entity"].value("id_field", r.id_arg);
        }
        if (j.contains("when")) r.when.spec = j["when"];
        return r;
    }

    const json* bound_entity(const json& arguments, const StoreView& stores) const {
        if (entity_store.empty()) return nullptr;
        if (!arguments.is_object() || !arguments.contains(id_arg)) return nullptr;
        return find_record(stores, entity_store, id_field.empty() ? id_arg : id_field,
                           arguments[id_arg]);
    }
};

struct RuleDecision {
    bool rejected = false;
    std::string rule;
    std::string message;
};

struct RuleSet {
    std::vector<Rule> rules;

    // Full evaluation for a concrete call: rejected iff some forbid rule
    // fires and no permit rule fires. Unresolvable conditions count as not
    // firing (concrete calls resolve everything in practice).
    RuleDecision check(const std::string& tool, const json& arguments, const StoreView& stores) const {
        RuleDecision decision;
        for (const auto& rule : rules) {
            if (rule.applies_to != tool || rule.effect != RuleEffect::permit) continue;
            const json* entity = rule.bound_entity(arguments, stores);
            auto fired = rule.when.evaluate(arguments, entity ? *entity : json(), stores);
            if (fired && *fired) return decision;  // explicitly permitted
        }
        for (const auto& rule : rules) {
            if (rule.applies_to != tool || rule.effect != RuleEffect::forbid) continue;
            const json* entity = rule.bound_entity(arguments, stores);
            auto fired = rule.when.evaluate(arguments, entity ? *entity : json(), stores);
            if (fired && *fired) {
                decision.rejected = true;
                decision.rule = rule.name;
                decision.message = rule.message.empty() ? "forbidden by rule " + rule.name : rule.message;
                return decision;
            }
        }
        return decision;
    }

    bool governs(const std::string& tool) const {
        for (const auto& rule : rules)
            if (rule.applies_to == tool) return true;
        return false;
    }

    json to_json() const {
        json out = json::array();
        for (const auto& r : rules) out.push_back(r.to_json());
        return out;
    }
    static RuleSet from_json(const json& j) {
        RuleSet set;
        for (const auto& r : j) set.rules.push_back(Rule::from_json(r));
        return set;
    }
};

}  // namespace agentsim
