#pragma once

#include <map>
#include <string>
#include <vector>

#include "agentsim/common.hpp"
#include "agentsim/errors.hpp"

namespace agentsim {

struct ParamSpec {
    std::string type = "string";  // string|integer|number|boolean|path|array|object
    bool required = true;
};

struct ToolSpec {
    std::string name;
    std::string description;
    std::map<std::string, ParamSpec> parameters;
    bool mutating = false;
    bool exploration = false;
    bool changes_agent_state = false;  // e.g. cd: moves the agent, not the stores
    bool paginated = false;

    json to_json() const {
        json params = json::object();
        for (const auto& [pname, spec] : parameters)
            params[pname] = json{{"type", spec.type}, {"required", spec.required}};
        return json{{"name", name},
                    {"description", description},
                    {"parameters", params},
                    {"mutating", mutating},
                    {"exploration", exploration},
                    {"changes_agent_state", changes_agent_state},
                    {"paginated", paginated}};
    }
};

class ToolRegistry {
public:
    void add(ToolSpec spec) {
        if (spec.mutating && spec.exploration)
            throw ConfigError("tool cannot be both mutating and exploration: " + spec.name);
        tools_[spec.name] = std::move(spec);
    }

    bool contains(const std::string& name) const { return tools_.count(name) != 0; }

    const ToolSpec& get(const std::string& name) const {
        auto it = tools_.find(name);
        if (it == tools_.end()) throw ConfigError("unknown tool: " + name);
        return it->second;
    }

    const std::map<std::string, ToolSpec>& all() const { return tools_; }

    // Argument validation shared by every workload: unknown tool and bad
    // arguments surface as error payloads, not exceptions.
    std::string check_arguments(const std::string& name, const json& args) const {
        auto it = tools_.find(name);
        if (it == tools_.end()) return "unknown tool: " + name;
        if (!args.is_object()) return "arguments must be an object";
        for (const auto& [pname, spec] : it->second.parameters) {
            if (!args.contains(pname)) {
                if (spec.required) return "missing required argument: " + pname;
                continue;
            }
            const json& v = args[pname];
            const std::string& t = spec.type;
            const bool ok = (t == "string" || t == "path") ? v.is_string()
                          : t == "integer" ? v.is_number_integer()
                          : t == "number" ? v.is_number()
                          : t == "boolean" ? v.is_boolean()
                          : t == "array" ? v.is_array()
                          : t == "object" ? v.is_object()
                                          : true;
            if (!ok) return "argument " + pname + " must be of type " + t;
        }
        for (const auto& [key, value] : args.items()) {
            (void)value;
            if (!it->second.parameters.count(key)) return "unexpected argument: " + key;
        }
        return std::string();
    }

    json to_json() const {
        json out = json::array();
        for (const auto& [name, spec] : tools_) {
            (void)name;
            out.push_back(spec.to_json());
        }
        return out;
    }

private:
    std::map<std::string, ToolSpec> tools_;
};

}  // namespace agentsim
