#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "agentsim/common.hpp"
#include "agentsim/env/rules.hpp"
#include "agentsim/env/tools.hpp"
#include "agentsim/errors.hpp"

namespace agentsim {

// Per-tool execution fault surfaced to the agent as an error response.
struct ToolFault {
    std::string message;
};

struct PageInfo {
    std::int64_t total = 0;
    std::int64_t retrieved = 0;
};

// A deterministic scenario: entity stores, domain rules, and params. `data`
// holds the workload-specific schema loaded from <workload>.fixture.yaml.
struct ScenarioFixture {
    std::string workload;
    json data = json::object();

    json to_json() const { return json{{"workload", workload}, {"data", data}}; }
    static ScenarioFixture from_json(const json& j) {
        ScenarioFixture f;
        f.workload = j.at("workload").get<std::string>();
        f.data = j.at("data");
        return f;
    }
};

// Workload behavior behind one interface: tool dispatch, canonical state for
// hashing, and the probes the middleware augmenters read.
class World {
public:
    virtual ~World() = default;

    virtual const std::string& workload() const = 0;
    virtual const ToolRegistry& registry() const = 0;
    virtual const RuleSet& rules() const = 0;

    // Executes a tool against the live state. Argument and domain faults are
    // reported via ToolFault; the caller renders them as error responses.
    virtual json invoke_tool(const std::string& tool, const json& args) = 0;

    // Canonical serialization of all entity stores (agent position excluded).
    virtual json canonical_state() const = 0;

    // Agent-position observables (navigable workloads).
    virtual json agent_state() const { return json::object(); }
    virtual json position_listing() const { return json(); }
    virtual std::vector<std::string> neighborhood(int depth) const {
        (void)depth;
        return {};
    }

    // Pagination math for a retrieval call (paginated workloads).
    virtual std::optional<PageInfo> page_info(const std::string& tool, const json& args) const {
        (void)tool;
        (void)args;
        return std::nullopt;
    }

    // Entity store lookup for rule evaluation and hints.
    virtual const json* store(const std::string& name) const {
        (void)name;
        return nullptr;
    }

    StoreView store_view() const {
        return [this](const std::string& name) { return this->store(name); };
    }

    std::uint64_t seed = 0;
};

inline std::string state_hash(const World& world) {
    return fnv1a64_hex(world.canonical_state().dump());
}

}  // namespace agentsim
