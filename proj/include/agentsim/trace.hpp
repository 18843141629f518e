#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "agentsim/common.hpp"
#include "agentsim/errors.hpp"

namespace agentsim {

enum class Actor { agent, environment, user };

inline std::string to_string(Actor a) {
    switch (a) {
        case Actor::agent: return "agent";
        case Actor::environment: return "environment";
        case Actor::user: return "user";
    }
    return "agent";
}

inline Actor actor_from_string(const std::string& s) {
    if (s == "agent") return Actor::agent;
    if (s == "environment") return Actor::environment;
    if (s == "user") return Actor::user;
    throw ValidationError("unknown actor", s);
}

enum class Outcome { success, failure, exhausted };

inline std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::success: return "success";
        case Outcome::failure: return "failure";
        case Outcome::exhausted: return "exhausted";
    }
    return "failure";
}

inline Outcome outcome_from_string(const std::string& s) {
    if (s == "success") return Outcome::success;
    if (s == "failure") return Outcome::failure;
    if (s == "exhausted") return Outcome::exhausted;
    throw ValidationError("unknown outcome", s);
}

struct ToolCall {
    std::string tool_name;
    json arguments = json::object();
    std::string call_id;

    json to_json() const {
        return json{{"tool_name", tool_name}, {"arguments", arguments}, {"call_id", call_id}};
    }
    static ToolCall from_json(const json& j) {
        ToolCall c;
        c.tool_name = j.at("tool_name").get<std::string>();
        c.arguments = j.at("arguments");
        c.call_id = j.at("call_id").get<std::string>();
        return c;
    }
};

// Augmentation keys the middleware may attach to a response.
inline const std::set<std::string>& allowed_augmentation_keys() {
    static const std::set<std::string> keys = {
        "state_confirmation", "lookahead", "precomputed", "rule_hint", "speculative_bundle"};
    return keys;
}

struct ToolResponse {
    std::string call_id;
    json payload;
    json augmentations = json::object();
    bool is_error = false;

    json to_json() const {
        return json{{"call_id", call_id},
                    {"payload", payload},
                    {"augmentations", augmentations},
                    {"is_error", is_error}};
    }
    static ToolResponse from_json(const json& j) {
        ToolResponse r;
        r.call_id = j.at("call_id").get<std::string>();
        r.payload = j.at("payload");
        r.augmentations = j.value("augmentations", json::object());
        r.is_error = j.value("is_error", false);
        return r;
    }
};

struct TokenCost {
    std::int64_t prompt = 0;
    std::int64_t cached = 0;
    std::int64_t completion = 0;

    std::int64_t total() const { return prompt + cached + completion; }
    json to_json() const {
        return json{{"prompt", prompt}, {"cached", cached}, {"completion", completion}};
    }
    static TokenCost from_json(const json& j) {
        TokenCost t;
        t.prompt = j.at("prompt").get<std::int64_t>();
        t.cached = j.at("cached").get<std::int64_t>();
        t.completion = j.at("completion").get<std::int64_t>();
        return t;
    }
};

struct Turn {
    std::int64_t index = 0;
    Actor actor = Actor::agent;
    std::string text;
    std::vector<ToolCall> calls;
    std::vector<ToolResponse> responses;
    TokenCost token_cost;

    json to_json() const {
        json jc = json::array();
        for (const auto& c : calls) jc.push_back(c.to_json());
        json jr = json::array();
        for (const auto& r : responses) jr.push_back(r.to_json());
        return json{{"index", index}, {"actor", to_string(actor)},   {"text", text},
                    {"calls", jc},    {"responses", jr},             {"token_cost", token_cost.to_json()}};
    }
    static Turn from_json(const json& j) {
        Turn t;
        t.index = j.at("index").get<std::int64_t>();
        t.actor = actor_from_string(j.at("actor").get<std::string>());
        t.text = j.value("text", std::string());
        for (const auto& c : j.value("calls", json::array())) t.calls.push_back(ToolCall::from_json(c));
        for (const auto& r : j.value("responses", json::array()))
            t.responses.push_back(ToolResponse::from_json(r));
        t.token_cost = TokenCost::from_json(j.at("token_cost"));
        return t;
    }
};

struct Budget {
    std::int64_t max_turns = 20;
    std::int64_t max_tokens = 20000;
    std::int64_t used_turns = 0;
    std::int64_t used_tokens = 0;

    // Exceeded only when strictly over a limit: a run that lands exactly on
    // the limits is still within budget.
    bool exceeded() const { return used_turns > max_turns || used_tokens > max_tokens; }

    json to_json() const {
        return json{{"max_turns", max_turns},
                    {"max_tokens", max_tokens},
                    {"used_turns", used_turns},
                    {"used_tokens", used_tokens}};
    }
    static Budget from_json(const json& j) {
        Budget b;
        b.max_turns = j.at("max_turns").get<std::int64_t>();
        b.max_tokens = j.at("max_tokens").get<std::int64_t>();
        b.used_turns = j.at("used_turns").get<std::int64_t>();
        b.used_tokens = j.at("used_tokens").get<std::int64_t>();
        return b;
    }
};

struct Trace {
    std::string task_id;
    std::string workload;
    std::vector<Turn> turns;
    Outcome outcome = Outcome::failure;
    std::string final_state_hash;
    Budget budget;

    json header_json() const {
        return json{{"task_id", task_id},
                    {"workload", workload},
                    {"outcome", to_string(outcome)},
                    {"final_state_hash", final_state_hash},
                    {"budget", budget.to_json()}};
    }
};

// Structural invariants shared by freshly built and parsed traces. Throws
// ValidationError naming the violated invariant.
inline void validate_trace(const Trace& trace) {
    if (trace.task_id.empty()) throw ValidationError("empty task_id", "trace has no task_id");
    std::set<std::string> seen_calls;
    std::int64_t expect_index = 0;
    for (const auto& turn : trace.turns) {
        if (turn.index != expect_index)
            throw ValidationError("non-consecutive turn index",
                                  "expected " + std::to_string(expect_index) + ", got " +
                                      std::to_string(turn.index));
        ++expect_index;
        if (turn.token_cost.prompt < 0 || turn.token_cost.cached < 0 || turn.token_cost.completion < 0)
            throw ValidationError("negative token cost", "turn " + std::to_string(turn.index));
        for (const auto& call : turn.calls) {
            if (call.tool_name.empty())
                throw ValidationError("empty tool_name", "turn " + std::to_string(turn.index));
            if (!seen_calls.insert(call.call_id).second)
                throw ValidationError("duplicate call_id", call.call_id);
        }
        for (const auto& resp : turn.responses) {
            if (!seen_calls.count(resp.call_id))
                throw ValidationError("response without matching call", resp.call_id);
            if (!resp.augmentations.is_object())
                throw ValidationError("augmentations not an object", resp.call_id);
            for (const auto& [key, value] : resp.augmentations.items()) {
                (void)value;
                if (!allowed_augmentation_keys().count(key))
                    throw ValidationError("unknown augmentation key", key);
            }
        }
    }
    if (trace.budget.used_turns != static_cast<std::int64_t>(trace.turns.size()))
        throw ValidationError("used_turns mismatch",
                              "budget says " + std::to_string(trace.budget.used_turns) + ", trace has " +
                                  std::to_string(trace.turns.size()) + " turns");
    std::int64_t cost_sum = 0;
    for (const auto& turn : trace.turns) cost_sum += turn.token_cost.total();
    if (trace.budget.used_tokens != cost_sum)
        throw ValidationError("used_tokens mismatch",
                              "budget says " + std::to_string(trace.budget.used_tokens) +
                                  ", turn costs sum to " + std::to_string(cost_sum));
    if ((trace.outcome == Outcome::exhausted) != trace.budget.exceeded())
        throw ValidationError("outcome/budget mismatch",
                              "outcome " + to_string(trace.outcome) + " with budget " +
                                  trace.budget.to_json().dump());
}

// Canonical trace text: header line followed by one line per turn.
inline std::string serialize_trace(const Trace& trace) {
    std::ostringstream out;
    out << trace.header_json().dump() << "\n";
    for (const auto& turn : trace.turns) out << turn.to_json().dump() << "\n";
    return out.str();
}

inline Trace parse_trace(const std::string& text) {
    Trace trace;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
        }
        try {
            if (!have_header) {
                trace.task_id = j.at("task_id").get<std::string>();
                trace.workload = j.at("workload").get<std::string>();
                trace.outcome = outcome_from_string(j.at("outcome").get<std::string>());
                trace.final_state_hash = j.value("final_state_hash", std::string());
                trace.budget = Budget::from_json(j.at("budget"));
                have_header = true;
            } else {
                trace.turns.push_back(Turn::from_json(j));
            }
        } catch (const json::exception& e) {
            throw ParseError(std::string("bad record: ") + e.what(), line_no);
        }
    }
    if (!have_header) throw ParseError("empty trace: no header line", 0);
    validate_trace(trace);
    return trace;
}

inline void write_trace_file(const Trace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << serialize_trace(trace);
    if (!out) throw IoError("write failed: " + path);
}

inline Trace read_trace_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_trace(buf.str());
}

// All calls of a trace in turn order, with their turn index and the matching
// response (if any).
struct CallSite {
    std::int64_t turn = 0;
    const ToolCall* call = nullptr;
    const ToolResponse* response = nullptr;
};

inline std::vector<CallSite> collect_calls(const Trace& trace) {
    std::map<std::string, const ToolResponse*> responses;
    for (const auto& turn : trace.turns)
        for (const auto& resp : turn.responses) responses[resp.call_id] = &resp;
    std::vector<CallSite> out;
    for (const auto& turn : trace.turns) {
        for (const auto& call : turn.calls) {
            CallSite site;
            site.turn = turn.index;
            site.call = &call;
            auto it = responses.find(call.call_id);
            if (it != responses.end()) site.response = it->second;
            out.push_back(site);
        }
    }
    return out;
}

}  // namespace agentsim
