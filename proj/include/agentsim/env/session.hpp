#pragma once

#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "agentsim/env/world.hpp"
#include "agentsim/trace.hpp"

namespace agentsim {

// Runs one task against a world and records the trace. Token model: the
// context accumulates task text, agent output, and tool responses; each agent
// turn bills the accumulated context as prompt tokens, with everything billed
// on a previous turn counted as cached.
class Session {
public:
    using ToolExecutor = std::function<ToolResponse(const ToolCall&)>;

    Session(World& world, std::string task_id, Budget budget)
        : world_(world) {
        trace_.task_id = std::move(task_id);
        trace_.workload = world.workload();
        trace_.budget = budget;
        trace_.outcome = Outcome::failure;
        context_tokens_ = estimate_tokens(world.registry().to_json());
        executor_ = [this](const ToolCall& call) { return direct_invoke(call); };
    }

    World& world() { return world_; }
    const Trace& trace() const { return trace_; }
    Trace take_trace() { return std::move(trace_); }
    bool terminated() const { return terminated_; }
    std::int64_t context_tokens() const { return context_tokens_; }
    const Budget& budget() const { return trace_.budget; }

    void set_executor(ToolExecutor executor) { executor_ = std::move(executor); }

    // Augmentation keys excluded from context growth (middleware may pre-pay
    // or waive speculative payloads).
    std::set<std::string> uncharged_augmentation_keys;

    // Invokes the world directly, translating faults into error payloads.
    ToolResponse direct_invoke(const ToolCall& call) {
        ToolResponse resp;
        resp.call_id = call.call_id;
        const std::string problem = world_.registry().check_arguments(call.tool_name, call.arguments);
        if (!problem.empty()) {
            resp.is_error = true;
            resp.payload = json{{"error", problem}};
            return resp;
        }
        try {
            resp.payload = world_.invoke_tool(call.tool_name, call.arguments);
        } catch (const ToolFault& fault) {
            resp.is_error = true;
            resp.payload = json{{"error", fault.message}};
        }
        return resp;
    }

    void add_user_message(const std::string& text) {
        require_active();
        Turn turn;
        turn.index = static_cast<int>(trace_.turns.size());
        turn.actor = Actor::user;
        turn.text = text;
        context_tokens_ += estimate_tokens(text);
        trace_.turns.push_back(std::move(turn));
        trace_.budget.used_turns += 1;
        check_budget();
    }

    // One agent turn: message text plus tool calls executed in order.
    Turn& add_agent_turn(const std::string& text, std::vector<ToolCall> calls) {
        require_active();
        Turn turn;
        turn.index = static_cast<int>(trace_.turns.size());
        turn.actor = Actor::agent;
        turn.text = text;

        const std::int64_t prompt_total = context_tokens_;
        turn.token_cost.cached = prev_prompt_total_;
        turn.token_cost.prompt = prompt_total - prev_prompt_total_;
        std::int64_t completion = estimate_tokens(text);
        for (const auto& call : calls) completion += call_tokens(call);
        turn.token_cost.completion = completion;
        prev_prompt_total_ = prompt_total;
        context_tokens_ += completion;

        for (auto& call : calls) {
            if (call.call_id.empty()) call.call_id = next_call_id();
            ToolResponse resp = executor_(call);
            resp.call_id = call.call_id;
            context_tokens_ += response_context_tokens(resp);
            turn.calls.push_back(std::move(call));
            turn.responses.push_back(std::move(resp));
        }

        trace_.budget.used_turns += 1;
        trace_.budget.used_tokens +=
            turn.token_cost.prompt + turn.token_cost.cached + turn.token_cost.completion;
        trace_.turns.push_back(std::move(turn));
        check_budget();
        return trace_.turns.back();
    }

    // Records a call answered from a speculative bundle inside the turn that
    // carried the bundle. No new turn and no new tokens: the payload was
    // billed when the bundle was attached and the agent never sent the call.
    void append_served_call(ToolCall call, ToolResponse resp) {
        for (auto it = trace_.turns.rbegin(); it != trace_.turns.rend(); ++it) {
            if (it->actor != Actor::agent) continue;
            if (call.call_id.empty()) call.call_id = next_call_id();
            resp.call_id = call.call_id;
            it->calls.push_back(std::move(call));
            it->responses.push_back(std::move(resp));
            return;
        }
        throw SessionError("no agent turn to attach a served call to");
    }

    // Stamps outcome and final state. Budget exhaustion wins over any verdict.
    void finalize(Outcome outcome) {
        trace_.final_state_hash = state_hash(world_);
        trace_.outcome = trace_.budget.exceeded() ? Outcome::exhausted : outcome;
    }

    static std::int64_t call_tokens(const ToolCall& call) {
        return estimate_tokens(json{{"arguments", call.arguments}, {"tool", call.tool_name}});
    }

    std::int64_t response_context_tokens(const ToolResponse& resp) const {
        std::int64_t tokens = estimate_tokens(resp.payload);
        for (const auto& [key, value] : resp.augmentations.items())
            if (!uncharged_augmentation_keys.count(key)) tokens += estimate_tokens(value);
        return tokens;
    }

private:
    void require_active() const {
        if (terminated_) throw SessionError("session already terminated (budget exhausted)");
    }

    void check_budget() {
        if (trace_.budget.exceeded()) {
            terminated_ = true;
            trace_.final_state_hash = state_hash(world_);
            trace_.outcome = Outcome::exhausted;
        }
    }

    std::string next_call_id() { return "c" + std::to_string(++call_counter_); }

    World& world_;
    Trace trace_;
    ToolExecutor executor_;
    std::int64_t context_tokens_ = 0;
    std::int64_t prev_prompt_total_ = 0;
    int call_counter_ = 0;
    bool terminated_ = false;
};

}  // namespace agentsim
