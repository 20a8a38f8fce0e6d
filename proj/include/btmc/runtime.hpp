#pragma once

// Real-time execution of a compiled model against an action provider,
// producing an execution trace.

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "btmc/model.hpp"
#include "btmc/script.hpp"

namespace btmc {

struct TraceEvent {
    enum class Kind : std::uint8_t { Tick, Ticked, Returned, Halting, Halted, SvChanged, RootTerminal, TickOverrun };
    int tick = 0;
    double ts_ms = 0.0;
    Kind kind = Kind::Tick;
    std::string node;              ///< empty for Tick, TickOverrun and SvChanged
    Status status = Status::NoRet; ///< Returned and RootTerminal only
    std::string sv, old_value, new_value;

    bool operator==(const TraceEvent&) const = default;
};

std::string_view to_string(TraceEvent::Kind k);
std::optional<TraceEvent::Kind> parse_event_kind(std::string_view text);

/// Events a tree evaluation produces, independent of pacing: Tick and
/// TickOverrun dropped, timestamps zeroed.
std::vector<TraceEvent> observable(const std::vector<TraceEvent>& events);

struct ExecutionTrace {
    std::string model;
    std::vector<TraceEvent> events;
    bool operator==(const ExecutionTrace&) const = default;
};

enum class TraceFormat { Lines, Jsonl };

std::string emit_trace(const ExecutionTrace& trace, TraceFormat format);
/// Inverse of emit_trace; throws syntax::ParseError.
ExecutionTrace parse_trace(std::string_view text, TraceFormat format);

/// Node-level description of a provider call.
struct LeafCall {
    int node = 0;
    std::string name;  ///< canonical node name
    std::string id;    ///< :ID, or the name
    std::string args;  ///< :args with $sv references replaced by current values
    int tick = 0;
};

/// Completion queue between provider work and the coordinator. Completions
/// may be pushed from any thread; the coordinator drains at tick boundaries.
class CompletionSink {
public:
    void complete(std::uint64_t handle, Status status);
    std::vector<std::pair<std::uint64_t, Status>> drain();

private:
    std::mutex mu_;
    std::vector<std::pair<std::uint64_t, Status>> done_;
};

class ActionProvider {
public:
    virtual ~ActionProvider() = default;

    /// Called at each tick boundary before completions are drained.
    virtual void on_tick(int /*tick*/, CompletionSink& /*sink*/) {}
    /// Starts asynchronous work; its result goes to `sink` exactly once.
    virtual void start_action(std::uint64_t handle, const LeafCall& call, CompletionSink& sink) = 0;
    virtual void halt_action(std::uint64_t handle) = 0;
    virtual Status check_condition(const LeafCall& call) = 0;
    /// New value for the SetSV target; must be reachable from `current`.
    virtual std::int64_t set_sv(const LeafCall& call, const SvInfo& sv, std::int64_t current) = 0;
    /// Environment reading at a tick boundary; nullopt leaves the SV unchanged.
    virtual std::optional<std::int64_t> read_env_sv(const SvInfo& /*sv*/, std::int64_t /*current*/, int /*tick*/)
    {
        return std::nullopt;
    }
};

/// Provider driven by an outcome script. An action's completion is queued
/// `latency` ticks after it starts (at least one: an action always returns
/// running on the tick it starts).
class ScriptedProvider : public ActionProvider {
public:
    ScriptedProvider(const Model& model, OutcomeScript script, std::optional<std::uint64_t> seed);

    void on_tick(int tick, CompletionSink& sink) override;
    void start_action(std::uint64_t handle, const LeafCall& call, CompletionSink& sink) override;
    void halt_action(std::uint64_t handle) override;
    Status check_condition(const LeafCall& call) override;
    std::int64_t set_sv(const LeafCall& call, const SvInfo& sv, std::int64_t current) override;
    std::optional<std::int64_t> read_env_sv(const SvInfo& sv, std::int64_t current, int tick) override;

    const OutcomeScript& transcript() const { return cursor_.transcript(); }
    int halts() const { return halts_; }

private:
    const Model& m_;
    ScriptCursor cursor_;
    struct Pending {
        std::uint64_t handle;
        int due;
        Status status;
    };
    std::vector<Pending> pending_;
    int halts_ = 0;
};

class Clock {
public:
    virtual ~Clock() = default;
    virtual double now_ms() = 0;
    virtual void sleep_until_ms(double t) = 0;
};

class SteadyClock : public Clock {
public:
    SteadyClock();
    double now_ms() override;
    void sleep_until_ms(double t) override;

private:
    std::int64_t origin_ns_;
};

/// Time advances only when someone sleeps.
class VirtualClock : public Clock {
public:
    double now_ms() override { return now_; }
    void sleep_until_ms(double t) override
    {
        if (t > now_) now_ = t;
    }
    void advance(double ms) { now_ += ms; }

private:
    double now_ = 0.0;
};

struct RunConfig {
    double tick_ms = 100.0;
    std::optional<int> max_ticks;
};

enum class RunOutcome { Success, Failure, Stopped, ProviderError };

std::string_view to_string(RunOutcome o);

struct RunResult {
    RunOutcome outcome = RunOutcome::Stopped;
    ExecutionTrace trace;
    std::string error;
    int ticks = 0;
};

/// Tick k fires at k * tick_ms after the start. Urgent transitions run to
/// quiescence (lowest process first) between boundaries.
RunResult run(const Model& model, ActionProvider& provider, const RunConfig& config, Clock& clock);

/// Observable events of firing transition `t` from `before` to `after`:
/// the transition's own event, then one SvChanged per SV whose value moved.
void transition_events(const Model& model, const Transition& t, const std::int32_t* before,
                       const std::int32_t* after, int tick, std::vector<TraceEvent>& out);

}  // namespace btmc
