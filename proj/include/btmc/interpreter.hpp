#pragma once

// Direct recursive Behavior-Tree interpreter over the validated AST. It
// shares no per-node code with the compiler and serves as the oracle for
// differential tests against the compiled model and the runtime engine.

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "btmc/runtime.hpp"
#include "btmc/script.hpp"
#include "btmc/syntax.hpp"

namespace btmc::interp {

class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Leaf and environment decisions. `legal` lists admissible values in
/// ascending order; the interpreter rejects anything else with ProviderError.
class Outcomes {
public:
    virtual ~Outcomes() = default;
    virtual Status action(int node, int tick) = 0;  ///< Success, Failure or Running
    virtual void halt_action(int /*node*/) {}
    virtual Status condition(int node, int tick) = 0;
    virtual std::int64_t set_sv(int node, int sv, std::int64_t current, const std::vector<std::int64_t>& legal) = 0;
    /// New value at a tick boundary, or nullopt to stay.
    virtual std::optional<std::int64_t> env(int sv, std::int64_t current, const std::vector<std::int64_t>& targets,
                                            int tick) = 0;
};

/// Per-node memory, named after the compiled model's locals.
struct NodeMemory {
    Status rstatus = Status::NoRet;
    std::vector<std::pair<std::string, std::int64_t>> locals;
};

struct InterpState {
    std::vector<NodeMemory> nodes;  ///< pre-order
    std::vector<std::int64_t> svs;  ///< declaration order
    int tick = 0;
    std::optional<Status> terminal;
};

struct Options {
    bool env_free_change = false;
};

class Interpreter {
public:
    /// `tree` selects by name; the first tree when empty.
    Interpreter(const syntax::ValidatedSpec& spec, std::string_view tree = {}, Options options = {});
    ~Interpreter();
    Interpreter(Interpreter&&) noexcept;

    /// One root tick. Appends observable events; returns the root's status.
    Status tick(Outcomes& outcomes, std::vector<TraceEvent>& events);

    const InterpState& state() const;
    void reset();

    int node_count() const;
    const std::string& node_name(int node) const;
    const std::string& node_id(int node) const;
    const std::vector<syntax::SvDecl>& svs() const;
    std::vector<ScriptCursor::NodeRef> node_refs() const;
    const std::string& model_name() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

struct RunLog {
    std::vector<TraceEvent> events;  ///< observable events
    std::optional<Status> terminal;
    int ticks = 0;
    std::string error;  ///< provider error, if the run aborted
};

/// Runs until the root terminates, max_ticks elapse or a provider error.
RunLog interpret(Interpreter& in, Outcomes& outcomes, int max_ticks);

/// Runtime-equivalent outcomes: actions start on their first tick and
/// complete `latency` ticks later (at least one), resolved through a script.
class ScriptOutcomes : public Outcomes {
public:
    ScriptOutcomes(const Interpreter& in, OutcomeScript script, std::optional<std::uint64_t> seed);

    Status action(int node, int tick) override;
    void halt_action(int node) override;
    Status condition(int node, int tick) override;
    std::int64_t set_sv(int node, int sv, std::int64_t current, const std::vector<std::int64_t>& legal) override;
    std::optional<std::int64_t> env(int sv, std::int64_t current, const std::vector<std::int64_t>& targets,
                                    int tick) override;

private:
    ScriptCursor cursor_;
    struct InFlight {
        int due = 0;
        Status status = Status::Success;
    };
    std::vector<std::optional<InFlight>> flight_;
};

/// Interprets `spec` against an outcome script with runtime action latency.
RunLog interpret_script(const syntax::ValidatedSpec& spec, const OutcomeScript& script,
                        std::optional<std::uint64_t> seed, int max_ticks, std::string_view tree = {});

struct EnumLimits {
    int max_ticks = 3;
    std::size_t max_runs = 200'000;
};

/// Every observable event sequence over at most max_ticks root ticks, where
/// actions may return any status on any tick (the offline view). Throws
/// BudgetExceeded past max_runs.
std::vector<std::vector<TraceEvent>> enumerate_behaviors(const syntax::ValidatedSpec& spec, const EnumLimits& limits,
                                                         std::string_view tree = {});

/// Every outcome script a runtime run of at most max_ticks can consume:
/// each action start picks a status and a latency in 1..max_ticks, each
/// condition, SetSV and environment reading any admissible value.
std::vector<OutcomeScript> enumerate_scripts(const syntax::ValidatedSpec& spec, const EnumLimits& limits,
                                             std::string_view tree = {});

}  // namespace btmc::interp
