#pragma once

// Composed model: one automaton per tree node, one per state variable and a
// root ticker, communicating through shared integer slots (node records,
// state variables) under a discrete-time semantics.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "btmc/status.hpp"
#include "btmc/syntax.hpp"

namespace btmc {

enum class TickSemantics { RootOnly, Leaves, AllNodes };

std::string_view to_string(TickSemantics t);
std::optional<TickSemantics> parse_tick_semantics(std::string_view text);

enum class Timing : std::uint8_t { Urgent, OneTick };

/// One integer cell of the global state.
struct Slot {
    std::string name;
    std::int32_t min = 0;
    std::int32_t max = 0;
    std::int32_t init = 0;
    int offset = 0;  ///< bit offset in the packed state
    int bits = 0;
};

using ExprId = std::int32_t;
constexpr ExprId kTrue = -1;

struct ExprNode {
    enum class Op : std::uint8_t { Const, Slot, Add, Sub, Mul, Eq, Ne, Lt, Le, Gt, Ge, And, Or, Not, Ite };
    Op op = Op::Const;
    std::int64_t k = 0;  ///< constant or slot index
    ExprId a = kTrue, b = kTrue, c = kTrue;
};

struct Assignment {
    int slot = 0;
    ExprId value = kTrue;
};

enum class EventKind : std::uint8_t { None, Ticked, Returned, Halting, Halted, RootTerminal };

/// How the runtime engine resolves a transition the offline model treats as
/// a free choice.
enum class External : std::uint8_t { None, CheckCondition, ActionTick, HaltAction, SetSv, EnvRead };

struct Transition {
    int process = 0;
    int from = 0;
    int to = 0;
    ExprId guard = kTrue;
    Timing timing = Timing::Urgent;
    std::vector<Assignment> effects;  ///< applied left to right
    std::string label;

    EventKind event = EventKind::None;
    Status status = Status::NoRet;  ///< for Returned and RootTerminal
    int node = -1;                  ///< node the event concerns

    External external = External::None;
    std::int64_t expected = 0;  ///< Status for leaves, value for SV choices; -1 = unchanged
};

enum class ProcessKind { Node, StateVar, Ticker };

struct Local {
    std::string name;
    int slot = 0;
};

struct Process {
    std::string name;
    ProcessKind kind = ProcessKind::Node;
    int node = -1;
    int sv = -1;
    std::vector<std::string> locations;
    int loc_slot = 0;
    std::vector<Local> locals;
    std::vector<int> transitions;
    std::vector<std::vector<int>> by_location;

    int location(std::string_view name) const;  ///< -1 when absent
};

struct NodeInfo {
    std::string name;
    syntax::NodeKind kind = syntax::NodeKind::Action;
    int index = 0;  ///< pre-order index in the document
    int parent = -1;
    std::vector<int> children;
    int process = 0;
    int caller_slot = 0;  ///< 0 = no caller, 1 = parent (or the ticker for the root)
    int rstatus_slot = 0;
    std::string id;  ///< :ID, or the canonical name when absent
    std::optional<syntax::Datum> args;
    int sv = -1;  ///< SetSV target
};

struct SvInfo {
    std::string name;
    syntax::SvDecl decl;
    syntax::SvDriver driver = syntax::SvDriver::Environment;
    int slot = 0;
    int process = 0;

    /// Rendering of a slot value: the state name or the integer.
    std::string value_name(std::int64_t v) const;
    std::optional<std::int64_t> parse_value(std::string_view text) const;
};

struct Model {
    std::string name;
    TickSemantics semantics = TickSemantics::RootOnly;
    bool env_free_change = false;
    std::vector<Slot> slots;
    int words = 0;  ///< 64-bit words per packed state
    std::vector<ExprNode> exprs;
    std::vector<Process> processes;
    std::vector<Transition> transitions;
    std::vector<NodeInfo> nodes;  ///< pre-order; nodes[0] is the BehaviorTree root
    std::vector<SvInfo> svs;
    int ticker = 0;
    int ticker_idle = 0;
    int ticker_terminal_success = 0;
    int ticker_terminal_failure = 0;

    std::int64_t eval(ExprId e, const std::int32_t* vals) const;
    bool holds(ExprId e, const std::int32_t* vals) const { return e == kTrue || eval(e, vals) != 0; }

    int node_index(std::string_view name) const;  ///< -1 when absent
    int sv_index(std::string_view name) const;
    std::vector<std::int32_t> initial_values() const;
    int node_count() const { return static_cast<int>(nodes.size()); }

    /// Terminal status in `vals`, if the ticker has stopped.
    std::optional<Status> terminal(const std::int32_t* vals) const;
};

struct CompileOptions {
    TickSemantics semantics = TickSemantics::RootOnly;
    bool env_free_change = false;  ///< env SVs may take several relation steps per tick
};

class CompileError : public std::runtime_error {
public:
    enum class Kind { UnsupportedNode, EvalTypeError, UnknownTree };
    CompileError(Kind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Compiles one tree (by name; the first tree when empty).
Model compile(const syntax::ValidatedSpec& spec, const CompileOptions& options = {}, std::string_view tree = {});

/// Deterministic textual dump of slots, processes and transitions.
std::string dump_model(const Model& model);
/// Graphviz description of one process automaton.
std::string process_dot(const Model& model, int process);

std::string expr_to_string(const Model& model, ExprId e);

}  // namespace btmc
