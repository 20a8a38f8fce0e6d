#pragma once

// Explicit-state exploration of a compiled model under the discrete-time
// semantics: urgent transitions interleave until none is enabled, then a
// tick boundary fires one OneTick choice per process as a single step.

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "btmc/model.hpp"

namespace btmc {

using StateId = std::uint32_t;
using Values = std::vector<std::int32_t>;

/// Edge label: a transition id (>= 0), or a tick boundary encoded as
/// -(k + 1) where k indexes StateGraph::boundaries.
using Label = std::int32_t;

class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Successor relation over unpacked valuations.
class Stepper {
public:
    explicit Stepper(const Model& model) : m_(model) {}

    const Model& model() const { return m_; }

    void pack(const std::int32_t* vals, std::uint64_t* out) const;
    void unpack(const std::uint64_t* packed, std::int32_t* vals) const;

    bool enabled(const Transition& t, const std::int32_t* vals) const;
    /// Fires `t` in place: location change, then effects left to right.
    void apply(const Transition& t, std::int32_t* vals) const;

    std::vector<int> enabled_urgent(const std::int32_t* vals) const;
    /// Enabled OneTick transitions grouped per process (processes with none omitted).
    std::vector<std::vector<int>> tick_choices(const std::int32_t* vals) const;

    bool is_terminal(const std::int32_t* vals) const { return m_.terminal(vals).has_value(); }

    struct Successor {
        std::vector<int> fired;  ///< one transition, or one per process at a boundary
        bool boundary = false;
        Values next;
    };
    /// All successors, in a deterministic order.
    std::vector<Successor> successors(const std::int32_t* vals) const;

private:
    const Model& m_;
};

enum class LimitKind { None, States, Time };

struct ExploreLimits {
    std::uint64_t max_states = 5'000'000;
    double max_seconds = 600.0;
};

struct Edge {
    StateId dst = 0;
    Label label = 0;
};

class StateGraph {
public:
    const Model* model = nullptr;
    int words = 0;
    std::vector<std::uint64_t> store;         ///< packed states, `words` each, in BFS order
    std::vector<std::uint64_t> edge_begin;    ///< CSR offsets; size = expanded + 1
    std::vector<Edge> edges;
    std::vector<std::vector<int>> boundaries; ///< fired transition sets of tick edges
    std::vector<StateId> parent;              ///< BFS tree; parent[0] = 0
    std::vector<Label> parent_label;
    LimitKind limit = LimitKind::None;
    double seconds = 0.0;

    std::size_t size() const { return parent.size(); }
    std::size_t expanded() const { return edge_begin.empty() ? 0 : edge_begin.size() - 1; }
    bool complete() const { return limit == LimitKind::None; }

    void values(StateId s, std::int32_t* out) const;
    Values values(StateId s) const;

    /// Edges out of s; empty for states that were never expanded.
    std::pair<const Edge*, const Edge*> out(StateId s) const;
    bool is_boundary(Label l) const { return l < 0; }
    const std::vector<int>& boundary(Label l) const { return boundaries[static_cast<std::size_t>(-l - 1)]; }
};

StateGraph explore(const Model& model, const ExploreLimits& limits = {});

struct Trace {
    std::vector<StateId> states;  ///< states[0] is the initial state
    std::vector<Label> labels;    ///< labels[i] leads from states[i] to states[i+1]
};

using StatePredicate = std::function<bool(const std::int32_t*)>;

/// Shortest path from the initial state to a state satisfying `pred`.
std::optional<Trace> find_path(const StateGraph& g, const StatePredicate& pred);
/// Path along BFS parents from the initial state to `target`.
Trace path_to(const StateGraph& g, StateId target);

struct QuotientStats {
    std::uint64_t states = 0;
    std::uint64_t transitions = 0;
    std::set<Status> terminal_statuses;
};

QuotientStats quotient_stats(const StateGraph& g);

/// True when some cycle uses only urgent edges (time could never pass).
bool has_urgent_cycle(const StateGraph& g);

/// Re-checks every step of `t` against the successor relation.
bool replay(const Model& model, const StateGraph& g, const Trace& t);

std::string label_text(const StateGraph& g, Label l);
std::string describe_state(const Model& model, const std::int32_t* vals);
std::string dump_trace(const StateGraph& g, const Trace& t);
std::string dump_graph(const StateGraph& g);

}  // namespace btmc
