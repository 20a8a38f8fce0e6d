#pragma once

// Trace containment: does an observed event sequence correspond to a path
// of the offline model? The search runs on the fly over (state, position).

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "btmc/model.hpp"
#include "btmc/runtime.hpp"

namespace btmc {

struct ObservedRun {
    std::vector<TraceEvent> events;  ///< observable events only
    int ticks = 0;                   ///< tick boundaries the run crossed
    std::optional<Status> terminal;
    bool complete = true;            ///< false when the run was cut short by an error
};

ObservedRun observed(const RunResult& r);

struct Conformance {
    bool ok = false;
    std::size_t matched = 0;   ///< longest event prefix some path reproduces
    std::size_t explored = 0;  ///< search nodes visited
    bool budget_hit = false;
    std::vector<std::vector<int>> path;  ///< fired transitions per step, when ok
};

/// Searches for a path from the initial state whose events, in firing order,
/// equal `run.events` with matching tick numbers, and which ends as the run
/// ended: terminal with the same status, or quiescent after `run.ticks`.
Conformance check_conformance(const Model& model, const ObservedRun& run, std::size_t max_nodes = 2'000'000);

}  // namespace btmc
