#include "btmc/conformance.hpp"

#include <algorithm>
#include <cstring>
#include <unordered_map>

#include "btmc/state_space.hpp"

namespace btmc {

ObservedRun observed(const RunResult& r)
{
    ObservedRun o;
    o.events = observable(r.trace.events);
    o.ticks = r.ticks;
    if (r.outcome == RunOutcome::Success) o.terminal = Status::Success;
    if (r.outcome == RunOutcome::Failure) o.terminal = Status::Failure;
    o.complete = r.outcome != RunOutcome::ProviderError;
    return o;
}

namespace {

struct SearchNode {
    Values vals;
    std::size_t pos = 0;
    int tick = 0;
    std::size_t parent = 0;
    std::vector<int> fired;
};

std::string key(const Stepper& st, const SearchNode& n)
{
    std::string k(static_cast<std::size_t>(st.model().words) * 8 + 12, '\0');
    st.pack(n.vals.data(), reinterpret_cast<std::uint64_t*>(k.data()));
    auto* tail = k.data() + static_cast<std::size_t>(st.model().words) * 8;
    std::uint64_t pos = n.pos;
    std::memcpy(tail, &pos, 8);
    std::memcpy(tail + 8, &n.tick, 4);
    return k;
}

}  // namespace

Conformance check_conformance(const Model& m, const ObservedRun& run, std::size_t max_nodes)
{
    Stepper st(m);
    const auto& ev = run.events;
    Conformance res;
    std::vector<SearchNode> nodes;
    std::unordered_map<std::string, std::size_t> seen;
    std::vector<std::size_t> stack;

    SearchNode init;
    init.vals = m.initial_values();
    seen.emplace(key(st, init), 0);
    nodes.push_back(std::move(init));
    stack.push_back(0);

    auto goal = [&](const SearchNode& n) {
        if (n.pos != ev.size()) return false;
        if (!run.complete) return n.tick <= run.ticks;
        if (n.tick != run.ticks) return false;
        auto term = m.terminal(n.vals.data());
        if (run.terminal) return term == run.terminal;
        return !term && st.enabled_urgent(n.vals.data()).empty();
    };

    std::vector<TraceEvent> produced;
    while (!stack.empty()) {
        std::size_t cur = stack.back();
        stack.pop_back();
        ++res.explored;
        res.matched = std::max(res.matched, nodes[cur].pos);
        if (goal(nodes[cur])) {
            res.ok = true;
            for (std::size_t i = cur; i != 0; i = nodes[i].parent) res.path.push_back(nodes[i].fired);
            std::reverse(res.path.begin(), res.path.end());
            return res;
        }
        if (res.explored >= max_nodes) {
            res.budget_hit = true;
            return res;
        }
        const Values vals = nodes[cur].vals;
        const std::size_t pos = nodes[cur].pos;
        const int tick = nodes[cur].tick;
        auto succs = st.successors(vals.data());
        // Reverse so that the first successor is explored first.
        for (auto it = succs.rbegin(); it != succs.rend(); ++it) {
            int next_tick = tick + (it->boundary ? 1 : 0);
            if (it->boundary) {
                if (next_tick > run.ticks) continue;
                if (pos < ev.size() && ev[pos].tick < next_tick) continue;
            }
            produced.clear();
            Values v = vals;
            for (int t : it->fired) {
                Values before = v;
                st.apply(m.transitions[static_cast<std::size_t>(t)], v.data());
                transition_events(m, m.transitions[static_cast<std::size_t>(t)], before.data(), v.data(), next_tick,
                                  produced);
            }
            if (pos + produced.size() > ev.size()) continue;
            bool match = true;
            for (std::size_t i = 0; i < produced.size() && match; ++i) match = produced[i] == ev[pos + i];
            if (!match) continue;
            SearchNode n;
            n.vals = std::move(v);
            n.pos = pos + produced.size();
            n.tick = next_tick;
            n.parent = cur;
            n.fired = it->fired;
            auto [slot, fresh] = seen.emplace(key(st, n), nodes.size());
            if (!fresh) continue;
            nodes.push_back(std::move(n));
            stack.push_back(nodes.size() - 1);
        }
    }
    return res;
}

}  // namespace btmc
