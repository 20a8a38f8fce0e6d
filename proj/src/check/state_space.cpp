#include "btmc/state_space.hpp"

#include <algorithm>
#include <chrono>
#include <cstring>
#include <map>
#include <sstream>

namespace btmc {

// ---- Stepper ----------------------------------------------------------------

void Stepper::pack(const std::int32_t* vals, std::uint64_t* out) const
{
    std::fill(out, out + m_.words, 0);
    for (std::size_t i = 0; i < m_.slots.size(); ++i) {
        const Slot& s = m_.slots[i];
        if (s.bits == 0) continue;
        auto v = static_cast<std::uint64_t>(static_cast<std::int64_t>(vals[i]) - s.min);
        out[s.offset >> 6] |= v << (s.offset & 63);
    }
}

void Stepper::unpack(const std::uint64_t* packed, std::int32_t* vals) const
{
    for (std::size_t i = 0; i < m_.slots.size(); ++i) {
        const Slot& s = m_.slots[i];
        if (s.bits == 0) {
            vals[i] = s.min;
            continue;
        }
        std::uint64_t w = packed[s.offset >> 6] >> (s.offset & 63);
        std::uint64_t mask = (std::uint64_t{1} << s.bits) - 1;
        vals[i] = static_cast<std::int32_t>(static_cast<std::int64_t>(w & mask) + s.min);
    }
}

bool Stepper::enabled(const Transition& t, const std::int32_t* vals) const
{
    const Process& p = m_.processes[static_cast<std::size_t>(t.process)];
    return vals[p.loc_slot] == t.from && m_.holds(t.guard, vals);
}

void Stepper::apply(const Transition& t, std::int32_t* vals) const
{
    const Process& p = m_.processes[static_cast<std::size_t>(t.process)];
    vals[p.loc_slot] = t.to;
    for (const Assignment& a : t.effects) {
        std::int64_t v = m_.eval(a.value, vals);
        const Slot& s = m_.slots[static_cast<std::size_t>(a.slot)];
        if (v < s.min || v > s.max)
            throw ModelError("transition " + p.name + ":" + t.label + " writes " + std::to_string(v) + " into " +
                             s.name + " outside [" + std::to_string(s.min) + "," + std::to_string(s.max) + "]");
        vals[a.slot] = static_cast<std::int32_t>(v);
    }
}

std::vector<int> Stepper::enabled_urgent(const std::int32_t* vals) const
{
    std::vector<int> out;
    for (const Process& p : m_.processes) {
        for (int ti : p.by_location[static_cast<std::size_t>(vals[p.loc_slot])]) {
            const Transition& t = m_.transitions[static_cast<std::size_t>(ti)];
            if (t.timing == Timing::Urgent && m_.holds(t.guard, vals)) out.push_back(ti);
        }
    }
    return out;
}

std::vector<std::vector<int>> Stepper::tick_choices(const std::int32_t* vals) const
{
    std::vector<std::vector<int>> out;
    for (const Process& p : m_.processes) {
        std::vector<int> mine;
        for (int ti : p.by_location[static_cast<std::size_t>(vals[p.loc_slot])]) {
            const Transition& t = m_.transitions[static_cast<std::size_t>(ti)];
            if (t.timing == Timing::OneTick && m_.holds(t.guard, vals)) mine.push_back(ti);
        }
        if (!mine.empty()) out.push_back(std::move(mine));
    }
    return out;
}

std::vector<Stepper::Successor> Stepper::successors(const std::int32_t* vals) const
{
    std::vector<Successor> out;
    if (is_terminal(vals)) return out;
    Values base(vals, vals + m_.slots.size());
    for (int ti : enabled_urgent(vals)) {
        Successor s;
        s.fired = {ti};
        s.next = base;
        apply(m_.transitions[static_cast<std::size_t>(ti)], s.next.data());
        out.push_back(std::move(s));
    }
    if (!out.empty()) return out;

    auto choices = tick_choices(vals);
    if (choices.empty()) return out;
    std::vector<std::size_t> pick(choices.size(), 0);
    for (;;) {
        Successor s;
        s.boundary = true;
        s.next = base;
        for (std::size_t i = 0; i < choices.size(); ++i) {
            int ti = choices[i][pick[i]];
            s.fired.push_back(ti);
            apply(m_.transitions[static_cast<std::size_t>(ti)], s.next.data());
        }
        out.push_back(std::move(s));
        std::size_t i = choices.size();
        while (i > 0) {
            --i;
            if (++pick[i] < choices[i].size()) break;
            pick[i] = 0;
            if (i == 0) return out;
        }
    }
}

// ---- exploration ------------------------------------------------------------

namespace {

std::uint64_t hash_words(const std::uint64_t* w, int n)
{
    std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(n);
    for (int i = 0; i < n; ++i) {
        std::uint64_t x = w[i] + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        h ^= x ^ (x >> 31);
    }
    return h;
}

// Open-addressing set of state ids keyed by the packed words in `store`.
class StateTable {
public:
    StateTable(std::vector<std::uint64_t>& store, int words) : store_(store), words_(words) { table_.assign(1 << 16, kEmpty); }

    // Returns the id of `w`, appending it to the store when new.
    std::pair<StateId, bool> insert(const std::uint64_t* w)
    {
        if ((count_ + 1) * 2 > table_.size()) grow();
        std::size_t mask = table_.size() - 1;
        std::size_t i = hash_words(w, words_) & mask;
        for (;;) {
            StateId id = table_[i];
            if (id == kEmpty) {
                id = static_cast<StateId>(count_++);
                store_.insert(store_.end(), w, w + words_);
                table_[i] = id;
                return {id, true};
            }
            if (std::memcmp(&store_[static_cast<std::size_t>(id) * static_cast<std::size_t>(words_)], w,
                            sizeof(std::uint64_t) * static_cast<std::size_t>(words_)) == 0)
                return {id, false};
            i = (i + 1) & mask;
        }
    }

private:
    static constexpr StateId kEmpty = 0xffffffffu;
    std::vector<std::uint64_t>& store_;
    int words_;
    std::vector<StateId> table_;
    std::size_t count_ = 0;

    void grow()
    {
        std::vector<StateId> bigger(table_.size() * 2, kEmpty);
        std::size_t mask = bigger.size() - 1;
        for (StateId id : table_) {
            if (id == kEmpty) continue;
            std::size_t i = hash_words(&store_[static_cast<std::size_t>(id) * static_cast<std::size_t>(words_)], words_) & mask;
            while (bigger[i] != kEmpty) i = (i + 1) & mask;
            bigger[i] = id;
        }
        table_.swap(bigger);
    }
};

}  // namespace

StateGraph explore(const Model& model, const ExploreLimits& limits)
{
    auto t0 = std::chrono::steady_clock::now();
    Stepper step(model);
    StateGraph g;
    g.model = &model;
    g.words = model.words;
    StateTable table(g.store, g.words);
    std::map<std::vector<int>, int> boundary_ids;

    std::vector<std::uint64_t> buf(static_cast<std::size_t>(g.words));
    Values init = model.initial_values();
    step.pack(init.data(), buf.data());
    table.insert(buf.data());
    g.parent.push_back(0);
    g.parent_label.push_back(0);
    g.edge_begin.push_back(0);

    Values vals(model.slots.size());
    for (StateId s = 0; s < g.size(); ++s) {
        if ((s & 1023) == 0) {
            double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            if (el > limits.max_seconds) {
                g.limit = LimitKind::Time;
                break;
            }
        }
        if (g.size() > limits.max_states) {
            g.limit = LimitKind::States;
            break;
        }
        g.values(s, vals.data());
        for (auto& succ : step.successors(vals.data())) {
            Label label;
            if (succ.boundary) {
                auto [it, fresh] = boundary_ids.emplace(succ.fired, static_cast<int>(g.boundaries.size()));
                if (fresh) g.boundaries.push_back(succ.fired);
                label = -(it->second + 1);
            } else {
                label = succ.fired[0];
            }
            step.pack(succ.next.data(), buf.data());
            auto [id, fresh] = table.insert(buf.data());
            if (fresh) {
                g.parent.push_back(s);
                g.parent_label.push_back(label);
            }
            g.edges.push_back({id, label});
        }
        g.edge_begin.push_back(g.edges.size());
    }
    g.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return g;
}

void StateGraph::values(StateId s, std::int32_t* out) const
{
    Stepper(*model).unpack(&store[static_cast<std::size_t>(s) * static_cast<std::size_t>(words)], out);
}

Values StateGraph::values(StateId s) const
{
    Values v(model->slots.size());
    values(s, v.data());
    return v;
}

std::pair<const Edge*, const Edge*> StateGraph::out(StateId s) const
{
    if (s >= expanded()) return {nullptr, nullptr};
    return {edges.data() + edge_begin[s], edges.data() + edge_begin[s + 1]};
}

// ---- queries ----------------------------------------------------------------

Trace path_to(const StateGraph& g, StateId target)
{
    Trace t;
    for (StateId s = target;; s = g.parent[s]) {
        t.states.push_back(s);
        if (s == 0) break;
        t.labels.push_back(g.parent_label[s]);
    }
    std::reverse(t.states.begin(), t.states.end());
    std::reverse(t.labels.begin(), t.labels.end());
    return t;
}

std::optional<Trace> find_path(const StateGraph& g, const StatePredicate& pred)
{
    Values vals(g.model->slots.size());
    for (StateId s = 0; s < g.size(); ++s) {
        g.values(s, vals.data());
        if (pred(vals.data())) return path_to(g, s);
    }
    return std::nullopt;
}

QuotientStats quotient_stats(const StateGraph& g)
{
    QuotientStats q;
    q.states = g.size();
    q.transitions = g.edges.size();
    Values vals(g.model->slots.size());
    for (StateId s = 0; s < g.size(); ++s) {
        g.values(s, vals.data());
        if (auto t = g.model->terminal(vals.data())) q.terminal_statuses.insert(*t);
    }
    return q;
}

bool has_urgent_cycle(const StateGraph& g)
{
    std::size_t n = g.expanded();
    std::vector<std::uint32_t> indeg(n, 0);
    for (StateId s = 0; s < n; ++s) {
        auto [b, e] = g.out(s);
        for (const Edge* x = b; x != e; ++x)
            if (!g.is_boundary(x->label) && x->dst < n) ++indeg[x->dst];
    }
    std::vector<StateId> ready;
    for (StateId s = 0; s < n; ++s)
        if (indeg[s] == 0) ready.push_back(s);
    std::size_t removed = 0;
    while (!ready.empty()) {
        StateId s = ready.back();
        ready.pop_back();
        ++removed;
        auto [b, e] = g.out(s);
        for (const Edge* x = b; x != e; ++x)
            if (!g.is_boundary(x->label) && x->dst < n && --indeg[x->dst] == 0) ready.push_back(x->dst);
    }
    return removed != n;
}

bool replay(const Model& model, const StateGraph& g, const Trace& t)
{
    if (t.states.empty() || t.states[0] != 0 || t.labels.size() + 1 != t.states.size()) return false;
    Stepper step(model);
    Values init = model.initial_values();
    if (g.values(0) != init) return false;
    for (std::size_t i = 0; i < t.labels.size(); ++i) {
        Values cur = g.values(t.states[i]);
        Values want = g.values(t.states[i + 1]);
        Label l = t.labels[i];
        std::vector<int> fired = g.is_boundary(l) ? g.boundary(l) : std::vector<int>{l};
        bool ok = false;
        for (auto& s : step.successors(cur.data()))
            if (s.fired == fired && s.boundary == g.is_boundary(l) && s.next == want) ok = true;
        if (!ok) return false;
    }
    return true;
}

// ---- text output ------------------------------------------------------------

std::string label_text(const StateGraph& g, Label l)
{
    const Model& m = *g.model;
    auto one = [&](int ti) {
        const Transition& t = m.transitions[static_cast<std::size_t>(ti)];
        return m.processes[static_cast<std::size_t>(t.process)].name + ":" + t.label;
    };
    if (!g.is_boundary(l)) return one(l);
    std::string out = "tick{";
    const auto& fired = g.boundary(l);
    for (std::size_t i = 0; i < fired.size(); ++i) out += (i ? "," : "") + one(fired[i]);
    return out + "}";
}

std::string describe_state(const Model& m, const std::int32_t* vals)
{
    std::ostringstream os;
    const Process& tk = m.processes[static_cast<std::size_t>(m.ticker)];
    os << "ticker=" << tk.locations[static_cast<std::size_t>(vals[tk.loc_slot])];
    for (const NodeInfo& n : m.nodes) {
        const Process& p = m.processes[static_cast<std::size_t>(n.process)];
        int loc = vals[p.loc_slot];
        auto st = static_cast<Status>(vals[n.rstatus_slot]);
        if (loc == 0 && st == Status::NoRet && vals[n.caller_slot] == 0) continue;
        os << " " << n.name << "@" << p.locations[static_cast<std::size_t>(loc)] << "/" << to_string(st);
        for (const Local& l : p.locals) os << "," << l.name << "=" << vals[l.slot];
    }
    for (const SvInfo& sv : m.svs) os << " sv(" << sv.name << ")=" << sv.value_name(vals[sv.slot]);
    return os.str();
}

std::string dump_trace(const StateGraph& g, const Trace& t)
{
    std::ostringstream os;
    const Model& m = *g.model;
    os << "trace " << m.name << " steps " << t.labels.size() << "\n";
    int tick = 0;
    Values vals(m.slots.size());
    for (std::size_t i = 0; i < t.states.size(); ++i) {
        if (i > 0) {
            if (g.is_boundary(t.labels[i - 1])) ++tick;
            os << "  --> " << label_text(g, t.labels[i - 1]) << "\n";
        }
        g.values(t.states[i], vals.data());
        os << "state " << t.states[i] << " tick " << tick << " : " << describe_state(m, vals.data()) << "\n";
    }
    return os.str();
}

std::string dump_graph(const StateGraph& g)
{
    std::ostringstream os;
    const Model& m = *g.model;
    os << "graph " << m.name << " states " << g.size() << " edges " << g.edges.size() << " complete "
       << (g.complete() ? "yes" : "no") << "\n";
    os << "slots";
    for (const Slot& s : m.slots) os << " " << s.name;
    os << "\n";
    Values vals(m.slots.size());
    for (StateId s = 0; s < g.size(); ++s) {
        g.values(s, vals.data());
        os << "state " << s;
        for (std::int32_t v : vals) os << " " << v;
        os << "\n";
    }
    for (StateId s = 0; s < g.expanded(); ++s) {
        auto [b, e] = g.out(s);
        for (const Edge* x = b; x != e; ++x) os << "edge " << s << " " << label_text(g, x->label) << " " << x->dst << "\n";
    }
    return os.str();
}

}  // namespace btmc
