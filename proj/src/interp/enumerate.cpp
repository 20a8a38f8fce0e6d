#include <map>
#include <unordered_set>

#include "btmc/interpreter.hpp"

namespace btmc::interp {

namespace {

// Depth-first walk over choice sequences by replaying a prefix: each run
// takes recorded choices while they last, then the first option.
class Chooser {
public:
    int pick(int options)
    {
        if (options <= 1) return 0;
        if (pos_ == prefix_.size()) {
            prefix_.push_back(0);
            arity_.push_back(options);
        }
        return prefix_[pos_++];
    }

    /// Advances to the next unexplored choice sequence; false when done.
    bool next()
    {
        prefix_.resize(pos_);
        arity_.resize(pos_);
        while (!prefix_.empty() && prefix_.back() + 1 >= arity_.back()) {
            prefix_.pop_back();
            arity_.pop_back();
        }
        pos_ = 0;
        if (prefix_.empty()) return false;
        ++prefix_.back();
        return true;
    }

private:
    std::vector<int> prefix_, arity_;
    std::size_t pos_ = 0;
};

// Offline view: any status on any tick.
class FreeOutcomes : public Outcomes {
public:
    explicit FreeOutcomes(Chooser& c) : c_(c) {}

    Status action(int, int) override
    {
        static constexpr Status kAll[] = {Status::Success, Status::Failure, Status::Running};
        return kAll[c_.pick(3)];
    }
    Status condition(int, int) override { return c_.pick(2) == 0 ? Status::Success : Status::Failure; }
    std::int64_t set_sv(int, int, std::int64_t, const std::vector<std::int64_t>& legal) override
    {
        return legal[static_cast<std::size_t>(c_.pick(static_cast<int>(legal.size())))];
    }
    std::optional<std::int64_t> env(int, std::int64_t, const std::vector<std::int64_t>& targets, int) override
    {
        int k = c_.pick(static_cast<int>(targets.size()) + 1);
        if (k == 0) return std::nullopt;
        return targets[static_cast<std::size_t>(k - 1)];
    }

private:
    Chooser& c_;
};

// Runtime view, recording each decision as an explicit script entry.
class ScriptRecorder : public Outcomes {
public:
    ScriptRecorder(Chooser& c, const Interpreter& in, int max_ticks)
        : c_(c), in_(in), max_ticks_(max_ticks), flight_(static_cast<std::size_t>(in.node_count()))
    {
    }

    OutcomeScript script;

    Status action(int node, int tick) override
    {
        auto& f = flight_[static_cast<std::size_t>(node)];
        if (!f) {
            // Latencies reaching past the horizon are indistinguishable.
            int horizon = max_ticks_ - tick + 1;
            int latency = 1 + c_.pick(horizon);
            Status st = latency < horizon && c_.pick(2) == 1 ? Status::Failure : Status::Success;
            script.actions[{in_.node_name(node), ++ordinal_[in_.node_name(node)]}] = {st, latency};
            f = std::pair{tick + latency, st};
            return Status::Running;
        }
        if (tick < f->first) return Status::Running;
        Status st = f->second;
        f.reset();
        return st;
    }

    void halt_action(int node) override { flight_[static_cast<std::size_t>(node)].reset(); }

    Status condition(int node, int) override
    {
        Status st = c_.pick(2) == 0 ? Status::Success : Status::Failure;
        script.conditions[{in_.node_name(node), ++ordinal_["c:" + in_.node_name(node)]}] = st;
        return st;
    }

    std::int64_t set_sv(int, int sv, std::int64_t, const std::vector<std::int64_t>& legal) override
    {
        std::int64_t v = legal[static_cast<std::size_t>(c_.pick(static_cast<int>(legal.size())))];
        const syntax::SvDecl& d = in_.svs()[static_cast<std::size_t>(sv)];
        script.setsv[{d.name, ++ordinal_["sv:" + d.name]}] = d.value_name(v);
        return v;
    }

    std::optional<std::int64_t> env(int sv, std::int64_t, const std::vector<std::int64_t>& targets, int tick) override
    {
        int k = c_.pick(static_cast<int>(targets.size()) + 1);
        if (k == 0) return std::nullopt;
        std::int64_t v = targets[static_cast<std::size_t>(k - 1)];
        const syntax::SvDecl& d = in_.svs()[static_cast<std::size_t>(sv)];
        script.env[{d.name, tick}] = d.value_name(v);
        return v;
    }

private:
    Chooser& c_;
    const Interpreter& in_;
    int max_ticks_;
    std::vector<std::optional<std::pair<int, Status>>> flight_;
    std::map<std::string, int> ordinal_;
};

std::string key(const std::vector<TraceEvent>& events)
{
    ExecutionTrace t;
    t.events = events;
    return emit_trace(t, TraceFormat::Lines);
}

}  // namespace

std::vector<std::vector<TraceEvent>> enumerate_behaviors(const syntax::ValidatedSpec& spec, const EnumLimits& limits,
                                                         std::string_view tree)
{
    Interpreter in(spec, tree);
    Chooser chooser;
    std::vector<std::vector<TraceEvent>> out;
    std::unordered_set<std::string> seen;
    std::size_t runs = 0;
    do {
        if (++runs > limits.max_runs) throw BudgetExceeded("more than " + std::to_string(limits.max_runs) + " runs");
        in.reset();
        FreeOutcomes free(chooser);
        RunLog log = interpret(in, free, limits.max_ticks);
        if (seen.insert(key(log.events)).second) out.push_back(std::move(log.events));
    } while (chooser.next());
    return out;
}

std::vector<OutcomeScript> enumerate_scripts(const syntax::ValidatedSpec& spec, const EnumLimits& limits,
                                             std::string_view tree)
{
    Interpreter in(spec, tree);
    Chooser chooser;
    std::vector<OutcomeScript> out;
    do {
        if (out.size() >= limits.max_runs)
            throw BudgetExceeded("more than " + std::to_string(limits.max_runs) + " scripts");
        in.reset();
        ScriptRecorder rec(chooser, in, limits.max_ticks);
        interpret(in, rec, limits.max_ticks);
        out.push_back(std::move(rec.script));
    } while (chooser.next());
    return out;
}

}  // namespace btmc::interp
