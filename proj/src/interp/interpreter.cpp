#include "btmc/interpreter.hpp"

#include <algorithm>
#include <cmath>

namespace btmc::interp {

using syntax::Expr;
using syntax::Node;
using syntax::NodeKind;
using syntax::SvDecl;
using K = TraceEvent::Kind;

namespace {

std::int64_t int_attr(const Node& n, std::string_view key, std::int64_t dflt)
{
    auto t = n.text_attr(key);
    if (!t) return dflt;
    try {
        return std::stoll(*t);
    } catch (...) {
        return dflt;
    }
}

// Ticks between two child ticks for a RateController; 1 means no throttling.
std::int64_t rate_period(const Node& n)
{
    double hz = 10.0;
    if (auto t = n.text_attr("hz")) {
        hz = std::stod(*t);
    } else if (const auto* a = n.attr("args"); a && a->value && a->value->is_list()) {
        const auto& items = a->value->items;
        for (std::size_t i = 0; i + 1 < items.size(); ++i)
            if (syntax::iequals(items[i].text, "hz")) hz = std::stod(items[i + 1].text);
    }
    return static_cast<std::int64_t>(std::ceil(1.0 / hz - 1e-9));
}

}  // namespace

struct Interpreter::Impl {
    struct N {
        const Node* ast = nullptr;
        std::string name, id;
        NodeKind kind = NodeKind::Action;
        std::vector<int> kids;
        int sv = -1;

        std::int64_t bound = 1;      // Repeat / Retry
        std::int64_t threshold = 0;  // Parallel
        std::int64_t period = 1;     // RateController
        std::int64_t retries = 1;    // Recovery
        bool halt = false, wait = false;

        Status r = Status::NoRet;
        std::int64_t idx = 1, cnt = 0, cool = 0, retry = 0, phase = 0, failed = 0, last = 1;
        std::int64_t episode = 0, decided = 0;
        bool active = false;
    };

    const syntax::ValidatedSpec& spec;
    Options opt;
    std::string model;
    std::vector<N> nodes;
    std::vector<SvDecl> svs;
    std::vector<bool> env;
    std::vector<std::int64_t> val;
    int tick_no = 0;
    std::optional<Status> terminal;

    Outcomes* out = nullptr;
    std::vector<TraceEvent>* ev = nullptr;
    mutable InterpState snapshot;

    Impl(const syntax::ValidatedSpec& s, std::string_view tree, Options o) : spec(s), opt(o)
    {
        const Node* root = tree.empty() ? &s.spec.trees.front() : s.find_tree(tree);
        if (!root) throw std::invalid_argument("no tree named '" + std::string(tree) + "'");
        model = syntax::tree_name(*root);
        svs = s.spec.svs;
        for (auto d : s.drivers) env.push_back(d == syntax::SvDriver::Environment);
        collect(*root);
        reset();
    }

    int collect(const Node& a)
    {
        int i = static_cast<int>(nodes.size());
        nodes.emplace_back();
        {
            N& n = nodes.back();
            n.ast = &a;
            n.name = a.canonical_name;
            n.id = a.text_attr("ID").value_or(a.canonical_name);
            n.kind = a.kind;
            if (a.kind == NodeKind::SetSV) n.sv = s_index(*a.text_attr("sv"));
            std::int64_t k = static_cast<std::int64_t>(a.children.size());
            switch (a.kind) {
            case NodeKind::Repeat: n.bound = int_attr(a, "repeat", 1); break;
            case NodeKind::RetryUntilSuccessful:
                n.bound = a.attr("num_attempts") ? int_attr(a, "num_attempts", 1) : int_attr(a, "num_retries", 1);
                break;
            case NodeKind::Parallel: n.threshold = int_attr(a, "success", k); break;
            case NodeKind::ParallelAll: n.threshold = k; break;
            case NodeKind::RateController: n.period = rate_period(a); break;
            case NodeKind::Recovery: n.retries = int_attr(a, "num_retries", 1); break;
            default: break;
            }
            n.halt = int_attr(a, "halt", 0) != 0;
            n.wait = int_attr(a, "wait", 0) != 0;
        }
        for (const Node& c : a.children) {
            int ci = collect(c);
            nodes[static_cast<std::size_t>(i)].kids.push_back(ci);
        }
        return i;
    }

    int s_index(std::string_view name) const
    {
        for (std::size_t i = 0; i < svs.size(); ++i)
            if (svs[i].name == name) return static_cast<int>(i);
        return -1;
    }

    void reset()
    {
        for (N& n : nodes) {
            n.r = Status::NoRet;
            n.idx = 1;
            n.cnt = n.cool = n.retry = n.phase = n.failed = n.episode = n.decided = 0;
            n.last = 1;
            n.active = false;
            if (n.kind == NodeKind::RoundRobin) n.idx = 0;
        }
        val.clear();
        for (const SvDecl& d : svs) val.push_back(d.initial_value());
        tick_no = 0;
        terminal.reset();
    }

    // ---- events --------------------------------------------------------------

    void emit(K kind, int node, Status st = Status::NoRet)
    {
        TraceEvent e;
        e.tick = tick_no;
        e.kind = kind;
        e.node = nodes[static_cast<std::size_t>(node)].name;
        if (kind == K::Returned || kind == K::RootTerminal) e.status = st;
        ev->push_back(std::move(e));
    }

    void set_value(int sv, std::int64_t v)
    {
        std::int64_t old = val[static_cast<std::size_t>(sv)];
        val[static_cast<std::size_t>(sv)] = v;
        if (old == v) return;
        const SvDecl& d = svs[static_cast<std::size_t>(sv)];
        TraceEvent e;
        e.tick = tick_no;
        e.kind = K::SvChanged;
        e.sv = d.name;
        e.old_value = d.value_name(old);
        e.new_value = d.value_name(v);
        ev->push_back(std::move(e));
    }

    // ---- state variables -----------------------------------------------------

    std::int64_t lo(const SvDecl& d) const { return d.kind == SvDecl::Kind::Enumerated ? 0 : d.min; }
    std::int64_t hi(const SvDecl& d) const
    {
        return d.kind == SvDecl::Kind::Enumerated ? static_cast<std::int64_t>(d.states.size()) - 1 : d.max;
    }

    // A program may write v into the SV when it is the current value or a
    // permitted move from it.
    bool legal(int sv, std::int64_t v) const
    {
        const SvDecl& d = svs[static_cast<std::size_t>(sv)];
        std::int64_t cur = val[static_cast<std::size_t>(sv)];
        if (v < lo(d) || v > hi(d)) return false;
        if (d.kind == SvDecl::Kind::BoundedNat || v == cur) return true;
        return d.allows(static_cast<int>(cur), static_cast<int>(v));
    }

    std::vector<std::int64_t> env_targets(int sv) const
    {
        const SvDecl& d = svs[static_cast<std::size_t>(sv)];
        std::int64_t cur = val[static_cast<std::size_t>(sv)];
        std::vector<std::int64_t> out;
        if (d.kind == SvDecl::Kind::BoundedNat) {
            for (std::int64_t w = d.min; w <= d.max; ++w)
                if (w != cur) out.push_back(w);
            return out;
        }
        int k = static_cast<int>(d.states.size());
        std::vector<bool> seen(static_cast<std::size_t>(k), false);
        seen[static_cast<std::size_t>(cur)] = true;
        std::vector<int> frontier{static_cast<int>(cur)};
        while (!frontier.empty()) {
            int a = frontier.back();
            frontier.pop_back();
            for (int c = 0; c < k; ++c) {
                if (seen[static_cast<std::size_t>(c)] || !d.allows(a, c)) continue;
                seen[static_cast<std::size_t>(c)] = true;
                out.push_back(c);
                if (opt.env_free_change) frontier.push_back(c);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    void boundary()
    {
        std::vector<std::pair<int, std::int64_t>> moves;
        for (std::size_t i = 0; i < svs.size(); ++i) {
            if (!env[i]) continue;
            int sv = static_cast<int>(i);
            auto targets = env_targets(sv);
            auto v = out->env(sv, val[i], targets, tick_no);
            if (!v || *v == val[i]) continue;
            if (!std::binary_search(targets.begin(), targets.end(), *v))
                throw ProviderError("environment moved " + svs[i].name + " illegally to " + std::to_string(*v));
            moves.emplace_back(sv, *v);
        }
        for (auto [sv, v] : moves) set_value(sv, v);
    }

    // ---- Eval expressions ------------------------------------------------------

    std::int64_t eval(const Expr& e) const
    {
        switch (e.op) {
        case Expr::Op::Int:
        case Expr::Op::EnumLit: return e.value;
        case Expr::Op::StatusLit: {
            auto st = parse_status(e.name);
            if (!st) throw std::runtime_error("bad status literal " + e.name);
            return static_cast<std::int64_t>(*st);
        }
        case Expr::Op::StatusRef:
            for (const N& n : nodes)
                if (n.name == e.name) return static_cast<std::int64_t>(n.r);
            throw std::runtime_error("status of unknown node " + e.name);
        case Expr::Op::SvRef:
        case Expr::Op::ArgRef: {
            int sv = s_index(e.name);
            if (sv < 0) throw std::runtime_error("unknown state variable " + e.name);
            return val[static_cast<std::size_t>(sv)];
        }
        case Expr::Op::Not: return eval(e.args[0]) == 0 ? 1 : 0;
        case Expr::Op::Add: return eval(e.args[0]) + eval(e.args[1]);
        case Expr::Op::Mul: return eval(e.args[0]) * eval(e.args[1]);
        case Expr::Op::Eq: return eval(e.args[0]) == eval(e.args[1]) ? 1 : 0;
        case Expr::Op::Ident:
        case Expr::Op::Assign: break;
        }
        throw std::runtime_error("expression cannot be evaluated");
    }

    // ---- tick and halt ---------------------------------------------------------

    N& at(int i) { return nodes[static_cast<std::size_t>(i)]; }

    Status tick(int i)
    {
        emit(K::Ticked, i);
        at(i).r = Status::NoRet;
        Status st = body(i);
        emit(K::Returned, i, st);
        at(i).r = st;
        return st;
    }

    void halt(int i)
    {
        emit(K::Halting, i);
        N& n = at(i);
        switch (n.kind) {
        case NodeKind::Action:
            n.active = false;
            out->halt_action(i);
            break;
        case NodeKind::Condition:
        case NodeKind::SetSV:
        case NodeKind::Eval: break;
        default:
            // Locals a halt restarts from scratch.
            switch (n.kind) {
            case NodeKind::Sequence:
            case NodeKind::Fallback: n.idx = 1; break;
            case NodeKind::Parallel:
            case NodeKind::ParallelAll: n.episode = n.decided = 0; break;
            case NodeKind::Repeat:
            case NodeKind::RetryUntilSuccessful: n.cnt = 0; break;
            case NodeKind::Recovery: n.retry = n.phase = 0; break;
            case NodeKind::RoundRobin: n.idx = n.failed = 0; break;
            case NodeKind::PipelineSequence: n.last = 1; break;
            default: break;
            }
            halt_running(n.kids);
        }
        at(i).r = Status::Failure;
        emit(K::Halted, i);
    }

    // Halts, in order, every listed node whose last result was Running.
    void halt_running(const std::vector<int>& list)
    {
        std::vector<int> targets;
        for (int c : list)
            if (at(c).r == Status::Running) targets.push_back(c);
        for (int c : targets) at(c).r = Status::HaltMe;
        for (int c : targets) halt(c);
    }

    Status body(int i)
    {
        N& n = at(i);
        switch (n.kind) {
        case NodeKind::Action: {
            Status st = out->action(i, tick_no);
            if (st != Status::Success && st != Status::Failure && st != Status::Running)
                throw ProviderError("action " + n.name + " returned " + std::string(to_string(st)));
            at(i).active = st == Status::Running;
            return st;
        }
        case NodeKind::Condition: {
            Status st = out->condition(i, tick_no);
            if (st != Status::Success && st != Status::Failure)
                throw ProviderError("condition " + n.name + " returned " + std::string(to_string(st)));
            return st;
        }
        case NodeKind::SetSV: {
            std::vector<std::int64_t> ok;
            const SvDecl& d = svs[static_cast<std::size_t>(n.sv)];
            for (std::int64_t v = lo(d); v <= hi(d); ++v)
                if (legal(n.sv, v)) ok.push_back(v);
            std::int64_t v = out->set_sv(i, n.sv, val[static_cast<std::size_t>(n.sv)], ok);
            if (!std::binary_search(ok.begin(), ok.end(), v))
                throw ProviderError("set_sv gave " + d.name + " the illegal value " + std::to_string(v));
            set_value(n.sv, v);
            return Status::Success;
        }
        case NodeKind::Eval: {
            const Expr& e = *n.ast->expr;
            if (e.op == Expr::Op::Assign) {
                int sv = s_index(e.name);
                std::int64_t v = eval(e.args[0]);
                if (!legal(sv, v)) return Status::Failure;
                set_value(sv, v);
                return Status::Success;
            }
            return eval(e) != 0 ? Status::Success : Status::Failure;
        }
        case NodeKind::Sequence:
        case NodeKind::SequenceWithMemory:
        case NodeKind::Fallback: return sequence(i);
        case NodeKind::ReactiveSequence:
        case NodeKind::ReactiveFallback: return reactive(i);
        case NodeKind::Parallel:
        case NodeKind::ParallelAll: return parallel(i);
        case NodeKind::BehaviorTree:
        case NodeKind::Inverter:
        case NodeKind::ForceFailure:
        case NodeKind::ForceSuccess:
        case NodeKind::KeepRunningUntilFailure: return decorate(n.kind, tick(n.kids[0]));
        case NodeKind::Repeat:
        case NodeKind::RetryUntilSuccessful: return counting(i);
        case NodeKind::RateController: return rate(i);
        case NodeKind::Recovery: return recovery(i);
        case NodeKind::RoundRobin: return round_robin(i);
        case NodeKind::PipelineSequence: return pipeline(i);
        }
        throw std::runtime_error("unsupported node " + n.name);
    }

    static Status decorate(NodeKind kind, Status st)
    {
        switch (kind) {
        case NodeKind::Inverter:
            if (st == Status::Success) return Status::Failure;
            if (st == Status::Failure) return Status::Success;
            return st;
        case NodeKind::ForceFailure: return st == Status::Success ? Status::Failure : st;
        case NodeKind::ForceSuccess: return st == Status::Failure ? Status::Success : st;
        case NodeKind::KeepRunningUntilFailure: return st == Status::Success ? Status::Running : st;
        default: return st;
        }
    }

    Status sequence(int i)
    {
        bool fb = at(i).kind == NodeKind::Fallback;
        bool memory = at(i).kind == NodeKind::SequenceWithMemory;
        Status advance = fb ? Status::Failure : Status::Success;
        auto k = static_cast<std::int64_t>(at(i).kids.size());
        for (std::int64_t c = at(i).idx;; ++c) {
            Status st = tick(at(i).kids[static_cast<std::size_t>(c - 1)]);
            if (st == Status::Running) {
                at(i).idx = c;
                return st;
            }
            if (st != advance) {
                at(i).idx = memory ? c : 1;
                return st;
            }
            if (c == k) {
                at(i).idx = 1;
                return st;
            }
            at(i).idx = c + 1;
        }
    }

    Status reactive(int i)
    {
        Status advance = at(i).kind == NodeKind::ReactiveFallback ? Status::Failure : Status::Success;
        const std::vector<int> kids = at(i).kids;
        for (std::size_t c = 0; c < kids.size(); ++c) {
            Status st = tick(kids[c]);
            if (st == advance) continue;
            if (at(i).halt) halt_running({kids.begin() + static_cast<std::ptrdiff_t>(c) + 1, kids.end()});
            return st;
        }
        return advance;
    }

    Status parallel(int i)
    {
        const std::vector<int> kids = at(i).kids;
        std::vector<int> called;
        for (int c : kids)
            if (at(i).episode == 0 || at(c).r == Status::Running) called.push_back(c);
        at(i).episode = 1;
        for (int c : called) tick(c);

        std::int64_t succ = 0, fail = 0, running = 0;
        for (int c : kids) {
            succ += at(c).r == Status::Success;
            fail += at(c).r == Status::Failure;
            running += at(c).r == Status::Running;
        }
        auto k = static_cast<std::int64_t>(kids.size());
        N& n = at(i);
        int verdict = n.decided;
        if (verdict == 0) {
            if (succ >= n.threshold) verdict = 1;
            else if (fail > k - n.threshold) verdict = 2;
            else return Status::Running;
        }
        Status target = verdict == 1 ? Status::Success : Status::Failure;
        if (running > 0 && !n.halt && n.wait) {
            n.decided = verdict;
            return Status::Running;
        }
        n.episode = n.decided = 0;
        if (running > 0 && n.halt) halt_running(kids);
        return target;
    }

    Status counting(int i)
    {
        Status again = at(i).kind == NodeKind::Repeat ? Status::Success : Status::Failure;
        int c = at(i).kids[0];
        for (;;) {
            Status st = tick(c);
            N& n = at(i);
            if (st == Status::Running) return st;
            if (st != again || n.bound <= 1 || n.cnt == n.bound - 1) {
                n.cnt = 0;
                return st;
            }
            ++n.cnt;
        }
    }

    Status rate(int i)
    {
        int c = at(i).kids[0];
        if (at(i).period <= 1) return tick(c);
        if (at(i).cool != 0 && at(c).r != Status::Running) {
            --at(i).cool;
            return Status::Running;
        }
        Status st = tick(c);
        if (st != Status::Running) at(i).cool = at(i).period - 1;
        return st;
    }

    Status recovery(int i)
    {
        int main = at(i).kids[0];
        int recov = at(i).kids[1];
        bool in_recovery = at(i).phase == 1;
        for (;;) {
            if (!in_recovery) {
                Status st = tick(main);
                N& n = at(i);
                if (st == Status::Running) return st;
                if (st == Status::Success || n.retry == n.retries) {
                    n.retry = n.phase = 0;
                    return st;
                }
                n.phase = 1;
            }
            in_recovery = false;
            Status st = tick(recov);
            N& n = at(i);
            if (st == Status::Running) return st;
            if (st == Status::Failure) {
                n.retry = n.phase = 0;
                return st;
            }
            ++n.retry;
            n.phase = 0;
        }
    }

    Status round_robin(int i)
    {
        auto k = static_cast<std::int64_t>(at(i).kids.size());
        for (;;) {
            Status st = tick(at(i).kids[static_cast<std::size_t>(at(i).idx)]);
            N& n = at(i);
            if (st == Status::Running) return st;
            if (st == Status::Success) {
                n.idx = (n.idx + 1) % k;
                n.failed = 0;
                return st;
            }
            if (n.failed == k - 1) {
                n.idx = n.failed = 0;
                return st;
            }
            ++n.failed;
            n.idx = (n.idx + 1) % k;
        }
    }

    Status pipeline(int i)
    {
        const std::vector<int> kids = at(i).kids;
        auto k = static_cast<std::int64_t>(kids.size());
        for (std::int64_t c = 1;; ++c) {
            Status st = tick(kids[static_cast<std::size_t>(c - 1)]);
            if (st == Status::Running) {
                if (at(i).last <= c) {
                    at(i).last = c;
                    return st;
                }
                continue;  // behind the frontier: the next child runs too
            }
            if (st == Status::Success && c < k) continue;
            at(i).last = 1;
            halt_running(kids);
            return st;
        }
    }

    std::vector<std::pair<std::string, std::int64_t>> locals(const N& n) const
    {
        switch (n.kind) {
        case NodeKind::Action: return {{"active", n.active}};
        case NodeKind::Sequence:
        case NodeKind::SequenceWithMemory: return {{"next_seq", n.idx}};
        case NodeKind::Fallback: return {{"next_fb", n.idx}};
        case NodeKind::Parallel:
        case NodeKind::ParallelAll: return {{"episode", n.episode}, {"decided", n.decided}};
        case NodeKind::Repeat:
            if (n.bound > 1) return {{"repeat", n.cnt}};
            return {};
        case NodeKind::RetryUntilSuccessful:
            if (n.bound > 1) return {{"attempt", n.cnt}};
            return {};
        case NodeKind::RateController:
            if (n.period > 1) return {{"cooldown", n.cool}};
            return {};
        case NodeKind::Recovery: return {{"retry", n.retry}, {"phase", n.phase}};
        case NodeKind::RoundRobin: return {{"idx", n.idx}, {"failed", n.failed}};
        case NodeKind::PipelineSequence: return {{"last", n.last}};
        default: return {};
        }
    }
};

Interpreter::Interpreter(const syntax::ValidatedSpec& spec, std::string_view tree, Options options)
    : impl_(std::make_unique<Impl>(spec, tree, options))
{
}

Interpreter::~Interpreter() = default;
Interpreter::Interpreter(Interpreter&&) noexcept = default;

Status Interpreter::tick(Outcomes& outcomes, std::vector<TraceEvent>& events)
{
    Impl& m = *impl_;
    if (m.terminal) throw std::logic_error("tick after the root terminated");
    m.out = &outcomes;
    m.ev = &events;
    ++m.tick_no;
    m.boundary();
    Status st = m.tick(0);
    if (st != Status::Running) {
        m.terminal = st;
        m.emit(K::RootTerminal, 0, st);
    }
    return st;
}

const InterpState& Interpreter::state() const
{
    InterpState& s = impl_->snapshot;
    s.nodes.clear();
    for (const auto& n : impl_->nodes) s.nodes.push_back({n.r, impl_->locals(n)});
    s.svs = impl_->val;
    s.tick = impl_->tick_no;
    s.terminal = impl_->terminal;
    return s;
}

void Interpreter::reset()
{
    impl_->reset();
}

int Interpreter::node_count() const
{
    return static_cast<int>(impl_->nodes.size());
}

const std::string& Interpreter::node_name(int node) const
{
    return impl_->nodes[static_cast<std::size_t>(node)].name;
}

const std::string& Interpreter::node_id(int node) const
{
    return impl_->nodes[static_cast<std::size_t>(node)].id;
}

const std::vector<syntax::SvDecl>& Interpreter::svs() const
{
    return impl_->svs;
}

std::vector<ScriptCursor::NodeRef> Interpreter::node_refs() const
{
    std::vector<ScriptCursor::NodeRef> out;
    for (const auto& n : impl_->nodes) out.push_back({n.name, n.id, n.sv});
    return out;
}

const std::string& Interpreter::model_name() const
{
    return impl_->model;
}

RunLog interpret(Interpreter& in, Outcomes& outcomes, int max_ticks)
{
    RunLog log;
    try {
        while (log.ticks < max_ticks) {
            ++log.ticks;
            Status st = in.tick(outcomes, log.events);
            if (st != Status::Running) {
                log.terminal = st;
                break;
            }
        }
    } catch (const ProviderError& e) {
        log.error = e.what();
    }
    return log;
}

// ---- script-driven outcomes ------------------------------------------------------

ScriptOutcomes::ScriptOutcomes(const Interpreter& in, OutcomeScript script, std::optional<std::uint64_t> seed)
    : cursor_(in.node_refs(), in.svs(), std::move(script), seed), flight_(static_cast<std::size_t>(in.node_count()))
{
}

Status ScriptOutcomes::action(int node, int tick)
{
    auto& f = flight_[static_cast<std::size_t>(node)];
    if (!f) {
        ActionOutcome o = cursor_.start_action(node);
        f = InFlight{tick + std::max(o.latency, 1), o.status};
        return Status::Running;
    }
    if (tick < f->due) return Status::Running;
    Status st = f->status;
    f.reset();
    return st;
}

void ScriptOutcomes::halt_action(int node)
{
    flight_[static_cast<std::size_t>(node)].reset();
}

Status ScriptOutcomes::condition(int node, int)
{
    return cursor_.check_condition(node);
}

std::int64_t ScriptOutcomes::set_sv(int node, int, std::int64_t current, const std::vector<std::int64_t>&)
{
    return cursor_.set_sv(node, current);
}

std::optional<std::int64_t> ScriptOutcomes::env(int sv, std::int64_t current, const std::vector<std::int64_t>&,
                                                int tick)
{
    return cursor_.read_env(sv, current, tick);
}

RunLog interpret_script(const syntax::ValidatedSpec& spec, const OutcomeScript& script,
                        std::optional<std::uint64_t> seed, int max_ticks, std::string_view tree)
{
    Interpreter in(spec, tree);
    ScriptOutcomes out(in, script, seed);
    return interpret(in, out, max_ticks);
}

}  // namespace btmc::interp
