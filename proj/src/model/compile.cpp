#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "btmc/model.hpp"

namespace btmc {

using syntax::Expr;
using syntax::Node;
using syntax::NodeKind;
using syntax::SvDecl;
using Op = ExprNode::Op;

namespace {

constexpr std::int64_t kS = static_cast<std::int64_t>(Status::Success);
constexpr std::int64_t kF = static_cast<std::int64_t>(Status::Failure);
constexpr std::int64_t kR = static_cast<std::int64_t>(Status::Running);
constexpr std::int64_t kHaltMe = static_cast<std::int64_t>(Status::HaltMe);
constexpr std::int64_t kNoRet = static_cast<std::int64_t>(Status::NoRet);

// Fixed prefix of every node automaton.
const char* const kNodeLocations[] = {"start_", "tick_node", "success", "failure", "running", "halted", "done", "halt"};

int bits_for(std::int64_t span)
{
    int b = 0;
    while ((std::int64_t{1} << b) <= span) ++b;
    return span == 0 ? 0 : b;
}

class Builder {
public:
    Model m;

    ExprId push(ExprNode n)
    {
        auto key = std::make_tuple(static_cast<int>(n.op), n.k, n.a, n.b, n.c);
        auto it = interned_.find(key);
        if (it != interned_.end()) return it->second;
        m.exprs.push_back(n);
        ExprId id = static_cast<ExprId>(m.exprs.size() - 1);
        interned_.emplace(key, id);
        return id;
    }

    ExprId k(std::int64_t v) { return push({Op::Const, v}); }
    ExprId s(int slot) { return push({Op::Slot, slot}); }
    ExprId bin(Op op, ExprId a, ExprId b) { return push({op, 0, a, b}); }
    ExprId eqx(ExprId a, ExprId b) { return bin(Op::Eq, a, b); }
    ExprId eq(int slot, std::int64_t v) { return eqx(s(slot), k(v)); }
    ExprId ne(int slot, std::int64_t v) { return bin(Op::Ne, s(slot), k(v)); }
    ExprId add(ExprId a, ExprId b) { return bin(Op::Add, a, b); }
    ExprId ite(ExprId c, ExprId a, ExprId b) { return push({Op::Ite, 0, c, a, b}); }
    ExprId not_(ExprId a) { return a == kTrue ? k(0) : push({Op::Not, 0, a}); }

    ExprId and_(ExprId a, ExprId b)
    {
        if (a == kTrue) return b;
        if (b == kTrue) return a;
        return bin(Op::And, a, b);
    }

    ExprId or_(ExprId a, ExprId b) { return bin(Op::Or, a, b); }

    int slot(std::string name, std::int64_t min, std::int64_t max, std::int64_t init)
    {
        Slot sl;
        sl.name = std::move(name);
        sl.min = static_cast<std::int32_t>(min);
        sl.max = static_cast<std::int32_t>(max);
        sl.init = static_cast<std::int32_t>(init);
        m.slots.push_back(sl);
        return static_cast<int>(m.slots.size() - 1);
    }

    int process(std::string name, ProcessKind kind)
    {
        Process p;
        p.name = std::move(name);
        p.kind = kind;
        m.processes.push_back(std::move(p));
        return static_cast<int>(m.processes.size() - 1);
    }

    int loc(int proc, std::string_view name)
    {
        Process& p = m.processes[static_cast<std::size_t>(proc)];
        int l = p.location(name);
        if (l >= 0) return l;
        p.locations.emplace_back(name);
        return static_cast<int>(p.locations.size() - 1);
    }

    Transition& tr(int proc, std::string_view from, std::string_view to, ExprId guard,
                   std::vector<Assignment> effects = {}, std::string label = {})
    {
        Transition t;
        t.process = proc;
        t.from = loc(proc, from);
        t.to = loc(proc, to);
        t.guard = guard;
        t.effects = std::move(effects);
        t.label = label.empty() ? std::string(from) + "->" + std::string(to) : std::move(label);
        t.node = m.processes[static_cast<std::size_t>(proc)].node;
        m.transitions.push_back(std::move(t));
        m.processes[static_cast<std::size_t>(proc)].transitions.push_back(static_cast<int>(m.transitions.size() - 1));
        return m.transitions.back();
    }

    int local(int proc, const std::string& name, std::int64_t min, std::int64_t max, std::int64_t init)
    {
        Process& p = m.processes[static_cast<std::size_t>(proc)];
        int sl = slot(p.name + "." + name, min, max, init);
        m.processes[static_cast<std::size_t>(proc)].locals.push_back({name, sl});
        return sl;
    }

private:
    std::map<std::tuple<int, std::int64_t, ExprId, ExprId, ExprId>, ExprId> interned_;
};

enum class Ty { Int, Bool, Enum, Status };

struct Typed {
    ExprId e;
    Ty ty;
    int sv = -1;  ///< enumerated SV for Enum, -1 for a free literal
};

class Compiler {
public:
    Compiler(const syntax::ValidatedSpec& spec, const CompileOptions& opt) : spec_(spec), opt_(opt) {}

    Model run(const Node& tree)
    {
        Model& m = b_.m;
        m.name = syntax::tree_name(tree);
        m.semantics = opt_.semantics;
        m.env_free_change = opt_.env_free_change;

        collect(tree, -1);
        for (std::size_t i = 0; i < m.nodes.size(); ++i) make_node_process(static_cast<int>(i));
        for (std::size_t i = 0; i < spec_.spec.svs.size(); ++i) make_sv(static_cast<int>(i));
        for (std::size_t i = 0; i < m.nodes.size(); ++i) translate(static_cast<int>(i));
        for (std::size_t i = 0; i < spec_.spec.svs.size(); ++i) build_sv_process(static_cast<int>(i));
        build_root_ticker();
        finish();
        return std::move(b_.m);
    }

private:
    Builder b_;
    const syntax::ValidatedSpec& spec_;
    CompileOptions opt_;
    std::vector<const Node*> ast_;

    Model& m() { return b_.m; }
    NodeInfo& node(int i) { return b_.m.nodes[static_cast<std::size_t>(i)]; }
    int C(int n) { return node(n).caller_slot; }
    int R(int n) { return node(n).rstatus_slot; }
    int P(int n) { return node(n).process; }

    int collect(const Node& n, int parent)
    {
        NodeInfo info;
        info.name = n.canonical_name;
        info.kind = n.kind;
        info.index = n.index;
        info.parent = parent;
        info.id = n.text_attr("ID").value_or(n.canonical_name);
        if (const auto* a = n.attr("args"); a && a->value) info.args = a->value;
        if (n.kind == NodeKind::SetSV) info.sv = spec_.sv_index(*n.text_attr("sv"));
        int id = static_cast<int>(m().nodes.size());
        m().nodes.push_back(std::move(info));
        ast_.push_back(&n);
        for (const Node& c : n.children) {
            int cid = collect(c, id);
            node(id).children.push_back(cid);
        }
        return id;
    }

    void make_node_process(int n)
    {
        int p = b_.process(node(n).name, ProcessKind::Node);
        m().processes[static_cast<std::size_t>(p)].node = n;
        node(n).process = p;
        for (const char* l : kNodeLocations) b_.loc(p, l);
        m().processes[static_cast<std::size_t>(p)].loc_slot = b_.slot(node(n).name + ".loc", 0, 0, 0);
        node(n).caller_slot = b_.slot(node(n).name + ".caller", 0, 1, 0);
        node(n).rstatus_slot = b_.slot(node(n).name + ".rstatus", 0, kHaltMe, kNoRet);
    }

    void make_sv(int i)
    {
        const SvDecl& d = spec_.spec.svs[static_cast<std::size_t>(i)];
        SvInfo info;
        info.name = d.name;
        info.decl = d;
        info.driver = spec_.drivers[static_cast<std::size_t>(i)];
        std::int64_t lo = d.kind == SvDecl::Kind::Enumerated ? 0 : d.min;
        std::int64_t hi = d.kind == SvDecl::Kind::Enumerated ? static_cast<std::int64_t>(d.states.size()) - 1 : d.max;
        info.slot = b_.slot("sv." + d.name, lo, hi, d.initial_value());
        int p = b_.process("sv_" + d.name, ProcessKind::StateVar);
        m().processes[static_cast<std::size_t>(p)].sv = i;
        info.process = p;
        m().svs.push_back(std::move(info));
    }

    // Writes HaltMe into each child that last returned Running and hands it
    // the caller token so it can run its halt path.
    void halt_children(std::vector<Assignment>& eff, const std::vector<int>& kids)
    {
        for (int c : kids) {
            ExprId running = b_.eq(R(c), kR);
            eff.push_back({C(c), b_.ite(running, b_.k(1), b_.k(0))});
            eff.push_back({R(c), b_.ite(running, b_.k(kHaltMe), b_.s(R(c)))});
        }
    }

    ExprId all_idle(const std::vector<int>& kids)
    {
        ExprId g = kTrue;
        for (int c : kids) g = b_.and_(g, b_.eq(C(c), 0));
        return g;
    }

    Assignment call(int child) { return {C(child), b_.k(1)}; }

    // Child returned with status st (its caller was reset to None).
    ExprId returned(int child, std::int64_t st) { return b_.and_(b_.eq(C(child), 0), b_.eq(R(child), st)); }

    void preamble_postamble(int n)
    {
        int p = P(n);
        ExprId active = b_.ne(C(n), 0);
        auto& t1 = b_.tr(p, "start_", "tick_node", b_.and_(active, b_.ne(R(n), kHaltMe)),
                         {{R(n), b_.k(kNoRet)}}, "tick");
        t1.event = EventKind::Ticked;
        auto& t2 = b_.tr(p, "start_", "halt", b_.and_(active, b_.eq(R(n), kHaltMe)), {}, "halt_requested");
        t2.event = EventKind::Halting;
        const std::pair<const char*, std::int64_t> outs[] = {{"success", kS}, {"failure", kF}, {"running", kR}};
        for (auto [l, st] : outs) {
            auto& t = b_.tr(p, l, "done", kTrue, {{R(n), b_.k(st)}}, std::string("return_") + l);
            t.event = EventKind::Returned;
            t.status = static_cast<Status>(st);
        }
        auto& th = b_.tr(p, "halted", "done", kTrue, {{R(n), b_.k(kF)}}, "return_halted");
        th.event = EventKind::Halted;
        th.status = Status::Failure;
        b_.tr(p, "done", "start_", kTrue, {{C(n), b_.k(0)}}, "release");
    }

    // Control-node halt path: halt running children, wait for them, report halted.
    void control_halt(int n, std::vector<Assignment> resets)
    {
        int p = P(n);
        std::vector<Assignment> eff = std::move(resets);
        halt_children(eff, node(n).children);
        b_.tr(p, "halt", "halt_wait", kTrue, std::move(eff), "halt_children");
        b_.tr(p, "halt_wait", "halted", all_idle(node(n).children), {}, "children_halted");
    }

    void translate(int n)
    {
        preamble_postamble(n);
        const Node& ast = *ast_[static_cast<std::size_t>(n)];
        switch (node(n).kind) {
        case NodeKind::Action: translate_action(n); break;
        case NodeKind::Condition: translate_condition(n); break;
        case NodeKind::SetSV: translate_setsv(n); break;
        case NodeKind::Eval: translate_eval(n, ast); break;
        case NodeKind::Sequence:
        case NodeKind::SequenceWithMemory:
        case NodeKind::Fallback:
            translate_seq_like(n);
            break;
        case NodeKind::ReactiveSequence:
        case NodeKind::ReactiveFallback:
            translate_reactive(n, int_attr(ast, "halt", 0) != 0);
            break;
        case NodeKind::Parallel:
        case NodeKind::ParallelAll:
            translate_parallel(n, ast);
            break;
        case NodeKind::BehaviorTree:
        case NodeKind::Inverter:
        case NodeKind::ForceFailure:
        case NodeKind::ForceSuccess:
        case NodeKind::KeepRunningUntilFailure:
            translate_simple_decorator(n);
            break;
        case NodeKind::Repeat:
            translate_counting_decorator(n, kS, int_attr(ast, "repeat", 1), "repeat");
            break;
        case NodeKind::RetryUntilSuccessful: {
            std::int64_t k = ast.attr("num_attempts") ? int_attr(ast, "num_attempts", 1)
                                                      : int_attr(ast, "num_retries", 1);
            translate_counting_decorator(n, kF, k, "attempt");
            break;
        }
        case NodeKind::RateController: translate_rate(n, ast); break;
        case NodeKind::Recovery: translate_recovery(n, int_attr(ast, "num_retries", 1)); break;
        case NodeKind::RoundRobin: translate_round_robin(n); break;
        case NodeKind::PipelineSequence: translate_pipeline(n); break;
        default:
            throw CompileError(CompileError::Kind::UnsupportedNode,
                               "no translation for " + std::string(syntax::to_string(node(n).kind)));
        }
        bool timed = opt_.semantics == TickSemantics::AllNodes ||
                     (opt_.semantics == TickSemantics::Leaves && syntax::is_leaf(node(n).kind));
        if (timed) {
            int tick = m().processes[static_cast<std::size_t>(P(n))].location("tick_node");
            for (int t : m().processes[static_cast<std::size_t>(P(n))].transitions)
                if (m().transitions[static_cast<std::size_t>(t)].from == tick)
                    m().transitions[static_cast<std::size_t>(t)].timing = Timing::OneTick;
        }
    }

    static std::int64_t int_attr(const Node& n, std::string_view key, std::int64_t dflt)
    {
        auto t = n.text_attr(key);
        if (!t) return dflt;
        try {
            return std::stoll(*t);
        } catch (...) {
            return dflt;
        }
    }

    // ---- leaves ----------------------------------------------------------

    void translate_action(int n)
    {
        int p = P(n);
        int active = b_.local(p, "active", 0, 1, 0);
        const std::pair<const char*, std::int64_t> outs[] = {{"success", kS}, {"failure", kF}, {"running", kR}};
        for (auto [l, st] : outs) {
            auto& t = b_.tr(p, "tick_node", l, kTrue, {{active, b_.k(st == kR ? 1 : 0)}}, std::string("outcome_") + l);
            t.external = External::ActionTick;
            t.expected = st;
        }
        auto& h = b_.tr(p, "halt", "halted", kTrue, {{active, b_.k(0)}}, "halt_action");
        h.external = External::HaltAction;
    }

    void translate_condition(int n)
    {
        int p = P(n);
        for (auto [l, st] : {std::pair<const char*, std::int64_t>{"success", kS}, {"failure", kF}}) {
            auto& t = b_.tr(p, "tick_node", l, kTrue, {}, std::string("outcome_") + l);
            t.external = External::CheckCondition;
            t.expected = st;
        }
        b_.tr(p, "halt", "halted", kTrue);
    }

    // Guard: SV `sv` may move from its current value to value expression v.
    ExprId legal_target(int sv, ExprId v)
    {
        const SvInfo& info = m().svs[static_cast<std::size_t>(sv)];
        const SvDecl& d = info.decl;
        if (d.kind == SvDecl::Kind::BoundedNat)
            return b_.and_(b_.bin(Op::Ge, v, b_.k(d.min)), b_.bin(Op::Le, v, b_.k(d.max)));
        int k = static_cast<int>(d.states.size());
        ExprId in_range = b_.and_(b_.bin(Op::Ge, v, b_.k(0)), b_.bin(Op::Lt, v, b_.k(k)));
        if (d.all_transitions) return in_range;
        ExprId g = b_.eqx(v, b_.s(info.slot));
        for (int a = 0; a < k; ++a)
            for (int c = 0; c < k; ++c)
                if (a != c && d.allows(a, c)) g = b_.or_(g, b_.and_(b_.eq(info.slot, a), b_.eqx(v, b_.k(c))));
        return g;
    }

    void translate_setsv(int n)
    {
        int p = P(n);
        int sv = node(n).sv;
        const SvInfo& info = m().svs[static_cast<std::size_t>(sv)];
        const Slot& sl = m().slots[static_cast<std::size_t>(info.slot)];
        for (std::int64_t v = sl.min; v <= sl.max; ++v) {
            ExprId g = legal_target(sv, b_.k(v));
            auto& t = b_.tr(p, "tick_node", "success", g, {{info.slot, b_.k(v)}}, "set_" + info.value_name(v));
            t.external = External::SetSv;
            t.expected = v;
        }
        b_.tr(p, "halt", "halted", kTrue);
    }

    [[noreturn]] void type_error(int n, const std::string& msg)
    {
        throw CompileError(CompileError::Kind::EvalTypeError, node(n).name + ": " + msg);
    }

    Typed typed(int n, const Expr& e)
    {
        switch (e.op) {
        case Expr::Op::Int: return {b_.k(e.value), Ty::Int};
        case Expr::Op::EnumLit: return {b_.k(e.value), Ty::Enum, -1};
        case Expr::Op::StatusLit: {
            auto st = parse_status(e.name);
            if (!st) type_error(n, "bad status literal " + e.name);
            return {b_.k(static_cast<std::int64_t>(*st)), Ty::Status};
        }
        case Expr::Op::StatusRef: {
            int target = m().node_index(e.name);
            if (target < 0) type_error(n, "status access to a node outside this tree: " + e.name);
            return {b_.s(R(target)), Ty::Status};
        }
        case Expr::Op::SvRef:
        case Expr::Op::ArgRef: {
            int sv = m().sv_index(e.name);
            if (sv < 0) type_error(n, "unknown state variable " + e.name);
            const SvInfo& info = m().svs[static_cast<std::size_t>(sv)];
            if (info.decl.kind == SvDecl::Kind::Enumerated) return {b_.s(info.slot), Ty::Enum, sv};
            return {b_.s(info.slot), Ty::Int};
        }
        case Expr::Op::Ident: type_error(n, "unresolved identifier '" + e.name + "'");
        case Expr::Op::Assign: type_error(n, "assignment inside an expression");
        case Expr::Op::Not: {
            Typed a = typed(n, e.args[0]);
            if (a.ty != Ty::Bool) type_error(n, "~ expects a boolean operand");
            return {b_.not_(a.e), Ty::Bool};
        }
        case Expr::Op::Add:
        case Expr::Op::Mul: {
            Typed a = typed(n, e.args[0]);
            Typed c = typed(n, e.args[1]);
            if (a.ty != Ty::Int || c.ty != Ty::Int) type_error(n, "arithmetic needs integer operands");
            return {b_.bin(e.op == Expr::Op::Add ? Op::Add : Op::Mul, a.e, c.e), Ty::Int};
        }
        case Expr::Op::Eq: {
            Typed a = typed(n, e.args[0]);
            Typed c = typed(n, e.args[1]);
            bool ok = a.ty == c.ty && (a.ty != Ty::Enum || a.sv < 0 || c.sv < 0 || a.sv == c.sv);
            if (!ok) type_error(n, "= compares values of different types");
            return {b_.eqx(a.e, c.e), Ty::Bool};
        }
        }
        type_error(n, "bad expression");
    }

    void translate_eval(int n, const Node& ast)
    {
        int p = P(n);
        const Expr& e = *ast.expr;
        if (e.op == Expr::Op::Assign) {
            int sv = m().sv_index(e.name);
            if (sv < 0) type_error(n, "assignment to unknown state variable " + e.name);
            const SvInfo& info = m().svs[static_cast<std::size_t>(sv)];
            Typed v = typed(n, e.args[0]);
            bool enumerated = info.decl.kind == SvDecl::Kind::Enumerated;
            if (enumerated ? (v.ty != Ty::Enum || (v.sv >= 0 && v.sv != sv)) : v.ty != Ty::Int)
                type_error(n, "assigned value does not match the type of " + e.name);
            ExprId ok = legal_target(sv, v.e);
            b_.tr(p, "tick_node", "success", ok, {{info.slot, v.e}}, "assign");
            b_.tr(p, "tick_node", "failure", b_.not_(ok), {}, "assign_rejected");
        } else {
            Typed v = typed(n, e);
            if (v.ty != Ty::Bool) type_error(n, "Eval expression must be a comparison or an assignment");
            b_.tr(p, "tick_node", "success", v.e, {}, "true");
            b_.tr(p, "tick_node", "failure", b_.not_(v.e), {}, "false");
        }
        b_.tr(p, "halt", "halted", kTrue);
    }

    // ---- control nodes ---------------------------------------------------

    static std::string wait_loc(int i) { return "wait_" + std::to_string(i); }

    // Sequence, SequenceWithMemory and Fallback: resume at the remembered child.
    void translate_seq_like(int n)
    {
        int p = P(n);
        bool fallback = node(n).kind == NodeKind::Fallback;
        bool memory = node(n).kind == NodeKind::SequenceWithMemory;
        std::int64_t adv = fallback ? kF : kS;  // child status that moves on to the next child
        std::int64_t fin = fallback ? kS : kF;
        const char* all_done = fallback ? "failure" : "success";
        const char* stop = fallback ? "success" : "failure";
        const auto& kids = node(n).children;
        int k = static_cast<int>(kids.size());
        int idx = b_.local(p, fallback ? "next_fb" : "next_seq", 1, k, 1);

        for (int i = 1; i <= k; ++i) {
            int c = kids[static_cast<std::size_t>(i - 1)];
            b_.tr(p, "tick_node", wait_loc(i), b_.eq(idx, i), {call(c)}, "tick_child_" + std::to_string(i));
            if (i < k) {
                int next = kids[static_cast<std::size_t>(i)];
                b_.tr(p, wait_loc(i), wait_loc(i + 1), returned(c, adv), {{idx, b_.k(i + 1)}, call(next)},
                      "next_child");
            } else {
                b_.tr(p, wait_loc(i), all_done, returned(c, adv), {{idx, b_.k(1)}});
            }
            b_.tr(p, wait_loc(i), stop, returned(c, fin), {{idx, b_.k(memory ? i : 1)}});
            b_.tr(p, wait_loc(i), "running", returned(c, kR), {{idx, b_.k(i)}});
        }
        std::vector<Assignment> resets;
        if (!memory) resets.push_back({idx, b_.k(1)});
        control_halt(n, resets);
    }

    // ReactiveSequence / ReactiveFallback: always restart from the first child.
    void translate_reactive(int n, bool halt)
    {
        int p = P(n);
        bool fallback = node(n).kind == NodeKind::ReactiveFallback;
        std::int64_t adv = fallback ? kF : kS;
        std::int64_t fin = fallback ? kS : kF;
        const char* all_done = fallback ? "failure" : "success";
        const char* stop = fallback ? "success" : "failure";
        const auto& kids = node(n).children;
        int k = static_cast<int>(kids.size());

        b_.tr(p, "tick_node", wait_loc(1), kTrue, {call(kids[0])}, "tick_child_1");
        for (int i = 1; i <= k; ++i) {
            int c = kids[static_cast<std::size_t>(i - 1)];
            if (i < k)
                b_.tr(p, wait_loc(i), wait_loc(i + 1), returned(c, adv), {call(kids[static_cast<std::size_t>(i)])},
                      "next_child");
            else
                b_.tr(p, wait_loc(i), all_done, returned(c, adv));
            for (auto [st, target] : {std::pair<std::int64_t, const char*>{fin, stop}, {kR, "running"}}) {
                if (!halt || i == k) {
                    b_.tr(p, wait_loc(i), target, returned(c, st));
                    continue;
                }
                std::vector<int> later(kids.begin() + i, kids.end());
                std::vector<Assignment> eff;
                halt_children(eff, later);
                std::string hw = std::string("halt_later_") + target + "_" + std::to_string(i);
                b_.tr(p, wait_loc(i), hw, returned(c, st), std::move(eff), "halt_later_children");
                b_.tr(p, hw, target, all_idle(later), {}, "later_children_halted");
            }
        }
        control_halt(n, {});
    }

    void translate_parallel(int n, const Node& ast)
    {
        int p = P(n);
        const auto& kids = node(n).children;
        std::int64_t k = static_cast<std::int64_t>(kids.size());
        std::int64_t threshold = node(n).kind == NodeKind::ParallelAll ? k : int_attr(ast, "success", k);
        bool halt = int_attr(ast, "halt", 0) != 0;
        bool wait = int_attr(ast, "wait", 0) != 0;
        int episode = b_.local(p, "episode", 0, 1, 0);
        int decided = b_.local(p, "decided", 0, 2, 0);

        std::vector<Assignment> tick;
        ExprId fresh = b_.eq(episode, 0);
        for (int c : kids)
            tick.push_back({C(c), b_.ite(b_.or_(fresh, b_.eq(R(c), kR)), b_.k(1), b_.k(0))});
        tick.push_back({episode, b_.k(1)});
        b_.tr(p, "tick_node", "wait", kTrue, std::move(tick), "tick_children");

        ExprId succ = b_.k(0), fail = b_.k(0), run = b_.k(0);
        for (int c : kids) {
            succ = b_.add(succ, b_.ite(b_.eq(R(c), kS), b_.k(1), b_.k(0)));
            fail = b_.add(fail, b_.ite(b_.eq(R(c), kF), b_.k(1), b_.k(0)));
            run = b_.add(run, b_.ite(b_.eq(R(c), kR), b_.k(1), b_.k(0)));
        }
        ExprId idle = all_idle(kids);
        ExprId undecided = b_.eq(decided, 0);
        ExprId s_now = b_.and_(undecided, b_.bin(Op::Ge, succ, b_.k(threshold)));
        ExprId f_now = b_.and_(undecided, b_.bin(Op::Gt, fail, b_.k(k - threshold)));
        ExprId neither = b_.and_(undecided, b_.and_(b_.not_(s_now), b_.not_(f_now)));
        b_.tr(p, "wait", "running", b_.and_(idle, neither), {}, "decide_running");

        ExprId none_running = b_.eqx(run, b_.k(0));
        std::vector<Assignment> reset{{episode, b_.k(0)}, {decided, b_.k(0)}};
        for (auto [code, target] : {std::pair<std::int64_t, const char*>{1, "success"}, {2, "failure"}}) {
            ExprId now = code == 1 ? s_now : f_now;
            ExprId d = b_.and_(idle, b_.or_(b_.eq(decided, code), now));
            std::string label = std::string("decide_") + target;
            b_.tr(p, "wait", target, b_.and_(d, none_running), reset, label);
            ExprId pending = b_.and_(d, b_.not_(none_running));
            if (halt) {
                std::vector<Assignment> eff = reset;
                halt_children(eff, kids);
                std::string hw = std::string("halt_running_") + target;
                b_.tr(p, "wait", hw, pending, std::move(eff), label);
                b_.tr(p, hw, target, idle, {}, "running_children_halted");
            } else if (wait) {
                b_.tr(p, "wait", "running", pending, {{decided, b_.k(code)}}, label + "_deferred");
            } else {
                b_.tr(p, "wait", target, pending, reset, label);
            }
        }
        control_halt(n, {{episode, b_.k(0)}, {decided, b_.k(0)}});
    }

    // BehaviorTree, Inverter, ForceFailure, ForceSuccess, KeepRunningUntilFailure.
    void translate_simple_decorator(int n)
    {
        int p = P(n);
        int c = node(n).children[0];
        const char* on_s = "success";
        const char* on_f = "failure";
        const char* on_r = "running";
        switch (node(n).kind) {
        case NodeKind::Inverter: std::swap(on_s, on_f); break;
        case NodeKind::ForceFailure: on_s = "failure"; break;
        case NodeKind::ForceSuccess: on_f = "success"; break;
        case NodeKind::KeepRunningUntilFailure: on_s = "running"; break;
        default: break;
        }
        b_.tr(p, "tick_node", "wait", kTrue, {call(c)}, "tick_child");
        b_.tr(p, "wait", on_s, returned(c, kS), {}, "child_success");
        b_.tr(p, "wait", on_f, returned(c, kF), {}, "child_failure");
        b_.tr(p, "wait", on_r, returned(c, kR), {}, "child_running");
        control_halt(n, {});
    }

    // Repeat (again_on = Success) and RetryUntilSuccessful (again_on = Failure):
    // re-tick within the same tick until `bound` completions.
    void translate_counting_decorator(int n, std::int64_t again_on, std::int64_t bound, const char* counter)
    {
        int p = P(n);
        int c = node(n).children[0];
        std::int64_t other = again_on == kS ? kF : kS;
        const char* again_out = again_on == kS ? "success" : "failure";
        const char* other_out = again_on == kS ? "failure" : "success";
        b_.tr(p, "tick_node", "wait", kTrue, {call(c)}, "tick_child");
        std::vector<Assignment> reset;
        if (bound > 1) {
            int cnt = b_.local(p, counter, 0, bound - 1, 0);
            reset.push_back({cnt, b_.k(0)});
            b_.tr(p, "wait", "wait", b_.and_(returned(c, again_on), b_.bin(Op::Lt, b_.s(cnt), b_.k(bound - 1))),
                  {{cnt, b_.add(b_.s(cnt), b_.k(1))}, call(c)}, "tick_again");
            b_.tr(p, "wait", again_out, b_.and_(returned(c, again_on), b_.eq(cnt, bound - 1)), reset, "bound_reached");
        } else {
            b_.tr(p, "wait", again_out, returned(c, again_on), {}, "bound_reached");
        }
        b_.tr(p, "wait", other_out, returned(c, other), reset);
        b_.tr(p, "wait", "running", returned(c, kR));
        control_halt(n, reset);
    }

    void translate_rate(int n, const Node& ast)
    {
        double hz = 10.0;
        if (auto t = ast.text_attr("hz")) {
            hz = std::stod(*t);
        } else if (const auto* a = ast.attr("args"); a && a->value && a->value->is_list()) {
            const auto& items = a->value->items;
            for (std::size_t i = 0; i + 1 < items.size(); ++i)
                if (syntax::iequals(items[i].text, "hz")) hz = std::stod(items[i + 1].text);
        }
        auto period = static_cast<std::int64_t>(std::ceil(1.0 / hz - 1e-9));
        if (period <= 1) {
            translate_simple_decorator(n);
            return;
        }
        int p = P(n);
        int c = node(n).children[0];
        int cool = b_.local(p, "cooldown", 0, period - 1, 0);
        ExprId may_tick = b_.or_(b_.eq(cool, 0), b_.eq(R(c), kR));
        b_.tr(p, "tick_node", "wait", may_tick, {call(c)}, "tick_child");
        b_.tr(p, "tick_node", "running", b_.not_(may_tick), {{cool, b_.bin(Op::Sub, b_.s(cool), b_.k(1))}}, "throttled");
        b_.tr(p, "wait", "success", returned(c, kS), {{cool, b_.k(period - 1)}}, "child_success");
        b_.tr(p, "wait", "failure", returned(c, kF), {{cool, b_.k(period - 1)}}, "child_failure");
        b_.tr(p, "wait", "running", returned(c, kR), {}, "child_running");
        control_halt(n, {});
    }

    void translate_recovery(int n, std::int64_t retries)
    {
        int p = P(n);
        int main = node(n).children[0];
        int recov = node(n).children[1];
        int retry = b_.local(p, "retry", 0, retries, 0);
        int phase = b_.local(p, "phase", 0, 1, 0);
        std::vector<Assignment> reset{{retry, b_.k(0)}, {phase, b_.k(0)}};
        b_.tr(p, "tick_node", "wait_main", b_.eq(phase, 0), {call(main)}, "tick_main");
        b_.tr(p, "tick_node", "wait_recovery", b_.eq(phase, 1), {call(recov)}, "resume_recovery");
        b_.tr(p, "wait_main", "success", returned(main, kS), reset);
        b_.tr(p, "wait_main", "wait_recovery", b_.and_(returned(main, kF), b_.bin(Op::Lt, b_.s(retry), b_.k(retries))),
              {{phase, b_.k(1)}, call(recov)}, "tick_recovery");
        b_.tr(p, "wait_main", "failure", b_.and_(returned(main, kF), b_.eq(retry, retries)), reset, "retries_exhausted");
        b_.tr(p, "wait_main", "running", returned(main, kR));
        b_.tr(p, "wait_recovery", "wait_main", returned(recov, kS),
              {{retry, b_.add(b_.s(retry), b_.k(1))}, {phase, b_.k(0)}, call(main)}, "retry_main");
        b_.tr(p, "wait_recovery", "failure", returned(recov, kF), reset, "recovery_failed");
        b_.tr(p, "wait_recovery", "running", returned(recov, kR));
        control_halt(n, reset);
    }

    void translate_round_robin(int n)
    {
        int p = P(n);
        const auto& kids = node(n).children;
        int k = static_cast<int>(kids.size());
        int idx = b_.local(p, "idx", 0, k - 1, 0);
        int failed = b_.local(p, "failed", 0, k - 1, 0);
        for (int i = 0; i < k; ++i) {
            int c = kids[static_cast<std::size_t>(i)];
            int nxt = (i + 1) % k;
            b_.tr(p, "tick_node", wait_loc(i + 1), b_.eq(idx, i), {call(c)}, "tick_child_" + std::to_string(i + 1));
            b_.tr(p, wait_loc(i + 1), "success", returned(c, kS), {{idx, b_.k(nxt)}, {failed, b_.k(0)}});
            b_.tr(p, wait_loc(i + 1), wait_loc(nxt + 1),
                  b_.and_(returned(c, kF), b_.bin(Op::Lt, b_.s(failed), b_.k(k - 1))),
                  {{failed, b_.add(b_.s(failed), b_.k(1))}, {idx, b_.k(nxt)}, call(kids[static_cast<std::size_t>(nxt)])},
                  "next_child");
            b_.tr(p, wait_loc(i + 1), "failure", b_.and_(returned(c, kF), b_.eq(failed, k - 1)),
                  {{idx, b_.k(0)}, {failed, b_.k(0)}}, "all_failed");
            b_.tr(p, wait_loc(i + 1), "running", returned(c, kR));
        }
        control_halt(n, {{idx, b_.k(0)}, {failed, b_.k(0)}});
    }

    void translate_pipeline(int n)
    {
        int p = P(n);
        const auto& kids = node(n).children;
        int k = static_cast<int>(kids.size());
        int last = b_.local(p, "last", 1, k, 1);
        b_.tr(p, "tick_node", wait_loc(1), kTrue, {call(kids[0])}, "tick_child_1");
        for (int i = 1; i <= k; ++i) {
            int c = kids[static_cast<std::size_t>(i - 1)];
            for (auto [st, target] : {std::pair<std::int64_t, const char*>{kF, "failure"}, {kS, "success"}}) {
                if (st == kS && i < k) {
                    b_.tr(p, wait_loc(i), wait_loc(i + 1), returned(c, kS), {call(kids[static_cast<std::size_t>(i)])},
                          "next_child");
                    continue;
                }
                std::vector<Assignment> eff{{last, b_.k(1)}};
                halt_children(eff, kids);
                std::string hw = std::string("halt_running_") + target;
                b_.tr(p, wait_loc(i), hw, returned(c, st), std::move(eff), "halt_running_children");
                b_.tr(p, hw, target, all_idle(kids), {}, "running_children_halted");
            }
            b_.tr(p, wait_loc(i), "running", b_.and_(returned(c, kR), b_.bin(Op::Le, b_.s(last), b_.k(i))),
                  {{last, b_.k(i)}}, "frontier_running");
            if (i < k)
                b_.tr(p, wait_loc(i), wait_loc(i + 1), b_.and_(returned(c, kR), b_.bin(Op::Gt, b_.s(last), b_.k(i))),
                      {call(kids[static_cast<std::size_t>(i)])}, "behind_frontier");
        }
        control_halt(n, {{last, b_.k(1)}});
    }

    // ---- state variables and ticker ----------------------------------------

    // Values reachable from `from` in one step (or any number of steps when
    // free change is enabled), excluding `from` itself.
    std::vector<int> env_targets(const SvDecl& d, int from)
    {
        int k = static_cast<int>(d.states.size());
        std::vector<bool> seen(static_cast<std::size_t>(k), false);
        std::vector<int> todo{from};
        seen[static_cast<std::size_t>(from)] = true;
        std::vector<int> out;
        while (!todo.empty()) {
            int a = todo.back();
            todo.pop_back();
            for (int c = 0; c < k; ++c) {
                if (seen[static_cast<std::size_t>(c)] || !d.allows(a, c)) continue;
                seen[static_cast<std::size_t>(c)] = true;
                out.push_back(c);
                if (opt_.env_free_change) todo.push_back(c);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    void build_sv_process(int i)
    {
        SvInfo& info = m().svs[static_cast<std::size_t>(i)];
        int p = info.process;
        Process& proc = m().processes[static_cast<std::size_t>(p)];
        const SvDecl& d = info.decl;
        bool env = info.driver == syntax::SvDriver::Environment;
        if (d.kind == SvDecl::Kind::Enumerated) {
            proc.loc_slot = info.slot;
            for (const std::string& s : d.states) b_.loc(p, s);
            if (!env) return;
            for (int v = 0; v < static_cast<int>(d.states.size()); ++v) {
                auto& st = b_.tr(p, d.states[static_cast<std::size_t>(v)], d.states[static_cast<std::size_t>(v)], kTrue,
                                 {}, "stutter");
                st.timing = Timing::OneTick;
                st.external = External::EnvRead;
                st.expected = -1;
                for (int w : env_targets(d, v)) {
                    auto& t = b_.tr(p, d.states[static_cast<std::size_t>(v)], d.states[static_cast<std::size_t>(w)],
                                    kTrue, {}, "change_to_" + d.states[static_cast<std::size_t>(w)]);
                    t.timing = Timing::OneTick;
                    t.external = External::EnvRead;
                    t.expected = w;
                }
            }
            return;
        }
        proc.loc_slot = b_.slot(proc.name + ".loc", 0, 0, 0);
        b_.loc(p, "value");
        if (!env) return;
        auto& st = b_.tr(p, "value", "value", kTrue, {}, "stutter");
        st.timing = Timing::OneTick;
        st.external = External::EnvRead;
        st.expected = -1;
        for (std::int64_t w = d.min; w <= d.max; ++w) {
            auto& t = b_.tr(p, "value", "value", b_.ne(info.slot, w), {{info.slot, b_.k(w)}},
                            "change_to_" + std::to_string(w));
            t.timing = Timing::OneTick;
            t.external = External::EnvRead;
            t.expected = w;
        }
    }

    void build_root_ticker()
    {
        int p = b_.process("ticker", ProcessKind::Ticker);
        m().ticker = p;
        m().processes[static_cast<std::size_t>(p)].loc_slot = b_.slot("ticker.loc", 0, 3, 0);
        m().ticker_idle = b_.loc(p, "idle");
        b_.loc(p, "wait");
        m().ticker_terminal_success = b_.loc(p, "terminal_success");
        m().ticker_terminal_failure = b_.loc(p, "terminal_failure");
        int root = 0;
        auto& t = b_.tr(p, "idle", "wait", kTrue, {call(root)}, "tick");
        t.timing = Timing::OneTick;
        b_.tr(p, "wait", "idle", returned(root, kR), {}, "root_running");
        for (auto [st, target] : {std::pair<std::int64_t, const char*>{kS, "terminal_success"}, {kF, "terminal_failure"}}) {
            auto& e = b_.tr(p, "wait", target, returned(root, st), {}, "root_terminal");
            e.event = EventKind::RootTerminal;
            e.status = static_cast<Status>(st);
            e.node = root;
        }
    }

    void finish()
    {
        Model& mm = m();
        for (Process& p : mm.processes) {
            Slot& sl = mm.slots[static_cast<std::size_t>(p.loc_slot)];
            if (p.kind != ProcessKind::StateVar || sl.name.rfind("sv.", 0) != 0)
                sl.max = static_cast<std::int32_t>(std::max<std::size_t>(p.locations.size(), 1) - 1);
            p.by_location.assign(p.locations.size(), {});
            for (int t : p.transitions)
                p.by_location[static_cast<std::size_t>(mm.transitions[static_cast<std::size_t>(t)].from)].push_back(t);
        }
        int off = 0;
        for (Slot& sl : mm.slots) {
            sl.bits = bits_for(static_cast<std::int64_t>(sl.max) - sl.min);
            if (sl.bits > 32) throw CompileError(CompileError::Kind::UnsupportedNode, "slot too wide: " + sl.name);
            // Keep each slot within one 64-bit word.
            if (off / 64 != (off + sl.bits - 1) / 64 && sl.bits > 0) off = (off / 64 + 1) * 64;
            sl.offset = off;
            off += sl.bits;
        }
        mm.words = std::max(1, (off + 63) / 64);
    }
};

}  // namespace

std::string_view to_string(TickSemantics t)
{
    switch (t) {
    case TickSemantics::RootOnly: return "root";
    case TickSemantics::Leaves: return "leaves";
    case TickSemantics::AllNodes: return "all";
    }
    return "?";
}

std::optional<TickSemantics> parse_tick_semantics(std::string_view text)
{
    if (text == "root") return TickSemantics::RootOnly;
    if (text == "leaves") return TickSemantics::Leaves;
    if (text == "all") return TickSemantics::AllNodes;
    return std::nullopt;
}

int Process::location(std::string_view name) const
{
    for (std::size_t i = 0; i < locations.size(); ++i)
        if (locations[i] == name) return static_cast<int>(i);
    return -1;
}

std::string SvInfo::value_name(std::int64_t v) const
{
    return decl.value_name(v);
}

std::optional<std::int64_t> SvInfo::parse_value(std::string_view text) const
{
    return decl.parse_value(text);
}

std::int64_t Model::eval(ExprId e, const std::int32_t* vals) const
{
    if (e == kTrue) return 1;
    const ExprNode& n = exprs[static_cast<std::size_t>(e)];
    switch (n.op) {
    case Op::Const: return n.k;
    case Op::Slot: return vals[n.k];
    case Op::Add: return eval(n.a, vals) + eval(n.b, vals);
    case Op::Sub: return eval(n.a, vals) - eval(n.b, vals);
    case Op::Mul: return eval(n.a, vals) * eval(n.b, vals);
    case Op::Eq: return eval(n.a, vals) == eval(n.b, vals);
    case Op::Ne: return eval(n.a, vals) != eval(n.b, vals);
    case Op::Lt: return eval(n.a, vals) < eval(n.b, vals);
    case Op::Le: return eval(n.a, vals) <= eval(n.b, vals);
    case Op::Gt: return eval(n.a, vals) > eval(n.b, vals);
    case Op::Ge: return eval(n.a, vals) >= eval(n.b, vals);
    case Op::And: return eval(n.a, vals) && eval(n.b, vals);
    case Op::Or: return eval(n.a, vals) || eval(n.b, vals);
    case Op::Not: return !eval(n.a, vals);
    case Op::Ite: return eval(n.a, vals) ? eval(n.b, vals) : eval(n.c, vals);
    }
    return 0;
}

int Model::node_index(std::string_view name) const
{
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (nodes[i].name == name) return static_cast<int>(i);
    return -1;
}

int Model::sv_index(std::string_view name) const
{
    for (std::size_t i = 0; i < svs.size(); ++i)
        if (svs[i].name == name) return static_cast<int>(i);
    return -1;
}

std::vector<std::int32_t> Model::initial_values() const
{
    std::vector<std::int32_t> v;
    v.reserve(slots.size());
    for (const Slot& s : slots) v.push_back(s.init);
    return v;
}

std::optional<Status> Model::terminal(const std::int32_t* vals) const
{
    int loc = vals[processes[static_cast<std::size_t>(ticker)].loc_slot];
    if (loc == ticker_terminal_success) return Status::Success;
    if (loc == ticker_terminal_failure) return Status::Failure;
    return std::nullopt;
}

Model compile(const syntax::ValidatedSpec& spec, const CompileOptions& options, std::string_view tree)
{
    const syntax::Node* root = tree.empty() ? &spec.spec.trees.front() : spec.find_tree(tree);
    if (!root) throw CompileError(CompileError::Kind::UnknownTree, "no tree named '" + std::string(tree) + "'");
    return Compiler(spec, options).run(*root);
}

}  // namespace btmc
