#include "btmc/syntax.hpp"

#include <array>
#include <cctype>
#include <charconv>

namespace btmc::syntax {

namespace {

struct KindName {
    NodeKind kind;
    std::string_view name;
};

constexpr std::array<KindName, 22> kKinds{{
    {NodeKind::BehaviorTree, "BehaviorTree"},
    {NodeKind::Sequence, "Sequence"},
    {NodeKind::ReactiveSequence, "ReactiveSequence"},
    {NodeKind::SequenceWithMemory, "SequenceWithMemory"},
    {NodeKind::Fallback, "Fallback"},
    {NodeKind::ReactiveFallback, "ReactiveFallback"},
    {NodeKind::Parallel, "Parallel"},
    {NodeKind::ParallelAll, "ParallelAll"},
    {NodeKind::Inverter, "Inverter"},
    {NodeKind::ForceFailure, "ForceFailure"},
    {NodeKind::ForceSuccess, "ForceSuccess"},
    {NodeKind::Repeat, "Repeat"},
    {NodeKind::RetryUntilSuccessful, "RetryUntilSuccessful"},
    {NodeKind::KeepRunningUntilFailure, "KeepRunningUntilFailure"},
    {NodeKind::Recovery, "Recovery"},
    {NodeKind::PipelineSequence, "PipelineSequence"},
    {NodeKind::RoundRobin, "RoundRobin"},
    {NodeKind::RateController, "RateController"},
    {NodeKind::Action, "Action"},
    {NodeKind::Condition, "Condition"},
    {NodeKind::SetSV, "SetSV"},
    {NodeKind::Eval, "Eval"},
}};

bool is_node_form(const Datum& d)
{
    return d.is_list() && !d.items.empty() && d.items[0].kind == Datum::Kind::Symbol &&
           parse_node_kind(d.items[0].text).has_value();
}

std::int64_t to_int(const Datum& d, const char* what)
{
    if (d.kind != Datum::Kind::Number) throw ParseError(d.pos, std::string(what) + " must be an integer");
    std::int64_t v = 0;
    const char* b = d.text.data();
    const char* e = b + d.text.size();
    if (*b == '+') ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) throw ParseError(d.pos, std::string(what) + " must be an integer");
    return v;
}

SvDecl parse_defsv(const Datum& form)
{
    SvDecl sv;
    sv.pos = form.pos;
    if (form.items.size() < 2 || form.items[1].kind != Datum::Kind::Symbol)
        throw ParseError(form.pos, "malformed defsv: expected a variable name");
    sv.name = form.items[1].text;
    bool has_states = false, has_min = false, has_max = false, has_init = false, has_trans = false;
    for (std::size_t i = 2; i < form.items.size(); i += 2) {
        const Datum& key = form.items[i];
        if (key.kind != Datum::Kind::Keyword)
            throw ParseError(key.pos, "malformed defsv: expected a keyword, got '" + print_datum(key) + "'");
        if (i + 1 >= form.items.size())
            throw ParseError(key.pos, "malformed defsv: keyword :" + key.text + " has no value");
        const Datum& val = form.items[i + 1];
        if (iequals(key.text, "states")) {
            if (!val.is_list() || val.items.empty())
                throw ParseError(val.pos, "malformed defsv: :states expects a non-empty list");
            for (const Datum& s : val.items) {
                if (s.kind != Datum::Kind::Symbol)
                    throw ParseError(s.pos, "malformed defsv: state names must be identifiers");
                sv.states.push_back(s.text);
            }
            has_states = true;
        } else if (iequals(key.text, "init")) {
            if (val.kind != Datum::Kind::Symbol && val.kind != Datum::Kind::Number)
                throw ParseError(val.pos, "malformed defsv: :init expects a value");
            sv.init = val.text;
            has_init = true;
        } else if (iequals(key.text, "min")) {
            sv.min = to_int(val, "malformed defsv: :min");
            has_min = true;
        } else if (iequals(key.text, "max")) {
            sv.max = to_int(val, "malformed defsv: :max");
            has_max = true;
        } else if (iequals(key.text, "transitions")) {
            has_trans = true;
            if (val.kind == Datum::Kind::Keyword && iequals(val.text, "all")) {
                sv.all_transitions = true;
            } else if (val.is_list()) {
                for (const Datum& p : val.items) {
                    if (!p.is_list() || p.items.size() != 2 || p.items[0].kind != Datum::Kind::Symbol ||
                        p.items[1].kind != Datum::Kind::Symbol)
                        throw ParseError(p.pos, "malformed defsv: transitions are (from to) pairs");
                    sv.transitions.emplace_back(p.items[0].text, p.items[1].text);
                }
            } else {
                throw ParseError(val.pos, "malformed defsv: :transitions expects :all or a pair list");
            }
        } else {
            throw ParseError(key.pos, "malformed defsv: unknown keyword :" + key.text);
        }
    }
    if (!has_init) throw ParseError(form.pos, "malformed defsv: " + sv.name + " has no :init");
    if (has_states && (has_min || has_max))
        throw ParseError(form.pos, "malformed defsv: " + sv.name + " mixes :states with :min/:max");
    if (has_states) {
        sv.kind = SvDecl::Kind::Enumerated;
        if (!has_trans) sv.all_transitions = true;
    } else if (has_min && has_max) {
        sv.kind = SvDecl::Kind::BoundedNat;
        if (has_trans) throw ParseError(form.pos, "malformed defsv: :transitions needs :states");
        if (sv.init.empty() || !(std::isdigit(static_cast<unsigned char>(sv.init[0])) || sv.init[0] == '-'))
            throw ParseError(form.pos, "malformed defsv: " + sv.name + " :init must be an integer");
    } else {
        throw ParseError(form.pos, "malformed defsv: " + sv.name + " needs :states or both :min and :max");
    }
    return sv;
}

Node parse_node(const Datum& form)
{
    Node n;
    n.pos = form.pos;
    n.kind = *parse_node_kind(form.items[0].text);
    for (std::size_t i = 1; i < form.items.size(); ++i) {
        const Datum& d = form.items[i];
        if (d.kind == Datum::Kind::Keyword) {
            Attribute a;
            a.key = d.text;
            if (i + 1 < form.items.size()) {
                const Datum& v = form.items[i + 1];
                if (v.kind != Datum::Kind::Keyword && !is_node_form(v)) {
                    a.value = v;
                    ++i;
                } else if (v.kind == Datum::Kind::Keyword && iequals(d.text, "transitions")) {
                    a.value = v;
                    ++i;
                }
            }
            n.attrs.push_back(std::move(a));
        } else if (is_node_form(d)) {
            n.children.push_back(parse_node(d));
        } else if (n.kind == NodeKind::Eval && !n.expr) {
            n.expr = parse_expr(d);
        } else if (d.is_list() && !d.items.empty() && d.items[0].kind == Datum::Kind::Symbol) {
            throw ParseError(d.pos, "unknown node kind '" + d.items[0].text + "'");
        } else {
            throw ParseError(d.pos, "malformed keyword pair near '" + print_datum(d) + "'");
        }
    }
    return n;
}

}  // namespace

std::string_view to_string(NodeKind kind)
{
    for (const auto& k : kKinds)
        if (k.kind == kind) return k.name;
    return "?";
}

std::optional<NodeKind> parse_node_kind(std::string_view text)
{
    for (const auto& k : kKinds)
        if (k.name == text) return k.kind;
    return std::nullopt;
}

bool is_leaf(NodeKind kind)
{
    return kind == NodeKind::Action || kind == NodeKind::Condition || kind == NodeKind::SetSV ||
           kind == NodeKind::Eval;
}

bool is_decorator(NodeKind kind)
{
    switch (kind) {
    case NodeKind::Inverter:
    case NodeKind::ForceFailure:
    case NodeKind::ForceSuccess:
    case NodeKind::Repeat:
    case NodeKind::RetryUntilSuccessful:
    case NodeKind::KeepRunningUntilFailure:
    case NodeKind::RateController:
        return true;
    default:
        return false;
    }
}

Expr parse_expr(const Datum& d)
{
    Expr e;
    e.pos = d.pos;
    switch (d.kind) {
    case Datum::Kind::Number:
        e.op = Expr::Op::Int;
        e.value = to_int(d, "expression literal");
        return e;
    case Datum::Kind::StatusRef:
        e.op = Expr::Op::StatusRef;
        e.name = d.text;
        return e;
    case Datum::Kind::Symbol:
        if (d.text.size() > 1 && d.text[0] == '$') {
            e.op = Expr::Op::ArgRef;
            e.name = d.text.substr(1);
        } else {
            e.op = Expr::Op::Ident;
            e.name = d.text;
        }
        return e;
    case Datum::Kind::Keyword:
        throw ParseError(d.pos, "unexpected keyword :" + d.text + " in expression");
    case Datum::Kind::List:
        break;
    }
    if (d.items.empty() || d.items[0].kind != Datum::Kind::Symbol)
        throw ParseError(d.pos, "expression must start with an operator");
    const std::string& op = d.items[0].text;
    std::size_t argc = d.items.size() - 1;
    auto want = [&](std::size_t n) {
        if (argc != n)
            throw ParseError(d.pos, "operator '" + op + "' takes " + std::to_string(n) + " operand(s)");
    };
    if (op == ":=") {
        want(2);
        if (d.items[1].kind != Datum::Kind::Symbol)
            throw ParseError(d.items[1].pos, "assignment target must be a state variable name");
        e.op = Expr::Op::Assign;
        e.name = d.items[1].text;
        e.args.push_back(parse_expr(d.items[2]));
        if (e.args[0].op == Expr::Op::Assign)
            throw ParseError(d.items[2].pos, "nested assignment");
        return e;
    }
    if (op == "=") {
        want(2);
        e.op = Expr::Op::Eq;
    } else if (op == "~") {
        want(1);
        e.op = Expr::Op::Not;
    } else if (op == "+") {
        want(2);
        e.op = Expr::Op::Add;
    } else if (op == "*") {
        want(2);
        e.op = Expr::Op::Mul;
    } else {
        throw ParseError(d.pos, "unsupported operator '" + op + "'");
    }
    for (std::size_t i = 1; i < d.items.size(); ++i) {
        e.args.push_back(parse_expr(d.items[i]));
        if (e.args.back().op == Expr::Op::Assign)
            throw ParseError(d.items[i].pos, "assignment may only appear at the top of an Eval");
    }
    return e;
}

Datum expr_to_datum(const Expr& e)
{
    Datum d;
    auto sym = [](std::string text) {
        Datum s;
        s.kind = Datum::Kind::Symbol;
        s.text = std::move(text);
        return s;
    };
    switch (e.op) {
    case Expr::Op::Int:
        d.kind = Datum::Kind::Number;
        d.text = std::to_string(e.value);
        return d;
    case Expr::Op::Ident:
    case Expr::Op::SvRef:
    case Expr::Op::EnumLit:
    case Expr::Op::StatusLit:
        return sym(e.name);
    case Expr::Op::ArgRef:
        return sym("$" + e.name);
    case Expr::Op::StatusRef:
        d.kind = Datum::Kind::StatusRef;
        d.text = e.name;
        return d;
    case Expr::Op::Assign:
        d.items.push_back(sym(":="));
        d.items.push_back(sym(e.name));
        break;
    case Expr::Op::Eq: d.items.push_back(sym("=")); break;
    case Expr::Op::Not: d.items.push_back(sym("~")); break;
    case Expr::Op::Add: d.items.push_back(sym("+")); break;
    case Expr::Op::Mul: d.items.push_back(sym("*")); break;
    }
    for (const Expr& a : e.args) d.items.push_back(expr_to_datum(a));
    return d;
}

bool Expr::operator==(const Expr& other) const
{
    return op == other.op && value == other.value && name == other.name && args == other.args;
}

const Attribute* Node::attr(std::string_view key) const
{
    for (const Attribute& a : attrs)
        if (iequals(a.key, key)) return &a;
    return nullptr;
}

std::optional<std::string> Node::text_attr(std::string_view key) const
{
    const Attribute* a = attr(key);
    if (!a || !a->value || a->value->is_list() || a->value->kind == Datum::Kind::Keyword) return std::nullopt;
    return a->value->text;
}

bool Node::same_ast(const Node& other) const
{
    if (kind != other.kind || attrs != other.attrs || children.size() != other.children.size() ||
        expr != other.expr)
        return false;
    for (std::size_t i = 0; i < children.size(); ++i)
        if (!children[i].same_ast(other.children[i])) return false;
    return true;
}

bool SvDecl::operator==(const SvDecl& o) const
{
    return name == o.name && kind == o.kind && states == o.states && all_transitions == o.all_transitions &&
           transitions == o.transitions && min == o.min && max == o.max && init == o.init;
}

std::optional<int> SvDecl::state_index(std::string_view value) const
{
    for (std::size_t i = 0; i < states.size(); ++i)
        if (iequals(states[i], value)) return static_cast<int>(i);
    return std::nullopt;
}

std::int64_t SvDecl::initial_value() const
{
    if (kind == Kind::Enumerated) return state_index(init).value_or(0);
    std::int64_t v = 0;
    std::from_chars(init.data(), init.data() + init.size(), v);
    return v;
}

std::string SvDecl::value_name(std::int64_t v) const
{
    if (kind == Kind::Enumerated && v >= 0 && v < static_cast<std::int64_t>(states.size()))
        return states[static_cast<std::size_t>(v)];
    return std::to_string(v);
}

std::optional<std::int64_t> SvDecl::parse_value(std::string_view text) const
{
    if (kind == Kind::Enumerated) {
        auto i = state_index(text);
        if (!i) return std::nullopt;
        return *i;
    }
    try {
        std::size_t used = 0;
        std::int64_t v = std::stoll(std::string(text), &used);
        if (used != text.size() || v < min || v > max) return std::nullopt;
        return v;
    } catch (...) {
        return std::nullopt;
    }
}

bool SvDecl::allows(int from, int to) const
{
    if (from == to || kind == Kind::BoundedNat || all_transitions) return true;
    for (const auto& [a, b] : transitions)
        if (state_index(a) == from && state_index(b) == to) return true;
    return false;
}

bool BtSpec::same_ast(const BtSpec& other) const
{
    if (svs != other.svs || trees.size() != other.trees.size()) return false;
    for (std::size_t i = 0; i < trees.size(); ++i)
        if (!trees[i].same_ast(other.trees[i])) return false;
    return true;
}

BtSpec parse_btf(std::string_view text)
{
    Datum doc = read_datum(text);
    BtSpec spec;
    for (const Datum& form : doc.items) {
        if (!form.is_list() || form.items.empty() || form.items[0].kind != Datum::Kind::Symbol)
            throw ParseError(form.pos, "expected (defsv ...) or (BehaviorTree ...)");
        const std::string& head = form.items[0].text;
        if (head == "defsv") {
            spec.svs.push_back(parse_defsv(form));
        } else if (head == "BehaviorTree") {
            spec.trees.push_back(parse_node(form));
        } else if (parse_node_kind(head)) {
            throw ParseError(form.pos, "top-level node must be a BehaviorTree, got " + head);
        } else {
            throw ParseError(form.pos, "unknown node kind '" + head + "'");
        }
    }
    if (spec.trees.empty()) throw ParseError(doc.pos, "document contains no BehaviorTree");
    return spec;
}

std::string tree_name(const Node& tree)
{
    if (auto n = tree.text_attr("name")) return *n;
    if (auto id = tree.text_attr("ID")) return *id;
    return tree.canonical_name;
}

}  // namespace btmc::syntax
