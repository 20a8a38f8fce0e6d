#include "btmc/properties.hpp"

#include <cctype>
#include <charconv>

namespace btmc {

using syntax::ParseError;
using syntax::SourcePos;

std::string_view to_string(Cmp c)
{
    switch (c) {
    case Cmp::Eq: return "=";
    case Cmp::Ne: return "!=";
    case Cmp::Lt: return "<";
    case Cmp::Le: return "<=";
    case Cmp::Gt: return ">";
    case Cmp::Ge: return ">=";
    }
    return "?";
}

std::string_view to_string(Property::Kind k)
{
    switch (k) {
    case Property::Kind::Absent: return "absent";
    case Property::Kind::Present: return "present";
    case Property::Kind::DeadlockFree: return "deadlockfree";
    case Property::Kind::LeadsToWithin: return "leadsto";
    case Property::Kind::ImpliesEventually: return "implies_eventually";
    }
    return "?";
}

std::string_view to_string(Verdict::Value v)
{
    switch (v) {
    case Verdict::Value::True: return "TRUE";
    case Verdict::Value::False: return "FALSE";
    case Verdict::Value::Unknown: return "UNKNOWN";
    }
    return "?";
}

namespace {

bool compare(std::int64_t x, Cmp c, std::int64_t y)
{
    switch (c) {
    case Cmp::Eq: return x == y;
    case Cmp::Ne: return x != y;
    case Cmp::Lt: return x < y;
    case Cmp::Le: return x <= y;
    case Cmp::Gt: return x > y;
    case Cmp::Ge: return x >= y;
    }
    return false;
}

}  // namespace

bool Pred::eval(const std::int32_t* vals) const
{
    switch (kind) {
    case Kind::True: return true;
    case Kind::And:
        for (const Pred& a : args)
            if (!a.eval(vals)) return false;
        return true;
    case Kind::Or:
        for (const Pred& a : args)
            if (a.eval(vals)) return true;
        return false;
    case Kind::Not: return !args[0].eval(vals);
    default: return compare(vals[slot], cmp, value);
    }
}

std::string to_string(const Pred& p)
{
    switch (p.kind) {
    case Pred::Kind::True: return "true";
    case Pred::Kind::NodeAt: return "node(" + p.name + ")@" + p.field;
    case Pred::Kind::Sv: return "sv(" + p.name + ") " + std::string(to_string(p.cmp)) + " " + p.field;
    case Pred::Kind::RStatus: return "rstatus(" + p.name + ") " + std::string(to_string(p.cmp)) + " " + p.field;
    case Pred::Kind::Local:
        return "local(" + p.name + "." + p.field + ") " + std::string(to_string(p.cmp)) + " " + std::to_string(p.value);
    case Pred::Kind::Terminal: return "terminal(" + p.field + ")";
    case Pred::Kind::Not: return "not " + to_string(p.args[0]);
    case Pred::Kind::And:
    case Pred::Kind::Or: {
        std::string out = "(";
        for (std::size_t i = 0; i < p.args.size(); ++i) {
            if (i) out += p.kind == Pred::Kind::And ? " and " : " or ";
            out += to_string(p.args[i]);
        }
        return out + ")";
    }
    }
    return "?";
}

std::string to_string(const Property& p)
{
    std::string out = "property " + p.name + " is ";
    switch (p.kind) {
    case Property::Kind::Absent: return out + "absent " + to_string(p.p);
    case Property::Kind::Present: return out + "present " + to_string(p.p);
    case Property::Kind::DeadlockFree: return out + "deadlockfree";
    case Property::Kind::LeadsToWithin:
        return out + to_string(p.p) + " leadsto " + to_string(p.q) + " within [" + std::to_string(p.a) + "," +
               std::to_string(p.b) + "]";
    case Property::Kind::ImpliesEventually:
        return out + "always " + to_string(p.p) + " implies eventually " + to_string(p.q);
    }
    return out;
}

// ---- resolution -------------------------------------------------------------

void resolve(Pred& p, const Model& m)
{
    auto node_of = [&](const std::string& name) {
        int n = m.node_index(name);
        if (n < 0) throw UnknownName("unknown node '" + name + "'");
        return n;
    };
    switch (p.kind) {
    case Pred::Kind::True: return;
    case Pred::Kind::And:
    case Pred::Kind::Or:
    case Pred::Kind::Not:
        for (Pred& a : p.args) resolve(a, m);
        return;
    case Pred::Kind::NodeAt: {
        const NodeInfo& n = m.nodes[static_cast<std::size_t>(node_of(p.name))];
        const Process& pr = m.processes[static_cast<std::size_t>(n.process)];
        int loc = pr.location(p.field);
        if (loc < 0) throw UnknownName("node '" + p.name + "' has no location '" + p.field + "'");
        p.slot = pr.loc_slot;
        p.value = loc;
        return;
    }
    case Pred::Kind::Sv: {
        int i = m.sv_index(p.name);
        if (i < 0) throw UnknownName("unknown state variable '" + p.name + "'");
        const SvInfo& sv = m.svs[static_cast<std::size_t>(i)];
        auto v = sv.parse_value(p.field);
        if (!v) {
            // Integers outside the declared range are still meaningful in comparisons.
            std::int64_t k = 0;
            auto [end, ec] = std::from_chars(p.field.data(), p.field.data() + p.field.size(), k);
            if (sv.decl.kind == syntax::SvDecl::Kind::Enumerated || ec != std::errc() ||
                end != p.field.data() + p.field.size())
                throw UnknownName("'" + p.field + "' is not a value of state variable '" + p.name + "'");
            v = k;
        }
        p.slot = sv.slot;
        p.value = *v;
        return;
    }
    case Pred::Kind::RStatus: {
        auto st = parse_status(p.field);
        if (!st) throw UnknownName("unknown status '" + p.field + "'");
        p.slot = m.nodes[static_cast<std::size_t>(node_of(p.name))].rstatus_slot;
        p.value = static_cast<std::int64_t>(*st);
        return;
    }
    case Pred::Kind::Local: {
        const NodeInfo& n = m.nodes[static_cast<std::size_t>(node_of(p.name))];
        const Process& pr = m.processes[static_cast<std::size_t>(n.process)];
        for (const Local& l : pr.locals) {
            if (l.name == p.field) {
                p.slot = l.slot;
                return;
            }
        }
        throw UnknownName("node '" + p.name + "' has no local '" + p.field + "'");
    }
    case Pred::Kind::Terminal: {
        auto st = parse_status(p.field);
        const Process& tk = m.processes[static_cast<std::size_t>(m.ticker)];
        p.slot = tk.loc_slot;
        if (st == Status::Success) p.value = m.ticker_terminal_success;
        else if (st == Status::Failure) p.value = m.ticker_terminal_failure;
        else throw UnknownName("terminal status must be success or failure, not '" + p.field + "'");
        p.cmp = Cmp::Eq;
        return;
    }
    }
}

void resolve(Property& p, const Model& m)
{
    resolve(p.p, m);
    resolve(p.q, m);
}

// ---- parsing ----------------------------------------------------------------

namespace {

struct Token {
    enum class Kind { Ident, Int, Punct, End } kind = Kind::End;
    std::string text;
    SourcePos pos;
};

struct Annotation {
    int line;
    bool value;
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : s_(text) {}

    std::vector<Token> run(std::vector<Annotation>& notes)
    {
        std::vector<Token> out;
        while (i_ < s_.size()) {
            char c = s_[i_];
            if (c == '\n') {
                advance();
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
                continue;
            }
            SourcePos pos{line_, col_};
            if (c == '/' && peek(1) == '/') {
                std::size_t end = s_.find('\n', i_);
                if (end == std::string_view::npos) end = s_.size();
                comment(s_.substr(i_ + 2, end - i_ - 2), notes);
                while (i_ < end) advance();
                continue;
            }
            if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
                std::size_t b = i_;
                while (i_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_' || s_[i_] == '.'))
                    advance();
                out.push_back({Token::Kind::Ident, std::string(s_.substr(b, i_ - b)), pos});
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || (c == '-' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
                std::size_t b = i_;
                advance();
                while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) advance();
                out.push_back({Token::Kind::Int, std::string(s_.substr(b, i_ - b)), pos});
                continue;
            }
            for (std::string_view two : {"!=", "<=", ">="}) {
                if (s_.substr(i_, 2) == two) {
                    advance();
                    advance();
                    out.push_back({Token::Kind::Punct, std::string(two), pos});
                    goto next;
                }
            }
            if (std::string_view("()[],@=<>").find(c) != std::string_view::npos) {
                advance();
                out.push_back({Token::Kind::Punct, std::string(1, c), pos});
                continue;
            }
            throw ParseError(pos, std::string("unexpected character '") + c + "'");
        next:;
        }
        out.push_back({Token::Kind::End, "", {line_, col_}});
        return out;
    }

private:
    std::string_view s_;
    std::size_t i_ = 0;
    int line_ = 1, col_ = 1;

    char peek(std::size_t k) const { return i_ + k < s_.size() ? s_[i_ + k] : '\0'; }

    void advance()
    {
        if (s_[i_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++i_;
    }

    void comment(std::string_view body, std::vector<Annotation>& notes)
    {
        auto k = body.find("expect:");
        if (k == std::string_view::npos) return;
        std::string_view rest = body.substr(k + 7);
        while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.front()))) rest.remove_prefix(1);
        if (rest.substr(0, 4) == "TRUE") notes.push_back({line_, true});
        else if (rest.substr(0, 5) == "FALSE") notes.push_back({line_, false});
        else throw ParseError({line_, col_}, "expect: must be followed by TRUE or FALSE");
    }
};

class Parser {
public:
    explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

    std::vector<Property> run()
    {
        std::vector<Property> out;
        while (cur().kind != Token::Kind::End) out.push_back(property());
        return out;
    }

private:
    std::vector<Token> t_;
    std::size_t i_ = 0;

    const Token& cur() const { return t_[i_]; }
    bool at(std::string_view text) const { return cur().kind != Token::Kind::End && cur().text == text; }

    [[noreturn]] void fail(const std::string& what) const
    {
        std::string got = cur().kind == Token::Kind::End ? "end of input" : "'" + cur().text + "'";
        throw ParseError(cur().pos, "expected " + what + ", got " + got);
    }

    void expect(std::string_view text)
    {
        if (!at(text)) fail("'" + std::string(text) + "'");
        ++i_;
    }

    std::string ident(const char* what)
    {
        if (cur().kind != Token::Kind::Ident) fail(what);
        return t_[i_++].text;
    }

    std::int64_t integer()
    {
        if (cur().kind != Token::Kind::Int) fail("an integer");
        return std::stoll(t_[i_++].text);
    }

    Cmp cmp()
    {
        static const std::pair<std::string_view, Cmp> ops[] = {{"=", Cmp::Eq},  {"!=", Cmp::Ne}, {"<", Cmp::Lt},
                                                               {"<=", Cmp::Le}, {">", Cmp::Gt},  {">=", Cmp::Ge}};
        if (cur().kind == Token::Kind::Punct)
            for (auto [text, c] : ops)
                if (cur().text == text) {
                    ++i_;
                    return c;
                }
        fail("a comparison operator");
    }

    Property property()
    {
        Property p;
        p.pos = cur().pos;
        expect("property");
        p.name = ident("a property name");
        expect("is");
        if (at("absent") || at("present")) {
            p.kind = at("absent") ? Property::Kind::Absent : Property::Kind::Present;
            ++i_;
            p.p = pred();
        } else if (at("deadlockfree")) {
            ++i_;
            p.kind = Property::Kind::DeadlockFree;
        } else if (at("always")) {
            ++i_;
            p.kind = Property::Kind::ImpliesEventually;
            p.p = pred();
            expect("implies");
            expect("eventually");
            p.q = pred();
        } else {
            p.kind = Property::Kind::LeadsToWithin;
            p.p = pred();
            expect("leadsto");
            p.q = pred();
            expect("within");
            expect("[");
            SourcePos bpos = cur().pos;
            std::int64_t a = integer();
            expect(",");
            std::int64_t b = integer();
            expect("]");
            if (a < 0 || b < a || b > 1'000'000) throw ParseError(bpos, "bounds must satisfy 0 <= a <= b");
            p.a = static_cast<int>(a);
            p.b = static_cast<int>(b);
        }
        return p;
    }

    Pred pred()
    {
        Pred first = conj();
        if (!at("or")) return first;
        Pred out;
        out.kind = Pred::Kind::Or;
        out.args.push_back(std::move(first));
        while (at("or")) {
            ++i_;
            out.args.push_back(conj());
        }
        return out;
    }

    Pred conj()
    {
        Pred first = unary();
        if (!at("and")) return first;
        Pred out;
        out.kind = Pred::Kind::And;
        out.args.push_back(std::move(first));
        while (at("and")) {
            ++i_;
            out.args.push_back(unary());
        }
        return out;
    }

    Pred unary()
    {
        if (at("not")) {
            ++i_;
            Pred out;
            out.kind = Pred::Kind::Not;
            out.args.push_back(unary());
            return out;
        }
        if (at("(")) {
            ++i_;
            Pred out = pred();
            expect(")");
            return out;
        }
        return atom();
    }

    std::string paren_ident(const char* what)
    {
        expect("(");
        std::string out = ident(what);
        expect(")");
        return out;
    }

    Pred atom()
    {
        Pred p;
        if (at("true")) {
            ++i_;
            return p;
        }
        if (at("node")) {
            ++i_;
            p.kind = Pred::Kind::NodeAt;
            p.name = paren_ident("a node name");
            expect("@");
            p.field = ident("a location name");
        } else if (at("sv")) {
            ++i_;
            p.kind = Pred::Kind::Sv;
            p.name = paren_ident("a state variable name");
            p.cmp = cmp();
            if (cur().kind == Token::Kind::Int) p.field = t_[i_++].text;
            else p.field = ident("a value");
        } else if (at("rstatus")) {
            ++i_;
            p.kind = Pred::Kind::RStatus;
            p.name = paren_ident("a node name");
            p.cmp = cmp();
            if (p.cmp != Cmp::Eq && p.cmp != Cmp::Ne) throw ParseError(t_[i_ - 1].pos, "statuses compare with = or !=");
            p.field = ident("a status");
        } else if (at("local")) {
            ++i_;
            p.kind = Pred::Kind::Local;
            SourcePos pos = cur().pos;
            std::string full = paren_ident("node.variable");
            auto dot = full.rfind('.');
            if (dot == std::string::npos || dot == 0 || dot + 1 == full.size())
                throw ParseError(pos, "expected node.variable");
            p.name = full.substr(0, dot);
            p.field = full.substr(dot + 1);
            p.cmp = cmp();
            p.value = integer();
        } else if (at("terminal")) {
            ++i_;
            p.kind = Pred::Kind::Terminal;
            p.field = paren_ident("success or failure");
        } else {
            fail("a predicate");
        }
        return p;
    }
};

}  // namespace

std::vector<Property> parse_properties(std::string_view text)
{
    std::vector<Annotation> notes;
    auto props = Parser(Lexer(text).run(notes)).run();
    for (std::size_t i = 0; i < props.size(); ++i) {
        int from = props[i].pos.line;
        int to = i + 1 < props.size() ? props[i + 1].pos.line : 1 << 30;
        for (const Annotation& a : notes)
            if (a.line >= from && a.line < to) props[i].expect = a.value;
    }
    return props;
}

std::vector<Property> default_properties(const Model& m)
{
    std::vector<Property> out;
    auto add = [&](const std::string& name, Pred p) {
        Property prop;
        prop.name = name;
        prop.kind = Property::Kind::Present;
        prop.p = std::move(p);
        resolve(prop, m);
        out.push_back(std::move(prop));
    };
    auto at = [](const std::string& node, const char* loc) {
        Pred p;
        p.kind = Pred::Kind::NodeAt;
        p.name = node;
        p.field = loc;
        return p;
    };
    auto rs = [](const std::string& node, const char* st) {
        Pred p;
        p.kind = Pred::Kind::RStatus;
        p.name = node;
        p.field = st;
        return p;
    };
    for (const NodeInfo& n : m.nodes) {
        add(n.name + "_can_be_done", at(n.name, "done"));
        add(n.name + "_can_succeed", rs(n.name, "success"));
        add(n.name + "_can_fail", rs(n.name, "failure"));
        if (n.kind == syntax::NodeKind::Action) add(n.name + "_can_run", rs(n.name, "running"));
        add(n.name + "_can_be_halted", at(n.name, "halted"));
    }
    Property d;
    d.name = "deadlock_free";
    d.kind = Property::Kind::DeadlockFree;
    out.push_back(std::move(d));
    return out;
}

// ---- checking ---------------------------------------------------------------

namespace {

std::string limit_reason(const StateGraph& g)
{
    return g.limit == LimitKind::Time ? "time limit reached" : "state limit reached";
}

Verdict unknown(const StateGraph& g)
{
    Verdict v;
    v.reason = limit_reason(g);
    return v;
}

// Predicate values per state, computed once.
std::vector<char> mark(const StateGraph& g, const Pred& p)
{
    std::vector<char> out(g.size());
    Values vals(g.model->slots.size());
    for (StateId s = 0; s < g.size(); ++s) {
        g.values(s, vals.data());
        out[s] = p.eval(vals.data());
    }
    return out;
}

bool is_sink(const StateGraph& g, StateId s)
{
    auto [b, e] = g.out(s);
    return s < g.expanded() && b == e;
}

void append(Trace& t, Label l, StateId s)
{
    t.labels.push_back(l);
    t.states.push_back(s);
}

Verdict check_reach(const StateGraph& g, const Pred& p, bool absent)
{
    Verdict v;
    auto path = find_path(g, [&](const std::int32_t* vals) { return p.eval(vals); });
    if (path) {
        v.value = absent ? Verdict::Value::False : Verdict::Value::True;
        v.witness = std::move(path);
    } else if (!g.complete()) {
        v = unknown(g);
    } else {
        v.value = absent ? Verdict::Value::True : Verdict::Value::False;
    }
    return v;
}

Verdict check_deadlock(const StateGraph& g)
{
    Verdict v;
    Values vals(g.model->slots.size());
    for (StateId s = 0; s < g.expanded(); ++s) {
        if (!is_sink(g, s)) continue;
        g.values(s, vals.data());
        if (g.model->terminal(vals.data())) continue;
        v.value = Verdict::Value::False;
        v.witness = path_to(g, s);
        return v;
    }
    if (!g.complete()) return unknown(g);
    v.value = Verdict::Value::True;
    return v;
}

// Bounded response over the product of states and elapsed ticks.
class LeadsTo {
public:
    LeadsTo(const StateGraph& g, const Property& prop)
        : g_(g), a_(prop.a), w_(prop.b + 1), p_(mark(g, prop.p)), q_(mark(g, prop.q))
    {
        status_.assign(g.size() * static_cast<std::size_t>(w_), kWhite);
        bad_edge_.assign(status_.size(), kNoEdge);
    }

    Verdict run()
    {
        Verdict v;
        bool unsure = false;
        for (StateId s = 0; s < g_.size(); ++s) {
            if (!p_[s]) continue;
            std::uint8_t r = visit(s);
            if (r == kBad) {
                v.value = Verdict::Value::False;
                v.witness = witness(s, v.lasso);
                return v;
            }
            if (r == kUnsure) unsure = true;
        }
        if (unsure) return unknown(g_);
        v.value = Verdict::Value::True;
        return v;
    }

private:
    static constexpr std::uint8_t kWhite = 0, kGrey = 1, kGood = 2, kBad = 3, kUnsure = 4;
    static constexpr std::uint64_t kNoEdge = ~std::uint64_t{0};
    static constexpr std::uint64_t kSink = kNoEdge - 1;

    const StateGraph& g_;
    int a_, w_;
    std::vector<char> p_, q_;
    std::vector<std::uint8_t> status_;
    std::vector<std::uint64_t> bad_edge_;

    std::size_t key(StateId s, int t) const { return static_cast<std::size_t>(s) * static_cast<std::size_t>(w_) + static_cast<std::size_t>(t); }

    // Outcome of a node before looking at its successors, or kWhite.
    std::uint8_t leaf(StateId s, int t)
    {
        if (q_[s] && t >= a_) return kGood;
        if (s >= g_.expanded()) return kUnsure;
        if (is_sink(g_, s)) {
            bad_edge_[key(s, t)] = kSink;
            return kBad;
        }
        return kWhite;
    }

    std::uint8_t visit(StateId s0)
    {
        struct Frame {
            StateId s;
            int t;
            std::uint64_t e;
            bool unsure;
        };
        std::size_t k0 = key(s0, 0);
        if (status_[k0] != kWhite) return status_[k0];
        if (std::uint8_t r = leaf(s0, 0); r != kWhite) return status_[k0] = r;
        std::vector<Frame> stack{{s0, 0, g_.edge_begin[s0], false}};
        status_[k0] = kGrey;
        std::uint8_t result = kWhite;
        while (!stack.empty()) {
            Frame& f = stack.back();
            std::size_t kf = key(f.s, f.t);
            if (result != kWhite) {
                // Returning from a child with `result`.
                if (result == kBad) {
                    bad_edge_[kf] = f.e;
                    status_[kf] = kBad;
                    stack.pop_back();
                    continue;
                }
                if (result == kUnsure) f.unsure = true;
                ++f.e;
                result = kWhite;
            }
            if (f.e == g_.edge_begin[f.s + 1]) {
                result = status_[kf] = f.unsure ? kUnsure : kGood;
                stack.pop_back();
                continue;
            }
            const Edge& e = g_.edges[f.e];
            int t = f.t + (g_.is_boundary(e.label) ? 1 : 0);
            if (t >= w_) {
                result = kBad;
                bad_edge_[kf] = f.e;
                status_[kf] = kBad;
                stack.pop_back();
                continue;
            }
            std::size_t kc = key(e.dst, t);
            std::uint8_t st = status_[kc];
            if (st == kGrey) {
                // A cycle that never reaches q.
                result = kBad;
                bad_edge_[kf] = f.e;
                status_[kf] = kBad;
                stack.pop_back();
                continue;
            }
            if (st != kWhite) {
                result = st;
                continue;
            }
            if (std::uint8_t r = leaf(e.dst, t); r != kWhite) {
                status_[kc] = r;
                result = r;
                continue;
            }
            status_[kc] = kGrey;
            stack.push_back({e.dst, t, g_.edge_begin[e.dst], false});
        }
        // `result` is set by the last pop, which is the root frame.
        return status_[k0];
    }

    Trace witness(StateId s, bool& lasso)
    {
        Trace t = path_to(g_, s);
        std::vector<char> seen(status_.size(), 0);
        int tick = 0;
        for (;;) {
            std::size_t k = key(s, tick);
            if (seen[k]) {
                lasso = true;
                break;
            }
            seen[k] = 1;
            std::uint64_t e = bad_edge_[k];
            if (e == kSink || e == kNoEdge) break;
            const Edge& edge = g_.edges[e];
            append(t, edge.label, edge.dst);
            if (g_.is_boundary(edge.label)) ++tick;
            if (tick >= w_) break;
            s = edge.dst;
        }
        return t;
    }
};

// Unbounded response: no q-avoiding path from a p-state may end in a sink
// or close a cycle.
Verdict check_implies(const StateGraph& g, const Property& prop)
{
    auto p = mark(g, prop.p);
    auto q = mark(g, prop.q);
    enum : std::uint8_t { White, Grey, Black };
    std::vector<std::uint8_t> color(g.size(), White);
    bool unsure = false;
    struct Frame {
        StateId s;
        std::uint64_t e;
        Label in;
    };
    for (StateId root = 0; root < g.size(); ++root) {
        if (!p[root] || q[root] || color[root] != White) continue;
        std::vector<Frame> stack{{root, 0, 0}};
        color[root] = Grey;
        auto fail = [&](std::optional<std::pair<Label, StateId>> closing) {
            Verdict v;
            v.value = Verdict::Value::False;
            Trace t = path_to(g, root);
            for (std::size_t i = 1; i < stack.size(); ++i) append(t, stack[i].in, stack[i].s);
            if (closing) {
                append(t, closing->first, closing->second);
                v.lasso = true;
            }
            v.witness = std::move(t);
            return v;
        };
        if (root >= g.expanded()) {
            unsure = true;
            color[root] = Black;
            continue;
        }
        stack.back().e = g.edge_begin[root];
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (f.e == g.edge_begin[f.s]) {
                if (is_sink(g, f.s)) return fail(std::nullopt);
            }
            if (f.e == g.edge_begin[f.s + 1]) {
                color[f.s] = Black;
                stack.pop_back();
                continue;
            }
            const Edge& e = g.edges[f.e++];
            if (q[e.dst]) continue;
            if (color[e.dst] == Grey) return fail(std::make_pair(e.label, e.dst));
            if (color[e.dst] == Black) continue;
            if (e.dst >= g.expanded()) {
                unsure = true;
                color[e.dst] = Black;
                continue;
            }
            color[e.dst] = Grey;
            stack.push_back({e.dst, g.edge_begin[e.dst], e.label});
        }
    }
    if (unsure) return unknown(g);
    Verdict v;
    v.value = Verdict::Value::True;
    return v;
}

}  // namespace

Verdict check(const StateGraph& g, const Property& prop)
{
    switch (prop.kind) {
    case Property::Kind::Absent: return check_reach(g, prop.p, true);
    case Property::Kind::Present: return check_reach(g, prop.p, false);
    case Property::Kind::DeadlockFree: return check_deadlock(g);
    case Property::Kind::LeadsToWithin: return LeadsTo(g, prop).run();
    case Property::Kind::ImpliesEventually: return check_implies(g, prop);
    }
    return {};
}

}  // namespace btmc
