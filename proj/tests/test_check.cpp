#include <random>

#include <gtest/gtest.h>

#include "btmc/properties.hpp"
#include "btmc/state_space.hpp"
#include "support.hpp"

using namespace btmc;
using namespace btmc::test;

namespace {

Property parse_one(const std::string& text, const Model& m)
{
    auto props = parse_properties(text);
    EXPECT_EQ(props.size(), 1u);
    resolve(props[0], m);
    return props[0];
}

Verdict::Value verdict(const StateGraph& g, const std::string& text)
{
    return check(g, parse_one(text, *g.model)).value;
}

int ticks_in(const StateGraph& g, const Trace& t)
{
    int n = 0;
    for (Label l : t.labels) n += g.is_boundary(l);
    return n;
}

Pred atom(std::mt19937_64& rng, const Model& m)
{
    Pred p;
    if (!m.svs.empty() && rng() % 3 == 0) {
        const SvInfo& sv = m.svs[rng() % m.svs.size()];
        p.kind = Pred::Kind::Sv;
        p.name = sv.name;
        std::int64_t lo = sv.decl.kind == syntax::SvDecl::Kind::Enumerated ? 0 : sv.decl.min;
        std::int64_t hi = sv.decl.kind == syntax::SvDecl::Kind::Enumerated
                              ? static_cast<std::int64_t>(sv.decl.states.size()) - 1
                              : sv.decl.max;
        p.field = sv.value_name(lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(hi - lo + 1)));
        p.cmp = sv.decl.kind == syntax::SvDecl::Kind::Enumerated ? Cmp::Eq : static_cast<Cmp>(rng() % 6);
    } else {
        const NodeInfo& n = m.nodes[rng() % m.nodes.size()];
        const Process& pr = m.processes[static_cast<std::size_t>(n.process)];
        p.kind = Pred::Kind::NodeAt;
        p.name = n.name;
        p.field = pr.locations[rng() % pr.locations.size()];
    }
    resolve(p, m);
    return p;
}

Pred random_pred(std::mt19937_64& rng, const Model& m)
{
    Pred a = atom(rng, m);
    switch (rng() % 4) {
    case 0: {
        Pred p;
        p.kind = Pred::Kind::And;
        p.args = {a, atom(rng, m)};
        return p;
    }
    case 1: {
        Pred p;
        p.kind = Pred::Kind::Not;
        p.args = {a};
        return p;
    }
    default: return a;
    }
}

std::vector<char> marks(const StateGraph& g, const Pred& p)
{
    std::vector<char> out(g.size());
    for (StateId s = 0; s < g.size(); ++s) out[s] = p.eval(g.values(s).data());
    return out;
}

// Least fixpoint over (state, elapsed ticks): good when q holds inside the
// window, or when every step stays inside the window and leads to good.
bool leadsto_oracle(const StateGraph& g, const std::vector<char>& p, const std::vector<char>& q, int a, int b)
{
    std::size_t w = static_cast<std::size_t>(b) + 1;
    std::vector<char> good(g.size() * w, 0);
    for (bool changed = true; changed;) {
        changed = false;
        for (StateId s = 0; s < g.size(); ++s) {
            for (int t = 0; t <= b; ++t) {
                char& cell = good[s * w + static_cast<std::size_t>(t)];
                if (cell) continue;
                bool ok = q[s] && t >= a;
                if (!ok) {
                    auto [e, end] = g.out(s);
                    ok = e != end;
                    for (; ok && e != end; ++e) {
                        int t2 = t + (g.is_boundary(e->label) ? 1 : 0);
                        ok = t2 <= b && good[e->dst * w + static_cast<std::size_t>(t2)];
                    }
                }
                if (ok) cell = changed = 1;
            }
        }
    }
    for (StateId s = 0; s < g.size(); ++s)
        if (p[s] && !good[s * w]) return false;
    return true;
}

// Least fixpoint of "all paths reach q".
bool eventually_oracle(const StateGraph& g, const std::vector<char>& p, const std::vector<char>& q)
{
    std::vector<char> good(q.begin(), q.end());
    for (bool changed = true; changed;) {
        changed = false;
        for (StateId s = 0; s < g.size(); ++s) {
            if (good[s]) continue;
            auto [e, end] = g.out(s);
            bool ok = e != end;
            for (; ok && e != end; ++e) ok = good[e->dst];
            if (ok) good[s] = changed = 1;
        }
    }
    for (StateId s = 0; s < g.size(); ++s)
        if (p[s] && !good[s]) return false;
    return true;
}

}  // namespace

TEST(StateSpace, SingleActionSucceedsInOneTick)
{
    Model m = model_of("((BehaviorTree :name t (Action :ID a)))");
    StateGraph g = explore(m);
    ASSERT_TRUE(g.complete());
    auto path = find_path(g, [&](const std::int32_t* v) { return m.terminal(v) == Status::Success; });
    ASSERT_TRUE(path);
    EXPECT_EQ(ticks_in(g, *path), 1);
    EXPECT_TRUE(replay(m, g, *path));
    EXPECT_EQ(quotient_stats(g).terminal_statuses, (std::set<Status>{Status::Success, Status::Failure}));
    EXPECT_FALSE(has_urgent_cycle(g));
}

TEST(StateSpace, SingleConditionBothOutcomes)
{
    Model m = model_of("((BehaviorTree :name t (Condition :ID c)))");
    StateGraph g = explore(m);
    EXPECT_EQ(quotient_stats(g).terminal_statuses, (std::set<Status>{Status::Success, Status::Failure}));
    EXPECT_EQ(verdict(g, "property h is present (node(c_btn2)@halted)"), Verdict::Value::False);
    for (const Property& p : default_properties(m))
        if (p.name.find("halted") != std::string::npos)
            EXPECT_EQ(check(g, p).value, Verdict::Value::False) << p.name;
}

TEST(StateSpace, RecoveryTerminals)
{
    StateGraph g = explore(model_of(corpus_text("recovery.btf")));
    EXPECT_EQ(quotient_stats(g).terminal_statuses, (std::set<Status>{Status::Success, Status::Failure}));
}

TEST(StateSpace, MarsCounterexample)
{
    Model m = model_of(corpus_text("mars_rover.btf"));
    StateGraph g = explore(m);
    ASSERT_TRUE(g.complete());
    EXPECT_LT(g.size(), 500'000u);
    EXPECT_TRUE(quotient_stats(g).terminal_statuses.count(Status::Failure));

    Property p = parse_one(slurp(corpus("mars_rover.props")), m);
    Verdict v = check(g, p);
    EXPECT_EQ(v.value, Verdict::Value::False);
    ASSERT_TRUE(v.witness);
    EXPECT_TRUE(replay(m, g, *v.witness));
    EXPECT_TRUE(p.p.eval(g.values(v.witness->states.back()).data()));
    std::string text = dump_trace(g, *v.witness);
    EXPECT_NE(text.find("Unfolded"), std::string::npos);
    EXPECT_NE(text.find("Storm"), std::string::npos);
}

TEST(StateSpace, ExplorationIsDeterministic)
{
    Model m = model_of(corpus_text("roundrobin.btf"));
    EXPECT_EQ(dump_graph(explore(m)), dump_graph(explore(m)));
}

TEST(StateSpace, StateLimitReportsUnknown)
{
    Model m = model_of(corpus_text("mars_rover.btf"));
    StateGraph g = explore(m, {100, 600});
    EXPECT_FALSE(g.complete());
    EXPECT_EQ(g.limit, LimitKind::States);
    EXPECT_EQ(verdict(g, "property d is deadlockfree"), Verdict::Value::Unknown);
}

TEST(Properties, ParseForms)
{
    auto ps = parse_properties("property p is absent (sv(fls) > 3)\nproperty d is deadlockfree // expect: TRUE\n");
    ASSERT_EQ(ps.size(), 2u);
    EXPECT_EQ(ps[0].kind, Property::Kind::Absent);
    EXPECT_EQ(ps[0].p.kind, Pred::Kind::Sv);
    EXPECT_EQ(ps[0].p.name, "fls");
    EXPECT_EQ(ps[0].p.cmp, Cmp::Gt);
    EXPECT_EQ(ps[0].p.field, "3");
    EXPECT_FALSE(ps[0].expect);
    EXPECT_EQ(ps[1].kind, Property::Kind::DeadlockFree);
    EXPECT_EQ(ps[1].expect, true);
}

TEST(Properties, RejectsBadBounds)
{
    EXPECT_THROW(parse_properties("property x is node(a)@done leadsto node(b)@done within [2,1]"),
                 syntax::ParseError);
    EXPECT_THROW(parse_properties("property x is absent ("), syntax::ParseError);
    EXPECT_THROW(parse_properties("property x is sometimes (true)"), syntax::ParseError);
}

TEST(Properties, UnknownNames)
{
    Model m = model_of(corpus_text("recovery.btf"));
    auto ps = parse_properties("property x is present (node(nope)@done)");
    EXPECT_THROW(resolve(ps[0], m), UnknownName);
    ps = parse_properties("property x is present (node(action)@nowhere)");
    EXPECT_THROW(resolve(ps[0], m), UnknownName);
}

TEST(Properties, PrintParseRoundTrip)
{
    for (const char* file : {"recovery.props", "roundrobin.props", "drone_reduced.props", "drone_timed.props"}) {
        for (const Property& p : parse_properties(slurp(corpus(file)))) {
            auto back = parse_properties(to_string(p));
            ASSERT_EQ(back.size(), 1u) << to_string(p);
            EXPECT_EQ(to_string(back[0]), to_string(p));
        }
    }
}

TEST(Properties, RecoverySuite)
{
    Model m = model_of(corpus_text("recovery.btf"));
    StateGraph g = explore(m);
    std::vector<Verdict::Value> got;
    for (Property& p : parse_properties(slurp(corpus("recovery.props")))) {
        resolve(p, m);
        got.push_back(check(g, p).value);
    }
    using V = Verdict::Value;
    EXPECT_EQ(got, (std::vector<V>{V::True, V::False, V::True, V::True}));
}

TEST(Properties, RoundRobinSuite)
{
    Model m = model_of(corpus_text("roundrobin.btf"));
    StateGraph g = explore(m);
    std::vector<Verdict::Value> got;
    for (Property& p : parse_properties(slurp(corpus("roundrobin.props")))) {
        resolve(p, m);
        Verdict v = check(g, p);
        got.push_back(v.value);
        if (v.value == Verdict::Value::False) {
            ASSERT_TRUE(v.witness);
            EXPECT_TRUE(replay(m, g, *v.witness));
        }
    }
    using V = Verdict::Value;
    EXPECT_EQ(got, (std::vector<V>{V::False, V::True, V::True, V::True}));
}

TEST(Properties, AbsentIsNotPresent)
{
    std::mt19937_64 rng(11);
    for (const char* file : {"recovery.btf", "roundrobin.btf", "mars_rover.btf"}) {
        Model m = model_of(corpus_text(file));
        StateGraph g = explore(m);
        for (int i = 0; i < 60; ++i) {
            Property absent, present;
            absent.kind = Property::Kind::Absent;
            present.kind = Property::Kind::Present;
            absent.p = present.p = random_pred(rng, m);
            Verdict va = check(g, absent), vp = check(g, present);
            ASSERT_NE(va.value, Verdict::Value::Unknown);
            EXPECT_EQ(va.value == Verdict::Value::True, vp.value == Verdict::Value::False) << to_string(absent.p);
            if (vp.value == Verdict::Value::True) {
                ASSERT_TRUE(vp.witness);
                EXPECT_TRUE(replay(m, g, *vp.witness));
                EXPECT_TRUE(present.p.eval(g.values(vp.witness->states.back()).data()));
            }
        }
    }
}

TEST(Properties, LeadsToMatchesFixpointOracle)
{
    std::mt19937_64 rng(5);
    for (const char* file : {"recovery.btf", "roundrobin.btf", "drone_simple.btf"}) {
        Model m = model_of(corpus_text(file));
        StateGraph g = explore(m);
        ASSERT_TRUE(g.complete());
        int trues = 0, falses = 0;
        for (int i = 0; i < 40; ++i) {
            Property prop;
            prop.kind = Property::Kind::LeadsToWithin;
            prop.p = random_pred(rng, m);
            prop.q = random_pred(rng, m);
            prop.a = static_cast<int>(rng() % 2);
            prop.b = prop.a + static_cast<int>(rng() % 3);
            Verdict v = check(g, prop);
            bool want = leadsto_oracle(g, marks(g, prop.p), marks(g, prop.q), prop.a, prop.b);
            EXPECT_EQ(v.value, want ? Verdict::Value::True : Verdict::Value::False) << to_string(prop);
            (want ? trues : falses)++;
            if (v.value == Verdict::Value::False) {
                ASSERT_TRUE(v.witness);
                EXPECT_TRUE(replay(m, g, *v.witness));
            }
        }
        EXPECT_GT(falses, 0) << file;
    }
}

TEST(Properties, ImpliesEventuallyMatchesFixpointOracle)
{
    std::mt19937_64 rng(9);
    for (const char* file : {"recovery.btf", "roundrobin.btf", "mars_rover.btf"}) {
        Model m = model_of(corpus_text(file));
        StateGraph g = explore(m);
        for (int i = 0; i < 40; ++i) {
            Property prop;
            prop.kind = Property::Kind::ImpliesEventually;
            prop.p = random_pred(rng, m);
            prop.q = random_pred(rng, m);
            Verdict v = check(g, prop);
            bool want = eventually_oracle(g, marks(g, prop.p), marks(g, prop.q));
            EXPECT_EQ(v.value, want ? Verdict::Value::True : Verdict::Value::False) << to_string(prop);
            if (v.value == Verdict::Value::False) {
                ASSERT_TRUE(v.witness);
                EXPECT_TRUE(replay(m, g, *v.witness));
            }
        }
    }
}

TEST(Properties, DeadlockFreeCorpus)
{
    for (const char* file : {"recovery.btf", "roundrobin.btf", "mars_rover.btf", "drone_simple.btf"}) {
        Model m = model_of(corpus_text(file));
        EXPECT_EQ(verdict(explore(m), "property d is deadlockfree"), Verdict::Value::True) << file;
    }
}

TEST(Properties, AllNodesWindows)
{
    // Random windows with one tick consumed per node.
    CompileOptions opt;
    opt.semantics = TickSemantics::AllNodes;
    Model m = compile(syntax::load_spec(corpus_text("drone_simple.btf")), opt);
    StateGraph g = explore(m);
    ASSERT_TRUE(g.complete());
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        Property prop;
        prop.kind = Property::Kind::LeadsToWithin;
        prop.p = random_pred(rng, m);
        prop.q = random_pred(rng, m);
        prop.a = 0;
        prop.b = static_cast<int>(rng() % 4);
        bool want = leadsto_oracle(g, marks(g, prop.p), marks(g, prop.q), prop.a, prop.b);
        EXPECT_EQ(check(g, prop).value, want ? Verdict::Value::True : Verdict::Value::False) << to_string(prop);
    }
}

TEST(StateSpace, DroneTakeoffCanBeHalted)
{
    Model m = model_of(corpus_text("drone_reduced.btf"));
    StateGraph g = explore(m);
    ASSERT_TRUE(g.complete());
    Property p = parse_one("property h is present (node(takeoff_btn23)@halted)", m);
    Verdict v = check(g, p);
    EXPECT_EQ(v.value, Verdict::Value::True);
    ASSERT_TRUE(v.witness);
    EXPECT_TRUE(replay(m, g, *v.witness));
}
