#include <random>

#include <gtest/gtest.h>

#include "btmc/syntax.hpp"
#include "support.hpp"

using namespace btmc::syntax;
using btmc::test::corpus_text;

TEST(Syntax, Minimal)
{
    BtSpec s = parse_btf("((BehaviorTree :name t (Action :ID a)))");
    ASSERT_EQ(s.trees.size(), 1u);
    ASSERT_EQ(s.trees[0].children.size(), 1u);
    EXPECT_EQ(s.trees[0].children[0].kind, NodeKind::Action);
    EXPECT_EQ(s.trees[0].children[0].text_attr("ID"), "a");
}

TEST(Syntax, DroneDeclarations)
{
    BtSpec s = parse_btf(corpus_text("drone.btf"));
    ASSERT_EQ(s.svs.size(), 2u);
    EXPECT_EQ(s.svs[0].name, "fls");
    EXPECT_EQ(s.svs[0].kind, SvDecl::Kind::BoundedNat);
    EXPECT_EQ(s.svs[0].min, 0);
    EXPECT_EQ(s.svs[0].max, 3);
    EXPECT_EQ(s.svs[0].initial_value(), 0);
    EXPECT_EQ(s.svs[1].kind, SvDecl::Kind::Enumerated);
    EXPECT_EQ(s.svs[1].states, (std::vector<std::string>{"Good", "Low", "Critical"}));
    EXPECT_EQ(s.svs[1].init, "Good");
    ASSERT_EQ(s.trees.size(), 1u);
    EXPECT_EQ(s.trees[0].children[0].kind, NodeKind::Sequence);
}

TEST(Syntax, MarsMeteoNeverReturnsToInit)
{
    BtSpec s = parse_btf(corpus_text("mars_rover.btf"));
    ASSERT_EQ(s.svs.size(), 3u);
    const SvDecl& meteo = s.svs[0];
    ASSERT_EQ(meteo.name, "meteo");
    int init = *meteo.state_index("MInit");
    for (int from = 0; from < static_cast<int>(meteo.states.size()); ++from)
        if (from != init) EXPECT_FALSE(meteo.allows(from, init)) << meteo.states[from];
}

TEST(Syntax, RecoveryArity)
{
    try {
        load_spec("((BehaviorTree (Recovery (Action :ID a) (Action :ID b) (Action :ID c))))");
        FAIL() << "accepted";
    } catch (const SemanticErrors& e) {
        ASSERT_FALSE(e.errors().empty());
        EXPECT_NE(e.errors()[0].message.find("exactly 2 children"), std::string::npos) << e.errors()[0].message;
        EXPECT_FALSE(e.errors()[0].path.empty());
    }
}

TEST(Syntax, CanonicalNames)
{
    std::string text = "((BehaviorTree :name t (Sequence";
    for (int i = 0; i < 19; ++i) text += " (Action :ID a" + std::to_string(i) + ")";
    text += " (Action :ID takeoff) (Fallback (Action :ID y)) (Sequence :name named (Action :ID x)))))";
    ValidatedSpec v = load_spec(text);
    const Node& seq = v.spec.trees[0].children[0];
    EXPECT_EQ(seq.canonical_name, "Sequence2_btn2");
    EXPECT_EQ(seq.children[0].canonical_name, "a0_btn3");
    EXPECT_EQ(seq.children[19].canonical_name, "takeoff_btn22");
    EXPECT_EQ(seq.children[20].canonical_name, "Fallback23_btn23");
    EXPECT_EQ(seq.children[21].canonical_name, "named");

    // takeoff as the 21st node in pre-order.
    std::string shifted = "((BehaviorTree :name t (Sequence";
    for (int i = 0; i < 18; ++i) shifted += " (Action :ID a" + std::to_string(i) + ")";
    shifted += " (Action :ID takeoff))))";
    EXPECT_EQ(load_spec(shifted).spec.trees[0].children[0].children[18].canonical_name, "takeoff_btn21");
}

TEST(Syntax, SvDrivers)
{
    ValidatedSpec v = load_spec(corpus_text("mars_rover.btf"));
    EXPECT_EQ(v.drivers[v.sv_index("meteo")], SvDriver::Environment);
    EXPECT_EQ(v.drivers[v.sv_index("battery")], SvDriver::Environment);
    EXPECT_EQ(v.drivers[v.sv_index("panel")], SvDriver::Program);

    ValidatedSpec d = load_spec(corpus_text("drone.btf"));
    EXPECT_EQ(d.drivers[d.sv_index("battery")], SvDriver::Program);
    EXPECT_EQ(d.drivers[d.sv_index("fls")], SvDriver::Program);
}

TEST(Syntax, DuplicateNameRejected)
{
    EXPECT_THROW(load_spec("((BehaviorTree (Sequence (Action :name a) (Action :name a))))"), SemanticErrors);
    EXPECT_NO_THROW(load_spec("((BehaviorTree (Sequence (Action :ID a) (Action :ID a))))"));
}

TEST(Syntax, MinimalRoundTrip)
{
    BtSpec s = parse_btf("((BehaviorTree :name t (Action :ID a)))");
    std::string once = emit_canonical(s);
    EXPECT_TRUE(parse_btf(once).same_ast(s));
    EXPECT_EQ(emit_canonical(parse_btf(once)), once);
}

class CorpusRoundTrip : public ::testing::TestWithParam<const char*> {};

TEST_P(CorpusRoundTrip, ReparsesToEqualAst)
{
    BtSpec s = parse_btf(corpus_text(GetParam()));
    std::string text = emit_canonical(s);
    BtSpec back = parse_btf(text);
    EXPECT_TRUE(back.same_ast(s));
    EXPECT_EQ(emit_canonical(back), text);
    EXPECT_NO_THROW(load_spec(text));
}

INSTANTIATE_TEST_SUITE_P(Corpus, CorpusRoundTrip,
                         ::testing::Values("drone.btf", "drone_reduced.btf", "drone_simple.btf", "mars_rover.btf",
                                           "nav2.btf", "recovery.btf", "roundrobin.btf"));

TEST(Syntax, ReaderErrorsCarryPositions)
{
    try {
        parse_btf("((BehaviorTree\n  (Action :ID a)");
        FAIL() << "accepted";
    } catch (const ParseError& e) {
        EXPECT_GE(e.pos().line, 1);
    }
    EXPECT_THROW(parse_btf("((BehaviorTree (Action :ID a))))"), ParseError);
    EXPECT_THROW(parse_btf("((Frobnicate (Action)))"), ParseError);
}

// Random single-character edits of corpus files: the loader either accepts
// the text or reports ParseError/SemanticErrors, never anything else.
TEST(Syntax, MutationFuzz)
{
    const std::string alphabet = "() :;\n\"abc$.0123456789-~=+*";
    std::mt19937_64 rng(7);
    int accepted = 0, rejected = 0;
    for (const char* file : {"drone.btf", "mars_rover.btf", "nav2.btf", "recovery.btf"}) {
        std::string base = corpus_text(file);
        for (int i = 0; i < 300; ++i) {
            std::string text = base;
            int edits = 1 + static_cast<int>(rng() % 3);
            for (int e = 0; e < edits; ++e) {
                std::size_t at = rng() % text.size();
                switch (rng() % 3) {
                case 0: text.erase(at, 1); break;
                case 1: text.insert(at, 1, alphabet[rng() % alphabet.size()]); break;
                default: text[at] = alphabet[rng() % alphabet.size()]; break;
                }
            }
            try {
                load_spec(text);
                ++accepted;
            } catch (const ParseError&) {
                ++rejected;
            } catch (const SemanticErrors& se) {
                EXPECT_FALSE(se.errors().empty());
                ++rejected;
            }
        }
    }
    EXPECT_GT(rejected, 0);
    EXPECT_GT(accepted + rejected, 0);
}

TEST(Syntax, EvalExpressions)
{
    ValidatedSpec v = load_spec(R"(((defsv fls :init 0 :min 0 :max 3)
      (BehaviorTree (Sequence (Eval (:= fls (+ 1 fls))) (Eval (= fls 1))))))");
    const Node& seq = v.spec.trees[0].children[0];
    ASSERT_TRUE(seq.children[0].expr);
    EXPECT_EQ(seq.children[0].expr->op, Expr::Op::Assign);
    EXPECT_EQ(seq.children[1].expr->op, Expr::Op::Eq);
    EXPECT_EQ(seq.children[1].expr->args[0].op, Expr::Op::SvRef);
}
