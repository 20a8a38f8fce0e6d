#include <gtest/gtest.h>

#include "btmc/conformance.hpp"
#include "btmc/interpreter.hpp"
#include "support.hpp"

using namespace btmc;
using namespace btmc::test;

namespace {

bool has_line(const std::vector<TraceEvent>& events, const std::string& line)
{
    return contains(brief(events), line);
}

struct Agreement {
    int runs = 0, differ = 0, nonconforming = 0;
};

// Runtime engine, interpreter and offline model on one script.
void agree(const syntax::ValidatedSpec& spec, const Model& m, const OutcomeScript& script,
           std::optional<std::uint64_t> seed, int max_ticks, Agreement& a)
{
    interp::RunLog log = interp::interpret_script(spec, script, seed, max_ticks);
    ScriptedProvider p(m, script, seed);
    VirtualClock clock;
    RunConfig cfg;
    cfg.max_ticks = max_ticks;
    RunResult r = run(m, p, cfg, clock);
    ObservedRun ob = observed(r);
    ++a.runs;
    if (ob.events != log.events || ob.terminal != log.terminal || ob.ticks != log.ticks ||
        ob.complete != log.error.empty())
        ++a.differ;
    if (!check_conformance(m, ob).ok) ++a.nonconforming;
}

}  // namespace

TEST(Interpreter, SequenceFailsInOneTick)
{
    auto spec = spec_of("((BehaviorTree :name t (Sequence (Condition :name a) (Condition :name b))))");
    auto log = interp::interpret_script(spec, parse_script("condition a ordinal 1 -> success\n"
                                                           "condition b ordinal 1 -> failure"),
                                        std::nullopt, 5);
    EXPECT_EQ(log.terminal, Status::Failure);
    EXPECT_EQ(log.ticks, 1);
}

TEST(Interpreter, RecoveryRetryThenFailure)
{
    auto spec = spec_of(corpus_text("recovery.btf"));
    auto log = interp::interpret_script(spec, parse_script("node action ordinal 1 -> failure latency 1\n"
                                                           "node recov ordinal 1 -> success latency 1\n"
                                                           "node action ordinal 2 -> failure latency 1"),
                                        std::nullopt, 20);
    EXPECT_EQ(log.terminal, Status::Failure);
}

TEST(Interpreter, ReactiveSequenceReevaluates)
{
    auto spec = spec_of("((BehaviorTree :name t (ReactiveSequence :name s (Condition :name a) (Action :name b))))");
    auto log = interp::interpret_script(spec, parse_script("default condition success\n"
                                                           "node b ordinal 1 -> success latency 2"),
                                        std::nullopt, 5);
    auto ev = brief(log.events);
    // a is checked again on every tick before b is resumed
    int checks = 0;
    for (const auto& e : ev) checks += e.find("returned a success") != std::string::npos;
    EXPECT_EQ(checks, 3);
    EXPECT_EQ(log.terminal, Status::Success);
}

TEST(Interpreter, SingleConditionTwoBehaviours)
{
    auto spec = spec_of("((BehaviorTree :name t (Condition :name c)))");
    EXPECT_EQ(interp::enumerate_behaviors(spec, {1, 1000}).size(), 2u);
}

TEST(Interpreter, ParallelHaltBehaviour)
{
    auto spec = spec_of("((BehaviorTree :name t (Parallel :name p :success 1 :halt 1 (Action :name a) "
                        "(Action :name b))))");
    auto all = interp::enumerate_behaviors(spec, {1, 1000});
    bool halted = false;
    for (const auto& seq : all)
        for (const TraceEvent& e : seq) halted |= e.kind == TraceEvent::Kind::Halted;
    EXPECT_TRUE(halted);
    EXPECT_LE(all.size(), 9u);
}

TEST(Interpreter, MarsReachesStormWithPanelsOut)
{
    auto spec = spec_of(corpus_text("mars_rover.btf"));
    bool found = false;
    for (const auto& seq : interp::enumerate_behaviors(spec, {2, 200'000})) {
        bool unfolded = false;
        std::string meteo;
        for (const TraceEvent& e : seq) {
            if (e.kind != TraceEvent::Kind::SvChanged) continue;
            if (e.sv == "panel") unfolded = e.new_value == "Unfolded";
            if (e.sv == "meteo") meteo = e.new_value;
            found |= unfolded && meteo == "Storm";
        }
    }
    EXPECT_TRUE(found);
}

TEST(Interpreter, SvChangesAreEvents)
{
    auto spec = spec_of("((defsv fls :init 0 :min 0 :max 3) (BehaviorTree :name t (Eval (:= fls (+ 1 fls)))))");
    auto log = interp::interpret_script(spec, {}, std::nullopt, 3);
    EXPECT_TRUE(has_line(log.events, "1 sv_changed fls 0 1"));
    EXPECT_EQ(log.terminal, Status::Success);
}

TEST(Interpreter, BudgetEnforced)
{
    auto spec = spec_of(corpus_text("drone.btf"));
    EXPECT_THROW(interp::enumerate_behaviors(spec, {3, 50}), interp::BudgetExceeded);
}

// Every offline behaviour the interpreter enumerates is a path of the model.
class OfflineContainment : public ::testing::TestWithParam<std::pair<const char*, int>> {};

TEST_P(OfflineContainment, BehavioursAreModelPaths)
{
    auto [file, ticks] = GetParam();
    auto spec = spec_of(corpus_text(file));
    Model m = compile(spec);
    auto all = interp::enumerate_behaviors(spec, {ticks, 200'000});
    int bad = 0;
    for (const auto& seq : all) {
        ObservedRun ob;
        ob.events = seq;
        ob.ticks = ticks;
        ob.complete = false;
        if (!check_conformance(m, ob).ok) ++bad;
    }
    EXPECT_GT(all.size(), 1u);
    EXPECT_EQ(bad, 0) << all.size() << " behaviours";
}

INSTANTIATE_TEST_SUITE_P(Corpus, OfflineContainment,
                         ::testing::Values(std::pair{"recovery.btf", 3}, std::pair{"roundrobin.btf", 3},
                                           std::pair{"mars_rover.btf", 2}, std::pair{"drone_simple.btf", 2}));

class ThreeWay : public ::testing::TestWithParam<const char*> {};

TEST_P(ThreeWay, SeededScripts)
{
    auto spec = spec_of(corpus_text(GetParam()));
    Model m = compile(spec);
    Agreement a;
    for (std::uint64_t seed = 1; seed <= 150; ++seed) agree(spec, m, {}, seed, 40, a);
    EXPECT_EQ(a.differ, 0);
    EXPECT_EQ(a.nonconforming, 0);
}

INSTANTIATE_TEST_SUITE_P(Corpus, ThreeWay,
                         ::testing::Values("drone_simple.btf", "drone.btf", "mars_rover.btf", "recovery.btf",
                                           "roundrobin.btf", "nav2.btf"));

class ExhaustiveScripts : public ::testing::TestWithParam<const char*> {};

TEST_P(ExhaustiveScripts, LengthThree)
{
    auto spec = spec_of(corpus_text(GetParam()));
    Model m = compile(spec);
    auto scripts = interp::enumerate_scripts(spec, {3, 200'000});
    Agreement a;
    for (const OutcomeScript& s : scripts) agree(spec, m, s, std::nullopt, 3, a);
    EXPECT_GT(a.runs, 1);
    EXPECT_EQ(a.differ, 0);
    EXPECT_EQ(a.nonconforming, 0);
}

INSTANTIATE_TEST_SUITE_P(Corpus, ExhaustiveScripts,
                         ::testing::Values("recovery.btf", "roundrobin.btf", "mars_rover.btf", "drone_simple.btf"));

// The three-way check must notice a runtime trace the model cannot produce.
TEST(ThreeWayNegative, TamperedTraceRejected)
{
    auto spec = spec_of(corpus_text("recovery.btf"));
    Model m = compile(spec);
    ScriptedProvider p(m, {}, 7);
    VirtualClock clock;
    RunConfig cfg;
    cfg.max_ticks = 10;
    ObservedRun ob = observed(run(m, p, cfg, clock));
    ASSERT_TRUE(check_conformance(m, ob).ok);
    int rejected = 0, tried = 0;
    for (std::size_t i = 0; i < ob.events.size(); ++i) {
        if (ob.events[i].kind != TraceEvent::Kind::Returned) continue;
        ObservedRun bad = ob;
        bad.events[i].status = bad.events[i].status == Status::Success ? Status::Failure : Status::Success;
        ++tried;
        rejected += !check_conformance(m, bad).ok;
        ObservedRun dropped = ob;
        dropped.events.erase(dropped.events.begin() + static_cast<std::ptrdiff_t>(i));
        ++tried;
        rejected += !check_conformance(m, dropped).ok;
    }
    EXPECT_GT(tried, 0);
    EXPECT_EQ(rejected, tried);
}
