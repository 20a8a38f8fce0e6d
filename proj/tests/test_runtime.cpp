#include <algorithm>
#include <chrono>
#include <thread>

#include <gtest/gtest.h>

#include "btmc/runtime.hpp"
#include "support.hpp"

using namespace btmc;
using namespace btmc::test;

namespace {

std::vector<std::string> of_node(const std::vector<std::string>& ev, const std::string& node)
{
    std::vector<std::string> out;
    for (const auto& e : ev) {
        auto sp = e.find(' ');
        auto sp2 = e.find(' ', sp + 1);
        if (sp2 == std::string::npos) continue;
        std::string rest = e.substr(sp2 + 1);
        if (rest == node || rest.rfind(node + " ", 0) == 0) out.push_back(e.substr(sp + 1));
    }
    return out;
}

int count_of(const std::vector<std::string>& ev, const std::string& s)
{
    return static_cast<int>(std::count(ev.begin(), ev.end(), s));
}

// Actions finish on a worker thread a few milliseconds after they start.
class ThreadedProvider : public ActionProvider {
public:
    ~ThreadedProvider() override
    {
        for (auto& t : workers_) t.join();
    }
    void start_action(std::uint64_t handle, const LeafCall&, CompletionSink& sink) override
    {
        workers_.emplace_back([handle, &sink] {
            std::this_thread::sleep_for(std::chrono::milliseconds(3));
            sink.complete(handle, Status::Success);
        });
    }
    void halt_action(std::uint64_t) override {}
    Status check_condition(const LeafCall&) override { return Status::Success; }
    std::int64_t set_sv(const LeafCall&, const SvInfo&, std::int64_t current) override { return current; }

private:
    std::vector<std::thread> workers_;
};

// Each boundary takes longer than the tick period.
class SlowProvider : public ScriptedProvider {
public:
    SlowProvider(const Model& m, VirtualClock& c) : ScriptedProvider(m, parse_script("default action success latency 3"), {}), c_(c) {}
    void on_tick(int tick, CompletionSink& sink) override
    {
        c_.advance(150);
        ScriptedProvider::on_tick(tick, sink);
    }

private:
    VirtualClock& c_;
};

}  // namespace

TEST(Runtime, SingleActionProtocol)
{
    Model m = model_of("((BehaviorTree :name t (Action :name a)))");
    RunResult r = run_text(m, "node a ordinal 1 -> success latency 1", 5);
    EXPECT_EQ(r.outcome, RunOutcome::Success);
    EXPECT_EQ(r.ticks, 2);
    auto ev = brief(r.trace.events);
    EXPECT_EQ(of_node(ev, "a"), (std::vector<std::string>{"ticked a", "returned a running", "ticked a",
                                                           "returned a success"}));
    EXPECT_EQ(ev.back(), "2 root_terminal t success");
}

TEST(Runtime, LatencyGivesRunningEvents)
{
    Model m = model_of("((BehaviorTree :name t (Action :name goto_waypoint)))");
    RunResult r = run_text(m, "node goto_waypoint ordinal 1 -> success latency 5", 20);
    auto ev = brief(r.trace.events);
    EXPECT_EQ(count_of(of_node(ev, "goto_waypoint"), "returned goto_waypoint running"), 5);
    EXPECT_TRUE(contains(ev, "6 returned goto_waypoint success"));
    EXPECT_EQ(r.ticks, 6);
}

TEST(Runtime, ZeroTicksIsHeaderOnly)
{
    Model m = model_of("((BehaviorTree :name t (Action :name a)))");
    RunResult r = run_text(m, "", 0);
    EXPECT_EQ(r.outcome, RunOutcome::Stopped);
    EXPECT_TRUE(r.trace.events.empty());
    std::string text = emit_trace(r.trace, TraceFormat::Lines);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
    EXPECT_EQ(parse_trace(text, TraceFormat::Lines), r.trace);
}

TEST(Runtime, TickTimestamps)
{
    Model m = model_of("((BehaviorTree :name t (Action :name a)))");
    ScriptedProvider p(m, parse_script("default action success latency 100"), {});
    VirtualClock clock;
    RunConfig cfg;
    cfg.tick_ms = 40;
    cfg.max_ticks = 6;
    RunResult r = run(m, p, cfg, clock);
    int k = 0;
    for (const TraceEvent& e : r.trace.events)
        if (e.kind == TraceEvent::Kind::Tick) EXPECT_DOUBLE_EQ(e.ts_ms, 40.0 * ++k);
    EXPECT_EQ(k, 6);
}

TEST(Runtime, OverrunReported)
{
    Model m = model_of("((BehaviorTree :name t (Action :name a)))");
    VirtualClock clock;
    SlowProvider p(m, clock);
    RunConfig cfg;
    cfg.max_ticks = 3;
    RunResult r = run(m, p, cfg, clock);
    int overruns = 0;
    for (const TraceEvent& e : r.trace.events) overruns += e.kind == TraceEvent::Kind::TickOverrun;
    EXPECT_GT(overruns, 0);
}

TEST(Runtime, MissingDecisionIsProviderError)
{
    Model m = model_of("((BehaviorTree :name t (Sequence (Action :name a) (Condition :name c))))");
    RunResult r = run_text(m, "node a ordinal 1 -> success latency 1", 10);
    EXPECT_EQ(r.outcome, RunOutcome::ProviderError);
    EXPECT_FALSE(r.error.empty());
    EXPECT_FALSE(r.trace.events.empty());
}

TEST(Runtime, WorkerThreadCompletions)
{
    Model m = model_of("((BehaviorTree :name t (Sequence (Action :name a) (Action :name b))))");
    ThreadedProvider p;
    SteadyClock clock;
    RunConfig cfg;
    cfg.tick_ms = 20;
    cfg.max_ticks = 20;
    RunResult r = run(m, p, cfg, clock);
    EXPECT_EQ(r.outcome, RunOutcome::Success);
    EXPECT_EQ(r.ticks, 3);
}

TEST(Runtime, DroneSurvey)
{
    Model m = model_of(corpus_text("drone.btf"));
    ScriptedProvider p(m, parse_script(corpus_text("drone_survey.script")), {});
    VirtualClock clock;
    RunConfig cfg;
    cfg.max_ticks = 200;
    RunResult r = run(m, p, cfg, clock);
    EXPECT_EQ(r.outcome, RunOutcome::Success);
    auto ev = brief(r.trace.events);
    bool camera = false, repeat_halted = false;
    for (const auto& e : ev) {
        camera |= e.find("returned camera_track success") != std::string::npos;
        repeat_halted |= e.find("halted Repeat") != std::string::npos;
    }
    EXPECT_TRUE(camera);
    EXPECT_TRUE(repeat_halted);
    EXPECT_GT(p.halts(), 0);
    EXPECT_EQ(r.trace.events.back().kind, TraceEvent::Kind::RootTerminal);
    EXPECT_EQ(r.trace.events.back().status, Status::Success);
}

TEST(Runtime, DroneFaults)
{
    Model m = model_of(corpus_text("drone.btf"));
    for (auto [script, land] : {std::pair{"drone_battery.script", "land_btn13"}, {"drone_localization.script", "land_btn21"}}) {
        RunResult r = run_text(m, corpus_text(script), 200);
        EXPECT_EQ(r.outcome, RunOutcome::Failure) << script;
        bool ticked = false;
        for (const auto& e : brief(r.trace.events)) ticked |= e.find(std::string("ticked ") + land) != std::string::npos;
        EXPECT_TRUE(ticked) << script;
        EXPECT_EQ(r.trace.events.back().kind, TraceEvent::Kind::RootTerminal);
    }
}

TEST(Runtime, SeededRunsAreReproducible)
{
    Model m = model_of(corpus_text("mars_rover.btf"));
    for (std::uint64_t seed : {1u, 2u, 99u}) {
        RunResult a = run_text(m, "", 30, seed), b = run_text(m, "", 30, seed);
        EXPECT_EQ(emit_trace(a.trace, TraceFormat::Jsonl), emit_trace(b.trace, TraceFormat::Jsonl));
    }
    EXPECT_NE(emit_trace(run_text(m, "", 30, 1).trace, TraceFormat::Lines),
              emit_trace(run_text(m, "", 30, 2).trace, TraceFormat::Lines));
}

TEST(Runtime, TranscriptReplaysRun)
{
    for (const char* file : {"drone.btf", "mars_rover.btf", "nav2.btf", "roundrobin.btf"}) {
        Model m = model_of(corpus_text(file));
        for (std::uint64_t seed = 1; seed <= 10; ++seed) {
            ScriptedProvider p(m, {}, seed);
            VirtualClock clock;
            RunConfig cfg;
            cfg.max_ticks = 30;
            RunResult a = run(m, p, cfg, clock);
            OutcomeScript transcript = parse_script(emit_script(p.transcript()));
            EXPECT_EQ(transcript, p.transcript());
            ScriptedProvider q(m, transcript, std::nullopt);
            VirtualClock clock2;
            RunResult b = run(m, q, cfg, clock2);
            EXPECT_EQ(a.trace, b.trace) << file << " seed " << seed;
        }
    }
}

TEST(Trace, RoundTripBothFormats)
{
    for (const char* file : {"drone.btf", "mars_rover.btf", "recovery.btf"}) {
        Model m = model_of(corpus_text(file));
        RunResult r = run_text(m, "", 25, 4);
        for (TraceFormat f : {TraceFormat::Lines, TraceFormat::Jsonl}) {
            std::string text = emit_trace(r.trace, f);
            ExecutionTrace back = parse_trace(text, f);
            EXPECT_EQ(back, r.trace);
            EXPECT_EQ(emit_trace(back, f), text);
        }
    }
}

TEST(Trace, MalformedInputRejected)
{
    EXPECT_THROW(parse_trace("# btmc trace t\n1 x.y tick\n", TraceFormat::Lines), syntax::ParseError);
    EXPECT_THROW(parse_trace("# btmc trace t\n1 100.000 frobbed a\n", TraceFormat::Lines), syntax::ParseError);
    EXPECT_THROW(parse_trace("{\"format\":\"btmc-trace\",\"version\":1,\"model\":\"t\"}\n{\"tick\":\n",
                             TraceFormat::Jsonl),
                 syntax::ParseError);
}

TEST(Script, ParseEmitRoundTrip)
{
    const char* text = "# comment\n"
                       "default action failure latency 2\n"
                       "default condition success\n"
                       "default setsv battery Low\n"
                       "node takeoff ordinal 1 -> success latency 4\n"
                       "condition localization_ok ordinal 3 -> failure\n"
                       "setsv battery ordinal 2 -> Critical\n"
                       "env meteo tick 5 -> Storm\n";
    OutcomeScript s = parse_script(text);
    EXPECT_EQ(s.actions.at({"takeoff", 1}), (ActionOutcome{Status::Success, 4}));
    EXPECT_EQ(s.conditions.at({"localization_ok", 3}), Status::Failure);
    EXPECT_EQ(s.setsv.at({"battery", 2}), "Critical");
    EXPECT_EQ(s.env.at({"meteo", 5}), "Storm");
    EXPECT_EQ(s.default_action, (ActionOutcome{Status::Failure, 2}));
    EXPECT_EQ(s.default_setsv.at("battery"), "Low");
    EXPECT_EQ(parse_script(emit_script(s)), s);
    EXPECT_THROW(parse_script("node a ordinal x -> success latency 1"), syntax::ParseError);
    EXPECT_THROW(parse_script("node a ordinal 1 -> running latency 1"), syntax::ParseError);
}
