// Acceptance suite: one PASS/FAIL line per criterion.
//
// Usage: acceptance CORPUS_DIR BTMC_EXE [--known-fail N]...
// The exit status counts failures other than the listed known ones, so a
// documented disagreement still prints FAIL without breaking the build.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "btmc/conformance.hpp"
#include "btmc/interpreter.hpp"
#include "btmc/properties.hpp"
#include "btmc/runtime.hpp"
#include "btmc/state_space.hpp"

using namespace btmc;
using Wall = std::chrono::steady_clock;

namespace {

std::string corpus_dir, btmc_exe;

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string corpus(const std::string& f) { return slurp(corpus_dir + "/" + f); }

double since(Wall::time_point t0) { return std::chrono::duration<double>(Wall::now() - t0).count(); }

std::string secs(double s)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2fs", s);
    return buf;
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

Model load(const std::string& file, TickSemantics sem = TickSemantics::RootOnly)
{
    CompileOptions opt;
    opt.semantics = sem;
    return compile(syntax::load_spec(corpus(file)), opt);
}

std::vector<Property> props_of(const std::string& file, const Model& m)
{
    auto ps = parse_properties(corpus(file));
    for (Property& p : ps) resolve(p, m);
    return ps;
}

std::string verdicts(const StateGraph& g, const std::vector<Property>& ps, std::vector<Verdict::Value>& out)
{
    std::string s;
    for (const Property& p : ps) {
        Verdict v = check(g, p);
        out.push_back(v.value);
        s += (s.empty() ? "" : " ") + std::string(to_string(v.value));
    }
    return s;
}

// ---- 1 --------------------------------------------------------------------------

Outcome mars()
{
    auto t0 = Wall::now();
    Model m = load("mars_rover.btf");
    StateGraph g = explore(m);
    auto ps = props_of("mars_rover.props", m);
    Verdict v = check(g, ps.at(0));
    bool replays = v.witness && replay(m, g, *v.witness) && ps[0].p.eval(g.values(v.witness->states.back()).data());
    double t = since(t0);
    Outcome o;
    o.pass = g.complete() && v.value == Verdict::Value::False && replays && t < 60 && g.size() < 500'000;
    o.detail = "panels_storm " + std::string(to_string(v.value)) + ", witness " +
               (replays ? "replays (" + std::to_string(v.witness->labels.size()) + " steps)" : "missing") + ", " +
               std::to_string(g.size()) + " states, " + secs(t);
    return o;
}

// ---- 2, 3 -----------------------------------------------------------------------

Outcome suite(const std::string& tree, const std::string& props, std::vector<Verdict::Value> want)
{
    auto t0 = Wall::now();
    Model m = load(tree);
    StateGraph g = explore(m);
    std::vector<Verdict::Value> got;
    std::string s = verdicts(g, props_of(props, m), got);
    double t = since(t0);
    return {g.complete() && got == want && t < 10, s + ", " + secs(t)};
}

// ---- 4, 5 -----------------------------------------------------------------------

struct Drone {
    Model m = load("drone_reduced.btf");
    StateGraph g = explore(m);
};

Outcome drone_defaults(const Drone& d)
{
    auto t0 = Wall::now();
    std::map<std::string, bool> want;
    want[d.m.nodes[static_cast<std::size_t>(d.m.node_index("start_drone_btn4"))].name] = false;
    want[d.m.nodes[static_cast<std::size_t>(d.m.node_index("start_camera_btn5"))].name] = false;
    // Children of the halting ReactiveSequence after its first branch.
    int rs = -1;
    for (int i = 0; i < d.m.node_count(); ++i)
        if (d.m.nodes[static_cast<std::size_t>(i)].kind == syntax::NodeKind::ReactiveSequence) rs = i;
    if (rs < 0) return {false, "no ReactiveSequence"};
    const auto& kids = d.m.nodes[static_cast<std::size_t>(rs)].children;
    for (std::size_t i = 1; i < kids.size(); ++i) want[d.m.nodes[static_cast<std::size_t>(kids[i])].name] = true;

    bool ok = d.g.complete();
    std::string s;
    int found = 0;
    for (const Property& p : default_properties(d.m)) {
        for (const auto& [node, expect] : want) {
            if (p.name != node + "_can_be_halted") continue;
            ++found;
            Verdict v = check(d.g, p);
            ok &= v.value == (expect ? Verdict::Value::True : Verdict::Value::False);
            s += (s.empty() ? "" : ", ") + node + " " + std::string(to_string(v.value));
        }
    }
    ok &= found == static_cast<int>(want.size());
    return {ok, "halted: " + s + ", " + secs(since(t0))};
}

Outcome drone_named(const Drone& d)
{
    auto t0 = Wall::now();
    auto ps = props_of("drone_reduced.props", d.m);
    bool ok = d.g.complete() && ps.size() == 5;
    std::string s;
    for (const Property& p : ps) {
        Verdict v = check(d.g, p);
        // The published verdicts are TRUE for all five.
        ok &= v.value == Verdict::Value::True;
        s += (s.empty() ? "" : ", ") + p.name + " " + std::string(to_string(v.value));
    }
    return {ok, s + ", " + secs(since(t0))};
}

// ---- 6 --------------------------------------------------------------------------

Outcome drone_timed()
{
    auto t0 = Wall::now();
    Model m = load("drone_reduced.btf", TickSemantics::AllNodes);
    StateGraph g = explore(m);
    auto ps = props_of("drone_timed.props", m);
    std::vector<Verdict::Value> got;
    std::string s = verdicts(g, ps, got);
    return {g.complete() && got == std::vector<Verdict::Value>{Verdict::Value::True},
            "within [0,2] " + s + ", " + std::to_string(g.size()) + " states, " + secs(since(t0))};
}

// ---- 7 --------------------------------------------------------------------------

Outcome three_way()
{
    auto t0 = Wall::now();
    const std::array<const char*, 6> trees{"drone_simple.btf", "drone.btf", "mars_rover.btf",
                                           "recovery.btf",     "roundrobin.btf", "nav2.btf"};
    long runs = 0, differ = 0, nonconforming = 0, exhaustive = 0;
    auto one = [&](const syntax::ValidatedSpec& spec, const Model& m, const OutcomeScript& s,
                   std::optional<std::uint64_t> seed, int ticks) {
        interp::RunLog log = interp::interpret_script(spec, s, seed, ticks);
        ScriptedProvider p(m, s, seed);
        VirtualClock clock;
        RunConfig cfg;
        cfg.max_ticks = ticks;
        ObservedRun ob = observed(run(m, p, cfg, clock));
        ++runs;
        if (ob.events != log.events || ob.terminal != log.terminal || ob.ticks != log.ticks ||
            ob.complete != log.error.empty())
            ++differ;
        if (!check_conformance(m, ob).ok) ++nonconforming;
    };
    for (const char* file : trees) {
        auto spec = syntax::load_spec(corpus(file));
        Model m = compile(spec);
        for (std::uint64_t seed = 1; seed <= 1000; ++seed) one(spec, m, {}, seed, 40);
        int leaves = 0;
        for (const NodeInfo& n : m.nodes) leaves += syntax::is_leaf(n.kind);
        if (leaves <= 6) {
            for (const OutcomeScript& s : interp::enumerate_scripts(spec, {3, 200'000})) {
                one(spec, m, s, std::nullopt, 3);
                ++exhaustive;
            }
        }
    }
    return {differ == 0 && nonconforming == 0,
            std::to_string(runs) + " runs (" + std::to_string(exhaustive) + " exhaustive), " +
                std::to_string(differ) + " disagreements, " + std::to_string(nonconforming) +
                " not in the model, " + secs(since(t0))};
}

// ---- 8 --------------------------------------------------------------------------

Outcome parallel_oracle()
{
    auto t0 = Wall::now();
    int cases = 0, wrong = 0;
    for (int n = 1; n <= 4; ++n) {
        for (int m = 1; m <= n; ++m) {
            std::string btf = "((BehaviorTree :name t (Parallel :name p :success " + std::to_string(m);
            for (int i = 0; i < n; ++i) btf += " (Action :name c" + std::to_string(i) + ")";
            btf += ")))";
            Model model = compile(syntax::load_spec(btf));
            int total = static_cast<int>(std::pow(3, n));
            for (int code = 0; code < total; ++code) {
                OutcomeScript s;
                int succ = 0, fail = 0;
                for (int i = 0, c = code; i < n; ++i, c /= 3) {
                    ActionOutcome a{c % 3 == 1 ? Status::Failure : Status::Success, c % 3 == 2 ? 50 : 1};
                    succ += c % 3 == 0;
                    fail += c % 3 == 1;
                    s.actions[{"c" + std::to_string(i), 1}] = a;
                }
                Status want = succ >= m ? Status::Success : fail > n - m ? Status::Failure : Status::Running;
                ScriptedProvider p(model, s, std::nullopt);
                VirtualClock clock;
                RunConfig cfg;
                cfg.max_ticks = 2;
                RunResult r = run(model, p, cfg, clock);
                std::optional<Status> got;
                for (const TraceEvent& e : r.trace.events)
                    if (e.tick == 2 && e.kind == TraceEvent::Kind::Returned && e.node == "p") got = e.status;
                wrong += got != want;
                ++cases;
            }
        }
    }
    double t = since(t0);
    return {wrong == 0 && t < 1.0, std::to_string(cases) + " assignments, " + std::to_string(wrong) + " wrong, " +
                                       secs(t)};
}

// ---- 9 --------------------------------------------------------------------------

Outcome pacing()
{
    Model m = load("drone.btf");
    // Every action completes at once except takeoff, which keeps the mission
    // running for the whole window.
    OutcomeScript s = parse_script("default action success latency 0\n"
                                   "default condition success\n"
                                   "default setsv battery Good\n"
                                   "node takeoff ordinal 1 -> success latency 1000\n");
    ScriptedProvider p(m, s, std::nullopt);
    SteadyClock clock;
    RunConfig cfg;
    cfg.tick_ms = 100;
    cfg.max_ticks = 50;
    auto t0 = Wall::now();
    RunResult r = run(m, p, cfg, clock);
    double wall = since(t0);
    int ticks = 0;
    double prev = -1, jitter = 0;
    bool monotone = true;
    for (const TraceEvent& e : r.trace.events) {
        if (e.kind != TraceEvent::Kind::Tick) continue;
        ++ticks;
        monotone &= e.ts_ms > prev;
        prev = e.ts_ms;
        jitter = std::max(jitter, std::abs(e.ts_ms - 100.0 * e.tick));
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "%d ticks in %.3fs, max jitter %.2fms, %s", ticks, wall, jitter,
                  monotone ? "monotone" : "NOT monotone");
    return {ticks == 50 && r.outcome == RunOutcome::Stopped && std::abs(wall - 5.0) <= 0.5 && monotone &&
                jitter < 50,
            buf};
}

// ---- 10 -------------------------------------------------------------------------

std::string capture(const std::string& cmd, int& status)
{
    std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen((cmd + " 2>/dev/null").c_str(), "r"), pclose);
    std::string out;
    if (!pipe) {
        status = -1;
        return out;
    }
    std::array<char, 4096> buf;
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe.get())) > 0) out.append(buf.data(), n);
    status = pclose(pipe.release());
    return out;
}

Outcome determinism()
{
    auto t0 = Wall::now();
    std::string c = corpus_dir + "/";
    std::vector<std::string> cmds = {
        "check " + c + "mars_rover.btf --props " + c + "mars_rover.props",
        "check " + c + "recovery.btf --props " + c + "recovery.props",
        "check " + c + "roundrobin.btf --default-props --props " + c + "roundrobin.props",
        "run " + c + "drone.btf --seed 42 --clock virtual",
        "run " + c + "mars_rover.btf --seed 7 --clock virtual --format jsonl",
        "run " + c + "drone.btf --script " + c + "drone_survey.script --clock virtual",
    };
    int same = 0;
    std::size_t bytes = 0;
    for (const std::string& args : cmds) {
        int s1 = 0, s2 = 0;
        std::string a = capture("'" + btmc_exe + "' " + args, s1);
        std::string b = capture("'" + btmc_exe + "' " + args, s2);
        if (!a.empty() && a == b && s1 == s2) ++same;
        bytes += a.size();
    }
    return {same == static_cast<int>(cmds.size()),
            std::to_string(same) + "/" + std::to_string(cmds.size()) + " invocations byte-identical (" +
                std::to_string(bytes) + " bytes), " + secs(since(t0))};
}

}  // namespace

int main(int argc, char** argv)
{
    if (argc < 3) {
        std::cerr << "usage: acceptance CORPUS_DIR BTMC_EXE [--known-fail N]...\n";
        return 2;
    }
    corpus_dir = argv[1];
    btmc_exe = argv[2];
    std::set<int> known;
    for (int i = 3; i + 1 < argc; i += 2)
        if (std::string(argv[i]) == "--known-fail") known.insert(std::stoi(argv[i + 1]));

    std::unique_ptr<Drone> drone;
    auto shared_drone = [&]() -> const Drone& {
        if (!drone) drone = std::make_unique<Drone>();
        return *drone;
    };
    std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"mars-rover verdict", mars},
        {"recovery suite",
         [] {
             using V = Verdict::Value;
             return suite("recovery.btf", "recovery.props", {V::True, V::False, V::True, V::True});
         }},
        {"roundrobin suite",
         [] {
             using V = Verdict::Value;
             return suite("roundrobin.btf", "roundrobin.props", {V::False, V::True, V::True, V::True});
         }},
        {"drone default properties", [&] { return drone_defaults(shared_drone()); }},
        {"drone named properties", [&] { return drone_named(shared_drone()); }},
        {"timed property", [&] {
             drone.reset();
             return drone_timed();
         }},
        {"three-way agreement", three_way},
        {"parallel threshold oracle", parallel_oracle},
        {"runtime pacing", pacing},
        {"determinism", determinism},
    };

    int unexpected = 0, passed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        int id = static_cast<int>(i) + 1;
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.pass ? "PASS" : "FAIL") << " " << id << " " << criteria[i].first << ": " << o.detail;
        if (!o.pass && known.count(id)) std::cout << " [known]";
        std::cout << std::endl;
        passed += o.pass;
        unexpected += !o.pass && !known.count(id);
    }
    std::cout << passed << "/" << criteria.size() << " criteria passed" << std::endl;
    return unexpected;
}
