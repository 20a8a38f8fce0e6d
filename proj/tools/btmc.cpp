// btmc: compile, check, run and export Behavior-Tree models.
//
// Exit codes: 0 ok, 1 input or model errors (run: root Failure), 2 missing
// file or bad usage, 3 a verdict contradicts its `expect:` annotation,
// 4 an exploration limit was hit, 5 run stopped at --max-ticks, 6 provider
// error during a run.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "btmc/model.hpp"
#include "btmc/properties.hpp"
#include "btmc/runtime.hpp"
#include "btmc/state_space.hpp"

namespace fs = std::filesystem;
using namespace btmc;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kMissingFile = 2;
constexpr int kExpectMismatch = 3;
constexpr int kLimit = 4;
constexpr int kStopped = 5;
constexpr int kProviderError = 6;

struct MissingFile : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingFile("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

struct Common {
    std::string input;
    std::string semantics = "root";
    std::string tree;
};

Model load_model(const Common& c)
{
    auto spec = syntax::load_spec(slurp(c.input));
    for (const auto& w : spec.warnings) std::cerr << c.input << ": warning: " << w.path << ": " << w.message << "\n";
    CompileOptions opt;
    opt.semantics = *parse_tick_semantics(c.semantics);
    return compile(spec, opt, c.tree);
}

void add_common(CLI::App* cmd, Common& c)
{
    cmd->add_option("input", c.input, "Behavior-Tree file (.btf)")->required();
    cmd->add_option("--tick-semantics", c.semantics, "which automata consume a tick")
        ->check(CLI::IsMember({"root", "leaves", "all"}));
    cmd->add_option("--tree", c.tree, "tree to compile (default: the first)");
}

// ---- compile -------------------------------------------------------------------

struct CompileArgs {
    Common c;
    std::string out;
};

int cmd_compile(const CompileArgs& a)
{
    Model m = load_model(a.c);
    if (!a.out.empty()) {
        fs::path dir(a.out);
        write_file(dir / (m.name + ".model"), dump_model(m));
        for (std::size_t p = 0; p < m.processes.size(); ++p)
            write_file(dir / (m.processes[p].name + ".dot"), process_dot(m, static_cast<int>(p)));
    }
    std::cout << m.processes.size() << " processes\n";
    return kOk;
}

// ---- check -----------------------------------------------------------------------

struct CheckArgs {
    Common c;
    std::string props;
    bool defaults = false;
    std::uint64_t max_states = ExploreLimits{}.max_states;
    double max_seconds = ExploreLimits{}.max_seconds;
    std::string out;
    std::string witness_dir;
    bool timings = false;
};

std::string fixed3(double v)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(3) << v;
    return os.str();
}

int cmd_check(const CheckArgs& a)
{
    Model m = load_model(a.c);
    std::vector<Property> props;
    if (!a.props.empty()) {
        props = parse_properties(slurp(a.props));
        for (Property& p : props) resolve(p, m);
    }
    if (a.defaults || a.props.empty()) {
        auto d = default_properties(m);
        props.insert(props.end(), d.begin(), d.end());
    }

    StateGraph g = explore(m, {a.max_states, a.max_seconds});
    std::ostringstream report;
    report << "# " << m.name << ": " << g.size() << " states, " << g.edges.size() << " transitions";
    if (!g.complete()) report << ", incomplete (" << (g.limit == LimitKind::States ? "state" : "time") << " limit)";
    if (a.timings) report << ", " << fixed3(g.seconds) << "s";
    report << "\n";

    fs::path wdir = a.witness_dir;
    if (wdir.empty() && !a.out.empty()) wdir = fs::path(a.out).parent_path() / (m.name + ".witnesses");

    bool mismatch = false, unknown = false;
    for (const Property& p : props) {
        auto t0 = std::chrono::steady_clock::now();
        Verdict v = check(g, p);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report << p.name << " " << to_string(v.value);
        if (a.timings) report << " " << fixed3(secs) << "s";
        if (v.witness && !wdir.empty()) {
            fs::path file = wdir / (p.name + ".trace");
            write_file(file, dump_trace(g, *v.witness));
            report << " " << file.string();
        }
        report << "\n";
        if (v.value == Verdict::Value::Unknown) {
            unknown = true;
            std::cerr << p.name << ": unknown: " << v.reason << "\n";
        } else if (p.expect && *p.expect != (v.value == Verdict::Value::True)) {
            mismatch = true;
            std::cerr << p.name << ": expected " << (*p.expect ? "TRUE" : "FALSE") << ", got "
                      << to_string(v.value) << "\n";
        }
    }
    if (a.out.empty()) std::cout << report.str();
    else write_file(a.out, report.str());
    if (unknown) return kLimit;
    return mismatch ? kExpectMismatch : kOk;
}

// ---- run -------------------------------------------------------------------------

struct RunArgs {
    Common c;
    std::string script;
    std::optional<std::uint64_t> seed;
    double tick_ms = 100.0;
    std::optional<int> max_ticks;
    std::string trace;
    std::string format = "lines";
    std::string clock = "real";
    std::string transcript;
};

int cmd_run(const RunArgs& a)
{
    Common c = a.c;
    Model m = load_model(c);
    OutcomeScript script;
    if (!a.script.empty()) script = parse_script(slurp(a.script));
    ScriptedProvider provider(m, script, a.seed);
    RunConfig cfg;
    cfg.tick_ms = a.tick_ms;
    cfg.max_ticks = a.max_ticks;
    SteadyClock steady;
    VirtualClock virt;
    Clock& clock = a.clock == "virtual" ? static_cast<Clock&>(virt) : steady;
    RunResult r = run(m, provider, cfg, clock);

    std::string text = emit_trace(r.trace, a.format == "jsonl" ? TraceFormat::Jsonl : TraceFormat::Lines);
    if (a.trace.empty()) std::cout << text;
    else write_file(a.trace, text);
    if (!a.transcript.empty()) write_file(a.transcript, emit_script(provider.transcript()));

    std::cerr << "outcome: " << to_string(r.outcome) << " after " << r.ticks << " ticks\n";
    switch (r.outcome) {
    case RunOutcome::Success: return kOk;
    case RunOutcome::Failure: return kInputError;
    case RunOutcome::Stopped: return kStopped;
    case RunOutcome::ProviderError: std::cerr << "provider error: " << r.error << "\n"; return kProviderError;
    }
    return kOk;
}

// ---- graph -----------------------------------------------------------------------

struct GraphArgs {
    Common c;
    std::string process;
    std::uint64_t max_states = ExploreLimits{}.max_states;
    double max_seconds = ExploreLimits{}.max_seconds;
    std::string out;
};

int cmd_graph(const GraphArgs& a)
{
    Model m = load_model(a.c);
    std::string text;
    bool partial = false;
    if (!a.process.empty()) {
        int p = -1;
        for (std::size_t i = 0; i < m.processes.size(); ++i)
            if (m.processes[i].name == a.process) p = static_cast<int>(i);
        if (p < 0) {
            std::cerr << "no process named " << a.process << "\n";
            return kInputError;
        }
        text = process_dot(m, p);
    } else {
        StateGraph g = explore(m, {a.max_states, a.max_seconds});
        partial = !g.complete();
        text = dump_graph(g);
    }
    if (a.out.empty()) std::cout << text;
    else write_file(a.out, text);
    return partial ? kLimit : kOk;
}

void print_diagnostics(const syntax::SemanticErrors& e, const std::string& file)
{
    for (const auto& d : e.errors())
        std::cerr << file << ":" << d.pos.line << ":" << d.pos.column << ": error: " << d.path << ": " << d.message
                  << "\n";
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Behavior-Tree model compiler, checker and runtime"};
    app.require_subcommand(1);

    CompileArgs ca;
    auto* compile_cmd = app.add_subcommand("compile", "compile a tree and report its process count");
    add_common(compile_cmd, ca.c);
    compile_cmd->add_option("--out", ca.out, "directory for the model dump and per-process graphs");

    CheckArgs ka;
    auto* check_cmd = app.add_subcommand("check", "explore the state space and evaluate properties");
    add_common(check_cmd, ka.c);
    check_cmd->add_option("--props", ka.props, "property file");
    check_cmd->add_flag("--default-props", ka.defaults, "also check the per-node default properties");
    check_cmd->add_option("--max-states", ka.max_states, "exploration state limit");
    check_cmd->add_option("--max-seconds", ka.max_seconds, "exploration time limit");
    check_cmd->add_option("--out", ka.out, "verdict report file (default: stdout)");
    check_cmd->add_option("--witness-dir", ka.witness_dir, "directory for witness traces");
    check_cmd->add_flag("--timings", ka.timings, "include timings in the report");

    RunArgs ra;
    auto* run_cmd = app.add_subcommand("run", "execute the tree against a scripted provider");
    add_common(run_cmd, ra.c);
    run_cmd->add_option("--script", ra.script, "outcome script");
    run_cmd->add_option("--seed", ra.seed, "seed for outcomes the script leaves open");
    run_cmd->add_option("--tick-ms", ra.tick_ms, "tick period in milliseconds")->check(CLI::PositiveNumber);
    run_cmd->add_option("--max-ticks", ra.max_ticks, "stop after this many ticks")->check(CLI::NonNegativeNumber);
    run_cmd->add_option("--trace", ra.trace, "trace output file (default: stdout)");
    run_cmd->add_option("--format", ra.format, "trace format")->check(CLI::IsMember({"lines", "jsonl"}));
    run_cmd->add_option("--clock", ra.clock, "real pacing or a virtual clock")
        ->check(CLI::IsMember({"real", "virtual"}));
    run_cmd->add_option("--transcript", ra.transcript, "write every decision taken as an explicit script");

    GraphArgs ga;
    auto* graph_cmd = app.add_subcommand("graph", "export the state graph or one process automaton");
    add_common(graph_cmd, ga.c);
    graph_cmd->add_option("--process", ga.process, "export this process automaton as DOT instead");
    graph_cmd->add_option("--max-states", ga.max_states, "exploration state limit");
    graph_cmd->add_option("--max-seconds", ga.max_seconds, "exploration time limit");
    graph_cmd->add_option("--out", ga.out, "output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kMissingFile;
    }

    std::string input;
    try {
        if (compile_cmd->parsed()) return input = ca.c.input, cmd_compile(ca);
        if (check_cmd->parsed()) return input = ka.c.input, cmd_check(ka);
        if (run_cmd->parsed()) return input = ra.c.input, cmd_run(ra);
        if (graph_cmd->parsed()) return input = ga.c.input, cmd_graph(ga);
    } catch (const MissingFile& e) {
        std::cerr << "btmc: " << e.what() << "\n";
        return kMissingFile;
    } catch (const syntax::SemanticErrors& e) {
        print_diagnostics(e, input);
        return kInputError;
    } catch (const syntax::ParseError& e) {
        std::cerr << input << ":" << e.pos().line << ":" << e.pos().column << ": error: " << e.message() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        std::cerr << "btmc: " << e.what() << "\n";
        return kInputError;
    }
    return kOk;
}
