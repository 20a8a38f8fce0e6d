#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "btmc/model.hpp"
#include "btmc/runtime.hpp"
#include "btmc/syntax.hpp"

namespace btmc::test {

inline std::string corpus(const std::string& file) { return std::string(BTMC_CORPUS) + "/" + file; }

inline std::string slurp(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string corpus_text(const std::string& file) { return slurp(corpus(file)); }

inline syntax::ValidatedSpec spec_of(const std::string& text) { return syntax::load_spec(text); }

inline Model model_of(const std::string& text, CompileOptions opt = {})
{
    return compile(syntax::load_spec(text), opt);
}

/// Runs `model` on a virtual clock against a script in its text form.
inline RunResult run_text(const Model& model, const std::string& script, int max_ticks,
                          std::optional<std::uint64_t> seed = std::nullopt)
{
    ScriptedProvider provider(model, parse_script(script), seed);
    VirtualClock clock;
    RunConfig cfg;
    cfg.max_ticks = max_ticks;
    return run(model, provider, cfg, clock);
}

/// Observable events as "tick kind node [status]" or "tick sv_changed sv old new".
inline std::vector<std::string> brief(const std::vector<TraceEvent>& events)
{
    std::vector<std::string> out;
    for (const TraceEvent& e : observable(events)) {
        std::string s = std::to_string(e.tick) + " " + std::string(to_string(e.kind));
        if (e.kind == TraceEvent::Kind::SvChanged) s += " " + e.sv + " " + e.old_value + " " + e.new_value;
        else s += " " + e.node;
        if (e.kind == TraceEvent::Kind::Returned || e.kind == TraceEvent::Kind::RootTerminal)
            s += " " + std::string(to_string(e.status));
        out.push_back(s);
    }
    return out;
}

inline bool contains(const std::vector<std::string>& v, const std::string& s)
{
    for (const auto& x : v)
        if (x == s) return true;
    return false;
}

}  // namespace btmc::test
