#include "btmc/script.hpp"

#include <sstream>
#include <type_traits>

namespace btmc {

using syntax::ParseError;

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL)
{
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::vector<std::string> words(std::string_view line)
{
    std::vector<std::string> out;
    std::istringstream is{std::string(line)};
    for (std::string w; is >> w;) out.push_back(w);
    return out;
}

Status parse_outcome(const std::string& w, int line, bool running_ok)
{
    auto st = parse_status(w);
    if (!st || *st == Status::NoRet || *st == Status::HaltMe || (!running_ok && *st == Status::Running))
        throw ParseError({line, 1}, "bad outcome '" + w + "'");
    return *st;
}

int parse_count(const std::string& w, int line, int min)
{
    try {
        std::size_t used = 0;
        int v = std::stoi(w, &used);
        if (used == w.size() && v >= min) return v;
    } catch (...) {
    }
    throw ParseError({line, 1}, "expected an integer >= " + std::to_string(min) + ", got '" + w + "'");
}

}  // namespace

OutcomeScript parse_script(std::string_view text)
{
    OutcomeScript s;
    std::istringstream in{std::string(text)};
    int line = 0;
    for (std::string raw; std::getline(in, raw);) {
        ++line;
        if (auto h = raw.find('#'); h != std::string::npos) raw.resize(h);
        auto w = words(raw);
        if (w.empty()) continue;
        auto need = [&](std::size_t n, const char* shape) {
            if (w.size() != n) throw ParseError({line, 1}, std::string("expected '") + shape + "'");
        };
        if (w[0] == "default") {
            if (w.size() >= 2 && w[1] == "action") {
                need(5, "default action <status> latency <t>");
                if (w[3] != "latency") throw ParseError({line, 1}, "expected 'latency'");
                s.default_action = ActionOutcome{parse_outcome(w[2], line, false), parse_count(w[4], line, 0)};
            } else if (w.size() >= 2 && w[1] == "condition") {
                need(3, "default condition <status>");
                s.default_condition = parse_outcome(w[2], line, false);
            } else if (w.size() >= 2 && w[1] == "setsv") {
                need(4, "default setsv <sv> <value>");
                if (!s.default_setsv.emplace(w[2], w[3]).second)
                    throw ParseError({line, 1}, "duplicate default for " + w[2]);
            } else {
                throw ParseError({line, 1}, "expected 'default action', 'default condition' or 'default setsv'");
            }
            continue;
        }
        bool is_env = w[0] == "env";
        const char* counter = is_env ? "tick" : "ordinal";
        if (w.size() < 6 || w[2] != counter || w[4] != "->")
            throw ParseError({line, 1}, "expected '" + w[0] + " <name> " + counter + " <k> -> <outcome>'");
        OutcomeScript::Key key{w[1], parse_count(w[3], line, is_env ? 1 : 1)};
        auto fresh = [&](bool inserted) {
            if (!inserted) throw ParseError({line, 1}, "duplicate entry for " + w[1] + " " + w[3]);
        };
        if (w[0] == "node") {
            need(8, "node <name> ordinal <k> -> <status> latency <t>");
            if (w[6] != "latency") throw ParseError({line, 1}, "expected 'latency'");
            fresh(s.actions.emplace(key, ActionOutcome{parse_outcome(w[5], line, false), parse_count(w[7], line, 0)}).second);
        } else if (w[0] == "condition") {
            need(6, "condition <name> ordinal <k> -> <status>");
            fresh(s.conditions.emplace(key, parse_outcome(w[5], line, false)).second);
        } else if (w[0] == "setsv") {
            need(6, "setsv <sv> ordinal <k> -> <value>");
            fresh(s.setsv.emplace(key, w[5]).second);
        } else if (is_env) {
            need(6, "env <sv> tick <t> -> <value>");
            fresh(s.env.emplace(key, w[5]).second);
        } else {
            throw ParseError({line, 1}, "unknown entry kind '" + w[0] + "'");
        }
    }
    return s;
}

std::string emit_script(const OutcomeScript& s)
{
    std::ostringstream os;
    if (s.default_action)
        os << "default action " << to_string(s.default_action->status) << " latency " << s.default_action->latency << "\n";
    if (s.default_condition) os << "default condition " << to_string(*s.default_condition) << "\n";
    for (const auto& [sv, v] : s.default_setsv) os << "default setsv " << sv << " " << v << "\n";
    for (const auto& [k, v] : s.actions)
        os << "node " << k.first << " ordinal " << k.second << " -> " << to_string(v.status) << " latency " << v.latency << "\n";
    for (const auto& [k, v] : s.conditions)
        os << "condition " << k.first << " ordinal " << k.second << " -> " << to_string(v) << "\n";
    for (const auto& [k, v] : s.setsv) os << "setsv " << k.first << " ordinal " << k.second << " -> " << v << "\n";
    for (const auto& [k, v] : s.env) os << "env " << k.first << " tick " << k.second << " -> " << v << "\n";
    return os.str();
}

std::vector<std::int64_t> sv_targets(const syntax::SvDecl& sv, std::int64_t current)
{
    std::vector<std::int64_t> out;
    if (sv.kind == syntax::SvDecl::Kind::BoundedNat) {
        for (std::int64_t v = sv.min; v <= sv.max; ++v) out.push_back(v);
        return out;
    }
    for (std::size_t v = 0; v < sv.states.size(); ++v)
        if (sv.allows(static_cast<int>(current), static_cast<int>(v))) out.push_back(static_cast<std::int64_t>(v));
    return out;
}

namespace {

std::vector<ScriptCursor::NodeRef> node_refs(const Model& m)
{
    std::vector<ScriptCursor::NodeRef> out;
    for (const NodeInfo& n : m.nodes) out.push_back({n.name, n.id, n.sv});
    return out;
}

std::vector<syntax::SvDecl> sv_decls(const Model& m)
{
    std::vector<syntax::SvDecl> out;
    for (const SvInfo& sv : m.svs) out.push_back(sv.decl);
    return out;
}

}  // namespace

ScriptCursor::ScriptCursor(std::vector<NodeRef> nodes, std::vector<syntax::SvDecl> svs, OutcomeScript script,
                           std::optional<std::uint64_t> seed)
    : nodes_(std::move(nodes)), svs_(std::move(svs)), s_(std::move(script)), seed_(seed)
{
}

ScriptCursor::ScriptCursor(const Model& model, OutcomeScript script, std::optional<std::uint64_t> seed)
    : ScriptCursor(node_refs(model), sv_decls(model), std::move(script), seed)
{
}

std::uint64_t ScriptCursor::draw(std::string_view kind, std::string_view name, int ordinal) const
{
    std::uint64_t h = fnv1a(name, fnv1a(kind));
    return splitmix64(splitmix64(*seed_ ^ h) + static_cast<std::uint64_t>(ordinal));
}

template <class T>
const T* ScriptCursor::find(const std::map<OutcomeScript::Key, T>& table, int node, int& ordinal)
{
    const NodeRef& n = nodes_[static_cast<std::size_t>(node)];
    const char* tag = std::is_same_v<T, Status> ? "c:" : "a:";
    ordinal = ++by_name_[tag + n.name];
    if (auto it = table.find({n.name, ordinal}); it != table.end()) {
        if (n.id != n.name) ++by_id_[tag + n.id];
        return &it->second;
    }
    if (n.id == n.name) return nullptr;
    int k = ++by_id_[tag + n.id];
    if (auto it = table.find({n.id, k}); it != table.end()) return &it->second;
    return nullptr;
}

ActionOutcome ScriptCursor::start_action(int node)
{
    int k = 0;
    const std::string& name = nodes_[static_cast<std::size_t>(node)].name;
    ActionOutcome out;
    if (const ActionOutcome* hit = find(s_.actions, node, k)) {
        out = *hit;
    } else if (s_.default_action) {
        out = *s_.default_action;
    } else if (seed_) {
        std::uint64_t r = draw("action", name, k);
        out.status = r % 4 == 0 ? Status::Failure : Status::Success;
        out.latency = static_cast<int>((r >> 8) % 3);
    } else {
        throw ScriptExhausted("no outcome for action " + name + " ordinal " + std::to_string(k));
    }
    transcript_.actions[{name, k}] = out;
    return out;
}

Status ScriptCursor::check_condition(int node)
{
    int k = 0;
    const std::string& name = nodes_[static_cast<std::size_t>(node)].name;
    Status out;
    if (const Status* hit = find(s_.conditions, node, k)) {
        out = *hit;
    } else if (s_.default_condition) {
        out = *s_.default_condition;
    } else if (seed_) {
        out = draw("condition", name, k) % 4 == 0 ? Status::Failure : Status::Success;
    } else {
        throw ScriptExhausted("no outcome for condition " + name + " ordinal " + std::to_string(k));
    }
    transcript_.conditions[{name, k}] = out;
    return out;
}

std::int64_t ScriptCursor::set_sv(int node, std::int64_t current)
{
    const syntax::SvDecl& sv = svs_[static_cast<std::size_t>(nodes_[static_cast<std::size_t>(node)].sv)];
    int k = ++by_sv_[sv.name];
    auto targets = sv_targets(sv, current);
    std::int64_t v;
    auto it = s_.setsv.find({sv.name, k});
    auto dflt = s_.default_setsv.find(sv.name);
    if (it != s_.setsv.end() || dflt != s_.default_setsv.end()) {
        const std::string& text = it != s_.setsv.end() ? it->second : dflt->second;
        auto parsed = sv.parse_value(text);
        if (!parsed) throw ProviderError("'" + text + "' is not a value of " + sv.name);
        v = *parsed;
    } else if (seed_) {
        v = targets[draw("setsv", sv.name, k) % targets.size()];
    } else {
        throw ScriptExhausted("no value for setsv " + sv.name + " ordinal " + std::to_string(k));
    }
    transcript_.setsv[{sv.name, k}] = sv.value_name(v);
    return v;
}

std::optional<std::int64_t> ScriptCursor::read_env(int svi, std::int64_t current, int tick)
{
    const syntax::SvDecl& sv = svs_[static_cast<std::size_t>(svi)];
    std::optional<std::int64_t> v;
    if (auto it = s_.env.find({sv.name, tick}); it != s_.env.end()) {
        v = sv.parse_value(it->second);
        if (!v) throw ProviderError("'" + it->second + "' is not a value of " + sv.name);
    } else if (seed_) {
        std::uint64_t r = draw("env", sv.name, tick);
        if (r % 4 == 0) {
            std::vector<std::int64_t> others;
            for (std::int64_t t : sv_targets(sv, current))
                if (t != current) others.push_back(t);
            if (!others.empty()) v = others[(r >> 8) % others.size()];
        }
    }
    if (v && *v != current) {
        transcript_.env[{sv.name, tick}] = sv.value_name(*v);
        return v;
    }
    return std::nullopt;
}

}  // namespace btmc
