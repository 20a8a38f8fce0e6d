#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "btmc/runtime.hpp"

namespace btmc {

using syntax::ParseError;

namespace {

constexpr std::pair<TraceEvent::Kind, std::string_view> kKinds[] = {
    {TraceEvent::Kind::Tick, "tick"},
    {TraceEvent::Kind::Ticked, "ticked"},
    {TraceEvent::Kind::Returned, "returned"},
    {TraceEvent::Kind::Halting, "halting"},
    {TraceEvent::Kind::Halted, "halted"},
    {TraceEvent::Kind::SvChanged, "sv_changed"},
    {TraceEvent::Kind::RootTerminal, "root_terminal"},
    {TraceEvent::Kind::TickOverrun, "tick_overrun"},
};

bool has_node(TraceEvent::Kind k)
{
    using K = TraceEvent::Kind;
    return k == K::Ticked || k == K::Returned || k == K::Halting || k == K::Halted || k == K::RootTerminal;
}

bool has_status(TraceEvent::Kind k)
{
    return k == TraceEvent::Kind::Returned || k == TraceEvent::Kind::RootTerminal;
}

std::string fmt_ms(double ms)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3f", ms);
    return buf;
}

Status status_field(const std::string& text, int line)
{
    auto st = parse_status(text);
    if (!st) throw ParseError({line, 1}, "bad status '" + text + "'");
    return *st;
}

}  // namespace

std::string_view to_string(TraceEvent::Kind k)
{
    for (auto [kind, text] : kKinds)
        if (kind == k) return text;
    return "?";
}

std::optional<TraceEvent::Kind> parse_event_kind(std::string_view text)
{
    for (auto [kind, t] : kKinds)
        if (t == text) return kind;
    return std::nullopt;
}

std::vector<TraceEvent> observable(const std::vector<TraceEvent>& events)
{
    std::vector<TraceEvent> out;
    for (TraceEvent e : events) {
        if (e.kind == TraceEvent::Kind::Tick || e.kind == TraceEvent::Kind::TickOverrun) continue;
        e.ts_ms = 0.0;
        out.push_back(std::move(e));
    }
    return out;
}

std::string emit_trace(const ExecutionTrace& trace, TraceFormat format)
{
    std::ostringstream os;
    if (format == TraceFormat::Lines) {
        os << "# btmc trace " << trace.model << "\n";
        for (const TraceEvent& e : trace.events) {
            os << e.tick << " " << fmt_ms(e.ts_ms) << " " << to_string(e.kind);
            if (has_node(e.kind)) os << " " << e.node;
            if (has_status(e.kind)) os << " " << to_string(e.status);
            if (e.kind == TraceEvent::Kind::SvChanged) os << " " << e.sv << " " << e.old_value << " " << e.new_value;
            os << "\n";
        }
        return os.str();
    }
    nlohmann::ordered_json head;
    head["format"] = "btmc-trace";
    head["version"] = 1;
    head["model"] = trace.model;
    os << head.dump() << "\n";
    for (const TraceEvent& e : trace.events) {
        nlohmann::ordered_json j;
        j["tick"] = e.tick;
        j["ts_ms"] = std::round(e.ts_ms * 1000.0) / 1000.0;
        j["kind"] = to_string(e.kind);
        if (has_node(e.kind)) j["node"] = e.node;
        if (has_status(e.kind)) j["status"] = to_string(e.status);
        if (e.kind == TraceEvent::Kind::SvChanged) {
            j["sv"] = e.sv;
            j["old"] = e.old_value;
            j["new"] = e.new_value;
        }
        os << j.dump() << "\n";
    }
    return os.str();
}

ExecutionTrace parse_trace(std::string_view text, TraceFormat format)
{
    ExecutionTrace t;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line = 1;
    if (!std::getline(in, raw)) throw ParseError({1, 1}, "empty trace");
    if (format == TraceFormat::Lines) {
        const std::string prefix = "# btmc trace ";
        if (raw.rfind(prefix, 0) != 0) throw ParseError({1, 1}, "missing trace header");
        t.model = raw.substr(prefix.size());
        while (std::getline(in, raw)) {
            ++line;
            if (raw.empty()) continue;
            std::istringstream ls(raw);
            TraceEvent e;
            std::string ts, kind;
            if (!(ls >> e.tick >> ts >> kind)) throw ParseError({line, 1}, "malformed event");
            auto [end, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), e.ts_ms);
            if (ec != std::errc() || end != ts.data() + ts.size())
                throw ParseError({line, 1}, "bad timestamp '" + ts + "'");
            auto k = parse_event_kind(kind);
            if (!k) throw ParseError({line, 1}, "unknown event kind '" + kind + "'");
            e.kind = *k;
            if (has_node(e.kind) && !(ls >> e.node)) throw ParseError({line, 1}, "missing node");
            if (has_status(e.kind)) {
                std::string st;
                if (!(ls >> st)) throw ParseError({line, 1}, "missing status");
                e.status = status_field(st, line);
            }
            if (e.kind == TraceEvent::Kind::SvChanged && !(ls >> e.sv >> e.old_value >> e.new_value))
                throw ParseError({line, 1}, "sv_changed needs sv, old and new");
            std::string extra;
            if (ls >> extra) throw ParseError({line, 1}, "trailing text '" + extra + "'");
            t.events.push_back(std::move(e));
        }
        return t;
    }
    try {
        auto head = nlohmann::json::parse(raw);
        if (head.value("format", "") != "btmc-trace") throw ParseError({1, 1}, "missing trace header");
        t.model = head.at("model").get<std::string>();
        while (std::getline(in, raw)) {
            ++line;
            if (raw.empty()) continue;
            auto j = nlohmann::json::parse(raw);
            TraceEvent e;
            e.tick = j.at("tick").get<int>();
            e.ts_ms = j.at("ts_ms").get<double>();
            auto k = parse_event_kind(j.at("kind").get<std::string>());
            if (!k) throw ParseError({line, 1}, "unknown event kind");
            e.kind = *k;
            if (has_node(e.kind)) e.node = j.at("node").get<std::string>();
            if (has_status(e.kind)) e.status = status_field(j.at("status").get<std::string>(), line);
            if (e.kind == TraceEvent::Kind::SvChanged) {
                e.sv = j.at("sv").get<std::string>();
                e.old_value = j.at("old").get<std::string>();
                e.new_value = j.at("new").get<std::string>();
            }
            t.events.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& ex) {
        throw ParseError({line, 1}, ex.what());
    }
    return t;
}

}  // namespace btmc
