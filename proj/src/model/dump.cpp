#include <sstream>

#include "btmc/model.hpp"

namespace btmc {

namespace {

using Op = ExprNode::Op;

const char* op_text(Op op)
{
    switch (op) {
    case Op::Add: return "+";
    case Op::Sub: return "-";
    case Op::Mul: return "*";
    case Op::Eq: return "==";
    case Op::Ne: return "!=";
    case Op::Lt: return "<";
    case Op::Le: return "<=";
    case Op::Gt: return ">";
    case Op::Ge: return ">=";
    case Op::And: return "&&";
    case Op::Or: return "||";
    default: return "?";
    }
}

const char* event_text(EventKind e)
{
    switch (e) {
    case EventKind::Ticked: return "ticked";
    case EventKind::Returned: return "returned";
    case EventKind::Halting: return "halting";
    case EventKind::Halted: return "halted";
    case EventKind::RootTerminal: return "root_terminal";
    default: return "";
    }
}

const char* external_text(External e)
{
    switch (e) {
    case External::CheckCondition: return "check_condition";
    case External::ActionTick: return "action";
    case External::HaltAction: return "halt_action";
    case External::SetSv: return "set_sv";
    case External::EnvRead: return "read_env";
    default: return "";
    }
}

std::string effects_text(const Model& m, const Transition& t)
{
    std::string out;
    for (const Assignment& a : t.effects) {
        if (!out.empty()) out += "; ";
        out += m.slots[static_cast<std::size_t>(a.slot)].name + " := " + expr_to_string(m, a.value);
    }
    return out;
}

}  // namespace

std::string expr_to_string(const Model& m, ExprId e)
{
    if (e == kTrue) return "true";
    const ExprNode& n = m.exprs[static_cast<std::size_t>(e)];
    switch (n.op) {
    case Op::Const: return std::to_string(n.k);
    case Op::Slot: return m.slots[static_cast<std::size_t>(n.k)].name;
    case Op::Not: return "!(" + expr_to_string(m, n.a) + ")";
    case Op::Ite:
        return "(" + expr_to_string(m, n.a) + " ? " + expr_to_string(m, n.b) + " : " + expr_to_string(m, n.c) + ")";
    default:
        return "(" + expr_to_string(m, n.a) + " " + op_text(n.op) + " " + expr_to_string(m, n.b) + ")";
    }
}

std::string dump_model(const Model& m)
{
    std::ostringstream os;
    os << "model " << m.name << " semantics " << to_string(m.semantics) << "\n";
    os << "processes " << m.processes.size() << " nodes " << m.nodes.size() << " svs " << m.svs.size()
       << " slots " << m.slots.size() << " transitions " << m.transitions.size() << " words " << m.words << "\n";
    for (std::size_t i = 0; i < m.slots.size(); ++i) {
        const Slot& s = m.slots[i];
        os << "slot " << i << " " << s.name << " [" << s.min << "," << s.max << "] init " << s.init << "\n";
    }
    for (const NodeInfo& n : m.nodes) {
        os << "node " << n.name << " kind " << syntax::to_string(n.kind) << " index " << n.index << " caller "
           << (n.parent < 0 ? std::string("ticker") : m.nodes[static_cast<std::size_t>(n.parent)].name) << "\n";
    }
    for (std::size_t p = 0; p < m.processes.size(); ++p) {
        const Process& pr = m.processes[p];
        os << "process " << p << " " << pr.name << "\n";
        os << "  locations";
        for (const auto& l : pr.locations) os << " " << l;
        os << "\n";
        for (const Local& l : pr.locals) os << "  local " << l.name << " slot " << l.slot << "\n";
        for (int ti : pr.transitions) {
            const Transition& t = m.transitions[static_cast<std::size_t>(ti)];
            os << "  transition " << ti << " " << pr.locations[static_cast<std::size_t>(t.from)] << " -> "
               << pr.locations[static_cast<std::size_t>(t.to)] << " [" << t.label << "] "
               << (t.timing == Timing::OneTick ? "onetick" : "urgent");
            if (t.guard != kTrue) os << " when " << expr_to_string(m, t.guard);
            if (!t.effects.empty()) os << " do " << effects_text(m, t);
            if (t.event != EventKind::None) {
                os << " event " << event_text(t.event);
                if (t.event == EventKind::Returned || t.event == EventKind::RootTerminal)
                    os << "(" << to_string(t.status) << ")";
            }
            if (t.external != External::None) os << " external " << external_text(t.external) << "=" << t.expected;
            os << "\n";
        }
    }
    return os.str();
}

std::string process_dot(const Model& m, int process)
{
    const Process& pr = m.processes[static_cast<std::size_t>(process)];
    auto quote = [](const std::string& s) {
        std::string out = "\"";
        for (char c : s) {
            if (c == '"' || c == '\\') out += '\\';
            out += c;
        }
        return out + "\"";
    };
    std::ostringstream os;
    os << "digraph " << quote(pr.name) << " {\n  rankdir=TB;\n";
    for (std::size_t l = 0; l < pr.locations.size(); ++l) {
        os << "  l" << l << " [label=" << quote(pr.locations[l]) << (l == 0 ? ", shape=doublecircle" : "") << "];\n";
    }
    for (int ti : pr.transitions) {
        const Transition& t = m.transitions[static_cast<std::size_t>(ti)];
        std::string label = t.label;
        if (t.timing == Timing::OneTick) label += " [1,1]";
        if (t.guard != kTrue) label += "\nwhen " + expr_to_string(m, t.guard);
        if (!t.effects.empty()) label += "\n" + effects_text(m, t);
        os << "  l" << t.from << " -> l" << t.to << " [label=" << quote(label) << "];\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace btmc
