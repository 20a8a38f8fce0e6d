#include "btmc/syntax.hpp"

namespace btmc::syntax {

namespace {

void emit_node(const Node& n, int depth, std::string& out)
{
    out.append(static_cast<std::size_t>(depth), ' ');
    out += '(';
    out += to_string(n.kind);

    // A bare flag right before the expression would swallow it on re-read.
    bool flag = false;
    for (const Attribute& a : n.attrs) flag = flag || !a.value;
    if (n.expr && flag) out += ' ' + print_datum(expr_to_datum(*n.expr));
    for (const Attribute& a : n.attrs) {
        out += " :" + a.key;
        if (a.value) out += ' ' + print_datum(*a.value);
    }
    if (n.expr && !flag) out += ' ' + print_datum(expr_to_datum(*n.expr));
    for (const Node& c : n.children) {
        out += '\n';
        emit_node(c, depth + 1, out);
    }
    out += ')';
}

void emit_sv(const SvDecl& sv, std::string& out)
{
    out += " (defsv " + sv.name;
    if (sv.kind == SvDecl::Kind::Enumerated) {
        out += " :states (";
        for (std::size_t i = 0; i < sv.states.size(); ++i) out += (i ? " " : "") + sv.states[i];
        out += ") :init " + sv.init + " :transitions ";
        if (sv.all_transitions) {
            out += ":all";
        } else {
            out += '(';
            for (std::size_t i = 0; i < sv.transitions.size(); ++i)
                out += (i ? " (" : "(") + sv.transitions[i].first + ' ' + sv.transitions[i].second + ')';
            out += ')';
        }
    } else {
        out += " :min " + std::to_string(sv.min) + " :max " + std::to_string(sv.max) + " :init " + sv.init;
    }
    out += ")\n";
}

}  // namespace

std::string emit_canonical(const BtSpec& spec)
{
    std::string out = "(\n";
    for (const SvDecl& sv : spec.svs) emit_sv(sv, out);
    for (const Node& t : spec.trees) {
        emit_node(t, 1, out);
        out += '\n';
    }
    out += ")\n";
    return out;
}

}  // namespace btmc::syntax
