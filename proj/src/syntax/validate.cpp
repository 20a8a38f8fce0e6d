#include "btmc/syntax.hpp"

#include <charconv>
#include <cmath>
#include <map>
#include <set>

namespace btmc::syntax {

namespace {

const std::set<std::string, std::less<>> kKnownAttrs = {
    "id", "name", "args", "success", "wait", "halt", "repeat", "num_retries", "num_attempts", "sv", "hz",
};

std::string lower(std::string_view s)
{
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::optional<std::int64_t> as_int(const Datum& d)
{
    if (d.kind != Datum::Kind::Number) return std::nullopt;
    std::int64_t v = 0;
    const char* b = d.text.data();
    const char* e = b + d.text.size();
    if (*b == '+') ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) return std::nullopt;
    return v;
}

std::optional<double> as_real(const Datum& d)
{
    if (d.kind != Datum::Kind::Number) return std::nullopt;
    try {
        return std::stod(d.text);
    } catch (...) {
        return std::nullopt;
    }
}

class Validator {
public:
    explicit Validator(const BtSpec& spec) : out_{spec, {}, {}} {}

    ValidationResult run()
    {
        check_svs();
        int index = 0;
        for (Node& t : out_.spec.trees) number(t, index);
        for (Node& t : out_.spec.trees) name(t);
        std::set<std::string> tree_names;
        for (Node& t : out_.spec.trees) {
            std::string tn = tree_name(t);
            if (!tree_names.insert(tn).second) error(tn, "duplicate tree name '" + tn + "'", t.pos);
        }
        for (Node& t : out_.spec.trees) check(t, tree_name(t));

        out_.drivers.assign(out_.spec.svs.size(), SvDriver::Environment);
        for (const std::string& sv : assigned_) {
            int i = out_.sv_index(sv);
            if (i >= 0) out_.drivers[static_cast<std::size_t>(i)] = SvDriver::Program;
        }

        ValidationResult r;
        if (errors_.empty()) {
            r.spec = std::move(out_);
        } else {
            r.errors = std::move(errors_);
        }
        return r;
    }

private:
    ValidatedSpec out_;
    std::vector<Diagnostic> errors_;
    std::set<std::string> assigned_;
    std::map<std::string, const Node*> by_name_;

    void error(const std::string& path, const std::string& msg, SourcePos pos)
    {
        errors_.push_back({path, msg, pos});
    }

    void warn(const std::string& path, const std::string& msg, SourcePos pos)
    {
        out_.warnings.push_back({path, msg, pos});
    }

    void check_svs()
    {
        std::set<std::string> names;
        for (const SvDecl& sv : out_.spec.svs) {
            std::string path = "defsv " + sv.name;
            if (!names.insert(sv.name).second) error(path, "duplicate state variable", sv.pos);
            if (sv.kind == SvDecl::Kind::BoundedNat) {
                if (sv.min > sv.max) error(path, "min > max", sv.pos);
                std::int64_t init = sv.initial_value();
                if (init < sv.min || init > sv.max) error(path, "init " + sv.init + " outside [min,max]", sv.pos);
                if (sv.max - sv.min > 1'000'000) error(path, "range too large", sv.pos);
                continue;
            }
            std::set<std::string> seen;
            for (const std::string& s : sv.states)
                if (!seen.insert(lower(s)).second) error(path, "duplicate state '" + s + "'", sv.pos);
            if (!sv.state_index(sv.init)) error(path, "init " + sv.init + " is not a declared state", sv.pos);
            for (const auto& [a, b] : sv.transitions) {
                if (!sv.state_index(a)) error(path, "transition from undeclared state '" + a + "'", sv.pos);
                if (!sv.state_index(b)) error(path, "transition to undeclared state '" + b + "'", sv.pos);
            }
        }
    }

    void number(Node& n, int& index)
    {
        n.index = ++index;
        for (Node& c : n.children) number(c, index);
    }

    void name(Node& n)
    {
        std::string k = std::to_string(n.index);
        if (auto nm = n.text_attr("name")) {
            n.canonical_name = *nm;
        } else if (auto id = n.text_attr("ID")) {
            n.canonical_name = *id + "_btn" + k;
        } else {
            n.canonical_name = std::string(to_string(n.kind)) + k + "_btn" + k;
        }
        auto [it, fresh] = by_name_.emplace(n.canonical_name, &n);
        if (!fresh) {
            const char* what = n.attr("name") ? "duplicate node name '" : "node name collision '";
            error(n.canonical_name, what + n.canonical_name + "'", n.pos);
        }
        for (Node& c : n.children) name(c);
    }

    std::optional<std::int64_t> int_attr(const Node& n, const std::string& path, std::string_view key)
    {
        const Attribute* a = n.attr(key);
        if (!a) return std::nullopt;
        if (!a->value) {
            error(path, ":" + std::string(key) + " needs a value", n.pos);
            return std::nullopt;
        }
        auto v = as_int(*a->value);
        if (!v) error(path, ":" + std::string(key) + " must be an integer", a->value->pos);
        return v;
    }

    void flag01(const Node& n, const std::string& path, std::string_view key)
    {
        if (auto v = int_attr(n, path, key); v && *v != 0 && *v != 1)
            error(path, ":" + std::string(key) + " must be 0 or 1", n.pos);
    }

    void arity(const Node& n, const std::string& path)
    {
        std::size_t c = n.children.size();
        std::string kind(to_string(n.kind));
        if (is_leaf(n.kind)) {
            if (c != 0) error(path, kind + " must not have children", n.pos);
        } else if (n.kind == NodeKind::BehaviorTree || is_decorator(n.kind)) {
            if (c != 1) error(path, kind + " requires exactly 1 child", n.pos);
        } else if (n.kind == NodeKind::Recovery) {
            if (c != 2) error(path, "Recovery requires exactly 2 children", n.pos);
        } else if (c == 0) {
            error(path, kind + " requires at least 1 child", n.pos);
        }
    }

    void check(Node& n, const std::string& path)
    {
        arity(n, path);
        for (const Attribute& a : n.attrs) {
            if (!kKnownAttrs.count(lower(a.key)))
                warn(path, "unknown attribute :" + a.key + " kept as opaque payload", n.pos);
            else if (!a.value)
                error(path, ":" + a.key + " needs a value", n.pos);
        }
        if ((n.attr("ID") && !n.text_attr("ID")) || (n.attr("name") && !n.text_attr("name")))
            error(path, ":ID and :name take an identifier", n.pos);
        std::size_t nc = n.children.size();

        switch (n.kind) {
        case NodeKind::Parallel: {
            auto m = int_attr(n, path, "success");
            if (!n.attr("success")) {
                error(path, "Parallel requires :success", n.pos);
            } else if (m && (*m < 1 || static_cast<std::size_t>(*m) > nc)) {
                error(path, "Parallel :success " + std::to_string(*m) + " must lie in [1," + std::to_string(nc) + "]",
                      n.pos);
            }
            flag01(n, path, "wait");
            flag01(n, path, "halt");
            break;
        }
        case NodeKind::ParallelAll:
            if (auto m = int_attr(n, path, "success"); m && static_cast<std::size_t>(*m) != nc)
                error(path, "ParallelAll :success must equal the child count", n.pos);
            flag01(n, path, "wait");
            flag01(n, path, "halt");
            break;
        case NodeKind::ReactiveSequence:
        case NodeKind::ReactiveFallback:
            flag01(n, path, "halt");
            flag01(n, path, "wait");
            break;
        case NodeKind::Repeat:
            if (auto k = int_attr(n, path, "repeat"); !k) {
                if (!n.attr("repeat")) error(path, "Repeat requires :repeat", n.pos);
            } else if (*k < 1 || *k > 1000) {
                error(path, ":repeat must lie in [1,1000]", n.pos);
            }
            break;
        case NodeKind::RetryUntilSuccessful: {
            auto k = n.attr("num_attempts") ? int_attr(n, path, "num_attempts") : int_attr(n, path, "num_retries");
            if (k && (*k < 1 || *k > 1000)) error(path, "attempt bound must lie in [1,1000]", n.pos);
            break;
        }
        case NodeKind::Recovery:
            if (auto k = int_attr(n, path, "num_retries"); k && (*k < 0 || *k > 1000))
                error(path, ":num_retries must lie in [0,1000]", n.pos);
            break;
        case NodeKind::RateController:
            check_rate(n, path);
            break;
        case NodeKind::Action:
        case NodeKind::Condition:
            if (!n.attr("ID") && !n.attr("name"))
                error(path, std::string(to_string(n.kind)) + " requires :ID or :name", n.pos);
            break;
        case NodeKind::SetSV: {
            auto sv = n.text_attr("sv");
            if (!sv) {
                error(path, "SetSV requires :sv", n.pos);
            } else if (!out_.find_sv(*sv)) {
                error(path, "undeclared state variable '" + *sv + "'", n.pos);
            } else {
                assigned_.insert(*sv);
            }
            break;
        }
        case NodeKind::Eval:
            if (!n.expr) {
                error(path, "Eval requires an expression", n.pos);
            } else {
                resolve(*n.expr, path);
                if (n.expr->op == Expr::Op::Assign) assigned_.insert(n.expr->name);
            }
            break;
        default:
            break;
        }
        if (const Attribute* a = n.attr("args"); a && a->value) check_args(*a->value, path);

        for (Node& c : n.children) check(c, path + "/" + c.canonical_name);
    }

    void check_rate(const Node& n, const std::string& path)
    {
        std::optional<double> hz;
        if (const Attribute* a = n.attr("hz"); a && a->value) {
            hz = as_real(*a->value);
            if (!hz) error(path, ":hz must be a number", n.pos);
        } else if (const Attribute* args = n.attr("args"); args && args->value && args->value->is_list()) {
            const auto& items = args->value->items;
            for (std::size_t i = 0; i + 1 < items.size(); ++i)
                if (items[i].kind == Datum::Kind::Symbol && iequals(items[i].text, "hz")) hz = as_real(items[i + 1]);
        }
        if (hz && !(*hz > 0 && std::isfinite(*hz))) error(path, "RateController rate must be positive", n.pos);
        if (hz && std::ceil(1.0 / *hz) > 1000) error(path, "RateController period too long", n.pos);
    }

    void check_args(const Datum& d, const std::string& path)
    {
        if (d.kind == Datum::Kind::Symbol && d.text.size() > 1 && d.text[0] == '$') {
            std::string var = d.text.substr(1);
            const SvDecl* sv = out_.find_sv(var);
            if (!sv) {
                warn(path, "argument $" + var + " is not a state variable; passed through verbatim", d.pos);
            } else if (sv->kind != SvDecl::Kind::BoundedNat) {
                error(path, "argument $" + var + " must reference a bounded natural state variable", d.pos);
            }
            return;
        }
        if (d.kind == Datum::Kind::StatusRef) {
            error(path, "status access is not allowed in :args", d.pos);
            return;
        }
        for (const Datum& i : d.items) check_args(i, path);
    }

    // Identifiers naming state variables become SvRef; literals compared
    // against an enumerated SV or a node status become EnumLit/StatusLit.
    void resolve(Expr& e, const std::string& path)
    {
        switch (e.op) {
        case Expr::Op::Ident:
            if (out_.find_sv(e.name)) e.op = Expr::Op::SvRef;
            return;
        case Expr::Op::ArgRef:
            if (const SvDecl* sv = out_.find_sv(e.name)) {
                if (sv->kind != SvDecl::Kind::BoundedNat)
                    error(path, "$" + e.name + " must reference a bounded natural state variable", e.pos);
            } else {
                error(path, "undeclared state variable '$" + e.name + "'", e.pos);
            }
            return;
        case Expr::Op::StatusRef:
            if (!by_name_.count(e.name)) error(path, "unknown node '" + e.name + "' in status access", e.pos);
            return;
        case Expr::Op::Assign: {
            const SvDecl* sv = out_.find_sv(e.name);
            if (!sv) {
                error(path, "assignment to undeclared state variable '" + e.name + "'", e.pos);
                return;
            }
            resolve(e.args[0], path);
            literal_against(e.args[0], sv, nullptr, path);
            return;
        }
        case Expr::Op::Eq:
            resolve(e.args[0], path);
            resolve(e.args[1], path);
            for (int side = 0; side < 2; ++side) {
                Expr& other = e.args[1 - side];
                const Expr& ref = e.args[side];
                if (ref.op == Expr::Op::SvRef || ref.op == Expr::Op::ArgRef)
                    literal_against(other, out_.find_sv(ref.name), nullptr, path);
                else if (ref.op == Expr::Op::StatusRef)
                    literal_against(other, nullptr, &ref, path);
            }
            return;
        default:
            for (Expr& a : e.args) resolve(a, path);
            return;
        }
    }

    void literal_against(Expr& lit, const SvDecl* sv, const Expr* status_ref, const std::string& path)
    {
        if (lit.op != Expr::Op::Ident) return;
        if (sv && sv->kind == SvDecl::Kind::Enumerated) {
            if (auto idx = sv->state_index(lit.name)) {
                lit.op = Expr::Op::EnumLit;
                lit.name = sv->states[static_cast<std::size_t>(*idx)];
                lit.value = *idx;
            } else {
                error(path, "'" + lit.name + "' is not a value of " + sv->name, lit.pos);
            }
        } else if (status_ref) {
            std::string l = lower(lit.name);
            if (l == "success" || l == "failure" || l == "running") {
                lit.op = Expr::Op::StatusLit;
                lit.name = l;
            } else {
                error(path, "'" + lit.name + "' is not a status (success, failure, running)", lit.pos);
            }
        }
    }
};

}  // namespace

const SvDecl* ValidatedSpec::find_sv(std::string_view name) const
{
    int i = sv_index(name);
    return i < 0 ? nullptr : &spec.svs[static_cast<std::size_t>(i)];
}

int ValidatedSpec::sv_index(std::string_view name) const
{
    for (std::size_t i = 0; i < spec.svs.size(); ++i)
        if (spec.svs[i].name == name) return static_cast<int>(i);
    return -1;
}

const Node* ValidatedSpec::find_tree(std::string_view name) const
{
    for (const Node& t : spec.trees)
        if (tree_name(t) == name || t.canonical_name == name) return &t;
    return nullptr;
}

SemanticErrors::SemanticErrors(std::vector<Diagnostic> errors)
    : std::runtime_error(errors.empty() ? "semantic error" : errors.front().path + ": " + errors.front().message),
      errors_(std::move(errors))
{
}

ValidationResult validate(const BtSpec& spec)
{
    return Validator(spec).run();
}

ValidatedSpec load_spec(std::string_view text)
{
    ValidationResult r = validate(parse_btf(text));
    if (!r.ok()) throw SemanticErrors(std::move(r.errors));
    return std::move(*r.spec);
}

}  // namespace btmc::syntax
