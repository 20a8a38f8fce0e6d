#pragma once

// Reader, validator and printer for `.btf` documents: an S-expression
// Behavior-Tree format with state-variable declarations.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace btmc::syntax {

struct SourcePos {
    int line = 0;
    int column = 0;
};

class ParseError : public std::runtime_error {
public:
    ParseError(SourcePos pos, const std::string& message);

    SourcePos pos() const { return pos_; }
    const std::string& message() const { return message_; }

private:
    SourcePos pos_;
    std::string message_;
};

/// Raw S-expression datum. Equality ignores source positions.
struct Datum {
    enum class Kind { List, Symbol, Keyword, Number, StatusRef };

    Kind kind = Kind::List;
    std::string text;  ///< keyword without the colon; StatusRef without ".rstatus"
    std::vector<Datum> items;
    SourcePos pos;

    bool is_list() const { return kind == Kind::List; }
    bool operator==(const Datum& other) const;
};

/// Reads exactly one top-level datum. Never throws anything but ParseError.
Datum read_datum(std::string_view text);
std::string print_datum(const Datum& d);

enum class NodeKind {
    BehaviorTree,
    Sequence,
    ReactiveSequence,
    SequenceWithMemory,
    Fallback,
    ReactiveFallback,
    Parallel,
    ParallelAll,
    Inverter,
    ForceFailure,
    ForceSuccess,
    Repeat,
    RetryUntilSuccessful,
    KeepRunningUntilFailure,
    Recovery,
    PipelineSequence,
    RoundRobin,
    RateController,
    Action,
    Condition,
    SetSV,
    Eval,
};

std::string_view to_string(NodeKind kind);
std::optional<NodeKind> parse_node_kind(std::string_view text);
bool is_leaf(NodeKind kind);
bool is_decorator(NodeKind kind);

/// Eval expression tree. The parser produces Int, Ident, StatusRef, ArgRef and
/// the operator forms; validation rewrites identifiers that name state
/// variables to SvRef and literals compared against them to EnumLit/StatusLit.
struct Expr {
    enum class Op {
        Int,
        Ident,
        SvRef,
        EnumLit,
        StatusLit,
        StatusRef,
        ArgRef,
        Eq,
        Not,
        Assign,
        Add,
        Mul,
    };

    Op op = Op::Int;
    std::int64_t value = 0;  ///< Int literal; EnumLit index once resolved
    std::string name;        ///< identifier, SV, node or assigned SV name
    std::vector<Expr> args;
    SourcePos pos;

    bool operator==(const Expr& other) const;
};

Expr parse_expr(const Datum& d);
Datum expr_to_datum(const Expr& e);

struct Attribute {
    std::string key;  ///< as written, without the colon
    std::optional<Datum> value;  ///< empty for a bare flag such as `:SF`

    bool operator==(const Attribute& other) const = default;
};

struct Node {
    NodeKind kind = NodeKind::Action;
    std::vector<Attribute> attrs;
    std::vector<Node> children;
    std::optional<Expr> expr;
    SourcePos pos;

    // Assigned by validate().
    std::string canonical_name;
    int index = 0;  ///< 1-based pre-order index across the whole document

    /// Case-insensitive keyword lookup.
    const Attribute* attr(std::string_view key) const;
    /// Symbol or number text of a keyword's value.
    std::optional<std::string> text_attr(std::string_view key) const;

    /// Structural equality: kind, attributes, children and expression.
    bool same_ast(const Node& other) const;
};

struct SvDecl {
    enum class Kind { Enumerated, BoundedNat };

    std::string name;
    Kind kind = Kind::BoundedNat;
    std::vector<std::string> states;
    bool all_transitions = false;
    std::vector<std::pair<std::string, std::string>> transitions;
    std::int64_t min = 0;
    std::int64_t max = 0;
    std::string init;  ///< state name or decimal integer, as written
    SourcePos pos;

    bool operator==(const SvDecl& other) const;

    /// Index of `value` in `states`, matched case-insensitively.
    std::optional<int> state_index(std::string_view value) const;
    /// Initial value as a slot value: state index or the integer itself.
    std::int64_t initial_value() const;
    /// True when the relation allows moving from state `from` to state `to`.
    /// Staying on the current value is always allowed.
    bool allows(int from, int to) const;

    /// Rendering of a slot value: the state name or the integer.
    std::string value_name(std::int64_t v) const;
    std::optional<std::int64_t> parse_value(std::string_view text) const;
};

struct BtSpec {
    std::vector<SvDecl> svs;
    std::vector<Node> trees;  ///< each one a BehaviorTree node

    bool same_ast(const BtSpec& other) const;
};

BtSpec parse_btf(std::string_view text);

struct Diagnostic {
    std::string path;
    std::string message;
    SourcePos pos;
};

enum class SvDriver { Program, Environment };

struct ValidatedSpec {
    BtSpec spec;
    std::vector<SvDriver> drivers;  ///< parallel to spec.svs
    std::vector<Diagnostic> warnings;

    const SvDecl* find_sv(std::string_view name) const;
    int sv_index(std::string_view name) const;
    /// Tree by name (its :name, :ID or canonical name); nullptr if absent.
    const Node* find_tree(std::string_view name) const;
};

struct ValidationResult {
    std::optional<ValidatedSpec> spec;
    std::vector<Diagnostic> errors;

    bool ok() const { return spec.has_value(); }
};

ValidationResult validate(const BtSpec& spec);

/// Parses and validates; throws ParseError or SemanticErrors.
ValidatedSpec load_spec(std::string_view text);

class SemanticErrors : public std::runtime_error {
public:
    explicit SemanticErrors(std::vector<Diagnostic> errors);
    const std::vector<Diagnostic>& errors() const { return errors_; }

private:
    std::vector<Diagnostic> errors_;
};

/// Deterministic pretty-print. parse_btf(emit_canonical(s)) is structurally
/// equal to s.
std::string emit_canonical(const BtSpec& spec);

/// Tree name used for model naming: :name, then :ID, then canonical name.
std::string tree_name(const Node& tree);

bool iequals(std::string_view a, std::string_view b);

}  // namespace btmc::syntax
