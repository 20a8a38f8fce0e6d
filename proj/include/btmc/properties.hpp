#pragma once

// Properties over a state graph: reachability, deadlock freedom, bounded
// response counted in ticks and unbounded response.

#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "btmc/state_space.hpp"
#include "btmc/syntax.hpp"

namespace btmc {

enum class Cmp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };

std::string_view to_string(Cmp c);

/// Predicate over one state. Atoms keep their source names so they can be
/// printed back; `slot` and `value` are filled in by resolve().
struct Pred {
    enum class Kind : std::uint8_t { NodeAt, Sv, RStatus, Local, Terminal, And, Or, Not, True };
    Kind kind = Kind::True;
    std::string name;   ///< node or SV name
    std::string field;  ///< location, local variable, SV value text or status
    Cmp cmp = Cmp::Eq;
    std::vector<Pred> args;

    int slot = -1;
    std::int64_t value = 0;

    bool eval(const std::int32_t* vals) const;
};

std::string to_string(const Pred& p);

struct Property {
    enum class Kind : std::uint8_t { Absent, Present, DeadlockFree, LeadsToWithin, ImpliesEventually };
    std::string name;
    Kind kind = Kind::Absent;
    Pred p, q;
    int a = 0, b = 0;  ///< tick window for LeadsToWithin
    std::optional<bool> expect;
    syntax::SourcePos pos;
};

std::string_view to_string(Property::Kind k);
std::string to_string(const Property& p);

/// Unresolvable name in a predicate.
class UnknownName : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Binds atom names to slots and values of `model`.
void resolve(Pred& p, const Model& model);
void resolve(Property& p, const Model& model);

/// Property file syntax. `//` starts a comment; a comment of the form
/// `expect: TRUE|FALSE` annotates the property it sits in or after.
std::vector<Property> parse_properties(std::string_view text);

/// Present(done/success/failure/halted) per node, Present(running) for
/// actions, and deadlock freedom. Already resolved.
std::vector<Property> default_properties(const Model& model);

struct Verdict {
    enum class Value : std::uint8_t { True, False, Unknown };
    Value value = Value::Unknown;
    std::string reason;            ///< why Unknown
    std::optional<Trace> witness;  ///< counterexample or witness path
    bool lasso = false;            ///< witness ends by re-entering an earlier state
};

std::string_view to_string(Verdict::Value v);

Verdict check(const StateGraph& g, const Property& prop);

}  // namespace btmc
