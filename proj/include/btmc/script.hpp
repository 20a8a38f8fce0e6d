#pragma once

// Outcome scripts: what actions, conditions, SV setters and the environment
// do, keyed by name and invocation ordinal, with a seeded random fallback.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "btmc/model.hpp"
#include "btmc/status.hpp"

namespace btmc {

class ProviderError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A decision the script does not cover, with no seed to fall back on.
class ScriptExhausted : public ProviderError {
public:
    using ProviderError::ProviderError;
};

struct ActionOutcome {
    Status status = Status::Success;
    int latency = 1;  ///< ticks until the completion is delivered
    bool operator==(const ActionOutcome&) const = default;
};

struct OutcomeScript {
    using Key = std::pair<std::string, int>;  ///< (name, ordinal) or (sv, tick)
    std::map<Key, ActionOutcome> actions;
    std::map<Key, Status> conditions;
    std::map<Key, std::string> setsv;  ///< by SV name and set ordinal
    std::map<Key, std::string> env;    ///< by SV name and tick
    std::optional<ActionOutcome> default_action;
    std::optional<Status> default_condition;
    std::map<std::string, std::string> default_setsv;  ///< by SV name

    bool operator==(const OutcomeScript&) const = default;
};

/// Line format: `node <name> ordinal <k> -> success|failure latency <t>`,
/// `condition <name> ordinal <k> -> success|failure`,
/// `setsv <sv> ordinal <k> -> <value>`, `env <sv> tick <t> -> <value>`,
/// `default action <status> latency <t>`, `default condition <status>`,
/// `default setsv <sv> <value>`; `#` comments.
OutcomeScript parse_script(std::string_view text);
std::string emit_script(const OutcomeScript& s);

std::uint64_t splitmix64(std::uint64_t x);

/// Resolves decisions against a script, counting ordinals and falling back
/// to seeded random draws. Records every resolved decision.
///
/// Actions and conditions are looked up by node name first and then by
/// `:ID`, each with its own ordinal counter. SV setters are counted per SV.
class ScriptCursor {
public:
    struct NodeRef {
        std::string name;  ///< canonical name
        std::string id;    ///< :ID, or the canonical name
        int sv = -1;       ///< SetSV target
    };

    ScriptCursor(std::vector<NodeRef> nodes, std::vector<syntax::SvDecl> svs, OutcomeScript script,
                 std::optional<std::uint64_t> seed);
    ScriptCursor(const Model& model, OutcomeScript script, std::optional<std::uint64_t> seed);

    ActionOutcome start_action(int node);
    Status check_condition(int node);
    /// A value the SV may move to from `current`.
    std::int64_t set_sv(int node, std::int64_t current);
    /// New value for an environment SV at a tick boundary, if it changes.
    std::optional<std::int64_t> read_env(int sv, std::int64_t current, int tick);

    /// Every decision made so far, as an explicit script keyed by node name.
    const OutcomeScript& transcript() const { return transcript_; }

private:
    std::vector<NodeRef> nodes_;
    std::vector<syntax::SvDecl> svs_;
    OutcomeScript s_;
    std::optional<std::uint64_t> seed_;
    std::map<std::string, int> by_name_, by_id_, by_sv_;
    OutcomeScript transcript_;

    std::uint64_t draw(std::string_view kind, std::string_view name, int ordinal) const;
    template <class T>
    const T* find(const std::map<OutcomeScript::Key, T>& table, int node, int& ordinal);
};

/// Values an SV may take next from `current`, the current value included.
std::vector<std::int64_t> sv_targets(const syntax::SvDecl& sv, std::int64_t current);

}  // namespace btmc
