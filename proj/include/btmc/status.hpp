#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace btmc {

/// Value of a node record's `rstatus` field.
///
/// `HaltMe` is only ever written by a parent into the record of a child that
/// last returned `Running`. `NoRet` is the value a node holds while it is
/// being ticked and before it has produced a result.
enum class Status : std::uint8_t {
    NoRet = 0,
    Success = 1,
    Failure = 2,
    Running = 3,
    HaltMe = 4,
};

constexpr std::string_view to_string(Status s)
{
    switch (s) {
    case Status::NoRet: return "no_ret_status";
    case Status::Success: return "success";
    case Status::Failure: return "failure";
    case Status::Running: return "running";
    case Status::HaltMe: return "halt_me";
    }
    return "?";
}

/// Case-insensitive; accepts the three returnable statuses plus the two
/// protocol values.
std::optional<Status> parse_status(std::string_view text);

}  // namespace btmc
