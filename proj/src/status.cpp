#include "btmc/status.hpp"

#include "btmc/syntax.hpp"

namespace btmc {

std::optional<Status> parse_status(std::string_view text)
{
    using syntax::iequals;
    if (iequals(text, "success")) return Status::Success;
    if (iequals(text, "failure")) return Status::Failure;
    if (iequals(text, "running")) return Status::Running;
    if (iequals(text, "halt_me")) return Status::HaltMe;
    if (iequals(text, "no_ret_status") || iequals(text, "noret")) return Status::NoRet;
    return std::nullopt;
}

}  // namespace btmc
