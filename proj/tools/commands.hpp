#ifndef ZBS_TOOLS_COMMANDS_HPP
#define ZBS_TOOLS_COMMANDS_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace zbs::cli {

// Exit codes: 0 success, 1 computational failure, 2 usage or input error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace zbs::cli

#endif  // ZBS_TOOLS_COMMANDS_HPP
