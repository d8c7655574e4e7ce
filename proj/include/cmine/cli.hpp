#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace cmine::cli {

// Exit codes: 0 success, 1 stage failure, 2 usage error.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cmine::cli
