#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace rebar2bim {

/// Entry point of the `rebar2bim` tool; `args` excludes the program name.
/// Returns 0 on success, 1 on a data/logic error, 2 on usage or I/O errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rebar2bim
