#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mfuse::cli {

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name. Returns 0 on success, 1 on invalid input or configuration,
/// 2 on runtime failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace mfuse::cli
