#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace tsentinel::cli {

/// Environment variable naming a LoadModel JSON file that replaces the
/// built-in default for `synth`.
inline constexpr const char* kLoadModelEnv = "TSENTINEL_LOADMODEL";

/// Runs the command line `args` (args[0] is the program name). Data goes to
/// `out`, diagnostics to `err`. Returns the process exit status.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace tsentinel::cli
