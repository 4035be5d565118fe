#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace stlmine::cli {

// Runs one CLI invocation (args exclude the program name). Returns the
// process exit code: 0 on success, 1 on any diagnosed error. Subcommands:
// project, cluster, learn, reps, dtw-compare, pipeline, synth,
// validate-template.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stlmine::cli
