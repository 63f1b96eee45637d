#pragma once

// Subcommand entry points of the `abov` tool. Each takes the arguments that
// follow the subcommand name and returns the process exit code.

#include <iosfwd>
#include <string>
#include <vector>

namespace abov::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,
  kExitBadConfig = 2,
  kExitNumerics = 3,
  kExitCorruptCheckpoint = 4,
};

using Args = std::vector<std::string>;

int cli_train(const Args& args, std::ostream& out, std::ostream& err);
int cli_sample(const Args& args, std::ostream& out, std::ostream& err);
int cli_bench(const Args& args, std::ostream& out, std::ostream& err);
int cli_eval(const Args& args, std::ostream& out, std::ostream& err);
int cli_gradcheck(const Args& args, std::ostream& out, std::ostream& err);

// argv[1] names the subcommand.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace abov::cli
