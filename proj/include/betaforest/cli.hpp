#ifndef BETAFOREST_CLI_HPP
#define BETAFOREST_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace betaforest {

/// Runs one subcommand (train, predict, evaluate, importance, simulate,
/// glm-fit). `args` excludes the program name. Returns the exit status;
/// diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_dispatch(int argc, char** argv);

}  // namespace betaforest

#endif  // BETAFOREST_CLI_HPP
