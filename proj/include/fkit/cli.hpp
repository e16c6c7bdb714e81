#ifndef FKIT_CLI_HPP
#define FKIT_CLI_HPP

#include <iosfwd>
#include <string>
#include <vector>

namespace fkit {

/// Exit codes of the fkit executable.
enum ExitCode : int {
    kExitClean = 0,    ///< completed, nothing found
    kExitFound = 1,    ///< counterexamples found (falsify, fuzz) or target met (synthesize)
    kExitError = 2,    ///< configuration, protocol or I/O error
};

/// Subcommands: run, analyze, serve, client, replay. `args` excludes argv[0].
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace fkit

#endif
