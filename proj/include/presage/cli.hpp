#ifndef PRESAGE_CLI_HPP
#define PRESAGE_CLI_HPP

#include <iosfwd>

namespace presage::cli {

// Subcommands: simulate, mdl, pidemo, kmap.
// Exit codes: 0 success, 2 usage or configuration error, 3 runtime error.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace presage::cli

#endif
