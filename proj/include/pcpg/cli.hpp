#pragma once

namespace pcpg {

// Experiment runner entry point. Subcommands: gen-data, train, eval, sweep,
// grad-check. Exit codes: 0 success, 1 usage or config error, 2 data error
// (missing or malformed files), 3 numerical failure.
int run_cli(int argc, const char* const* argv);

}  // namespace pcpg
