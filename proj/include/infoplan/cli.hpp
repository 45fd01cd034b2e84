#pragma once
// Command-line driver. Subcommands: plan (run configured planners, write
// trajectories), verify (measure pruning gaps against certified bounds),
// montecarlo (paired closed-loop tracking episodes), print-defaults.
// Exit codes: 0 success, 1 config error, 2 planner abort, 3 bound violation.

namespace infoplan {

int run_cli(int argc, char** argv);

}  // namespace infoplan
