#pragma once

namespace bppnet {

// Subcommand dispatch for the bppnet tool: synth, train, resume, infer,
// eval, ablate, inspect. Returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace bppnet
