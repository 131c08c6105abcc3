#pragma once

#include "npsvc/common.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace npsvc {

enum ExitCode : int {
  exit_ok = 0,
  exit_internal = 1,  ///< numeric or internal failure
  exit_config = 2,    ///< I/O, parse, or configuration error
  exit_shape = 3,     ///< dimension or model mismatch
};

ExitCode exit_code_for(ErrorKind kind);

/// Entry point of the `npsvc` tool: train, predict, eval, sweep, diag.
/// Tables go to `out` (or to --out files); diagnostics to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace npsvc
