#pragma once

#include <iosfwd>
#include <string>

#include "blindconv/config.hpp"

namespace blindconv {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,        ///< configuration or I/O error
  kExitNotConverged = 2,  ///< solver did not converge; outputs are still written
  kExitInvariant = 3,     ///< a deterministic invariant failed
};

inline constexpr const char* kToolVersion = "1.0.0";

int cmd_deconvolve(const RunConfig& cfg, std::ostream& out);
int cmd_phase_diagram(const RunConfig& cfg, std::ostream& out);
int cmd_noise_sweep(const RunConfig& cfg, std::ostream& out);
int cmd_oversample(const RunConfig& cfg, std::ostream& out);
int cmd_channel(const RunConfig& cfg, std::ostream& out);
int cmd_deblur(const RunConfig& cfg, std::ostream& out);
int cmd_theory_check(const RunConfig& cfg, std::ostream& out);

/// Dispatches on run.command; configuration and I/O errors become kExitConfig with a message on err.
int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err);

}  // namespace blindconv
