// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>

namespace exhibit {

/// Entry point of the `exhibit` command: ingest, fixture, search, stats,
/// serve. Returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace exhibit
