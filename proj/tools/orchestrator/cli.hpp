#pragma once

namespace mpk::cli {

/// Entry point of the `mpk` tool; returns the process exit code.
///
///   0 success, 1 unexpected failure, 2 configuration error,
///   3 input error, 4 numerical error.
int run(int argc, char** argv);

}  // namespace mpk::cli
