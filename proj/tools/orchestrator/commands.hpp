#pragma once

#include <functional>
#include <map>
#include <string>

#include "config.hpp"
#include "stage.hpp"

namespace mpk::cli {

/// Runs one command against `stage`. Returns 0, or 4 when the command wrote
/// its outputs but the result is numerically degenerate.
using CommandFn = std::function<int(const RunConfig&, Stage&)>;

const std::map<std::string, CommandFn>& commands();

}  // namespace mpk::cli
