#pragma once

#include "qevo/program.hpp"
#include "qevo/records.hpp"

#include <string>

namespace qevo {

/// Representative starting program for a strategy family. Unknown family
/// names get a moving-average crossover. Tags are {category}.
Program seed_program(const std::string& category);

/// Always-invested equal-weight portfolio bought once, with no tags.
Program buy_and_hold_seed();

/// Template hypothesis for a seed program.
Hypothesis seed_hypothesis(const std::string& category);

}  // namespace qevo
