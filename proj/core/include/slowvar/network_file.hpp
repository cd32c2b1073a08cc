#pragma once

#include <istream>
#include <string>

#include "slowvar/network.hpp"

namespace slowvar {

// Reads a network definition in flat key = value form:
//
//   species      = X1 X2
//   volume       = 8
//   convention   = stated
//   slow_weights = 1 2
//   domain_lo    = 1 1
//   domain_hi    = 110 110
//   reaction     = X2 -> X1 + X2 @ 32
//   reaction     = X1 + X2 -> X2 @ 0.32 V^-1
//   reaction     = 0 -> X1 @ 184.375 V^1
//   reaction     = 2 X1 -> X2 @ 80 V^-1
//
// A trailing `V^p` multiplies the rate by volume^p under the stated
// convention and is ignored under the table convention. Lines starting
// with '#' are comments. The reactant side fixes the mass-action law.
Model parse_network(std::istream& in, const std::string& name = "file");
Model load_network_file(const std::string& path);

// The convention key can be overridden after parsing.
Model parse_network(std::istream& in, const std::string& name, const VolumeScaling* override_scaling);

}  // namespace slowvar
