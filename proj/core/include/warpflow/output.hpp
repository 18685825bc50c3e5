#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace warpflow {

// Shortest round-trip decimal with 17 significant digits.
std::string g17(double x);

const char* version_string();

// Reproducibility header prepended to every output file:
//   # warpflow <version>
//   # command: <name>
//   # manifold: <spec string>
//   # N: <grid>
//   # seed: <seed>
//   # config: k1=v1 k2=v2 ...
struct OutputHeader {
  std::string command;
  std::string manifold;
  int grid = 0;
  unsigned seed = 0;
  std::vector<std::pair<std::string, std::string>> config;
};

void write_output_header(std::ostream& os, const OutputHeader& h);

}  // namespace warpflow
