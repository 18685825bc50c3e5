#include "warpflow/output.hpp"

#include <cstdio>
#include <ostream>

namespace warpflow {

std::string g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

const char* version_string() {
#ifdef WARPFLOW_VERSION
  return WARPFLOW_VERSION;
#else
  return "0.0.0";
#endif
}

void write_output_header(std::ostream& os, const OutputHeader& h) {
  os << "# warpflow " << version_string() << "\n";
  os << "# command: " << h.command << "\n";
  os << "# manifold: " << h.manifold << "\n";
  os << "# N: " << h.grid << "\n";
  os << "# seed: " << h.seed << "\n";
  os << "# config:";
  for (const auto& [k, v] : h.config) os << " " << k << "=" << v;
  os << "\n";
}

}  // namespace warpflow
