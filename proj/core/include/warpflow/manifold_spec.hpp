#pragma once

#include <stdexcept>
#include <string>

#include "warpflow/manifold.hpp"

namespace warpflow {

// Raised on malformed manifold spec strings; carries the character position
// and the token class that was expected there.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t position, std::string expected, const std::string& input);

  std::size_t position() const { return position_; }
  const std::string& expected() const { return expected_; }

 private:
  std::size_t position_;
  std::string expected_;
};

// Grammar:
//   spec    := "circle"
//            | "sphere:d=" int [",r=" reals]
//            | "ring:d=" int ",logh=" fourier      (h = exp of the series)
//            | "ring:d=" int ",h=" fourier         (h given directly)
//   reals   := real ("," real)*
//   fourier := real (";" real "," real)*           (a0; a1,b1; a2,b2; ...)
ProfileSpec parse_manifold_spec(const std::string& text, int grid_size);

}  // namespace warpflow
