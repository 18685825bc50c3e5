#include "warpflow/manifold_spec.hpp"

#include <cstdlib>
#include <utility>

namespace warpflow {

namespace {

std::string format_message(std::size_t pos, const std::string& expected, const std::string& input) {
  return "manifold spec error at position " + std::to_string(pos) + ": expected " + expected +
         " in \"" + input + "\"";
}

class Cursor {
 public:
  explicit Cursor(const std::string& s) : s_(s) {}

  bool done() const { return pos_ >= s_.size(); }
  std::size_t pos() const { return pos_; }

  bool try_literal(const std::string& lit) {
    if (s_.compare(pos_, lit.size(), lit) == 0) {
      pos_ += lit.size();
      return true;
    }
    return false;
  }

  void literal(const std::string& lit) {
    if (!try_literal(lit)) fail("'" + lit + "'");
  }

  int integer() {
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ == start) fail("integer");
    return std::atoi(s_.substr(start, pos_ - start).c_str());
  }

  double real() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) fail("number");
    pos_ += static_cast<std::size_t>(end - begin);
    return v;
  }

  [[noreturn]] void fail(const std::string& expected) { throw ParseError(pos_, expected, s_); }

 private:
  const std::string& s_;
  std::size_t pos_ = 0;
};

FourierSeries parse_fourier(Cursor& c) {
  FourierSeries f;
  f.a0 = c.real();
  while (c.try_literal(";")) {
    const double a = c.real();
    c.literal(",");
    const double b = c.real();
    f.ab.emplace_back(a, b);
  }
  return f;
}

}  // namespace

ParseError::ParseError(std::size_t position, std::string expected, const std::string& input)
    : std::runtime_error(format_message(position, expected, input)),
      position_(position),
      expected_(std::move(expected)) {}

ProfileSpec parse_manifold_spec(const std::string& text, int grid_size) {
  Cursor c(text);
  ProfileSpec spec;

  if (c.try_literal("circle")) {
    spec = ProfileSpec::circle(grid_size);
  } else if (c.try_literal("sphere:")) {
    c.literal("d=");
    const int d = c.integer();
    std::vector<double> coeffs;
    if (c.try_literal(",")) {
      c.literal("r=");
      coeffs.push_back(c.real());
      while (c.try_literal(",")) coeffs.push_back(c.real());
    }
    spec = ProfileSpec::sphere(d, grid_size, std::move(coeffs));
  } else if (c.try_literal("ring:")) {
    c.literal("d=");
    const int d = c.integer();
    c.literal(",");
    if (c.try_literal("logh=")) {
      spec = ProfileSpec::ring_log(d, grid_size, parse_fourier(c));
    } else if (c.try_literal("h=")) {
      spec = ProfileSpec::ring_direct(d, grid_size, parse_fourier(c));
    } else {
      c.fail("'logh=' or 'h='");
    }
  } else {
    c.fail("'sphere:', 'ring:' or 'circle'");
  }

  if (!c.done()) c.fail("end of spec");
  spec.name = text;
  return spec;
}

}  // namespace warpflow
