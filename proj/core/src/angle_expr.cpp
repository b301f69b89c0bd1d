#include "equiproj/angle_expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "equiproj/sphere_geom.hpp"

namespace equiproj {
namespace {

class Cursor {
 public:
  explicit Cursor(std::string_view text) : text_(text) {}

  void skip_space() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }

  bool done() {
    skip_space();
    return pos_ == text_.size();
  }

  bool consume(std::string_view token) {
    skip_space();
    if (text_.substr(pos_, token.size()) == token) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  std::optional<double> number() {
    skip_space();
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr == first) return std::nullopt;
    pos_ += static_cast<std::size_t>(ptr - first);
    return value;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
};

[[noreturn]] void bad(std::string_view text) {
  throw std::invalid_argument("cannot parse angle expression '" +
                              std::string(text) + "'");
}

}  // namespace

double parse_angle(std::string_view text) {
  Cursor cur(text);
  double sign = 1.0;
  if (cur.consume("-")) {
    sign = -1.0;
  } else {
    cur.consume("+");
  }

  std::optional<double> coefficient = cur.number();
  bool has_pi = false;
  if (coefficient) {
    const bool star = cur.consume("*");
    has_pi = cur.consume("pi") || cur.consume("π");
    if (star && !has_pi) bad(text);
  } else {
    has_pi = cur.consume("pi") || cur.consume("π");
    if (!has_pi) bad(text);
    coefficient = 1.0;
  }

  double value = 0.0;
  if (has_pi) {
    double divisor = 1.0;
    if (cur.consume("/")) {
      const auto d = cur.number();
      if (!d || *d == 0.0) bad(text);
      divisor = *d;
    }
    value = (*coefficient * kPi) / divisor;
  } else if (cur.consume("deg")) {
    value = *coefficient * kPi / 180.0;
  } else {
    value = *coefficient;
  }
  if (!cur.done() || !std::isfinite(value)) bad(text);
  return sign * value;
}

std::optional<int> sixteenth_index(double phi) {
  const double k = std::round(phi * 16.0 / kPi);
  if (std::abs(k) > 1e6) return std::nullopt;
  if (std::abs(phi - (k * kPi) / 16.0) > 1e-12) return std::nullopt;
  return static_cast<int>(k);
}

std::string format_phi(double phi) {
  if (const auto k = sixteenth_index(phi)) {
    if (*k == 1) return "π/16";
    if (*k == -1) return "-π/16";
    return std::to_string(*k) + "π/16";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", phi);
  return buf;
}

std::string phi_dir_name(double phi) {
  if (const auto k = sixteenth_index(phi)) {
    return "phi_" + std::to_string(*k) + "pi16";
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "phi_%.6frad", phi);
  return buf;
}

}  // namespace equiproj
