#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace equiproj {

/// Parses an angle given as a symbolic multiple of pi ("6*pi/16", "pi/2",
/// "-pi", "0.999*pi/2", "3pi/16"), plain radians ("1.25") or degrees
/// ("30deg"). Multiples of pi are evaluated as (k * pi) / d so that
/// "8*pi/16" is exactly pi/2. Throws std::invalid_argument on bad syntax.
double parse_angle(std::string_view text);

/// k such that phi == k * pi / 16 (within 1e-12 rad), if any.
std::optional<int> sixteenth_index(double phi);

/// "6π/16" for sweep multiples, otherwise the value in radians with four
/// decimals.
std::string format_phi(double phi);

/// Directory name for a sweep value: "phi_6pi16", or "phi_0.300000rad" for
/// values off the pi/16 lattice.
std::string phi_dir_name(double phi);

}  // namespace equiproj
