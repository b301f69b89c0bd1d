#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace equiproj {

// Geometry or contract violation on caller-supplied values (bad raster size,
// index out of grid, coordinate outside the canvas, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Failure reading or writing files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using WarningHandler = std::function<void(std::string_view)>;

// Installs a sink for non-fatal diagnostics and returns the previous one.
// The default handler writes "warning: <msg>" to stderr.
WarningHandler set_warning_handler(WarningHandler handler);

void warn(std::string_view message);

}  // namespace equiproj
