#pragma once

#include <stdexcept>
#include <string>

namespace bokehkit {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem-level failures: missing files, unreadable or unwritable paths.
class IoError : public Error {
public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Malformed or unsupported file content: bad magic, unsupported bit depth,
// corrupt streams, truncated payloads.
class FormatError : public Error {
public:
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

// Spatial/channel shape violations between operands.
class ShapeError : public Error {
public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Out-of-range or degenerate argument values.
class ValueError : public Error {
public:
  explicit ValueError(const std::string& msg) : Error(msg) {}
};

}  // namespace bokehkit
