#pragma once

#include <stdexcept>
#include <string>

namespace microprobe {

// Invalid configuration, flags, or preconditions the caller controls.
// The CLI maps this to exit code 1.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Failures of the run itself (I/O, backends, malformed data). Exit code 2.
class RunError : public std::runtime_error {
  public:
    explicit RunError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace microprobe
