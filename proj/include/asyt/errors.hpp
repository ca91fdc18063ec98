#pragma once

#include <stdexcept>
#include <string>

namespace asyt {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error { using Error::Error; };
struct NumericError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct ConsistencyError : Error { using Error::Error; };
struct ParameterError : Error { using Error::Error; };
struct IndexError : Error { using Error::Error; };
struct ControlRangeError : Error { using Error::Error; };
struct TopologyError : Error { using Error::Error; };
struct UndefinedAngleError : Error { using Error::Error; };
struct TraceCompatibilityError : Error { using Error::Error; };

}  // namespace asyt
