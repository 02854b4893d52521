#pragma once

#include <stdexcept>
#include <string>

namespace hopnet {

/// Base class for all errors thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateTriangle : Error { using Error::Error; };
struct DegenerateConfiguration : Error { using Error::Error; };
struct ZeroQuaternion : Error { using Error::Error; };
struct MalformedMesh : Error { using Error::Error; };
struct RankOutOfRange : Error { using Error::Error; };
struct MissingHistory : Error { using Error::Error; };
struct MissingPhysicalParams : Error { using Error::Error; };
struct ShapeMismatch : Error { using Error::Error; };
struct PlacementFailure : Error { using Error::Error; };
struct NumericalBlowup : Error { using Error::Error; };
struct NonFiniteLoss : Error { using Error::Error; };
struct OutOfRange : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct UnknownObject : Error { using Error::Error; };
struct EditOnStatic : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };

} // namespace hopnet
