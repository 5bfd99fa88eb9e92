#pragma once

#include <stdexcept>
#include <string>

namespace autosar {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// G(phi) has rank < 2: all reflector angles coincide (or are collinear).
class SingularGeometry : public Error {
public:
    using Error::Error;
};

/// Fewer than two detections in a frame.
class InsufficientDetections : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// The synthetic array has no angular response (tangential velocity is zero).
class DegenerateGeometry : public Error {
public:
    using Error::Error;
};

/// Imaging requested on a scene without reflector ranges.
class MissingRanges : public Error {
public:
    using Error::Error;
};

/// u = Phi L V p'(theta) vanishes, so the angle is unobservable by the SAR.
class ZeroTangentialVelocity : public Error {
public:
    using Error::Error;
};

/// omega(N) needs at least two frames.
class UndefinedForN1 : public Error {
public:
    using Error::Error;
};

class ConfigInvalid : public Error {
public:
    using Error::Error;
};

}  // namespace autosar
