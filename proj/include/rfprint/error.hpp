#pragma once

#include <stdexcept>
#include <string>

namespace rfprint {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated an operation's precondition (bad length, bad parameter).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Two sequences or tensors that must agree in size do not.
class ShapeMismatch : public Error {
public:
    using Error::Error;
};

/// Reading or writing a file failed, or the file is malformed.
class IoError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace rfprint
