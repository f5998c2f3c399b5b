#pragma once

#include <stdexcept>
#include <string>

namespace lzspa {

/// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad alphabet, bad params, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A token fell outside the model's alphabet.
class InvalidSymbol : public Error {
public:
    using Error::Error;
};

/// A node id does not exist in the tree.
class UnknownNode : public Error {
public:
    using Error::Error;
};

/// A binary payload did not start with the expected magic bytes.
class BadMagic : public Error {
public:
    using Error::Error;
};

/// The payload's format version is not one we can read.
class UnsupportedVersion : public Error {
public:
    using Error::Error;
};

/// The payload ended before its declared contents did.
class Truncated : public Error {
public:
    using Error::Error;
};

/// The payload is structurally malformed in some other way.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Generation cannot start: the model's root has no children.
class CannotSeed : public Error {
public:
    using Error::Error;
};

/// Two embedding sets (or histograms) do not have compatible shapes.
class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// A metric is undefined for the given inputs (e.g. no pitched windows).
class NotComputable : public Error {
public:
    using Error::Error;
};

/// An exact-enumeration request exceeds the configured budget.
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

/// Filesystem-level failure while reading or writing an artifact.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace lzspa
