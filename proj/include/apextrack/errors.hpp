#pragma once

#include <stdexcept>
#include <string>

namespace apextrack {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A coordinate or cell outside the grid.
class RangeError : public Error {
public:
    using Error::Error;
};

/// Tensors whose grids or channel counts disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// A value violating a type invariant or operation precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Frames handed to the tracker out of order.
class OrderingError : public Error {
public:
    using Error::Error;
};

/// Malformed input text; carries the index of the offending document.
class ParseError : public Error {
public:
    ParseError(std::size_t document_index, const std::string& what)
        : Error("document " + std::to_string(document_index) + ": " + what),
          document_index_(document_index) {}

    std::size_t document_index() const noexcept { return document_index_; }

private:
    std::size_t document_index_;
};

/// A required JSON key is missing or has the wrong type.
class SchemaError : public Error {
public:
    explicit SchemaError(std::string key)
        : Error("missing or invalid key '" + key + "'"), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// More than one box on an image where a single apex is expected.
class AmbiguityError : public Error {
public:
    explicit AmbiguityError(long long image_id)
        : Error("image " + std::to_string(image_id) + " has more than one box"),
          image_id_(image_id) {}

    long long image_id() const noexcept { return image_id_; }

private:
    long long image_id_;
};

/// Instance too large for exhaustive enumeration.
class SizeError : public Error {
public:
    using Error::Error;
};

enum class TensorFormatErrorKind {
    BadMagic,
    VersionMismatch,
    Truncated,
    NaNPayload,
    BadKind,
    BadShape,
    InvalidValue,
    TrailingData,
};

const char* to_string(TensorFormatErrorKind kind) noexcept;

class TensorFormatError : public Error {
public:
    TensorFormatError(TensorFormatErrorKind kind, const std::string& what)
        : Error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    TensorFormatErrorKind kind() const noexcept { return kind_; }

private:
    TensorFormatErrorKind kind_;
};

}  // namespace apextrack
