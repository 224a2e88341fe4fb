#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace forgerykit {

enum class ErrorKind {
    MalformedImage,
    UnsupportedFormat,
    EncodeFailure,
    ShapeMismatch,
    InvalidArgument,
    MissingDirectory,
    EmptyClass,
    DegenerateClass,
    EmptySplit,
    MissingFile,
    IoFailure,
    LengthMismatch,
    EmptyInput,
    SingleClassInput,
    ParseError,
    RangeError,
    DuplicateId,
};

std::string_view to_string(ErrorKind kind) noexcept;

// All library failures surface as this exception; `kind()` lets callers
// (the CLI in particular) map failures onto exit codes.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace forgerykit
