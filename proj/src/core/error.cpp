#include "forgerykit/error.hpp"

namespace forgerykit {

std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::MalformedImage: return "MalformedImage";
    case ErrorKind::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorKind::EncodeFailure: return "EncodeFailure";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::MissingDirectory: return "MissingDirectory";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::DegenerateClass: return "DegenerateClass";
    case ErrorKind::EmptySplit: return "EmptySplit";
    case ErrorKind::MissingFile: return "MissingFile";
    case ErrorKind::IoFailure: return "IoFailure";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::SingleClassInput: return "SingleClassInput";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::RangeError: return "RangeError";
    case ErrorKind::DuplicateId: return "DuplicateId";
    }
    return "Unknown";
}

}  // namespace forgerykit
