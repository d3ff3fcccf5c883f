#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vibtrack {

/// Base for every error raised by the library. Callers that only need to
/// report a failure can catch this; the subclasses carry the category.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input data (PGM, CSV, detection files, spec files).
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
    explicit ParseError(const std::string& what) : Error(what) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_ = 0;
};

/// A well-formed request that violates a precondition (bad sizes, ranges,
/// inconsistent configuration).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Scene description that cannot be rendered (margin or overlap violations).
class SpecError : public Error {
public:
    using Error::Error;
};

/// A tracker lost its target. frame() is the sequence position where it happened.
class TrackingError : public Error {
public:
    TrackingError(const std::string& what, std::size_t frame)
        : Error(what + " (frame " + std::to_string(frame) + ")"), frame_(frame) {}

    std::size_t frame() const noexcept { return frame_; }

private:
    std::size_t frame_;
};

/// No usable anchor: the target is not present in frame 0.
class AnchorError : public TrackingError {
public:
    using TrackingError::TrackingError;
};

/// Keypoint motion filter left no surviving matches.
class ConsensusError : public Error {
public:
    using Error::Error;
};

}  // namespace vibtrack
