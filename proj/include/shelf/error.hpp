#pragma once

#include <stdexcept>
#include <string>

namespace shelf {

enum class ErrorCode {
    InvalidArgument,
    NotFound,
    Io,
    Format,
    Degenerate,
    Conflict,
    Unavailable,
};

/// Exception type used across the toolkit. The code lets callers (the HTTP
/// layer in particular) map failures onto status codes without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace shelf
