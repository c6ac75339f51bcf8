#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace obcov {

enum class Errc {
    ShapeMismatch,
    NonFinite,
    NotSymmetric,
    NotPositiveDefinite,
    NoConvergence,
    EmptyInput,
    InvalidState,
    InvalidArgument,
    PolicyMismatch,
    MissingScale,
    MaskRange,
    MaskAsymmetric,
    BadMagic,
    UnsupportedVersion,
    TruncatedStream,
    IoError,
    InvalidConfig,
};

std::string_view errc_name(Errc code) noexcept;

/// Single exception type for the library; `code()` lets callers (the CLI in
/// particular) map failures onto exit statuses without string matching.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace obcov
