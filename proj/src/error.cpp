#include "obcov/error.hpp"

namespace obcov {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::NonFinite: return "NonFinite";
    case Errc::NotSymmetric: return "NotSymmetric";
    case Errc::NotPositiveDefinite: return "NotPositiveDefinite";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::InvalidState: return "InvalidState";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::PolicyMismatch: return "PolicyMismatch";
    case Errc::MissingScale: return "MissingScale";
    case Errc::MaskRange: return "MaskRange";
    case Errc::MaskAsymmetric: return "MaskAsymmetric";
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::TruncatedStream: return "TruncatedStream";
    case Errc::IoError: return "IoError";
    case Errc::InvalidConfig: return "InvalidConfig";
    }
    return "Unknown";
}

} // namespace obcov
