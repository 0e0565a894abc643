#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wkf {

enum class Errc {
    NotSquare,
    NotHermitian,
    NonFinite,
    DimensionMismatch,
    DimensionTooLarge,
    NoConvergence,
    ZeroPencil,
    EmptyFamily,
    ZeroSubspace,
    ZeroK,
    LengthMismatch,
    BudgetZero,
    NotKFrame,
    ZeroT,
    NotInjective,
    NotKFrameOnRange,
    NotKWoven,
    NotKWovenOnRange,
    HypothesisFails,
    BadAlpha,
    NoFiniteC,
    CTooLarge,
    ParseError,
    ValidationError,
};

constexpr std::string_view errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::NotSquare: return "NotSquare";
    case Errc::NotHermitian: return "NotHermitian";
    case Errc::NonFinite: return "NonFinite";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::DimensionTooLarge: return "DimensionTooLarge";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::ZeroPencil: return "ZeroPencil";
    case Errc::EmptyFamily: return "EmptyFamily";
    case Errc::ZeroSubspace: return "ZeroSubspace";
    case Errc::ZeroK: return "ZeroK";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::BudgetZero: return "BudgetZero";
    case Errc::NotKFrame: return "NotKFrame";
    case Errc::ZeroT: return "ZeroT";
    case Errc::NotInjective: return "NotInjective";
    case Errc::NotKFrameOnRange: return "NotKFrameOnRange";
    case Errc::NotKWoven: return "NotKWoven";
    case Errc::NotKWovenOnRange: return "NotKWovenOnRange";
    case Errc::HypothesisFails: return "HypothesisFails";
    case Errc::BadAlpha: return "BadAlpha";
    case Errc::NoFiniteC: return "NoFiniteC";
    case Errc::CTooLarge: return "CTooLarge";
    case Errc::ParseError: return "ParseError";
    case Errc::ValidationError: return "ValidationError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

} // namespace wkf
