#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace biouncert {

enum class Errc {
    MalformedHeader,
    PayloadLength,
    UnsupportedVersion,
    InvalidVolume,
    InvalidStack,
    MissingColumn,
    UnknownColumn,
    NonNumeric,
    InvalidValue,
    DuplicateId,
    ZeroVariance,
    OutOfBounds,
    InvalidConfig,
    InfeasibleEffect,
    UndefinedCv,
    DimsMismatch,
    IdMismatch,
    SingularDesign,
    AllWeightsZero,
    ColumnMismatch,
    MissingConfidence,
    DegenerateSplit,
    Io,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

inline std::string_view errc_name(Errc code) noexcept
{
    switch (code) {
    case Errc::MalformedHeader: return "malformed header";
    case Errc::PayloadLength: return "payload length mismatch";
    case Errc::UnsupportedVersion: return "unsupported version";
    case Errc::InvalidVolume: return "invalid volume";
    case Errc::InvalidStack: return "invalid sample stack";
    case Errc::MissingColumn: return "missing column";
    case Errc::UnknownColumn: return "unknown column";
    case Errc::NonNumeric: return "non-numeric cell";
    case Errc::InvalidValue: return "invalid value";
    case Errc::DuplicateId: return "duplicate subject id";
    case Errc::ZeroVariance: return "zero-variance column";
    case Errc::OutOfBounds: return "ellipsoid out of bounds";
    case Errc::InvalidConfig: return "invalid config";
    case Errc::InfeasibleEffect: return "infeasible effect spec";
    case Errc::UndefinedCv: return "undefined coefficient of variation";
    case Errc::DimsMismatch: return "dims mismatch";
    case Errc::IdMismatch: return "subject id mismatch";
    case Errc::SingularDesign: return "singular design";
    case Errc::AllWeightsZero: return "all weights zero";
    case Errc::ColumnMismatch: return "column mismatch";
    case Errc::MissingConfidence: return "missing confidence";
    case Errc::DegenerateSplit: return "degenerate split";
    case Errc::Io: return "i/o failure";
    }
    return "error";
}

} // namespace biouncert
