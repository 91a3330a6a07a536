#include "shroud/error.hpp"

namespace shroud {

std::string_view errc_name(Errc code) noexcept
{
    switch (code) {
    case Errc::UnsupportedFormat: return "UnsupportedFormat";
    case Errc::CorruptData: return "CorruptData";
    case Errc::EncodeFailure: return "EncodeFailure";
    case Errc::DegenerateContour: return "DegenerateContour";
    case Errc::SelfIntersectingContour: return "SelfIntersectingContour";
    case Errc::EmptyMask: return "EmptyMask";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NotJson: return "NotJson";
    case Errc::SchemaViolation: return "SchemaViolation";
    case Errc::DuplicateElementConflict: return "DuplicateElementConflict";
    case Errc::UnknownTechnique: return "UnknownTechnique";
    case Errc::UnknownRiskId: return "UnknownRiskId";
    case Errc::UnknownElementId: return "UnknownElementId";
    case Errc::CoverageGap: return "CoverageGap";
    case Errc::BoxOutOfBounds: return "BoxOutOfBounds";
    case Errc::EmptyReport: return "EmptyReport";
    case Errc::Transport: return "Transport";
    case Errc::AuthFailure: return "AuthFailure";
    case Errc::Timeout: return "Timeout";
    case Errc::BackendError: return "BackendError";
    case Errc::SafetyRejection: return "SafetyRejection";
    case Errc::DegenerateResult: return "DegenerateResult";
    case Errc::NoPersonDetected: return "NoPersonDetected";
    case Errc::PreconditionViolation: return "PreconditionViolation";
    case Errc::BackendMissing: return "BackendMissing";
    case Errc::InvalidParameter: return "InvalidParameter";
    case Errc::InsufficientKeypoints: return "InsufficientKeypoints";
    case Errc::EmptyPrompt: return "EmptyPrompt";
    case Errc::ImageMissing: return "ImageMissing";
    case Errc::ReportMissing: return "ReportMissing";
    case Errc::NoSelection: return "NoSelection";
    case Errc::NothingToUndo: return "NothingToUndo";
    case Errc::NothingToRedo: return "NothingToRedo";
    case Errc::IntegrityFailure: return "IntegrityFailure";
    case Errc::ParseError: return "ParseError";
    case Errc::MissingImage: return "MissingImage";
    case Errc::OutOfRange: return "OutOfRange";
    case Errc::UnknownSession: return "UnknownSession";
    case Errc::AnalyzeInFlight: return "AnalyzeInFlight";
    case Errc::PayloadTooLarge: return "PayloadTooLarge";
    case Errc::Io: return "Io";
    }
    return "Unknown";
}

} // namespace shroud
