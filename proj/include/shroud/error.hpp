#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shroud {

// Every failure the engine can report. The service maps each code to exactly
// one (HTTP status, tag) pair; the CLI maps them to exit codes.
enum class Errc {
    // image-core
    UnsupportedFormat,
    CorruptData,
    EncodeFailure,
    DegenerateContour,
    SelfIntersectingContour,
    EmptyMask,
    DimensionMismatch,
    // risk-model
    NotJson,
    SchemaViolation,
    DuplicateElementConflict,
    UnknownTechnique,
    UnknownRiskId,
    UnknownElementId,
    CoverageGap,
    // prompt-engine
    BoxOutOfBounds,
    EmptyReport,
    // model-backends
    Transport,
    AuthFailure,
    Timeout,
    BackendError,
    SafetyRejection,
    DegenerateResult,
    NoPersonDetected,
    PreconditionViolation,
    BackendMissing,
    // obfuscation-engine
    InvalidParameter,
    InsufficientKeypoints,
    EmptyPrompt,
    // pipeline-session
    ImageMissing,
    ReportMissing,
    NoSelection,
    NothingToUndo,
    NothingToRedo,
    IntegrityFailure,
    // eval-harness
    ParseError,
    MissingImage,
    OutOfRange,
    // service
    UnknownSession,
    AnalyzeInFlight,
    PayloadTooLarge,
    Io,
};

std::string_view errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code), detail_(message)
    {
    }

    Errc code() const noexcept { return code_; }
    // Message without the code prefix.
    const std::string& detail() const noexcept { return detail_; }

private:
    Errc code_;
    std::string detail_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) { throw Error(code, message); }

} // namespace shroud
