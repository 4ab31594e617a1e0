#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace blpp {

enum class ErrorCode {
    InvalidArgument,
    NonIncreasingTimes,
    MarkOutOfRange,
    TimeOutOfWindow,
    NegativeRate,
    NonPositiveRate,
    EmptyInput,
    GridTooCoarse,
    GridOutOfRange,
    UnstableKernel,
    SingularSystem,
    SingularErrorMatrix,
    SingularV,
    NumericOverflow,
    ConfigError,
    IoError,
};

// Broad failure class, used by the CLI to pick an exit status.
enum class ErrorKind { config, numeric, io };

constexpr std::string_view code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonIncreasingTimes: return "NonIncreasingTimes";
    case ErrorCode::MarkOutOfRange: return "MarkOutOfRange";
    case ErrorCode::TimeOutOfWindow: return "TimeOutOfWindow";
    case ErrorCode::NegativeRate: return "NegativeRate";
    case ErrorCode::NonPositiveRate: return "NonPositiveRate";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::GridOutOfRange: return "GridOutOfRange";
    case ErrorCode::UnstableKernel: return "UnstableKernel";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::SingularErrorMatrix: return "SingularErrorMatrix";
    case ErrorCode::SingularV: return "SingularV";
    case ErrorCode::NumericOverflow: return "NumericOverflow";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

constexpr ErrorKind kind_of(ErrorCode code) {
    switch (code) {
    case ErrorCode::UnstableKernel:
    case ErrorCode::SingularSystem:
    case ErrorCode::SingularErrorMatrix:
    case ErrorCode::SingularV:
    case ErrorCode::NumericOverflow:
        return ErrorKind::numeric;
    case ErrorCode::IoError:
        return ErrorKind::io;
    default:
        return ErrorKind::config;
    }
}

// All library failures are reported through this exception. Numeric details
// (spectral radius, failing order, condition estimate, ...) travel in `fields`.
class Error : public std::runtime_error {
public:
    using Fields = std::vector<std::pair<std::string, double>>;

    Error(ErrorCode code, const std::string& message, Fields fields = {})
        : std::runtime_error(std::string(code_name(code)) + ": " + message),
          code_(code), detail_(message), fields_(std::move(fields)) {}

    ErrorCode code() const noexcept { return code_; }
    ErrorKind kind() const noexcept { return kind_of(code_); }
    const std::string& detail() const noexcept { return detail_; }
    const Fields& fields() const noexcept { return fields_; }

    double field(std::string_view name, double fallback = 0.0) const {
        for (const auto& [key, value] : fields_) {
            if (key == name) return value;
        }
        return fallback;
    }

    // Pipeline stage that raised the error; empty outside the experiment runner.
    const std::string& stage() const noexcept { return stage_; }
    void set_stage(std::string stage) { stage_ = std::move(stage); }

private:
    ErrorCode code_;
    std::string detail_;
    Fields fields_;
    std::string stage_;
};

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) throw Error(code, message);
}

} // namespace blpp
