#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tqa {

enum class ErrorCode {
    EmptyFact,
    EmptyPremises,
    IoFailure,
    FormatError,
    UnknownGoldId,
    NoCandidates,
    BackendUnavailable,
    UnparseableStatement,
    InvalidQuestion,
    InvalidArgument,
    SessionClosed,
    SessionNotFound,
    BadIndex,
    NotConfirmed,
    InvariantViolation,
    NotFound,
};

/// Stable snake_case name, used as the `code` field of API error bodies.
std::string_view code_name(ErrorCode code);

/// True for errors caused by the caller's input rather than by the system.
bool is_user_error(ErrorCode code);

class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message, std::optional<std::size_t> line = std::nullopt);

    ErrorCode code() const noexcept { return code_; }
    /// 1-based line number for file-format errors.
    std::optional<std::size_t> line() const noexcept { return line_; }

  private:
    ErrorCode code_;
    std::optional<std::size_t> line_;
};

}  // namespace tqa
