#include "tqa/errors.hpp"

namespace tqa {

std::string_view code_name(ErrorCode code)
{
    switch (code) {
    case ErrorCode::EmptyFact: return "empty_fact";
    case ErrorCode::EmptyPremises: return "empty_premises";
    case ErrorCode::IoFailure: return "io_failure";
    case ErrorCode::FormatError: return "format_error";
    case ErrorCode::UnknownGoldId: return "unknown_gold_id";
    case ErrorCode::NoCandidates: return "no_candidates";
    case ErrorCode::BackendUnavailable: return "backend_unavailable";
    case ErrorCode::UnparseableStatement: return "unparseable_statement";
    case ErrorCode::InvalidQuestion: return "invalid_question";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::SessionClosed: return "session_closed";
    case ErrorCode::SessionNotFound: return "session_not_found";
    case ErrorCode::BadIndex: return "bad_index";
    case ErrorCode::NotConfirmed: return "not_confirmed";
    case ErrorCode::InvariantViolation: return "invariant_violation";
    case ErrorCode::NotFound: return "not_found";
    }
    return "unknown";
}

bool is_user_error(ErrorCode code)
{
    switch (code) {
    case ErrorCode::BackendUnavailable:
    case ErrorCode::IoFailure:
        return false;
    default:
        return true;
    }
}

static std::string with_line(const std::string& message, std::optional<std::size_t> line)
{
    if (!line) {
        return message;
    }
    return "line " + std::to_string(*line) + ": " + message;
}

Error::Error(ErrorCode code, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(with_line(message, line)), code_(code), line_(line)
{}

}  // namespace tqa
