#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "tqa/answer_controller.hpp"

namespace tqa {

// Premise and considered-fact indices are 1-based, as numbered in the dialog.
struct LooksGood {};
struct FactIsFalse { std::size_t index = 0; };
struct FactIsMissing { std::string text; };
struct FactIsTrue { std::size_t index = 0; };
struct BadReasoning {};
struct FactIsIrrelevant { std::size_t index = 0; };
struct UseOldFact { std::size_t index = 0; };
struct UseNewFact { std::string text; };

using FeedbackAction = std::variant<LooksGood, FactIsFalse, FactIsMissing, FactIsTrue, BadReasoning,
                                    FactIsIrrelevant, UseOldFact, UseNewFact>;

/// snake_case type tag, e.g. "fact_is_false".
std::string_view action_name(const FeedbackAction& action);
/// {"type": "...", "index": n} or {"type": "...", "text": "..."}.
nlohmann::json action_to_json(const FeedbackAction& action);
/// Throws Error(InvalidArgument) on an unknown type or missing field.
FeedbackAction action_from_json(const nlohmann::json& j);

enum class SessionStatus { Active, Confirmed, Abandoned };
std::string_view status_name(SessionStatus s);

struct SessionOverrides {
    std::vector<std::string> asserted_true;
    std::vector<std::string> asserted_false;  ///< the original premises marked false
    std::vector<std::string> irrelevant;
    std::optional<std::string> preferred_fact;
};

struct TranscriptEntry {
    std::size_t turn = 0;
    std::string actor;  ///< "user" or "system"
    nlohmann::json payload;  ///< {"question", "choices"} | {"action"} | {"result"}
    std::string memory_hash;
};

struct SessionState {
    std::string session_id;
    std::string question;
    std::vector<std::string> choices;  ///< empty for open-ended questions
    std::size_t turn_number = 0;
    AnswerResult last_result;
    SessionOverrides overrides;
    std::vector<TranscriptEntry> transcript;
    SessionStatus status = SessionStatus::Active;

    QuestionLink question_link() const;
};

/// Deterministic id derived from the question, choices and a caller counter.
std::string make_session_id(std::string_view question, const std::vector<std::string>& choices,
                            std::uint64_t counter = 0);

/// Throws Error(InvalidQuestion) for an empty question.
SessionState start_session(std::string_view question, const std::vector<std::string>& choices,
                           MemoryStore& memory, const ReasoningBackend& backend, const ControllerConfig& config,
                           std::string session_id = {});

/// One dialog step. Throws Error(SessionClosed) when the session is not active,
/// Error(BadIndex) for an index outside the current turn, Error(NotConfirmed)
/// for LooksGood on a turn without an answer, Error(EmptyFact) for blank text.
/// A failed action leaves both the state and the memory untouched.
SessionState apply_feedback(const SessionState& state, const FeedbackAction& action, MemoryStore& memory,
                            const ReasoningBackend& backend, const ControllerConfig& config);

/// Adds the confirmed proof's premises and hypothesis to memory.
/// Throws Error(NotConfirmed) unless the session is confirmed with an answer.
void commit_turn(const SessionState& state, MemoryStore& memory);

SessionState abandon_session(const SessionState& state);

/// The context adjustments a re-ask applies for these overrides.
ContextOverrides context_overrides(const SessionOverrides& overrides, const ReasoningBackend& backend);

std::string transcript_jsonl(const SessionState& state);

struct ReplayOutcome {
    SessionState state;
    std::string recorded_hash;
    std::string replayed_hash;
    bool matches() const { return recorded_hash == replayed_hash; }
};

/// Re-runs the user actions of a recorded transcript against `memory`, which
/// must be in the state the recording started from (checked when recorded).
/// Throws Error(FormatError, line) on a malformed transcript and
/// Error(InvariantViolation) when the starting memory differs.
ReplayOutcome replay_transcript(std::string_view jsonl, MemoryStore& memory, const ReasoningBackend& backend,
                                const ControllerConfig& config);

}  // namespace tqa
