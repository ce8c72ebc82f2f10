#pragma once

#include <nlohmann/json.hpp>

#include "tqa/answer_controller.hpp"
#include "tqa/memory_store.hpp"
#include "tqa/teaching_session.hpp"

// Wire shapes of the domain types, shared by transcripts, reports and the HTTP API.
namespace tqa {

nlohmann::json to_json(const Proof& proof);
nlohmann::json to_json(const AnswerResult& result);
nlohmann::json to_json(const FactRecord& record);
nlohmann::json to_json(const ScoredFact& hit);
nlohmann::json to_json(const SessionState& state);
nlohmann::json to_json(const TranscriptEntry& entry);

/// Inverse of to_json(Proof); used by the remote backend shim.
Proof proof_from_json(const nlohmann::json& j);

/// Legal actions for the current turn, as type tags (what a UI may offer).
std::vector<std::string> available_actions(const SessionState& state);

}  // namespace tqa
