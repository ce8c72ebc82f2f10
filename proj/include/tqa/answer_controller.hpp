#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tqa/entailment.hpp"
#include "tqa/memory_store.hpp"

namespace tqa {

struct ControllerConfig {
    RetrievalConfig retrieval;
    double belief_threshold = 0.5;      ///< tau_b
    double entailment_threshold = 0.5;  ///< tau_e
    std::size_t candidate_n = 4;
    std::size_t max_premises = 3;

    void validate() const;
};

enum class Outcome { Answered, NoProof };

enum class Verdict { Accepted, PremiseDisbelieved, WeakEntailment, Blocked };

std::string_view outcome_name(Outcome o);
std::string_view verdict_name(Verdict v);

struct PoolEntry {
    Proof proof;
    Verdict verdict = Verdict::Accepted;
    std::string choice_label;
    std::size_t choice_index = 0;
};

struct ConsideredFact {
    std::string text;
    double belief = 0.0;
    bool disbelieved = false;
};

struct AnswerResult {
    Outcome outcome = Outcome::NoProof;
    // Answered only
    std::string choice_label;
    std::string choice_text;
    std::size_t choice_index = 0;
    std::optional<Proof> best_proof;
    std::vector<PoolEntry> proof_pool;
    // Both outcomes: retrieved context, then every generated premise.
    std::vector<ConsideredFact> considered_facts;
    std::vector<std::string> context;
    std::vector<std::string> hypotheses;  ///< one per choice
    std::vector<double> direct_scores;    ///< answer_direct only
    std::size_t attempts = 0;

    bool answered() const { return outcome == Outcome::Answered; }
};

/// Session-level adjustments to the retrieved context.
struct ContextOverrides {
    /// Put first in the context, and so always tried as a forced premise.
    std::optional<std::string> preferred;
    /// Appended after the retrieved facts.
    std::vector<std::string> extra;
    /// Removed from the retrieved facts (compared case-insensitively).
    std::vector<std::string> excluded;
};

/// "A", "B", ... "Z", "AA", ...
std::string choice_label(std::size_t index);

std::string retrieval_query(std::string_view question, const std::vector<std::string>& choices);

AnswerResult answer(std::string_view question, const std::vector<std::string>& choices, const MemoryStore& memory,
                    const ReasoningBackend& backend, const ControllerConfig& config,
                    const ContextOverrides& overrides = {});

/// Picks the choice whose hypothesis has the highest direct_answer_score.
AnswerResult answer_direct(std::string_view question, const std::vector<std::string>& choices,
                           const ReasoningBackend& backend, const ControllerConfig& config);

/// Answers over backend-generated candidates. NoCandidates gives NoProof.
AnswerResult answer_open(std::string_view question, const MemoryStore& memory, const ReasoningBackend& backend,
                         const ControllerConfig& config, const ContextOverrides& overrides = {});

}  // namespace tqa
