#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tqa {

/// A declarative statement asserting that one answer option is correct.
struct Hypothesis {
    std::string text;
    std::string question_id;
    std::string choice_label;
};

struct ProofRequest {
    Hypothesis hypothesis;
    std::string question_text;
    std::string choice_text;
    std::vector<std::string> context;
    /// When set, must equal one of `context` verbatim; the proof must start with it.
    std::optional<std::string> forced_first_premise;
    std::size_t max_premises = 3;

    /// Throws Error(InvalidArgument) on a broken request.
    void validate() const;
};

struct Proof {
    std::vector<std::string> premises;
    std::string hypothesis_text;
    std::vector<double> premise_scores;  ///< belief in each premise, parallel to premises
    double entailment_score = 0.0;
    double overall_score = 0.0;  ///< entailment_score * product(premise_scores)
    bool forced = false;

    bool operator==(const Proof&) const = default;
};

/// entailment * prod(premise beliefs), multiplied in premise order.
double compose_score(double entailment_score, std::span<const double> premise_scores);

/// The reasoning model behind the answerer. Implementations must tolerate
/// concurrent calls from several sessions.
class ReasoningBackend {
  public:
    virtual ~ReasoningBackend() = default;

    virtual std::string name() const = 0;

    /// Question + answer option -> declarative sentence.
    virtual std::string declarativize(std::string_view question, std::string_view choice) const = 0;

    /// Up to n distinct candidate answers for an open-ended question.
    /// Throws Error(NoCandidates) when there are none.
    virtual std::vector<std::string> generate_candidates(std::string_view question, std::size_t n) const = 0;

    /// nullopt means no proof was found; that is a normal outcome.
    virtual std::optional<Proof> generate_proof(const ProofRequest& request) const = 0;

    /// Probability that the model answers "yes" to "Is <statement> true?".
    virtual double belief_score(std::string_view statement, std::span<const std::string> context) const = 0;

    virtual double entailment_score(std::span<const std::string> premises, std::string_view hypothesis) const = 0;

    virtual std::string negate(std::string_view statement) const = 0;

    /// Plausibility of the hypothesis without any reasoning chain.
    virtual double direct_answer_score(const Hypothesis& hypothesis) const = 0;
};

}  // namespace tqa
