#pragma once

#include <cstdint>

#include "tqa/entailment.hpp"

namespace tqa {

/// Wraps a backend and flips the entailment verdict (s -> 1 - s) on a
/// pseudo-random subset of (premises, hypothesis) pairs. The subset depends
/// only on the seed and the pair's text, so runs stay reproducible.
/// Models a verifier that sometimes accepts a bad entailment, or rejects a good one.
class NoisyBackend final : public ReasoningBackend {
  public:
    /// rate in [0,1]; throws Error(InvalidArgument) otherwise.
    NoisyBackend(const ReasoningBackend& inner, double rate, std::uint64_t seed);

    std::string name() const override { return inner_.name() + "+noise"; }
    std::string declarativize(std::string_view q, std::string_view c) const override
    {
        return inner_.declarativize(q, c);
    }
    std::vector<std::string> generate_candidates(std::string_view q, std::size_t n) const override
    {
        return inner_.generate_candidates(q, n);
    }
    std::optional<Proof> generate_proof(const ProofRequest& request) const override;
    double belief_score(std::string_view s, std::span<const std::string> context) const override
    {
        return inner_.belief_score(s, context);
    }
    double entailment_score(std::span<const std::string> premises, std::string_view hypothesis) const override;
    std::string negate(std::string_view s) const override { return inner_.negate(s); }
    double direct_answer_score(const Hypothesis& h) const override { return inner_.direct_answer_score(h); }

    bool flips(std::span<const std::string> premises, std::string_view hypothesis) const;

  private:
    const ReasoningBackend& inner_;
    double rate_;
    std::uint64_t seed_;
};

}  // namespace tqa
