#include "tqa/noisy_backend.hpp"

#include "tqa/errors.hpp"
#include "tqa/text.hpp"

namespace tqa {

NoisyBackend::NoisyBackend(const ReasoningBackend& inner, double rate, std::uint64_t seed)
    : inner_(inner), rate_(rate), seed_(seed)
{
    if (!(rate >= 0.0 && rate <= 1.0)) throw Error(ErrorCode::InvalidArgument, "noise rate must lie in [0,1]");
}

bool NoisyBackend::flips(std::span<const std::string> premises, std::string_view hypothesis) const
{
    if (rate_ <= 0.0) return false;
    std::uint64_t h = fnv1a(std::to_string(seed_));
    for (const auto& p : premises) h = fnv1a(text_key(p) + "\x1f", h);
    h = fnv1a(text_key(hypothesis), h);
    // Top 53 bits as a uniform draw in [0,1).
    const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
    return u < rate_;
}

std::optional<Proof> NoisyBackend::generate_proof(const ProofRequest& request) const
{
    auto proof = inner_.generate_proof(request);
    if (proof && flips(proof->premises, proof->hypothesis_text)) {
        proof->entailment_score = 1.0 - proof->entailment_score;
        proof->overall_score = compose_score(proof->entailment_score, proof->premise_scores);
    }
    return proof;
}

double NoisyBackend::entailment_score(std::span<const std::string> premises, std::string_view hypothesis) const
{
    const double s = inner_.entailment_score(premises, hypothesis);
    return flips(premises, hypothesis) ? 1.0 - s : s;
}

}  // namespace tqa
