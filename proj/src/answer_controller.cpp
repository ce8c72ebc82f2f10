#include "tqa/answer_controller.hpp"

#include <algorithm>
#include <set>

#include "tqa/errors.hpp"
#include "tqa/text.hpp"

namespace tqa {

namespace {

double safe_belief(const ReasoningBackend& backend, const std::string& statement,
                   const std::vector<std::string>& context)
{
    try {
        return backend.belief_score(statement, context);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::UnparseableStatement) throw;
        return 0.3;
    }
}

void check_inputs(std::string_view question, const std::vector<std::string>& choices)
{
    if (normalize(question).empty()) {
        throw Error(ErrorCode::InvalidQuestion, "question text is empty");
    }
    if (choices.empty()) {
        throw Error(ErrorCode::InvalidArgument, "at least one choice is required");
    }
    for (const auto& c : choices) {
        if (normalize(c).empty()) throw Error(ErrorCode::InvalidArgument, "choice text is empty");
    }
}

std::vector<std::string> build_context(std::string_view query, const MemoryStore& memory,
                                       const ControllerConfig& config, const ContextOverrides& overrides)
{
    std::set<std::string> excluded;
    for (const auto& e : overrides.excluded) excluded.insert(text_key(e));

    std::vector<std::string> context;
    std::set<std::string> seen;
    auto push = [&](const std::string& s) {
        const std::string key = text_key(s);
        if (key.empty() || !seen.insert(key).second) return;
        context.push_back(normalize(s));
    };
    if (overrides.preferred) push(*overrides.preferred);

    RetrievalConfig rc = config.retrieval;
    rc.r += excluded.size() + (overrides.preferred ? 1 : 0);
    std::size_t taken = 0;
    for (const auto& hit : memory.retrieve(query, rc)) {
        if (taken == config.retrieval.r) break;
        const std::string key = text_key(hit.record.text);
        if (excluded.count(key) || seen.count(key)) continue;
        push(hit.record.text);
        ++taken;
    }
    for (const auto& e : overrides.extra) {
        if (!excluded.count(text_key(e))) push(e);
    }
    return context;
}

/// Premises of `lead` first, then the context, then the other proofs' premises.
std::vector<ConsideredFact> considered(const ReasoningBackend& backend, const ControllerConfig& config,
                                       const std::vector<std::string>& context, const Proof* lead,
                                       const std::vector<const Proof*>& rest)
{
    std::vector<ConsideredFact> out;
    std::set<std::string> seen;
    auto add = [&](const std::string& s) {
        if (!seen.insert(text_key(s)).second) return;
        const double b = safe_belief(backend, s, context);
        out.push_back({s, b, b < config.belief_threshold});
    };
    if (lead) {
        for (const auto& s : lead->premises) add(s);
    }
    for (const auto& s : context) add(s);
    for (const Proof* p : rest) {
        for (const auto& s : p->premises) add(s);
    }
    return out;
}

}  // namespace

void ControllerConfig::validate() const
{
    retrieval.validate();
    if (!(belief_threshold >= 0.0 && belief_threshold <= 1.0) ||
        !(entailment_threshold >= 0.0 && entailment_threshold <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "thresholds must lie in [0,1]");
    }
    if (candidate_n == 0) throw Error(ErrorCode::InvalidArgument, "candidate_n must be positive");
    if (max_premises == 0) throw Error(ErrorCode::InvalidArgument, "max_premises must be positive");
}

std::string_view outcome_name(Outcome o)
{
    return o == Outcome::Answered ? "answered" : "no_proof";
}

std::string_view verdict_name(Verdict v)
{
    switch (v) {
    case Verdict::Accepted: return "accepted";
    case Verdict::PremiseDisbelieved: return "premise_disbelieved";
    case Verdict::WeakEntailment: return "weak_entailment";
    case Verdict::Blocked: return "blocked";
    }
    return "accepted";
}

std::string choice_label(std::size_t index)
{
    std::string label;
    ++index;
    while (index > 0) {
        --index;
        label.insert(label.begin(), static_cast<char>('A' + index % 26));
        index /= 26;
    }
    return label;
}

std::string retrieval_query(std::string_view question, const std::vector<std::string>& choices)
{
    std::string q(question);
    for (const auto& c : choices) {
        q += ' ';
        q += c;
    }
    return q;
}

AnswerResult answer(std::string_view question, const std::vector<std::string>& choices, const MemoryStore& memory,
                    const ReasoningBackend& backend, const ControllerConfig& config,
                    const ContextOverrides& overrides)
{
    check_inputs(question, choices);
    config.validate();

    AnswerResult result;
    result.context = build_context(retrieval_query(question, choices), memory, config, overrides);

    for (std::size_t i = 0; i < choices.size(); ++i) {
        Hypothesis h{backend.declarativize(question, choices[i]), "", choice_label(i)};
        result.hypotheses.push_back(h.text);

        std::vector<std::optional<std::string>> forced(result.context.begin(), result.context.end());
        forced.push_back(std::nullopt);
        for (const auto& f : forced) {
            ProofRequest req;
            req.hypothesis = h;
            req.question_text = std::string(question);
            req.choice_text = choices[i];
            req.context = result.context;
            req.forced_first_premise = f;
            req.max_premises = config.max_premises;
            ++result.attempts;
            auto proof = backend.generate_proof(req);
            if (!proof) continue;

            PoolEntry entry{std::move(*proof), Verdict::Accepted, h.choice_label, i};
            const auto& p = entry.proof;
            if (std::any_of(p.premise_scores.begin(), p.premise_scores.end(),
                            [&](double s) { return s < config.belief_threshold; })) {
                entry.verdict = Verdict::PremiseDisbelieved;
            } else if (p.entailment_score < config.entailment_threshold) {
                entry.verdict = Verdict::WeakEntailment;
            } else if (memory.is_blocked(p.premises, p.hypothesis_text)) {
                entry.verdict = Verdict::Blocked;
            }
            result.proof_pool.push_back(std::move(entry));
        }
    }

    const PoolEntry* best = nullptr;
    for (const auto& e : result.proof_pool) {
        if (e.verdict != Verdict::Accepted) continue;
        if (!best) {
            best = &e;
            continue;
        }
        const double a = e.proof.overall_score, b = best->proof.overall_score;
        if (a > b || (a == b && (e.choice_index < best->choice_index ||
                                 (e.choice_index == best->choice_index && !e.proof.forced && best->proof.forced)))) {
            best = &e;
        }
    }

    std::vector<const Proof*> rest;
    for (const auto& e : result.proof_pool) {
        if (&e != best) rest.push_back(&e.proof);
    }
    if (best) {
        result.outcome = Outcome::Answered;
        result.choice_index = best->choice_index;
        result.choice_label = best->choice_label;
        result.choice_text = choices[best->choice_index];
        result.best_proof = best->proof;
    }
    result.considered_facts = considered(backend, config, result.context, best ? &best->proof : nullptr, rest);
    return result;
}

AnswerResult answer_direct(std::string_view question, const std::vector<std::string>& choices,
                           const ReasoningBackend& backend, const ControllerConfig& config)
{
    check_inputs(question, choices);
    config.validate();
    AnswerResult result;
    std::size_t best = 0;
    for (std::size_t i = 0; i < choices.size(); ++i) {
        Hypothesis h{backend.declarativize(question, choices[i]), "", choice_label(i)};
        result.hypotheses.push_back(h.text);
        result.direct_scores.push_back(backend.direct_answer_score(h));
        if (result.direct_scores[i] > result.direct_scores[best]) best = i;
    }
    result.outcome = Outcome::Answered;
    result.choice_index = best;
    result.choice_label = choice_label(best);
    result.choice_text = choices[best];
    return result;
}

AnswerResult answer_open(std::string_view question, const MemoryStore& memory, const ReasoningBackend& backend,
                         const ControllerConfig& config, const ContextOverrides& overrides)
{
    if (normalize(question).empty()) {
        throw Error(ErrorCode::InvalidQuestion, "question text is empty");
    }
    std::vector<std::string> candidates;
    try {
        candidates = backend.generate_candidates(question, config.candidate_n);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoCandidates) throw;
        return AnswerResult{};
    }
    if (candidates.empty()) return AnswerResult{};
    return answer(question, candidates, memory, backend, config, overrides);
}

}  // namespace tqa
