#include "tqa/json_io.hpp"

#include "tqa/errors.hpp"

namespace tqa {

using json = nlohmann::json;

json to_json(const Proof& proof)
{
    return {
        {"premises", proof.premises},
        {"hypothesis", proof.hypothesis_text},
        {"premise_scores", proof.premise_scores},
        {"entailment_score", proof.entailment_score},
        {"overall_score", proof.overall_score},
        {"forced", proof.forced},
    };
}

Proof proof_from_json(const json& j)
{
    try {
        Proof p;
        p.premises = j.at("premises").get<std::vector<std::string>>();
        p.hypothesis_text = j.value("hypothesis", std::string());
        p.premise_scores = j.at("premise_scores").get<std::vector<double>>();
        p.entailment_score = j.at("entailment_score").get<double>();
        p.overall_score = j.contains("overall_score") ? j["overall_score"].get<double>()
                                                      : compose_score(p.entailment_score, p.premise_scores);
        p.forced = j.value("forced", false);
        if (p.premises.size() != p.premise_scores.size() || p.premises.empty()) {
            throw Error(ErrorCode::FormatError, "proof needs one score per premise and at least one premise");
        }
        return p;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("malformed proof: ") + e.what());
    }
}

json to_json(const AnswerResult& result)
{
    json j;
    j["outcome"] = std::string(outcome_name(result.outcome));
    if (result.answered()) {
        j["choice_label"] = result.choice_label;
        j["choice_text"] = result.choice_text;
        j["best_proof"] = result.best_proof ? to_json(*result.best_proof) : json(nullptr);
    }
    json pool = json::array();
    for (const auto& e : result.proof_pool) {
        pool.push_back({{"proof", to_json(e.proof)},
                        {"verdict", std::string(verdict_name(e.verdict))},
                        {"choice_label", e.choice_label}});
    }
    j["proof_pool"] = std::move(pool);
    json considered = json::array();
    for (const auto& c : result.considered_facts) {
        considered.push_back({{"text", c.text}, {"belief", c.belief}, {"disbelieved", c.disbelieved}});
    }
    j["considered_facts"] = std::move(considered);
    j["context"] = result.context;
    j["hypotheses"] = result.hypotheses;
    if (!result.direct_scores.empty()) j["direct_scores"] = result.direct_scores;
    j["attempts"] = result.attempts;
    return j;
}

json to_json(const FactRecord& record)
{
    json links = json::array();
    for (const auto& q : record.linked_questions) links.push_back({{"id", q.id}, {"text", q.text}});
    return {
        {"id", record.id},
        {"text", record.text},
        {"provenance", std::string(provenance_name(record.provenance))},
        {"linked_questions", std::move(links)},
        {"seq", record.seq},
    };
}

json to_json(const ScoredFact& hit)
{
    json j = to_json(hit.record);
    j["score"] = hit.score;
    return j;
}

json to_json(const TranscriptEntry& entry)
{
    json j = {{"turn", entry.turn}, {"actor", entry.actor}};
    for (const auto& [k, v] : entry.payload.items()) j[k] = v;
    j["memory_hash"] = entry.memory_hash;
    return j;
}

std::vector<std::string> available_actions(const SessionState& state)
{
    if (state.status != SessionStatus::Active) return {};
    std::vector<std::string> out;
    const auto& r = state.last_result;
    if (r.answered()) {
        out = {"looks_good", "fact_is_false", "bad_reasoning"};
    }
    out.push_back("fact_is_missing");
    if (!r.considered_facts.empty()) {
        out.insert(out.end(), {"fact_is_true", "fact_is_irrelevant", "use_old_fact"});
    }
    out.push_back("use_new_fact");
    return out;
}

json to_json(const SessionState& state)
{
    json ov = {
        {"asserted_true", state.overrides.asserted_true},
        {"asserted_false", state.overrides.asserted_false},
        {"irrelevant", state.overrides.irrelevant},
        {"preferred_fact", state.overrides.preferred_fact ? json(*state.overrides.preferred_fact) : json(nullptr)},
    };
    json transcript = json::array();
    for (const auto& e : state.transcript) transcript.push_back(to_json(e));
    return {
        {"session_id", state.session_id},
        {"question", state.question},
        {"choices", state.choices},
        {"turn", state.turn_number},
        {"status", std::string(status_name(state.status))},
        {"last_result", to_json(state.last_result)},
        {"overrides", std::move(ov)},
        {"available_actions", available_actions(state)},
        {"transcript", std::move(transcript)},
    };
}

}  // namespace tqa
