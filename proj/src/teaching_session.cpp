#include "tqa/teaching_session.hpp"

#include <algorithm>
#include <sstream>

#include "tqa/errors.hpp"
#include "tqa/json_io.hpp"
#include "tqa/text.hpp"

namespace tqa {

using json = nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void add_unique(std::vector<std::string>& list, const std::string& s)
{
    const std::string key = text_key(s);
    if (std::none_of(list.begin(), list.end(), [&](const std::string& x) { return text_key(x) == key; })) {
        list.push_back(s);
    }
}

void erase_key(std::vector<std::string>& list, const std::string& s)
{
    const std::string key = text_key(s);
    std::erase_if(list, [&](const std::string& x) { return text_key(x) == key; });
}

const std::string& premise_at(const AnswerResult& r, std::size_t index)
{
    if (!r.answered() || index < 1 || index > r.best_proof->premises.size()) {
        throw Error(ErrorCode::BadIndex, "no premise " + std::to_string(index) + " in the current proof");
    }
    return r.best_proof->premises[index - 1];
}

const std::string& considered_at(const AnswerResult& r, std::size_t index)
{
    if (index < 1 || index > r.considered_facts.size()) {
        throw Error(ErrorCode::BadIndex, "no considered fact " + std::to_string(index));
    }
    return r.considered_facts[index - 1].text;
}

std::string checked_text(const std::string& text)
{
    std::string t = normalize(text);
    if (t.empty()) throw Error(ErrorCode::EmptyFact, "fact text is empty");
    return t;
}

AnswerResult ask(const SessionState& s, const MemoryStore& memory, const ReasoningBackend& backend,
                 const ControllerConfig& config)
{
    const ContextOverrides ctx = context_overrides(s.overrides, backend);
    if (s.choices.empty()) return answer_open(s.question, memory, backend, config, ctx);
    return answer(s.question, s.choices, memory, backend, config, ctx);
}

void record(SessionState& s, std::string actor, json payload, const MemoryStore& memory)
{
    s.transcript.push_back({s.turn_number, std::move(actor), std::move(payload), memory.state_hash()});
}

}  // namespace

std::string_view action_name(const FeedbackAction& action)
{
    return std::visit(overloaded{
                          [](const LooksGood&) { return std::string_view("looks_good"); },
                          [](const FactIsFalse&) { return std::string_view("fact_is_false"); },
                          [](const FactIsMissing&) { return std::string_view("fact_is_missing"); },
                          [](const FactIsTrue&) { return std::string_view("fact_is_true"); },
                          [](const BadReasoning&) { return std::string_view("bad_reasoning"); },
                          [](const FactIsIrrelevant&) { return std::string_view("fact_is_irrelevant"); },
                          [](const UseOldFact&) { return std::string_view("use_old_fact"); },
                          [](const UseNewFact&) { return std::string_view("use_new_fact"); },
                      },
                      action);
}

json action_to_json(const FeedbackAction& action)
{
    json j;
    j["type"] = std::string(action_name(action));
    std::visit(overloaded{
                   [](const LooksGood&) {},
                   [](const BadReasoning&) {},
                   [&](const FactIsFalse& a) { j["index"] = a.index; },
                   [&](const FactIsTrue& a) { j["index"] = a.index; },
                   [&](const FactIsIrrelevant& a) { j["index"] = a.index; },
                   [&](const UseOldFact& a) { j["index"] = a.index; },
                   [&](const FactIsMissing& a) { j["text"] = a.text; },
                   [&](const UseNewFact& a) { j["text"] = a.text; },
               },
               action);
    return j;
}

FeedbackAction action_from_json(const json& j)
{
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
        throw Error(ErrorCode::InvalidArgument, "action needs a string 'type'");
    }
    const std::string type = j["type"].get<std::string>();
    auto index = [&]() -> std::size_t {
        if (!j.contains("index") || !j["index"].is_number_integer() || j["index"].get<long long>() < 0) {
            throw Error(ErrorCode::InvalidArgument, "action '" + type + "' needs a non-negative integer 'index'");
        }
        return j["index"].get<std::size_t>();
    };
    auto text = [&]() -> std::string {
        if (!j.contains("text") || !j["text"].is_string()) {
            throw Error(ErrorCode::InvalidArgument, "action '" + type + "' needs a string 'text'");
        }
        return j["text"].get<std::string>();
    };
    if (type == "looks_good") return LooksGood{};
    if (type == "fact_is_false") return FactIsFalse{index()};
    if (type == "fact_is_missing") return FactIsMissing{text()};
    if (type == "fact_is_true") return FactIsTrue{index()};
    if (type == "bad_reasoning") return BadReasoning{};
    if (type == "fact_is_irrelevant") return FactIsIrrelevant{index()};
    if (type == "use_old_fact") return UseOldFact{index()};
    if (type == "use_new_fact") return UseNewFact{text()};
    throw Error(ErrorCode::InvalidArgument, "unknown action type '" + type + "'");
}

std::string_view status_name(SessionStatus s)
{
    switch (s) {
    case SessionStatus::Active: return "active";
    case SessionStatus::Confirmed: return "confirmed";
    case SessionStatus::Abandoned: return "abandoned";
    }
    return "active";
}

QuestionLink SessionState::question_link() const
{
    std::string id = "q-" + hex64(fnv1a(text_key(question))).substr(0, 12);
    return {id, question};
}

std::string make_session_id(std::string_view question, const std::vector<std::string>& choices,
                            std::uint64_t counter)
{
    std::string material = text_key(question);
    for (const auto& c : choices) material += "\x1f" + text_key(c);
    material += "\x1f" + std::to_string(counter);
    return "s-" + hex64(fnv1a(material)).substr(0, 12);
}

ContextOverrides context_overrides(const SessionOverrides& overrides, const ReasoningBackend& backend)
{
    ContextOverrides ctx;
    ctx.preferred = overrides.preferred_fact;
    ctx.extra = overrides.asserted_true;
    for (const auto& f : overrides.asserted_false) add_unique(ctx.extra, backend.negate(f));
    ctx.excluded = overrides.asserted_false;
    for (const auto& f : overrides.irrelevant) add_unique(ctx.excluded, f);
    return ctx;
}

SessionState start_session(std::string_view question, const std::vector<std::string>& choices,
                           MemoryStore& memory, const ReasoningBackend& backend, const ControllerConfig& config,
                           std::string session_id)
{
    if (normalize(question).empty()) {
        throw Error(ErrorCode::InvalidQuestion, "question text is empty");
    }
    SessionState s;
    s.session_id = session_id.empty() ? make_session_id(question, choices) : std::move(session_id);
    s.question = normalize(question);
    for (const auto& c : choices) s.choices.push_back(normalize(c));
    s.turn_number = 1;
    record(s, "user", {{"session_id", s.session_id}, {"question", s.question}, {"choices", s.choices}}, memory);
    s.last_result = ask(s, memory, backend, config);
    record(s, "system", {{"result", to_json(s.last_result)}}, memory);
    return s;
}

SessionState apply_feedback(const SessionState& state, const FeedbackAction& action, MemoryStore& memory,
                            const ReasoningBackend& backend, const ControllerConfig& config)
{
    if (state.status != SessionStatus::Active) {
        throw Error(ErrorCode::SessionClosed, "session " + state.session_id + " is " +
                                                  std::string(status_name(state.status)));
    }
    SessionState s = state;
    const AnswerResult& r = state.last_result;
    const QuestionLink link = s.question_link();
    auto& ov = s.overrides;

    // Validate first so a rejected action leaves memory untouched.
    const bool confirm = std::visit(
        overloaded{
            [&](const LooksGood&) {
                if (!r.answered()) throw Error(ErrorCode::NotConfirmed, "there is no answer to confirm");
                return true;
            },
            [&](const FactIsFalse& a) {
                const std::string f = premise_at(r, a.index);
                memory.add_fact(backend.negate(f), Provenance::User, link);
                add_unique(ov.asserted_false, f);
                erase_key(ov.asserted_true, f);
                if (ov.preferred_fact && text_key(*ov.preferred_fact) == text_key(f)) ov.preferred_fact.reset();
                return false;
            },
            [&](const FactIsMissing& a) {
                const std::string t = checked_text(a.text);
                memory.add_fact(t, Provenance::User, link);
                ov.preferred_fact = t;
                erase_key(ov.asserted_false, t);
                erase_key(ov.irrelevant, t);
                return false;
            },
            [&](const FactIsTrue& a) {
                const std::string f = considered_at(r, a.index);
                add_unique(ov.asserted_true, f);
                erase_key(ov.asserted_false, f);
                erase_key(ov.irrelevant, f);
                return false;
            },
            [&](const BadReasoning&) {
                if (!r.answered()) throw Error(ErrorCode::BadIndex, "there is no proof to reject");
                memory.block_entailment(r.best_proof->premises, r.best_proof->hypothesis_text);
                return false;
            },
            [&](const FactIsIrrelevant& a) {
                const std::string f = considered_at(r, a.index);
                add_unique(ov.irrelevant, f);
                erase_key(ov.asserted_true, f);
                if (ov.preferred_fact && text_key(*ov.preferred_fact) == text_key(f)) ov.preferred_fact.reset();
                return false;
            },
            [&](const UseOldFact& a) {
                const std::string f = considered_at(r, a.index);
                ov.preferred_fact = f;
                erase_key(ov.irrelevant, f);
                return false;
            },
            [&](const UseNewFact& a) {
                const std::string t = checked_text(a.text);
                memory.add_fact(t, Provenance::User, link);
                ov.preferred_fact = t;
                erase_key(ov.asserted_false, t);
                erase_key(ov.irrelevant, t);
                return false;
            },
        },
        action);

    if (confirm) {
        s.status = SessionStatus::Confirmed;
        commit_turn(s, memory);
        record(s, "user", {{"action", action_to_json(action)}}, memory);
        json committed = r.best_proof->premises;
        committed.push_back(r.best_proof->hypothesis_text);
        record(s, "system", {{"status", "confirmed"}, {"committed", committed}}, memory);
        return s;
    }
    record(s, "user", {{"action", action_to_json(action)}}, memory);
    ++s.turn_number;
    s.last_result = ask(s, memory, backend, config);
    record(s, "system", {{"result", to_json(s.last_result)}}, memory);
    return s;
}

void commit_turn(const SessionState& state, MemoryStore& memory)
{
    if (state.status != SessionStatus::Confirmed || !state.last_result.answered()) {
        throw Error(ErrorCode::NotConfirmed, "only a confirmed answer can be committed");
    }
    const QuestionLink link = state.question_link();
    for (const auto& p : state.last_result.best_proof->premises) {
        memory.add_fact(p, Provenance::SessionCommit, link);
    }
    memory.add_fact(state.last_result.best_proof->hypothesis_text, Provenance::SessionCommit, link);
}

SessionState abandon_session(const SessionState& state)
{
    if (state.status != SessionStatus::Active) {
        throw Error(ErrorCode::SessionClosed, "session " + state.session_id + " is already closed");
    }
    SessionState s = state;
    s.status = SessionStatus::Abandoned;
    s.overrides = {};
    return s;
}

std::string transcript_jsonl(const SessionState& state)
{
    std::string out;
    for (const auto& e : state.transcript) {
        nlohmann::ordered_json line;
        line["turn"] = e.turn;
        line["actor"] = e.actor;
        for (const auto& [k, v] : e.payload.items()) line[k] = v;
        line["memory_hash"] = e.memory_hash;
        out += line.dump();
        out += '\n';
    }
    return out;
}

ReplayOutcome replay_transcript(std::string_view jsonl, MemoryStore& memory, const ReasoningBackend& backend,
                                const ControllerConfig& config)
{
    std::vector<json> lines;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (normalize(line).empty()) continue;
        try {
            json j = json::parse(line);
            if (!j.is_object() || !j.contains("actor") || !j.contains("memory_hash")) {
                throw Error(ErrorCode::FormatError, "transcript entry needs actor and memory_hash", line_no);
            }
            j["_line"] = line_no;
            lines.push_back(std::move(j));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::FormatError, std::string("transcript line is not JSON: ") + e.what(), line_no);
        }
    }
    if (lines.empty() || lines.front()["actor"] != "user" || !lines.front().contains("question")) {
        throw Error(ErrorCode::FormatError, "transcript must start with the user's question", 1);
    }
    const json& head = lines.front();
    if (head["memory_hash"].get<std::string>() != memory.state_hash()) {
        throw Error(ErrorCode::InvariantViolation, "starting memory differs from the recorded one");
    }
    try {
        std::vector<std::string> choices = head.value("choices", std::vector<std::string>{});
        SessionState s = start_session(head["question"].get<std::string>(), choices, memory, backend, config,
                                       head.value("session_id", std::string()));
        for (std::size_t i = 1; i < lines.size(); ++i) {
            if (lines[i]["actor"] != "user") continue;
            if (!lines[i].contains("action")) {
                throw Error(ErrorCode::FormatError, "user entry without an action", lines[i]["_line"].get<std::size_t>());
            }
            s = apply_feedback(s, action_from_json(lines[i]["action"]), memory, backend, config);
        }
        ReplayOutcome out{std::move(s), lines.back()["memory_hash"].get<std::string>(), memory.state_hash()};
        return out;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("malformed transcript: ") + e.what());
    }
}

}  // namespace tqa
