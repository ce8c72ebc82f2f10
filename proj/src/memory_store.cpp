#include "tqa/memory_store.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "tqa/errors.hpp"
#include "tqa/text.hpp"

namespace tqa {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view provenance_name(Provenance p)
{
    switch (p) {
    case Provenance::User: return "user";
    case Provenance::SimulatedTeacher: return "simulated-teacher";
    case Provenance::SessionCommit: return "session-commit";
    }
    return "user";
}

Provenance parse_provenance(std::string_view name)
{
    if (name == "user") return Provenance::User;
    if (name == "simulated-teacher") return Provenance::SimulatedTeacher;
    if (name == "session-commit") return Provenance::SessionCommit;
    throw Error(ErrorCode::InvalidArgument, "unknown provenance '" + std::string(name) + "'");
}

std::string_view strategy_label(IndexStrategy s)
{
    switch (s) {
    case IndexStrategy::FactTerms: return "F";
    case IndexStrategy::QuestionTerms: return "Q";
    case IndexStrategy::QuestionPlusFact: return "Q + F";
    case IndexStrategy::RelevantQuestionsPlusFact: return "Relevant Qs + F";
    }
    return "F";
}

IndexStrategy parse_strategy(std::string_view name)
{
    std::string key;
    for (char c : to_lower(name)) {
        if (c != ' ' && c != '_' && c != '-') key.push_back(c);
    }
    if (key == "f" || key == "fact" || key == "factterms") return IndexStrategy::FactTerms;
    if (key == "q" || key == "question" || key == "questionterms") return IndexStrategy::QuestionTerms;
    if (key == "q+f" || key == "qf" || key == "questionplusfact") return IndexStrategy::QuestionPlusFact;
    if (key == "relevantqs+f" || key == "rqf" || key == "relevantquestionsplusfact")
        return IndexStrategy::RelevantQuestionsPlusFact;
    throw Error(ErrorCode::InvalidArgument, "unknown index strategy '" + std::string(name) + "'");
}

void RetrievalConfig::validate() const
{
    if (r < 1) {
        throw Error(ErrorCode::InvalidArgument, "retrieval r must be >= 1");
    }
    params.validate();
}

std::vector<std::vector<std::string>> index_documents(const FactRecord& record, IndexStrategy strategy)
{
    std::vector<std::vector<std::string>> docs;
    const auto fact_terms = tokenize(record.text);
    auto nonempty_push = [&docs](std::vector<std::string> terms) {
        if (!terms.empty()) docs.push_back(std::move(terms));
    };
    switch (strategy) {
    case IndexStrategy::FactTerms:
        nonempty_push(fact_terms);
        break;
    case IndexStrategy::QuestionTerms:
        for (const auto& q : record.linked_questions) {
            nonempty_push(tokenize(q.text));
        }
        break;
    case IndexStrategy::QuestionPlusFact:
        if (record.linked_questions.empty()) {
            nonempty_push(fact_terms);
        }
        for (const auto& q : record.linked_questions) {
            auto terms = tokenize(q.text);
            terms.insert(terms.end(), fact_terms.begin(), fact_terms.end());
            nonempty_push(std::move(terms));
        }
        break;
    case IndexStrategy::RelevantQuestionsPlusFact: {
        auto terms = fact_terms;
        for (const auto& q : record.linked_questions) {
            auto qt = tokenize(q.text);
            terms.insert(terms.end(), qt.begin(), qt.end());
        }
        nonempty_push(std::move(terms));
        break;
    }
    }
    return docs;
}

namespace {

std::string blocked_key(std::span<const std::string> premises, std::string_view hypothesis)
{
    std::set<std::string> keys;
    for (const auto& p : premises) {
        keys.insert(text_key(p));
    }
    std::string out = text_key(hypothesis);
    for (const auto& k : keys) {
        out.push_back('\x1f');
        out += k;
    }
    return out;
}

}  // namespace

MemoryStore::MemoryStore() = default;
MemoryStore::~MemoryStore() = default;

MemoryStore::MemoryStore(const MemoryStore& other)
{
    *this = other;
}

MemoryStore& MemoryStore::operator=(const MemoryStore& other)
{
    if (this == &other) {
        return *this;
    }
    std::string snapshot = other.serialize();
    std::unique_lock lock(mutex_);
    parse_into_locked(snapshot);
    return *this;
}

void MemoryStore::unindex_slot_locked(std::size_t slot)
{
    for (std::size_t s = 0; s < kAllStrategies.size(); ++s) {
        for (std::size_t doc : slots_[slot].docs[s]) {
            indexes_[s].remove(doc);
        }
        slots_[slot].docs[s].clear();
    }
}

void MemoryStore::reindex_slot_locked(std::size_t slot)
{
    unindex_slot_locked(slot);
    for (std::size_t s = 0; s < kAllStrategies.size(); ++s) {
        for (auto& terms : index_documents(slots_[slot].record, kAllStrategies[s])) {
            slots_[slot].docs[s].push_back(indexes_[s].add(slot, terms));
        }
    }
}

void MemoryStore::rebuild_locked()
{
    for (auto& index : indexes_) {
        index.clear();
    }
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        for (auto& d : slots_[i].docs) d.clear();
        if (slots_[i].live) {
            reindex_slot_locked(i);
        }
    }
}

FactRecord MemoryStore::add_fact(std::string_view text, Provenance provenance,
                                 const std::optional<QuestionLink>& question)
{
    std::string normalized = normalize(text);
    if (normalized.empty()) {
        throw Error(ErrorCode::EmptyFact, "fact text is empty after normalization");
    }
    std::unique_lock lock(mutex_);
    const std::string key = to_lower(normalized);
    if (auto it = by_key_.find(key); it != by_key_.end()) {
        Slot& slot = slots_[it->second];
        if (question) {
            const bool known = std::any_of(slot.record.linked_questions.begin(), slot.record.linked_questions.end(),
                                           [&](const QuestionLink& q) { return q.id == question->id; });
            if (!known) {
                slot.record.linked_questions.push_back(*question);
                reindex_slot_locked(it->second);
            }
        }
        return slot.record;
    }
    Slot slot;
    slot.record.seq = next_seq_++;
    slot.record.id = "f" + std::to_string(slot.record.seq);
    slot.record.text = std::move(normalized);
    slot.record.provenance = provenance;
    if (question) {
        slot.record.linked_questions.push_back(*question);
    }
    const std::size_t index = slots_.size();
    slots_.push_back(std::move(slot));
    by_key_.emplace(key, index);
    by_id_.emplace(slots_[index].record.id, index);
    reindex_slot_locked(index);
    return slots_[index].record;
}

std::vector<ScoredFact> MemoryStore::retrieve(std::string_view query, const RetrievalConfig& config) const
{
    config.validate();
    const auto terms = tokenize(query);
    std::shared_lock lock(mutex_);
    const auto& index = indexes_[static_cast<std::size_t>(config.strategy)];

    // Several documents may belong to one fact; the fact takes its best one.
    std::unordered_map<std::size_t, double> best;
    for (const auto& [doc, score] : index.score(terms, config.params)) {
        const std::size_t slot = index.owner(doc);
        auto [it, inserted] = best.try_emplace(slot, score);
        if (!inserted && score > it->second) {
            it->second = score;
        }
    }
    std::vector<std::pair<std::size_t, double>> ranked;
    for (const auto& [slot, score] : best) {
        if (score > 0.0) ranked.emplace_back(slot, score);
    }
    std::sort(ranked.begin(), ranked.end(), [this](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return slots_[a.first].record.seq < slots_[b.first].record.seq;
    });
    if (ranked.size() > config.r) {
        ranked.resize(config.r);
    }
    std::vector<ScoredFact> out;
    out.reserve(ranked.size());
    for (const auto& [slot, score] : ranked) {
        out.push_back({slots_[slot].record, score});
    }
    return out;
}

BlockedEntailment MemoryStore::block_entailment(std::span<const std::string> premises, std::string_view hypothesis)
{
    if (premises.empty()) {
        throw Error(ErrorCode::EmptyPremises, "a blocked entailment needs at least one premise");
    }
    BlockedEntailment entry;
    for (const auto& p : premises) {
        entry.premise_texts.push_back(normalize(p));
    }
    entry.hypothesis_text = normalize(hypothesis);
    const std::string key = blocked_key(premises, hypothesis);

    std::unique_lock lock(mutex_);
    if (auto it = std::find(blocked_keys_.begin(), blocked_keys_.end(), key); it != blocked_keys_.end()) {
        return blocked_[static_cast<std::size_t>(it - blocked_keys_.begin())];
    }
    blocked_.push_back(entry);
    blocked_keys_.push_back(key);
    return entry;
}

bool MemoryStore::is_blocked(std::span<const std::string> premises, std::string_view hypothesis) const
{
    if (premises.empty()) {
        return false;
    }
    const std::string key = blocked_key(premises, hypothesis);
    std::shared_lock lock(mutex_);
    return std::find(blocked_keys_.begin(), blocked_keys_.end(), key) != blocked_keys_.end();
}

bool MemoryStore::remove_fact(std::string_view id)
{
    std::unique_lock lock(mutex_);
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) {
        return false;
    }
    const std::size_t slot = it->second;
    unindex_slot_locked(slot);
    slots_[slot].live = false;
    by_key_.erase(text_key(slots_[slot].record.text));
    by_id_.erase(it);
    return true;
}

std::optional<FactRecord> MemoryStore::find(std::string_view id) const
{
    std::shared_lock lock(mutex_);
    auto it = by_id_.find(std::string(id));
    if (it == by_id_.end()) return std::nullopt;
    return slots_[it->second].record;
}

std::optional<FactRecord> MemoryStore::find_by_text(std::string_view text) const
{
    std::shared_lock lock(mutex_);
    auto it = by_key_.find(text_key(text));
    if (it == by_key_.end()) return std::nullopt;
    return slots_[it->second].record;
}

std::vector<FactRecord> MemoryStore::facts() const
{
    std::shared_lock lock(mutex_);
    std::vector<FactRecord> out;
    for (const auto& slot : slots_) {
        if (slot.live) out.push_back(slot.record);
    }
    return out;
}

std::vector<BlockedEntailment> MemoryStore::blocked() const
{
    std::shared_lock lock(mutex_);
    return blocked_;
}

std::size_t MemoryStore::size() const
{
    std::shared_lock lock(mutex_);
    return by_id_.size();
}

std::size_t MemoryStore::blocked_size() const
{
    std::shared_lock lock(mutex_);
    return blocked_.size();
}

std::size_t MemoryStore::index_document_count(IndexStrategy strategy) const
{
    std::shared_lock lock(mutex_);
    return indexes_[static_cast<std::size_t>(strategy)].live_documents();
}

std::string MemoryStore::serialize_locked() const
{
    std::string out;
    std::uint64_t last_seq = 0;
    for (const auto& slot : slots_) {
        if (!slot.live) continue;
        last_seq = slot.record.seq;
        const auto& r = slot.record;
        ordered_json links = ordered_json::array();
        for (const auto& q : r.linked_questions) {
            links.push_back({{"id", q.id}, {"text", q.text}});
        }
        ordered_json line = {{"kind", "fact"},
                     {"id", r.id},
                     {"text", r.text},
                     {"provenance", provenance_name(r.provenance)},
                     {"linked_questions", links},
                     {"seq", r.seq}};
        out += line.dump();
        out.push_back('\n');
    }
    for (const auto& b : blocked_) {
        ordered_json line = {{"kind", "blocked"}, {"premises", b.premise_texts}, {"hypothesis", b.hypothesis_text}};
        out += line.dump();
        out.push_back('\n');
    }
    // Only when deletions left a gap, so ids stay unique across a reload.
    if (next_seq_ != last_seq + 1) {
        out += ordered_json{{"kind", "meta"}, {"next_seq", next_seq_}}.dump();
        out.push_back('\n');
    }
    return out;
}

std::string MemoryStore::serialize() const
{
    std::shared_lock lock(mutex_);
    return serialize_locked();
}

std::string MemoryStore::state_hash() const
{
    return hex64(fnv1a(serialize()));
}

void MemoryStore::save(const std::filesystem::path& path) const
{
    const std::string data = serialize();
    // Write-then-rename so a crash never leaves a torn file behind.
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::IoFailure, "cannot open '" + tmp.string() + "' for writing");
        }
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        out.flush();
        if (!out) {
            throw Error(ErrorCode::IoFailure, "write to '" + tmp.string() + "' failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error(ErrorCode::IoFailure, "cannot replace '" + path.string() + "'");
    }
}

void MemoryStore::load(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    load_from_string(buf.str());
}

void MemoryStore::load_from_string(std::string_view jsonl)
{
    // Parse into a scratch store first so a bad file leaves this one intact.
    MemoryStore scratch;
    scratch.parse_into_locked(jsonl);
    std::string snapshot = scratch.serialize_locked();
    std::unique_lock lock(mutex_);
    parse_into_locked(snapshot);
}

void MemoryStore::clear()
{
    std::unique_lock lock(mutex_);
    parse_into_locked("");
}

void MemoryStore::parse_into_locked(std::string_view jsonl)
{
    slots_.clear();
    by_key_.clear();
    by_id_.clear();
    blocked_.clear();
    blocked_keys_.clear();
    next_seq_ = 1;
    for (auto& index : indexes_) index.clear();

    std::uint64_t last_seq = 0;
    std::uint64_t seq_floor = 0;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < jsonl.size()) {
        std::size_t end = jsonl.find('\n', pos);
        if (end == std::string_view::npos) end = jsonl.size();
        std::string_view raw = jsonl.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
        if (normalize(raw).empty()) continue;

        auto fail = [line_no](const std::string& what) { return Error(ErrorCode::FormatError, what, line_no); };
        json obj;
        try {
            obj = json::parse(raw);
        } catch (const json::parse_error& e) {
            throw fail(std::string("malformed JSON: ") + e.what());
        }
        if (!obj.is_object() || !obj.contains("kind") || !obj["kind"].is_string()) {
            throw fail("expected an object with a string 'kind'");
        }
        try {
            const std::string kind = obj["kind"];
            if (kind == "fact") {
                Slot slot;
                slot.record.id = obj.at("id").get<std::string>();
                slot.record.text = normalize(obj.at("text").get<std::string>());
                slot.record.provenance = parse_provenance(obj.at("provenance").get<std::string>());
                slot.record.seq = obj.at("seq").get<std::uint64_t>();
                for (const auto& q : obj.value("linked_questions", json::array())) {
                    if (q.is_string()) {
                        slot.record.linked_questions.push_back({q.get<std::string>(), ""});
                    } else {
                        slot.record.linked_questions.push_back(
                            {q.at("id").get<std::string>(), q.value("text", std::string())});
                    }
                }
                if (slot.record.text.empty()) throw fail("fact text is empty");
                if (slot.record.seq <= last_seq) throw fail("seq values must be strictly increasing");
                const std::string key = to_lower(slot.record.text);
                if (by_key_.count(key)) throw fail("duplicate fact text");
                if (by_id_.count(slot.record.id)) throw fail("duplicate fact id");
                last_seq = slot.record.seq;
                const std::size_t index = slots_.size();
                by_key_.emplace(key, index);
                by_id_.emplace(slot.record.id, index);
                slots_.push_back(std::move(slot));
            } else if (kind == "blocked") {
                BlockedEntailment entry;
                for (const auto& p : obj.at("premises")) entry.premise_texts.push_back(normalize(p.get<std::string>()));
                entry.hypothesis_text = normalize(obj.at("hypothesis").get<std::string>());
                if (entry.premise_texts.empty()) throw fail("blocked entry has no premises");
                std::string key = blocked_key(entry.premise_texts, entry.hypothesis_text);
                if (std::find(blocked_keys_.begin(), blocked_keys_.end(), key) == blocked_keys_.end()) {
                    blocked_.push_back(std::move(entry));
                    blocked_keys_.push_back(std::move(key));
                }
            } else if (kind == "meta") {
                seq_floor = std::max(seq_floor, obj.at("next_seq").get<std::uint64_t>());
            } else {
                throw fail("unknown kind '" + kind + "'");
            }
        } catch (const json::exception& e) {
            throw fail(std::string("bad field: ") + e.what());
        } catch (const Error& e) {
            if (e.code() == ErrorCode::FormatError) throw;
            throw fail(e.what());
        }
    }
    next_seq_ = std::max(last_seq + 1, seq_floor);
    rebuild_locked();
}

RecallRow evaluate_recall(const MemoryStore& memory, std::span<const GoldPair> gold,
                          std::span<const std::size_t> ks, IndexStrategy strategy, const Bm25Params& params)
{
    for (const auto& g : gold) {
        if (!memory.find(g.gold_fact_id)) {
            throw Error(ErrorCode::UnknownGoldId, "gold fact id '" + g.gold_fact_id + "' is not in memory");
        }
    }
    RecallRow row;
    row.strategy = strategy;
    for (std::size_t k : ks) {
        RetrievalConfig config;
        config.r = k;
        config.strategy = strategy;
        config.params = params;
        std::size_t hits = 0;
        for (const auto& g : gold) {
            const auto results = memory.retrieve(g.query, config);
            hits += std::any_of(results.begin(), results.end(),
                                [&](const ScoredFact& f) { return f.record.id == g.gold_fact_id; });
        }
        row.ks.push_back(k);
        row.recall.push_back(gold.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(gold.size()));
    }
    return row;
}

}  // namespace tqa
