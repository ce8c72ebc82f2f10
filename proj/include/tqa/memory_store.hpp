#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tqa/bm25_index.hpp"

namespace tqa {

enum class Provenance { User, SimulatedTeacher, SessionCommit };

std::string_view provenance_name(Provenance p);
Provenance parse_provenance(std::string_view name);

/// How a fact is turned into BM25 index documents. The retrieved unit is
/// always the fact; only the indexing terms differ.
enum class IndexStrategy {
    FactTerms,                  ///< F: terms of the fact
    QuestionTerms,              ///< Q: terms of each question the fact was feedback for
    QuestionPlusFact,           ///< Q + F: one document per (question, fact) pair
    RelevantQuestionsPlusFact,  ///< Relevant Qs + F: one document per fact
};

inline constexpr std::array<IndexStrategy, 4> kAllStrategies = {
    IndexStrategy::FactTerms, IndexStrategy::QuestionTerms, IndexStrategy::QuestionPlusFact,
    IndexStrategy::RelevantQuestionsPlusFact};

/// Short table label: "F", "Q", "Q + F", "Relevant Qs + F".
std::string_view strategy_label(IndexStrategy s);
/// Accepts the labels above plus F/Q/QF/RQF and the enum names, case-insensitive.
IndexStrategy parse_strategy(std::string_view name);

struct RetrievalConfig {
    std::size_t r = 5;
    IndexStrategy strategy = IndexStrategy::FactTerms;
    Bm25Params params;

    void validate() const;
};

/// A question a fact was supplied as feedback for. The text is kept so the
/// question-based strategies can be rebuilt from a saved store.
struct QuestionLink {
    std::string id;
    std::string text;

    bool operator==(const QuestionLink&) const = default;
};

struct FactRecord {
    std::string id;
    std::string text;
    Provenance provenance = Provenance::User;
    std::vector<QuestionLink> linked_questions;
    std::uint64_t seq = 0;

    bool operator==(const FactRecord&) const = default;
};

struct BlockedEntailment {
    std::vector<std::string> premise_texts;
    std::string hypothesis_text;

    bool operator==(const BlockedEntailment&) const = default;
};

struct ScoredFact {
    FactRecord record;
    double score = 0.0;
};

/// The dynamic memory: deduplicated user facts, their BM25 indexes under all
/// four strategies, and the blocked-entailment registry.
///
/// Thread-safe: readers (retrieve, is_blocked, save, ...) take a shared lock,
/// writers take an exclusive lock for the duration of one record mutation.
class MemoryStore {
  public:
    MemoryStore();
    MemoryStore(const MemoryStore& other);
    MemoryStore& operator=(const MemoryStore& other);
    MemoryStore(MemoryStore&&) = delete;
    MemoryStore& operator=(MemoryStore&&) = delete;
    ~MemoryStore();

    /// Adds a fact, or links `question` to the existing record with the same
    /// normalized text (case-insensitive) and returns that record.
    /// Throws Error(EmptyFact) when the text normalizes to nothing.
    FactRecord add_fact(std::string_view text, Provenance provenance,
                        const std::optional<QuestionLink>& question = std::nullopt);

    /// Up to config.r facts by descending BM25 score; zero scores excluded;
    /// ties go to the earlier insertion.
    std::vector<ScoredFact> retrieve(std::string_view query, const RetrievalConfig& config) const;

    BlockedEntailment block_entailment(std::span<const std::string> premises, std::string_view hypothesis);
    bool is_blocked(std::span<const std::string> premises, std::string_view hypothesis) const;

    /// Returns false when no record has this id.
    bool remove_fact(std::string_view id);

    std::optional<FactRecord> find(std::string_view id) const;
    std::optional<FactRecord> find_by_text(std::string_view text) const;
    std::vector<FactRecord> facts() const;
    std::vector<BlockedEntailment> blocked() const;
    std::size_t size() const;
    std::size_t blocked_size() const;
    bool empty() const { return size() == 0; }

    /// Number of live index documents for a strategy (postings granularity).
    std::size_t index_document_count(IndexStrategy strategy) const;

    /// JSON Lines: fact lines in seq order, then blocked lines, then a
    /// {"kind":"meta","next_seq"} line when deletions left a gap at the end.
    std::string serialize() const;
    void save(const std::filesystem::path& path) const;
    /// Replaces the whole store. Throws Error(FormatError, line) or Error(IoFailure).
    void load(const std::filesystem::path& path);
    void load_from_string(std::string_view jsonl);
    void clear();

    /// Fingerprint of the serialized state.
    std::string state_hash() const;

  private:
    struct Slot {
        FactRecord record;
        bool live = true;
        std::array<std::vector<std::size_t>, 4> docs;
    };

    void reindex_slot_locked(std::size_t slot);
    void unindex_slot_locked(std::size_t slot);
    void rebuild_locked();
    std::string serialize_locked() const;
    void parse_into_locked(std::string_view jsonl);

    mutable std::shared_mutex mutex_;
    std::vector<Slot> slots_;
    std::unordered_map<std::string, std::size_t> by_key_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::array<Bm25Index, 4> indexes_;
    std::vector<BlockedEntailment> blocked_;
    std::vector<std::string> blocked_keys_;
    std::uint64_t next_seq_ = 1;
};

/// The index documents (term lists) a record contributes under a strategy.
std::vector<std::vector<std::string>> index_documents(const FactRecord& record, IndexStrategy strategy);

struct GoldPair {
    std::string query;
    std::string gold_fact_id;
};

struct RecallRow {
    IndexStrategy strategy = IndexStrategy::FactTerms;
    std::vector<std::size_t> ks;
    std::vector<double> recall;  ///< parallel to ks, in [0,1]
};

/// recall@k = fraction of queries whose gold fact is in retrieve() with r = k.
/// Throws Error(UnknownGoldId) if a gold id is not in the store.
RecallRow evaluate_recall(const MemoryStore& memory, std::span<const GoldPair> gold,
                          std::span<const std::size_t> ks, IndexStrategy strategy,
                          const Bm25Params& params = {});

}  // namespace tqa
