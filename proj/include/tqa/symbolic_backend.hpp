#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "tqa/entailment.hpp"

namespace tqa {

/// One verb phrase of the template grammar. positive[i] and negative[i] are
/// each other's negation, which keeps negate() an involution.
struct VerbForm {
    std::string key;
    std::vector<std::string> positive;
    std::vector<std::string> negative;
    /// Positive statements with a taxonomic verb are isa links: child = subject, parent = object.
    bool taxonomic = false;
};

/// Normalized ground statement: noun-phrase keys have articles dropped and
/// the last word singularized.
struct Assertion {
    std::string subject;
    std::string verb;
    std::string object;
    bool positive = true;

    /// Identity ignoring polarity.
    std::string key() const { return subject + '|' + verb + '|' + object; }
    bool operator==(const Assertion&) const = default;
};

struct ParsedStatement {
    Assertion assertion;
    std::vector<std::string> subject_words;
    std::string verb_surface;
    std::string verb_counterpart;  ///< surface of the opposite polarity
    std::vector<std::string> object_words;
    std::string terminal;  ///< trailing ".", "?" or "!" run, possibly empty
};

/// Noun-phrase key: lowercase terms, leading article dropped, last word singularized.
std::string np_key(std::string_view phrase);

/// Parses "<subject> <verb phrase> <object>" sentences over a verb vocabulary.
class StatementGrammar {
  public:
    StatementGrammar();
    explicit StatementGrammar(std::vector<VerbForm> verbs);

    static std::vector<VerbForm> default_verbs();

    /// Earliest verb position wins; at that position the longest phrase wins.
    /// Also recognizes "can <w>" / "cannot <w>" / "can not <w>" for any word.
    std::optional<ParsedStatement> parse(std::string_view sentence) const;

    /// Flips polarity of a recognized statement in place; otherwise prefixes
    /// "It is not true that " (and strips that prefix when already present).
    std::string negate(std::string_view sentence) const;

    bool is_taxonomic(std::string_view verb_key) const;
    const VerbForm* find_verb(std::string_view surface) const;
    const std::vector<VerbForm>& verbs() const { return verbs_; }

  private:
    struct Phrase {
        std::vector<std::string> words;
        std::size_t verb = 0;
        bool positive = true;
        std::size_t form = 0;
    };

    std::vector<VerbForm> verbs_;
    std::vector<Phrase> phrases_;
};

/// Fixed belief levels of the symbolic model. Context always dominates the KB.
struct BeliefConstants {
    double context_true = 1.0;
    double context_false = 0.0;
    double kb_true = 0.9;
    double kb_false = 0.1;
    double unknown = 0.3;
};

struct KbStatement {
    Assertion assertion;
    std::string text;
    /// Per-statement belief; falls back to BeliefConstants::kb_true.
    std::optional<double> confidence;
};

/// Taxonomy plus ground statements, loaded from a JSON fixture:
///
///   {"templates": {"verbs": [{"key", "positive": [...], "negative": [...], "taxonomic"}]},
///    "isa_links": [{"child", "parent", "verb"?}],
///    "assertions": ["sentence", {"text", "confidence"?}, {"subject","verb","object","polarity"}]}
///
/// Invariants: taxonomy acyclic; no statement present with both polarities.
class SymbolicKB {
  public:
    SymbolicKB();
    explicit SymbolicKB(StatementGrammar grammar);

    static SymbolicKB from_json(const nlohmann::json& doc);
    static SymbolicKB load(const std::filesystem::path& path);
    nlohmann::json to_json() const;

    /// Throws Error(InvariantViolation) on contradictions or taxonomy cycles,
    /// Error(UnparseableStatement) when the grammar does not recognize the text.
    void add_statement(std::string_view text, std::optional<double> confidence = std::nullopt);
    void add_link(std::string_view child, std::string_view parent, std::string_view verb = "is a kind of");

    const StatementGrammar& grammar() const { return grammar_; }
    const std::vector<KbStatement>& statements() const { return statements_; }
    /// Index of a statement with this key, either polarity.
    std::optional<std::size_t> find(const Assertion& a) const;

    bool knows_np(const std::string& key) const { return noun_phrases_.count(key) > 0; }
    bool knows_verb(const std::string& key) const { return verb_keys_.count(key) > 0; }

    /// Stable hash of the statement list, for checking the KB is never mutated.
    std::string fingerprint() const;

  private:
    bool reaches(const std::string& from, const std::string& to) const;

    StatementGrammar grammar_;
    std::vector<KbStatement> statements_;
    std::unordered_map<std::string, std::size_t> by_key_;
    std::set<std::string> noun_phrases_;
    std::set<std::string> verb_keys_;
    std::vector<std::pair<std::string, std::string>> links_;
    std::string verbs_json_;
};

/// Deterministic backend over a SymbolicKB. Proofs are derivations under two
/// rules: direct assertion, and taxonomy specialization on either the subject
/// or the object ((X isa Y) and (Y v Z) give (X v Z); (Y isa Z) and (X v Z) give (X v Y)).
/// Immutable after construction, so safe for concurrent use.
class SymbolicBackend final : public ReasoningBackend {
  public:
    explicit SymbolicBackend(SymbolicKB kb, BeliefConstants beliefs = {});

    std::string name() const override { return "symbolic"; }
    std::string declarativize(std::string_view question, std::string_view choice) const override;
    std::vector<std::string> generate_candidates(std::string_view question, std::size_t n) const override;
    std::optional<Proof> generate_proof(const ProofRequest& request) const override;
    /// Throws Error(UnparseableStatement) when the statement is neither in
    /// context verbatim nor recognized by the grammar.
    double belief_score(std::string_view statement, std::span<const std::string> context) const override;
    double entailment_score(std::span<const std::string> premises, std::string_view hypothesis) const override;
    std::string negate(std::string_view statement) const override;
    double direct_answer_score(const Hypothesis& hypothesis) const override;

    const SymbolicKB& kb() const { return kb_; }
    const BeliefConstants& beliefs() const { return beliefs_; }

  private:
    SymbolicKB kb_;
    BeliefConstants beliefs_;
};

}  // namespace tqa
