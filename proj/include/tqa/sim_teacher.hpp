#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "tqa/answer_controller.hpp"
#include "tqa/symbolic_backend.hpp"

namespace tqa {

struct LabeledChoice {
    std::string label;
    std::string text;
    bool operator==(const LabeledChoice&) const = default;
};

struct QAExample {
    std::string id;
    std::string question;
    std::vector<LabeledChoice> choices;
    std::string answer_key;
    std::string core_fact;
    std::vector<std::string> gold_premises;

    /// Throws Error(InvariantViolation) or Error(FormatError).
    void validate() const;
    std::vector<std::string> choice_texts() const;
    /// Label of the choice at `index`; the controller labels choices by position.
    const std::string& label_at(std::size_t index) const { return choices.at(index).label; }
    bool operator==(const QAExample&) const = default;
};

nlohmann::json to_json(const QAExample& ex);

/// Dataset JSON Lines, one example per line:
/// {"id","question","choices":[{"label","text"}],"answer_key","core_fact","gold_premises":[...]}
std::vector<QAExample> parse_dataset(std::string_view jsonl);
std::vector<QAExample> load_dataset(const std::filesystem::path& path);
std::string dataset_to_jsonl(const std::vector<QAExample>& examples);

/// OpenBookQA rows with the fact1 field (the release "with additional facts").
std::vector<QAExample> parse_obqa(std::string_view jsonl);
/// QuaRTz rows; the knowledge paragraph `para` is the core fact.
std::vector<QAExample> parse_quartz(std::string_view jsonl);
std::vector<QAExample> load_obqa(const std::filesystem::path& path);
std::vector<QAExample> load_quartz(const std::filesystem::path& path);

/// Where the real dataset files live: $TQA_DATA_DIR with obqa_train.jsonl,
/// obqa_test.jsonl, quartz_train.jsonl, quartz_test.jsonl.
std::optional<std::filesystem::path> real_data_dir();

enum class Mode { DirectQA, BeforeTeaching, AfterTeaching, UpperBound };
std::string_view mode_name(Mode m);
Mode parse_mode(std::string_view name);

struct ExperimentConfig {
    Mode mode = Mode::AfterTeaching;
    std::uint64_t seed = 0;
    double train_fraction = 1.0;
    ControllerConfig controller;
    void validate() const;
};

struct ExampleRecord {
    std::string id;
    std::string chosen_label;  ///< empty when no answer was found
    bool correct = false;
    std::optional<Proof> proof;
    std::size_t memory_size = 0;
};

struct ExperimentReport {
    Mode mode = Mode::AfterTeaching;
    std::uint64_t seed = 0;
    double train_fraction = 1.0;
    double accuracy = 0.0;
    std::vector<ExampleRecord> records;
    std::string memory_hash;
    std::size_t memory_size = 0;

    nlohmann::json to_json() const;
};

struct TeachLogEntry {
    std::string id;
    bool correct = false;
    bool fact_added = false;
};

/// Seeded Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed);

/// Label the controller picks for `ex`, or empty for NoProof.
std::string chosen_label(const QAExample& ex, const AnswerResult& result);

/// Teaches over `train` in the given order: each wrong answer adds the core fact.
std::vector<TeachLogEntry> teach(const std::vector<QAExample>& train, const std::vector<std::size_t>& order,
                                 MemoryStore& memory, const ReasoningBackend& backend,
                                 const ControllerConfig& config);
/// Shuffles with `seed`, then teaches on the first ceil(fraction * |train|).
std::vector<TeachLogEntry> teach(const std::vector<QAExample>& train, MemoryStore& memory,
                                 const ReasoningBackend& backend, const ControllerConfig& config,
                                 std::uint64_t seed, double fraction = 1.0);

/// Read-only pass over `test`. DirectQA uses the hypothesis-only scorer.
ExperimentReport evaluate(const std::vector<QAExample>& test, const MemoryStore& memory,
                          const ReasoningBackend& backend, const ControllerConfig& config,
                          Mode mode = Mode::AfterTeaching);

/// Adds every distinct core fact of `train`, linked to its questions.
void upper_bound_memory(const std::vector<QAExample>& train, MemoryStore& memory);

/// Builds the memory the mode calls for from an empty store, then evaluates.
ExperimentReport run_experiment(const std::vector<QAExample>& train, const std::vector<QAExample>& test,
                                const ReasoningBackend& backend, const ExperimentConfig& config);

struct CurvePoint {
    double fraction = 0.0;
    double mean_accuracy = 0.0;
    std::vector<double> per_seed;
};

/// Cumulative teaching per seed over increasing fractions of the shuffled train set.
std::vector<CurvePoint> learning_curve(const std::vector<QAExample>& train, const std::vector<QAExample>& test,
                                       const std::vector<double>& fractions,
                                       const std::vector<std::uint64_t>& seeds, const ReasoningBackend& backend,
                                       const ControllerConfig& config);

nlohmann::json curve_to_json(const std::vector<CurvePoint>& curve);

// ---- synthetic suite ----

struct SynthOptions {
    std::size_t core_facts = 20;
    std::size_t train_per_fact = 4;
    std::size_t test_per_fact = 4;
    std::size_t misconceptions = 12;
    void validate() const;
};

struct SyntheticSuite {
    nlohmann::json kb_json;
    std::vector<QAExample> train;
    std::vector<QAExample> test;
    std::vector<std::string> core_facts;
    std::vector<bool> misconception;  ///< parallel to core_facts

    SymbolicKB kb() const { return SymbolicKB::from_json(kb_json); }
};

/// Yes/no questions over "<material> <object>" entities. Misconception facts
/// have their negation in the KB; the rest have the fact itself.
SyntheticSuite make_synthetic_suite(const SynthOptions& options = {});

// ---- indexing-strategy benchmark ----

/// Memory linked the way the question strategies need it: each core fact
/// carries the train questions it was feedback for.
void bench_memory(const std::vector<QAExample>& train, MemoryStore& memory);

/// Gold pairs: each test question against the id of its core fact.
std::vector<GoldPair> bench_gold(const std::vector<QAExample>& test, const MemoryStore& memory);

std::vector<RecallRow> bench_retrieval(const std::vector<QAExample>& train, const std::vector<QAExample>& test,
                                       const std::vector<std::size_t>& ks,
                                       const std::vector<IndexStrategy>& strategies, const Bm25Params& params = {});

/// Strategy rows by recall@k columns, values in percent.
std::string render_recall_table(const std::vector<RecallRow>& rows);
nlohmann::json recall_to_json(const std::vector<RecallRow>& rows);

}  // namespace tqa
