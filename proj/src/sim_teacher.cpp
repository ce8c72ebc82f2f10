#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "tqa/errors.hpp"
#include "tqa/json_io.hpp"
#include "tqa/sim_teacher.hpp"
#include "tqa/text.hpp"

namespace tqa {

using json = nlohmann::json;

namespace {

std::size_t prefix_size(std::size_t n, double fraction)
{
    // Guard against 0.3 * 10 = 3.0000000000000004 rounding up to 4.
    const double raw = fraction * static_cast<double>(n);
    const double nearest = std::round(raw);
    const double v = std::abs(raw - nearest) < 1e-9 ? nearest : std::ceil(raw);
    return std::min(n, static_cast<std::size_t>(v));
}

QuestionLink link_of(const QAExample& ex)
{
    return {ex.id, ex.question};
}

}  // namespace

std::string_view mode_name(Mode m)
{
    switch (m) {
    case Mode::DirectQA: return "direct";
    case Mode::BeforeTeaching: return "before";
    case Mode::AfterTeaching: return "after";
    case Mode::UpperBound: return "upper_bound";
    }
    return "after";
}

Mode parse_mode(std::string_view name)
{
    const std::string n = to_lower(name);
    if (n == "direct" || n == "directqa") return Mode::DirectQA;
    if (n == "before" || n == "beforeteaching") return Mode::BeforeTeaching;
    if (n == "after" || n == "afterteaching" || n == "proof") return Mode::AfterTeaching;
    if (n == "upper_bound" || n == "upperbound" || n == "upper") return Mode::UpperBound;
    throw Error(ErrorCode::InvalidArgument, "unknown mode '" + std::string(name) + "'");
}

void ExperimentConfig::validate() const
{
    if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "train_fraction must lie in (0,1]");
    }
    controller.validate();
}

json ExperimentReport::to_json() const
{
    json recs = json::array();
    for (const auto& r : records) {
        recs.push_back({{"id", r.id},
                        {"chosen", r.chosen_label},
                        {"correct", r.correct},
                        {"proof", r.proof ? tqa::to_json(*r.proof) : json(nullptr)},
                        {"memory_size", r.memory_size}});
    }
    return {{"mode", std::string(mode_name(mode))},
            {"seed", seed},
            {"train_fraction", train_fraction},
            {"accuracy", accuracy},
            {"memory_size", memory_size},
            {"memory_hash", memory_hash},
            {"records", std::move(recs)}};
}

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed)
{
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

std::string chosen_label(const QAExample& ex, const AnswerResult& result)
{
    if (!result.answered()) return {};
    return ex.label_at(result.choice_index);
}

std::vector<TeachLogEntry> teach(const std::vector<QAExample>& train, const std::vector<std::size_t>& order,
                                 MemoryStore& memory, const ReasoningBackend& backend,
                                 const ControllerConfig& config)
{
    std::vector<TeachLogEntry> log;
    for (std::size_t i : order) {
        const QAExample& ex = train.at(i);
        const AnswerResult r = answer(ex.question, ex.choice_texts(), memory, backend, config);
        TeachLogEntry entry{ex.id, chosen_label(ex, r) == ex.answer_key, false};
        if (!entry.correct) {
            const std::size_t before = memory.size();
            memory.add_fact(ex.core_fact, Provenance::SimulatedTeacher, link_of(ex));
            entry.fact_added = memory.size() > before;
        }
        log.push_back(std::move(entry));
    }
    return log;
}

std::vector<TeachLogEntry> teach(const std::vector<QAExample>& train, MemoryStore& memory,
                                 const ReasoningBackend& backend, const ControllerConfig& config,
                                 std::uint64_t seed, double fraction)
{
    auto order = shuffled_order(train.size(), seed);
    order.resize(prefix_size(train.size(), fraction));
    return teach(train, order, memory, backend, config);
}

ExperimentReport evaluate(const std::vector<QAExample>& test, const MemoryStore& memory,
                          const ReasoningBackend& backend, const ControllerConfig& config, Mode mode)
{
    ExperimentReport report;
    report.mode = mode;
    report.memory_size = memory.size();
    std::size_t correct = 0;
    for (const auto& ex : test) {
        const AnswerResult r = mode == Mode::DirectQA ? answer_direct(ex.question, ex.choice_texts(), backend, config)
                                                      : answer(ex.question, ex.choice_texts(), memory, backend, config);
        ExampleRecord rec{ex.id, chosen_label(ex, r), false, r.best_proof, memory.size()};
        rec.correct = rec.chosen_label == ex.answer_key;
        correct += rec.correct ? 1 : 0;
        report.records.push_back(std::move(rec));
    }
    report.accuracy = test.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(test.size());
    report.memory_hash = memory.state_hash();
    return report;
}

void upper_bound_memory(const std::vector<QAExample>& train, MemoryStore& memory)
{
    for (const auto& ex : train) {
        memory.add_fact(ex.core_fact, Provenance::SimulatedTeacher, link_of(ex));
    }
}

ExperimentReport run_experiment(const std::vector<QAExample>& train, const std::vector<QAExample>& test,
                                const ReasoningBackend& backend, const ExperimentConfig& config)
{
    config.validate();
    MemoryStore memory;
    switch (config.mode) {
    case Mode::DirectQA:
    case Mode::BeforeTeaching: break;
    case Mode::AfterTeaching:
        teach(train, memory, backend, config.controller, config.seed, config.train_fraction);
        break;
    case Mode::UpperBound: {
        auto order = shuffled_order(train.size(), config.seed);
        order.resize(prefix_size(train.size(), config.train_fraction));
        std::vector<QAExample> subset;
        for (std::size_t i : order) subset.push_back(train[i]);
        upper_bound_memory(subset, memory);
        break;
    }
    }
    ExperimentReport report = evaluate(test, memory, backend, config.controller, config.mode);
    report.seed = config.seed;
    report.train_fraction = config.train_fraction;
    return report;
}

std::vector<CurvePoint> learning_curve(const std::vector<QAExample>& train, const std::vector<QAExample>& test,
                                       const std::vector<double>& fractions,
                                       const std::vector<std::uint64_t>& seeds, const ReasoningBackend& backend,
                                       const ControllerConfig& config)
{
    if (!std::is_sorted(fractions.begin(), fractions.end())) {
        throw Error(ErrorCode::InvalidArgument, "fractions must be sorted ascending");
    }
    for (double f : fractions) {
        if (!(f >= 0.0 && f <= 1.0)) throw Error(ErrorCode::InvalidArgument, "fractions must lie in [0,1]");
    }
    if (seeds.empty()) throw Error(ErrorCode::InvalidArgument, "at least one seed is required");

    std::vector<CurvePoint> curve(fractions.size());
    for (std::size_t i = 0; i < fractions.size(); ++i) curve[i].fraction = fractions[i];
    for (std::uint64_t seed : seeds) {
        const auto order = shuffled_order(train.size(), seed);
        MemoryStore memory;
        std::size_t taught = 0;
        for (std::size_t i = 0; i < fractions.size(); ++i) {
            const std::size_t upto = prefix_size(train.size(), fractions[i]);
            std::vector<std::size_t> slice(order.begin() + static_cast<std::ptrdiff_t>(taught),
                                           order.begin() + static_cast<std::ptrdiff_t>(upto));
            teach(train, slice, memory, backend, config);
            taught = upto;
            curve[i].per_seed.push_back(evaluate(test, memory, backend, config).accuracy);
        }
    }
    for (auto& p : curve) {
        double sum = 0.0;
        for (double a : p.per_seed) sum += a;
        p.mean_accuracy = sum / static_cast<double>(p.per_seed.size());
    }
    return curve;
}

json curve_to_json(const std::vector<CurvePoint>& curve)
{
    json out = json::array();
    for (const auto& p : curve) {
        out.push_back({{"fraction", p.fraction}, {"mean_accuracy", p.mean_accuracy}, {"per_seed", p.per_seed}});
    }
    return out;
}

void bench_memory(const std::vector<QAExample>& train, MemoryStore& memory)
{
    upper_bound_memory(train, memory);
}

std::vector<GoldPair> bench_gold(const std::vector<QAExample>& test, const MemoryStore& memory)
{
    std::vector<GoldPair> gold;
    for (const auto& ex : test) {
        auto rec = memory.find_by_text(ex.core_fact);
        gold.push_back({retrieval_query(ex.question, ex.choice_texts()), rec ? rec->id : std::string("?") + ex.id});
    }
    return gold;
}

std::vector<RecallRow> bench_retrieval(const std::vector<QAExample>& train, const std::vector<QAExample>& test,
                                       const std::vector<std::size_t>& ks,
                                       const std::vector<IndexStrategy>& strategies, const Bm25Params& params)
{
    MemoryStore memory;
    bench_memory(train, memory);
    const auto gold = bench_gold(test, memory);
    std::vector<RecallRow> rows;
    for (IndexStrategy s : strategies) rows.push_back(evaluate_recall(memory, gold, ks, s, params));
    return rows;
}

std::string render_recall_table(const std::vector<RecallRow>& rows)
{
    std::ostringstream out;
    const int label_width = 18;
    out << std::string("Strategy").append(label_width - 8, ' ');
    if (!rows.empty()) {
        for (std::size_t k : rows.front().ks) {
            std::string h = "R@" + std::to_string(k);
            out << " " << std::string(8 - std::min<std::size_t>(8, h.size()), ' ') << h;
        }
    }
    out << '\n';
    for (const auto& row : rows) {
        std::string label(strategy_label(row.strategy));
        out << label << std::string(label_width - std::min<std::size_t>(label_width, label.size()), ' ');
        for (double r : row.recall) {
            char buf[32];
            std::snprintf(buf, sizeof buf, " %8.1f", 100.0 * r);
            out << buf;
        }
        out << '\n';
    }
    return out.str();
}

json recall_to_json(const std::vector<RecallRow>& rows)
{
    json out = json::array();
    for (const auto& row : rows) {
        json cells = json::object();
        for (std::size_t i = 0; i < row.ks.size(); ++i) cells[std::to_string(row.ks[i])] = row.recall[i];
        out.push_back({{"strategy", std::string(strategy_label(row.strategy))}, {"recall_at", cells}});
    }
    return out;
}

}  // namespace tqa
