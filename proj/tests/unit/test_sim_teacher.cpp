#include <doctest.h>

#include <algorithm>
#include <map>
#include <numeric>

#include "support/recording_backend.hpp"
#include "tqa/errors.hpp"
#include "tqa/noisy_backend.hpp"
#include "tqa/sim_teacher.hpp"

using namespace tqa;

namespace {

ErrorCode code_of(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an error");
    return ErrorCode::InvariantViolation;
}

const SyntheticSuite& suite()
{
    static const SyntheticSuite s = make_synthetic_suite();
    return s;
}

bool is_misconception(const QAExample& ex)
{
    const auto& s = suite();
    for (std::size_t i = 0; i < s.core_facts.size(); ++i) {
        if (s.core_facts[i] == ex.core_fact) return s.misconception[i];
    }
    return false;
}

std::vector<std::size_t> identity(std::size_t n)
{
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), 0);
    return v;
}

}  // namespace

TEST_SUITE("sim_teacher") {

TEST_CASE("the synthetic suite has the requested shape")
{
    const auto& s = suite();
    CHECK(s.core_facts.size() == 20);
    CHECK(s.train.size() == 80);
    CHECK(s.test.size() == 80);
    CHECK(std::count(s.misconception.begin(), s.misconception.end(), true) == 12);
    for (const auto& ex : s.train) CHECK_NOTHROW(ex.validate());
    for (const auto& ex : s.test) CHECK_NOTHROW(ex.validate());
    CHECK_NOTHROW(s.kb());
    SynthOptions bad;
    bad.misconceptions = 21;
    CHECK(code_of([&] { make_synthetic_suite(bad); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("teaching adds one core fact per wrong answer, deduplicated")
{
    const auto& s = suite();
    SymbolicBackend be(s.kb());
    std::vector<QAExample> fixture;
    std::set<std::string> wrong_facts;
    for (const auto& ex : s.train) {
        if (is_misconception(ex)) {
            if (wrong_facts.size() < 3 && wrong_facts.insert(ex.core_fact).second) fixture.push_back(ex);
        } else if (fixture.size() - wrong_facts.size() < 7) {
            fixture.push_back(ex);
        }
    }
    REQUIRE(fixture.size() == 10);
    MemoryStore m;
    const auto log = teach(fixture, identity(fixture.size()), m, be, {});
    CHECK(std::count_if(log.begin(), log.end(), [](const TeachLogEntry& e) { return e.correct; }) == 7);
    CHECK(m.size() == 3);
    for (const auto& f : m.facts()) {
        CHECK(wrong_facts.count(f.text) == 1);
        CHECK(f.provenance == Provenance::SimulatedTeacher);
        CHECK(f.linked_questions.size() == 1);
    }
}

TEST_CASE("two wrong answers on one core fact give one record with two links")
{
    const auto& s = suite();
    fixtures::BlankBackend be;
    std::vector<QAExample> two{s.train[0], s.train[1]};
    REQUIRE(two[0].core_fact == two[1].core_fact);
    MemoryStore m;
    teach(two, identity(2), m, be, {});
    REQUIRE(m.size() == 1);
    CHECK(m.facts()[0].linked_questions.size() == 2);
}

TEST_CASE("an all-correct pass leaves memory unchanged")
{
    const auto& s = suite();
    SymbolicBackend be(s.kb());
    std::vector<QAExample> right;
    for (const auto& ex : s.train) {
        if (!is_misconception(ex)) right.push_back(ex);
    }
    MemoryStore m;
    teach(right, identity(right.size()), m, be, {});
    CHECK(m.empty());
}

TEST_CASE("evaluation does not touch memory")
{
    const auto& s = suite();
    SymbolicBackend be(s.kb());
    MemoryStore m;
    upper_bound_memory(s.train, m);
    const auto hash = m.state_hash();
    const auto report = evaluate(s.test, m, be, {}, Mode::AfterTeaching);
    CHECK(m.state_hash() == hash);
    CHECK(report.memory_hash == hash);
    CHECK(report.records.size() == s.test.size());
    const double mean = static_cast<double>(std::count_if(report.records.begin(), report.records.end(),
                                                          [](const ExampleRecord& r) { return r.correct; })) /
                        static_cast<double>(report.records.size());
    CHECK(report.accuracy == mean);
}

TEST_CASE("upper bound memory holds each distinct core fact")
{
    const auto& s = suite();
    std::vector<QAExample> ten(s.train.begin(), s.train.begin() + 10);
    std::set<std::string> distinct;
    for (const auto& ex : ten) distinct.insert(ex.core_fact);
    MemoryStore m;
    upper_bound_memory(ten, m);
    CHECK(m.size() == distinct.size());
    const auto hash = m.state_hash();
    upper_bound_memory(ten, m);
    CHECK(m.state_hash() == hash);
    MemoryStore empty;
    upper_bound_memory({}, empty);
    CHECK(empty.empty());
}

TEST_CASE("upper bound memory contains every taught fact")
{
    const auto& s = suite();
    SymbolicBackend be(s.kb());
    MemoryStore taught, ub;
    teach(s.train, taught, be, {}, 1);
    upper_bound_memory(s.train, ub);
    for (const auto& f : taught.facts()) CHECK(ub.find_by_text(f.text));
}

TEST_CASE("experiments reproduce the teaching gain")
{
    const auto& s = suite();
    SymbolicBackend be(s.kb());
    ExperimentConfig cfg;
    cfg.seed = 1;
    std::map<Mode, double> acc;
    for (Mode mode : {Mode::DirectQA, Mode::BeforeTeaching, Mode::AfterTeaching, Mode::UpperBound}) {
        cfg.mode = mode;
        acc[mode] = run_experiment(s.train, s.test, be, cfg).accuracy;
    }
    CHECK(acc[Mode::AfterTeaching] - acc[Mode::BeforeTeaching] >= 0.15);
    CHECK(acc[Mode::UpperBound] >= acc[Mode::AfterTeaching] - 0.02);
    const auto a = run_experiment(s.train, s.test, be, cfg).to_json();
    CHECK(a == run_experiment(s.train, s.test, be, cfg).to_json());
}

TEST_CASE("mode names parse")
{
    CHECK(parse_mode("direct") == Mode::DirectQA);
    CHECK(parse_mode("proof") == Mode::AfterTeaching);
    CHECK(parse_mode(mode_name(Mode::UpperBound)) == Mode::UpperBound);
    CHECK(code_of([] { parse_mode("psychic"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("shuffles are seeded permutations")
{
    const auto a = shuffled_order(50, 7);
    auto sorted = a;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == identity(50));
    CHECK(a == shuffled_order(50, 7));
    CHECK(a != shuffled_order(50, 8));
    CHECK(shuffled_order(0, 1).empty());
}

TEST_CASE("learning curves are cumulative and consistent with teach then evaluate")
{
    const auto& s = suite();
    SymbolicBackend be(s.kb());
    const auto full = learning_curve(s.train, s.test, {1.0}, {3}, be, {});
    REQUIRE(full.size() == 1);
    MemoryStore m;
    teach(s.train, m, be, {}, 3, 1.0);
    CHECK(full[0].mean_accuracy == evaluate(s.test, m, be, {}).accuracy);

    const auto curve = learning_curve(s.train, s.test, {0.2, 0.6, 1.0}, {1, 2, 3}, be, {});
    REQUIRE(curve.size() == 3);
    for (const auto& p : curve) CHECK(p.per_seed.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) CHECK(curve.back().per_seed[k] >= curve.front().per_seed[k]);
    CHECK(curve_to_json(curve).size() == 3);

    CHECK(code_of([&] { learning_curve(s.train, s.test, {0.6, 0.2}, {1}, be, {}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { learning_curve(s.train, s.test, {1.5}, {1}, be, {}); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("the retrieval benchmark produces a strategy by k table")
{
    const auto& s = suite();
    const std::vector<std::size_t> ks{1, 3, 5, 10};
    const std::vector<IndexStrategy> all(kAllStrategies.begin(), kAllStrategies.end());
    const auto rows = bench_retrieval(s.train, s.test, ks, all);
    REQUIRE(rows.size() == 4);
    for (const auto& r : rows) {
        CHECK(r.ks == ks);
        CHECK(r.recall.size() == ks.size());
        CHECK(std::is_sorted(r.recall.begin(), r.recall.end()));
    }
    const auto table = render_recall_table(rows);
    CHECK(table.find("R@10") != std::string::npos);
    CHECK(table.find("Relevant Qs + F") != std::string::npos);
    CHECK(std::count(table.begin(), table.end(), '\n') == 5);
    CHECK(recall_to_json(rows).size() == 4);
}

TEST_CASE("noise flips entailment on a reproducible subset")
{
    const auto& s = suite();
    SymbolicBackend inner(s.kb());
    const std::vector<std::string> prem{s.core_facts[1]};
    NoisyBackend off(inner, 0.0, 1), on(inner, 1.0, 1), half(inner, 0.5, 9);
    CHECK(off.entailment_score(prem, s.core_facts[1]) == 1.0);
    CHECK(on.entailment_score(prem, s.core_facts[1]) == 0.0);
    CHECK(half.flips(prem, s.core_facts[2]) == half.flips(prem, s.core_facts[2]));
    CHECK(code_of([&] { NoisyBackend(inner, 1.2, 0); }) == ErrorCode::InvalidArgument);

    ExperimentConfig cfg;
    cfg.mode = Mode::AfterTeaching;
    const auto clean = run_experiment(s.train, s.test, inner, cfg);
    CHECK(run_experiment(s.train, s.test, off, cfg).to_json() == clean.to_json());
    const auto noisy = run_experiment(s.train, s.test, half, cfg);
    CHECK(noisy.accuracy <= clean.accuracy);
    CHECK(run_experiment(s.train, s.test, half, cfg).to_json() == noisy.to_json());
}

}
