#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <thread>

#include "support/fixtures.hpp"
#include "tqa/errors.hpp"
#include "tqa/memory_store.hpp"
#include "tqa/text.hpp"

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

std::filesystem::path temp_file(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("tqa_test_" + name);
}

const char* kPennyQuery = "Can a magnet attract a copper pan?";

}  // namespace

TEST_SUITE("memory_store") {

TEST_CASE("retrieval matches frozen brute-force scores")
{
    MemoryStore m;
    m.add_fact("A penny is made of copper.", Provenance::User);
    m.add_fact("A magnet cannot attract copper.", Provenance::User);
    m.add_fact("Plants create food through photosynthesis", Provenance::User);

    // from tests/oracle/bm25_oracle.py
    const auto hits = m.retrieve(kPennyQuery, {});
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].record.text == "A magnet cannot attract copper.");
    CHECK(std::fabs(hits[0].score - 3.4601388530721637) < 1e-12);
    CHECK(hits[1].record.text == "A penny is made of copper.");
    CHECK(std::fabs(hits[1].score - 1.3414157634689106) < 1e-12);

    RetrievalConfig one;
    one.r = 1;
    const auto top = m.retrieve(kPennyQuery, one);
    REQUIRE(top.size() == 1);
    CHECK(top[0].record.text == "A magnet cannot attract copper.");
}

TEST_CASE("empty store and no overlap give empty results")
{
    MemoryStore m;
    CHECK(m.retrieve(kPennyQuery, {}).empty());
    m.add_fact("Plants need light", Provenance::User);
    CHECK(m.retrieve(kPennyQuery, {}).empty());
}

TEST_CASE("ties go to the earlier insertion")
{
    MemoryStore m;
    m.add_fact("copper wire", Provenance::User);
    m.add_fact("copper pipe", Provenance::User);
    const auto hits = m.retrieve("copper", {});
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].score == hits[1].score);
    CHECK(hits[0].record.seq < hits[1].record.seq);
}

TEST_CASE("add_fact deduplicates case-insensitively and merges links")
{
    MemoryStore m;
    const auto a = m.add_fact("A penny is made of copper.", Provenance::User, QuestionLink{"q1", "Q one"});
    const auto b = m.add_fact("  a PENNY is made of copper. ", Provenance::SimulatedTeacher, QuestionLink{"q2", "Q two"});
    m.add_fact("A penny is made of copper.", Provenance::User, QuestionLink{"q1", "Q one"});
    CHECK(m.size() == 1);
    CHECK(a.id == b.id);
    const auto rec = m.find(a.id);
    REQUIRE(rec);
    CHECK(rec->text == "A penny is made of copper.");
    CHECK(rec->provenance == Provenance::User);
    REQUIRE(rec->linked_questions.size() == 2);
    CHECK(rec->linked_questions[1].id == "q2");
    CHECK(code_of([&] { m.add_fact(" \t ", Provenance::User); }) == ErrorCode::EmptyFact);
    CHECK(m.size() == 1);
}

TEST_CASE("removed facts leave the index")
{
    MemoryStore m;
    const auto a = m.add_fact("copper wire", Provenance::User);
    m.add_fact("iron nail", Provenance::User);
    CHECK(m.remove_fact(a.id));
    CHECK_FALSE(m.remove_fact(a.id));
    CHECK(m.retrieve("copper", {}).empty());
    CHECK(m.index_document_count(IndexStrategy::FactTerms) == 1);
    // text can be added again and gets a fresh id
    const auto again = m.add_fact("copper wire", Provenance::User);
    CHECK(again.id != a.id);
}

TEST_CASE("strategies build the documented number of documents")
{
    MemoryStore m;
    m.add_fact("bare fact", Provenance::User);
    m.add_fact("linked fact", Provenance::User, QuestionLink{"q1", "first question"});
    m.add_fact("linked fact", Provenance::User, QuestionLink{"q2", "second question"});
    CHECK(m.index_document_count(IndexStrategy::FactTerms) == 2);
    CHECK(m.index_document_count(IndexStrategy::QuestionTerms) == 2);
    CHECK(m.index_document_count(IndexStrategy::QuestionPlusFact) == 3);
    CHECK(m.index_document_count(IndexStrategy::RelevantQuestionsPlusFact) == 2);

    RetrievalConfig q;
    q.strategy = IndexStrategy::QuestionTerms;
    CHECK(m.retrieve("bare", q).empty());
    const auto hits = m.retrieve("second", q);
    REQUIRE(hits.size() == 1);
    CHECK(hits[0].record.text == "linked fact");
}

TEST_CASE("strategy names parse and render")
{
    for (auto s : kAllStrategies) CHECK(parse_strategy(strategy_label(s)) == s);
    CHECK(parse_strategy("rqf") == IndexStrategy::RelevantQuestionsPlusFact);
    CHECK(code_of([] { parse_strategy("bogus"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("retrieval config is validated")
{
    MemoryStore m;
    RetrievalConfig bad;
    bad.r = 0;
    CHECK(code_of([&] { m.retrieve("x", bad); }) == ErrorCode::InvalidArgument);
    bad.r = 1;
    bad.params.b = 1.5;
    CHECK(code_of([&] { m.retrieve("x", bad); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("blocked entailments ignore premise order and whitespace")
{
    MemoryStore m;
    const std::vector<std::string> p{"A penny is made of copper.", "A magnet can attract copper."};
    const std::vector<std::string> swapped{"A magnet can attract copper. ", "A penny is made of copper."};
    m.block_entailment(p, "A magnet can attract a penny.");
    m.block_entailment(swapped, "A magnet can attract a penny.");
    CHECK(m.blocked_size() == 1);
    CHECK(m.is_blocked(swapped, "A magnet can attract a penny."));
    CHECK_FALSE(m.is_blocked(p, "A magnet cannot attract a penny."));
    CHECK_FALSE(m.is_blocked(std::vector<std::string>{p[0]}, "A magnet can attract a penny."));
    CHECK(code_of([&] { m.block_entailment(std::vector<std::string>{}, "x"); }) == ErrorCode::EmptyPremises);
}

TEST_CASE("save and load round-trip bit-exactly")
{
    MemoryStore m;
    m.add_fact("A penny is made of copper.", Provenance::User, QuestionLink{"q1", "Can a magnet attract a penny?"});
    m.add_fact("A magnet cannot attract copper.", Provenance::SessionCommit);
    const auto gone = m.add_fact("temporary", Provenance::User);
    m.remove_fact(gone.id);
    m.block_entailment(std::vector<std::string>{"a", "b"}, "c");

    const auto path = temp_file("roundtrip.jsonl");
    m.save(path);
    MemoryStore l;
    l.load(path);
    std::filesystem::remove(path);

    CHECK(l.serialize() == m.serialize());
    CHECK(l.state_hash() == m.state_hash());
    for (auto s : kAllStrategies) {
        RetrievalConfig c;
        c.strategy = s;
        const auto a = m.retrieve(kPennyQuery, c);
        const auto b = l.retrieve(kPennyQuery, c);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].record == b[i].record);
            CHECK(a[i].score == b[i].score);
        }
    }
    CHECK(l.serialize().find("\"meta\"") != std::string::npos);
    // new ids continue after the highest seq ever issued
    const auto next = l.add_fact("fresh", Provenance::User);
    CHECK(next.seq == 4);
}

TEST_CASE("load reports the failing line and leaves the store intact")
{
    MemoryStore m;
    m.add_fact("keep me", Provenance::User);
    const auto before = m.serialize();

    auto line_of = [&](const std::string& text) -> std::optional<std::size_t> {
        try {
            m.load_from_string(text);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::FormatError);
            return e.line();
        }
        FAIL("expected FormatError");
        return std::nullopt;
    };
    const std::string ok = R"({"kind":"fact","id":"f1","text":"a","provenance":"user","linked_questions":[],"seq":1})";
    CHECK(line_of(ok + "\n{not json") == 2);
    CHECK(line_of(ok + "\n" + ok) == 2);
    CHECK(line_of(ok + "\n\n" + R"({"kind":"fact","id":"f2","text":"b","provenance":"user","linked_questions":[],"seq":1})") == 3);
    CHECK(line_of(R"({"kind":"mystery"})") == 1);
    CHECK(line_of(R"({"kind":"fact","id":"f1","text":"a","provenance":"alien","seq":1})") == 1);
    CHECK(m.serialize() == before);

    CHECK(code_of([&] { m.load("/nonexistent/dir/memory.jsonl"); }) == ErrorCode::IoFailure);
    CHECK(code_of([&] { m.save("/nonexistent/dir/memory.jsonl"); }) == ErrorCode::IoFailure);
}

TEST_CASE("evaluate_recall rejects unknown gold ids")
{
    MemoryStore m;
    const auto a = m.add_fact("copper wire", Provenance::User);
    const std::vector<std::size_t> ks{1, 3};
    std::vector<GoldPair> gold{{"copper", a.id}};
    const auto row = evaluate_recall(m, gold, ks, IndexStrategy::FactTerms);
    CHECK(row.recall == std::vector<double>{1.0, 1.0});
    gold.push_back({"x", "f999"});
    CHECK(code_of([&] { evaluate_recall(m, gold, ks, IndexStrategy::FactTerms); }) == ErrorCode::UnknownGoldId);
}

TEST_CASE("random corpora agree with the brute-force oracle")
{
    std::mt19937_64 rng(99);
    for (int round = 0; round < 60; ++round) {
        fixtures::Corpus c;
        fixtures::fill_corpus(c, rng, 40);
        const auto query = fixtures::random_sentence(rng, 1, 10);
        for (auto s : kAllStrategies) {
            RetrievalConfig cfg;
            cfg.strategy = s;
            cfg.r = 1 + rng() % 8;
            const auto got = c.memory.retrieve(query, cfg);
            const auto want = oracle::rank(c.facts, query, fixtures::to_oracle(s), cfg.r);
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < got.size(); ++i) {
                CHECK(got[i].record.id == c.facts[want[i].fact].id);
                CHECK(std::fabs(got[i].score - want[i].score) < 1e-9);
            }
        }
    }
}

TEST_CASE("concurrent writers and readers keep the store consistent")
{
    MemoryStore m;
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&m, t] {
            for (int i = 0; i < 50; ++i) {
                m.add_fact("fact " + std::to_string(t) + " number " + std::to_string(i), Provenance::User);
                m.retrieve("fact number", {});
            }
        });
    }
    for (auto& th : threads) th.join();
    CHECK(m.size() == 200);
    CHECK(m.index_document_count(IndexStrategy::FactTerms) == 200);
    MemoryStore copy(m);
    CHECK(copy.state_hash() == m.state_hash());
}

}
