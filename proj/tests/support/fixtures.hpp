#pragma once

// Random corpora and small helpers shared by the unit tests and the acceptance run.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "oracle/bm25_oracle.hpp"
#include "tqa/memory_store.hpp"

namespace fixtures {

inline const std::vector<std::string>& vocabulary()
{
    static const std::vector<std::string> words = {
        "penny", "copper", "magnet", "attract", "iron",  "steel",  "plant", "food",  "light", "water",
        "heat",  "metal",  "coin",   "sun",     "earth", "energy", "moon",  "rock",  "sand",  "glass",
        "wood",  "paper",  "salt",   "sugar",   "ice",   "cloud",  "rain",  "wind",  "seed",  "leaf",
        "the",   "a",      "is",     "of",      "can",   "not",    "made",  "caf\xc3\xa9"};
    return words;
}

inline std::string random_sentence(std::mt19937_64& rng, std::size_t min_len, std::size_t max_len)
{
    const auto& v = vocabulary();
    std::uniform_int_distribution<std::size_t> len(min_len, max_len);
    std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
    std::uniform_int_distribution<int> punct(0, 5);
    std::string out;
    const std::size_t n = len(rng);
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += punct(rng) == 0 ? ", " : " ";
        std::string w = v[pick(rng)];
        if (punct(rng) == 1) w[0] = static_cast<char>(w[0] >= 'a' && w[0] <= 'z' ? w[0] - 32 : w[0]);
        out += w;
    }
    return out + (punct(rng) < 3 ? "." : "?");
}

struct Corpus {
    tqa::MemoryStore memory;
    std::vector<oracle::Fact> facts;  ///< in insertion order
    std::vector<std::string> ids;
};

/// Up to `max_docs` random facts, each linked to 0-3 random questions.
/// Duplicate texts merge in the store and in the mirror alike.
inline void fill_corpus(Corpus& c, std::mt19937_64& rng, std::size_t max_docs)
{
    std::uniform_int_distribution<std::size_t> count(1, max_docs);
    std::uniform_int_distribution<int> links(0, 3);
    const std::size_t n = count(rng);
    auto mirror = [&](const tqa::FactRecord& rec) {
        std::size_t k = 0;
        while (k < c.ids.size() && c.ids[k] != rec.id) ++k;
        if (k == c.ids.size()) {
            c.ids.push_back(rec.id);
            c.facts.push_back({rec.id, rec.text, {}});
        }
        c.facts[k].questions.clear();
        for (const auto& l : rec.linked_questions) c.facts[k].questions.push_back(l.text);
    };
    for (std::size_t i = 0; i < n; ++i) {
        const auto text = random_sentence(rng, 1, 9);
        const int nq = links(rng);
        if (nq == 0) mirror(c.memory.add_fact(text, tqa::Provenance::User));
        for (int q = 0; q < nq; ++q) {
            const tqa::QuestionLink link{"q" + std::to_string(rng() % 1000000), random_sentence(rng, 2, 8)};
            mirror(c.memory.add_fact(text, tqa::Provenance::User, link));
        }
    }
}

inline oracle::Strategy to_oracle(tqa::IndexStrategy s)
{
    switch (s) {
    case tqa::IndexStrategy::FactTerms: return oracle::Strategy::F;
    case tqa::IndexStrategy::QuestionTerms: return oracle::Strategy::Q;
    case tqa::IndexStrategy::QuestionPlusFact: return oracle::Strategy::QF;
    case tqa::IndexStrategy::RelevantQuestionsPlusFact: return oracle::Strategy::RQF;
    }
    return oracle::Strategy::F;
}

}  // namespace fixtures
