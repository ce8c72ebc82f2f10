#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace tqa {

/// Okapi BM25 with idf = ln(1 + (N - n_t + 0.5) / (n_t + 0.5)), which stays
/// positive for every N, n_t.
struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;

    void validate() const;
};

/// Inverted index over term-multiset documents. Each document carries an
/// opaque owner tag so several documents can map back to one fact.
class Bm25Index {
  public:
    std::size_t add(std::size_t owner, const std::vector<std::string>& terms);
    void remove(std::size_t doc);
    void clear();

    std::size_t live_documents() const { return live_; }
    std::size_t owner(std::size_t doc) const { return docs_[doc].owner; }

    /// Scores every document that shares at least one term with the query.
    /// Contributions are accumulated in query-term order; duplicate query
    /// terms contribute once per occurrence.
    std::vector<std::pair<std::size_t, double>> score(const std::vector<std::string>& query,
                                                      const Bm25Params& params) const;

  private:
    struct Doc {
        std::size_t owner = 0;
        std::unordered_map<std::string, std::uint32_t> tf;
        std::uint64_t length = 0;
        bool live = false;
    };

    std::vector<Doc> docs_;
    std::unordered_map<std::string, std::vector<std::size_t>> postings_;
    std::uint64_t total_length_ = 0;
    std::size_t live_ = 0;
};

}  // namespace tqa
