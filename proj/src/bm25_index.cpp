#include "tqa/bm25_index.hpp"

#include <algorithm>
#include <cmath>

#include "tqa/errors.hpp"

namespace tqa {

void Bm25Params::validate() const
{
    if (!(k1 > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "bm25 k1 must be positive");
    }
    if (!(b >= 0.0 && b <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "bm25 b must lie in [0,1]");
    }
}

std::size_t Bm25Index::add(std::size_t owner, const std::vector<std::string>& terms)
{
    Doc doc;
    doc.owner = owner;
    doc.length = terms.size();
    doc.live = true;
    for (const auto& t : terms) {
        ++doc.tf[t];
    }
    const std::size_t id = docs_.size();
    for (const auto& [term, freq] : doc.tf) {
        postings_[term].push_back(id);
    }
    total_length_ += doc.length;
    ++live_;
    docs_.push_back(std::move(doc));
    return id;
}

void Bm25Index::remove(std::size_t id)
{
    Doc& doc = docs_.at(id);
    if (!doc.live) {
        return;
    }
    for (const auto& [term, freq] : doc.tf) {
        auto it = postings_.find(term);
        auto& list = it->second;
        list.erase(std::remove(list.begin(), list.end(), id), list.end());
        if (list.empty()) {
            postings_.erase(it);
        }
    }
    total_length_ -= doc.length;
    --live_;
    doc.live = false;
    doc.tf.clear();
}

void Bm25Index::clear()
{
    docs_.clear();
    postings_.clear();
    total_length_ = 0;
    live_ = 0;
}

std::vector<std::pair<std::size_t, double>> Bm25Index::score(const std::vector<std::string>& query,
                                                             const Bm25Params& params) const
{
    std::vector<std::pair<std::size_t, double>> out;
    if (live_ == 0 || query.empty()) {
        return out;
    }
    const double n = static_cast<double>(live_);
    const double avgdl = static_cast<double>(total_length_) / n;
    const double k1 = params.k1;
    const double b = params.b;

    std::unordered_map<std::size_t, double> acc;
    std::vector<std::size_t> order;
    for (const auto& term : query) {
        auto it = postings_.find(term);
        if (it == postings_.end()) {
            continue;
        }
        const double nt = static_cast<double>(it->second.size());
        const double idf = std::log(1.0 + (n - nt + 0.5) / (nt + 0.5));
        for (std::size_t id : it->second) {
            const Doc& doc = docs_[id];
            const double tf = doc.tf.at(term);
            const double dl = static_cast<double>(doc.length);
            const double contrib = idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * dl / avgdl));
            auto [slot, inserted] = acc.try_emplace(id, 0.0);
            if (inserted) {
                order.push_back(id);
            }
            slot->second += contrib;
        }
    }
    out.reserve(order.size());
    for (std::size_t id : order) {
        out.emplace_back(id, acc[id]);
    }
    return out;
}

}  // namespace tqa
