#include <algorithm>
#include <map>
#include <unordered_map>

#include "tqa/errors.hpp"
#include "tqa/symbolic_backend.hpp"
#include "tqa/text.hpp"

namespace tqa {

namespace {

struct PoolFact {
    Assertion assertion;
    std::string text;
    bool from_context = false;
    std::size_t rank = 0;  ///< context position, or KB statement index
    double belief = 0.0;
};

using Path = std::vector<std::size_t>;

/// Caps path enumeration on large taxonomies; desk-scale fixtures never hit it.
constexpr std::size_t kMaxPaths = 256;

class DerivationSearch {
  public:
    DerivationSearch(const std::vector<PoolFact>& pool, const StatementGrammar& grammar) : pool_(pool)
    {
        for (std::size_t i = 0; i < pool.size(); ++i) {
            const auto& a = pool[i].assertion;
            if (a.positive && grammar.is_taxonomic(a.verb)) {
                edges_[a.subject].push_back(i);
            }
        }
    }

    /// Best derivation of `target` as ordered pool indices, or nullopt.
    std::optional<Path> best(const Assertion& target, std::size_t max_premises, std::optional<std::size_t> forced) const
    {
        if (max_premises == 0) return std::nullopt;
        const std::size_t depth = max_premises - 1;
        const auto up_subject = ancestors(target.subject, depth);
        const auto up_object = ancestors(target.object, depth);

        std::optional<Path> best_path;
        double best_score = -1.0;
        for (std::size_t b = 0; b < pool_.size(); ++b) {
            const auto& base = pool_[b].assertion;
            if (base.verb != target.verb || base.positive != target.positive) continue;
            auto s_it = up_subject.find(base.subject);
            auto o_it = up_object.find(base.object);
            if (s_it == up_subject.end() || o_it == up_object.end()) continue;
            for (const auto& s_path : s_it->second) {
                for (const auto& o_path : o_it->second) {
                    Path roles{b};
                    for (std::size_t i : s_path) if (std::find(roles.begin(), roles.end(), i) == roles.end()) roles.push_back(i);
                    for (std::size_t i : o_path) if (std::find(roles.begin(), roles.end(), i) == roles.end()) roles.push_back(i);
                    if (roles.size() > max_premises) continue;
                    if (forced && std::find(roles.begin(), roles.end(), *forced) == roles.end()) continue;
                    Path ordered = order(roles, forced);
                    double score = 1.0;
                    for (std::size_t i : ordered) score *= pool_[i].belief;
                    if (!best_path || better(score, ordered, best_score, *best_path)) {
                        best_score = score;
                        best_path = std::move(ordered);
                    }
                }
            }
        }
        return best_path;
    }

  private:
    /// All simple upward paths (as link indices) from `start`, keyed by the node reached.
    std::map<std::string, std::vector<Path>> ancestors(const std::string& start, std::size_t depth) const
    {
        std::map<std::string, std::vector<Path>> out;
        out[start].push_back({});
        std::size_t produced = 1;
        std::vector<std::string> visiting{start};
        Path path;
        walk(start, depth, visiting, path, out, produced);
        return out;
    }

    void walk(const std::string& node, std::size_t depth, std::vector<std::string>& visiting, Path& path,
              std::map<std::string, std::vector<Path>>& out, std::size_t& produced) const
    {
        if (depth == 0) return;
        auto it = edges_.find(node);
        if (it == edges_.end()) return;
        for (std::size_t link : it->second) {
            if (produced >= kMaxPaths) return;
            const std::string& parent = pool_[link].assertion.object;
            if (std::find(visiting.begin(), visiting.end(), parent) != visiting.end()) continue;
            path.push_back(link);
            out[parent].push_back(path);
            ++produced;
            visiting.push_back(parent);
            walk(parent, depth - 1, visiting, path, out, produced);
            visiting.pop_back();
            path.pop_back();
        }
    }

    /// Forced premise first, then context premises in context order, then KB
    /// premises in role order (base, subject links, object links).
    Path order(const Path& roles, std::optional<std::size_t> forced) const
    {
        Path out;
        if (forced) out.push_back(*forced);
        Path ctx;
        for (std::size_t i : roles) {
            if (pool_[i].from_context && (!forced || i != *forced)) ctx.push_back(i);
        }
        std::sort(ctx.begin(), ctx.end(), [this](std::size_t a, std::size_t b) { return pool_[a].rank < pool_[b].rank; });
        out.insert(out.end(), ctx.begin(), ctx.end());
        for (std::size_t i : roles) {
            if (!pool_[i].from_context && (!forced || i != *forced)) out.push_back(i);
        }
        return out;
    }

    bool better(double score, const Path& path, double best_score, const Path& best_path) const
    {
        if (score != best_score) return score > best_score;
        if (path.size() != best_path.size()) return path.size() < best_path.size();
        auto tag = [this](std::size_t i) { return std::make_pair(pool_[i].from_context ? 0 : 1, pool_[i].rank); };
        return std::lexicographical_compare(path.begin(), path.end(), best_path.begin(), best_path.end(),
                                            [&](std::size_t a, std::size_t b) { return tag(a) < tag(b); });
    }

    const std::vector<PoolFact>& pool_;
    std::unordered_map<std::string, std::vector<std::size_t>> edges_;
};

std::vector<std::string> split_words(std::string_view text)
{
    std::vector<std::string> words;
    std::string current;
    for (char c : text) {
        if (c == ' ') {
            if (!current.empty()) words.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) words.push_back(std::move(current));
    return words;
}

std::string join(const std::vector<std::string>& words, std::size_t begin, std::size_t end)
{
    std::string out;
    for (std::size_t i = begin; i < end && i < words.size(); ++i) {
        if (!out.empty()) out.push_back(' ');
        out += words[i];
    }
    return out;
}

std::string capitalize(std::string s)
{
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

std::string as_sentence(std::string s)
{
    s = capitalize(normalize(s));
    if (!s.empty() && s.back() != '.' && s.back() != '!' && s.back() != '?') s.push_back('.');
    return s;
}

std::string indefinite(std::string_view noun)
{
    const std::string lowered = to_lower(noun);
    if (lowered.rfind("a ", 0) == 0 || lowered.rfind("an ", 0) == 0 || lowered.rfind("the ", 0) == 0) {
        return std::string(noun);
    }
    const bool vowel = !lowered.empty() && std::string_view("aeiou").find(lowered[0]) != std::string_view::npos;
    return (vowel ? "an " : "a ") + std::string(noun);
}

/// Question text up to the first inline option marker such as "(A)".
std::string strip_inline_choices(std::string_view question)
{
    for (std::size_t i = 0; i + 2 < question.size(); ++i) {
        if (question[i] != '(') continue;
        std::size_t j = i + 1;
        while (j < question.size() && question[j] == ' ') ++j;
        if (j < question.size() && std::isalnum(static_cast<unsigned char>(question[j]))) {
            std::size_t k = j + 1;
            while (k < question.size() && question[k] == ' ') ++k;
            if (k < question.size() && question[k] == ')') {
                return std::string(question.substr(0, i));
            }
        }
    }
    return std::string(question);
}

std::string question_stem(std::string_view question)
{
    std::string stem = normalize(strip_inline_choices(question));
    while (!stem.empty() && (stem.back() == '?' || stem.back() == ' ')) stem.pop_back();
    return stem;
}

enum class Polar { Yes, No, Other };

Polar polar_of(std::string_view choice)
{
    const std::string c = text_key(choice);
    if (c == "yes" || c == "true") return Polar::Yes;
    if (c == "no" || c == "false") return Polar::No;
    return Polar::Other;
}

std::string article_stripped(std::string_view phrase)
{
    auto words = split_words(normalize(phrase));
    if (words.size() > 1) {
        const std::string first = to_lower(words.front());
        if (first == "a" || first == "an" || first == "the") words.erase(words.begin());
    }
    return join(words, 0, words.size());
}

}  // namespace

double compose_score(double entailment_score, std::span<const double> premise_scores)
{
    double score = entailment_score;
    for (double p : premise_scores) score *= p;
    return score;
}

void ProofRequest::validate() const
{
    if (normalize(hypothesis.text).empty()) {
        throw Error(ErrorCode::InvalidArgument, "proof request has an empty hypothesis");
    }
    if (max_premises < 1) {
        throw Error(ErrorCode::InvalidArgument, "max_premises must be >= 1");
    }
    if (forced_first_premise &&
        std::find(context.begin(), context.end(), *forced_first_premise) == context.end()) {
        throw Error(ErrorCode::InvalidArgument, "forced first premise must be a member of the context");
    }
}

SymbolicBackend::SymbolicBackend(SymbolicKB kb, BeliefConstants beliefs) : kb_(std::move(kb)), beliefs_(beliefs) {}

namespace {

std::vector<PoolFact> build_pool(const SymbolicKB& kb, const BeliefConstants& beliefs,
                                 std::span<const std::string> context, bool include_kb)
{
    std::vector<PoolFact> pool;
    std::unordered_map<std::string, std::size_t> seen;
    for (std::size_t j = 0; j < context.size(); ++j) {
        auto parsed = kb.grammar().parse(context[j]);
        if (!parsed) continue;
        const std::string key = parsed->assertion.key();
        if (seen.count(key)) continue;  // first mention wins
        seen.emplace(key, pool.size());
        pool.push_back({parsed->assertion, context[j], true, j, beliefs.context_true});
    }
    if (!include_kb) return pool;
    const auto& statements = kb.statements();
    for (std::size_t i = 0; i < statements.size(); ++i) {
        // Context overrides the KB statement of either polarity.
        if (seen.count(statements[i].assertion.key())) continue;
        pool.push_back({statements[i].assertion, statements[i].text, false, i,
                        statements[i].confidence.value_or(beliefs.kb_true)});
    }
    return pool;
}

}  // namespace

std::optional<Proof> SymbolicBackend::generate_proof(const ProofRequest& request) const
{
    request.validate();
    auto target = kb_.grammar().parse(request.hypothesis.text);
    if (!target) {
        return std::nullopt;
    }
    auto pool = build_pool(kb_, beliefs_, request.context, true);

    std::optional<std::size_t> forced;
    if (request.forced_first_premise) {
        auto parsed = kb_.grammar().parse(*request.forced_first_premise);
        if (!parsed) return std::nullopt;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (pool[i].from_context && pool[i].assertion.key() == parsed->assertion.key()) {
                if (pool[i].assertion.positive != parsed->assertion.positive) return std::nullopt;
                pool[i].text = *request.forced_first_premise;
                forced = i;
                break;
            }
        }
        if (!forced) return std::nullopt;
    }

    DerivationSearch search(pool, kb_.grammar());
    auto path = search.best(target->assertion, request.max_premises, forced);
    if (!path) {
        return std::nullopt;
    }
    Proof proof;
    proof.hypothesis_text = request.hypothesis.text;
    proof.forced = forced.has_value();
    for (std::size_t i : *path) {
        proof.premises.push_back(pool[i].text);
    }
    for (const auto& p : proof.premises) {
        double score = beliefs_.unknown;
        try {
            score = belief_score(p, request.context);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::UnparseableStatement) throw;
        }
        proof.premise_scores.push_back(score);
    }
    proof.entailment_score = entailment_score(proof.premises, proof.hypothesis_text);
    proof.overall_score = compose_score(proof.entailment_score, proof.premise_scores);
    return proof;
}

double SymbolicBackend::belief_score(std::string_view statement, std::span<const std::string> context) const
{
    const std::string key = text_key(statement);
    for (const auto& c : context) {
        if (text_key(c) == key) return beliefs_.context_true;
    }
    auto parsed = kb_.grammar().parse(statement);
    if (!parsed) {
        throw Error(ErrorCode::UnparseableStatement, "statement not recognized: '" + std::string(statement) + "'");
    }
    const Assertion& a = parsed->assertion;
    // The first context mention of a statement decides, as in proof search.
    for (const auto& c : context) {
        auto pc = kb_.grammar().parse(c);
        if (pc && pc->assertion.key() == a.key()) {
            return pc->assertion.positive == a.positive ? beliefs_.context_true : beliefs_.context_false;
        }
    }
    if (auto idx = kb_.find(a)) {
        const auto& s = kb_.statements()[*idx];
        return s.assertion.positive == a.positive ? s.confidence.value_or(beliefs_.kb_true) : beliefs_.kb_false;
    }
    return beliefs_.unknown;
}

double SymbolicBackend::entailment_score(std::span<const std::string> premises, std::string_view hypothesis) const
{
    if (premises.empty()) {
        throw Error(ErrorCode::EmptyPremises, "entailment check needs at least one premise");
    }
    const std::string key = text_key(hypothesis);
    for (const auto& p : premises) {
        if (text_key(p) == key) return 1.0;
    }
    auto target = kb_.grammar().parse(hypothesis);
    if (!target) return 0.0;
    auto pool = build_pool(kb_, beliefs_, premises, false);
    DerivationSearch search(pool, kb_.grammar());
    return search.best(target->assertion, premises.size(), std::nullopt) ? 1.0 : 0.0;
}

std::string SymbolicBackend::negate(std::string_view statement) const
{
    return kb_.grammar().negate(statement);
}

double SymbolicBackend::direct_answer_score(const Hypothesis& hypothesis) const
{
    try {
        return belief_score(hypothesis.text, {});
    } catch (const Error& e) {
        if (e.code() != ErrorCode::UnparseableStatement) throw;
        return beliefs_.unknown;
    }
}

std::vector<std::string> SymbolicBackend::generate_candidates(std::string_view question, std::size_t n) const
{
    const auto words = split_words(question_stem(question));
    std::size_t start = 0;
    if (words.size() >= 2) {
        const std::string first = to_lower(words[0]);
        if (first == "name" || first == "list" || first == "give") {
            start = 1;
        } else if (words.size() >= 5 && first == "what" && to_lower(words[1]) == "is" &&
                   to_lower(words[2]) == "a" && to_lower(words[3]) == "kind" && to_lower(words[4]) == "of") {
            start = 5;
        }
    }
    if (start == 0 || start >= words.size()) {
        throw Error(ErrorCode::NoCandidates, "no candidate template matches '" + std::string(question) + "'");
    }
    const std::string category = np_key(join(words, start, words.size()));
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (const auto& s : kb_.statements()) {
        if (out.size() >= n) break;
        const auto& a = s.assertion;
        if (!a.positive || !kb_.grammar().is_taxonomic(a.verb) || a.object != category) continue;
        if (!seen.insert(a.subject).second) continue;
        auto parsed = kb_.grammar().parse(s.text);
        out.push_back(article_stripped(join(parsed->subject_words, 0, parsed->subject_words.size())));
    }
    if (out.empty()) {
        throw Error(ErrorCode::NoCandidates, "the knowledge base has no instances of '" + category + "'");
    }
    return out;
}

std::string SymbolicBackend::declarativize(std::string_view question, std::string_view choice_text) const
{
    const std::string stem = question_stem(question);
    const std::string choice = normalize(choice_text);
    const auto words = split_words(stem);
    const Polar polar = polar_of(choice);
    auto fallback = [&] { return stem + " \xE2\x80\x94 " + choice; };
    if (words.empty()) return fallback();

    std::vector<std::string> lowered;
    for (const auto& w : words) lowered.push_back(to_lower(w));

    // Length of the subject noun phrase at the front of `rest`, leaving at least `keep` words.
    auto subject_length = [&](std::size_t from, std::size_t keep, auto&& continues_at) -> std::size_t {
        const std::size_t avail = words.size() - from;
        if (avail <= keep) return avail;
        for (std::size_t len = avail - keep; len >= 1; --len) {
            if (kb_.knows_np(np_key(join(words, from, from + len)))) return len;
        }
        for (std::size_t len = 1; len + keep <= avail; ++len) {
            if (continues_at(from + len)) return len;
        }
        const bool article = lowered[from] == "a" || lowered[from] == "an" || lowered[from] == "the";
        return std::min<std::size_t>(article ? 2 : 1, avail - keep);
    };

    const std::string& first = lowered[0];
    if (first == "can" && words.size() >= 3) {
        const std::size_t len = subject_length(1, 1, [&](std::size_t at) {
            return kb_.knows_verb("can " + lowered[at]);
        });
        const std::size_t verb_at = 1 + len;
        if (verb_at >= words.size()) return fallback();
        const std::string subject = join(words, 1, verb_at);
        const std::string rest = join(words, verb_at, words.size());
        switch (polar) {
        case Polar::Yes: return as_sentence(subject + " can " + rest);
        case Polar::No: return as_sentence(subject + " cannot " + rest);
        case Polar::Other: return as_sentence(subject + " can " + rest + " " + choice);
        }
    }
    if ((first == "is" || first == "are") && words.size() >= 2) {
        // A multi-word verb such as "is made of" splits subject from object.
        const VerbForm* verb = nullptr;
        std::size_t verb_at = 0, verb_len = 0;
        for (std::size_t at = 2; at < words.size() && !verb; ++at) {
            for (std::size_t len = words.size() - at; len >= 1; --len) {
                const VerbForm* v = kb_.grammar().find_verb(first + " " + join(lowered, at, at + len));
                if (v && len >= 1 && v->key != "is") {
                    verb = v;
                    verb_at = at;
                    verb_len = len;
                    break;
                }
            }
        }
        if (verb) {
            const std::string subject = join(words, 1, verb_at);
            const std::string phrase = first + " " + join(lowered, verb_at, verb_at + verb_len);
            const std::string object = join(words, verb_at + verb_len, words.size());
            std::string surface = phrase;
            if (polar == Polar::No) surface = kb_.grammar().negate("x " + phrase + " y").substr(2);
            if (polar == Polar::No) surface = surface.substr(0, surface.size() - 2);
            const std::string tail = polar == Polar::Other ? object + " " + choice : object;
            return as_sentence(subject + " " + surface + " " + tail);
        }
        const std::size_t len = subject_length(1, 0, [](std::size_t) { return false; });
        const std::string subject = join(words, 1, 1 + len);
        const std::string predicate = join(words, 1 + len, words.size());
        switch (polar) {
        case Polar::Yes: return as_sentence(subject + " " + first + " " + predicate);
        case Polar::No: return as_sentence(subject + " " + first + " not " + predicate);
        case Polar::Other: return as_sentence(subject + " " + first + " " + predicate + " " + choice);
        }
    }
    if ((first == "name" || first == "list" || first == "give") && words.size() >= 2) {
        std::size_t from = 1;
        if (lowered[1] == "a" || lowered[1] == "an" || lowered[1] == "some" || lowered[1] == "one") from = 2;
        if (from < words.size()) {
            return as_sentence(indefinite(choice) + " is " + indefinite(join(words, from, words.size())));
        }
    }
    for (std::size_t i = 0; i < words.size(); ++i) {
        const std::string& w = lowered[i];
        if (w != "what" && w != "which" && w != "who") continue;
        std::size_t span = 1;
        if (w == "which" && i + 1 < words.size()) {
            if (i + 3 < words.size() && lowered[i + 1] == "of" &&
                (lowered[i + 2] == "the" && lowered[i + 3] == "following")) {
                span = 4;
            } else if (i + 2 < words.size() && lowered[i + 1] == "of" && lowered[i + 2] == "these") {
                span = 3;
            } else {
                span = 2;
            }
        }
        std::vector<std::string> out(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(i));
        out.push_back(choice);
        out.insert(out.end(), words.begin() + static_cast<std::ptrdiff_t>(i + span), words.end());
        return as_sentence(join(out, 0, out.size()));
    }
    return fallback();
}

}  // namespace tqa
