#include <algorithm>

#include "tqa/symbolic_backend.hpp"
#include "tqa/text.hpp"

namespace tqa {

namespace {

constexpr std::string_view kNotTruePrefix = "It is not true that ";

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

/// Lowercased word with surrounding punctuation removed, for matching.
std::string match_form(std::string_view word)
{
    auto terms = tokenize(word);
    std::string out;
    for (const auto& t : terms) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

std::string join(const std::vector<std::string>& words, std::size_t begin, std::size_t end)
{
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        if (!out.empty()) out.push_back(' ');
        out += words[i];
    }
    return out;
}

std::string singularize(std::string w)
{
    auto ends_with = [&w](std::string_view s) {
        return w.size() >= s.size() && w.compare(w.size() - s.size(), s.size(), s) == 0;
    };
    if (w.size() > 4 && ends_with("ies")) {
        return w.substr(0, w.size() - 3) + "y";
    }
    if (w.size() > 3 && ends_with("s") && !ends_with("ss") && !ends_with("us") && !ends_with("is")) {
        w.pop_back();
    }
    return w;
}

bool is_article(std::string_view w)
{
    return w == "a" || w == "an" || w == "the";
}

}  // namespace

std::string np_key(std::string_view phrase)
{
    auto terms = tokenize(phrase);
    if (terms.size() > 1 && is_article(terms.front())) {
        terms.erase(terms.begin());
    }
    if (terms.empty()) {
        return {};
    }
    terms.back() = singularize(terms.back());
    std::string out;
    for (const auto& t : terms) {
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

std::vector<VerbForm> StatementGrammar::default_verbs()
{
    return {
        {"is a kind of",
         {"is a kind of", "are a kind of", "is a type of", "are a type of"},
         {"is not a kind of", "are not a kind of", "is not a type of", "are not a type of"},
         true},
        {"is made of", {"is made of", "are made of"}, {"is not made of", "are not made of"}, true},
        {"is a", {"is a", "is an"}, {"is not a", "is not an"}, true},
        {"is", {"is", "are"}, {"is not", "are not"}, false},
        {"has", {"has", "have"}, {"does not have", "do not have"}, false},
        {"needs", {"needs", "need"}, {"does not need", "do not need"}, false},
        {"uses", {"uses", "use"}, {"does not use", "do not use"}, false},
        {"requires", {"requires", "require"}, {"does not require", "do not require"}, false},
        {"produces", {"produces", "produce"}, {"does not produce", "do not produce"}, false},
    };
}

StatementGrammar::StatementGrammar() : StatementGrammar(default_verbs()) {}

StatementGrammar::StatementGrammar(std::vector<VerbForm> verbs) : verbs_(std::move(verbs))
{
    for (std::size_t v = 0; v < verbs_.size(); ++v) {
        for (std::size_t i = 0; i < verbs_[v].positive.size(); ++i) {
            phrases_.push_back({split_words(to_lower(verbs_[v].positive[i])), v, true, i});
        }
        for (std::size_t i = 0; i < verbs_[v].negative.size(); ++i) {
            phrases_.push_back({split_words(to_lower(verbs_[v].negative[i])), v, false, i});
        }
    }
}

bool StatementGrammar::is_taxonomic(std::string_view verb_key) const
{
    return std::any_of(verbs_.begin(), verbs_.end(),
                       [&](const VerbForm& v) { return v.taxonomic && v.key == verb_key; });
}

const VerbForm* StatementGrammar::find_verb(std::string_view surface) const
{
    const std::string lowered = to_lower(normalize(surface));
    for (const auto& v : verbs_) {
        if (v.key == lowered) return &v;
        for (const auto& p : v.positive) if (to_lower(p) == lowered) return &v;
        for (const auto& n : v.negative) if (to_lower(n) == lowered) return &v;
    }
    return nullptr;
}

std::optional<ParsedStatement> StatementGrammar::parse(std::string_view sentence) const
{
    std::string text = normalize(sentence);
    std::string terminal;
    while (!text.empty() && (text.back() == '.' || text.back() == '?' || text.back() == '!')) {
        terminal.insert(terminal.begin(), text.back());
        text.pop_back();
    }
    text = normalize(text);
    const auto words = split_words(text);
    const std::size_t n = words.size();
    if (n < 3) {
        return std::nullopt;
    }
    std::vector<std::string> lowered;
    lowered.reserve(n);
    for (const auto& w : words) lowered.push_back(match_form(w));

    for (std::size_t i = 1; i + 1 < n; ++i) {
        std::size_t best_len = 0;
        ParsedStatement best;
        auto consider = [&](std::size_t len, std::string key, bool positive, std::string counterpart) {
            if (len <= best_len || i + len > n - 1) return;
            best_len = len;
            best.assertion.verb = std::move(key);
            best.assertion.positive = positive;
            best.verb_counterpart = std::move(counterpart);
        };
        for (const auto& ph : phrases_) {
            const std::size_t len = ph.words.size();
            if (len == 0 || i + len > n - 1) continue;
            if (!std::equal(ph.words.begin(), ph.words.end(), lowered.begin() + static_cast<std::ptrdiff_t>(i))) {
                continue;
            }
            const VerbForm& v = verbs_[ph.verb];
            const auto& opposite = ph.positive ? v.negative : v.positive;
            std::string counterpart = opposite.empty() ? std::string()
                                                       : opposite[std::min(ph.form, opposite.size() - 1)];
            consider(len, v.key, ph.positive, std::move(counterpart));
        }
        if (lowered[i] == "can" && i + 2 <= n - 1 && lowered[i + 1] != "not") {
            consider(2, "can " + lowered[i + 1], true, "cannot " + words[i + 1]);
        }
        if (lowered[i] == "cannot" && i + 2 <= n - 1) {
            consider(2, "can " + lowered[i + 1], false, "can " + words[i + 1]);
        }
        if (lowered[i] == "can" && i + 1 < n && lowered[i + 1] == "not" && i + 3 <= n - 1) {
            consider(3, "can " + lowered[i + 2], false, "can " + words[i + 2]);
        }
        if (best_len == 0) {
            continue;
        }
        best.subject_words.assign(words.begin(), words.begin() + static_cast<std::ptrdiff_t>(i));
        best.verb_surface = join(words, i, i + best_len);
        best.object_words.assign(words.begin() + static_cast<std::ptrdiff_t>(i + best_len), words.end());
        best.terminal = terminal;
        best.assertion.subject = np_key(join(best.subject_words, 0, best.subject_words.size()));
        best.assertion.object = np_key(join(best.object_words, 0, best.object_words.size()));
        if (best.assertion.subject.empty() || best.assertion.object.empty() || best.verb_counterpart.empty()) {
            return std::nullopt;
        }
        return best;
    }
    return std::nullopt;
}

std::string StatementGrammar::negate(std::string_view sentence) const
{
    std::string text = normalize(sentence);
    if (text.size() > kNotTruePrefix.size() &&
        to_lower(text.substr(0, kNotTruePrefix.size())) == to_lower(kNotTruePrefix)) {
        return text.substr(kNotTruePrefix.size());
    }
    auto parsed = parse(text);
    if (!parsed) {
        return std::string(kNotTruePrefix) + text;
    }
    return join(parsed->subject_words, 0, parsed->subject_words.size()) + " " + parsed->verb_counterpart + " " +
           join(parsed->object_words, 0, parsed->object_words.size()) + parsed->terminal;
}

}  // namespace tqa
