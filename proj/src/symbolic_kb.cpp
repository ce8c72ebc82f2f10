#include <algorithm>
#include <fstream>
#include <sstream>

#include "tqa/errors.hpp"
#include "tqa/symbolic_backend.hpp"
#include "tqa/text.hpp"

namespace tqa {

using json = nlohmann::json;

namespace {

std::string capitalize(std::string s)
{
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') {
        s[0] = static_cast<char>(s[0] - 'a' + 'A');
    }
    return s;
}

std::string sentence_of(std::string_view subject, std::string_view verb, std::string_view object)
{
    return capitalize(normalize(std::string(subject) + " " + std::string(verb) + " " + std::string(object))) + ".";
}

VerbForm verb_from_json(const json& j)
{
    VerbForm v;
    v.key = to_lower(normalize(j.at("key").get<std::string>()));
    v.positive = j.at("positive").get<std::vector<std::string>>();
    v.negative = j.at("negative").get<std::vector<std::string>>();
    v.taxonomic = j.value("taxonomic", false);
    if (v.positive.empty() || v.negative.empty()) {
        throw Error(ErrorCode::FormatError, "verb '" + v.key + "' needs positive and negative forms");
    }
    return v;
}

}  // namespace

SymbolicKB::SymbolicKB() = default;

SymbolicKB::SymbolicKB(StatementGrammar grammar) : grammar_(std::move(grammar)) {}

SymbolicKB SymbolicKB::from_json(const json& doc)
{
    try {
        auto verbs = StatementGrammar::default_verbs();
        json custom = json::array();
        if (doc.contains("templates") && doc["templates"].contains("verbs")) {
            for (const auto& jv : doc["templates"]["verbs"]) {
                VerbForm v = verb_from_json(jv);
                custom.push_back(jv);
                auto same = std::find_if(verbs.begin(), verbs.end(), [&](const VerbForm& d) { return d.key == v.key; });
                if (same != verbs.end()) {
                    *same = std::move(v);
                } else {
                    verbs.push_back(std::move(v));
                }
            }
        }
        SymbolicKB kb{StatementGrammar(std::move(verbs))};
        kb.verbs_json_ = custom.dump();
        for (const auto& link : doc.value("isa_links", json::array())) {
            if (link.is_array()) {
                kb.add_link(link.at(0).get<std::string>(), link.at(1).get<std::string>());
            } else {
                kb.add_link(link.at("child").get<std::string>(), link.at("parent").get<std::string>(),
                            link.value("verb", std::string("is a kind of")));
            }
        }
        for (const auto& a : doc.value("assertions", json::array())) {
            if (a.is_string()) {
                kb.add_statement(a.get<std::string>());
                continue;
            }
            std::optional<double> confidence;
            if (a.contains("confidence")) confidence = a["confidence"].get<double>();
            if (a.contains("text")) {
                kb.add_statement(a["text"].get<std::string>(), confidence);
                continue;
            }
            std::string text = sentence_of(a.at("subject").get<std::string>(), a.at("verb").get<std::string>(),
                                           a.at("object").get<std::string>());
            const std::string polarity = a.value("polarity", std::string("pos"));
            if (polarity == "neg") {
                text = kb.grammar_.negate(text);
            } else if (polarity != "pos") {
                throw Error(ErrorCode::FormatError, "polarity must be 'pos' or 'neg'");
            }
            kb.add_statement(text, confidence);
        }
        return kb;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::FormatError, std::string("malformed knowledge base: ") + e.what());
    }
}

SymbolicKB SymbolicKB::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot open knowledge base '" + path.string() + "'");
    }
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::FormatError, std::string("knowledge base is not valid JSON: ") + e.what());
    }
    return from_json(doc);
}

json SymbolicKB::to_json() const
{
    json out;
    out["templates"]["verbs"] = json::parse(verbs_json_.empty() ? "[]" : verbs_json_);
    out["isa_links"] = json::array();
    json assertions = json::array();
    for (const auto& s : statements_) {
        if (s.confidence) {
            assertions.push_back({{"text", s.text}, {"confidence", *s.confidence}});
        } else {
            assertions.push_back(s.text);
        }
    }
    out["assertions"] = std::move(assertions);
    return out;
}

void SymbolicKB::add_link(std::string_view child, std::string_view parent, std::string_view verb)
{
    const std::string text = sentence_of(child, verb, parent);
    auto parsed = grammar_.parse(text);
    if (!parsed || !parsed->assertion.positive || !grammar_.is_taxonomic(parsed->assertion.verb)) {
        throw Error(ErrorCode::InvariantViolation, "'" + text + "' is not a taxonomic link");
    }
    add_statement(text);
}

void SymbolicKB::add_statement(std::string_view text, std::optional<double> confidence)
{
    const std::string normalized = normalize(text);
    auto parsed = grammar_.parse(normalized);
    if (!parsed) {
        throw Error(ErrorCode::UnparseableStatement, "knowledge base statement not recognized: '" + normalized + "'");
    }
    const Assertion& a = parsed->assertion;
    if (auto it = by_key_.find(a.key()); it != by_key_.end()) {
        if (statements_[it->second].assertion.positive != a.positive) {
            throw Error(ErrorCode::InvariantViolation, "knowledge base holds both polarities of '" + normalized + "'");
        }
        return;
    }
    const bool is_link = a.positive && grammar_.is_taxonomic(a.verb);
    if (is_link && (a.subject == a.object || reaches(a.object, a.subject))) {
        throw Error(ErrorCode::InvariantViolation, "taxonomy cycle through '" + normalized + "'");
    }
    if (confidence && !(*confidence >= 0.0 && *confidence <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "confidence must lie in [0,1]");
    }
    by_key_.emplace(a.key(), statements_.size());
    noun_phrases_.insert(a.subject);
    noun_phrases_.insert(a.object);
    verb_keys_.insert(a.verb);
    if (is_link) {
        links_.emplace_back(a.subject, a.object);
    }
    statements_.push_back({a, normalized, confidence});
}

std::optional<std::size_t> SymbolicKB::find(const Assertion& a) const
{
    auto it = by_key_.find(a.key());
    if (it == by_key_.end()) return std::nullopt;
    return it->second;
}

bool SymbolicKB::reaches(const std::string& from, const std::string& to) const
{
    std::vector<std::string> stack{from};
    std::set<std::string> seen{from};
    while (!stack.empty()) {
        std::string node = std::move(stack.back());
        stack.pop_back();
        if (node == to) return true;
        for (const auto& [child, parent] : links_) {
            if (child == node && seen.insert(parent).second) {
                stack.push_back(parent);
            }
        }
    }
    return false;
}

std::string SymbolicKB::fingerprint() const
{
    return hex64(fnv1a(to_json().dump()));
}

}  // namespace tqa
