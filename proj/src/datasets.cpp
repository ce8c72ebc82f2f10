#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "tqa/errors.hpp"
#include "tqa/sim_teacher.hpp"
#include "tqa/text.hpp"

namespace tqa {

using json = nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Calls `row` on every non-blank line, translating failures into line-tagged errors.
template <class F>
std::vector<QAExample> parse_lines(std::string_view jsonl, F&& row)
{
    std::vector<QAExample> out;
    std::set<std::string> ids;
    std::istringstream in{std::string(jsonl)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (normalize(line).empty()) continue;
        try {
            QAExample ex = row(json::parse(line));
            ex.validate();
            if (!ids.insert(ex.id).second) {
                throw Error(ErrorCode::FormatError, "duplicate example id '" + ex.id + "'");
            }
            out.push_back(std::move(ex));
        } catch (const json::exception& e) {
            throw Error(ErrorCode::FormatError, std::string("bad dataset row: ") + e.what(), line_no);
        } catch (const Error& e) {
            if (e.line()) throw;
            std::string msg = e.what();
            throw Error(e.code(), msg, line_no);
        }
    }
    return out;
}

std::vector<LabeledChoice> stem_choices(const json& question)
{
    std::vector<LabeledChoice> out;
    for (const auto& c : question.at("choices")) {
        out.push_back({c.at("label").get<std::string>(), c.at("text").get<std::string>()});
    }
    return out;
}

}  // namespace

void QAExample::validate() const
{
    if (id.empty()) throw Error(ErrorCode::FormatError, "example id is empty");
    if (normalize(question).empty()) throw Error(ErrorCode::FormatError, "example " + id + " has no question");
    if (choices.empty()) throw Error(ErrorCode::FormatError, "example " + id + " has no choices");
    std::set<std::string> labels;
    for (const auto& c : choices) {
        if (c.label.empty() || normalize(c.text).empty()) {
            throw Error(ErrorCode::FormatError, "example " + id + " has an empty choice");
        }
        if (!labels.insert(c.label).second) {
            throw Error(ErrorCode::FormatError, "example " + id + " repeats label " + c.label);
        }
    }
    if (!labels.count(answer_key)) {
        throw Error(ErrorCode::InvariantViolation, "example " + id + ": answer_key '" + answer_key + "' is not a label");
    }
    if (normalize(core_fact).empty()) {
        throw Error(ErrorCode::InvariantViolation, "example " + id + " has no core fact");
    }
    const std::string key = text_key(core_fact);
    bool found = false;
    for (const auto& p : gold_premises) found = found || text_key(p) == key;
    if (!found) {
        throw Error(ErrorCode::InvariantViolation, "example " + id + ": core_fact is not among gold_premises");
    }
}

std::vector<std::string> QAExample::choice_texts() const
{
    std::vector<std::string> out;
    for (const auto& c : choices) out.push_back(c.text);
    return out;
}

json to_json(const QAExample& ex)
{
    json choices = json::array();
    for (const auto& c : ex.choices) choices.push_back({{"label", c.label}, {"text", c.text}});
    return {{"id", ex.id},           {"question", ex.question},   {"choices", std::move(choices)},
            {"answer_key", ex.answer_key}, {"core_fact", ex.core_fact}, {"gold_premises", ex.gold_premises}};
}

std::vector<QAExample> parse_dataset(std::string_view jsonl)
{
    return parse_lines(jsonl, [](const json& j) {
        QAExample ex;
        ex.id = j.at("id").get<std::string>();
        ex.question = j.at("question").get<std::string>();
        for (const auto& c : j.at("choices")) {
            ex.choices.push_back({c.at("label").get<std::string>(), c.at("text").get<std::string>()});
        }
        ex.answer_key = j.at("answer_key").get<std::string>();
        ex.core_fact = j.at("core_fact").get<std::string>();
        ex.gold_premises = j.at("gold_premises").get<std::vector<std::string>>();
        return ex;
    });
}

std::vector<QAExample> load_dataset(const std::filesystem::path& path)
{
    return parse_dataset(read_file(path));
}

std::string dataset_to_jsonl(const std::vector<QAExample>& examples)
{
    std::string out;
    for (const auto& ex : examples) {
        // Field order follows the documented layout.
        nlohmann::ordered_json j;
        j["id"] = ex.id;
        j["question"] = ex.question;
        j["choices"] = nlohmann::ordered_json::array();
        for (const auto& c : ex.choices) {
            nlohmann::ordered_json cj;
            cj["label"] = c.label;
            cj["text"] = c.text;
            j["choices"].push_back(cj);
        }
        j["answer_key"] = ex.answer_key;
        j["core_fact"] = ex.core_fact;
        j["gold_premises"] = ex.gold_premises;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<QAExample> parse_obqa(std::string_view jsonl)
{
    return parse_lines(jsonl, [](const json& j) {
        QAExample ex;
        ex.id = j.at("id").get<std::string>();
        ex.question = j.at("question").at("stem").get<std::string>();
        ex.choices = stem_choices(j.at("question"));
        ex.answer_key = j.at("answerKey").get<std::string>();
        if (!j.contains("fact1")) {
            throw Error(ErrorCode::InvariantViolation, "OBQA row " + ex.id + " has no fact1 (core fact)");
        }
        ex.core_fact = j["fact1"].get<std::string>();
        ex.gold_premises = {ex.core_fact};
        return ex;
    });
}

std::vector<QAExample> parse_quartz(std::string_view jsonl)
{
    return parse_lines(jsonl, [](const json& j) {
        QAExample ex;
        ex.id = j.at("id").get<std::string>();
        ex.question = j.at("question").at("stem").get<std::string>();
        ex.choices = stem_choices(j.at("question"));
        ex.answer_key = j.at("answerKey").get<std::string>();
        ex.core_fact = j.at("para").get<std::string>();
        ex.gold_premises = {ex.core_fact};
        return ex;
    });
}

std::vector<QAExample> load_obqa(const std::filesystem::path& path)
{
    return parse_obqa(read_file(path));
}

std::vector<QAExample> load_quartz(const std::filesystem::path& path)
{
    return parse_quartz(read_file(path));
}

std::optional<std::filesystem::path> real_data_dir()
{
    const char* dir = std::getenv("TQA_DATA_DIR");
    if (!dir || !*dir) return std::nullopt;
    std::filesystem::path p(dir);
    if (!std::filesystem::is_directory(p)) return std::nullopt;
    return p;
}

}  // namespace tqa
