#include <array>

#include "tqa/errors.hpp"
#include "tqa/sim_teacher.hpp"

namespace tqa {

using json = nlohmann::json;

namespace {

/// One core fact: "<subject> can/cannot <verb> <object>", where the material
/// sits on the subject or the object side and entities are made of it.
struct CoreItem {
    const char* subject;
    const char* verb;
    const char* object;
    bool positive;
    bool material_is_subject;
};

// Each material appears in exactly one fact so the facts do not interfere.
constexpr std::array<CoreItem, 20> kCore = {{
    {"A magnet", "attract", "copper", false, false},
    {"Silver", "conduct", "electricity", true, true},
    {"Water", "dissolve", "salt", true, false},
    {"Rubber", "conduct", "electricity", false, true},
    {"Sunlight", "melt", "ice", true, false},
    {"Glass", "transmit", "light", true, true},
    {"A magnet", "attract", "iron", true, false},
    {"Wood", "float", "on water", true, true},
    {"Steel", "float", "on water", false, true},
    {"Fire", "burn", "paper", true, false},
    {"Wool", "trap", "heat", true, true},
    {"Acid", "corrode", "zinc", true, false},
    {"Vinegar", "dissolve", "chalk", true, false},
    {"Aluminum", "reflect", "heat", true, true},
    {"Sponge", "absorb", "water", true, true},
    {"Termites", "eat", "timber", true, false},
    {"Lead", "block", "radiation", true, true},
    {"Clay", "store", "heat", true, true},
    {"Heat", "caramelize", "sugar", true, false},
    {"Gold", "dissolve", "in water", false, true},
}};

constexpr std::array<const char*, 12> kThings = {"pan", "cup", "ring", "bead", "block", "tile",
                                                 "cube", "rod", "plate", "disk", "bar", "bowl"};

std::string lower_first(std::string s)
{
    // Keep proper casing for mid-sentence use: "A magnet" -> "a magnet".
    if (!s.empty() && s[0] >= 'A' && s[0] <= 'Z') s[0] = static_cast<char>(s[0] - 'A' + 'a');
    return s;
}

std::string upper_first(std::string s)
{
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
    return s;
}

std::string with_article(const std::string& noun)
{
    const char c = noun.empty() ? 'x' : noun[0];
    const bool vowel = c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
    return (vowel ? "an " : "a ") + noun;
}

std::string material_of(const CoreItem& item)
{
    return lower_first(item.material_is_subject ? item.subject : item.object);
}

std::string fact_sentence(const CoreItem& item, bool positive)
{
    return std::string(item.subject) + (positive ? " can " : " cannot ") + item.verb + " " + item.object + ".";
}

}  // namespace

void SynthOptions::validate() const
{
    if (core_facts == 0 || core_facts > kCore.size()) {
        throw Error(ErrorCode::InvalidArgument, "core_facts must lie in [1," + std::to_string(kCore.size()) + "]");
    }
    if (misconceptions > core_facts) {
        throw Error(ErrorCode::InvalidArgument, "misconceptions cannot exceed core_facts");
    }
    if (train_per_fact + test_per_fact > kThings.size() || train_per_fact == 0 || test_per_fact == 0) {
        throw Error(ErrorCode::InvalidArgument, "train_per_fact + test_per_fact must lie in [2," +
                                                    std::to_string(kThings.size()) + "]");
    }
}

SyntheticSuite make_synthetic_suite(const SynthOptions& options)
{
    options.validate();
    SyntheticSuite suite;
    json links = json::array();
    json assertions = json::array();

    // Misconceptions are spread evenly over the facts, not bunched at the front.
    std::vector<bool> wrong(options.core_facts, false);
    for (std::size_t m = 0; m < options.misconceptions; ++m) {
        wrong[(m * options.core_facts) / options.misconceptions] = true;
    }

    for (std::size_t k = 0; k < options.core_facts; ++k) {
        const CoreItem& item = kCore[k];
        const std::string core = fact_sentence(item, item.positive);
        suite.core_facts.push_back(core);
        suite.misconception.push_back(wrong[k]);
        assertions.push_back(fact_sentence(item, wrong[k] ? !item.positive : item.positive));

        const std::string material = material_of(item);
        const std::size_t per = options.train_per_fact + options.test_per_fact;
        for (std::size_t e = 0; e < per; ++e) {
            const std::string entity = material + " " + kThings[e];
            links.push_back({{"child", with_article(entity)}, {"parent", material}, {"verb", "is made of"}});
            const std::string link_sentence = upper_first(with_article(entity)) + " is made of " + material + ".";
            std::string question;
            if (item.material_is_subject) {
                question = "Can " + with_article(entity) + " " + item.verb + " " + item.object + "?";
            } else {
                question = "Can " + lower_first(item.subject) + " " + item.verb + " " + with_article(entity) + "?";
            }
            QAExample ex;
            const bool is_train = e < options.train_per_fact;
            ex.id = std::string(is_train ? "train-" : "test-") + std::to_string(k) + "-" + std::to_string(e);
            ex.question = question;
            ex.choices = {{"A", "yes"}, {"B", "no"}};
            ex.answer_key = item.positive ? "A" : "B";
            ex.core_fact = core;
            ex.gold_premises = {core, link_sentence};
            (is_train ? suite.train : suite.test).push_back(std::move(ex));
        }
    }
    suite.kb_json = {{"isa_links", std::move(links)}, {"assertions", std::move(assertions)}};
    return suite;
}

}  // namespace tqa
