#include <doctest.h>

#include "tqa/errors.hpp"
#include "tqa/sim_teacher.hpp"

using namespace tqa;

namespace {

std::optional<std::pair<ErrorCode, std::optional<std::size_t>>> failure(auto&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return std::make_pair(e.code(), e.line());
    }
    return std::nullopt;
}

std::string row(const std::string& id, const std::string& answer = "A", const std::string& core = "Copper is a metal.")
{
    return R"({"id":")" + id + R"(","question":"Is copper a metal?","choices":[{"label":"A","text":"yes"},{"label":"B","text":"no"}],"answer_key":")" +
           answer + R"(","core_fact":")" + core + R"(","gold_premises":["Copper is a metal."]})";
}

const char* kObqa =
    R"({"id":"7-980","question":{"stem":"The sun is responsible for","choices":[{"text":"puppies learning new tricks","label":"A"},{"text":"plants sprouting, blooming and wilting","label":"B"}]},"fact1":"the sun is the source of energy for physical cycles on Earth","answerKey":"B"})";
const char* kQuartz =
    R"({"id":"QRQA-10116-3","question":{"stem":"John is climbing a mountain. As he gets higher, the air is","choices":[{"text":"thinner","label":"A"},{"text":"thicker","label":"B"}]},"para":"The air at higher altitudes is thinner.","answerKey":"A"})";

}  // namespace

TEST_SUITE("datasets") {

TEST_CASE("well-formed dataset lines parse and round-trip")
{
    const std::string text = row("e1") + "\n\n" + row("e2", "B") + "\n" + row("e3") + "\n";
    const auto ds = parse_dataset(text);
    REQUIRE(ds.size() == 3);
    CHECK(ds[1].answer_key == "B");
    CHECK(ds[0].choice_texts() == std::vector<std::string>{"yes", "no"});
    CHECK(ds[0].label_at(1) == "B");
    CHECK(parse_dataset(dataset_to_jsonl(ds)) == ds);
}

TEST_CASE("bad rows report the line they are on")
{
    auto f = failure([&] { parse_dataset(row("e1") + "\n" + row("e2", "A", "Something else.")); });
    REQUIRE(f);
    CHECK(f->first == ErrorCode::InvariantViolation);
    CHECK(f->second == 2);

    f = failure([&] { parse_dataset(row("e1") + "\n" + row("e2") + "\n{oops"); });
    REQUIRE(f);
    CHECK(f->first == ErrorCode::FormatError);
    CHECK(f->second == 3);

    f = failure([&] { parse_dataset(row("e1", "Z")); });
    REQUIRE(f);
    CHECK(f->first == ErrorCode::InvariantViolation);

    f = failure([&] { parse_dataset(R"({"id":"x","question":"q","choices":[{"label":"A","text":"a"}],"core_fact":"c","gold_premises":["c"]})"); });
    REQUIRE(f);
    CHECK(f->first == ErrorCode::FormatError);
    CHECK(f->second == 1);

    f = failure([&] { parse_dataset(row("e1") + "\n" + row("e1")); });
    REQUIRE(f);
    CHECK(f->second == 2);

    f = failure([] { load_dataset("/nonexistent/data.jsonl"); });
    REQUIRE(f);
    CHECK(f->first == ErrorCode::IoFailure);
}

TEST_CASE("OpenBookQA rows map to examples with fact1 as the core fact")
{
    const auto ds = parse_obqa(kObqa);
    REQUIRE(ds.size() == 1);
    CHECK(ds[0].id == "7-980");
    CHECK(ds[0].question == "The sun is responsible for");
    CHECK(ds[0].answer_key == "B");
    CHECK(ds[0].core_fact == "the sun is the source of energy for physical cycles on Earth");
    CHECK(ds[0].gold_premises == std::vector<std::string>{ds[0].core_fact});
    CHECK_NOTHROW(ds[0].validate());

    std::string no_fact = kObqa;
    no_fact.erase(no_fact.find(R"("fact1")"), std::string(R"("fact1":"the sun is the source of energy for physical cycles on Earth",)").size());
    const auto f = failure([&] { parse_obqa(no_fact); });
    REQUIRE(f);
    CHECK(f->first == ErrorCode::InvariantViolation);
    CHECK(f->second == 1);
}

TEST_CASE("QuaRTz rows use the knowledge paragraph as the core fact")
{
    const auto ds = parse_quartz(kQuartz);
    REQUIRE(ds.size() == 1);
    CHECK(ds[0].core_fact == "The air at higher altitudes is thinner.");
    CHECK(ds[0].choices.size() == 2);
    CHECK_NOTHROW(ds[0].validate());
}

TEST_CASE("real dataset files have the published sizes when present")
{
    const auto dir = real_data_dir();
    if (!dir) {
        MESSAGE("TQA_DATA_DIR not set; skipping real dataset sizes");
        return;
    }
    const auto present = [&](const char* f) { return std::filesystem::exists(*dir / f); };
    if (present("obqa_train.jsonl") && present("obqa_test.jsonl")) {
        CHECK(load_obqa(*dir / "obqa_train.jsonl").size() == 4957);
        CHECK(load_obqa(*dir / "obqa_test.jsonl").size() == 500);
    }
    if (present("quartz_train.jsonl") && present("quartz_test.jsonl")) {
        CHECK(load_quartz(*dir / "quartz_train.jsonl").size() == 1348);
        CHECK(load_quartz(*dir / "quartz_test.jsonl").size() == 557);
    }
}

}
