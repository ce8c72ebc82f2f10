#include <doctest.h>

#include <cmath>
#include <random>

#include "support/penny.hpp"
#include "tqa/errors.hpp"
#include "tqa/symbolic_backend.hpp"

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

ProofRequest request(std::string hypothesis, std::vector<std::string> context = {},
                     std::optional<std::string> forced = std::nullopt)
{
    ProofRequest r;
    r.hypothesis.text = std::move(hypothesis);
    r.context = std::move(context);
    r.forced_first_premise = std::move(forced);
    return r;
}

const std::string kCopper = "A penny is made of copper.";
const std::string kCannot = "A magnet cannot attract copper.";
const std::string kCanPenny = "A magnet can attract a penny.";
const std::string kCannotPenny = "A magnet cannot attract a penny.";

}  // namespace

TEST_SUITE("symbolic_backend") {

TEST_CASE("grammar parses verbs by earliest position then longest phrase")
{
    StatementGrammar g;
    const auto a = g.parse("A penny is made of copper.");
    REQUIRE(a);
    CHECK(a->assertion == Assertion{"penny", "is made of", "copper", true});
    const auto b = g.parse("Metals are not magnetic.");
    REQUIRE(b);
    CHECK(b->assertion == Assertion{"metal", "is", "magnetic", false});
    const auto c = g.parse("A magnet can not attract magnetic metals.");
    REQUIRE(c);
    CHECK(c->assertion == Assertion{"magnet", "can attract", "magnetic metal", false});
    CHECK_FALSE(g.parse("Hello there."));
    CHECK(np_key("The Magnetic Metals") == "magnetic metal");
}

TEST_CASE("negate flips polarity and is an involution")
{
    SymbolicBackend be(fixtures::penny_kb());
    CHECK(be.negate("Metals are magnetic.") == "Metals are not magnetic.");
    CHECK(be.negate("A magnet can attract copper.") == kCannot);
    CHECK(be.negate(kCannot) == "A magnet can attract copper.");
    CHECK(be.negate("A penny is made of copper.") == "A penny is not made of copper.");
    CHECK(be.negate("Plants need light.") == "Plants do not need light.");
    CHECK(be.negate("Frobnitz gleeps.") == "It is not true that Frobnitz gleeps.");
    for (const std::string s : {"Metals are magnetic.", "A magnet can attract copper.", "A dime is a coin.",
                                "Plants need light.", "Hello there.", "Ice is a kind of water."}) {
        CHECK(be.negate(be.negate(s)) == s);
    }
}

TEST_CASE("declarativize turns yes/no and multiple choice questions into statements")
{
    SymbolicBackend be(fixtures::penny_kb());
    CHECK(be.declarativize(fixtures::kPennyQuestion, "yes") == kCanPenny);
    CHECK(be.declarativize(fixtures::kPennyQuestion, "no") == kCannotPenny);
    CHECK(be.declarativize("Is a penny made of copper?", "yes") == kCopper);
    CHECK(be.declarativize("Is a penny made of copper?", "no") == "A penny is not made of copper.");
    CHECK(be.declarativize("Is the sky (A) blue (B) yellow", "blue") == "The sky is blue.");
    CHECK(be.declarativize("Name a coin.", "penny") == "A penny is a coin.");
}

TEST_CASE("candidates come from taxonomy children in insertion order")
{
    SymbolicBackend be(fixtures::penny_kb());
    CHECK(be.generate_candidates("Name a coin.", 2) == std::vector<std::string>{"penny", "dime"});
    CHECK(be.generate_candidates("What is a kind of coin?", 1) == std::vector<std::string>{"penny"});
    CHECK(code_of([&] { be.generate_candidates("Name a planet.", 3); }) == ErrorCode::NoCandidates);
    CHECK(code_of([&] { be.generate_candidates("Why is the sky blue?", 3); }) == ErrorCode::NoCandidates);
}

TEST_CASE("unforced proof of the penny hypothesis uses the magnetic-metal chain")
{
    SymbolicBackend be(fixtures::penny_kb());
    const auto p = be.generate_proof(request(kCanPenny));
    REQUIRE(p);
    CHECK(p->premises == std::vector<std::string>{"A magnet can attract magnetic metals.",
                                                  "A penny is made of magnetic metal."});
    CHECK(p->hypothesis_text == kCanPenny);
    CHECK(p->entailment_score == 1.0);
    CHECK(std::fabs(p->overall_score - 0.81) < 1e-12);
    CHECK_FALSE(p->forced);
    CHECK_FALSE(be.generate_proof(request(kCannotPenny)));
}

TEST_CASE("a forced premise with a contradicting context rules out the positive hypothesis")
{
    SymbolicBackend be(fixtures::penny_kb());
    const std::vector<std::string> ctx{kCopper, kCannot};
    CHECK_FALSE(be.generate_proof(request(kCanPenny, ctx, kCopper)));
    const auto neg = be.generate_proof(request(kCannotPenny, ctx, kCopper));
    REQUIRE(neg);
    CHECK(neg->premises == ctx);
    CHECK(neg->forced);
    CHECK(neg->premise_scores == std::vector<double>{1.0, 1.0});
    CHECK(neg->overall_score == 1.0);
}

TEST_CASE("forced premise must open the proof and belong to the context")
{
    SymbolicBackend be(fixtures::penny_kb());
    const auto p = be.generate_proof(request(kCanPenny, {kCopper}, kCopper));
    REQUIRE(p);
    CHECK(p->premises.front() == kCopper);
    CHECK(p->premises == std::vector<std::string>{kCopper, "A magnet can attract copper."});
    CHECK(code_of([&] { be.generate_proof(request(kCanPenny, {}, kCopper)); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([&] { be.generate_proof(request("")); }) == ErrorCode::InvalidArgument);
    auto r = request(kCanPenny);
    r.max_premises = 0;
    CHECK(code_of([&] { be.generate_proof(r); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("an unrelated forced premise gives no proof")
{
    SymbolicBackend be{SymbolicKB{}};
    const std::string plants = "Plants need light.";
    CHECK_FALSE(be.generate_proof(request(kCanPenny, {plants}, plants)));
}

TEST_CASE("max_premises caps the derivation length")
{
    SymbolicBackend be(fixtures::penny_kb());
    auto r = request(kCanPenny);
    r.max_premises = 1;
    CHECK_FALSE(be.generate_proof(r));
}

TEST_CASE("belief scores follow context, then the knowledge base")
{
    SymbolicKB kb;
    kb.add_statement("Metals are not magnetic.");
    kb.add_statement("Iron is magnetic.", 0.7);
    SymbolicBackend be(kb);
    CHECK(be.belief_score("Metals are magnetic.", {}) == doctest::Approx(0.1));
    CHECK(be.belief_score("Metals are not magnetic.", {}) == doctest::Approx(0.9));
    CHECK(be.belief_score("Iron is magnetic.", {}) == doctest::Approx(0.7));
    CHECK(be.belief_score("Glass is magnetic.", {}) == doctest::Approx(0.3));
    const std::vector<std::string> ctx{"Metals are magnetic."};
    CHECK(be.belief_score("Metals are magnetic.", ctx) == 1.0);
    CHECK(be.belief_score("Metals are not magnetic.", ctx) == 0.0);
    CHECK(be.belief_score("Some unparseable words", std::vector<std::string>{"Some unparseable words"}) == 1.0);
    CHECK(code_of([&] { be.belief_score("Some unparseable words", {}); }) == ErrorCode::UnparseableStatement);
}

TEST_CASE("context dominates belief for any parseable statement")
{
    SymbolicBackend be(fixtures::penny_kb());
    for (const std::string& s : std::vector<std::string>{"A magnet can attract copper.", kCopper, "A dime is a coin.", "Glass is clear."}) {
        CHECK(be.belief_score(s, std::vector<std::string>{s}) == 1.0);
        CHECK(be.belief_score(s, std::vector<std::string>{be.negate(s)}) == 0.0);
    }
}

TEST_CASE("entailment is judged over the given premises alone")
{
    SymbolicBackend be(fixtures::penny_kb());
    const std::vector<std::string> good{kCopper, "A magnet can attract copper."};
    CHECK(be.entailment_score(good, kCanPenny) == 1.0);
    CHECK(be.entailment_score(std::vector<std::string>{kCopper, kCannot}, kCannotPenny) == 1.0);
    CHECK(be.entailment_score(std::vector<std::string>{kCopper}, kCanPenny) == 0.0);
    CHECK(be.entailment_score(std::vector<std::string>{"Plants need light."}, kCanPenny) == 0.0);
    CHECK(be.entailment_score(std::vector<std::string>{kCanPenny}, kCanPenny) == 1.0);
    CHECK(code_of([&] { be.entailment_score(std::vector<std::string>{}, kCanPenny); }) == ErrorCode::EmptyPremises);
}

TEST_CASE("direct scores read the knowledge base without reasoning")
{
    SymbolicBackend be(fixtures::penny_kb());
    CHECK(be.direct_answer_score({"A magnet can attract copper.", "", ""}) == doctest::Approx(0.9));
    CHECK(be.direct_answer_score({kCannot, "", ""}) == doctest::Approx(0.1));
    CHECK(be.direct_answer_score({kCanPenny, "", ""}) == doctest::Approx(0.3));
    CHECK(be.direct_answer_score({"gibberish", "", ""}) == doctest::Approx(0.3));
}

TEST_CASE("overall score is the entailment times the premise product on random requests")
{
    SymbolicBackend be(fixtures::penny_kb());
    const std::vector<std::string> pool{kCopper, kCannot, "A magnet can attract copper.", "A dime is a coin.",
                                        "A penny is made of magnetic metal.", "Plants need light."};
    const std::vector<std::string> hyps{kCanPenny, kCannotPenny, "A magnet can attract a copper pan.",
                                        "A magnet cannot attract a copper pan.", "A magnet can attract a dime."};
    std::mt19937_64 rng(5);
    int proofs = 0;
    for (int i = 0; i < 300; ++i) {
        std::vector<std::string> ctx;
        for (const auto& p : pool) if (rng() % 2) ctx.push_back(p);
        std::optional<std::string> forced;
        if (!ctx.empty() && rng() % 2) forced = ctx[rng() % ctx.size()];
        const auto& h = hyps[rng() % hyps.size()];
        const auto p = be.generate_proof(request(h, ctx, forced));
        if (!p) continue;
        ++proofs;
        REQUIRE_FALSE(p->premises.empty());
        CHECK(p->premises.size() == p->premise_scores.size());
        CHECK(p->overall_score == compose_score(p->entailment_score, p->premise_scores));
        if (forced) CHECK(p->premises.front() == *forced);
        CHECK(p == be.generate_proof(request(h, ctx, forced)));
    }
    CHECK(proofs > 50);
}

TEST_CASE("knowledge base invariants are enforced")
{
    SymbolicKB kb;
    kb.add_statement("Metals are magnetic.");
    CHECK(code_of([&] { kb.add_statement("Metals are not magnetic."); }) == ErrorCode::InvariantViolation);
    kb.add_link("A", "B");
    kb.add_link("B", "C");
    CHECK(code_of([&] { kb.add_link("C", "A"); }) == ErrorCode::InvariantViolation);
    CHECK(code_of([&] { kb.add_statement("Hello there."); }) == ErrorCode::UnparseableStatement);
    CHECK(code_of([&] { kb.add_statement("Iron is magnetic.", 1.5); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { SymbolicKB::from_json(nlohmann::json{{"assertions", 3}}); }) == ErrorCode::FormatError);
    CHECK(code_of([] { SymbolicKB::load("/nonexistent/kb.json"); }) == ErrorCode::IoFailure);
}

TEST_CASE("knowledge base round-trips through json")
{
    const auto kb = fixtures::penny_kb();
    const auto again = SymbolicKB::from_json(kb.to_json());
    CHECK(again.fingerprint() == kb.fingerprint());
    CHECK(again.statements().size() == 6);
}

TEST_CASE("custom verb templates extend the grammar")
{
    const nlohmann::json doc = {
        {"templates", {{"verbs", {{{"key", "eats"}, {"positive", {"eats", "eat"}}, {"negative", {"does not eat", "do not eat"}}}}}}},
        {"assertions", {"Cats eat fish."}}};
    const auto kb = SymbolicKB::from_json(doc);
    SymbolicBackend be(kb);
    CHECK(be.negate("Cats eat fish.") == "Cats do not eat fish.");
    CHECK(be.belief_score("Cats do not eat fish.", {}) == doctest::Approx(0.1));
}

}
