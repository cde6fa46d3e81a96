#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "docforge/engine.hpp"

using namespace docforge;

static EngineConfig cfg() { return EngineConfig{}; }

// A sample stuck at arbitration: the first source has an unclosed brace in
// its formula and the box overlap is mediocre, so no layer can pass it.
static SampleRecord pending_sample() {
    SampleRecord rec;
    rec.id = "pend-1";
    rec.image_ref = "img://pend-1";
    rec.candidates.push_back({"alpha",
                              "alpha intro prose\n\n$\\frac{a}{b$ tail wordz",
                              {{{0, 0, 100, 100}, "alpha intro prose"}}});
    rec.candidates.push_back({"beta",
                              "alpha intro prose\n\n$\\frac{a}{b}$ tail words",
                              {{{0, 0, 50, 100}, "alpha intro prose"}}});
    return rec;
}

static engine::RepairSubmission formula_fix() {
    engine::RepairSubmission sub;
    sub.sample_id = "pend-1";
    sub.source_id = "alpha";
    const std::string md = pending_sample().candidates[0].markdown;
    sub.region.offset = md.find("\\frac{a}{b");
    sub.region.pre_len = std::string("\\frac{a}{b").size();
    sub.region.post_len = std::string("\\frac{a}{b}").size();
    sub.pre_text = "\\frac{a}{b";
    sub.replacement = "\\frac{a}{b}";
    return sub;
}

TEST_CASE("corpus verification maps every sample to a verdict in order") {
    std::vector<SampleRecord> samples;
    SampleRecord good;
    good.id = "g";
    good.candidates.push_back({"a", "same text", {}});
    good.candidates.push_back({"b", "same text", {}});
    samples.push_back(good);
    samples.push_back(pending_sample());
    SampleRecord blank;
    blank.id = "bl";
    blank.candidates.push_back({"a", "", {}});
    blank.candidates.push_back({"b", " ", {}});
    samples.push_back(blank);

    std::vector<VerdictRecord> verdicts = engine::verify_corpus(samples, cfg(), 1);
    REQUIRE(verdicts.size() == 3);
    CHECK(verdicts[0].sample_id == "g");
    CHECK(verdicts[0].state == VerdictState::Pass);
    CHECK(verdicts[1].state == VerdictState::Pending);
    CHECK(verdicts[2].state == VerdictState::Reject);

    std::vector<VerdictRecord> parallel = engine::verify_corpus(samples, cfg(), 4);
    REQUIRE(parallel.size() == verdicts.size());
    for (size_t i = 0; i < verdicts.size(); ++i)
        CHECK(to_json(verdicts[i]).dump() == to_json(parallel[i]).dump());
}

TEST_CASE("page score is perfect for a clean sample matching its reference") {
    SampleRecord rec;
    rec.id = "dp";
    rec.candidates.push_back({"a", "# Title\n\nprose with 42 items", {}});
    ReferenceAnnotation ref;
    ref.markdown = "# Title\n\nprose with 42 items";
    rec.reference = ref;
    diagnostics::DpcsResult r = engine::dpcs_for_sample(rec, cfg());
    CHECK(r.score == 100.0);
    CHECK(r.tier == "high");
}

TEST_CASE("page score drops with reference mismatch and broken structure") {
    SampleRecord rec;
    rec.id = "dp2";
    rec.candidates.push_back(
        {"a",
         "heading words\n\n<table><tr><td>1</td><td>2</td></tr><tr><td>3</td></tr></table>",
         {}});
    ReferenceAnnotation ref;
    ref.markdown = "heading words and plenty of other content with 7 numbers";
    rec.reference = ref;
    diagnostics::DpcsResult r = engine::dpcs_for_sample(rec, cfg());
    CHECK(r.parts.text < 1.0);
    // the ragged table costs closure and width uniformity
    CHECK(r.parts.structure == Catch::Approx(0.6));
    CHECK(r.parts.semantic < 1.0);
    CHECK(r.score < 80.0);

    // without a reference the text part reads cross-source agreement
    SampleRecord pair;
    pair.id = "dp3";
    pair.candidates.push_back({"a", "abcd", {}});
    pair.candidates.push_back({"b", "abcz", {}});
    diagnostics::DpcsResult rp = engine::dpcs_for_sample(pair, cfg());
    CHECK(rp.parts.text == Catch::Approx(0.75));
}

TEST_CASE("a well-formed repair clears all three gates") {
    SampleRecord rec = pending_sample();
    REQUIRE(cascade::route(rec, cfg()).verdict.state == VerdictState::Pending);

    engine::RepairOutcome out = engine::evaluate_repair(rec, formula_fix(), cfg());
    CHECK(out.gates.confidence_gain);
    CHECK(out.gates.red_bounds);
    CHECK(out.gates.arbitration_pass);
    CHECK(out.accepted);
    CHECK(out.reason == "accepted");
    REQUIRE(out.reverdict.has_value());
    CHECK(out.reverdict->state == VerdictState::Pass);
    CHECK(out.repaired_markdown.find("\\frac{a}{b}") != std::string::npos);
}

TEST_CASE("repairs on consensual samples are turned away") {
    SampleRecord rec;
    rec.id = "pend-1";  // same id, but the sources agree
    rec.candidates.push_back({"alpha", "same text", {}});
    rec.candidates.push_back({"beta", "same text", {}});
    engine::RepairSubmission sub = formula_fix();
    sub.region = {0, 4, 4};
    sub.pre_text = "same";
    sub.replacement = "Same";
    engine::RepairOutcome out = engine::evaluate_repair(rec, sub, cfg());
    CHECK_FALSE(out.accepted);
    CHECK(out.reason == "not-pending");
}

TEST_CASE("repair integrity failures are reported before any routing") {
    SampleRecord rec = pending_sample();

    engine::RepairSubmission unknown = formula_fix();
    unknown.source_id = "nobody";
    CHECK(engine::evaluate_repair(rec, unknown, cfg()).reason == "unknown-source");

    engine::RepairSubmission stale = formula_fix();
    stale.pre_text = "\\frac{x}{y";
    CHECK(engine::evaluate_repair(rec, stale, cfg()).reason == "region-mismatch");

    engine::RepairSubmission overflow = formula_fix();
    overflow.region.offset = 10000;
    CHECK(engine::evaluate_repair(rec, overflow, cfg()).reason == "region-mismatch");

    engine::RepairSubmission lying = formula_fix();
    lying.region.post_len += 3;  // replacement length disagrees
    CHECK(engine::evaluate_repair(rec, lying, cfg()).reason == "region-mismatch");
}

TEST_CASE("a repair that changes nothing of substance fails the confidence gate") {
    SampleRecord rec = pending_sample();
    engine::RepairSubmission sub;
    sub.sample_id = "pend-1";
    sub.source_id = "alpha";
    const std::string md = rec.candidates[0].markdown;
    sub.region.offset = md.find("wordz");
    sub.region.pre_len = 5;
    sub.region.post_len = 5;
    sub.pre_text = "wordz";
    sub.replacement = "wordy";  // still one character away from the other source
    engine::RepairOutcome out = engine::evaluate_repair(rec, sub, cfg());
    CHECK_FALSE(out.accepted);
    CHECK(out.reason == "confidence-gain");
}

TEST_CASE("edits beyond the distance bounds fail the red gate") {
    SampleRecord rec = pending_sample();
    EngineConfig tight = cfg();
    tight.red_text.high = 0.01;  // the formula fix moves text by more than this
    engine::RepairOutcome out = engine::evaluate_repair(rec, formula_fix(), tight);
    CHECK(out.gates.confidence_gain);
    CHECK_FALSE(out.gates.red_bounds);
    CHECK_FALSE(out.accepted);
    CHECK(out.reason == "red-bounds");
}

TEST_CASE("a partial fix that still cannot pass fails the arbitration gate") {
    SampleRecord rec;
    rec.id = "part-1";
    rec.candidates.push_back({"alpha",
                              "intro prose\n\n$x^{2$ tail\n\n| a | b |\n| --- | --- |\n| 1 | 2 |",
                              {{{0, 0, 100, 100}, "intro prose"}}});
    rec.candidates.push_back(
        {"beta",
         "intro prose\n\n$x^{2}$ tail\n\n"
         "<table><tr><td>a</td><td>b</td></tr><tr><td>1</td><td>2</td></tr></table>",
         {{{0, 0, 40, 100}, "intro prose"}}});
    REQUIRE(cascade::route(rec, cfg()).verdict.state == VerdictState::Pending);

    engine::RepairSubmission sub;
    sub.sample_id = "part-1";
    sub.source_id = "alpha";
    const std::string md = rec.candidates[0].markdown;
    sub.region.offset = md.find("x^{2");
    sub.region.pre_len = 4;
    sub.region.post_len = 5;
    sub.pre_text = "x^{2";
    sub.replacement = "x^{2}";  // fixes the formula, leaves the pipe table
    engine::RepairOutcome out = engine::evaluate_repair(rec, sub, cfg());
    CHECK(out.gates.confidence_gain);
    CHECK(out.gates.red_bounds);
    CHECK_FALSE(out.gates.arbitration_pass);
    CHECK(out.reason == "arbitration-pass");
    REQUIRE(out.reverdict.has_value());
    CHECK(out.reverdict->state == VerdictState::Pending);
}

TEST_CASE("reverification applies accepted repairs and admits passing samples only") {
    std::vector<SampleRecord> samples;

    SampleRecord good;
    good.id = "g";
    good.image_ref = "img://g";
    good.candidates.push_back({"src-b", "agreed text", {}});
    good.candidates.push_back({"src-a", "agreed text", {}});
    samples.push_back(good);

    samples.push_back(pending_sample());

    SampleRecord blank;
    blank.id = "bl";
    blank.candidates.push_back({"a", "", {}});
    blank.candidates.push_back({"b", "", {}});
    samples.push_back(blank);

    std::vector<engine::RepairSubmission> repairs;
    repairs.push_back(formula_fix());
    engine::RepairSubmission lost = formula_fix();
    lost.sample_id = "ghost";
    repairs.push_back(lost);

    engine::AdmissionReport rep = engine::reverify_and_admit(samples, repairs, cfg(), 2);
    REQUIRE(rep.repair_outcomes.size() == 2);
    CHECK(rep.repair_outcomes[0].accepted);
    CHECK(rep.repair_outcomes[1].reason == "unknown-sample");

    REQUIRE(rep.verdicts.size() == 3);
    CHECK(rep.verdicts[0].state == VerdictState::Pass);
    CHECK(rep.verdicts[1].state == VerdictState::Pass);  // repaired in place
    CHECK(rep.verdicts[2].state == VerdictState::Reject);

    REQUIRE(rep.admitted.size() == 2);
    CHECK(rep.admitted[0].sample_id == "g");
    // ties go to the lexicographically smaller source id
    CHECK(rep.admitted[0].source_id == "src-a");
    CHECK(rep.admitted[1].sample_id == "pend-1");
    CHECK(rep.admitted[1].source_id == "alpha");
    CHECK(rep.admitted[1].markdown.find("\\frac{a}{b}$") != std::string::npos);

    json j = engine::to_json(rep.admitted[1]);
    CHECK(j.at("sample_id") == "pend-1");
    CHECK(j.at("layer") == "L3");
}

TEST_CASE("repair submissions round-trip through json") {
    engine::RepairSubmission sub = formula_fix();
    engine::RepairSubmission back = engine::repair_from_json(engine::to_json(sub));
    CHECK(back.sample_id == sub.sample_id);
    CHECK(back.source_id == sub.source_id);
    CHECK(back.region.offset == sub.region.offset);
    CHECK(back.region.pre_len == sub.region.pre_len);
    CHECK(back.region.post_len == sub.region.post_len);
    CHECK(back.pre_text == sub.pre_text);
    CHECK(back.replacement == sub.replacement);
}
