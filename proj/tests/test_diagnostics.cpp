#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "docforge/diagnostics.hpp"

using namespace docforge;
using diagnostics::SampleSignals;

static EngineConfig cfg() { return EngineConfig{}; }

static SampleSignals clean_signals(size_t n) {
    SampleSignals s;
    s.candidate_count = n;
    s.ast_valid_count = n;
    s.grid_closed_count = n;
    s.widths_uniform_count = n;
    s.heading_valid_count = n;
    s.list_valid_count = n;
    return s;
}

TEST_CASE("confusable folding maps lookalike glyphs to one form") {
    CHECK(diagnostics::fold_confusables("kernel") == "keme1");
    CHECK(diagnostics::fold_confusables("Olsen") == "01sen");
    CHECK(diagnostics::fold_confusables("rnorn") == "mom");
    CHECK(diagnostics::fold_confusables("plain") == "p1ain");

    CHECK(diagnostics::confusable_only_difference("kernel", "kerne1"));
    CHECK(diagnostics::confusable_only_difference("O2 level", "02 leve1"));
    CHECK_FALSE(diagnostics::confusable_only_difference("same", "same"));
    CHECK_FALSE(diagnostics::confusable_only_difference("abc", "abd"));
}

TEST_CASE("blank and gibberish classifications preempt everything else") {
    SampleSignals s = clean_signals(3);
    s.blank_count = 3;
    s.mean_ed = 0.9;  // would otherwise tag divergence
    CHECK(diagnostics::classify_errors(s, cfg()) ==
          std::vector<std::string>{"recognition:blank"});

    s.blank_count = 1;
    s.gibberish_count = 2;
    CHECK(diagnostics::classify_errors(s, cfg()) ==
          std::vector<std::string>{"recognition:gibberish"});
}

TEST_CASE("each trigger produces its tag") {
    const EngineConfig c = cfg();

    SampleSignals s = clean_signals(2);
    CHECK(diagnostics::classify_errors(s, c).empty());

    s = clean_signals(2);
    s.mean_ed = c.recognition_ed + 0.01;
    CHECK(diagnostics::classify_errors(s, c) ==
          std::vector<std::string>{"recognition:text-divergence"});

    s = clean_signals(2);
    s.confusable_pair = true;
    CHECK(diagnostics::classify_errors(s, c) ==
          std::vector<std::string>{"recognition:confusable-chars"});

    s = clean_signals(2);
    s.min_reading_order = c.order_floor - 0.01;
    CHECK(diagnostics::classify_errors(s, c) ==
          std::vector<std::string>{"relational:reading-order"});

    s = clean_signals(2);
    s.boxes_present = true;
    s.mean_iou = c.layout_floor - 0.01;
    CHECK(diagnostics::classify_errors(s, c) ==
          std::vector<std::string>{"relational:layout-mismatch"});

    // the same low overlap without any boxes means nothing
    s.boxes_present = false;
    CHECK(diagnostics::classify_errors(s, c).empty());

    s = clean_signals(2);
    s.ast_valid_count = 1;
    CHECK(diagnostics::classify_errors(s, c) ==
          std::vector<std::string>{"structural:formula-ast"});

    s = clean_signals(2);
    s.widths_uniform_count = 1;
    CHECK(diagnostics::classify_errors(s, c) ==
          std::vector<std::string>{"structural:table-grid"});

    s = clean_signals(2);
    s.list_valid_count = 0;
    CHECK(diagnostics::classify_errors(s, c) ==
          std::vector<std::string>{"structural:hierarchy"});

    s = clean_signals(2);
    s.normalization_violations = 2;
    CHECK(diagnostics::classify_errors(s, c) ==
          std::vector<std::string>{"format:normalization"});
}

TEST_CASE("format tags require the underlying text to agree") {
    const EngineConfig c = cfg();
    SampleSignals s = clean_signals(2);
    s.normalization_violations = 3;
    s.mean_ed = c.format_ed + 0.1;  // sources disagree: recognition owns it
    std::vector<std::string> tags = diagnostics::classify_errors(s, c);
    CHECK(std::find(tags.begin(), tags.end(), "format:normalization") == tags.end());
    CHECK(std::find(tags.begin(), tags.end(), "recognition:text-divergence") != tags.end());
}

TEST_CASE("tags stack sorted and deduplicated") {
    const EngineConfig c = cfg();
    SampleSignals s = clean_signals(2);
    s.mean_ed = 0.5;
    s.ast_valid_count = 0;
    s.grid_closed_count = 0;
    s.heading_valid_count = 1;
    std::vector<std::string> tags = diagnostics::classify_errors(s, c);
    REQUIRE(tags.size() == 4);
    CHECK(tags[0] == "recognition:text-divergence");
    CHECK(tags[1] == "structural:formula-ast");
    CHECK(tags[2] == "structural:hierarchy");
    CHECK(tags[3] == "structural:table-grid");
    CHECK(std::is_sorted(tags.begin(), tags.end()));
}

TEST_CASE("page score weights the six parts and cuts tiers at fixed scores") {
    const EngineConfig c = cfg();
    diagnostics::DpcsSubscores s;  // all ones
    diagnostics::DpcsResult r = diagnostics::dpcs_score(s, c);
    CHECK(r.score == 100.0);
    CHECK(r.tier == "high");

    // text 0.2 with the rest perfect sits exactly on the high cut
    s.text = 0.2;
    r = diagnostics::dpcs_score(s, c);
    CHECK(r.score == 80.0);
    CHECK(r.tier == "high");

    // losing text and layout entirely lands exactly on the medium cut
    s = diagnostics::DpcsSubscores{};
    s.text = 0.0;
    s.layout = 0.0;
    r = diagnostics::dpcs_score(s, c);
    CHECK(r.score == 60.0);
    CHECK(r.tier == "medium");

    s.order = 0.9;  // 58.5, just under
    r = diagnostics::dpcs_score(s, c);
    CHECK(r.score < 60.0);
    CHECK(r.tier == "low");

    diagnostics::DpcsSubscores zero{0, 0, 0, 0, 0, 0};
    CHECK(diagnostics::dpcs_score(zero, c).score == 0.0);
}

TEST_CASE("weakness aggregation sums states, tags, and per-source distances") {
    std::vector<VerdictRecord> verdicts;

    VerdictRecord a;
    a.sample_id = "s1";
    a.state = VerdictState::Pass;
    a.layer = CascadeLayer::L2;
    a.error_tags = {"format:normalization"};
    a.evidence["source_ed:ocr-a"] = 0.1;
    a.evidence["source_ed:ocr-b"] = 0.3;
    a.evidence["mean_ed"] = 0.2;  // not a per-source key, must be ignored
    verdicts.push_back(a);

    VerdictRecord b;
    b.sample_id = "s2";
    b.state = VerdictState::Pending;
    b.layer = CascadeLayer::L3;
    b.error_tags = {"structural:table-grid", "recognition:text-divergence"};
    b.evidence["source_ed:ocr-a"] = 0.5;
    verdicts.push_back(b);

    VerdictRecord c;  // nothing attached: contributes to counts only
    c.sample_id = "s3";
    c.state = VerdictState::Reject;
    c.layer = CascadeLayer::L1;
    verdicts.push_back(c);

    diagnostics::WeaknessReport rep = diagnostics::aggregate_weakness(verdicts);
    CHECK(rep.total == 3);
    CHECK(rep.by_state.at("pass") == 1);
    CHECK(rep.by_state.at("pending") == 1);
    CHECK(rep.by_state.at("reject") == 1);
    CHECK(rep.by_layer.at("L1") == 1);
    CHECK(rep.by_layer.at("L3") == 1);
    CHECK(rep.by_tag.at("format:normalization") == 1);
    CHECK(rep.by_category.at("structural") == 1);
    CHECK(rep.by_category.at("recognition") == 1);
    REQUIRE(rep.by_source.count("ocr-a") == 1);
    CHECK(rep.by_source.at("ocr-a").samples == 2);
    CHECK(rep.by_source.at("ocr-a").mean_ed == Catch::Approx(0.3));
    CHECK(rep.by_source.at("ocr-b").samples == 1);
    CHECK(rep.by_source.count("mean_ed") == 0);

    json j = diagnostics::to_json(rep);
    CHECK(j.at("total") == 3);
    CHECK(j.at("by_source").at("ocr-a").at("samples") == 2);
}
