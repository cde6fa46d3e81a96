#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <string>
#include <vector>

#include "docforge/augment.hpp"
#include "docforge/engine.hpp"

using namespace docforge;

static EngineConfig cfg() { return EngineConfig{}; }

TEST_CASE("every template renders canonical markup with one box per block") {
    util::SeededRng rng(7);
    for (const std::string& name : augment::template_names()) {
        util::SeededRng local(util::derive_stream(11, name));
        augment::SyntheticPage page = augment::make_template(name, local);
        UNSCOPED_INFO("template " + name);
        CHECK(page.boxes.size() == page.pieces.size());
        CHECK(page.pieces.size() >= 2);
        markup::NormalizationReport rep = markup::normalize_text(page.markdown());
        for (const markup::Violation& v : rep.violations)
            UNSCOPED_INFO(name + " violates " + v.rule + ": " + v.detail);
        CHECK(rep.violations.empty());
        CHECK(rep.normalized_text == page.markdown());
    }
    (void)rng;
}

TEST_CASE("template ids carry parameters") {
    util::SeededRng rng(3);
    augment::SyntheticPage page = augment::make_template("table:rows=6,cols=2", rng);
    bool found = false;
    for (const std::string& piece : page.pieces) {
        markup::TableParseResult parsed = markup::parse_html_table(piece);
        if (!parsed.ok()) continue;
        found = true;
        CHECK(parsed.grid->rows.size() == 6);
        CHECK(parsed.grid->rows[0].size() == 2);
    }
    CHECK(found);

    CHECK_THROWS(augment::make_template("no-such-template", rng));
    CHECK_THROWS(augment::make_template("table:rows", rng));
}

TEST_CASE("clean synthetic pages route to a pass") {
    for (const std::string& name : augment::template_names()) {
        util::SeededRng rng(util::derive_stream(23, name));
        augment::SyntheticPage page = augment::make_template(name, rng);
        SampleRecord rec;
        rec.id = "clean-" + name;
        rec.candidates.push_back({"a", page.markdown(), page.boxed_text()});
        rec.candidates.push_back({"b", page.markdown(), page.boxed_text()});
        cascade::RouteResult rr = cascade::route(rec, cfg());
        UNSCOPED_INFO("template " + name + " state " + to_string(rr.verdict.state));
        CHECK(rr.verdict.state == VerdictState::Pass);
        CHECK(rr.verdict.layer == CascadeLayer::L2);
        CHECK(rr.verdict.error_tags.empty());
    }
}

TEST_CASE("two-column boxes already read in order") {
    util::SeededRng rng(5);
    augment::SyntheticPage page = augment::make_template("two-column:rows=3", rng);
    std::vector<BoundingBox> boxes;
    for (const BoundingBox& b : page.boxes) boxes.push_back(b);
    CHECK(metrics::reading_order_score(boxes) == 1.0);
}

TEST_CASE("cell merge and split break row uniformity") {
    util::SeededRng rng(41);
    augment::SyntheticPage page = augment::make_template("table:rows=4,cols=3", rng);
    augment::PerturbResult pr =
        augment::apply_perturbation(page, augment::Perturbation::CellMergeSplit, rng);
    REQUIRE(pr.applied);
    CHECK(pr.block_map == std::vector<int>{0, 1, 2, 3});

    CandidateAnnotation c{"x", pr.page.markdown(), {}};
    cascade::CandidateScreen s = cascade::screen_candidate(c);
    CHECK_FALSE((s.widths_uniform && s.grid_closed));
}

TEST_CASE("formula disturbance always yields an invalid formula") {
    for (uint64_t seed = 0; seed < 8; ++seed) {
        util::SeededRng rng(seed);
        augment::SyntheticPage page = augment::make_template("align:rows=3", rng);
        augment::PerturbResult pr =
            augment::apply_perturbation(page, augment::Perturbation::FormulaAlignDisturb, rng);
        REQUIRE(pr.applied);
        cascade::CandidateScreen s =
            cascade::screen_candidate({"x", pr.page.markdown(), {}});
        UNSCOPED_INFO("seed " + std::to_string(seed));
        CHECK_FALSE(s.ast_valid);
    }
}

TEST_CASE("list rearrangement forces an illegal depth jump") {
    util::SeededRng rng(17);
    augment::SyntheticPage page = augment::make_template("nested-list:depth=3,items=2", rng);
    augment::PerturbResult pr =
        augment::apply_perturbation(page, augment::Perturbation::ListRearrange, rng);
    REQUIRE(pr.applied);
    markup::MarkdownDoc doc = markup::parse_markdown(pr.page.markdown());
    CHECK_FALSE(markup::list_indent_valid(doc));
}

TEST_CASE("character confusion changes text but not its folded form") {
    util::SeededRng rng(29);
    augment::SyntheticPage page = augment::make_template("mixed-script:paras=3", rng);
    augment::PerturbResult pr =
        augment::apply_perturbation(page, augment::Perturbation::CharConfusion, rng);
    REQUIRE(pr.applied);
    const std::string a = markup::strip_markup(page.markdown());
    const std::string b = markup::strip_markup(pr.page.markdown());
    CHECK(a != b);
    CHECK(diagnostics::fold_confusables(a) == diagnostics::fold_confusables(b));
}

TEST_CASE("cross-page cut drops at least a third of the text") {
    util::SeededRng rng(53);
    augment::SyntheticPage page = augment::make_template("two-column:rows=3", rng);
    augment::PerturbResult pr =
        augment::apply_perturbation(page, augment::Perturbation::CrossPageCut, rng);
    REQUIRE(pr.applied);
    REQUIRE(pr.page.pieces.size() >= 1);
    CHECK(pr.page.pieces.size() < page.pieces.size());
    CHECK(pr.page.boxes.size() == pr.page.pieces.size());
    const double ed = metrics::norm_edit_distance(markup::strip_markup(page.markdown()),
                                                  markup::strip_markup(pr.page.markdown()));
    CHECK(ed > 0.3);
    // kept blocks map to themselves
    for (size_t i = 0; i < pr.block_map.size(); ++i)
        CHECK(pr.block_map[i] == static_cast<int>(i));
}

TEST_CASE("column rearrangement scrambles sequence against geometry") {
    util::SeededRng rng(61);
    augment::SyntheticPage page = augment::make_template("table:rows=4,cols=3", rng);
    augment::PerturbResult pr =
        augment::apply_perturbation(page, augment::Perturbation::ColumnRearrange, rng);
    REQUIRE(pr.applied);
    std::vector<BoundingBox> boxes(pr.page.boxes.begin(), pr.page.boxes.end());
    CHECK(metrics::reading_order_score(boxes) < 0.9);
    const size_t n = page.pieces.size();
    for (size_t i = 0; i < n; ++i)
        CHECK(pr.block_map[i] == static_cast<int>(n - 1 - i));
}

TEST_CASE("plans are deterministic and respect the intensity floor") {
    std::vector<augment::PlanItem> a = augment::sample_plan(99, 50, 0.8);
    std::vector<augment::PlanItem> b = augment::sample_plan(99, 50, 0.8);
    REQUIRE(a.size() == 50);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].sample_id == b[i].sample_id);
        CHECK(a[i].template_id == b[i].template_id);
        CHECK(a[i].perturbed == b[i].perturbed);
        CHECK(a[i].stream == b[i].stream);
    }
    CHECK(a[0].sample_id == "synth-000000");

    // intensity clamps up to 0.5 from below and tops out at 1.0
    std::vector<augment::PlanItem> low = augment::sample_plan(1, 400, 0.1);
    size_t perturbed = 0;
    for (const auto& item : low) perturbed += item.perturbed;
    CHECK(perturbed >= 150);  // clamped to one half, allow sampling noise
    CHECK(perturbed <= 250);

    std::vector<augment::PlanItem> full = augment::sample_plan(1, 100, 1.0);
    for (const auto& item : full) CHECK(item.perturbed);
}

TEST_CASE("built samples carry the clean reference and the planned defect") {
    std::vector<augment::PlanItem> plan = augment::sample_plan(5, 40, 1.0);
    for (const augment::PlanItem& item : plan) {
        SampleRecord rec = augment::build_sample(item);
        REQUIRE(rec.candidates.size() == 2);
        CHECK(rec.candidates[0].source_id == "synth-clean");
        CHECK(rec.candidates[1].source_id == "synth-variant");
        REQUIRE(rec.reference.has_value());
        CHECK(rec.reference->markdown == rec.candidates[0].markdown);
        CHECK(rec.metadata.at("perturbation") == to_string(item.perturbation));
        CHECK(rec.candidates[0].markdown != rec.candidates[1].markdown);
    }
    // rebuilt samples are byte-identical
    SampleRecord x = augment::build_sample(plan[0]);
    SampleRecord y = augment::build_sample(plan[0]);
    CHECK(to_json(x).dump() == to_json(y).dump());
}

TEST_CASE("self-labels hold across a mixed plan") {
    std::vector<augment::PlanItem> plan = augment::sample_plan(2026, 120, 0.75);
    std::vector<engine::AugmentOutcome> outcomes = engine::run_augment(plan, cfg(), 1);
    REQUIRE(outcomes.size() == plan.size());
    for (size_t i = 0; i < outcomes.size(); ++i) {
        if (outcomes[i].sound) continue;
        UNSCOPED_INFO("unsound " + plan[i].sample_id + " " + plan[i].template_id +
                      (plan[i].perturbed ? " perturbation " + to_string(plan[i].perturbation)
                                         : std::string(" clean")) +
                      " state " + to_string(outcomes[i].verdict.state));
        for (const std::string& t : outcomes[i].verdict.error_tags) UNSCOPED_INFO("tag " + t);
        CHECK(outcomes[i].sound);
    }
    CHECK(engine::soundness_rate(outcomes) == 1.0);
}

TEST_CASE("generation is independent of worker count") {
    std::vector<augment::PlanItem> plan = augment::sample_plan(77, 60, 0.9);
    std::vector<engine::AugmentOutcome> one = engine::run_augment(plan, cfg(), 1);
    std::vector<engine::AugmentOutcome> eight = engine::run_augment(plan, cfg(), 8);
    REQUIRE(one.size() == eight.size());
    for (size_t i = 0; i < one.size(); ++i) {
        CHECK(to_json(one[i].sample).dump() == to_json(eight[i].sample).dump());
        CHECK(to_json(one[i].verdict).dump() == to_json(eight[i].verdict).dump());
        CHECK(one[i].sound == eight[i].sound);
    }
}
