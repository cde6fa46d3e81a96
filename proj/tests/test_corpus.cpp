#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "docforge/corpus.hpp"

using namespace docforge;

TEST_CASE("bounding boxes are half-open") {
    BoundingBox b{10, 20, 30, 50};
    REQUIRE(b.valid());
    REQUIRE(b.width() == 20);
    REQUIRE(b.area() == 20 * 30);
    REQUIRE(BoundingBox{5, 5, 5, 5}.valid());  // empty but ordered
    REQUIRE_FALSE(BoundingBox{5, 5, 4, 9}.valid());
    REQUIRE_FALSE(BoundingBox{-1, 0, 4, 9}.valid());
}

TEST_CASE("sample records round-trip through json") {
    SampleRecord r;
    r.id = "s-001";
    r.image_ref = "page_001.png";
    r.candidates.push_back({"modelA", "# Title\n\nBody", {{{0, 0, 100, 20}, "Title"}}});
    r.candidates.push_back({"modelB", "# Title\n\nBody.", {}});
    r.reference = ReferenceAnnotation{"# Title\n\nBody", {}};
    r.metadata["lang"] = "en";

    SampleRecord back = sample_from_json(to_json(r));
    REQUIRE(back.id == r.id);
    REQUIRE(back.image_ref == r.image_ref);
    REQUIRE(back.candidates.size() == 2);
    REQUIRE(back.candidates[0].source_id == "modelA");
    REQUIRE(back.candidates[0].boxes.size() == 1);
    REQUIRE(back.candidates[0].boxes[0].box.x2 == 100);
    REQUIRE(back.reference.has_value());
    REQUIRE(back.metadata.at("lang") == "en");
}

TEST_CASE("sample parsing rejects malformed records") {
    REQUIRE_THROWS(sample_from_json(json::parse(R"({"candidates":[]})")));
    REQUIRE_THROWS(sample_from_json(json::parse(R"({"id":"","candidates":[{"source_id":"a","markdown":""}]})")));
    REQUIRE_THROWS(sample_from_json(json::parse(R"({"id":"x","candidates":[]})")));
    REQUIRE_THROWS(sample_from_json(json::parse(R"({"id":"x","candidates":[{"source_id":"a"}]})")));
    // box with x2 < x1
    REQUIRE_THROWS(sample_from_json(json::parse(
        R"({"id":"x","candidates":[{"source_id":"a","markdown":"m","boxes":[{"box":[9,0,1,5],"text":"t"}]}]})")));
}

TEST_CASE("corpus loader keeps line accounting exact") {
    std::istringstream in(
        "{\"id\":\"a\",\"candidates\":[{\"source_id\":\"m\",\"markdown\":\"x\"}]}\n"
        "\n"
        "not json\n"
        "{\"id\":\"a\",\"candidates\":[{\"source_id\":\"m\",\"markdown\":\"y\"}]}\n"
        "{\"id\":\"b\",\"candidates\":[{\"source_id\":\"m\",\"markdown\":\"z\"}]}\n");
    LoadResult res = load_corpus(in);
    REQUIRE(res.line_count == 5);
    REQUIRE(res.records.size() == 2);
    REQUIRE(res.errors.size() == 3);
    REQUIRE(res.records.size() + res.errors.size() == res.line_count);
    REQUIRE(res.errors[0].line == 2);
    REQUIRE(res.errors[1].line == 3);
    REQUIRE(res.errors[2].line == 4);
    REQUIRE(res.errors[2].message.find("duplicate id") != std::string::npos);
    REQUIRE(res.errors[2].message.find("line 1") != std::string::npos);
}

TEST_CASE("verdicts round-trip and enforce shape rules") {
    VerdictRecord v;
    v.sample_id = "s-1";
    v.state = VerdictState::Pending;
    v.layer = CascadeLayer::L3;
    v.consensus = 0.5;
    v.confidence = ModalityConfidence{0.9, 0.4, 1.0, 0.8};
    v.error_tags = {"recognition:confusable-chars"};
    v.evidence["mean_ed"] = 0.12;

    std::ostringstream out;
    write_verdicts({v}, out);
    std::istringstream in(out.str());
    VerdictLoadResult res = load_verdicts(in);
    REQUIRE(res.errors.empty());
    REQUIRE(res.verdicts.size() == 1);
    const VerdictRecord& b = res.verdicts[0];
    REQUIRE(b.state == VerdictState::Pending);
    REQUIRE(b.layer == CascadeLayer::L3);
    REQUIRE(b.confidence->formula == 0.4);
    REQUIRE(b.confidence->min_value() == 0.4);
    REQUIRE(b.evidence.at("mean_ed") == 0.12);

    // L1 rejections carry no consensus score
    REQUIRE_THROWS(verdict_from_json(json::parse(
        R"({"sample_id":"x","state":"reject","layer":"L1","consensus":0.2})")));
    // pending verdicts must expose per-modality confidence
    REQUIRE_THROWS(verdict_from_json(json::parse(
        R"({"sample_id":"x","state":"pending","layer":"L3"})")));
}

TEST_CASE("box tokens parse and report malformed spans") {
    BoxParseResult r =
        parse_box_tokens("<|box_start|>(10,20),(110,40)<|box_end|>Header text "
                         "<|box_start|>(10,60),(110,90)<|box_end|>Body");
    REQUIRE(r.errors.empty());
    REQUIRE(r.boxes.size() == 2);
    REQUIRE(r.boxes[0].box.x1 == 10);
    REQUIRE(r.boxes[0].box.y2 == 40);
    REQUIRE(r.boxes[0].text == "Header text");
    REQUIRE(r.boxes[1].text == "Body");

    BoxParseResult bad = parse_box_tokens("<|box_start|>(10,20,(30,40)<|box_end|>x");
    REQUIRE(bad.boxes.empty());
    REQUIRE(bad.errors.size() == 1);

    BoxParseResult mixed = parse_box_tokens(
        "<|box_start|>(1,2),(3,4)<|box_end|>ok <|box_start|>(oops<|box_end|>bad");
    REQUIRE(mixed.boxes.size() == 1);
    REQUIRE(mixed.errors.size() == 1);

    // coordinates out of order fail per-span, not globally
    BoxParseResult inv = parse_box_tokens("<|box_start|>(9,9),(1,1)<|box_end|>x");
    REQUIRE(inv.boxes.empty());
    REQUIRE(inv.errors.size() == 1);
}

TEST_CASE("config defaults validate and overrides apply") {
    EngineConfig c;
    REQUIRE(c.validate().empty());
    REQUIRE(c.w1 == 0.4);
    REQUIRE(c.tau == 0.85);
    REQUIRE(c.tau_text == 0.7);
    REQUIRE(c.dpcs_text == 25);

    config_apply_json(c, json::parse(R"({"tau":0.9,"seed":7,"w_struct":0.25})"));
    REQUIRE(c.tau == 0.9);
    REQUIRE(c.seed == 7);
    REQUIRE(c.w_struct == 0.25);
    REQUIRE(c.w_text == 1.0);  // untouched

    EngineConfig bad;
    bad.w1 = 0.9;  // weights no longer sum to 1
    REQUIRE_FALSE(bad.validate().empty());
    bad = EngineConfig{};
    bad.dpcs_low = 90;  // low >= high
    REQUIRE_FALSE(bad.validate().empty());
}

TEST_CASE("config files accept json and a flat toml subset") {
    const std::string dir = std::filesystem::temp_directory_path().string();
    {
        std::ofstream f(dir + "/df_cfg.json");
        f << R"({"tau": 0.8, "dpcs_weights": {"text": 30}})";
    }
    EngineConfig cj = load_config_file(dir + "/df_cfg.json");
    REQUIRE(cj.tau == 0.8);
    REQUIRE(cj.dpcs_text == 30);
    REQUIRE(cj.dpcs_layout == 15);

    {
        std::ofstream f(dir + "/df_cfg.toml");
        f << "# comment\n"
             "tau = 0.75\n"
             "seed = 11\n"
             "\n"
             "[dpcs_weights]\n"
             "semantic = 12.5\n";
    }
    EngineConfig ct = load_config_file(dir + "/df_cfg.toml");
    REQUIRE(ct.tau == 0.75);
    REQUIRE(ct.seed == 11);
    REQUIRE(ct.dpcs_semantic == 12.5);
}
