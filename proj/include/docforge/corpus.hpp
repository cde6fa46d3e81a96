// Data model shared by every stage: annotation records, verdicts, engine
// configuration, and the JSONL readers/writers that move them around.
#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "docforge/util.hpp"

namespace docforge {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Geometry

struct BoundingBox {
    // Pixel coordinates, half-open in both axes: width = x2 - x1.
    int x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    bool valid() const { return x1 >= 0 && y1 >= 0 && x1 <= x2 && y1 <= y2; }
    long long area() const {
        return static_cast<long long>(x2 - x1) * static_cast<long long>(y2 - y1);
    }
    double cx() const { return 0.5 * (x1 + x2); }
    double cy() const { return 0.5 * (y1 + y2); }
    int width() const { return x2 - x1; }

    bool operator==(const BoundingBox&) const = default;
};

struct BoxedText {
    BoundingBox box;
    std::string text;
    bool operator==(const BoxedText&) const = default;
};

// ---------------------------------------------------------------------------
// Records

struct CandidateAnnotation {
    std::string source_id;
    std::string markdown;
    std::vector<BoxedText> boxes;  // empty when the source emits no geometry
};

struct ReferenceAnnotation {
    std::string markdown;
    std::vector<BoxedText> boxes;
};

// One record is one page image plus everything the sources said about it.
struct SampleRecord {
    std::string id;
    std::string image_ref;  // opaque; the engine never opens it
    std::vector<CandidateAnnotation> candidates;
    std::optional<ReferenceAnnotation> reference;
    std::map<std::string, std::string> metadata;
};

enum class VerdictState { Pass, Pending, Reject };
enum class CascadeLayer { L1, L2, L3 };

inline std::string to_string(VerdictState s) {
    switch (s) {
        case VerdictState::Pass: return "pass";
        case VerdictState::Pending: return "pending";
        default: return "reject";
    }
}
inline std::string to_string(CascadeLayer l) {
    switch (l) {
        case CascadeLayer::L1: return "L1";
        case CascadeLayer::L2: return "L2";
        default: return "L3";
    }
}

struct ModalityConfidence {
    double text = 1.0;
    double formula = 1.0;
    double table = 1.0;
    double layout = 1.0;

    double min_value() const {
        double m = text;
        if (formula < m) m = formula;
        if (table < m) m = table;
        if (layout < m) m = layout;
        return m;
    }

    double mean_value() const { return (text + formula + table + layout) / 4.0; }
};

struct VerdictRecord {
    std::string sample_id;
    VerdictState state = VerdictState::Pending;
    CascadeLayer layer = CascadeLayer::L1;
    std::optional<double> consensus;               // absent when L1 rejected
    std::optional<ModalityConfidence> confidence;  // required when Pending
    std::vector<std::string> error_tags;           // "category" or "category:sub-code"
    std::map<std::string, double> evidence;        // metric name -> value
};

// ---------------------------------------------------------------------------
// Configuration

struct RedBounds {
    double low = 0.0;
    double high = 0.3;
};

struct EngineConfig {
    // consensus C = w1*(1-ED) + w2*IoU + w3*(1-D), gated at tau
    double w1 = 0.4, w2 = 0.3, w3 = 0.3;
    double tau = 0.85;

    // reward constants
    double alpha = 0.3;     // compile-vs-content split in the formula reward
    double beta = 0.4;      // shape-vs-tree split in the table reward
    double gamma = 0.1;     // row-count decay in the shape score
    double tau_text = 0.7;  // text floor below which structure rewards are zeroed
    double epsilon = 1e-6;

    // advantage weights, text : formula : table : struct
    double w_text = 1.0, w_formula = 0.8, w_table = 0.8, w_struct = 0.5;

    // repair edit-distance bounds per modality
    RedBounds red_text, red_formula, red_table, red_layout;

    // composite page-score weights and tier cutoffs
    double dpcs_text = 25, dpcs_layout = 15, dpcs_order = 15;
    double dpcs_structure = 20, dpcs_format = 15, dpcs_semantic = 10;
    double dpcs_high = 80, dpcs_low = 60;

    // arbitration floors
    double pass_floor = 0.9;
    double reject_floor = 0.3;
    size_t min_candidates = 2;  // below this, consensus is skipped entirely

    // diagnostic thresholds
    double recognition_ed = 0.1;  // mean edit distance above this tags Recognition
    double order_floor = 0.9;     // reading order below this tags Relational
    double layout_floor = 0.5;    // layout agreement below this tags Relational
    double format_ed = 0.05;      // max disagreement for "format-only" classification

    uint64_t seed = 0;

    std::vector<std::string> validate() const {
        std::vector<std::string> errs;
        if (std::abs(w1 + w2 + w3 - 1.0) > 1e-9)
            errs.push_back("consensus weights w1+w2+w3 must sum to 1");
        auto in01 = [&](double v, const char* name) {
            if (!(v >= 0.0 && v <= 1.0)) errs.push_back(std::string(name) + " must be in [0,1]");
        };
        in01(tau, "tau");
        in01(alpha, "alpha");
        in01(beta, "beta");
        in01(tau_text, "tau_text");
        in01(pass_floor, "pass_floor");
        in01(reject_floor, "reject_floor");
        in01(recognition_ed, "recognition_ed");
        in01(order_floor, "order_floor");
        in01(layout_floor, "layout_floor");
        in01(format_ed, "format_ed");
        if (gamma < 0) errs.push_back("gamma must be >= 0");
        if (epsilon <= 0) errs.push_back("epsilon must be > 0");
        for (const RedBounds* b : {&red_text, &red_formula, &red_table, &red_layout}) {
            if (!(b->low >= 0.0 && b->low <= b->high && b->high <= 1.0))
                errs.push_back("red bounds must satisfy 0 <= low <= high <= 1");
        }
        if (!(dpcs_low >= 0.0 && dpcs_low < dpcs_high && dpcs_high <= 100.0))
            errs.push_back("dpcs cutoffs must satisfy 0 <= low < high <= 100");
        if (min_candidates < 1) errs.push_back("min_candidates must be >= 1");
        return errs;
    }
};

// ---------------------------------------------------------------------------
// JSON (de)serialization
//
// All wire schemas use lowercase snake_case keys. nlohmann::json keeps object
// keys sorted, which makes every emitted line byte-stable.

inline json to_json(const BoxedText& bt) {
    return json{{"box", {bt.box.x1, bt.box.y1, bt.box.x2, bt.box.y2}}, {"text", bt.text}};
}

inline json to_json(const CandidateAnnotation& c) {
    json j{{"source_id", c.source_id}, {"markdown", c.markdown}};
    if (!c.boxes.empty()) {
        json arr = json::array();
        for (const auto& b : c.boxes) arr.push_back(to_json(b));
        j["boxes"] = arr;
    }
    return j;
}

inline json to_json(const SampleRecord& r) {
    json j{{"id", r.id}};
    if (!r.image_ref.empty()) j["image_ref"] = r.image_ref;
    json cands = json::array();
    for (const auto& c : r.candidates) cands.push_back(to_json(c));
    j["candidates"] = cands;
    if (r.reference) {
        json ref{{"markdown", r.reference->markdown}};
        if (!r.reference->boxes.empty()) {
            json arr = json::array();
            for (const auto& b : r.reference->boxes) arr.push_back(to_json(b));
            ref["boxes"] = arr;
        }
        j["reference"] = ref;
    }
    if (!r.metadata.empty()) j["metadata"] = r.metadata;
    return j;
}

inline json to_json(const VerdictRecord& v) {
    json j{{"sample_id", v.sample_id},
           {"state", to_string(v.state)},
           {"layer", to_string(v.layer)},
           {"error_tags", v.error_tags},
           {"evidence", v.evidence}};
    if (v.consensus) j["consensus"] = *v.consensus;
    if (v.confidence) {
        j["modality_confidence"] = json{{"text", v.confidence->text},
                                        {"formula", v.confidence->formula},
                                        {"table", v.confidence->table},
                                        {"layout", v.confidence->layout}};
    }
    return j;
}

namespace detail {

inline void parse_boxes(const json& j, const char* field, std::vector<BoxedText>& out) {
    if (!j.contains("boxes")) return;
    const json& arr = j.at("boxes");
    if (!arr.is_array()) throw std::runtime_error(std::string(field) + ".boxes must be an array");
    for (const json& e : arr) {
        if (!e.is_object() || !e.contains("box") || !e.contains("text"))
            throw std::runtime_error(std::string(field) + ".boxes entries need box and text");
        const json& b = e.at("box");
        if (!b.is_array() || b.size() != 4)
            throw std::runtime_error(std::string(field) + ".boxes box must be [x1,y1,x2,y2]");
        BoxedText bt;
        bt.box = {b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()};
        if (!bt.box.valid())
            throw std::runtime_error(std::string(field) + ".boxes box coordinates out of order");
        bt.text = e.at("text").get<std::string>();
        out.push_back(std::move(bt));
    }
}

}  // namespace detail

inline SampleRecord sample_from_json(const json& j) {
    if (!j.is_object()) throw std::runtime_error("record must be a JSON object");
    SampleRecord r;
    if (!j.contains("id") || !j.at("id").is_string() || j.at("id").get<std::string>().empty())
        throw std::runtime_error("field \"id\" missing or empty");
    r.id = j.at("id").get<std::string>();
    if (j.contains("image_ref")) r.image_ref = j.at("image_ref").get<std::string>();
    if (!j.contains("candidates") || !j.at("candidates").is_array() || j.at("candidates").empty())
        throw std::runtime_error("field \"candidates\" missing or empty");
    for (const json& c : j.at("candidates")) {
        CandidateAnnotation cand;
        if (!c.contains("source_id") || c.at("source_id").get<std::string>().empty())
            throw std::runtime_error("field \"candidates.source_id\" missing or empty");
        cand.source_id = c.at("source_id").get<std::string>();
        if (!c.contains("markdown") || !c.at("markdown").is_string())
            throw std::runtime_error("field \"candidates.markdown\" missing");
        cand.markdown = c.at("markdown").get<std::string>();
        detail::parse_boxes(c, "candidates", cand.boxes);
        r.candidates.push_back(std::move(cand));
    }
    if (j.contains("reference")) {
        const json& ref = j.at("reference");
        if (!ref.is_object() || !ref.contains("markdown"))
            throw std::runtime_error("field \"reference.markdown\" missing");
        ReferenceAnnotation ra;
        ra.markdown = ref.at("markdown").get<std::string>();
        detail::parse_boxes(ref, "reference", ra.boxes);
        r.reference = std::move(ra);
    }
    if (j.contains("metadata")) {
        for (auto it = j.at("metadata").begin(); it != j.at("metadata").end(); ++it)
            r.metadata[it.key()] = it.value().get<std::string>();
    }
    return r;
}

inline VerdictRecord verdict_from_json(const json& j) {
    VerdictRecord v;
    v.sample_id = j.at("sample_id").get<std::string>();
    const std::string state = j.at("state").get<std::string>();
    if (state == "pass") v.state = VerdictState::Pass;
    else if (state == "pending") v.state = VerdictState::Pending;
    else if (state == "reject") v.state = VerdictState::Reject;
    else throw std::runtime_error("field \"state\" must be pass/pending/reject");
    const std::string layer = j.at("layer").get<std::string>();
    if (layer == "L1") v.layer = CascadeLayer::L1;
    else if (layer == "L2") v.layer = CascadeLayer::L2;
    else if (layer == "L3") v.layer = CascadeLayer::L3;
    else throw std::runtime_error("field \"layer\" must be L1/L2/L3");
    if (j.contains("consensus")) v.consensus = j.at("consensus").get<double>();
    if (j.contains("modality_confidence")) {
        const json& m = j.at("modality_confidence");
        v.confidence = ModalityConfidence{m.at("text").get<double>(), m.at("formula").get<double>(),
                                          m.at("table").get<double>(), m.at("layout").get<double>()};
    }
    if (j.contains("error_tags"))
        v.error_tags = j.at("error_tags").get<std::vector<std::string>>();
    if (j.contains("evidence")) {
        for (auto it = j.at("evidence").begin(); it != j.at("evidence").end(); ++it)
            v.evidence[it.key()] = it.value().get<double>();
    }
    if (v.state == VerdictState::Reject && v.layer == CascadeLayer::L1 && v.consensus)
        throw std::runtime_error("L1 rejection must not carry a consensus score");
    if (v.state == VerdictState::Pending && !v.confidence)
        throw std::runtime_error("pending verdict must carry modality_confidence");
    return v;
}

// ---------------------------------------------------------------------------
// JSONL corpus IO

struct LineError {
    size_t line = 0;  // 1-based
    std::string message;
};

struct LoadResult {
    std::vector<SampleRecord> records;
    std::vector<LineError> errors;
    size_t line_count = 0;  // records.size() + errors.size() == line_count
};

// Streaming reader: on_record/on_error fire in file order from the calling
// thread, so downstream fan-out stays the caller's decision.
inline size_t for_each_record_line(std::istream& in,
                                   const std::function<void(size_t, SampleRecord&&)>& on_record,
                                   const std::function<void(const LineError&)>& on_error) {
    std::string line;
    size_t line_no = 0;
    std::map<std::string, size_t> id_lines;
    while (std::getline(in, line)) {
        ++line_no;
        if (util::is_blank(line)) {
            on_error({line_no, "empty line"});
            continue;
        }
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            on_error({line_no, "invalid JSON"});
            continue;
        }
        try {
            SampleRecord r = sample_from_json(j);
            auto [it, fresh] = id_lines.emplace(r.id, line_no);
            if (!fresh) {
                on_error({line_no, "duplicate id \"" + r.id + "\" (first seen at line " +
                                       std::to_string(it->second) + ")"});
                continue;
            }
            on_record(line_no, std::move(r));
        } catch (const std::exception& e) {
            on_error({line_no, e.what()});
        }
    }
    return line_no;
}

inline LoadResult load_corpus(std::istream& in) {
    LoadResult res;
    res.line_count = for_each_record_line(
        in, [&](size_t, SampleRecord&& r) { res.records.push_back(std::move(r)); },
        [&](const LineError& e) { res.errors.push_back(e); });
    return res;
}

inline LoadResult load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open corpus file: " + path);
    return load_corpus(in);
}

inline size_t write_verdicts(const std::vector<VerdictRecord>& verdicts, std::ostream& out) {
    for (const auto& v : verdicts) out << to_json(v).dump() << '\n';
    return verdicts.size();
}

inline size_t write_verdicts(const std::vector<VerdictRecord>& verdicts, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file: " + path);
    return write_verdicts(verdicts, out);
}

struct VerdictLoadResult {
    std::vector<VerdictRecord> verdicts;
    std::vector<LineError> errors;
};

inline VerdictLoadResult load_verdicts(std::istream& in) {
    VerdictLoadResult res;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (util::is_blank(line)) {
            res.errors.push_back({line_no, "empty line"});
            continue;
        }
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            res.errors.push_back({line_no, "invalid JSON"});
            continue;
        }
        try {
            res.verdicts.push_back(verdict_from_json(j));
        } catch (const std::exception& e) {
            res.errors.push_back({line_no, e.what()});
        }
    }
    return res;
}

inline VerdictLoadResult load_verdicts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open verdict file: " + path);
    return load_verdicts(in);
}

// ---------------------------------------------------------------------------
// Box-token parsing
//
// Grounded spans arrive inline as
//   <|box_start|>(x1,y1),(x2,y2)<|box_end|>text
// with the text running until the next span or end of input.

struct BoxParseResult {
    std::vector<BoxedText> boxes;
    std::vector<std::string> errors;  // one entry per malformed span
};

namespace detail {

inline bool parse_int_at(std::string_view s, size_t& i, int& out) {
    size_t j = i;
    while (j < s.size() && s[j] >= '0' && s[j] <= '9') ++j;
    if (j == i || j - i > 9) return false;
    int v = 0;
    for (size_t k = i; k < j; ++k) v = v * 10 + (s[k] - '0');
    i = j;
    out = v;
    return true;
}

}  // namespace detail

inline BoxParseResult parse_box_tokens(std::string_view text) {
    static constexpr std::string_view kStart = "<|box_start|>";
    static constexpr std::string_view kEnd = "<|box_end|>";
    BoxParseResult res;
    size_t pos = 0;
    while (true) {
        const size_t start = text.find(kStart, pos);
        if (start == std::string_view::npos) break;
        size_t i = start + kStart.size();
        BoundingBox box;
        auto expect = [&](char c) {
            if (i < text.size() && text[i] == c) { ++i; return true; }
            return false;
        };
        bool ok = expect('(') && detail::parse_int_at(text, i, box.x1) && expect(',') &&
                  detail::parse_int_at(text, i, box.y1) && expect(')') && expect(',') &&
                  expect('(') && detail::parse_int_at(text, i, box.x2) && expect(',') &&
                  detail::parse_int_at(text, i, box.y2) && expect(')');
        if (ok && text.compare(i, kEnd.size(), kEnd) != 0) ok = false;
        if (ok && !box.valid()) ok = false;
        if (!ok) {
            // report this span, resume scanning right after the start marker
            const size_t next = text.find(kStart, start + kStart.size());
            const size_t span_end = next == std::string_view::npos ? text.size() : next;
            res.errors.push_back("malformed box span at offset " + std::to_string(start) + ": " +
                                 std::string(text.substr(start, std::min<size_t>(span_end - start, 48))));
            pos = start + kStart.size();
            continue;
        }
        i += kEnd.size();
        const size_t next = text.find(kStart, i);
        const size_t content_end = next == std::string_view::npos ? text.size() : next;
        res.boxes.push_back({box, util::trim(text.substr(i, content_end - i))});
        pos = content_end;
    }
    return res;
}

// ---------------------------------------------------------------------------
// EngineConfig <-> JSON

inline json to_json(const EngineConfig& c) {
    return json{
        {"w1", c.w1}, {"w2", c.w2}, {"w3", c.w3}, {"tau", c.tau},
        {"alpha", c.alpha}, {"beta", c.beta}, {"gamma", c.gamma},
        {"tau_text", c.tau_text}, {"epsilon", c.epsilon},
        {"w_text", c.w_text}, {"w_formula", c.w_formula},
        {"w_table", c.w_table}, {"w_struct", c.w_struct},
        {"red_bounds",
         {{"text", {c.red_text.low, c.red_text.high}},
          {"formula", {c.red_formula.low, c.red_formula.high}},
          {"table", {c.red_table.low, c.red_table.high}},
          {"layout", {c.red_layout.low, c.red_layout.high}}}},
        {"dpcs_weights",
         {{"text", c.dpcs_text}, {"layout", c.dpcs_layout}, {"order", c.dpcs_order},
          {"structure", c.dpcs_structure}, {"format", c.dpcs_format},
          {"semantic", c.dpcs_semantic}}},
        {"dpcs_high", c.dpcs_high}, {"dpcs_low", c.dpcs_low},
        {"pass_floor", c.pass_floor}, {"reject_floor", c.reject_floor},
        {"min_candidates", c.min_candidates},
        {"recognition_ed", c.recognition_ed}, {"order_floor", c.order_floor},
        {"layout_floor", c.layout_floor}, {"format_ed", c.format_ed},
        {"seed", c.seed}};
}

inline void config_apply_json(EngineConfig& c, const json& j) {
    auto num = [&](const char* key, double& field) {
        if (j.contains(key)) field = j.at(key).get<double>();
    };
    num("w1", c.w1); num("w2", c.w2); num("w3", c.w3); num("tau", c.tau);
    num("alpha", c.alpha); num("beta", c.beta); num("gamma", c.gamma);
    num("tau_text", c.tau_text); num("epsilon", c.epsilon);
    num("w_text", c.w_text); num("w_formula", c.w_formula);
    num("w_table", c.w_table); num("w_struct", c.w_struct);
    if (j.contains("red_bounds")) {
        const json& rb = j.at("red_bounds");
        auto bounds = [&](const char* key, RedBounds& b) {
            if (rb.contains(key)) {
                b.low = rb.at(key).at(0).get<double>();
                b.high = rb.at(key).at(1).get<double>();
            }
        };
        bounds("text", c.red_text);
        bounds("formula", c.red_formula);
        bounds("table", c.red_table);
        bounds("layout", c.red_layout);
    }
    if (j.contains("dpcs_weights")) {
        const json& dw = j.at("dpcs_weights");
        auto w = [&](const char* key, double& field) {
            if (dw.contains(key)) field = dw.at(key).get<double>();
        };
        w("text", c.dpcs_text); w("layout", c.dpcs_layout); w("order", c.dpcs_order);
        w("structure", c.dpcs_structure); w("format", c.dpcs_format);
        w("semantic", c.dpcs_semantic);
    }
    num("dpcs_high", c.dpcs_high); num("dpcs_low", c.dpcs_low);
    num("pass_floor", c.pass_floor); num("reject_floor", c.reject_floor);
    if (j.contains("min_candidates")) c.min_candidates = j.at("min_candidates").get<size_t>();
    num("recognition_ed", c.recognition_ed); num("order_floor", c.order_floor);
    num("layout_floor", c.layout_floor); num("format_ed", c.format_ed);
    if (j.contains("seed")) c.seed = j.at("seed").get<uint64_t>();
}

// Loads a config file. JSON is detected by a leading '{'; anything else is
// parsed as flat TOML-style "key = value" lines (nested tables not needed:
// the schema mirrors EngineConfig's flat field list plus two small maps).
inline EngineConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string body = buf.str();
    EngineConfig c;
    size_t first = body.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && body[first] == '{') {
        config_apply_json(c, json::parse(body));
        return c;
    }
    // TOML subset: comments, [section] headers (flattened as "section.key"),
    // key = number. Enough to mirror the JSON schema's scalar fields.
    json j = json::object();
    std::string section;
    for (const std::string& raw : util::split_lines(body)) {
        std::string line = util::trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[' && line.back() == ']') {
            section = util::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config line is not key = value: " + line);
        const std::string key = util::trim(line.substr(0, eq));
        const std::string val = util::trim(line.substr(eq + 1));
        json parsed = json::parse(val, nullptr, false);
        if (parsed.is_discarded())
            throw std::runtime_error("config value for " + key + " is not a number/array");
        if (section.empty()) j[key] = parsed;
        else j[section][key] = parsed;
    }
    config_apply_json(c, j);
    return c;
}

}  // namespace docforge
