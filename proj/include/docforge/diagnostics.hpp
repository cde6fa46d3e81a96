// Error classification, the composite page-quality score, and corpus-level
// weakness aggregation. Classification works on sample-level signals rather
// than raw candidates so the cascade can reuse its screening work.
#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "docforge/corpus.hpp"
#include "docforge/metrics.hpp"

namespace docforge::diagnostics {

// ---------------------------------------------------------------------------
// Confusable characters

// Canonical form under the common OCR confusions: rn/m, O/0, l/1. Two texts
// that agree after this mapping differ only by lookalike glyphs.
inline std::string fold_confusables(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) {
        if (s[i] == 'r' && i + 1 < s.size() && s[i + 1] == 'n') {
            out.push_back('m');
            i += 2;
            continue;
        }
        if (s[i] == 'O') out.push_back('0');
        else if (s[i] == 'l') out.push_back('1');
        else out.push_back(s[i]);
        ++i;
    }
    return out;
}

inline bool confusable_only_difference(std::string_view a, std::string_view b) {
    if (a == b) return false;
    return fold_confusables(a) == fold_confusables(b);
}

// ---------------------------------------------------------------------------
// Classification

// Aggregated per-sample signals, computed once by the screening layer.
struct SampleSignals {
    size_t candidate_count = 0;
    size_t blank_count = 0;
    size_t gibberish_count = 0;
    size_t ast_valid_count = 0;
    size_t grid_closed_count = 0;
    size_t widths_uniform_count = 0;
    size_t heading_valid_count = 0;
    size_t list_valid_count = 0;
    size_t normalization_violations = 0;  // summed over candidates
    double min_reading_order = 1.0;
    bool boxes_present = false;
    bool confusable_pair = false;  // some candidate pair differs only by lookalikes
    double mean_ed = 0.0;
    double mean_iou = 1.0;
    double mean_divergence = 0.0;
};

// Ordered, deduplicated "category:sub-code" tags. Categories can stack: a
// sample may be both structurally broken and textually divergent.
inline std::vector<std::string> classify_errors(const SampleSignals& s, const EngineConfig& cfg) {
    std::vector<std::string> tags;
    const size_t n = s.candidate_count;

    if (n > 0 && s.blank_count == n) {
        tags.push_back("recognition:blank");
        return tags;
    }
    if (n > 0 && s.blank_count + s.gibberish_count == n) {
        tags.push_back("recognition:gibberish");
        return tags;
    }

    if (s.confusable_pair) tags.push_back("recognition:confusable-chars");
    if (s.mean_ed > cfg.recognition_ed) tags.push_back("recognition:text-divergence");

    if (s.min_reading_order < cfg.order_floor) tags.push_back("relational:reading-order");
    if (s.boxes_present && s.mean_iou < cfg.layout_floor)
        tags.push_back("relational:layout-mismatch");

    if (s.ast_valid_count < n) tags.push_back("structural:formula-ast");
    if (s.grid_closed_count < n || s.widths_uniform_count < n)
        tags.push_back("structural:table-grid");
    if (s.heading_valid_count < n || s.list_valid_count < n)
        tags.push_back("structural:hierarchy");

    // format issues only count as such when the underlying text agrees;
    // otherwise the recognition tag already owns the sample
    if (s.normalization_violations > 0 && s.mean_ed <= cfg.format_ed)
        tags.push_back("format:normalization");

    std::sort(tags.begin(), tags.end());
    tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
    return tags;
}

// ---------------------------------------------------------------------------
// Composite page score

struct DpcsSubscores {
    double text = 1.0;
    double layout = 1.0;
    double order = 1.0;
    double structure = 1.0;
    double format = 1.0;
    double semantic = 1.0;
};

struct DpcsResult {
    double score = 0.0;   // 0..100
    std::string tier;     // "high" / "medium" / "low"
    DpcsSubscores parts;
};

inline DpcsResult dpcs_score(const DpcsSubscores& s, const EngineConfig& cfg) {
    DpcsResult r;
    r.parts = s;
    r.score = cfg.dpcs_text * s.text + cfg.dpcs_layout * s.layout + cfg.dpcs_order * s.order +
              cfg.dpcs_structure * s.structure + cfg.dpcs_format * s.format +
              cfg.dpcs_semantic * s.semantic;
    if (r.score >= cfg.dpcs_high) r.tier = "high";
    else if (r.score >= cfg.dpcs_low) r.tier = "medium";
    else r.tier = "low";
    return r;
}

// ---------------------------------------------------------------------------
// Corpus-level weakness aggregation

struct SourceStat {
    size_t samples = 0;      // verdicts carrying an edit-distance entry for the source
    double mean_ed = 0.0;
};

struct WeaknessReport {
    size_t total = 0;
    std::map<std::string, size_t> by_state;     // pass/pending/reject
    std::map<std::string, size_t> by_layer;     // L1/L2/L3
    std::map<std::string, size_t> by_tag;       // full "category:sub" tags
    std::map<std::string, size_t> by_category;  // category prefix only
    std::map<std::string, SourceStat> by_source;
};

// Verdicts missing an evidence key simply do not contribute to that part of
// the report; nothing is imputed.
inline WeaknessReport aggregate_weakness(const std::vector<VerdictRecord>& verdicts) {
    WeaknessReport rep;
    rep.total = verdicts.size();
    std::map<std::string, double> ed_sum;
    for (const VerdictRecord& v : verdicts) {
        rep.by_state[to_string(v.state)] += 1;
        rep.by_layer[to_string(v.layer)] += 1;
        for (const std::string& tag : v.error_tags) {
            rep.by_tag[tag] += 1;
            rep.by_category[tag.substr(0, tag.find(':'))] += 1;
        }
        for (const auto& [key, value] : v.evidence) {
            constexpr std::string_view prefix = "source_ed:";
            if (key.size() > prefix.size() && key.compare(0, prefix.size(), prefix) == 0) {
                const std::string source = key.substr(prefix.size());
                rep.by_source[source].samples += 1;
                ed_sum[source] += value;
            }
        }
    }
    for (auto& [source, stat] : rep.by_source)
        if (stat.samples > 0) stat.mean_ed = ed_sum[source] / static_cast<double>(stat.samples);
    return rep;
}

inline json to_json(const WeaknessReport& rep) {
    json sources = json::object();
    for (const auto& [name, stat] : rep.by_source)
        sources[name] = {{"samples", stat.samples}, {"mean_ed", stat.mean_ed}};
    return json{{"total", rep.total},
                {"by_state", rep.by_state},
                {"by_layer", rep.by_layer},
                {"by_tag", rep.by_tag},
                {"by_category", rep.by_category},
                {"by_source", sources}};
}

}  // namespace docforge::diagnostics
