// Synthetic page generation with self-labeling perturbations. Every template
// emits canonical markup (zero normalization violations) plus one bounding box
// per block, so a clean page routes straight through the cascade. Each
// perturbation is constructed to trip a specific classifier signal, which is
// what makes the generated labels trustworthy.
#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "docforge/cascade.hpp"
#include "docforge/corpus.hpp"
#include "docforge/markup.hpp"
#include "docforge/util.hpp"

namespace docforge::augment {

// ---------------------------------------------------------------------------
// Synthetic pages

// One generated page: canonical markdown pieces (one per block) plus a box
// per piece on a nominal 1000x1400 canvas.
struct SyntheticPage {
    std::string template_id;
    std::vector<std::string> pieces;
    std::vector<bool> is_list;  // drives the single-newline join of list runs
    std::vector<BoundingBox> boxes;

    std::string markdown() const {
        std::string out;
        for (size_t i = 0; i < pieces.size(); ++i) {
            if (i) out += (is_list[i] && is_list[i - 1]) ? "\n" : "\n\n";
            out += pieces[i];
        }
        return out;
    }

    std::vector<BoxedText> boxed_text() const {
        std::vector<BoxedText> out;
        out.reserve(pieces.size());
        for (size_t i = 0; i < pieces.size(); ++i)
            out.push_back({boxes[i], markup::strip_markup(pieces[i])});
        return out;
    }
};

namespace detail {

// Content pool. Every entry carries at least one of the lookalike glyphs
// (l, O, rn) so a confusable perturbation always has a target.
inline const std::vector<std::string>& word_pool() {
    static const std::vector<std::string> pool = {
        "kernel", "label",  "column", "module", "Overflow", "signal", "lattice",
        "normal", "manual", "learn",  "model",  "panel",    "level",  "table",
        "cell",   "total",  "value",  "scale",  "Olsen",    "align",
    };
    return pool;
}

inline const std::vector<std::string>& script_pool() {
    static const std::vector<std::string> pool = {
        "数据", "表格", "模型", "σημα", "λόγος", "Ωμέγα",
    };
    return pool;
}

inline std::string pick(const std::vector<std::string>& pool, util::SeededRng& rng) {
    return pool[rng.uniform_index(pool.size())];
}

inline std::string sentence(util::SeededRng& rng, size_t words, bool mixed_script) {
    std::string s;
    for (size_t i = 0; i < words; ++i) {
        if (i) s.push_back(' ');
        s += pick(word_pool(), rng);
    }
    s += " " + std::to_string(rng.uniform_index(90) + 10);
    if (mixed_script) s += " " + pick(script_pool(), rng);
    s.push_back('.');
    return s;
}

// Vertical stack of full-width blocks.
inline void stack_boxes(SyntheticPage& page) {
    page.boxes.clear();
    int y = 40;
    for (size_t i = 0; i < page.pieces.size(); ++i) {
        page.boxes.push_back({50, y, 950, y + 70});
        y += 90;
    }
}

}  // namespace detail

inline SyntheticPage make_table_page(util::SeededRng& rng, size_t rows, size_t cols) {
    SyntheticPage page;
    page.pieces.push_back("# " + detail::pick(detail::word_pool(), rng) + " report");
    page.pieces.push_back(detail::sentence(rng, 6, false));
    markup::TableGrid grid;
    for (size_t r = 0; r < rows; ++r) {
        grid.rows.emplace_back();
        for (size_t c = 0; c < cols; ++c) {
            std::string text = r == 0 ? "H" + std::to_string(c + 1)
                                      : detail::pick(detail::word_pool(), rng) + " " +
                                            std::to_string(rng.uniform_index(500));
            grid.rows.back().push_back({text, 1, 1, r == 0});
        }
    }
    markup::resolve_spans(grid);
    page.pieces.push_back(markup::serialize_table(grid));
    page.pieces.push_back(detail::sentence(rng, 5, false));
    page.is_list.assign(page.pieces.size(), false);
    detail::stack_boxes(page);
    return page;
}

inline SyntheticPage make_align_page(util::SeededRng& rng, size_t rows) {
    SyntheticPage page;
    page.pieces.push_back("# " + detail::pick(detail::word_pool(), rng) + " derivation");
    page.pieces.push_back(detail::sentence(rng, 6, false));
    std::string body = "\\begin{align} ";
    for (size_t r = 0; r < rows; ++r) {
        if (r) body += " \\\\ ";
        body += "x_{" + std::to_string(r + 1) + "} &= " + std::to_string(rng.uniform_index(9) + 2) +
                " y_{" + std::to_string(r + 1) + "}";
    }
    body += " \\end{align}";
    page.pieces.push_back("$$" + body + "$$");
    page.pieces.push_back(detail::sentence(rng, 5, false));
    page.is_list.assign(page.pieces.size(), false);
    detail::stack_boxes(page);
    return page;
}

inline SyntheticPage make_nested_list_page(util::SeededRng& rng, size_t depth, size_t items) {
    SyntheticPage page;
    std::vector<bool> is_list;
    page.pieces.push_back("# " + detail::pick(detail::word_pool(), rng) + " checklist");
    is_list.push_back(false);
    page.pieces.push_back(detail::sentence(rng, 6, false));
    is_list.push_back(false);
    for (size_t level = 0; level < depth; ++level) {
        for (size_t k = 0; k < items; ++k) {
            page.pieces.push_back(std::string(level * 2, ' ') + "- " +
                                  detail::pick(detail::word_pool(), rng) + " " +
                                  std::to_string(rng.uniform_index(100)));
            is_list.push_back(true);
        }
    }
    page.is_list = std::move(is_list);
    detail::stack_boxes(page);
    return page;
}

inline SyntheticPage make_mixed_script_page(util::SeededRng& rng, size_t paras) {
    SyntheticPage page;
    page.pieces.push_back("# " + detail::pick(detail::word_pool(), rng) + " survey");
    for (size_t p = 0; p < paras; ++p) {
        std::string text = detail::sentence(rng, 7, true);
        if (p % 2 == 1) text += " $x_{" + std::to_string(p) + "}$ " + detail::sentence(rng, 3, true);
        page.pieces.push_back(text);
    }
    page.is_list.assign(page.pieces.size(), false);
    detail::stack_boxes(page);
    return page;
}

// The heading sits over the left column; the inter-column gap is wide
// relative to the box widths so column clustering keeps the halves apart.
inline SyntheticPage make_two_column_page(util::SeededRng& rng, size_t rows) {
    SyntheticPage page;
    page.pieces.push_back("# " + detail::pick(detail::word_pool(), rng) + " overview");
    page.is_list.push_back(false);
    page.boxes.push_back({50, 40, 300, 110});
    int y = 140;
    for (size_t r = 0; r < rows; ++r) {  // left column, top to bottom
        page.pieces.push_back(detail::sentence(rng, 6, false));
        page.is_list.push_back(false);
        page.boxes.push_back({50, y, 300, y + 70});
        y += 90;
    }
    y = 140;
    for (size_t r = 0; r < rows; ++r) {  // then the right column
        page.pieces.push_back(detail::sentence(rng, 6, false));
        page.is_list.push_back(false);
        page.boxes.push_back({700, y, 950, y + 70});
        y += 90;
    }
    return page;
}

// Template ids look like "table:rows=4,cols=3"; params may be omitted.
inline SyntheticPage make_template(std::string_view id, util::SeededRng& rng) {
    std::string name(id);
    std::map<std::string, size_t> params;
    if (size_t colon = name.find(':'); colon != std::string::npos) {
        std::string rest = name.substr(colon + 1);
        name = name.substr(0, colon);
        size_t at = 0;
        while (at < rest.size()) {
            size_t comma = rest.find(',', at);
            if (comma == std::string::npos) comma = rest.size();
            std::string kv = rest.substr(at, comma - at);
            size_t eq = kv.find('=');
            if (eq == std::string::npos) throw std::runtime_error("bad template param: " + kv);
            params[kv.substr(0, eq)] = static_cast<size_t>(std::stoul(kv.substr(eq + 1)));
            at = comma + 1;
        }
    }
    auto get = [&](const char* key, size_t fallback) {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    };
    SyntheticPage page;
    if (name == "table") page = make_table_page(rng, get("rows", 4), get("cols", 3));
    else if (name == "align") page = make_align_page(rng, get("rows", 3));
    else if (name == "nested-list") page = make_nested_list_page(rng, get("depth", 3), get("items", 2));
    else if (name == "mixed-script") page = make_mixed_script_page(rng, get("paras", 3));
    else if (name == "two-column") page = make_two_column_page(rng, get("rows", 3));
    else throw std::runtime_error("unknown template: " + std::string(id));
    page.template_id = std::string(id);
    return page;
}

inline const std::vector<std::string>& template_names() {
    static const std::vector<std::string> names = {"table", "align", "nested-list", "mixed-script",
                                                   "two-column"};
    return names;
}

// ---------------------------------------------------------------------------
// Perturbations

enum class Perturbation {
    CellMergeSplit,      // one table row gains or loses a cell
    FormulaAlignDisturb, // alignment tab lands outside any environment
    ListRearrange,       // a list item jumps two levels deep
    CharConfusion,       // lookalike glyph substitution (O/0, l/1, rn/m)
    CrossPageCut,        // trailing blocks fall off the page
    ColumnRearrange,     // block order no longer matches the boxes
};

inline std::string to_string(Perturbation p) {
    switch (p) {
        case Perturbation::CellMergeSplit: return "cell-merge-split";
        case Perturbation::FormulaAlignDisturb: return "formula-align-disturb";
        case Perturbation::ListRearrange: return "list-rearrange";
        case Perturbation::CharConfusion: return "char-confusion";
        case Perturbation::CrossPageCut: return "cross-page-cut";
        case Perturbation::ColumnRearrange: return "column-rearrange";
    }
    return "?";
}

inline std::optional<Perturbation> perturbation_from_string(std::string_view s) {
    for (Perturbation p :
         {Perturbation::CellMergeSplit, Perturbation::FormulaAlignDisturb,
          Perturbation::ListRearrange, Perturbation::CharConfusion, Perturbation::CrossPageCut,
          Perturbation::ColumnRearrange})
        if (to_string(p) == s) return p;
    return std::nullopt;
}

struct PerturbResult {
    SyntheticPage page;
    std::vector<int> block_map;  // new block index -> source block index, -1 if inserted
    bool applied = false;        // false when the page lacks the needed structure
};

namespace detail {

inline std::vector<int> identity_map(size_t n) {
    std::vector<int> m(n);
    for (size_t i = 0; i < n; ++i) m[i] = static_cast<int>(i);
    return m;
}

inline std::string confuse_chars(std::string_view s) {
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

}  // namespace detail

inline PerturbResult apply_perturbation(const SyntheticPage& src, Perturbation kind,
                                        util::SeededRng& rng) {
    PerturbResult res;
    res.page = src;
    res.block_map = detail::identity_map(src.pieces.size());

    switch (kind) {
        case Perturbation::CellMergeSplit: {
            for (size_t i = 0; i < res.page.pieces.size(); ++i) {
                markup::TableParseResult parsed = markup::parse_html_table(res.page.pieces[i]);
                if (!parsed.ok() || parsed.grid->rows.size() < 2) continue;
                markup::TableGrid grid = std::move(*parsed.grid);
                const size_t row = 1 + rng.uniform_index(grid.rows.size() - 1);
                if (grid.rows[row].size() > 1 && rng.uniform01() < 0.5)
                    grid.rows[row].pop_back();  // merge: the row comes up one cell short
                else
                    grid.rows[row].push_back(grid.rows[row].back());  // split: one cell extra
                markup::resolve_spans(grid);
                res.page.pieces[i] = markup::serialize_table(grid);
                res.applied = true;
                break;
            }
            break;
        }
        case Perturbation::FormulaAlignDisturb: {
            for (size_t i = 0; i < res.page.pieces.size(); ++i) {
                std::string& piece = res.page.pieces[i];
                if (piece.rfind("$$", 0) != 0 || piece.size() < 5) continue;
                // a trailing alignment tab sits outside every environment,
                // which no formula grammar accepts
                piece.insert(piece.size() - 2, " &");
                res.applied = true;
                break;
            }
            break;
        }
        case Perturbation::ListRearrange: {
            int prev_level = -1;
            for (size_t i = 0; i < res.page.pieces.size(); ++i) {
                if (!res.page.is_list[i]) {
                    prev_level = -1;
                    continue;
                }
                size_t indent = 0;
                while (indent < res.page.pieces[i].size() && res.page.pieces[i][indent] == ' ')
                    ++indent;
                const int level = static_cast<int>(indent / 2);
                if (prev_level >= 0) {
                    // two levels past the preceding item breaks nesting
                    const size_t jump = static_cast<size_t>(prev_level + 2) * 2;
                    res.page.pieces[i] = std::string(jump, ' ') + res.page.pieces[i].substr(indent);
                    res.applied = true;
                    break;
                }
                prev_level = level;
            }
            break;
        }
        case Perturbation::CharConfusion: {
            std::vector<size_t> eligible;
            for (size_t i = 0; i < res.page.pieces.size(); ++i) {
                const std::string& p = res.page.pieces[i];
                if (p.find('<') != std::string::npos || p.find('$') != std::string::npos ||
                    p.find('#') == 0)
                    continue;  // keep markup and formulas out of it
                if (detail::confuse_chars(p) != p) eligible.push_back(i);
            }
            if (!eligible.empty()) {
                const size_t i = eligible[rng.uniform_index(eligible.size())];
                res.page.pieces[i] = detail::confuse_chars(res.page.pieces[i]);
                res.applied = true;
            }
            break;
        }
        case Perturbation::CrossPageCut: {
            if (src.pieces.size() < 2) break;
            // sizes in stripped codepoints: that is the space the divergence
            // signal is measured in, markup does not count
            std::vector<size_t> sizes;
            size_t total = 0;
            for (const std::string& p : src.pieces) {
                sizes.push_back(util::utf8_decode(markup::strip_markup(p)).size());
                total += sizes.back();
            }
            size_t keep = src.pieces.size();
            size_t kept_chars = total;
            // drop trailing blocks until at least a third of the page is gone
            while (keep > 1 && kept_chars * 3 > total * 2) {
                --keep;
                kept_chars -= sizes[keep];
            }
            res.page.pieces.assign(src.pieces.begin(), src.pieces.begin() + keep);
            res.page.is_list.assign(src.is_list.begin(), src.is_list.begin() + keep);
            res.page.boxes.assign(src.boxes.begin(), src.boxes.begin() + keep);
            res.block_map.resize(keep);
            res.applied = true;
            break;
        }
        case Perturbation::ColumnRearrange: {
            if (src.pieces.size() < 2) break;
            // full reversal maximizes sequence-vs-geometry inversions
            std::reverse(res.page.pieces.begin(), res.page.pieces.end());
            std::reverse(res.page.is_list.begin(), res.page.is_list.end());
            std::reverse(res.page.boxes.begin(), res.page.boxes.end());
            std::reverse(res.block_map.begin(), res.block_map.end());
            res.applied = true;
            break;
        }
    }
    return res;
}

// ---------------------------------------------------------------------------
// Generation plan

struct PlanItem {
    std::string sample_id;
    std::string template_id;
    bool perturbed = false;
    Perturbation perturbation = Perturbation::CharConfusion;
    uint64_t stream = 0;  // content rng for this sample
};

namespace detail {

// Templates guaranteed to contain the structure a perturbation targets.
inline std::string compatible_template(Perturbation p, util::SeededRng& rng) {
    switch (p) {
        case Perturbation::CellMergeSplit: return "table:rows=4,cols=3";
        case Perturbation::FormulaAlignDisturb: return "align:rows=3";
        case Perturbation::ListRearrange: return "nested-list:depth=3,items=2";
        case Perturbation::CharConfusion: return "mixed-script:paras=3";
        case Perturbation::CrossPageCut:
        case Perturbation::ColumnRearrange: {
            static const char* any[] = {"table:rows=4,cols=3", "mixed-script:paras=3",
                                        "two-column:rows=3"};
            return any[rng.uniform_index(3)];
        }
    }
    return "mixed-script:paras=3";
}

}  // namespace detail

// Deterministic plan: item k depends only on (seed, k). The intensity is the
// perturbed fraction and is clamped to [0.5, 1.0].
inline std::vector<PlanItem> sample_plan(uint64_t seed, size_t count, double intensity) {
    intensity = std::clamp(intensity, 0.5, 1.0);
    static const Perturbation kAll[] = {
        Perturbation::CellMergeSplit, Perturbation::FormulaAlignDisturb,
        Perturbation::ListRearrange,  Perturbation::CharConfusion,
        Perturbation::CrossPageCut,   Perturbation::ColumnRearrange,
    };
    std::vector<PlanItem> plan;
    plan.reserve(count);
    for (size_t k = 0; k < count; ++k) {
        PlanItem item;
        char buf[32];
        std::snprintf(buf, sizeof buf, "synth-%06zu", k);
        item.sample_id = buf;
        item.stream = util::derive_stream(seed, item.sample_id);
        util::SeededRng rng(util::derive_stream(seed, item.sample_id + "#plan"));
        item.perturbed = rng.uniform01() < intensity;
        if (item.perturbed) {
            item.perturbation = kAll[rng.uniform_index(6)];
            item.template_id = detail::compatible_template(item.perturbation, rng);
        } else {
            static const char* clean[] = {"table:rows=4,cols=3", "align:rows=3",
                                          "nested-list:depth=3,items=2", "mixed-script:paras=3",
                                          "two-column:rows=3"};
            item.template_id = clean[rng.uniform_index(5)];
        }
        plan.push_back(std::move(item));
    }
    return plan;
}

// One synthetic sample: the clean rendering plus a second source that either
// agrees (clean pair) or carries the planned defect. The clean page doubles
// as the reference annotation.
inline SampleRecord build_sample(const PlanItem& item) {
    util::SeededRng rng(item.stream);
    SyntheticPage clean = make_template(item.template_id, rng);

    SampleRecord rec;
    rec.id = item.sample_id;
    rec.image_ref = "synthetic://" + item.template_id;
    rec.metadata["template"] = item.template_id;
    rec.metadata["synthetic"] = "true";

    CandidateAnnotation a;
    a.source_id = "synth-clean";
    a.markdown = clean.markdown();
    a.boxes = clean.boxed_text();
    rec.candidates.push_back(std::move(a));

    CandidateAnnotation b;
    b.source_id = "synth-variant";
    if (item.perturbed) {
        PerturbResult pr = apply_perturbation(clean, item.perturbation, rng);
        if (!pr.applied)
            throw std::runtime_error("perturbation not applicable: " + to_string(item.perturbation) +
                                     " on " + item.template_id);
        b.markdown = pr.page.markdown();
        b.boxes = pr.page.boxed_text();
        rec.metadata["perturbation"] = to_string(item.perturbation);
    } else {
        b.markdown = clean.markdown();
        b.boxes = clean.boxed_text();
    }
    rec.candidates.push_back(std::move(b));

    ReferenceAnnotation ref;
    ref.markdown = clean.markdown();
    ref.boxes = clean.boxed_text();
    rec.reference = std::move(ref);
    return rec;
}

// ---------------------------------------------------------------------------
// Self-label soundness

// The signal each perturbation is built to trip.
inline std::string expected_tag(Perturbation p) {
    switch (p) {
        case Perturbation::CellMergeSplit: return "structural:table-grid";
        case Perturbation::FormulaAlignDisturb: return "structural:formula-ast";
        case Perturbation::ListRearrange: return "structural:hierarchy";
        case Perturbation::CharConfusion: return "recognition:confusable-chars";
        case Perturbation::CrossPageCut: return "recognition:text-divergence";
        case Perturbation::ColumnRearrange: return "relational:reading-order";
    }
    return "?";
}

// A clean pair must sail through; a perturbed pair must carry its tag.
inline bool soundness_holds(const PlanItem& item, const VerdictRecord& verdict) {
    if (!item.perturbed) return verdict.state == VerdictState::Pass;
    const std::string want = expected_tag(item.perturbation);
    return std::find(verdict.error_tags.begin(), verdict.error_tags.end(), want) !=
           verdict.error_tags.end();
}

}  // namespace docforge::augment
