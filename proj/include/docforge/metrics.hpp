// Pairwise comparison metrics: codepoint edit distance, ordered labeled tree
// edit distance (Zhang-Shasha) with its normalized similarity, box overlap
// and layout scores, and the content-level similarity surrogates used by the
// reward functions and the consensus gate.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "docforge/corpus.hpp"
#include "docforge/latex.hpp"
#include "docforge/markup.hpp"
#include "docforge/table.hpp"
#include "docforge/util.hpp"

namespace docforge::metrics {

// ---------------------------------------------------------------------------
// Edit distance (codepoint level)

inline size_t levenshtein(std::u32string_view a, std::u32string_view b) {
    if (a.size() < b.size()) std::swap(a, b);  // keep the row small
    std::vector<size_t> row(b.size() + 1);
    for (size_t j = 0; j <= b.size(); ++j) row[j] = j;
    for (size_t i = 1; i <= a.size(); ++i) {
        size_t diag = row[0];
        row[0] = i;
        for (size_t j = 1; j <= b.size(); ++j) {
            const size_t up = row[j];
            const size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, sub});
            diag = up;
        }
    }
    return row[b.size()];
}

inline size_t levenshtein(std::string_view a, std::string_view b) {
    return levenshtein(util::utf8_decode(a), util::utf8_decode(b));
}

// Distance over codepoints, scaled into [0,1] by the longer string. Two
// empty strings are identical, not undefined.
inline double norm_edit_distance(std::string_view a, std::string_view b) {
    const std::u32string ua = util::utf8_decode(a);
    const std::u32string ub = util::utf8_decode(b);
    const size_t m = std::max(ua.size(), ub.size());
    if (m == 0) return 0.0;
    return static_cast<double>(levenshtein(ua, ub)) / static_cast<double>(m);
}

// ---------------------------------------------------------------------------
// Ordered labeled tree edit distance

struct TreeNode {
    std::string label;
    std::vector<TreeNode> children;

    size_t size() const {
        size_t n = 1;
        for (const TreeNode& c : children) n += c.size();
        return n;
    }
};

namespace detail {

struct FlatTree {
    std::vector<std::string> labels;  // postorder
    std::vector<int> lml;             // leftmost leaf descendant, postorder index
    std::vector<int> keyroots;        // ascending
};

inline int flatten(const TreeNode& n, FlatTree& f) {
    int my_lml = -1;
    for (const TreeNode& c : n.children) {
        const int ci = flatten(c, f);
        if (my_lml < 0) my_lml = f.lml[ci];
    }
    const int idx = static_cast<int>(f.labels.size());
    f.labels.push_back(n.label);
    f.lml.push_back(my_lml < 0 ? idx : my_lml);
    return idx;
}

inline FlatTree flat_tree(const TreeNode& root) {
    FlatTree f;
    flatten(root, f);
    // keyroot: the highest node among those sharing its leftmost leaf
    std::map<int, int> highest;
    for (int i = 0; i < static_cast<int>(f.labels.size()); ++i) highest[f.lml[i]] = i;
    for (const auto& [_, idx] : highest) f.keyroots.push_back(idx);
    std::sort(f.keyroots.begin(), f.keyroots.end());
    return f;
}

}  // namespace detail

// Zhang-Shasha with unit costs: insert 1, delete 1, relabel 1 when labels
// differ. Distance between whole trees, roots included.
inline size_t tree_edit_distance(const TreeNode& a, const TreeNode& b) {
    const detail::FlatTree ta = detail::flat_tree(a);
    const detail::FlatTree tb = detail::flat_tree(b);
    const int n = static_cast<int>(ta.labels.size());
    const int m = static_cast<int>(tb.labels.size());
    std::vector<std::vector<size_t>> td(static_cast<size_t>(n),
                                        std::vector<size_t>(static_cast<size_t>(m), 0));
    // forest distance table, reused per keyroot pair
    std::vector<std::vector<size_t>> fd(static_cast<size_t>(n) + 2,
                                        std::vector<size_t>(static_cast<size_t>(m) + 2, 0));

    for (const int kr1 : ta.keyroots) {
        for (const int kr2 : tb.keyroots) {
            const int l1 = ta.lml[kr1];
            const int l2 = tb.lml[kr2];
            fd[0][0] = 0;
            for (int i = l1; i <= kr1; ++i)
                fd[static_cast<size_t>(i - l1 + 1)][0] =
                    fd[static_cast<size_t>(i - l1)][0] + 1;
            for (int j = l2; j <= kr2; ++j)
                fd[0][static_cast<size_t>(j - l2 + 1)] =
                    fd[0][static_cast<size_t>(j - l2)] + 1;
            for (int i = l1; i <= kr1; ++i) {
                for (int j = l2; j <= kr2; ++j) {
                    const size_t fi = static_cast<size_t>(i - l1 + 1);
                    const size_t fj = static_cast<size_t>(j - l2 + 1);
                    if (ta.lml[i] == l1 && tb.lml[j] == l2) {
                        const size_t rel = ta.labels[static_cast<size_t>(i)] ==
                                                   tb.labels[static_cast<size_t>(j)]
                                               ? 0
                                               : 1;
                        fd[fi][fj] = std::min({fd[fi - 1][fj] + 1, fd[fi][fj - 1] + 1,
                                               fd[fi - 1][fj - 1] + rel});
                        td[static_cast<size_t>(i)][static_cast<size_t>(j)] = fd[fi][fj];
                    } else {
                        const size_t pi = static_cast<size_t>(ta.lml[i] - l1);
                        const size_t pj = static_cast<size_t>(tb.lml[j] - l2);
                        fd[fi][fj] =
                            std::min({fd[fi - 1][fj] + 1, fd[fi][fj - 1] + 1,
                                      fd[pi][pj] +
                                          td[static_cast<size_t>(i)][static_cast<size_t>(j)]});
                    }
                }
            }
        }
    }
    return td[static_cast<size_t>(n - 1)][static_cast<size_t>(m - 1)];
}

// Similarity in [0,1]: 1 - TED / max(|a|,|b|).
inline double teds(const TreeNode& a, const TreeNode& b) {
    const size_t na = a.size(), nb = b.size();
    const size_t mx = std::max(na, nb);
    if (mx == 0) return 1.0;
    const size_t d = tree_edit_distance(a, b);
    return 1.0 - static_cast<double>(d) / static_cast<double>(mx);
}

// ---------------------------------------------------------------------------
// Tree conversions

inline TreeNode formula_tree(const markup::FormulaNode& n) {
    TreeNode t;
    t.label = n.label;
    for (const auto& c : n.children) t.children.push_back(formula_tree(c));
    return t;
}

// Table as a structure tree. Cell labels carry span shape, and optionally the
// cell text so content differences count toward the distance.
inline TreeNode table_tree(const markup::TableGrid& g, bool include_text = true) {
    TreeNode root{"table", {}};
    for (const auto& row : g.rows) {
        TreeNode tr{"tr", {}};
        for (const markup::TableCell& cell : row) {
            std::string label = cell.header ? "th" : "td";
            if (cell.colspan > 1) label += "|c" + std::to_string(cell.colspan);
            if (cell.rowspan > 1) label += "|r" + std::to_string(cell.rowspan);
            if (include_text) label += "|" + util::collapse_ws(cell.text);
            tr.children.push_back({std::move(label), {}});
        }
        root.children.push_back(std::move(tr));
    }
    return root;
}

// Whole-document structure: block kinds and nesting, tables expanded without
// text (textual drift is the edit-distance channel, not this one).
inline TreeNode document_tree(const markup::MarkdownDoc& doc) {
    TreeNode root{"<doc>", {}};
    for (const markup::Block& b : doc.blocks) {
        switch (b.kind) {
            case markup::BlockKind::Heading:
                root.children.push_back({"h" + std::to_string(b.level), {}});
                break;
            case markup::BlockKind::Paragraph: {
                TreeNode p{"p", {}};
                for (const markup::InlineSpan& s : b.spans) {
                    if (s.kind == markup::SpanKind::InlineFormula ||
                        s.kind == markup::SpanKind::DisplayFormula)
                        p.children.push_back({"fm", {}});
                    else if (s.kind == markup::SpanKind::CodeSpan)
                        p.children.push_back({"code", {}});
                }
                root.children.push_back(std::move(p));
                break;
            }
            case markup::BlockKind::Table:
                if (b.grid) {
                    root.children.push_back(table_tree(*b.grid, false));
                } else {
                    root.children.push_back({"table|broken", {}});
                }
                break;
            case markup::BlockKind::DisplayFormula:
                root.children.push_back({"fm", {}});
                break;
            case markup::BlockKind::ListItem: {
                TreeNode li{(b.ordered ? "ol:" : "ul:") + std::to_string(b.level), {}};
                for (const markup::InlineSpan& s : b.spans) {
                    if (s.kind == markup::SpanKind::InlineFormula ||
                        s.kind == markup::SpanKind::DisplayFormula)
                        li.children.push_back({"fm", {}});
                }
                root.children.push_back(std::move(li));
                break;
            }
            case markup::BlockKind::CodeFence:
                root.children.push_back({"codefence", {}});
                break;
        }
    }
    return root;
}

// Structure divergence in [0,1]; 0 for identical block structure.
inline double structural_divergence(const markup::MarkdownDoc& a, const markup::MarkdownDoc& b) {
    return 1.0 - teds(document_tree(a), document_tree(b));
}

inline double structural_divergence(std::string_view a, std::string_view b) {
    return structural_divergence(markup::parse_markdown(a), markup::parse_markdown(b));
}

// ---------------------------------------------------------------------------
// Boxes

inline double iou(const BoundingBox& a, const BoundingBox& b) {
    const long ix1 = std::max(a.x1, b.x1);
    const long iy1 = std::max(a.y1, b.y1);
    const long ix2 = std::min(a.x2, b.x2);
    const long iy2 = std::min(a.y2, b.y2);
    const long iw = std::max(0L, ix2 - ix1);
    const long ih = std::max(0L, iy2 - iy1);
    const long inter = iw * ih;
    const long uni = a.area() + b.area() - inter;
    if (uni <= 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

// Greedy one-to-one matching by descending overlap; unmatched boxes dilute
// the score. Two empty layouts agree perfectly, one-sided absence does not.
inline double layout_agreement(const std::vector<BoundingBox>& a,
                               const std::vector<BoundingBox>& b) {
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    struct Pair {
        double v;
        size_t i, j;
    };
    std::vector<Pair> pairs;
    pairs.reserve(a.size() * b.size());
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j) {
            const double v = iou(a[i], b[j]);
            if (v > 0) pairs.push_back({v, i, j});
        }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
        if (x.v != y.v) return x.v > y.v;
        if (x.i != y.i) return x.i < y.i;
        return x.j < y.j;
    });
    std::vector<bool> ua(a.size(), false), ub(b.size(), false);
    double total = 0.0;
    for (const Pair& p : pairs) {
        if (ua[p.i] || ub[p.j]) continue;
        ua[p.i] = ub[p.j] = true;
        total += p.v;
    }
    return total / static_cast<double>(std::max(a.size(), b.size()));
}

namespace detail {

// Column split: sorted by left edge, a new column starts when the horizontal
// gap to the running right edge exceeds half the median box width.
inline std::vector<size_t> geometric_reading_order(const std::vector<BoundingBox>& boxes) {
    const size_t n = boxes.size();
    std::vector<size_t> by_x(n);
    for (size_t i = 0; i < n; ++i) by_x[i] = i;
    std::sort(by_x.begin(), by_x.end(), [&](size_t i, size_t j) {
        if (boxes[i].x1 != boxes[j].x1) return boxes[i].x1 < boxes[j].x1;
        return boxes[i].y1 < boxes[j].y1;
    });
    std::vector<int> widths;
    widths.reserve(n);
    for (const auto& b : boxes) widths.push_back(b.width());
    std::sort(widths.begin(), widths.end());
    const double median_w = n ? static_cast<double>(widths[n / 2]) : 0.0;

    std::vector<std::vector<size_t>> columns;
    long right = 0;
    for (const size_t idx : by_x) {
        if (columns.empty() ||
            static_cast<double>(boxes[idx].x1) - static_cast<double>(right) > 0.5 * median_w) {
            columns.emplace_back();
            right = boxes[idx].x2;
        } else {
            right = std::max(right, static_cast<long>(boxes[idx].x2));
        }
        columns.back().push_back(idx);
    }
    std::vector<size_t> order;
    order.reserve(n);
    for (auto& col : columns) {
        std::sort(col.begin(), col.end(), [&](size_t i, size_t j) {
            if (boxes[i].y1 != boxes[j].y1) return boxes[i].y1 < boxes[j].y1;
            return boxes[i].x1 < boxes[j].x1;
        });
        for (const size_t idx : col) order.push_back(idx);
    }
    return order;
}

}  // namespace detail

// How well the sequence order of grounded spans matches geometric reading
// order (columns left to right, top to bottom inside a column). 1 when the
// annotation already reads naturally; pair inversions pull it down.
inline double reading_order_score(const std::vector<BoundingBox>& boxes) {
    const size_t n = boxes.size();
    if (n < 2) return 1.0;
    const std::vector<size_t> order = detail::geometric_reading_order(boxes);
    std::vector<size_t> rank(n);
    for (size_t pos = 0; pos < n; ++pos) rank[order[pos]] = pos;
    size_t inversions = 0;
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            if (rank[i] > rank[j]) ++inversions;
    const size_t pairs = n * (n - 1) / 2;
    return 1.0 - static_cast<double>(inversions) / static_cast<double>(pairs);
}

// ---------------------------------------------------------------------------
// Content surrogates

namespace detail {

inline const std::map<std::string, std::string, std::less<>>& formula_synonyms() {
    static const std::map<std::string, std::string, std::less<>> table = {
        {"\\dfrac", "\\frac"},   {"\\tfrac", "\\frac"},      {"\\cfrac", "\\frac"},
        {"\\le", "\\leq"},       {"\\ge", "\\geq"},          {"\\ne", "\\neq"},
        {"\\to", "\\rightarrow"},{"\\gets", "\\leftarrow"},  {"\\land", "\\wedge"},
        {"\\lor", "\\vee"},      {"\\lnot", "\\neg"},        {"\\cdots", "\\dots"},
        {"\\ldots", "\\dots"},   {"\\lbrace", "\\{"},        {"\\rbrace", "\\}"},
        {"\\lbrack", "["},       {"\\rbrack", "]"},          {"\\vert", "|"},
        {"\\colon", ":"},
    };
    return table;
}

inline bool formula_spacing_token(std::string_view t) {
    return t == "\\," || t == "\\;" || t == "\\:" || t == "\\!" || t == "\\quad" ||
           t == "\\qquad" || t == "\\ " || t == "~";
}

inline std::vector<std::string> canonical_formula_tokens(std::string_view src) {
    std::vector<std::string> toks = markup::tokenize_latex(src);
    std::vector<std::string> out;
    out.reserve(toks.size());
    const auto& syn = formula_synonyms();
    for (std::string& t : toks) {
        if (formula_spacing_token(t)) continue;
        auto it = syn.find(t);
        out.push_back(it != syn.end() ? it->second : std::move(t));
    }
    return out;
}

inline double multiset_f1(std::vector<std::string> a, std::vector<std::string> b) {
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    size_t common = 0, i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) { ++common; ++i; ++j; }
        else if (a[i] < b[j]) ++i;
        else ++j;
    }
    return 2.0 * static_cast<double>(common) / static_cast<double>(a.size() + b.size());
}

}  // namespace detail

// Token-level formula agreement: multiset F1 over canonicalized tokens, so
// notation synonyms and spacing commands do not count as differences.
inline double cdm_surrogate(std::string_view a, std::string_view b) {
    return detail::multiset_f1(detail::canonical_formula_tokens(a),
                               detail::canonical_formula_tokens(b));
}

// Similarity of formula parse trees; falls back to token agreement when
// either side fails to parse (an unparseable pair can still match textually).
inline double ast_similarity(std::string_view a, std::string_view b) {
    const markup::FormulaParseResult pa = markup::parse_formula(a);
    const markup::FormulaParseResult pb = markup::parse_formula(b);
    if (pa.check.ok && pb.check.ok)
        return teds(formula_tree(pa.expr->root), formula_tree(pb.expr->root));
    return cdm_surrogate(a, b);
}

// Order-insensitive character agreement over stripped text, spaces excluded.
// High edit distance with high char consistency points at reordering; low
// char consistency points at recognition damage.
inline double char_consistency(std::string_view stripped_a, std::string_view stripped_b) {
    std::vector<std::string> ca, cb;
    for (const char32_t cp : util::utf8_decode(stripped_a))
        if (!util::is_space_cp(cp)) ca.push_back(util::utf8_encode(std::u32string(1, cp)));
    for (const char32_t cp : util::utf8_decode(stripped_b))
        if (!util::is_space_cp(cp)) cb.push_back(util::utf8_encode(std::u32string(1, cp)));
    return detail::multiset_f1(std::move(ca), std::move(cb));
}

// Fraction of cells whose grid anchor and text both line up across two
// resolved grids, scaled by the larger cell count.
inline double cell_matching_rate(const markup::TableGrid& a, const markup::TableGrid& b) {
    const size_t ca = a.cell_count(), cb = b.cell_count();
    if (ca == 0 && cb == 0) return 1.0;
    if (ca == 0 || cb == 0) return 0.0;
    auto anchors = [](const markup::TableGrid& g) {
        // row-major first sighting of a cell index is its top-left anchor
        std::map<int, std::pair<size_t, size_t>> first;
        for (size_t r = 0; r < g.owner.size(); ++r)
            for (size_t c = 0; c < g.owner[r].size(); ++c) {
                const int idx = g.owner[r][c];
                if (idx >= 0 && !first.count(idx)) first[idx] = {r, c};
            }
        std::vector<const markup::TableCell*> cells;
        for (const auto& row : g.rows)
            for (const auto& cell : row) cells.push_back(&cell);
        std::map<std::pair<size_t, size_t>, std::string> m;
        for (const auto& [idx, pos] : first)
            if (static_cast<size_t>(idx) < cells.size())
                m[pos] = util::collapse_ws(cells[static_cast<size_t>(idx)]->text);
        return m;
    };
    const auto ma = anchors(a);
    const auto mb = anchors(b);
    size_t matched = 0;
    for (const auto& [pos, text] : ma) {
        auto it = mb.find(pos);
        if (it != mb.end() && it->second == text) ++matched;
    }
    return static_cast<double>(matched) / static_cast<double>(std::max(ca, cb));
}

// Multiset agreement of numeric literals in two stripped texts. Pages whose
// numbers disagree fail semantic checking even when prose survives.
inline std::vector<std::string> extract_numbers(std::string_view stripped) {
    std::vector<std::string> out;
    size_t i = 0;
    const auto digit = [&](size_t k) { return k < stripped.size() && stripped[k] >= '0' && stripped[k] <= '9'; };
    while (i < stripped.size()) {
        if (!digit(i)) { ++i; continue; }
        size_t j = i;
        while (digit(j)) ++j;
        if (j < stripped.size() && stripped[j] == '.' && digit(j + 1)) {
            ++j;
            while (digit(j)) ++j;
        }
        out.emplace_back(stripped.substr(i, j - i));
        i = j;
    }
    return out;
}

inline double numerical_consistency(std::string_view stripped_a, std::string_view stripped_b) {
    return detail::multiset_f1(extract_numbers(stripped_a), extract_numbers(stripped_b));
}

}  // namespace docforge::metrics
