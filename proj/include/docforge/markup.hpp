// Markdown document model for page annotations: a total block parser, the
// markup-stripping projection used by every text metric, and the
// canonical-form normalizer.
//
// The dialect is deliberately small: ATX headings, paragraphs, list items,
// fenced code, display math ($$..$$ or \[..\]), inline math ($..$ or \(..\)),
// inline code, and tables (HTML subset, or pipe tables which the normalizer
// rewrites to HTML).
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "docforge/latex.hpp"
#include "docforge/table.hpp"
#include "docforge/util.hpp"

namespace docforge::markup {

enum class BlockKind { Heading, Paragraph, Table, DisplayFormula, ListItem, CodeFence };
enum class SpanKind { Text, InlineFormula, DisplayFormula, CodeSpan };
enum class MathDelim { Dollar, DoubleDollar, Paren, Bracket };

struct InlineSpan {
    SpanKind kind = SpanKind::Text;
    std::string text;  // span content, delimiters excluded
    MathDelim delim = MathDelim::Dollar;
};

struct Block {
    BlockKind kind = BlockKind::Paragraph;
    int level = 0;                  // heading level 1..6, or list depth
    bool ordered = false;           // list item kind
    std::string marker;             // list marker as written ("-", "2.")
    int indent_spaces = 0;          // raw leading spaces of a list item
    std::string text;               // heading text or fence body
    std::string fence_info;         // language tag on a code fence
    std::vector<InlineSpan> spans;  // paragraph / list item content
    std::string raw;                // table block source as written
    std::optional<TableGrid> grid;  // absent when the table is malformed
    std::string table_error;
    size_t table_error_pos = 0;
    bool pipe_source = false;       // table arrived in pipe syntax
    MathDelim delim = MathDelim::DoubleDollar;  // display formula delimiter
    size_t source_line = 0;         // 1-based
};

struct MarkdownDoc {
    std::string source;
    std::vector<Block> blocks;
};

// ---------------------------------------------------------------------------
// Inline parsing

namespace detail {

// Finds the closing delimiter `close` at or after `from`. The closer may
// itself start with a backslash ("\]"), so the match test runs before the
// escape skip; an escaped character elsewhere never opens a match.
inline size_t find_unescaped(std::string_view s, std::string_view close, size_t from) {
    size_t i = from;
    while (i < s.size()) {
        if (s.compare(i, close.size(), close) == 0) return i;
        if (s[i] == '\\') { i += 2; continue; }
        ++i;
    }
    return std::string_view::npos;
}

}  // namespace detail

// Splits paragraph-flow text into text / math / code spans. Unclosed
// delimiters stay literal text, so this never fails.
inline std::vector<InlineSpan> parse_inline(std::string_view text) {
    std::vector<InlineSpan> spans;
    std::string plain;
    auto flush = [&] {
        if (!plain.empty()) {
            spans.push_back({SpanKind::Text, plain, MathDelim::Dollar});
            plain.clear();
        }
    };
    size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (c == '\\' && i + 1 < text.size()) {
            const char n = text[i + 1];
            if (n == '(' || n == '[') {
                const bool display = n == '[';
                const std::string_view closer = display ? "\\]" : "\\)";
                const size_t end = detail::find_unescaped(text, closer, i + 2);
                if (end != std::string_view::npos) {
                    flush();
                    spans.push_back({display ? SpanKind::DisplayFormula : SpanKind::InlineFormula,
                                     std::string(text.substr(i + 2, end - i - 2)),
                                     display ? MathDelim::Bracket : MathDelim::Paren});
                    i = end + 2;
                    continue;
                }
            }
            plain.push_back(c);
            plain.push_back(n);
            i += 2;
            continue;
        }
        if (c == '$') {
            const bool display = i + 1 < text.size() && text[i + 1] == '$';
            const std::string_view closer = display ? "$$" : "$";
            const size_t open_len = display ? 2 : 1;
            const size_t end = detail::find_unescaped(text, closer, i + open_len);
            if (end != std::string_view::npos && (display || end > i + 1)) {
                flush();
                spans.push_back({display ? SpanKind::DisplayFormula : SpanKind::InlineFormula,
                                 std::string(text.substr(i + open_len, end - i - open_len)),
                                 display ? MathDelim::DoubleDollar : MathDelim::Dollar});
                i = end + open_len;
                continue;
            }
            plain.push_back(c);
            ++i;
            continue;
        }
        if (c == '`') {
            const size_t end = text.find('`', i + 1);
            if (end != std::string_view::npos) {
                flush();
                spans.push_back({SpanKind::CodeSpan, std::string(text.substr(i + 1, end - i - 1)),
                                 MathDelim::Dollar});
                i = end + 1;
                continue;
            }
            plain.push_back(c);
            ++i;
            continue;
        }
        plain.push_back(c);
        ++i;
    }
    flush();
    return spans;
}

// ---------------------------------------------------------------------------
// Block parsing

namespace detail {

struct LineClass {
    bool heading = false;
    int heading_level = 0;
    std::string heading_text;

    bool list_item = false;
    int indent_spaces = 0;
    bool ordered = false;
    std::string marker;
    std::string item_text;
};

inline std::string expand_leading_tabs(std::string_view line) {
    std::string out;
    size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) {
        if (line[i] == '\t') out += "  ";
        else out.push_back(' ');
        ++i;
    }
    out.append(line.substr(i));
    return out;
}

inline LineClass classify_line(std::string_view raw) {
    LineClass lc;
    const std::string line = expand_leading_tabs(raw);
    size_t i = 0;
    while (i < line.size() && line[i] == ' ') ++i;
    lc.indent_spaces = static_cast<int>(i);

    if (i == 0 && i < line.size() && line[i] == '#') {
        size_t h = i;
        while (h < line.size() && line[h] == '#') ++h;
        const size_t level = h - i;
        if (level <= 6 && (h == line.size() || line[h] == ' ')) {
            lc.heading = true;
            lc.heading_level = static_cast<int>(level);
            lc.heading_text = h < line.size() ? std::string(line.substr(h + 1)) : "";
            return lc;
        }
    }

    if (i < line.size() && (line[i] == '-' || line[i] == '*' || line[i] == '+')) {
        if (i + 1 >= line.size() || line[i + 1] == ' ') {
            lc.list_item = true;
            lc.marker = line[i];
            lc.item_text = i + 2 <= line.size() ? std::string(line.substr(std::min(i + 2, line.size()))) : "";
            return lc;
        }
    }
    if (i < line.size() && line[i] >= '0' && line[i] <= '9') {
        size_t d = i;
        while (d < line.size() && line[d] >= '0' && line[d] <= '9') ++d;
        if (d - i <= 9 && d < line.size() && line[d] == '.' &&
            (d + 1 == line.size() || line[d + 1] == ' ')) {
            lc.list_item = true;
            lc.ordered = true;
            lc.marker = std::string(line.substr(i, d - i + 1));
            lc.item_text = d + 2 <= line.size() ? std::string(line.substr(std::min(d + 2, line.size()))) : "";
            return lc;
        }
    }
    return lc;
}

inline bool starts_with_ci(std::string_view s, size_t at, std::string_view lower) {
    if (at + lower.size() > s.size()) return false;
    for (size_t k = 0; k < lower.size(); ++k) {
        char c = s[at + k];
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        if (c != lower[k]) return false;
    }
    return true;
}

inline size_t find_ci(std::string_view s, std::string_view lower, size_t from) {
    for (size_t i = from; i + lower.size() <= s.size(); ++i)
        if (starts_with_ci(s, i, lower)) return i;
    return std::string_view::npos;
}

// A pipe-table separator row: |---|:--:|... (pipes, dashes, colons, spaces,
// at least one dash).
inline bool pipe_separator_row(std::string_view line) {
    bool dash = false, other = false;
    for (char c : line) {
        if (c == '-') dash = true;
        else if (c == '|' || c == ':' || c == ' ' || c == '\t') continue;
        else { other = true; break; }
    }
    return dash && !other;
}

inline std::vector<std::string> split_pipe_row(std::string_view line) {
    std::string_view s = line;
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t')) --e;
    s = s.substr(b, e - b);
    if (!s.empty() && s.front() == '|') s.remove_prefix(1);
    if (!s.empty() && s.back() == '|') s.remove_suffix(1);
    std::vector<std::string> cells;
    std::string cur;
    size_t i = 0;
    while (i < s.size()) {
        if (s[i] == '\\' && i + 1 < s.size() && s[i + 1] == '|') {
            cur.push_back('|');
            i += 2;
            continue;
        }
        if (s[i] == '|') {
            cells.push_back(util::trim(cur));
            cur.clear();
            ++i;
            continue;
        }
        cur.push_back(s[i++]);
    }
    cells.push_back(util::trim(cur));
    return cells;
}

}  // namespace detail

// Total parser: any byte sequence yields a document; nothing throws.
inline MarkdownDoc parse_markdown(std::string_view text) {
    MarkdownDoc doc;
    doc.source = std::string(text);
    std::vector<std::string> lines = util::split_lines(text);

    std::vector<std::string> para;  // pending paragraph lines
    size_t para_line = 0;
    auto flush_para = [&] {
        if (para.empty()) return;
        std::string joined;
        for (size_t k = 0; k < para.size(); ++k) {
            if (k) joined.push_back('\n');
            joined += para[k];
        }
        Block b;
        b.kind = BlockKind::Paragraph;
        b.spans = parse_inline(joined);
        b.source_line = para_line;
        doc.blocks.push_back(std::move(b));
        para.clear();
    };

    size_t i = 0;
    while (i < lines.size()) {
        const std::string& line = lines[i];
        std::string lt = util::trim(line);

        if (lt.empty()) {
            flush_para();
            ++i;
            continue;
        }

        // fenced code
        if (lt.rfind("```", 0) == 0) {
            flush_para();
            Block b;
            b.kind = BlockKind::CodeFence;
            b.fence_info = util::trim(lt.substr(3));
            b.source_line = i + 1;
            std::string body;
            ++i;
            bool closed = false;
            while (i < lines.size()) {
                if (util::trim(lines[i]).rfind("```", 0) == 0) {
                    ++i;
                    closed = true;
                    break;
                }
                if (!body.empty()) body.push_back('\n');
                body += lines[i];
                ++i;
            }
            (void)closed;  // unterminated fences swallow the rest of the input
            b.text = body;
            doc.blocks.push_back(std::move(b));
            continue;
        }

        // HTML table, possibly spanning lines
        if (detail::starts_with_ci(lt, 0, "<table") &&
            (lt.size() == 6 || lt[6] == '>' || lt[6] == ' ')) {
            flush_para();
            Block b;
            b.kind = BlockKind::Table;
            b.source_line = i + 1;
            std::string raw = lt;
            size_t close = detail::find_ci(raw, "</table>", 0);
            ++i;
            while (close == std::string_view::npos && i < lines.size()) {
                raw.push_back('\n');
                raw += lines[i];
                ++i;
                close = detail::find_ci(raw, "</table>", 0);
            }
            std::string tail;
            if (close != std::string_view::npos) {
                tail = util::trim(raw.substr(close + 8));
                raw = raw.substr(0, close + 8);
            }
            b.raw = raw;
            TableParseResult parsed = parse_html_table(raw);
            if (parsed.ok()) {
                b.grid = std::move(*parsed.grid);
            } else {
                b.table_error = parsed.error;
                b.table_error_pos = parsed.error_pos;
            }
            doc.blocks.push_back(std::move(b));
            if (!tail.empty()) {
                lines.insert(lines.begin() + static_cast<long>(i), tail);
            }
            continue;
        }

        // display math on its own line(s)
        if (lt.rfind("$$", 0) == 0 || lt.rfind("\\[", 0) == 0) {
            const bool bracket = lt[0] == '\\';
            const std::string_view closer = bracket ? "\\]" : "$$";
            std::string body = lt.substr(2);
            size_t close = detail::find_unescaped(body, closer, 0);
            size_t j = i + 1;
            while (close == std::string_view::npos && j < lines.size()) {
                body.push_back('\n');
                body += lines[j];
                ++j;
                close = detail::find_unescaped(body, closer, 0);
            }
            if (close != std::string_view::npos) {
                flush_para();
                std::string tail = util::trim(body.substr(close + 2));
                Block b;
                b.kind = BlockKind::DisplayFormula;
                b.text = util::trim(body.substr(0, close));
                b.delim = bracket ? MathDelim::Bracket : MathDelim::DoubleDollar;
                b.source_line = i + 1;
                doc.blocks.push_back(std::move(b));
                i = j;
                if (!tail.empty()) lines.insert(lines.begin() + static_cast<long>(i), tail);
                continue;
            }
            // unclosed: fall through to paragraph handling
        }

        // pipe table: a | row followed by a separator row
        if (lt.front() == '|' && i + 1 < lines.size() &&
            detail::pipe_separator_row(util::trim(lines[i + 1])) &&
            util::trim(lines[i + 1]).front() == '|') {
            flush_para();
            Block b;
            b.kind = BlockKind::Table;
            b.pipe_source = true;
            b.source_line = i + 1;
            TableGrid grid;
            std::string raw;
            size_t j = i;
            while (j < lines.size()) {
                std::string row_trim = util::trim(lines[j]);
                if (row_trim.empty() || row_trim.front() != '|') break;
                if (!raw.empty()) raw.push_back('\n');
                raw += lines[j];
                if (!detail::pipe_separator_row(row_trim)) {
                    std::vector<std::string> cells = detail::split_pipe_row(row_trim);
                    grid.rows.emplace_back();
                    for (std::string& c : cells)
                        grid.rows.back().push_back({std::move(c), 1, 1, false});
                }
                ++j;
            }
            resolve_spans(grid);
            b.raw = std::move(raw);
            b.grid = std::move(grid);
            doc.blocks.push_back(std::move(b));
            i = j;
            continue;
        }

        detail::LineClass lc = detail::classify_line(line);
        if (lc.heading) {
            flush_para();
            Block b;
            b.kind = BlockKind::Heading;
            b.level = lc.heading_level;
            b.text = lc.heading_text;
            b.source_line = i + 1;
            doc.blocks.push_back(std::move(b));
            ++i;
            continue;
        }
        if (lc.list_item) {
            flush_para();
            Block b;
            b.kind = BlockKind::ListItem;
            b.level = lc.indent_spaces / 2;
            b.indent_spaces = lc.indent_spaces;
            b.ordered = lc.ordered;
            b.marker = lc.marker;
            b.spans = parse_inline(lc.item_text);
            b.source_line = i + 1;
            doc.blocks.push_back(std::move(b));
            ++i;
            continue;
        }

        if (para.empty()) para_line = i + 1;
        para.push_back(line);
        ++i;
    }
    flush_para();
    return doc;
}

// ---------------------------------------------------------------------------
// Formula extraction

// All formulas in reading order: display blocks plus math spans inside
// paragraphs and list items. Table cell content is text as far as formula
// alignment is concerned.
inline std::vector<std::string> extract_formulas(const MarkdownDoc& doc) {
    std::vector<std::string> out;
    for (const Block& b : doc.blocks) {
        if (b.kind == BlockKind::DisplayFormula) {
            out.push_back(b.text);
        } else if (b.kind == BlockKind::Paragraph || b.kind == BlockKind::ListItem) {
            for (const InlineSpan& s : b.spans)
                if (s.kind == SpanKind::InlineFormula || s.kind == SpanKind::DisplayFormula)
                    out.push_back(s.text);
        }
    }
    return out;
}

inline std::vector<const Block*> extract_tables(const MarkdownDoc& doc) {
    std::vector<const Block*> out;
    for (const Block& b : doc.blocks)
        if (b.kind == BlockKind::Table) out.push_back(&b);
    return out;
}

// ---------------------------------------------------------------------------
// Structural validity used by the struct reward and the rule screen

// Heading levels may deepen by at most one per step; any decrease is legal;
// the first heading sets its own baseline.
inline bool heading_hierarchy_valid(const MarkdownDoc& doc) {
    int prev = 0;
    for (const Block& b : doc.blocks) {
        if (b.kind != BlockKind::Heading) continue;
        if (prev > 0 && b.level > prev + 1) return false;
        prev = b.level;
    }
    return true;
}

// List depth may grow by at most one level per consecutive item; a run
// starts from depth zero, so an opening item deeper than one level is a
// jump. Non-list blocks end the run.
inline bool list_indent_valid(const MarkdownDoc& doc) {
    int prev = -1;  // -1: not in a run
    for (const Block& b : doc.blocks) {
        if (b.kind != BlockKind::ListItem) {
            prev = -1;
            continue;
        }
        const int base = prev < 0 ? 0 : prev;
        if (b.level > base + 1) return false;
        prev = b.level;
    }
    return true;
}

// ---------------------------------------------------------------------------
// strip_markup
//
// The projection every text comparison runs on: markers and tags out,
// content kept, whitespace collapsed. Works on raw text, independent of the
// block parser, so it behaves on arbitrary input.

inline std::string strip_markup(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool in_fence = false;
    const std::vector<std::string> lines = util::split_lines(text);
    for (size_t li = 0; li < lines.size(); ++li) {
        std::string line = detail::expand_leading_tabs(lines[li]);
        std::string_view lv = line;
        const std::string lt = util::trim(line);
        if (in_fence) {
            if (lt.rfind("```", 0) == 0) { in_fence = false; continue; }
            out += line;
            out.push_back('\n');
            continue;
        }
        if (lt.rfind("```", 0) == 0) { in_fence = true; continue; }
        // pipe-table separator rows carry no content
        if (!lt.empty() && lt.front() == '|' && detail::pipe_separator_row(lt)) continue;

        size_t i = 0;
        // line-leading markers
        size_t sp = 0;
        while (sp < lv.size() && lv[sp] == ' ') ++sp;
        if (sp < lv.size() && lv[sp] == '#' && sp == 0) {
            size_t h = sp;
            while (h < lv.size() && lv[h] == '#') ++h;
            if (h - sp <= 6 && (h == lv.size() || lv[h] == ' ')) i = h < lv.size() ? h + 1 : h;
        }
        if (i == 0) {
            detail::LineClass lc = detail::classify_line(line);
            if (lc.list_item) {
                const size_t used = static_cast<size_t>(lc.indent_spaces) + lc.marker.size();
                i = std::min(used + 1, lv.size());
            }
        }

        while (i < lv.size()) {
            const char c = lv[i];
            if (c == '\\' && i + 1 < lv.size()) {
                const char n = lv[i + 1];
                if (n == '(' || n == ')' || n == '[' || n == ']') { i += 2; continue; }
                if (n == '*' || n == '_' || n == '$' || n == '`' || n == '|' || n == '#' ||
                    n == '\\') {
                    out.push_back(n);
                    i += 2;
                    continue;
                }
                out.push_back(c);
                ++i;
                continue;
            }
            if (c == '$') {
                // one or two dollars are delimiters either way
                i += (i + 1 < lv.size() && lv[i + 1] == '$') ? 2 : 1;
                continue;
            }
            if (c == '`') { ++i; continue; }
            if (c == '*' && i + 1 < lv.size() && lv[i + 1] == '*') { i += 2; continue; }
            if (c == '_' && i + 1 < lv.size() && lv[i + 1] == '_') { i += 2; continue; }
            if (c == '|') {
                out.push_back(' ');
                ++i;
                continue;
            }
            if (c == '<') {
                // box tokens: keep the grounded text, drop the wrapper
                if (lv.compare(i, 13, "<|box_start|>") == 0) {
                    const size_t close = lv.find("<|box_end|>", i);
                    if (close != std::string_view::npos) {
                        i = close + 11;
                        out.push_back(' ');
                        continue;
                    }
                    i += 13;
                    continue;
                }
                if (lv.compare(i, 11, "<|box_end|>") == 0) { i += 11; continue; }
                if (lv.compare(i, 4, "<!--") == 0) {
                    const size_t close = lv.find("-->", i + 4);
                    out.push_back(' ');
                    i = close == std::string_view::npos ? lv.size() : close + 3;
                    continue;
                }
                auto tag = docforge::markup::detail::read_tag(lv, i);
                if (tag) {
                    out.push_back(' ');
                    i = tag->end;
                    continue;
                }
                out.push_back(c);
                ++i;
                continue;
            }
            if (c == '&') {
                const size_t before = out.size();
                const size_t semi = lv.find(';', i);
                if (semi != std::string_view::npos && semi - i <= 8) {
                    out += detail::decode_entities(lv.substr(i, semi - i + 1));
                    if (out.size() != before + (semi - i + 1)) {  // something decoded
                        i = semi + 1;
                        continue;
                    }
                    out.resize(before);
                }
                out.push_back(c);
                ++i;
                continue;
            }
            out.push_back(c);
            ++i;
        }
        out.push_back('\n');
    }
    return util::collapse_ws(out);
}

// ---------------------------------------------------------------------------
// Normalization

struct Violation {
    std::string rule;  // e.g. "math-delimiter", "table-not-html", "heading-skip"
    size_t line = 0;   // source line where the offending block started
    std::string detail;
};

struct NormalizationReport {
    std::string normalized_text;
    std::vector<Violation> violations;

    bool canonical() const { return violations.empty(); }
};

namespace detail {

inline void emit_spans(const std::vector<InlineSpan>& spans, std::string& out) {
    for (const InlineSpan& s : spans) {
        switch (s.kind) {
            case SpanKind::Text: out += s.text; break;
            case SpanKind::InlineFormula: out += "$" + util::trim(s.text) + "$"; break;
            case SpanKind::DisplayFormula: out += "$$" + util::trim(s.text) + "$$"; break;
            case SpanKind::CodeSpan: out += "`" + s.text + "`"; break;
        }
    }
}

inline std::string rtrim_lines(std::string_view s) {
    std::string out;
    const std::vector<std::string> lines = util::split_lines(s);
    for (size_t i = 0; i < lines.size(); ++i) {
        if (i) out.push_back('\n');
        out += util::rtrim(lines[i]);
    }
    return out;
}

}  // namespace detail

// Rewrites the document into canonical form and reports what had to change.
// Canonical means: inline math in $..$, display math in $$..$$ on its own
// block, every table in canonical HTML, heading levels monotone (a deeper
// jump is clamped to previous+1), two-space list indentation with "-"
// bullets. violations is empty iff the source text was already canonical,
// and normalizing canonical text is a fixed point.
inline NormalizationReport normalize_document(const MarkdownDoc& doc) {
    NormalizationReport rep;
    std::vector<std::string> pieces;          // one per emitted block
    std::vector<bool> piece_is_list;
    auto add = [&](std::string s, bool is_list) {
        pieces.push_back(std::move(s));
        piece_is_list.push_back(is_list);
    };
    auto violate = [&](const char* rule, size_t line, std::string detail) {
        rep.violations.push_back({rule, line, std::move(detail)});
    };

    int prev_heading = 0;
    for (const Block& b : doc.blocks) {
        switch (b.kind) {
            case BlockKind::Heading: {
                int level = b.level;
                if (prev_heading > 0 && level > prev_heading + 1) {
                    level = prev_heading + 1;
                    violate("heading-skip", b.source_line,
                            "level " + std::to_string(b.level) + " after " +
                                std::to_string(prev_heading));
                }
                prev_heading = level;
                add(std::string(static_cast<size_t>(level), '#') + " " +
                        util::collapse_ws(b.text),
                    false);
                break;
            }
            case BlockKind::Paragraph: {
                // display math leaves the paragraph and becomes its own block
                std::string cur;
                for (const InlineSpan& s : b.spans) {
                    if (s.kind == SpanKind::DisplayFormula) {
                        if (s.delim == MathDelim::Bracket)
                            violate("math-delimiter", b.source_line, "\\[..\\] display math");
                        else
                            violate("math-delimiter", b.source_line,
                                    "display math inside a paragraph");
                        if (!util::is_blank(cur)) add(detail::rtrim_lines(util::trim(cur)), false);
                        cur.clear();
                        add("$$" + util::trim(s.text) + "$$", false);
                        continue;
                    }
                    if (s.kind == SpanKind::InlineFormula && s.delim == MathDelim::Paren)
                        violate("math-delimiter", b.source_line, "\\(..\\) inline math");
                    detail::emit_spans({s}, cur);
                }
                if (!util::is_blank(cur)) add(detail::rtrim_lines(util::trim(cur)), false);
                break;
            }
            case BlockKind::Table: {
                if (!b.grid) {
                    add(b.raw, false);  // malformed: nothing safe to rewrite
                    break;
                }
                const std::string canon = serialize_table(*b.grid);
                if (b.pipe_source) {
                    violate("table-not-html", b.source_line, "pipe table");
                } else if (util::trim(b.raw) != canon) {
                    violate("table-canonical-form", b.source_line, "");
                }
                add(canon, false);
                break;
            }
            case BlockKind::DisplayFormula: {
                if (b.delim == MathDelim::Bracket)
                    violate("math-delimiter", b.source_line, "\\[..\\] display math");
                add("$$" + util::trim(b.text) + "$$", false);
                break;
            }
            case BlockKind::ListItem: {
                if (b.indent_spaces != b.level * 2)
                    violate("list-indent", b.source_line,
                            std::to_string(b.indent_spaces) + " spaces");
                std::string marker = b.marker;
                if (!b.ordered && marker != "-") {
                    violate("list-marker", b.source_line, marker + " bullet");
                    marker = "-";
                }
                std::string body;
                detail::emit_spans(b.spans, body);
                add(std::string(static_cast<size_t>(b.level) * 2, ' ') + marker + " " +
                        util::rtrim(body),
                    true);
                break;
            }
            case BlockKind::CodeFence: {
                std::string s = "```" + b.fence_info;
                s.push_back('\n');
                if (!b.text.empty()) {
                    s += b.text;
                    s.push_back('\n');
                }
                s += "```";
                add(s, false);
                break;
            }
        }
    }

    std::string text;
    for (size_t i = 0; i < pieces.size(); ++i) {
        if (i) text += (piece_is_list[i] && piece_is_list[i - 1]) ? "\n" : "\n\n";
        text += pieces[i];
    }
    rep.normalized_text = text;
    if (rep.violations.empty() && text != doc.source)
        violate("whitespace", 0, "spacing differs from canonical form");
    return rep;
}

inline NormalizationReport normalize_text(std::string_view text) {
    return normalize_document(parse_markdown(text));
}

}  // namespace docforge::markup
