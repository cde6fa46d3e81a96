// HTML table grids: a strict parser for the closed tag subset
// {table, thead, tbody, tr, td, th}, colspan/rowspan resolution into an
// occupancy matrix, the closure check, and the canonical serializer.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "docforge/util.hpp"

namespace docforge::markup {

struct TableCell {
    std::string text;  // decoded cell content, stored as written
    int colspan = 1;
    int rowspan = 1;
    bool header = false;  // th vs td
};

struct TableGrid {
    std::vector<std::vector<TableCell>> rows;

    // Derived by resolve_spans(); owner[r][c] is a flat cell index or -1.
    std::vector<std::vector<int>> owner;
    bool overlap = false;   // span resolution tried to claim a taken slot
    bool overhang = false;  // a rowspan reached past the last authored row

    size_t cell_count() const {
        size_t n = 0;
        for (const auto& r : rows) n += r.size();
        return n;
    }
};

// Places every cell at the next free column of its row and claims its
// colspan x rowspan rectangle. First claim wins; conflicts set `overlap`.
inline void resolve_spans(TableGrid& g) {
    g.owner.assign(g.rows.size(), {});
    g.overlap = false;
    g.overhang = false;
    auto claim = [&](size_t r, size_t c, int idx) {
        if (r >= g.owner.size()) {
            if (r >= g.rows.size()) g.overhang = true;
            g.owner.resize(r + 1);
        }
        if (c >= g.owner[r].size()) g.owner[r].resize(c + 1, -1);
        if (g.owner[r][c] != -1) g.overlap = true;
        else g.owner[r][c] = idx;
    };
    int flat = 0;
    for (size_t r = 0; r < g.rows.size(); ++r) {
        size_t col = 0;
        for (const TableCell& cell : g.rows[r]) {
            while (col < g.owner[r].size() && g.owner[r][col] != -1) ++col;
            for (int dr = 0; dr < cell.rowspan; ++dr)
                for (int dc = 0; dc < cell.colspan; ++dc)
                    claim(r + dr, col + dc, flat);
            col += cell.colspan;
            ++flat;
        }
    }
}

// Claimed slots per authored row (inherited rowspan columns included).
inline std::vector<size_t> effective_row_widths(const TableGrid& g) {
    std::vector<size_t> widths;
    widths.reserve(g.rows.size());
    for (size_t r = 0; r < g.rows.size(); ++r) {
        size_t w = 0;
        if (r < g.owner.size())
            for (int o : g.owner[r])
                if (o != -1) ++w;
        widths.push_back(w);
    }
    return widths;
}

// True when the occupancy matrix is a full rectangle: every slot claimed
// exactly once, uniform row width, nothing reaching past the last row.
// An empty table is closed by convention.
inline bool grid_closure_check(const TableGrid& g) {
    if (g.rows.empty()) return true;
    if (g.overlap || g.overhang) return false;
    if (g.owner.size() != g.rows.size()) return false;
    const size_t width = g.owner.empty() ? 0 : g.owner[0].size();
    if (width == 0) return false;
    for (const auto& row : g.owner) {
        if (row.size() != width) return false;
        for (int o : row)
            if (o == -1) return false;
    }
    return true;
}

namespace detail {

inline std::string decode_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    size_t i = 0;
    while (i < s.size()) {
        if (s[i] != '&') { out.push_back(s[i++]); continue; }
        const size_t semi = s.find(';', i);
        if (semi == std::string_view::npos || semi - i > 8) { out.push_back(s[i++]); continue; }
        const std::string_view name = s.substr(i + 1, semi - i - 1);
        if (name == "amp") out.push_back('&');
        else if (name == "lt") out.push_back('<');
        else if (name == "gt") out.push_back('>');
        else if (name == "quot") out.push_back('"');
        else if (name == "apos" || name == "#39") out.push_back('\'');
        else if (name == "nbsp") out.push_back(' ');
        else if (name.size() > 1 && name[0] == '#') {
            char32_t cp = 0;
            bool ok = true;
            for (size_t k = 1; k < name.size(); ++k) {
                if (name[k] < '0' || name[k] > '9') { ok = false; break; }
                cp = cp * 10 + static_cast<char32_t>(name[k] - '0');
                if (cp > 0x10FFFF) { ok = false; break; }
            }
            if (!ok) { out.push_back(s[i++]); continue; }
            util::utf8_append(out, cp);
        } else {
            out.push_back(s[i++]);
            continue;
        }
        i = semi + 1;
    }
    return out;
}

inline std::string escape_entities(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out.push_back(c);
    }
    return out;
}

struct Tag {
    bool closing = false;
    std::string name;  // lowercased
    int colspan = 1;
    int rowspan = 1;
    size_t begin = 0;  // offset of '<'
    size_t end = 0;    // offset just past '>'
    bool span_error = false;
    std::string span_error_what;
};

inline bool tag_name_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

// Tries to read a tag at `pos`. Returns nullopt when the '<' does not start
// anything tag-shaped (then it is literal text, e.g. "x < y").
inline std::optional<Tag> read_tag(std::string_view html, size_t pos) {
    Tag tag;
    tag.begin = pos;
    size_t i = pos + 1;
    if (i < html.size() && html[i] == '/') { tag.closing = true; ++i; }
    const size_t name_start = i;
    while (i < html.size() && tag_name_char(html[i])) ++i;
    if (i == name_start) return std::nullopt;
    tag.name = std::string(html.substr(name_start, i - name_start));
    for (char& c : tag.name) c = static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
    // attributes: name, name=bare, name="..", name='..'; unknown names skipped
    while (i < html.size()) {
        while (i < html.size() && util::is_ascii_space(html[i])) ++i;
        if (i >= html.size()) return std::nullopt;
        if (html[i] == '>') { tag.end = i + 1; return tag; }
        if (html[i] == '/') return std::nullopt;  // self-closing is outside the subset
        const size_t an = i;
        while (i < html.size() && (tag_name_char(html[i]) || html[i] == '-')) ++i;
        if (i == an) return std::nullopt;
        std::string attr(html.substr(an, i - an));
        for (char& c : attr) c = static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
        std::string value;
        bool has_value = false;
        if (i < html.size() && html[i] == '=') {
            ++i;
            has_value = true;
            if (i < html.size() && (html[i] == '"' || html[i] == '\'')) {
                const char q = html[i++];
                const size_t vs = i;
                while (i < html.size() && html[i] != q) ++i;
                if (i >= html.size()) return std::nullopt;
                value = std::string(html.substr(vs, i - vs));
                ++i;
            } else {
                const size_t vs = i;
                while (i < html.size() && !util::is_ascii_space(html[i]) && html[i] != '>') ++i;
                value = std::string(html.substr(vs, i - vs));
            }
        }
        if (attr == "colspan" || attr == "rowspan") {
            int v = 0;
            bool ok = has_value && !value.empty() && value.size() <= 6;
            if (ok)
                for (char c : value) {
                    if (c < '0' || c > '9') { ok = false; break; }
                    v = v * 10 + (c - '0');
                }
            if (!ok || v < 1) {
                tag.span_error = true;
                tag.span_error_what = attr + " must be a positive integer";
            } else if (attr == "colspan") {
                tag.colspan = v;
            } else {
                tag.rowspan = v;
            }
        }
    }
    return std::nullopt;  // ran off the end before '>'
}

inline bool known_table_tag(std::string_view name) {
    return name == "table" || name == "thead" || name == "tbody" || name == "tr" ||
           name == "td" || name == "th";
}

}  // namespace detail

struct TableParseResult {
    std::optional<TableGrid> grid;
    std::string error;
    size_t error_pos = 0;  // byte offset of the first offense

    bool ok() const { return grid.has_value(); }
};

// Strict parser for the closed subset. Mis-nesting, unclosed tags, unknown
// tags, text between structural tags, and nested tables are all
// well-formedness errors carrying the first offending byte offset.
inline TableParseResult parse_html_table(std::string_view html) {
    using detail::Tag;
    TableParseResult res;
    auto fail = [&](size_t pos, const std::string& what) {
        res.grid.reset();
        res.error = what;
        res.error_pos = pos;
        return res;
    };

    TableGrid grid;
    size_t i = 0;
    enum class Where { BeforeTable, InTable, InSection, InRow, Done };
    Where where = Where::BeforeTable;
    bool in_section_row = false;  // current row opened inside thead/tbody
    std::string section;          // "thead" or "tbody" when inside one
    std::vector<TableCell>* row = nullptr;

    while (i < html.size()) {
        // between tags only whitespace is allowed (cell text is read below)
        if (util::is_ascii_space(html[i])) { ++i; continue; }
        if (html[i] != '<') {
            if (where == Where::Done) return fail(i, "content after </table>");
            return fail(i, "text outside a cell");
        }
        auto tag = detail::read_tag(html, i);
        if (!tag) return fail(i, "malformed tag");
        if (!detail::known_table_tag(tag->name)) return fail(i, "unknown tag <" + tag->name + ">");
        if (tag->span_error) return fail(i, tag->span_error_what);

        switch (where) {
            case Where::BeforeTable:
                if (tag->closing || tag->name != "table") return fail(i, "expected <table>");
                where = Where::InTable;
                break;
            case Where::InTable:
                if (!tag->closing && (tag->name == "thead" || tag->name == "tbody")) {
                    section = tag->name;
                    where = Where::InSection;
                } else if (!tag->closing && tag->name == "tr") {
                    grid.rows.emplace_back();
                    row = &grid.rows.back();
                    in_section_row = false;
                    where = Where::InRow;
                } else if (tag->closing && tag->name == "table") {
                    where = Where::Done;
                } else {
                    return fail(i, "unexpected <" + std::string(tag->closing ? "/" : "") +
                                       tag->name + "> inside <table>");
                }
                break;
            case Where::InSection:
                if (!tag->closing && tag->name == "tr") {
                    grid.rows.emplace_back();
                    row = &grid.rows.back();
                    in_section_row = true;
                    where = Where::InRow;
                } else if (tag->closing && tag->name == section) {
                    section.clear();
                    where = Where::InTable;
                } else {
                    return fail(i, "unexpected <" + std::string(tag->closing ? "/" : "") +
                                       tag->name + "> inside <" + section + ">");
                }
                break;
            case Where::InRow: {
                if (tag->closing && tag->name == "tr") {
                    where = in_section_row ? Where::InSection : Where::InTable;
                    break;
                }
                if (tag->closing || (tag->name != "td" && tag->name != "th"))
                    return fail(i, "unexpected <" + std::string(tag->closing ? "/" : "") +
                                       tag->name + "> inside <tr>");
                TableCell cell;
                cell.header = tag->name == "th";
                cell.colspan = tag->colspan;
                cell.rowspan = tag->rowspan;
                // cell content: scan for the matching close; tag-shaped '<'
                // runs must be this cell's closer, anything else is an error
                size_t j = tag->end;
                std::string content;
                bool closed = false;
                while (j < html.size()) {
                    if (html[j] != '<') { content.push_back(html[j++]); continue; }
                    auto inner = detail::read_tag(html, j);
                    if (!inner) { content.push_back(html[j++]); continue; }
                    if (!detail::known_table_tag(inner->name))
                        return fail(j, "unknown tag <" + inner->name + "> inside a cell");
                    if (inner->closing && inner->name == tag->name) {
                        cell.text = detail::decode_entities(content);
                        row->push_back(std::move(cell));
                        i = inner->end;
                        closed = true;
                        break;
                    }
                    if (!inner->closing && inner->name == "table")
                        return fail(j, "nested table");
                    return fail(j, "unexpected <" + std::string(inner->closing ? "/" : "") +
                                       inner->name + "> inside a cell");
                }
                if (!closed) return fail(tag->begin, "unclosed <" + tag->name + ">");
                continue;  // i already advanced past the cell closer
            }
            case Where::Done:
                return fail(i, "content after </table>");
        }
        i = tag->end;
    }
    if (where != Where::Done) return fail(html.size(), "unclosed <table>");
    resolve_spans(grid);
    res.grid = std::move(grid);
    return res;
}

// Canonical form: lowercase tags, no whitespace between tags, colspan before
// rowspan, span attributes only when greater than one. parse_html_table
// accepts exactly this shape back (round-trip).
inline std::string serialize_table(const TableGrid& g) {
    std::string out = "<table>";
    for (const auto& row : g.rows) {
        out += "<tr>";
        for (const TableCell& cell : row) {
            const char* tag = cell.header ? "th" : "td";
            out += '<';
            out += tag;
            if (cell.colspan > 1) out += " colspan=\"" + std::to_string(cell.colspan) + "\"";
            if (cell.rowspan > 1) out += " rowspan=\"" + std::to_string(cell.rowspan) + "\"";
            out += '>';
            out += detail::escape_entities(cell.text);
            out += "</";
            out += tag;
            out += '>';
        }
        out += "</tr>";
    }
    out += "</table>";
    return out;
}

}  // namespace docforge::markup
