// Per-dimension annotation rewards against a reference annotation: text
// fidelity, formula fidelity, table fidelity, and reference-free structural
// self-consistency. All rewards live in [0,1]. A text score under the
// configured floor zeroes the other dimensions, since alignment of formulas
// or tables means nothing when the prose channel is garbage.
#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "docforge/corpus.hpp"
#include "docforge/markup.hpp"
#include "docforge/metrics.hpp"

namespace docforge::rewards {

// ---------------------------------------------------------------------------
// Text

inline double r_text(std::string_view pred_md, std::string_view ref_md) {
    return 1.0 - metrics::norm_edit_distance(markup::strip_markup(pred_md),
                                             markup::strip_markup(ref_md));
}

// ---------------------------------------------------------------------------
// Formulas

// Index-aligned against the reference formulas (reading order). A missing
// prediction scores zero for its slot. With no reference formulas, inventing
// formulas is itself the failure.
inline double r_formula(const markup::MarkdownDoc& pred, const markup::MarkdownDoc& ref,
                        const EngineConfig& cfg) {
    const std::vector<std::string> pf = markup::extract_formulas(pred);
    const std::vector<std::string> rf = markup::extract_formulas(ref);
    if (rf.empty()) return pf.empty() ? 1.0 : 0.0;
    double total = 0.0;
    for (size_t k = 0; k < rf.size(); ++k) {
        if (k >= pf.size()) continue;  // contributes 0
        const double compiles = markup::validate_latex(pf[k]).ok ? 1.0 : 0.0;
        const double content = metrics::cdm_surrogate(pf[k], rf[k]);
        total += cfg.alpha * compiles + (1.0 - cfg.alpha) * content;
    }
    return total / static_cast<double>(rf.size());
}

// ---------------------------------------------------------------------------
// Tables

// Geometry-only shape score for one predicted table against one reference
// table: parse soundness, uniform row widths, and a row-count decay.
inline double shape_score(const markup::Block& pred, const markup::Block& ref, double gamma) {
    if (!pred.grid || !ref.grid) return 0.0;
    const markup::TableGrid& pg = *pred.grid;
    const bool wellformed = !pg.overlap && !pg.overhang;
    if (!wellformed) return 0.0;
    const std::vector<size_t> widths = markup::effective_row_widths(pg);
    for (const size_t w : widths)
        if (w != widths.front()) return 0.0;
    const long dn = static_cast<long>(pg.rows.size()) - static_cast<long>(ref.grid->rows.size());
    return std::exp(-gamma * static_cast<double>(dn < 0 ? -dn : dn));
}

inline double r_table(const markup::MarkdownDoc& pred, const markup::MarkdownDoc& ref,
                      const EngineConfig& cfg) {
    const std::vector<const markup::Block*> pt = markup::extract_tables(pred);
    const std::vector<const markup::Block*> rt = markup::extract_tables(ref);
    if (rt.empty()) return pt.empty() ? 1.0 : 0.0;
    double total = 0.0;
    for (size_t k = 0; k < rt.size(); ++k) {
        if (k >= pt.size() || !rt[k]->grid) continue;
        const markup::Block& p = *pt[k];
        const double shape = shape_score(p, *rt[k], cfg.gamma);
        const double tree_sim =
            p.grid ? metrics::teds(metrics::table_tree(*p.grid), metrics::table_tree(*rt[k]->grid))
                   : 0.0;
        total += cfg.beta * shape + (1.0 - cfg.beta) * tree_sim;
    }
    return total / static_cast<double>(rt.size());
}

// ---------------------------------------------------------------------------
// Structure (reference-free)

struct MarkerBalance {
    std::string marker;
    size_t opens = 0;
    size_t closes = 0;
};

namespace detail {

// Counts tag occurrences "<name" / "</name" with a non-name character after.
inline void count_tag(std::string_view src, std::string_view name, size_t& opens,
                      size_t& closes) {
    size_t i = 0;
    while ((i = src.find('<', i)) != std::string_view::npos) {
        size_t j = i + 1;
        bool closing = false;
        if (j < src.size() && src[j] == '/') { closing = true; ++j; }
        if (src.compare(j, name.size(), name) == 0) {
            const size_t after = j + name.size();
            const char c = after < src.size() ? src[after] : '>';
            const bool boundary = !((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                                    (c >= '0' && c <= '9'));
            if (boundary) (closing ? closes : opens) += 1;
        }
        ++i;
    }
}

}  // namespace detail

// Balance counts for the ten structure markers: the four span markers and
// the six table tags. Symmetric span markers split their occurrence count
// into ceil/floor halves, so an odd count shows up as a one-sided surplus.
inline std::vector<MarkerBalance> marker_balances(std::string_view src) {
    size_t bold = 0, under = 0, dollar = 0, tick = 0;
    size_t i = 0;
    while (i < src.size()) {
        const char c = src[i];
        if (c == '\\' && i + 1 < src.size()) { i += 2; continue; }
        if (c == '*' && i + 1 < src.size() && src[i + 1] == '*') { ++bold; i += 2; continue; }
        if (c == '_' && i + 1 < src.size() && src[i + 1] == '_') { ++under; i += 2; continue; }
        if (c == '$') { ++dollar; ++i; continue; }
        if (c == '`') { ++tick; ++i; continue; }
        ++i;
    }
    std::vector<MarkerBalance> out;
    auto symmetric = [&](const char* name, size_t count) {
        out.push_back({name, (count + 1) / 2, count / 2});
    };
    symmetric("**", bold);
    symmetric("__", under);
    symmetric("$", dollar);
    symmetric("`", tick);
    for (const char* tag : {"table", "thead", "tbody", "tr", "td", "th"}) {
        MarkerBalance mb{tag, 0, 0};
        detail::count_tag(src, tag, mb.opens, mb.closes);
        out.push_back(std::move(mb));
    }
    return out;
}

// Self-consistency of the markup itself: marker balance averaged over the
// ten marker kinds, zeroed outright when heading or list nesting is broken.
inline double r_struct(const markup::MarkdownDoc& pred, const EngineConfig& cfg) {
    const std::vector<MarkerBalance> balances = marker_balances(pred.source);
    double penalty = 0.0;
    for (const MarkerBalance& mb : balances) {
        const double no = static_cast<double>(mb.opens);
        const double nc = static_cast<double>(mb.closes);
        const double diff = no > nc ? no - nc : nc - no;
        penalty += diff / (no + nc + cfg.epsilon);
    }
    const double balance = 1.0 - penalty / static_cast<double>(balances.size());
    const bool valid =
        markup::heading_hierarchy_valid(pred) && markup::list_indent_valid(pred);
    return valid ? balance : 0.0;
}

// ---------------------------------------------------------------------------
// Combined

struct RewardVector {
    double text = 0.0;
    double formula = 0.0;
    double table = 0.0;
    double structure = 0.0;
    bool gated = false;  // true when text fell below the floor and zeroed the rest
};

inline RewardVector compute_rewards(std::string_view pred_md, std::string_view ref_md,
                                    const EngineConfig& cfg) {
    const markup::MarkdownDoc pred = markup::parse_markdown(pred_md);
    const markup::MarkdownDoc ref = markup::parse_markdown(ref_md);
    RewardVector rv;
    rv.text = r_text(pred_md, ref_md);
    rv.formula = r_formula(pred, ref, cfg);
    rv.table = r_table(pred, ref, cfg);
    rv.structure = r_struct(pred, cfg);
    if (rv.text < cfg.tau_text) {
        rv.formula = 0.0;
        rv.table = 0.0;
        rv.structure = 0.0;
        rv.gated = true;
    }
    return rv;
}

}  // namespace docforge::rewards
