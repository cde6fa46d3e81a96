// The three-layer verification cascade. L1 screens out hopeless samples with
// cheap rules, L2 scores cross-source consensus, L3 arbitrates the remainder
// around a medoid candidate. Every verdict carries its evidence so downstream
// consumers never have to re-derive why a sample routed the way it did.
#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "docforge/corpus.hpp"
#include "docforge/diagnostics.hpp"
#include "docforge/latex.hpp"
#include "docforge/markup.hpp"
#include "docforge/metrics.hpp"

namespace docforge::cascade {

// ---------------------------------------------------------------------------
// Candidate screening

// Everything the cascade needs to know about one candidate, computed once.
struct CandidateScreen {
    markup::MarkdownDoc doc;
    std::string stripped;
    std::vector<std::string> formulas;
    std::vector<size_t> table_blocks;  // indices into doc.blocks
    std::vector<BoundingBox> boxes;

    bool blank = false;
    bool gibberish = false;
    bool ast_valid = true;
    bool grid_closed = true;
    bool widths_uniform = true;
    bool heading_valid = true;
    bool list_valid = true;
    size_t normalization_violations = 0;
    double reading_order = 1.0;  // 1 when the candidate carries no boxes
};

namespace detail {

// A page of real content is mostly letters, digits, or non-ASCII script.
// Long stretches of anything else read as decoder garbage.
inline bool looks_gibberish(const std::u32string& cps) {
    if (cps.size() <= 200) return false;
    size_t substantive = 0;
    for (char32_t cp : cps)
        if (cp >= 0x80 || std::isalnum(static_cast<unsigned char>(cp))) ++substantive;
    return static_cast<double>(substantive) < 0.3 * static_cast<double>(cps.size());
}

}  // namespace detail

inline std::vector<BoundingBox> candidate_boxes(const CandidateAnnotation& c) {
    std::vector<BoundingBox> out;
    for (const BoxedText& b : c.boxes) out.push_back(b.box);
    if (out.empty()) {
        // grounded sources may inline their boxes instead of listing them
        BoxParseResult parsed = parse_box_tokens(c.markdown);
        for (const BoxedText& b : parsed.boxes) out.push_back(b.box);
    }
    return out;
}

inline CandidateScreen screen_candidate(const CandidateAnnotation& c) {
    CandidateScreen s;
    s.doc = markup::parse_markdown(c.markdown);
    s.stripped = markup::strip_markup(c.markdown);
    s.blank = s.stripped.empty();
    s.gibberish = detail::looks_gibberish(util::utf8_decode(s.stripped));

    s.formulas = markup::extract_formulas(s.doc);
    for (const std::string& f : s.formulas)
        if (!markup::validate_latex(f).ok) s.ast_valid = false;

    for (size_t i = 0; i < s.doc.blocks.size(); ++i) {
        const markup::Block& b = s.doc.blocks[i];
        if (b.kind != markup::BlockKind::Table) continue;
        s.table_blocks.push_back(i);
        if (!b.grid) {
            s.grid_closed = false;
            s.widths_uniform = false;
            continue;
        }
        if (b.grid->overlap || b.grid->overhang || !markup::grid_closure_check(*b.grid))
            s.grid_closed = false;
        std::vector<size_t> w = markup::effective_row_widths(*b.grid);
        for (size_t r = 1; r < w.size(); ++r)
            if (w[r] != w[0]) s.widths_uniform = false;
    }

    s.heading_valid = markup::heading_hierarchy_valid(s.doc);
    s.list_valid = markup::list_indent_valid(s.doc);
    s.normalization_violations = markup::normalize_document(s.doc).violations.size();
    s.boxes = candidate_boxes(c);
    if (!s.boxes.empty()) s.reading_order = metrics::reading_order_score(s.boxes);
    return s;
}

// ---------------------------------------------------------------------------
// Pairwise consensus statistics

struct PairwiseStats {
    double mean_ed = 0.0;          // stripped-text edit distance
    double mean_iou = 1.0;         // layout agreement of box sets
    double mean_divergence = 0.0;  // document-tree divergence
    double formula_agreement = 1.0;
    double table_agreement = 1.0;
    bool confusable_pair = false;
    std::vector<double> source_ed;  // mean distance of candidate i to the rest
};

inline double formula_pair_agreement(const std::vector<std::string>& a,
                                     const std::vector<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    const size_t lo = std::min(a.size(), b.size());
    const size_t hi = std::max(a.size(), b.size());
    double sum = 0.0;
    for (size_t i = 0; i < lo; ++i) sum += metrics::cdm_surrogate(a[i], b[i]);
    return sum / static_cast<double>(hi);
}

// Tables compare index-aligned; a slot where either side failed to parse
// contributes nothing.
inline double table_pair_agreement(const CandidateScreen& a, const CandidateScreen& b) {
    if (a.table_blocks.empty() && b.table_blocks.empty()) return 1.0;
    const size_t lo = std::min(a.table_blocks.size(), b.table_blocks.size());
    const size_t hi = std::max(a.table_blocks.size(), b.table_blocks.size());
    double sum = 0.0;
    for (size_t i = 0; i < lo; ++i) {
        const auto& ga = a.doc.blocks[a.table_blocks[i]].grid;
        const auto& gb = b.doc.blocks[b.table_blocks[i]].grid;
        if (ga && gb) sum += metrics::teds(metrics::table_tree(*ga), metrics::table_tree(*gb));
    }
    return sum / static_cast<double>(hi);
}

inline PairwiseStats compute_pairwise(const std::vector<CandidateScreen>& screens) {
    PairwiseStats ps;
    const size_t n = screens.size();
    ps.source_ed.assign(n, 0.0);
    if (n < 2) return ps;

    double ed = 0, iou = 0, div = 0, fa = 0, ta = 0;
    size_t pairs = 0;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            const double e = metrics::norm_edit_distance(screens[i].stripped, screens[j].stripped);
            ed += e;
            ps.source_ed[i] += e;
            ps.source_ed[j] += e;
            iou += metrics::layout_agreement(screens[i].boxes, screens[j].boxes);
            div += metrics::structural_divergence(screens[i].doc, screens[j].doc);
            fa += formula_pair_agreement(screens[i].formulas, screens[j].formulas);
            ta += table_pair_agreement(screens[i], screens[j]);
            if (!ps.confusable_pair &&
                diagnostics::confusable_only_difference(screens[i].stripped, screens[j].stripped))
                ps.confusable_pair = true;
            ++pairs;
        }
    }
    const double p = static_cast<double>(pairs);
    ps.mean_ed = ed / p;
    ps.mean_iou = iou / p;
    ps.mean_divergence = div / p;
    ps.formula_agreement = fa / p;
    ps.table_agreement = ta / p;
    for (double& s : ps.source_ed) s /= static_cast<double>(n - 1);
    return ps;
}

inline double consensus_score(const PairwiseStats& ps, const EngineConfig& cfg) {
    return cfg.w1 * (1.0 - ps.mean_ed) + cfg.w2 * ps.mean_iou + cfg.w3 * (1.0 - ps.mean_divergence);
}

inline ModalityConfidence modality_confidence(const PairwiseStats& ps) {
    ModalityConfidence mc;
    mc.text = 1.0 - ps.mean_ed;
    mc.formula = ps.formula_agreement;
    mc.table = ps.table_agreement;
    mc.layout = ps.mean_iou;
    return mc;
}

// Candidate with the least total distance to the others; ties go to the
// lexicographically smallest source id so reruns pick the same winner.
inline size_t medoid_index(const SampleRecord& sample, const std::vector<CandidateScreen>& screens) {
    size_t best = 0;
    double best_total = 0.0;
    for (size_t i = 0; i < screens.size(); ++i) {
        double total = 0.0;
        for (size_t j = 0; j < screens.size(); ++j)
            if (j != i) total += metrics::norm_edit_distance(screens[i].stripped, screens[j].stripped);
        if (i == 0 || total < best_total - 1e-12 ||
            (total <= best_total + 1e-12 &&
             sample.candidates[i].source_id < sample.candidates[best].source_id)) {
            best = i;
            best_total = total;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Routing

struct RouteResult {
    VerdictRecord verdict;
    std::vector<CandidateScreen> screens;
    PairwiseStats pairwise;
    int medoid = -1;  // set whenever arbitration ran
};

inline RouteResult route(const SampleRecord& sample, const EngineConfig& cfg) {
    RouteResult rr;
    rr.verdict.sample_id = sample.id;
    rr.screens.reserve(sample.candidates.size());
    for (const CandidateAnnotation& c : sample.candidates)
        rr.screens.push_back(screen_candidate(c));
    const size_t n = rr.screens.size();

    diagnostics::SampleSignals sig;
    sig.candidate_count = n;
    double min_order = 1.0;
    for (const CandidateScreen& s : rr.screens) {
        sig.blank_count += s.blank;
        sig.gibberish_count += s.gibberish;
        sig.ast_valid_count += s.ast_valid;
        sig.grid_closed_count += s.grid_closed;
        sig.widths_uniform_count += s.widths_uniform;
        sig.heading_valid_count += s.heading_valid;
        sig.list_valid_count += s.list_valid;
        sig.normalization_violations += s.normalization_violations;
        if (s.reading_order < min_order) min_order = s.reading_order;
        if (!s.boxes.empty()) sig.boxes_present = true;
    }
    sig.min_reading_order = min_order;

    auto& ev = rr.verdict.evidence;
    ev["candidate_count"] = static_cast<double>(n);
    ev["ast_valid_cands"] = static_cast<double>(sig.ast_valid_count);
    ev["grid_closure_cands"] = static_cast<double>(sig.grid_closed_count);
    ev["row_width_uniform_cands"] = static_cast<double>(sig.widths_uniform_count);
    ev["heading_valid_cands"] = static_cast<double>(sig.heading_valid_count);
    ev["list_valid_cands"] = static_cast<double>(sig.list_valid_count);
    ev["normalization_violations"] = static_cast<double>(sig.normalization_violations);
    ev["reading_order_cands"] = min_order;
    ev["reference_stripped"] =
        sample.reference && !markup::strip_markup(sample.reference->markdown).empty() ? 1.0 : 0.0;

    // L1: reject only when every candidate is unusable
    if (n == 0 || sig.blank_count == n || sig.blank_count + sig.gibberish_count == n) {
        rr.verdict.state = VerdictState::Reject;
        rr.verdict.layer = CascadeLayer::L1;
        rr.verdict.error_tags = n == 0 ? std::vector<std::string>{"recognition:blank"}
                                       : diagnostics::classify_errors(sig, cfg);
        return rr;
    }

    bool consensus_known = false;
    if (n >= cfg.min_candidates) {
        // L2: score agreement between sources
        rr.pairwise = compute_pairwise(rr.screens);
        sig.mean_ed = rr.pairwise.mean_ed;
        sig.mean_iou = rr.pairwise.mean_iou;
        sig.mean_divergence = rr.pairwise.mean_divergence;
        sig.confusable_pair = rr.pairwise.confusable_pair;
        for (size_t i = 0; i < n; ++i)
            ev["source_ed:" + sample.candidates[i].source_id] = rr.pairwise.source_ed[i];
        ev["mean_ed"] = rr.pairwise.mean_ed;
        ev["mean_iou"] = rr.pairwise.mean_iou;
        ev["mean_divergence"] = rr.pairwise.mean_divergence;
        const double c = consensus_score(rr.pairwise, cfg);
        rr.verdict.consensus = c;
        consensus_known = true;
        rr.verdict.error_tags = diagnostics::classify_errors(sig, cfg);
        if (c >= cfg.tau) {
            rr.verdict.state = VerdictState::Pass;
            rr.verdict.layer = CascadeLayer::L2;
            rr.verdict.confidence = modality_confidence(rr.pairwise);
            return rr;
        }
    } else {
        // too few sources for consensus; arbitration judges the lone candidate
        rr.verdict.error_tags = diagnostics::classify_errors(sig, cfg);
    }

    // L3: arbitrate around the medoid
    const size_t m = medoid_index(sample, rr.screens);
    rr.medoid = static_cast<int>(m);
    const CandidateScreen& md = rr.screens[m];
    const bool round_trip = md.normalization_violations == 0;

    ev["medoid_index"] = static_cast<double>(m);
    ev["medoid_ast_validity"] = md.ast_valid ? 1.0 : 0.0;
    ev["medoid_grid_closure"] = md.grid_closed ? 1.0 : 0.0;
    ev["medoid_row_width_uniform"] = md.widths_uniform ? 1.0 : 0.0;
    ev["medoid_heading_valid"] = md.heading_valid ? 1.0 : 0.0;
    ev["medoid_list_valid"] = md.list_valid ? 1.0 : 0.0;
    ev["medoid_reading_order"] = md.reading_order;
    ev["medoid_round_trip"] = round_trip ? 1.0 : 0.0;

    const double floor_min =
        std::min({ev["medoid_ast_validity"], ev["medoid_grid_closure"],
                  ev["medoid_row_width_uniform"], ev["medoid_heading_valid"],
                  ev["medoid_list_valid"], ev["medoid_reading_order"]});

    const ModalityConfidence mc = modality_confidence(rr.pairwise);
    rr.verdict.layer = CascadeLayer::L3;
    rr.verdict.confidence = mc;
    if (!consensus_known) rr.verdict.consensus.reset();

    if (floor_min >= cfg.pass_floor && round_trip) {
        rr.verdict.state = VerdictState::Pass;
    } else if ((!md.ast_valid || !md.grid_closed) && mc.min_value() < cfg.reject_floor) {
        rr.verdict.state = VerdictState::Reject;
    } else {
        rr.verdict.state = VerdictState::Pending;
    }
    return rr;
}

}  // namespace docforge::cascade
