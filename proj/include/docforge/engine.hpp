// Pipeline orchestration: corpus-wide verification, per-sample quality
// scoring, the gated repair loop, and training-set admission. Everything here
// is deterministic for a fixed config, so worker count never changes output.
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "docforge/augment.hpp"
#include "docforge/cascade.hpp"
#include "docforge/corpus.hpp"
#include "docforge/diagnostics.hpp"
#include "docforge/metrics.hpp"
#include "docforge/util.hpp"

namespace docforge::engine {

// ---------------------------------------------------------------------------
// Verification

inline std::vector<VerdictRecord> verify_corpus(const std::vector<SampleRecord>& samples,
                                                const EngineConfig& cfg, unsigned workers) {
    return util::parallel_map_ordered<VerdictRecord>(
        samples.size(), workers,
        [&](size_t i) { return cascade::route(samples[i], cfg).verdict; });
}

// ---------------------------------------------------------------------------
// Composite page score

// Scores center on the medoid candidate. With a reference annotation the
// text, layout, and semantic parts compare against it; without one they fall
// back to cross-source agreement.
inline diagnostics::DpcsResult dpcs_for_sample(const SampleRecord& sample,
                                               const cascade::RouteResult& rr,
                                               const EngineConfig& cfg) {
    diagnostics::DpcsSubscores s;
    if (rr.screens.empty()) {
        s = {0, 0, 0, 0, 0, 0};
        return diagnostics::dpcs_score(s, cfg);
    }
    const size_t m = rr.medoid >= 0 ? static_cast<size_t>(rr.medoid)
                                    : cascade::medoid_index(sample, rr.screens);
    const cascade::CandidateScreen& md = rr.screens[m];

    std::string ref_strip;
    std::vector<BoundingBox> ref_boxes;
    const bool has_ref = sample.reference.has_value();
    if (has_ref) {
        ref_strip = markup::strip_markup(sample.reference->markdown);
        for (const BoxedText& b : sample.reference->boxes) ref_boxes.push_back(b.box);
    }

    s.text = has_ref ? 1.0 - metrics::norm_edit_distance(md.stripped, ref_strip)
                     : 1.0 - rr.pairwise.mean_ed;
    s.layout = has_ref && !ref_boxes.empty() ? metrics::layout_agreement(md.boxes, ref_boxes)
                                             : rr.pairwise.mean_iou;
    s.order = md.reading_order;
    s.structure = (static_cast<double>(md.ast_valid) + static_cast<double>(md.grid_closed) +
                   static_cast<double>(md.widths_uniform) + static_cast<double>(md.heading_valid) +
                   static_cast<double>(md.list_valid)) /
                  5.0;
    s.format = 1.0 / (1.0 + static_cast<double>(md.normalization_violations));
    if (has_ref) {
        s.semantic = metrics::numerical_consistency(md.stripped, ref_strip);
    } else if (rr.screens.size() >= 2) {
        double sum = 0.0;
        size_t pairs = 0;
        for (size_t i = 0; i < rr.screens.size(); ++i)
            for (size_t j = i + 1; j < rr.screens.size(); ++j) {
                sum += metrics::numerical_consistency(rr.screens[i].stripped,
                                                      rr.screens[j].stripped);
                ++pairs;
            }
        s.semantic = sum / static_cast<double>(pairs);
    }
    return diagnostics::dpcs_score(s, cfg);
}

inline diagnostics::DpcsResult dpcs_for_sample(const SampleRecord& sample,
                                               const EngineConfig& cfg) {
    return dpcs_for_sample(sample, cascade::route(sample, cfg), cfg);
}

// ---------------------------------------------------------------------------
// Repair

// A repair replaces one byte span of one candidate. pre_text, when given,
// must match the replaced span exactly; it guards against stale offsets.
struct RepairRegion {
    size_t offset = 0;
    size_t pre_len = 0;
    size_t post_len = 0;
};

struct RepairSubmission {
    std::string sample_id;
    std::string source_id;
    RepairRegion region;
    std::string pre_text;
    std::string replacement;
};

inline json to_json(const RepairSubmission& r) {
    return json{{"sample_id", r.sample_id},
                {"source_id", r.source_id},
                {"region",
                 {{"offset", r.region.offset},
                  {"pre_len", r.region.pre_len},
                  {"post_len", r.region.post_len}}},
                {"pre_text", r.pre_text},
                {"replacement", r.replacement}};
}

inline RepairSubmission repair_from_json(const json& j) {
    RepairSubmission r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.source_id = j.at("source_id").get<std::string>();
    const json& reg = j.at("region");
    r.region.offset = reg.at("offset").get<size_t>();
    r.region.pre_len = reg.at("pre_len").get<size_t>();
    r.region.post_len = reg.at("post_len").get<size_t>();
    if (j.contains("pre_text")) r.pre_text = j.at("pre_text").get<std::string>();
    r.replacement = j.at("replacement").get<std::string>();
    return r;
}

struct RepairGates {
    bool confidence_gain = false;
    bool red_bounds = false;
    bool arbitration_pass = false;
};

struct RepairOutcome {
    std::string sample_id;
    std::string source_id;
    bool accepted = false;
    std::string reason;  // "accepted", a failed gate name, or an integrity error
    RepairGates gates;
    std::optional<VerdictRecord> reverdict;
    std::string repaired_markdown;
};

inline json to_json(const RepairOutcome& o) {
    json j{{"sample_id", o.sample_id},
           {"source_id", o.source_id},
           {"accepted", o.accepted},
           {"reason", o.reason},
           {"gates",
            {{"confidence-gain", o.gates.confidence_gain},
             {"red-bounds", o.gates.red_bounds},
             {"arbitration-pass", o.gates.arbitration_pass}}}};
    if (o.reverdict) j["reverdict"] = to_json(*o.reverdict);
    return j;
}

// Three gates, all required: the sample's mean modality confidence must
// rise, the edit must stay inside the per-modality distance bounds, and the
// repaired sample must re-route to a pass.
inline RepairOutcome evaluate_repair(const SampleRecord& sample, const RepairSubmission& sub,
                                     const EngineConfig& cfg) {
    RepairOutcome out;
    out.sample_id = sub.sample_id;
    out.source_id = sub.source_id;

    size_t idx = sample.candidates.size();
    for (size_t i = 0; i < sample.candidates.size(); ++i)
        if (sample.candidates[i].source_id == sub.source_id) idx = i;
    if (idx == sample.candidates.size()) {
        out.reason = "unknown-source";
        return out;
    }
    const std::string& md = sample.candidates[idx].markdown;
    if (sub.region.offset + sub.region.pre_len > md.size() ||
        sub.replacement.size() != sub.region.post_len ||
        (!sub.pre_text.empty() &&
         md.compare(sub.region.offset, sub.region.pre_len, sub.pre_text) != 0)) {
        out.reason = "region-mismatch";
        return out;
    }

    cascade::RouteResult before = cascade::route(sample, cfg);
    if (before.verdict.state != VerdictState::Pending) {
        out.reason = "not-pending";
        return out;
    }

    SampleRecord repaired = sample;
    repaired.candidates[idx].markdown = md.substr(0, sub.region.offset) + sub.replacement +
                                        md.substr(sub.region.offset + sub.region.pre_len);
    cascade::RouteResult after = cascade::route(repaired, cfg);
    out.reverdict = after.verdict;
    out.repaired_markdown = repaired.candidates[idx].markdown;

    // mean, not min: a textual repair cannot move layout confidence, so a
    // min-based gate would deadlock whenever layout is the weakest modality
    const double c0 = before.verdict.confidence ? before.verdict.confidence->mean_value() : 0.0;
    const double c1 = after.verdict.confidence ? after.verdict.confidence->mean_value() : 0.0;
    out.gates.confidence_gain = c1 > c0;

    const cascade::CandidateScreen& b = before.screens[idx];
    const cascade::CandidateScreen& a = after.screens[idx];
    const double ed_text = metrics::norm_edit_distance(b.stripped, a.stripped);
    const double ed_formula = 1.0 - cascade::formula_pair_agreement(b.formulas, a.formulas);
    const double ed_table = 1.0 - cascade::table_pair_agreement(b, a);
    const double ed_layout = 1.0 - metrics::layout_agreement(b.boxes, a.boxes);
    auto within = [](double ed, const RedBounds& r) { return ed >= r.low && ed <= r.high; };
    out.gates.red_bounds = within(ed_text, cfg.red_text) && within(ed_formula, cfg.red_formula) &&
                           within(ed_table, cfg.red_table) && within(ed_layout, cfg.red_layout);

    out.gates.arbitration_pass = after.verdict.state == VerdictState::Pass;

    out.accepted = out.gates.confidence_gain && out.gates.red_bounds && out.gates.arbitration_pass;
    if (out.accepted) out.reason = "accepted";
    else if (!out.gates.confidence_gain) out.reason = "confidence-gain";
    else if (!out.gates.red_bounds) out.reason = "red-bounds";
    else out.reason = "arbitration-pass";
    return out;
}

// ---------------------------------------------------------------------------
// Admission

// A passing sample contributes its medoid candidate to the training set.
struct AdmittedRecord {
    std::string sample_id;
    std::string image_ref;
    std::string source_id;
    std::string markdown;
    std::string layer;
    std::optional<double> consensus;
};

inline json to_json(const AdmittedRecord& a) {
    json j{{"sample_id", a.sample_id},
           {"image_ref", a.image_ref},
           {"source_id", a.source_id},
           {"markdown", a.markdown},
           {"layer", a.layer}};
    if (a.consensus) j["consensus"] = *a.consensus;
    return j;
}

struct AdmissionReport {
    std::vector<VerdictRecord> verdicts;  // aligned with the input samples
    std::vector<AdmittedRecord> admitted;
    std::vector<RepairOutcome> repair_outcomes;
};

inline AdmittedRecord admit_record(const SampleRecord& sample, const cascade::RouteResult& rr) {
    const size_t m = rr.medoid >= 0 ? static_cast<size_t>(rr.medoid)
                                    : cascade::medoid_index(sample, rr.screens);
    AdmittedRecord a;
    a.sample_id = sample.id;
    a.image_ref = sample.image_ref;
    a.source_id = sample.candidates[m].source_id;
    a.markdown = sample.candidates[m].markdown;
    a.layer = to_string(rr.verdict.layer);
    a.consensus = rr.verdict.consensus;
    return a;
}

// Applies accepted repairs, re-verifies everything, and admits only samples
// whose final verdict is a pass.
inline AdmissionReport reverify_and_admit(std::vector<SampleRecord> samples,
                                          const std::vector<RepairSubmission>& repairs,
                                          const EngineConfig& cfg, unsigned workers) {
    AdmissionReport rep;
    for (const RepairSubmission& sub : repairs) {
        size_t si = samples.size();
        for (size_t i = 0; i < samples.size(); ++i)
            if (samples[i].id == sub.sample_id) si = i;
        if (si == samples.size()) {
            RepairOutcome out;
            out.sample_id = sub.sample_id;
            out.source_id = sub.source_id;
            out.reason = "unknown-sample";
            rep.repair_outcomes.push_back(std::move(out));
            continue;
        }
        RepairOutcome out = evaluate_repair(samples[si], sub, cfg);
        if (out.accepted)
            for (CandidateAnnotation& c : samples[si].candidates)
                if (c.source_id == sub.source_id) c.markdown = out.repaired_markdown;
        rep.repair_outcomes.push_back(std::move(out));
    }

    std::vector<cascade::RouteResult> routed = util::parallel_map_ordered<cascade::RouteResult>(
        samples.size(), workers, [&](size_t i) { return cascade::route(samples[i], cfg); });
    rep.verdicts.reserve(samples.size());
    for (size_t i = 0; i < samples.size(); ++i) {
        rep.verdicts.push_back(routed[i].verdict);
        if (routed[i].verdict.state == VerdictState::Pass)
            rep.admitted.push_back(admit_record(samples[i], routed[i]));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Synthetic generation runs

struct AugmentOutcome {
    SampleRecord sample;
    VerdictRecord verdict;
    bool sound = false;
};

// Generation, routing, and the self-label check for one plan. Items are
// independent, so the worker count cannot affect the result.
inline std::vector<AugmentOutcome> run_augment(const std::vector<augment::PlanItem>& plan,
                                               const EngineConfig& cfg, unsigned workers) {
    return util::parallel_map_ordered<AugmentOutcome>(plan.size(), workers, [&](size_t i) {
        AugmentOutcome out;
        out.sample = augment::build_sample(plan[i]);
        out.verdict = cascade::route(out.sample, cfg).verdict;
        out.sound = augment::soundness_holds(plan[i], out.verdict);
        return out;
    });
}

inline double soundness_rate(const std::vector<AugmentOutcome>& outcomes) {
    if (outcomes.empty()) return 1.0;
    size_t sound = 0;
    for (const AugmentOutcome& o : outcomes) sound += o.sound;
    return static_cast<double>(sound) / static_cast<double>(outcomes.size());
}

}  // namespace docforge::engine
