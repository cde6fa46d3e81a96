// docforge: batch front end for the verification cascade.
//
// Subcommands operate on JSONL streams so stages compose with pipes:
//
//   docforge verify   --in corpus.jsonl --out verdicts.jsonl
//   docforge report   --in verdicts.jsonl
//   docforge augment  --count 500 --seed 42 --verify --out synth.jsonl
//
// Exit codes: 0 success, 1 data-level failures (malformed lines, --check
// violations, soundness below the floor), 2 usage or config errors.

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "docforge/engine.hpp"

using docforge::EngineConfig;
using docforge::json;
using docforge::LineError;
using docforge::LoadResult;
using docforge::engine::RepairOutcome;
using docforge::engine::RepairSubmission;
using docforge::SampleRecord;
using docforge::VerdictRecord;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::vector<std::string> sets;  // key=value overrides, applied after the file
    unsigned parallelism = 0;       // 0 picks the hardware thread count
    bool print_config = false;
};

unsigned resolve_workers(unsigned requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Scalar keys config_apply_json understands. --set rejects anything else so a
// typo fails loudly instead of silently running with defaults.
const std::vector<std::string>& known_scalar_keys() {
    static const std::vector<std::string> keys = {
        "w1", "w2", "w3", "tau", "alpha", "beta", "gamma", "tau_text", "epsilon",
        "w_text", "w_formula", "w_table", "w_struct", "dpcs_high", "dpcs_low",
        "pass_floor", "reject_floor", "min_candidates", "recognition_ed",
        "order_floor", "layout_floor", "format_ed", "seed"};
    return keys;
}

bool known_dotted_key(const std::string& group, const std::string& leaf) {
    if (group == "red_bounds")
        return leaf == "text" || leaf == "formula" || leaf == "table" || leaf == "layout";
    if (group == "dpcs_weights")
        return leaf == "text" || leaf == "layout" || leaf == "order" ||
               leaf == "structure" || leaf == "format" || leaf == "semantic";
    return false;
}

// Precedence: --set > --config file > DOCFORGE_CONFIG env file > defaults.
int resolve_config(const GlobalOpts& g, EngineConfig& cfg) {
    std::string path = g.config_path;
    if (path.empty()) {
        const char* env = std::getenv("DOCFORGE_CONFIG");
        if (env && *env) path = env;
    }
    if (!path.empty()) {
        try {
            cfg = docforge::load_config_file(path);
        } catch (const std::exception& e) {
            std::cerr << "docforge: " << e.what() << "\n";
            return 2;
        }
    }
    for (const std::string& kv : g.sets) {
        size_t eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::cerr << "docforge: --set expects key=value, got '" << kv << "'\n";
            return 2;
        }
        std::string key = kv.substr(0, eq);
        json value = json::parse(kv.substr(eq + 1), nullptr, false);
        if (value.is_discarded()) {
            std::cerr << "docforge: --set " << key << ": value is not valid JSON\n";
            return 2;
        }
        json patch = json::object();
        size_t dot = key.find('.');
        if (dot != std::string::npos) {
            std::string group = key.substr(0, dot);
            std::string leaf = key.substr(dot + 1);
            if (!known_dotted_key(group, leaf)) {
                std::cerr << "docforge: --set: unknown config key '" << key << "'\n";
                return 2;
            }
            patch[group][leaf] = value;
        } else {
            const auto& keys = known_scalar_keys();
            if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
                std::cerr << "docforge: --set: unknown config key '" << key << "'\n";
                return 2;
            }
            patch[key] = value;
        }
        try {
            docforge::config_apply_json(cfg, patch);
        } catch (const std::exception& e) {
            std::cerr << "docforge: --set " << key << ": " << e.what() << "\n";
            return 2;
        }
    }
    std::vector<std::string> errs = cfg.validate();
    if (!errs.empty()) {
        for (const std::string& e : errs) std::cerr << "docforge: config: " << e << "\n";
        return 2;
    }
    return 0;
}

// "-" selects the standard stream so subcommands chain without temp files.
int with_output(const std::string& path, const std::function<int(std::ostream&)>& body) {
    if (path == "-") return body(std::cout);
    std::ofstream out(path);
    if (!out) {
        std::cerr << "docforge: cannot open output file: " << path << "\n";
        return 2;
    }
    int rc = body(out);
    out.flush();
    if (!out) {
        std::cerr << "docforge: write failed: " << path << "\n";
        return 2;
    }
    return rc;
}

LoadResult load_corpus_arg(const std::string& path) {
    if (path == "-") return docforge::load_corpus(std::cin);
    return docforge::load_corpus(path);
}

void print_line_errors(const std::vector<LineError>& errs, const char* what) {
    for (const LineError& e : errs)
        std::cerr << "docforge: " << what << " line " << e.line << ": " << e.message << "\n";
}

// Shared shape of verify/score/classify: one output line per input record,
// records independent, order preserved regardless of worker count.
int per_sample_command(const std::string& in_path, const std::string& out_path,
                       unsigned workers,
                       const std::function<std::string(const SampleRecord&)>& line_for) {
    LoadResult loaded = load_corpus_arg(in_path);
    print_line_errors(loaded.errors, "input");
    std::vector<std::string> lines = docforge::util::parallel_map_ordered<std::string>(
        loaded.records.size(), workers,
        [&](size_t i) { return line_for(loaded.records[i]); });
    int rc = with_output(out_path, [&](std::ostream& out) {
        for (const std::string& l : lines) out << l << "\n";
        return 0;
    });
    if (rc != 0) return rc;
    return loaded.errors.empty() ? 0 : 1;
}

struct RepairLoad {
    std::vector<RepairSubmission> subs;
    std::vector<LineError> errors;
};

RepairLoad load_repairs(const std::string& path) {
    RepairLoad res;
    std::ifstream file;
    std::istream* in = &std::cin;
    if (path != "-") {
        file.open(path);
        if (!file) throw std::runtime_error("cannot open repairs file: " + path);
        in = &file;
    }
    std::string line;
    size_t line_no = 0;
    while (std::getline(*in, line)) {
        ++line_no;
        if (docforge::util::is_blank(line)) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            res.errors.push_back({line_no, "invalid JSON"});
            continue;
        }
        try {
            res.subs.push_back(docforge::engine::repair_from_json(j));
        } catch (const std::exception& e) {
            res.errors.push_back({line_no, e.what()});
        }
    }
    return res;
}

int cmd_verify(const std::string& in, const std::string& out, const EngineConfig& cfg,
               unsigned workers) {
    return per_sample_command(in, out, workers, [&](const SampleRecord& s) {
        return to_json(docforge::cascade::route(s, cfg).verdict).dump();
    });
}

int cmd_score(const std::string& in, const std::string& out, const EngineConfig& cfg,
              unsigned workers) {
    return per_sample_command(in, out, workers, [&](const SampleRecord& s) {
        docforge::cascade::RouteResult rr = docforge::cascade::route(s, cfg);
        docforge::diagnostics::DpcsResult r = docforge::engine::dpcs_for_sample(s, rr, cfg);
        // state rides along: a rejected sample can still score high on pure
        // cross-source consistency (two blank candidates agree perfectly)
        json j{{"sample_id", s.id},
               {"state", docforge::to_string(rr.verdict.state)},
               {"score", r.score},
               {"tier", r.tier},
               {"parts",
                {{"text", r.parts.text},
                 {"layout", r.parts.layout},
                 {"order", r.parts.order},
                 {"structure", r.parts.structure},
                 {"format", r.parts.format},
                 {"semantic", r.parts.semantic}}}};
        return j.dump();
    });
}

int cmd_classify(const std::string& in, const std::string& out, const EngineConfig& cfg,
                 unsigned workers) {
    return per_sample_command(in, out, workers, [&](const SampleRecord& s) {
        VerdictRecord v = docforge::cascade::route(s, cfg).verdict;
        json j{{"sample_id", v.sample_id},
               {"state", docforge::to_string(v.state)},
               {"layer", docforge::to_string(v.layer)},
               {"error_tags", v.error_tags}};
        return j.dump();
    });
}

int cmd_normalize(const std::string& in, const std::string& out, bool check) {
    std::string body;
    if (in == "-") {
        std::stringstream buf;
        buf << std::cin.rdbuf();
        body = buf.str();
    } else {
        std::ifstream file(in);
        if (!file) {
            std::cerr << "docforge: cannot open input file: " << in << "\n";
            return 2;
        }
        std::stringstream buf;
        buf << file.rdbuf();
        body = buf.str();
    }
    // files end with a newline by convention; the canonical form has none
    docforge::markup::NormalizationReport rep =
        docforge::markup::normalize_text(docforge::util::rtrim(body));
    int rc = with_output(out, [&](std::ostream& o) {
        o << rep.normalized_text << "\n";
        return 0;
    });
    if (rc != 0) return rc;
    for (const docforge::markup::Violation& v : rep.violations) {
        // line 0 marks a document-level violation with no single offending block
        std::cerr << "violation: ";
        if (v.line == 0) std::cerr << "document";
        else std::cerr << "line " << v.line;
        std::cerr << ": " << v.rule << (v.detail.empty() ? "" : ": " + v.detail) << "\n";
    }
    return (check && !rep.violations.empty()) ? 1 : 0;
}

int cmd_repair(const std::string& in, const std::string& repairs_path, const std::string& out,
               const EngineConfig& cfg, unsigned workers) {
    LoadResult loaded = load_corpus_arg(in);
    print_line_errors(loaded.errors, "input");
    RepairLoad rl = load_repairs(repairs_path);
    print_line_errors(rl.errors, "repairs");

    std::unordered_map<std::string, size_t> by_id;
    for (size_t i = 0; i < loaded.records.size(); ++i) by_id[loaded.records[i].id] = i;

    std::vector<std::string> lines = docforge::util::parallel_map_ordered<std::string>(
        rl.subs.size(), workers, [&](size_t i) {
            const RepairSubmission& sub = rl.subs[i];
            auto it = by_id.find(sub.sample_id);
            RepairOutcome oc;
            if (it == by_id.end()) {
                oc.sample_id = sub.sample_id;
                oc.source_id = sub.source_id;
                oc.reason = "unknown-sample";
            } else {
                oc = docforge::engine::evaluate_repair(loaded.records[it->second], sub, cfg);
            }
            return to_json(oc).dump();
        });
    int rc = with_output(out, [&](std::ostream& o) {
        for (const std::string& l : lines) o << l << "\n";
        return 0;
    });
    if (rc != 0) return rc;
    return (loaded.errors.empty() && rl.errors.empty()) ? 0 : 1;
}

int cmd_admit(const std::string& in, const std::string& repairs_path, const std::string& out,
              const std::string& verdicts_out, const std::string& outcomes_out,
              const EngineConfig& cfg, unsigned workers) {
    LoadResult loaded = load_corpus_arg(in);
    print_line_errors(loaded.errors, "input");
    RepairLoad rl;
    if (!repairs_path.empty()) {
        rl = load_repairs(repairs_path);
        print_line_errors(rl.errors, "repairs");
    }
    docforge::engine::AdmissionReport rep =
        docforge::engine::reverify_and_admit(loaded.records, rl.subs, cfg, workers);

    int rc = with_output(out, [&](std::ostream& o) {
        for (const docforge::engine::AdmittedRecord& a : rep.admitted)
            o << to_json(a).dump() << "\n";
        return 0;
    });
    if (rc != 0) return rc;
    if (!verdicts_out.empty()) {
        rc = with_output(verdicts_out, [&](std::ostream& o) {
            docforge::write_verdicts(rep.verdicts, o);
            return 0;
        });
        if (rc != 0) return rc;
    }
    if (!outcomes_out.empty()) {
        rc = with_output(outcomes_out, [&](std::ostream& o) {
            for (const RepairOutcome& oc : rep.repair_outcomes) o << to_json(oc).dump() << "\n";
            return 0;
        });
        if (rc != 0) return rc;
    }
    return (loaded.errors.empty() && rl.errors.empty()) ? 0 : 1;
}

int cmd_augment(size_t count, uint64_t seed, double intensity, const std::string& out,
                const std::string& plan_out, bool verify, double min_soundness,
                const EngineConfig& cfg, unsigned workers) {
    std::vector<docforge::augment::PlanItem> plan =
        docforge::augment::sample_plan(seed, count, intensity);

    if (!plan_out.empty()) {
        int rc = with_output(plan_out, [&](std::ostream& o) {
            for (const docforge::augment::PlanItem& p : plan) {
                json j{{"sample_id", p.sample_id},
                       {"template_id", p.template_id},
                       {"perturbed", p.perturbed},
                       {"stream", p.stream}};
                j["perturbation"] =
                    p.perturbed ? json(docforge::augment::to_string(p.perturbation)) : json();
                o << j.dump() << "\n";
            }
            return 0;
        });
        if (rc != 0) return rc;
    }

    if (!verify) {
        std::vector<std::string> lines = docforge::util::parallel_map_ordered<std::string>(
            plan.size(), workers,
            [&](size_t i) { return to_json(docforge::augment::build_sample(plan[i])).dump(); });
        return with_output(out, [&](std::ostream& o) {
            for (const std::string& l : lines) o << l << "\n";
            return 0;
        });
    }

    std::vector<docforge::engine::AugmentOutcome> outcomes =
        docforge::engine::run_augment(plan, cfg, workers);
    int rc = with_output(out, [&](std::ostream& o) {
        for (const docforge::engine::AugmentOutcome& oc : outcomes)
            o << to_json(oc.sample).dump() << "\n";
        return 0;
    });
    if (rc != 0) return rc;
    double rate = docforge::engine::soundness_rate(outcomes);
    size_t sound = 0;
    for (const docforge::engine::AugmentOutcome& oc : outcomes) sound += oc.sound;
    json summary{{"count", outcomes.size()}, {"sound", sound}, {"rate", rate}};
    std::cerr << summary.dump() << "\n";
    return rate >= min_soundness ? 0 : 1;
}

int cmd_report(const std::string& in, const std::string& out) {
    docforge::VerdictLoadResult vl;
    if (in == "-")
        vl = docforge::load_verdicts(std::cin);
    else
        vl = docforge::load_verdicts(in);
    print_line_errors(vl.errors, "input");
    docforge::diagnostics::WeaknessReport rep =
        docforge::diagnostics::aggregate_weakness(vl.verdicts);
    int rc = with_output(out, [&](std::ostream& o) {
        o << to_json(rep).dump(2) << "\n";
        return 0;
    });
    if (rc != 0) return rc;
    return vl.errors.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"annotation verification cascade for document parsing corpora"};
    app.require_subcommand(0, 1);

    GlobalOpts g;
    app.add_option("--config", g.config_path,
                   "config file, JSON or flat TOML (env: DOCFORGE_CONFIG)");
    app.add_option("--set", g.sets, "override one config value, key=value (repeatable)")
        ->take_all();
    app.add_option("-j,--parallelism", g.parallelism, "worker threads, 0 = hardware count");
    app.add_flag("--print-config", g.print_config, "print the effective config and exit");
    app.set_version_flag("--version", "docforge 0.1.0");

    std::string in_path = "-", out_path = "-", repairs_path, verdicts_out, outcomes_out,
                plan_out;
    bool check = false, verify_synth = false;
    size_t count = 0;
    uint64_t seed_opt = 0;
    bool seed_given = false;
    double intensity = 0.75, min_soundness = 0.0;

    CLI::App* verify = app.add_subcommand("verify", "route a corpus, emit one verdict per line");
    verify->add_option("--in", in_path, "corpus JSONL, - for stdin")->required();
    verify->add_option("--out", out_path, "verdicts JSONL, - for stdout");

    CLI::App* score = app.add_subcommand("score", "per-sample quality score and tier");
    score->add_option("--in", in_path, "corpus JSONL, - for stdin")->required();
    score->add_option("--out", out_path, "scores JSONL, - for stdout");

    CLI::App* classify =
        app.add_subcommand("classify", "per-sample error tags without full verdict evidence");
    classify->add_option("--in", in_path, "corpus JSONL, - for stdin")->required();
    classify->add_option("--out", out_path, "tags JSONL, - for stdout");

    CLI::App* normalize =
        app.add_subcommand("normalize", "canonicalize one markdown document");
    normalize->add_option("--in", in_path, "markdown file, - for stdin");
    normalize->add_option("--out", out_path, "normalized markdown, - for stdout");
    normalize->add_flag("--check", check, "exit 1 when the input is not canonical");

    CLI::App* repair = app.add_subcommand("repair", "gate repair submissions against a corpus");
    repair->add_option("--in", in_path, "corpus JSONL, - for stdin")->required();
    repair->add_option("--repairs", repairs_path, "repair submissions JSONL")->required();
    repair->add_option("--out", out_path, "outcomes JSONL, - for stdout");

    CLI::App* admit =
        app.add_subcommand("admit", "apply accepted repairs, re-verify, emit admitted records");
    admit->add_option("--in", in_path, "corpus JSONL, - for stdin")->required();
    admit->add_option("--repairs", repairs_path, "repair submissions JSONL");
    admit->add_option("--out", out_path, "admitted records JSONL, - for stdout");
    admit->add_option("--verdicts-out", verdicts_out, "also write per-sample verdicts here");
    admit->add_option("--outcomes-out", outcomes_out, "also write repair outcomes here");

    CLI::App* augment =
        app.add_subcommand("augment", "generate a self-labeled synthetic corpus");
    augment->add_option("--count", count, "number of samples to generate")->required();
    augment->add_option("--seed", seed_opt, "generation seed (default: config seed)");
    augment->add_option("--intensity", intensity, "perturbed fraction, clamped to [0.5,1]")
        ->check(CLI::Range(0.0, 1.0));
    augment->add_option("--out", out_path, "corpus JSONL, - for stdout");
    augment->add_option("--plan-out", plan_out, "also write the generation plan here");
    augment->add_flag("--verify", verify_synth,
                      "route every sample and report the self-label soundness rate");
    augment->add_option("--min-soundness", min_soundness,
                        "with --verify, exit 1 below this rate");

    CLI::App* report =
        app.add_subcommand("report", "aggregate verdicts into a weakness report");
    report->add_option("--in", in_path, "verdicts JSONL, - for stdin")->required();
    report->add_option("--out", out_path, "report JSON, - for stdout");

    // let global flags (-j, --config, --set) appear after the subcommand too
    for (CLI::App* s : {verify, score, classify, normalize, repair, admit, augment, report})
        s->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;  // --help exits 0, genuine parse errors exit 2
    }
    if (augment->parsed()) seed_given = augment->count("--seed") > 0;

    EngineConfig cfg;
    int rc = resolve_config(g, cfg);
    if (rc != 0) return rc;
    if (g.print_config) {
        std::cout << to_json(cfg).dump(2) << "\n";
        return 0;
    }
    if (app.get_subcommands().empty()) {
        std::cerr << app.help();
        return 2;
    }
    unsigned workers = resolve_workers(g.parallelism);

    try {
        if (verify->parsed()) return cmd_verify(in_path, out_path, cfg, workers);
        if (score->parsed()) return cmd_score(in_path, out_path, cfg, workers);
        if (classify->parsed()) return cmd_classify(in_path, out_path, cfg, workers);
        if (normalize->parsed()) return cmd_normalize(in_path, out_path, check);
        if (repair->parsed())
            return cmd_repair(in_path, repairs_path, out_path, cfg, workers);
        if (admit->parsed())
            return cmd_admit(in_path, repairs_path, out_path, verdicts_out, outcomes_out, cfg,
                             workers);
        if (augment->parsed())
            return cmd_augment(count, seed_given ? seed_opt : cfg.seed, intensity, out_path,
                               plan_out, verify_synth, min_soundness, cfg, workers);
        if (report->parsed()) return cmd_report(in_path, out_path);
    } catch (const std::exception& e) {
        std::cerr << "docforge: " << e.what() << "\n";
        return 2;
    }
    std::cerr << app.help();
    return 2;
}
