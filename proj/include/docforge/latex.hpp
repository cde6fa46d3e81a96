// Formula handling: a LaTeX tokenizer, a structural validator (the stand-in
// for "does it compile"), and the bracket/environment tree used by the
// similarity metrics.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "docforge/util.hpp"

namespace docforge::markup {

struct FormulaNode {
    enum class Kind { Command, Group, Environment, Symbol };
    Kind kind = Kind::Symbol;
    std::string label;
    std::vector<FormulaNode> children;

    size_t node_count() const {
        size_t n = 1;
        for (const auto& c : children) n += c.node_count();
        return n;
    }
};

struct FormulaExpr {
    std::vector<std::string> tokens;
    FormulaNode root;  // Group labeled "<root>"
};

struct CompileCheck {
    bool ok = true;
    std::string reason;
};

// Required-argument counts. Commands absent from the table take no arguments.
// Callers may extend or override entries (second member: optional [..] arg).
struct CommandArity {
    int required = 0;
    bool optional = false;
};

using ArityTable = std::map<std::string, CommandArity, std::less<>>;

inline const ArityTable& default_arity_table() {
    static const ArityTable table = {
        {"\\frac", {2, false}},     {"\\dfrac", {2, false}},   {"\\tfrac", {2, false}},
        {"\\cfrac", {2, false}},    {"\\binom", {2, false}},   {"\\dbinom", {2, false}},
        {"\\tbinom", {2, false}},   {"\\overset", {2, false}}, {"\\underset", {2, false}},
        {"\\stackrel", {2, false}}, {"\\sqrt", {1, true}},     {"\\hat", {1, false}},
        {"\\bar", {1, false}},      {"\\vec", {1, false}},     {"\\dot", {1, false}},
        {"\\ddot", {1, false}},     {"\\tilde", {1, false}},   {"\\widehat", {1, false}},
        {"\\widetilde", {1, false}},{"\\overline", {1, false}},{"\\underline", {1, false}},
        {"\\mathbf", {1, false}},   {"\\mathrm", {1, false}},  {"\\mathit", {1, false}},
        {"\\mathcal", {1, false}},  {"\\mathbb", {1, false}},  {"\\mathsf", {1, false}},
        {"\\mathtt", {1, false}},   {"\\boldsymbol", {1, false}}, {"\\pmb", {1, false}},
        {"\\text", {1, false}},     {"\\textbf", {1, false}},  {"\\textit", {1, false}},
        {"\\textrm", {1, false}},   {"\\texttt", {1, false}},  {"\\operatorname", {1, false}},
        {"\\xrightarrow", {1, true}}, {"\\xleftarrow", {1, true}},
    };
    return table;
}

namespace detail {

inline bool is_letter(char32_t c) {
    return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z');
}

// Environments where the alignment tab & is legal.
inline bool is_alignment_env(std::string_view name) {
    static const std::set<std::string, std::less<>> envs = {
        "align",   "align*",   "aligned", "alignedat", "alignat", "alignat*",
        "array",   "matrix",   "pmatrix", "bmatrix",   "Bmatrix", "vmatrix",
        "Vmatrix", "smallmatrix", "cases", "split",    "eqnarray", "eqnarray*",
        "tabular", "subarray"};
    return envs.count(name) > 0;
}

inline bool is_left_right_delim(std::string_view tok) {
    static const std::set<std::string, std::less<>> delims = {
        "(",  ")",  "[",  "]",  ".",  "|",  "/",  "<",  ">",
        "\\{", "\\}", "\\|", "\\langle", "\\rangle", "\\lceil",  "\\rceil",
        "\\lfloor", "\\rfloor", "\\vert", "\\Vert", "\\lvert", "\\rvert",
        "\\lbrace", "\\rbrace", "\\lbrack", "\\rbrack", "\\backslash",
        "\\uparrow", "\\downarrow", "\\updownarrow"};
    return delims.count(tok) > 0;
}

}  // namespace detail

// Tokenizes LaTeX source: \commands as whole tokens, escaped single symbols
// as two-character tokens, % comments stripped, whitespace skipped, every
// other codepoint a token of its own.
inline std::vector<std::string> tokenize_latex(std::string_view src) {
    std::vector<std::string> toks;
    size_t i = 0;
    while (i < src.size()) {
        const size_t at = i;
        const char32_t c = util::utf8_next(src, i);
        if (util::is_space_cp(c)) continue;
        if (c == U'%') {  // comment to end of line
            while (i < src.size() && src[i] != '\n') ++i;
            continue;
        }
        if (c == U'\\') {
            if (i >= src.size()) { toks.emplace_back("\\"); break; }
            size_t j = i;
            const char32_t n = util::utf8_next(src, j);
            if (detail::is_letter(n)) {
                size_t end = i;
                while (end < src.size() && detail::is_letter(static_cast<unsigned char>(src[end])))
                    ++end;
                toks.emplace_back(src.substr(at, end - at));
                i = end;
            } else {
                toks.emplace_back(src.substr(at, j - at));  // "\{", "\\", "\%", ...
                i = j;
            }
            continue;
        }
        toks.emplace_back(src.substr(at, i - at));
    }
    return toks;
}

namespace detail {

struct FormulaParser {
    const std::vector<std::string>& toks;
    const ArityTable& arity;
    size_t pos = 0;
    std::string error;

    bool fail(const std::string& why) {
        if (error.empty()) error = why;
        return false;
    }

    bool at_end() const { return pos >= toks.size(); }
    const std::string& peek() const { return toks[pos]; }

    // One frame kind per closing rule. `align` marks frames whose direct
    // content may contain the alignment tab.
    struct Frame {
        enum class Kind { Group, Bracket, Env, LeftRight } kind;
        std::string name;
        bool align = false;
    };

    // Parses a sequence of atoms until the frame's closing token (or input
    // end for the root). Appends nodes to `out`.
    bool parse_sequence(std::vector<FormulaNode>& out, const Frame* frame) {
        while (!at_end()) {
            const std::string& t = peek();
            if (t == "}") {
                if (frame && frame->kind == Frame::Kind::Group) return true;
                return fail("unexpected }");
            }
            if (t == "]" && frame && frame->kind == Frame::Kind::Bracket) return true;
            if (t == "\\end") {
                if (frame && frame->kind == Frame::Kind::Env) return true;
                return fail("\\end without matching \\begin");
            }
            if (t == "\\right") {
                if (frame && frame->kind == Frame::Kind::LeftRight) return true;
                return fail("\\right without matching \\left");
            }
            FormulaNode node;
            if (!parse_atom(node, frame)) return false;
            out.push_back(std::move(node));
        }
        if (frame) {
            switch (frame->kind) {
                case Frame::Kind::Group: return fail("unclosed {");
                case Frame::Kind::Bracket: return fail("unclosed [");
                case Frame::Kind::Env: return fail("unclosed environment " + frame->name);
                default: return fail("\\left without matching \\right");
            }
        }
        return true;
    }

    bool parse_group_body(FormulaNode& node, Frame frame) {
        if (!parse_sequence(node.children, &frame)) return false;
        ++pos;  // consume the closer peeked by parse_sequence
        return true;
    }

    // Reads one required argument: a {..} group or a single atom.
    bool parse_argument(const std::string& cmd, FormulaNode& out) {
        if (at_end()) return fail("missing argument of " + cmd);
        if (peek() == "{") {
            ++pos;
            out.kind = FormulaNode::Kind::Group;
            out.label = "{}";
            if (!parse_group_body(out, {Frame::Kind::Group, "", false})) return false;
            if (empty_group(out)) return fail("empty required argument of " + cmd);
            return true;
        }
        return parse_atom(out, nullptr);
    }

    static bool empty_group(const FormulaNode& n) {
        return n.kind == FormulaNode::Kind::Group && n.children.empty();
    }

    // Reads the {name} following \begin or \end.
    bool parse_env_name(std::string& name) {
        if (at_end() || peek() != "{") return fail("environment name must follow \\begin/\\end");
        ++pos;
        name.clear();
        while (!at_end() && peek() != "}") {
            const std::string& t = peek();
            if (t.size() == 1 &&
                (is_letter(static_cast<unsigned char>(t[0])) || t[0] == '*' || t[0] == '@')) {
                name += t;
                ++pos;
            } else {
                return fail("malformed environment name");
            }
        }
        if (at_end()) return fail("unclosed environment name");
        ++pos;
        if (name.empty()) return fail("empty environment name");
        return true;
    }

    bool parse_atom(FormulaNode& node, const Frame* frame) {
        const std::string t = peek();
        ++pos;
        // closers are consumed by parse_sequence; reaching one here means it
        // showed up as a lone command argument
        if (t == "}") return fail("unexpected }");
        if (t == "\\end") return fail("\\end without matching \\begin");
        if (t == "\\right") return fail("\\right without matching \\left");
        // a bare dollar inside already-delimited math can only be a split error
        if (t == "$") return fail("$ inside math content");
        if (t == "{") {
            node.kind = FormulaNode::Kind::Group;
            node.label = "{}";
            return parse_group_body(node, {Frame::Kind::Group, "", false});
        }
        if (t == "[") {
            node.kind = FormulaNode::Kind::Group;
            node.label = "[]";
            return parse_group_body(node, {Frame::Kind::Bracket, "", false});
        }
        if (t == "]") return fail("unexpected ]");
        if (t == "&") {
            // alignment tab: only legal directly inside an alignment environment
            if (!frame || !frame->align) return fail("alignment tab & outside alignment environment");
            node.kind = FormulaNode::Kind::Symbol;
            node.label = "&";
            return true;
        }
        if (t == "^" || t == "_") {
            node.kind = FormulaNode::Kind::Command;
            node.label = t;
            FormulaNode arg;
            if (at_end()) return fail("dangling script " + t);
            if (!parse_argument(t, arg)) return false;
            node.children.push_back(std::move(arg));
            return true;
        }
        if (t == "\\begin") {
            std::string name;
            if (!parse_env_name(name)) return false;
            node.kind = FormulaNode::Kind::Environment;
            node.label = "env:" + name;
            Frame frame_env{Frame::Kind::Env, name, is_alignment_env(name)};
            if (!parse_sequence(node.children, &frame_env)) return false;
            ++pos;  // the \end token
            std::string closer;
            if (!parse_env_name(closer)) return false;
            if (closer != name)
                return fail("\\begin{" + name + "} closed by \\end{" + closer + "}");
            return true;
        }
        if (t == "\\left") {
            if (at_end() || !is_left_right_delim(peek()))
                return fail("\\left needs a delimiter");
            const std::string open = peek();
            ++pos;
            node.kind = FormulaNode::Kind::Group;
            Frame frame_lr{Frame::Kind::LeftRight, "", false};
            if (!parse_sequence(node.children, &frame_lr)) return false;
            ++pos;  // the \right token
            if (at_end() || !is_left_right_delim(peek()))
                return fail("\\right needs a delimiter");
            node.label = "lr:" + open + ":" + peek();
            ++pos;
            return true;
        }
        if (t.size() >= 2 && t[0] == '\\' && is_letter(static_cast<unsigned char>(t[1]))) {
            node.kind = FormulaNode::Kind::Command;
            node.label = t;
            auto it = arity.find(t);
            if (it != arity.end()) {
                if (it->second.optional && !at_end() && peek() == "[") {
                    ++pos;
                    FormulaNode opt;
                    opt.kind = FormulaNode::Kind::Group;
                    opt.label = "opt";
                    if (!parse_group_body(opt, {Frame::Kind::Bracket, "", false})) return false;
                    node.children.push_back(std::move(opt));
                }
                for (int k = 0; k < it->second.required; ++k) {
                    FormulaNode arg;
                    if (!parse_argument(t, arg)) return false;
                    node.children.push_back(std::move(arg));
                }
            }
            return true;
        }
        node.kind = FormulaNode::Kind::Symbol;
        node.label = t;
        return true;
    }
};

}  // namespace detail

struct FormulaParseResult {
    CompileCheck check;
    std::optional<FormulaExpr> expr;  // present iff check.ok
};

inline FormulaParseResult parse_formula(std::string_view src,
                                        const ArityTable& arity = default_arity_table()) {
    FormulaParseResult res;
    FormulaExpr expr;
    expr.tokens = tokenize_latex(src);
    detail::FormulaParser p{expr.tokens, arity, 0, {}};
    expr.root.kind = FormulaNode::Kind::Group;
    expr.root.label = "<root>";
    if (!p.parse_sequence(expr.root.children, nullptr)) {
        res.check = {false, p.error};
        return res;
    }
    res.check = {true, ""};
    res.expr = std::move(expr);
    return res;
}

// Structural compile check: balanced braces/brackets, LIFO-matched
// environments, paired \left/\right with legal delimiters ("\right." is
// legal), no empty required arguments, alignment tabs only inside alignment
// environments.
inline CompileCheck validate_latex(std::string_view src,
                                   const ArityTable& arity = default_arity_table()) {
    return parse_formula(src, arity).check;
}

}  // namespace docforge::markup
