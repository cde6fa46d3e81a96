#include <catch2/catch_amalgamated.hpp>

#include <string>
#include <vector>

#include "docforge/latex.hpp"

using namespace docforge::markup;

TEST_CASE("latex tokenizer keeps commands whole and drops comments") {
    REQUIRE(tokenize_latex("\\frac{a}{b}") ==
            std::vector<std::string>{"\\frac", "{", "a", "}", "{", "b", "}"});
    REQUIRE(tokenize_latex("x ^ 2 % trailing note") ==
            std::vector<std::string>{"x", "^", "2"});
    REQUIRE(tokenize_latex("\\, a \\%") == std::vector<std::string>{"\\,", "a", "\\%"});
    REQUIRE(tokenize_latex("α+1") == std::vector<std::string>{"α", "+", "1"});
}

TEST_CASE("well-formed formulas pass the compile check") {
    for (const char* src : {
             "x^2 + y_1",
             "\\frac{a+b}{c}",
             "\\sqrt[3]{x}",
             "\\sqrt{x}",
             "\\left( \\frac{1}{2} \\right)",
             "\\left. \\frac{df}{dx} \\right|",
             "\\begin{pmatrix} a & b \\\\ c & d \\end{pmatrix}",
             "\\begin{align} x &= 1 \\\\ y &= 2 \\end{align}",
             "\\begin{cases} 0 & x < 0 \\\\ 1 & x \\ge 0 \\end{cases}",
             "\\mathbf{v} \\cdot \\hat{n}",
             "\\sum_{i=1}^{n} i^2",
             "e^{i\\pi} = -1",
             "\\text{rate} = \\frac{\\Delta y}{\\Delta x}",
             "\\begin{array}{cc} 1 & 2 \\end{array}",
         }) {
        CAPTURE(src);
        const CompileCheck c = validate_latex(src);
        CAPTURE(c.reason);
        REQUIRE(c.ok);
    }
}

TEST_CASE("broken formulas fail the compile check") {
    for (const char* src : {
             "\\frac{a}{b",              // unclosed brace
             "\\frac{a}",                // missing second argument
             "\\frac{}{b}",              // empty required argument
             "a & b",                    // alignment tab outside any environment
             "\\begin{align} x = 1",     // unclosed environment
             "\\begin{align} x \\end{cases}",  // mismatched env pair
             "x^",                       // superscript without argument
             "\\left( x \\right",        // \right without delimiter
             "\\left( x",                // unmatched \left
             "\\right) x",               // \right without \left
             "}x{",                      // stray closing brace
             "\\frac \\end x",           // argument cannot be an \end
             "\\begin{pmatrix} a & b",   // unclosed matrix
             "$",                        // lone dollar sign is not formula content
         }) {
        CAPTURE(src);
        REQUIRE_FALSE(validate_latex(src).ok);
    }
}

TEST_CASE("subscript before base still parses when an argument follows") {
    // "_2" alone: the subscript needs one argument token; "2" is present, so
    // structurally this is fine even without a visible base.
    REQUIRE(validate_latex("_2 F_1").ok);
}

TEST_CASE("alignment tabs legal only under an alignment frame") {
    REQUIRE(validate_latex("\\begin{align} a & b \\end{align}").ok);
    // a group nested inside the environment hides the alignment frame
    REQUIRE_FALSE(validate_latex("\\begin{align} { a & b } \\end{align}").ok);
    REQUIRE_FALSE(validate_latex("\\frac{a & b}{c}").ok);
}

TEST_CASE("parse tree counts nodes for structural comparison") {
    FormulaParseResult r = parse_formula("\\frac{a}{b}");
    REQUIRE(r.check.ok);
    REQUIRE(r.expr.has_value());
    // root group + \frac + two {} groups + two symbols
    REQUIRE(r.expr->root.node_count() == 6);

    FormulaParseResult flat = parse_formula("a + b");
    REQUIRE(flat.expr->root.node_count() == 4);

    FormulaParseResult env = parse_formula("\\begin{pmatrix} a \\end{pmatrix}");
    REQUIRE(env.check.ok);
    REQUIRE(env.expr->root.children[0].kind == FormulaNode::Kind::Environment);
    REQUIRE(env.expr->root.children[0].label == "env:pmatrix");
}

TEST_CASE("arity table covers the common two-argument commands") {
    const ArityTable& t = default_arity_table();
    REQUIRE(t.at("\\frac").required == 2);
    REQUIRE(t.at("\\sqrt").required == 1);
    REQUIRE(t.at("\\sqrt").optional);
    REQUIRE(t.find("\\alpha") == t.end());  // symbols take no arguments
}
