#include "qevo/program.hpp"

#include "qevo/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

namespace qevo {

namespace {

constexpr std::string_view price_fields[] = {"open",  "high",    "low",         "close",
                                             "volume", "month", "weekday", "day_of_month"};

constexpr std::string_view keywords[] = {"and", "or", "not", "if", "abs", "min", "max"};

bool is_reserved(std::string_view name) {
    return is_price_field(name) ||
           std::find(std::begin(keywords), std::end(keywords), name) != std::end(keywords);
}

std::string number_text(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

// ----------------------------------------------------------------- lexer

enum class Tok { ident, number, punct, end };

struct Token {
    Tok kind = Tok::end;
    std::string text;
    double value = 0.0;
    std::size_t column = 0;
};

class Lexer {
public:
    Lexer(std::string_view text, std::size_t line, std::size_t column_offset)
        : text_(text), line_(line), offset_(column_offset) {
        advance();
    }

    const Token& peek() const { return current_; }

    Token take() {
        Token t = current_;
        advance();
        return t;
    }

    bool accept(std::string_view punct) {
        if (current_.kind == Tok::punct && current_.text == punct) {
            advance();
            return true;
        }
        return false;
    }

    bool accept_word(std::string_view word) {
        if (current_.kind == Tok::ident && current_.text == word) {
            advance();
            return true;
        }
        return false;
    }

    void expect(std::string_view punct) {
        if (!accept(punct)) fail("expected '" + std::string(punct) + "'");
    }

    std::string expect_ident(const std::string& what) {
        if (current_.kind != Tok::ident) fail("expected " + what);
        return take().text;
    }

    void expect_end() {
        if (current_.kind != Tok::end) fail("unexpected '" + current_.text + "'");
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw SyntaxError(line_, offset_ + current_.column, message);
    }

    std::size_t line() const { return line_; }
    std::size_t column() const { return offset_ + current_.column; }

private:
    void advance() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r'))
            ++pos_;
        current_ = Token{};
        current_.column = pos_ + 1;
        if (pos_ >= text_.size()) return;
        const char c = text_[pos_];
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
                ++pos_;
            current_.kind = Tok::ident;
            current_.text = std::string(text_.substr(start, pos_ - start));
            return;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && pos_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
            if (ec != std::errc{}) throw SyntaxError(line_, offset_ + pos_ + 1, "bad number");
            std::size_t len = static_cast<std::size_t>(ptr - (text_.data() + pos_));
            current_.kind = Tok::number;
            current_.text = std::string(text_.substr(pos_, len));
            current_.value = v;
            pos_ += len;
            return;
        }
        static constexpr std::string_view two[] = {"<=", ">=", "==", "!="};
        for (auto op : two)
            if (text_.substr(pos_, 2) == op) {
                current_.kind = Tok::punct;
                current_.text = std::string(op);
                pos_ += 2;
                return;
            }
        static constexpr std::string_view one = "()<>,=+-*/.";
        if (one.find(c) != std::string_view::npos) {
            current_.kind = Tok::punct;
            current_.text = std::string(1, c);
            ++pos_;
            return;
        }
        throw SyntaxError(line_, offset_ + pos_ + 1, std::string("unexpected character '") + c + "'");
    }

    std::string_view text_;
    std::size_t line_;
    std::size_t offset_;
    std::size_t pos_ = 0;
    Token current_;
};

// ----------------------------------------------------------------- expressions

struct Typed {
    ExprPtr expr;
    ExprType type;
};

class ExprParser {
public:
    ExprParser(Lexer& lex, const Program& program) : lex_(lex), program_(program) {}

    Typed parse() { return parse_or(); }

private:
    void require(const Typed& t, ExprType want, std::size_t column, const char* context) {
        if (t.type != want)
            throw SyntaxError(lex_.line(), column,
                              std::string(context) + " expects a " +
                                  (want == ExprType::boolean ? "condition" : "number"));
    }

    Typed parse_or() {
        auto col = lex_.column();
        Typed lhs = parse_and();
        while (lex_.accept_word("or")) {
            require(lhs, ExprType::boolean, col, "'or'");
            auto rcol = lex_.column();
            Typed rhs = parse_and();
            require(rhs, ExprType::boolean, rcol, "'or'");
            lhs = {make_binary(ExprOp::or_, lhs.expr, rhs.expr), ExprType::boolean};
        }
        return lhs;
    }

    Typed parse_and() {
        auto col = lex_.column();
        Typed lhs = parse_not();
        while (lex_.accept_word("and")) {
            require(lhs, ExprType::boolean, col, "'and'");
            auto rcol = lex_.column();
            Typed rhs = parse_not();
            require(rhs, ExprType::boolean, rcol, "'and'");
            lhs = {make_binary(ExprOp::and_, lhs.expr, rhs.expr), ExprType::boolean};
        }
        return lhs;
    }

    Typed parse_not() {
        if (lex_.accept_word("not")) {
            auto col = lex_.column();
            Typed arg = parse_not();
            require(arg, ExprType::boolean, col, "'not'");
            return {make_unary(ExprOp::not_, arg.expr), ExprType::boolean};
        }
        return parse_cmp();
    }

    Typed parse_cmp() {
        auto col = lex_.column();
        Typed lhs = parse_add();
        static constexpr std::pair<std::string_view, ExprOp> ops[] = {
            {"<", ExprOp::lt}, {"<=", ExprOp::le}, {">", ExprOp::gt},
            {">=", ExprOp::ge}, {"==", ExprOp::eq}, {"!=", ExprOp::ne}};
        for (auto [text, op] : ops) {
            if (lex_.accept(text)) {
                require(lhs, ExprType::numeric, col, "comparison");
                auto rcol = lex_.column();
                Typed rhs = parse_add();
                require(rhs, ExprType::numeric, rcol, "comparison");
                const auto& next = lex_.peek();
                if (next.kind == Tok::punct &&
                    (next.text == "<" || next.text == "<=" || next.text == ">" || next.text == ">=" ||
                     next.text == "==" || next.text == "!="))
                    lex_.fail("comparisons do not chain");
                return {make_binary(op, lhs.expr, rhs.expr), ExprType::boolean};
            }
        }
        return lhs;
    }

    Typed parse_add() {
        auto col = lex_.column();
        Typed lhs = parse_mul();
        while (true) {
            ExprOp op;
            if (lex_.accept("+"))
                op = ExprOp::add;
            else if (lex_.accept("-"))
                op = ExprOp::sub;
            else
                break;
            require(lhs, ExprType::numeric, col, "arithmetic");
            auto rcol = lex_.column();
            Typed rhs = parse_mul();
            require(rhs, ExprType::numeric, rcol, "arithmetic");
            lhs = {make_binary(op, lhs.expr, rhs.expr), ExprType::numeric};
        }
        return lhs;
    }

    Typed parse_mul() {
        auto col = lex_.column();
        Typed lhs = parse_unary();
        while (true) {
            ExprOp op;
            if (lex_.accept("*"))
                op = ExprOp::mul;
            else if (lex_.accept("/"))
                op = ExprOp::div;
            else
                break;
            require(lhs, ExprType::numeric, col, "arithmetic");
            auto rcol = lex_.column();
            Typed rhs = parse_unary();
            require(rhs, ExprType::numeric, rcol, "arithmetic");
            lhs = {make_binary(op, lhs.expr, rhs.expr), ExprType::numeric};
        }
        return lhs;
    }

    Typed parse_unary() {
        if (lex_.accept("-")) {
            if (lex_.peek().kind == Tok::number) return {make_number(-lex_.take().value), ExprType::numeric};
            auto col = lex_.column();
            Typed arg = parse_unary();
            require(arg, ExprType::numeric, col, "unary minus");
            return {make_unary(ExprOp::neg, arg.expr), ExprType::numeric};
        }
        return parse_primary();
    }

    std::vector<Typed> parse_args() {
        std::vector<Typed> args;
        lex_.expect("(");
        if (!lex_.accept(")")) {
            do {
                args.push_back(parse_or());
            } while (lex_.accept(","));
            lex_.expect(")");
        }
        return args;
    }

    Typed parse_primary() {
        const Token& tok = lex_.peek();
        auto col = lex_.column();
        if (tok.kind == Tok::number) return {make_number(lex_.take().value), ExprType::numeric};
        if (lex_.accept("(")) {
            Typed inner = parse_or();
            lex_.expect(")");
            return inner;
        }
        if (tok.kind != Tok::ident) lex_.fail("expected an expression");
        std::string name = lex_.take().text;

        if (name == "if") {
            auto args = parse_args();
            if (args.size() != 3) throw SyntaxError(lex_.line(), col, "if() takes 3 arguments");
            require(args[0], ExprType::boolean, col, "if() condition");
            require(args[1], ExprType::numeric, col, "if() branch");
            require(args[2], ExprType::numeric, col, "if() branch");
            return {make_call(ExprOp::if_, {args[0].expr, args[1].expr, args[2].expr}), ExprType::numeric};
        }
        if (name == "abs" || name == "min" || name == "max") {
            auto args = parse_args();
            const std::size_t want = name == "abs" ? 1 : 2;
            if (args.size() != want)
                throw SyntaxError(lex_.line(), col, name + "() takes " + std::to_string(want) + " argument(s)");
            std::vector<ExprPtr> raw;
            for (auto& a : args) {
                require(a, ExprType::numeric, col, "function argument");
                raw.push_back(a.expr);
            }
            ExprOp op = name == "abs" ? ExprOp::abs : name == "min" ? ExprOp::min : ExprOp::max;
            return {make_call(op, std::move(raw)), ExprType::numeric};
        }
        if (is_price_field(name)) return {make_price(name), ExprType::numeric};
        if (name == "and" || name == "or" || name == "not") throw SyntaxError(lex_.line(), col, "misplaced '" + name + "'");

        const IndicatorDef* def = program_.find_indicator(name);
        if (!def) throw UnboundReference("line " + std::to_string(lex_.line()) + ": '" + name + "' is not a declared indicator");
        std::string field;
        if (lex_.accept(".")) {
            field = lex_.expect_ident("output field");
            auto fields = output_fields(def->spec.kind);
            if (std::find(fields.begin(), fields.end(), field) == fields.end())
                throw UnboundReference("line " + std::to_string(lex_.line()) + ": indicator '" + name +
                                       "' has no output '" + field + "'");
            if (field == fields.front()) field.clear();
        }
        return {make_indicator_ref(name, field), ExprType::numeric};
    }

    Lexer& lex_;
    const Program& program_;
};

// ----------------------------------------------------------------- printing

int precedence(ExprOp op) {
    switch (op) {
        case ExprOp::or_: return 1;
        case ExprOp::and_: return 2;
        case ExprOp::not_: return 3;
        case ExprOp::lt:
        case ExprOp::le:
        case ExprOp::gt:
        case ExprOp::ge:
        case ExprOp::eq:
        case ExprOp::ne: return 4;
        case ExprOp::add:
        case ExprOp::sub: return 5;
        case ExprOp::mul:
        case ExprOp::div: return 6;
        case ExprOp::neg: return 7;
        default: return 8;
    }
}

int expr_precedence(const Expr& e) {
    if (e.op == ExprOp::number && e.number < 0) return 7;
    return precedence(e.op);
}

std::string_view op_text(ExprOp op) {
    switch (op) {
        case ExprOp::add: return "+";
        case ExprOp::sub: return "-";
        case ExprOp::mul: return "*";
        case ExprOp::div: return "/";
        case ExprOp::lt: return "<";
        case ExprOp::le: return "<=";
        case ExprOp::gt: return ">";
        case ExprOp::ge: return ">=";
        case ExprOp::eq: return "==";
        case ExprOp::ne: return "!=";
        case ExprOp::and_: return "and";
        case ExprOp::or_: return "or";
        case ExprOp::if_: return "if";
        case ExprOp::abs: return "abs";
        case ExprOp::min: return "min";
        case ExprOp::max: return "max";
        default: return "?";
    }
}

void print(std::ostream& out, const Expr& e);

void print_child(std::ostream& out, const Expr& child, bool parens) {
    if (parens) out << '(';
    print(out, child);
    if (parens) out << ')';
}

void print(std::ostream& out, const Expr& e) {
    switch (e.op) {
        case ExprOp::number: out << number_text(e.number); return;
        case ExprOp::indicator:
            out << e.name;
            if (!e.field.empty()) out << '.' << e.field;
            return;
        case ExprOp::price: out << e.name; return;
        case ExprOp::neg:
            out << '-';
            print_child(out, *e.args[0], expr_precedence(*e.args[0]) < 8);
            return;
        case ExprOp::not_:
            out << "not ";
            print_child(out, *e.args[0], expr_precedence(*e.args[0]) < 3);
            return;
        case ExprOp::if_:
        case ExprOp::abs:
        case ExprOp::min:
        case ExprOp::max:
            out << op_text(e.op) << '(';
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                if (i) out << ", ";
                print(out, *e.args[i]);
            }
            out << ')';
            return;
        default: {
            const int p = precedence(e.op);
            const bool cmp = is_comparison(e.op);
            print_child(out, *e.args[0], cmp ? expr_precedence(*e.args[0]) <= p : expr_precedence(*e.args[0]) < p);
            out << ' ' << op_text(e.op) << ' ';
            print_child(out, *e.args[1], expr_precedence(*e.args[1]) <= p);
            return;
        }
    }
}

// ----------------------------------------------------------------- validation helpers

void collect_refs(const ExprPtr& e, std::vector<std::string>& out) {
    if (!e) return;
    if (e->op == ExprOp::indicator && std::find(out.begin(), out.end(), e->name) == out.end())
        out.push_back(e->name);
    for (const auto& a : e->args) collect_refs(a, out);
}

void collect_prices(const ExprPtr& e, std::set<std::string>& out) {
    if (!e) return;
    if (e->op == ExprOp::price) out.insert(e->name);
    for (const auto& a : e->args) collect_prices(a, out);
}

std::size_t count_nodes(const ExprPtr& e) {
    if (!e) return 0;
    std::size_t n = 1;
    for (const auto& a : e->args) n += count_nodes(a);
    return n;
}

ExprType check_types(const ExprPtr& e, const Program& program, const std::string& path) {
    if (!e) throw ProgramError(path + ": empty expression");
    auto expect = [&](std::size_t i, ExprType want) {
        if (i >= e->args.size() || !e->args[i]) throw ProgramError(path + ": missing operand");
        if (check_types(e->args[i], program, path + "/" + std::to_string(i)) != want)
            throw ProgramError(path + ": operand " + std::to_string(i) + " has the wrong type");
    };
    switch (e->op) {
        case ExprOp::number:
            if (!std::isfinite(e->number)) throw ProgramError(path + ": non-finite literal");
            return ExprType::numeric;
        case ExprOp::indicator: {
            const auto* def = program.find_indicator(e->name);
            if (!def) throw UnboundReference(path + ": '" + e->name + "' is not a declared indicator");
            if (!e->field.empty()) {
                auto fields = output_fields(def->spec.kind);
                if (std::find(fields.begin() + 1, fields.end(), e->field) == fields.end())
                    throw UnboundReference(path + ": indicator '" + e->name + "' has no output '" + e->field + "'");
            }
            return ExprType::numeric;
        }
        case ExprOp::price:
            if (!is_price_field(e->name)) throw UnboundReference(path + ": unknown field '" + e->name + "'");
            return ExprType::numeric;
        case ExprOp::neg:
        case ExprOp::abs:
            if (e->args.size() != 1) throw ProgramError(path + ": arity");
            expect(0, ExprType::numeric);
            return ExprType::numeric;
        case ExprOp::not_:
            if (e->args.size() != 1) throw ProgramError(path + ": arity");
            expect(0, ExprType::boolean);
            return ExprType::boolean;
        case ExprOp::add:
        case ExprOp::sub:
        case ExprOp::mul:
        case ExprOp::div:
        case ExprOp::min:
        case ExprOp::max:
            if (e->args.size() != 2) throw ProgramError(path + ": arity");
            expect(0, ExprType::numeric);
            expect(1, ExprType::numeric);
            return ExprType::numeric;
        case ExprOp::lt:
        case ExprOp::le:
        case ExprOp::gt:
        case ExprOp::ge:
        case ExprOp::eq:
        case ExprOp::ne:
            if (e->args.size() != 2) throw ProgramError(path + ": arity");
            expect(0, ExprType::numeric);
            expect(1, ExprType::numeric);
            return ExprType::boolean;
        case ExprOp::and_:
        case ExprOp::or_:
            if (e->args.size() != 2) throw ProgramError(path + ": arity");
            expect(0, ExprType::boolean);
            expect(1, ExprType::boolean);
            return ExprType::boolean;
        case ExprOp::if_:
            if (e->args.size() != 3) throw ProgramError(path + ": arity");
            expect(0, ExprType::boolean);
            expect(1, ExprType::numeric);
            expect(2, ExprType::numeric);
            return ExprType::numeric;
    }
    throw ProgramError(path + ": unknown node");
}

bool valid_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

bool valid_tag_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '/';
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

int parse_int_token(Lexer& lex) {
    const Token& t = lex.peek();
    auto col = lex.column();
    if (t.kind != Tok::number || t.value != std::floor(t.value) || std::abs(t.value) > 1e9 ||
        t.text.find_first_of(".eE") != std::string::npos)
        throw SyntaxError(lex.line(), col, "expected an integer");
    return static_cast<int>(lex.take().value);
}

double parse_real_token(Lexer& lex) {
    bool negative = lex.accept("-");
    if (lex.peek().kind != Tok::number) lex.fail("expected a number");
    double v = lex.take().value;
    return negative ? -v : v;
}

}  // namespace

// ---------------------------------------------------------------------------

bool is_price_field(std::string_view name) {
    return std::find(std::begin(price_fields), std::end(price_fields), name) != std::end(price_fields);
}

bool is_comparison(ExprOp op) {
    return op == ExprOp::lt || op == ExprOp::le || op == ExprOp::gt || op == ExprOp::ge ||
           op == ExprOp::eq || op == ExprOp::ne;
}

ExprPtr make_number(double v) {
    auto e = std::make_shared<Expr>();
    e->op = ExprOp::number;
    e->number = v == 0.0 ? 0.0 : v;  // no negative zero
    return e;
}

ExprPtr make_indicator_ref(std::string name, std::string field) {
    auto e = std::make_shared<Expr>();
    e->op = ExprOp::indicator;
    e->name = std::move(name);
    e->field = std::move(field);
    return e;
}

ExprPtr make_price(std::string field) {
    auto e = std::make_shared<Expr>();
    e->op = ExprOp::price;
    e->name = std::move(field);
    return e;
}

ExprPtr make_unary(ExprOp op, ExprPtr arg) {
    if (op == ExprOp::neg && arg->op == ExprOp::number) return make_number(-arg->number);
    auto e = std::make_shared<Expr>();
    e->op = op;
    e->args.push_back(std::move(arg));
    return e;
}

ExprPtr make_binary(ExprOp op, ExprPtr lhs, ExprPtr rhs) {
    auto e = std::make_shared<Expr>();
    e->op = op;
    e->args.push_back(std::move(lhs));
    e->args.push_back(std::move(rhs));
    return e;
}

ExprPtr make_call(ExprOp op, std::vector<ExprPtr> args) {
    auto e = std::make_shared<Expr>();
    e->op = op;
    e->args = std::move(args);
    return e;
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->op != b->op || a->name != b->name || a->field != b->field || a->args.size() != b->args.size())
        return false;
    if (a->op == ExprOp::number && a->number != b->number) return false;
    for (std::size_t i = 0; i < a->args.size(); ++i)
        if (!expr_equal(a->args[i], b->args[i])) return false;
    return true;
}

std::string to_string(const ExprPtr& e) {
    if (!e) return {};
    std::ostringstream out;
    print(out, *e);
    return out.str();
}

const IndicatorDef* Program::find_indicator(std::string_view n) const {
    for (const auto& d : indicators)
        if (d.name == n) return &d;
    return nullptr;
}

bool operator==(const Program& a, const Program& b) {
    return a.name == b.name && a.tags == b.tags && a.indicators == b.indicators &&
           expr_equal(a.entry, b.entry) && expr_equal(a.exit, b.exit) &&
           expr_equal(a.short_entry, b.short_entry) && expr_equal(a.short_exit, b.short_exit) &&
           expr_equal(a.score, b.score) && a.sizing == b.sizing && a.overlay == b.overlay &&
           a.rebalance == b.rebalance && a.fallback == b.fallback;
}

std::size_t rule_node_count(const Program& p) {
    return count_nodes(p.entry) + count_nodes(p.exit) + count_nodes(p.short_entry) +
           count_nodes(p.short_exit) + count_nodes(p.score);
}

std::vector<std::string> referenced_indicators(const ExprPtr& e) {
    std::vector<std::string> out;
    collect_refs(e, out);
    return out;
}

void validate_program(const Program& p, const ParseOptions& options) {
    if (p.name.empty() || !std::all_of(p.name.begin(), p.name.end(), valid_name_char))
        throw ProgramError("program name must be non-empty [A-Za-z0-9_.-]");

    std::set<std::string> seen_tags;
    for (const auto& tag : p.tags) {
        if (tag.empty() || !std::all_of(tag.begin(), tag.end(), valid_tag_char))
            throw ProgramError("malformed tag '" + tag + "'");
        if (!seen_tags.insert(tag).second) throw ProgramError("duplicate tag '" + tag + "'");
        if (options.taxonomy && !options.taxonomy->contains(tag))
            throw UnknownTag("tag '" + tag + "' is not in the taxonomy");
    }

    if (p.indicators.size() > options.max_indicators)
        throw ProgramError("too many indicators (max " + std::to_string(options.max_indicators) + ")");
    std::set<std::string> names;
    for (const auto& d : p.indicators) {
        if (d.name.empty() || is_reserved(d.name) ||
            !(std::isalpha(static_cast<unsigned char>(d.name[0])) || d.name[0] == '_') ||
            !std::all_of(d.name.begin(), d.name.end(),
                         [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }))
            throw ProgramError("invalid indicator name '" + d.name + "'");
        if (!names.insert(d.name).second) throw ProgramError("duplicate indicator '" + d.name + "'");
        check_params(d.spec, options.bounds);
    }

    const std::pair<const ExprPtr*, const char*> rules[] = {
        {&p.entry, "entry"}, {&p.exit, "exit"}, {&p.short_entry, "short_entry"}, {&p.short_exit, "short_exit"}};
    for (auto [rule, label] : rules)
        if (*rule && check_types(*rule, p, label) != ExprType::boolean)
            throw ProgramError(std::string(label) + " must be a condition");
    if (p.score && check_types(p.score, p, "score") != ExprType::numeric)
        throw ProgramError("score must be numeric");
    if (p.exit && !p.entry) throw ProgramError("exit rule without entry rule");
    if (p.short_exit && !p.short_entry) throw ProgramError("short_exit rule without short_entry rule");
    if (rule_node_count(p) > options.max_rule_nodes)
        throw ProgramError("rules too large (max " + std::to_string(options.max_rule_nodes) + " nodes)");

    switch (p.sizing.kind) {
        case SizingKind::equal_weight: break;
        case SizingKind::inverse_volatility:
            if (p.sizing.lookback < std::max(2, options.bounds.min_lookback) ||
                p.sizing.lookback > options.bounds.max_lookback)
                throw ParamOutOfRange("inverse_volatility lookback " + std::to_string(p.sizing.lookback) +
                                      " out of range");
            break;
        case SizingKind::fixed_fraction:
            if (!(p.sizing.fraction > 0.0 && p.sizing.fraction <= 1.0))
                throw ParamOutOfRange("fixed_fraction must be in (0, 1]");
            break;
        case SizingKind::signal_proportional:
            if (!p.score) throw ProgramError("signal_proportional sizing needs a score rule");
            break;
        case SizingKind::market_cap: {
            if (p.sizing.shares.empty()) throw ProgramError("market_cap sizing needs share counts");
            std::set<std::string> syms;
            for (const auto& [sym, n] : p.sizing.shares) {
                if (!syms.insert(sym).second) throw ProgramError("duplicate share count for " + sym);
                if (!(n > 0.0) || !std::isfinite(n)) throw ParamOutOfRange("share count for " + sym + " must be positive");
            }
            break;
        }
    }
    if (p.overlay.trailing_stop && !(*p.overlay.trailing_stop > 0.0 && *p.overlay.trailing_stop < 1.0))
        throw ParamOutOfRange("trailing_stop must be in (0, 1)");
    if (p.overlay.max_position_weight &&
        !(*p.overlay.max_position_weight > 0.0 && *p.overlay.max_position_weight <= 1.0))
        throw ParamOutOfRange("max_position_weight must be in (0, 1]");
    if (p.rebalance.kind == RebalanceKind::every_n_days && p.rebalance.every < 1)
        throw ParamOutOfRange("every_n_days needs n >= 1");
}

Program parse_program(std::string_view text, const ParseOptions& options) {
    Program p;
    bool have_name = false;
    std::set<std::string> seen;

    auto once = [&](const std::string& key, std::size_t line) {
        if (key != "overlay" && key != "indicator" && !seen.insert(key).second)
            throw SyntaxError(line, 1, "duplicate '" + key + "' line");
    };

    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        std::string_view raw = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        std::string_view line = trim(raw);
        if (line.empty()) continue;
        const std::size_t indent = static_cast<std::size_t>(line.data() - raw.data());

        auto space = line.find_first_of(" \t");
        std::string key(line.substr(0, space));
        std::string_view rest = space == std::string_view::npos ? std::string_view{} : trim(line.substr(space));
        const std::size_t rest_offset = rest.empty() ? indent + line.size() : indent + static_cast<std::size_t>(rest.data() - line.data());
        once(key, line_no);

        if (key == "program") {
            if (rest.empty() || !std::all_of(rest.begin(), rest.end(), valid_name_char))
                throw SyntaxError(line_no, rest_offset + 1, "program name must be [A-Za-z0-9_.-]+");
            p.name = std::string(rest);
            have_name = true;
            continue;
        }
        if (key == "tags") {
            std::istringstream words{std::string(rest)};
            std::string tag;
            while (words >> tag) {
                if (!std::all_of(tag.begin(), tag.end(), valid_tag_char))
                    throw SyntaxError(line_no, rest_offset + 1, "malformed tag '" + tag + "'");
                if (std::find(p.tags.begin(), p.tags.end(), tag) != p.tags.end())
                    throw SyntaxError(line_no, rest_offset + 1, "duplicate tag '" + tag + "'");
                if (options.taxonomy && !options.taxonomy->contains(tag))
                    throw UnknownTag("line " + std::to_string(line_no) + ": tag '" + tag + "' is not in the taxonomy");
                p.tags.push_back(tag);
            }
            continue;
        }

        Lexer lex(rest, line_no, rest_offset);
        if (key == "indicator") {
            std::string name = lex.expect_ident("indicator name");
            if (is_reserved(name)) lex.fail("'" + name + "' is reserved");
            if (p.find_indicator(name)) throw SyntaxError(line_no, rest_offset + 1, "duplicate indicator '" + name + "'");
            lex.expect("=");
            auto kind_col = lex.column();
            std::string kind_name = lex.expect_ident("indicator kind");
            auto kind = indicator_kind_from_string(kind_name);
            if (!kind) throw UnknownIndicator("line " + std::to_string(line_no) + ":" + std::to_string(kind_col) +
                                              ": unknown indicator kind '" + kind_name + "'");
            IndicatorSpec spec{*kind, {}};
            lex.expect("(");
            if (!lex.accept(")")) {
                do {
                    spec.params.push_back(parse_int_token(lex));
                } while (lex.accept(","));
                lex.expect(")");
            }
            lex.expect_end();
            check_params(spec, options.bounds);
            p.indicators.push_back({name, spec});
        } else if (key == "entry" || key == "exit" || key == "short_entry" || key == "short_exit" || key == "score") {
            ExprParser parser(lex, p);
            auto col = lex.column();
            Typed t = parser.parse();
            lex.expect_end();
            const ExprType want = key == "score" ? ExprType::numeric : ExprType::boolean;
            if (t.type != want)
                throw SyntaxError(line_no, col, key + " must be " + (want == ExprType::boolean ? "a condition" : "numeric"));
            (key == "entry" ? p.entry : key == "exit" ? p.exit : key == "short_entry" ? p.short_entry
                             : key == "short_exit" ? p.short_exit : p.score) = t.expr;
        } else if (key == "sizing") {
            std::string kind = lex.expect_ident("sizing rule");
            if (kind == "equal_weight") {
                p.sizing = {SizingKind::equal_weight, 0, 0.0, {}};
            } else if (kind == "inverse_volatility") {
                lex.expect("(");
                p.sizing = {SizingKind::inverse_volatility, parse_int_token(lex), 0.0, {}};
                lex.expect(")");
            } else if (kind == "fixed_fraction") {
                lex.expect("(");
                p.sizing = {SizingKind::fixed_fraction, 0, parse_real_token(lex), {}};
                lex.expect(")");
            } else if (kind == "signal_proportional") {
                p.sizing = {SizingKind::signal_proportional, 0, 0.0, {}};
            } else if (kind == "market_cap") {
                p.sizing = {SizingKind::market_cap, 0, 0.0, {}};
                lex.expect("(");
                do {
                    std::string sym = lex.expect_ident("symbol");
                    lex.expect("=");
                    p.sizing.shares.emplace_back(sym, parse_real_token(lex));
                } while (lex.accept(","));
                lex.expect(")");
            } else {
                lex.fail("unknown sizing rule '" + kind + "'");
            }
            lex.expect_end();
        } else if (key == "overlay") {
            std::string kind = lex.expect_ident("overlay");
            lex.expect("(");
            double v = parse_real_token(lex);
            lex.expect(")");
            lex.expect_end();
            if (kind == "trailing_stop") {
                if (p.overlay.trailing_stop) throw SyntaxError(line_no, 1, "duplicate trailing_stop");
                p.overlay.trailing_stop = v;
            } else if (kind == "max_position_weight") {
                if (p.overlay.max_position_weight) throw SyntaxError(line_no, 1, "duplicate max_position_weight");
                p.overlay.max_position_weight = v;
            } else {
                throw SyntaxError(line_no, rest_offset + 1, "unknown overlay '" + kind + "'");
            }
        } else if (key == "rebalance") {
            std::string kind = lex.expect_ident("rebalance schedule");
            if (kind == "daily")
                p.rebalance = {RebalanceKind::daily, 1};
            else if (kind == "monthly")
                p.rebalance = {RebalanceKind::monthly, 1};
            else if (kind == "once")
                p.rebalance = {RebalanceKind::once, 1};
            else if (kind == "every_n_days") {
                lex.expect("(");
                p.rebalance = {RebalanceKind::every_n_days, parse_int_token(lex)};
                lex.expect(")");
            } else
                lex.fail("unknown rebalance schedule '" + kind + "'");
            lex.expect_end();
        } else if (key == "fallback") {
            std::string kind = lex.expect_ident("fallback");
            if (kind == "cash")
                p.fallback = Fallback::cash;
            else if (kind == "equal_weight_all")
                p.fallback = Fallback::equal_weight_all;
            else
                lex.fail("unknown fallback '" + kind + "'");
            lex.expect_end();
        } else {
            throw SyntaxError(line_no, indent + 1, "unknown statement '" + key + "'");
        }
    }
    if (!have_name) throw SyntaxError(1, 1, "missing 'program <name>' line");
    validate_program(p, options);
    return p;
}

std::string serialize_program(const Program& p) {
    std::ostringstream out;
    out << "program " << p.name << '\n';
    out << "tags";
    for (const auto& t : p.tags) out << ' ' << t;
    out << '\n';
    for (const auto& d : p.indicators) {
        out << "indicator " << d.name << " = " << to_string(d.spec.kind) << '(';
        for (std::size_t i = 0; i < d.spec.params.size(); ++i) out << (i ? ", " : "") << d.spec.params[i];
        out << ")\n";
    }
    if (p.entry) out << "entry " << to_string(p.entry) << '\n';
    if (p.exit) out << "exit " << to_string(p.exit) << '\n';
    if (p.short_entry) out << "short_entry " << to_string(p.short_entry) << '\n';
    if (p.short_exit) out << "short_exit " << to_string(p.short_exit) << '\n';
    if (p.score) out << "score " << to_string(p.score) << '\n';
    out << "sizing ";
    switch (p.sizing.kind) {
        case SizingKind::equal_weight: out << "equal_weight"; break;
        case SizingKind::inverse_volatility: out << "inverse_volatility(" << p.sizing.lookback << ')'; break;
        case SizingKind::fixed_fraction: out << "fixed_fraction(" << number_text(p.sizing.fraction) << ')'; break;
        case SizingKind::signal_proportional: out << "signal_proportional"; break;
        case SizingKind::market_cap:
            out << "market_cap(";
            for (std::size_t i = 0; i < p.sizing.shares.size(); ++i)
                out << (i ? ", " : "") << p.sizing.shares[i].first << '=' << number_text(p.sizing.shares[i].second);
            out << ')';
            break;
    }
    out << '\n';
    if (p.overlay.trailing_stop) out << "overlay trailing_stop(" << number_text(*p.overlay.trailing_stop) << ")\n";
    if (p.overlay.max_position_weight)
        out << "overlay max_position_weight(" << number_text(*p.overlay.max_position_weight) << ")\n";
    out << "rebalance ";
    switch (p.rebalance.kind) {
        case RebalanceKind::daily: out << "daily"; break;
        case RebalanceKind::every_n_days: out << "every_n_days(" << p.rebalance.every << ')'; break;
        case RebalanceKind::monthly: out << "monthly"; break;
        case RebalanceKind::once: out << "once"; break;
    }
    out << '\n';
    out << "fallback " << (p.fallback == Fallback::cash ? "cash" : "equal_weight_all") << '\n';
    return out.str();
}

std::vector<std::string> derive_tags(const Program& p, const CategoryTable& table, const Taxonomy& taxonomy) {
    std::set<std::string> found;
    auto add = [&](const std::string& key) {
        if (auto cat = table.lookup(key); cat && taxonomy.contains(*cat)) found.insert(*cat);
    };
    for (const auto& d : p.indicators) add(std::string(to_string(d.spec.kind)));
    std::set<std::string> prices;
    for (const auto* rule : {&p.entry, &p.exit, &p.short_entry, &p.short_exit, &p.score}) collect_prices(*rule, prices);
    for (const auto& f : prices) add("price:" + f);
    switch (p.sizing.kind) {
        case SizingKind::inverse_volatility: add("sizing:inverse_volatility"); break;
        case SizingKind::market_cap: add("sizing:market_cap"); break;
        case SizingKind::fixed_fraction: add("sizing:fixed_fraction"); break;
        case SizingKind::signal_proportional: add("sizing:signal_proportional"); break;
        case SizingKind::equal_weight: add("sizing:equal_weight"); break;
    }
    if (p.overlay.trailing_stop) add("overlay:trailing_stop");
    if (p.overlay.max_position_weight) add("overlay:max_position_weight");

    std::vector<std::string> out;
    for (const auto& c : taxonomy.categories)
        if (found.count(c)) out.push_back(c);
    return out;
}

}  // namespace qevo
