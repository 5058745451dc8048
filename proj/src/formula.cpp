#include "ibis/formula.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

namespace ibis {

namespace {

std::shared_ptr<Formula> make(StateOp op) {
    auto f = std::make_shared<Formula>();
    f->op = op;
    return f;
}

std::vector<std::string> sorted_agents(std::vector<std::string> agents) {
    std::sort(agents.begin(), agents.end());
    agents.erase(std::unique(agents.begin(), agents.end()), agents.end());
    return agents;
}

}  // namespace

size_t Formula::size() const {
    size_t n = 1;
    if (op == StateOp::Coalition) n += 1;  // the path operator
    if (lhs) n += lhs->size();
    if (rhs) n += rhs->size();
    return n;
}

FormulaPtr f_atom(std::string name) {
    auto f = make(StateOp::Atom);
    f->atom = std::move(name);
    return f;
}
FormulaPtr f_true() { return make(StateOp::True); }
FormulaPtr f_false() { return make(StateOp::False); }
FormulaPtr f_not(FormulaPtr a) {
    auto f = make(StateOp::Not);
    f->lhs = std::move(a);
    return f;
}
FormulaPtr f_and(FormulaPtr a, FormulaPtr b) {
    auto f = make(StateOp::And);
    f->lhs = std::move(a);
    f->rhs = std::move(b);
    return f;
}
FormulaPtr f_or(FormulaPtr a, FormulaPtr b) {
    auto f = make(StateOp::Or);
    f->lhs = std::move(a);
    f->rhs = std::move(b);
    return f;
}
FormulaPtr f_implies(FormulaPtr a, FormulaPtr b) {
    auto f = make(StateOp::Implies);
    f->lhs = std::move(a);
    f->rhs = std::move(b);
    return f;
}
FormulaPtr f_coalition(std::vector<std::string> agents, PathOp op, FormulaPtr a, FormulaPtr b) {
    auto f = make(StateOp::Coalition);
    f->agents = sorted_agents(std::move(agents));
    f->path = op;
    f->lhs = std::move(a);
    f->rhs = std::move(b);
    if ((op == PathOp::U || op == PathOp::R) && !f->rhs) throw Error("binary path operator needs two operands");
    if ((op == PathOp::X || op == PathOp::F || op == PathOp::G) && f->rhs) throw Error("unary path operator got two operands");
    return f;
}
FormulaPtr f_k(std::string agent, FormulaPtr a) {
    auto f = make(StateOp::K);
    f->agents = {std::move(agent)};
    f->lhs = std::move(a);
    return f;
}
FormulaPtr f_e(std::vector<std::string> agents, FormulaPtr a) {
    auto f = make(StateOp::E);
    f->agents = sorted_agents(std::move(agents));
    f->lhs = std::move(a);
    return f;
}
FormulaPtr f_c(std::vector<std::string> agents, FormulaPtr a) {
    auto f = make(StateOp::C);
    f->agents = sorted_agents(std::move(agents));
    f->lhs = std::move(a);
    return f;
}
FormulaPtr f_ag(FormulaPtr a) {
    auto f = make(StateOp::AG);
    f->lhs = std::move(a);
    return f;
}

bool formula_equal(const FormulaPtr& a, const FormulaPtr& b) {
    if (a.get() == b.get()) return true;
    if (!a || !b) return false;
    if (a->op != b->op || a->atom != b->atom || a->agents != b->agents) return false;
    if (a->op == StateOp::Coalition && a->path != b->path) return false;
    return formula_equal(a->lhs, b->lhs) && formula_equal(a->rhs, b->rhs);
}

size_t formula_hash(const FormulaPtr& f) {
    if (!f) return 0x9e3779b97f4a7c15ull;
    size_t h = static_cast<size_t>(f->op) * 0x100000001b3ull;
    h ^= std::hash<std::string>{}(f->atom) + 0x9e3779b9 + (h << 6) + (h >> 2);
    for (const auto& a : f->agents) h ^= std::hash<std::string>{}(a) + 0x9e3779b9 + (h << 6) + (h >> 2);
    if (f->op == StateOp::Coalition) h = h * 31 + static_cast<size_t>(f->path);
    h = h * 31 + formula_hash(f->lhs);
    h = h * 31 + formula_hash(f->rhs);
    return h;
}

namespace {

bool is_binary(const FormulaPtr& f) {
    return f->op == StateOp::And || f->op == StateOp::Or || f->op == StateOp::Implies;
}

std::string print_operand(const FormulaPtr& f) {
    std::string s = print_formula(f);
    // binary connectives for precedence; coalition modalities because their
    // path goal extends as far right as possible
    if (is_binary(f) || f->op == StateOp::Coalition) return "(" + s + ")";
    return s;
}

std::string join_agents(const std::vector<std::string>& agents) {
    std::string s;
    for (size_t i = 0; i < agents.size(); ++i) {
        if (i) s += ",";
        s += agents[i];
    }
    return s;
}

}  // namespace

std::string print_formula(const FormulaPtr& f) {
    if (!f) throw Error("null formula");
    switch (f->op) {
        case StateOp::Atom: return f->atom;
        case StateOp::True: return "true";
        case StateOp::False: return "false";
        case StateOp::Not: return "!" + print_operand(f->lhs);
        case StateOp::And: return print_operand(f->lhs) + " & " + print_operand(f->rhs);
        case StateOp::Or: return print_operand(f->lhs) + " | " + print_operand(f->rhs);
        case StateOp::Implies: return print_operand(f->lhs) + " -> " + print_operand(f->rhs);
        case StateOp::K: return "K " + f->agents[0] + " " + print_operand(f->lhs);
        case StateOp::E: return "E " + join_agents(f->agents) + " " + print_operand(f->lhs);
        case StateOp::C: return "C " + join_agents(f->agents) + " " + print_operand(f->lhs);
        case StateOp::AG: return "AG " + print_operand(f->lhs);
        case StateOp::Coalition: {
            std::string head = "<" + join_agents(f->agents) + "> ";
            switch (f->path) {
                case PathOp::X: return head + "X " + print_operand(f->lhs);
                case PathOp::F: return head + "F " + print_operand(f->lhs);
                case PathOp::G: return head + "G " + print_operand(f->lhs);
                case PathOp::U: return head + print_operand(f->lhs) + " U " + print_operand(f->rhs);
                case PathOp::R: return head + print_operand(f->lhs) + " R " + print_operand(f->rhs);
            }
        }
    }
    throw Error("unreachable");
}

namespace {

FormulaPtr push_neg(const FormulaPtr& f, bool neg);

FormulaPtr dual_modal(const FormulaPtr& f, bool neg) {
    FormulaPtr node;
    switch (f->op) {
        case StateOp::K: node = f_k(f->agents[0], push_neg(f->lhs, false)); break;
        case StateOp::E: node = f_e(f->agents, push_neg(f->lhs, false)); break;
        case StateOp::C: node = f_c(f->agents, push_neg(f->lhs, false)); break;
        case StateOp::Coalition: {
            FormulaPtr l = push_neg(f->lhs, false);
            FormulaPtr r = f->rhs ? push_neg(f->rhs, false) : nullptr;
            switch (f->path) {
                case PathOp::F: node = f_coalition(f->agents, PathOp::U, f_true(), l); break;
                case PathOp::G: node = f_coalition(f->agents, PathOp::R, f_false(), l); break;
                default: node = f_coalition(f->agents, f->path, l, r); break;
            }
            break;
        }
        default: throw Error("unreachable");
    }
    return neg ? f_not(node) : node;
}

FormulaPtr push_neg(const FormulaPtr& f, bool neg) {
    switch (f->op) {
        case StateOp::Atom: return neg ? f_not(f_atom(f->atom)) : f_atom(f->atom);
        case StateOp::True: return neg ? f_false() : f_true();
        case StateOp::False: return neg ? f_true() : f_false();
        case StateOp::Not: return push_neg(f->lhs, !neg);
        case StateOp::And:
            return neg ? f_or(push_neg(f->lhs, true), push_neg(f->rhs, true))
                       : f_and(push_neg(f->lhs, false), push_neg(f->rhs, false));
        case StateOp::Or:
            return neg ? f_and(push_neg(f->lhs, true), push_neg(f->rhs, true))
                       : f_or(push_neg(f->lhs, false), push_neg(f->rhs, false));
        case StateOp::Implies:
            // a -> b == !a | b
            return neg ? f_and(push_neg(f->lhs, false), push_neg(f->rhs, true))
                       : f_or(push_neg(f->lhs, true), push_neg(f->rhs, false));
        case StateOp::AG:
            return dual_modal(f_coalition({}, PathOp::G, f->lhs), neg);
        case StateOp::K:
        case StateOp::E:
        case StateOp::C:
        case StateOp::Coalition:
            return dual_modal(f, neg);
    }
    throw Error("unreachable");
}

}  // namespace

FormulaPtr dualize(const FormulaPtr& f) { return push_neg(f, false); }

namespace {

void collect_coalitions(const FormulaPtr& f, std::set<std::vector<std::string>>& out) {
    if (!f) return;
    if (f->op == StateOp::Coalition || f->op == StateOp::K || f->op == StateOp::E ||
        f->op == StateOp::C)
        out.insert(f->agents);
    collect_coalitions(f->lhs, out);
    collect_coalitions(f->rhs, out);
}

bool positive_scan(const FormulaPtr& f, bool negated) {
    if (!f) return true;
    switch (f->op) {
        case StateOp::Coalition:
            if (negated) return false;
            return positive_scan(f->lhs, false) && positive_scan(f->rhs, false);
        case StateOp::Not: return positive_scan(f->lhs, !negated);
        case StateOp::Implies:
            return positive_scan(f->lhs, !negated) && positive_scan(f->rhs, negated);
        case StateOp::And:
        case StateOp::Or:
            return positive_scan(f->lhs, negated) && positive_scan(f->rhs, negated);
        case StateOp::K:
        case StateOp::E:
        case StateOp::C:
        case StateOp::AG:
            return positive_scan(f->lhs, negated);
        default: return true;
    }
}

}  // namespace

std::set<std::vector<std::string>> coalitions_of(const FormulaPtr& f) {
    std::set<std::vector<std::string>> out;
    collect_coalitions(f, out);
    return out;
}

bool coalition_positive(const FormulaPtr& f) { return positive_scan(f, false); }

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace {

enum class Tok { Ident, True, False, K, E, C, AG, X, F, G, U, R, Not, And, Or, Implies, LParen, RParen, Lt, Gt, Comma, End };

struct Token {
    Tok kind;
    std::string text;
    size_t line, col;
};

struct Lexer {
    const std::string& src;
    size_t pos = 0, line = 1, col = 1;
    Token cur;

    explicit Lexer(const std::string& s) : src(s) { advance(); }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(cur.line, cur.col, msg); }

    void advance() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) {
            if (src[pos] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++pos;
        }
        cur.line = line;
        cur.col = col;
        if (pos >= src.size()) {
            cur = {Tok::End, "", line, col};
            return;
        }
        char c = src[pos];
        auto one = [&](Tok k) {
            cur = {k, std::string(1, c), line, col};
            ++pos;
            ++col;
        };
        switch (c) {
            case '!': one(Tok::Not); return;
            case '&': one(Tok::And); return;
            case '|': one(Tok::Or); return;
            case '(': one(Tok::LParen); return;
            case ')': one(Tok::RParen); return;
            case '<': one(Tok::Lt); return;
            case '>': one(Tok::Gt); return;
            case ',': one(Tok::Comma); return;
            case '-':
                if (pos + 1 < src.size() && src[pos + 1] == '>') {
                    cur = {Tok::Implies, "->", line, col};
                    pos += 2;
                    col += 2;
                    return;
                }
                throw ParseError(line, col, "unexpected '-' (did you mean '->'?)");
            default: break;
        }
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos;
            while (pos < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_')) {
                ++pos;
                ++col;
            }
            std::string word = src.substr(start, pos - start);
            Tok k = Tok::Ident;
            if (word == "true") k = Tok::True;
            else if (word == "false") k = Tok::False;
            else if (word == "K") k = Tok::K;
            else if (word == "E") k = Tok::E;
            else if (word == "C") k = Tok::C;
            else if (word == "AG") k = Tok::AG;
            else if (word == "X") k = Tok::X;
            else if (word == "F") k = Tok::F;
            else if (word == "G") k = Tok::G;
            else if (word == "U") k = Tok::U;
            else if (word == "R") k = Tok::R;
            cur = {k, word, cur.line, cur.col};
            return;
        }
        throw ParseError(line, col, std::string("unexpected character '") + c + "'");
    }
};

struct Parser {
    Lexer lex;

    explicit Parser(const std::string& s) : lex(s) {}

    FormulaPtr parse() {
        FormulaPtr f = implies();
        if (lex.cur.kind != Tok::End) lex.fail("trailing input after formula, got '" + lex.cur.text + "'");
        return f;
    }

    FormulaPtr implies() {
        FormulaPtr l = disj();
        if (lex.cur.kind == Tok::Implies) {
            lex.advance();
            return f_implies(std::move(l), implies());  // right associative
        }
        return l;
    }

    FormulaPtr disj() {
        FormulaPtr l = conj();
        while (lex.cur.kind == Tok::Or) {
            lex.advance();
            l = f_or(std::move(l), conj());
        }
        return l;
    }

    FormulaPtr conj() {
        FormulaPtr l = unary();
        while (lex.cur.kind == Tok::And) {
            lex.advance();
            l = f_and(std::move(l), unary());
        }
        return l;
    }

    std::string expect_ident(const char* what) {
        if (lex.cur.kind != Tok::Ident)
            lex.fail(std::string("expected ") + what + ", got '" + lex.cur.text + "'");
        std::string s = lex.cur.text;
        lex.advance();
        return s;
    }

    std::vector<std::string> agent_list() {
        std::vector<std::string> out{expect_ident("agent name")};
        while (lex.cur.kind == Tok::Comma) {
            lex.advance();
            out.push_back(expect_ident("agent name"));
        }
        return out;
    }

    FormulaPtr unary() {
        switch (lex.cur.kind) {
            case Tok::Not:
                lex.advance();
                return f_not(unary());
            case Tok::True:
                lex.advance();
                return f_true();
            case Tok::False:
                lex.advance();
                return f_false();
            case Tok::LParen: {
                lex.advance();
                FormulaPtr f = implies();
                if (lex.cur.kind != Tok::RParen) lex.fail("expected ')'");
                lex.advance();
                return f;
            }
            case Tok::K: {
                lex.advance();
                std::string agent = expect_ident("agent name");
                return f_k(std::move(agent), unary());
            }
            case Tok::E: {
                lex.advance();
                auto agents = agent_list();
                return f_e(std::move(agents), unary());
            }
            case Tok::C: {
                lex.advance();
                auto agents = agent_list();
                return f_c(std::move(agents), unary());
            }
            case Tok::AG:
                lex.advance();
                return f_ag(unary());
            case Tok::Lt:
                return coalition();
            case Tok::Ident: {
                std::string name = lex.cur.text;
                lex.advance();
                return f_atom(std::move(name));
            }
            default:
                lex.fail("expected a formula, got '" + lex.cur.text + "'");
        }
    }

    FormulaPtr coalition() {
        lex.advance();  // consume '<'
        std::vector<std::string> agents;
        if (lex.cur.kind != Tok::Gt) agents = agent_list();
        if (lex.cur.kind != Tok::Gt) lex.fail("expected '>' after coalition");
        lex.advance();
        switch (lex.cur.kind) {
            case Tok::X:
                lex.advance();
                return f_coalition(std::move(agents), PathOp::X, implies());
            case Tok::F:
                lex.advance();
                return f_coalition(std::move(agents), PathOp::F, implies());
            case Tok::G:
                lex.advance();
                return f_coalition(std::move(agents), PathOp::G, implies());
            default: {
                FormulaPtr l = implies();
                if (lex.cur.kind == Tok::U) {
                    lex.advance();
                    return f_coalition(std::move(agents), PathOp::U, std::move(l), implies());
                }
                if (lex.cur.kind == Tok::R) {
                    lex.advance();
                    return f_coalition(std::move(agents), PathOp::R, std::move(l), implies());
                }
                lex.fail("expected 'U' or 'R' in path formula, got '" + lex.cur.text + "'");
            }
        }
    }
};

}  // namespace

FormulaPtr parse_formula(const std::string& text) {
    Parser p(text);
    return p.parse();
}

std::vector<FormulaPtr> parse_formula_file(const std::string& content) {
    std::vector<FormulaPtr> out;
    std::istringstream in(content);
    std::string raw;
    size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string body = raw.substr(0, raw.find('#'));
        if (body.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(parse_formula(body));
        } catch (const ParseError& e) {
            throw ParseError(line_no, e.col, std::string(e.what()));
        }
    }
    return out;
}

}  // namespace ibis
