#include "cogscreen/regex.hpp"

#include <optional>

#include "cogscreen/error.hpp"
#include "cogscreen/util/utf8.hpp"

namespace cogscreen::regex {

namespace {

constexpr int kMaxRepeat = 1000;
constexpr std::size_t kMaxProgram = 200000;

bool is_word(char32_t c) { return c == U'_' || utf8::is_alnum(c); }

enum class Builtin { digit, word, space };

bool builtin_matches(Builtin b, char32_t c) {
    switch (b) {
        case Builtin::digit: return c >= U'0' && c <= U'9';
        case Builtin::word: return is_word(c);
        case Builtin::space: return utf8::is_space(c);
    }
    return false;
}

struct CharClass {
    std::vector<std::pair<char32_t, char32_t>> ranges;
    std::vector<std::pair<Builtin, bool>> builtins;  // (kind, negated)
    bool negated = false;
    bool icase = false;

    bool raw_contains(char32_t c) const {
        for (const auto& [lo, hi] : ranges) {
            if (c >= lo && c <= hi) return true;
        }
        for (const auto& [b, neg] : builtins) {
            if (builtin_matches(b, c) != neg) return true;
        }
        return false;
    }

    bool matches(char32_t c) const {
        bool in = raw_contains(c);
        if (!in && icase) in = raw_contains(utf8::to_lower(c)) || raw_contains(utf8::to_upper(c));
        return in != negated;
    }
};

enum class AssertKind { line_start, line_end, text_start, text_end, word_boundary, not_word_boundary };

// ---- AST ------------------------------------------------------------------

struct Node;
using NodePtr = std::unique_ptr<Node>;

struct Node {
    enum class Kind { empty, literal, cls, any, assertion, concat, alternate, repeat } kind;
    char32_t ch = 0;
    bool icase = false;
    bool dotall = false;
    std::size_t class_index = 0;
    AssertKind assertion{};
    std::vector<NodePtr> children;
    int min = 0;
    int max = -1;  // -1 = unbounded

    explicit Node(Kind k) : kind(k) {}
};

struct Flags {
    bool icase = false;
    bool multiline = false;
    bool dotall = false;
};

class Parser {
public:
    Parser(std::u32string src, std::vector<CharClass>& classes)
        : src_(std::move(src)), classes_(classes) {}

    NodePtr parse() {
        Flags flags;
        NodePtr n = parse_alternation(flags);
        if (pos_ < src_.size()) fail("unmatched ')'");
        return n;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw RegexError(msg, pos_); }
    [[noreturn]] void fail_at(const std::string& msg, std::size_t at) const {
        throw RegexError(msg, at);
    }

    bool done() const { return pos_ >= src_.size(); }
    char32_t peek(std::size_t ahead = 0) const {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : 0;
    }

    NodePtr parse_alternation(Flags& flags) {
        std::vector<NodePtr> alts;
        alts.push_back(parse_concat(flags));
        while (!done() && peek() == U'|') {
            ++pos_;
            alts.push_back(parse_concat(flags));
        }
        if (alts.size() == 1) return std::move(alts.front());
        auto n = std::make_unique<Node>(Node::Kind::alternate);
        n->children = std::move(alts);
        return n;
    }

    NodePtr parse_concat(Flags& flags) {
        auto n = std::make_unique<Node>(Node::Kind::concat);
        while (!done() && peek() != U'|' && peek() != U')') {
            NodePtr atom = parse_atom(flags);
            if (!atom) continue;  // flag-only group
            n->children.push_back(parse_quantifier(std::move(atom)));
        }
        return n;
    }

    std::optional<int> parse_int() {
        std::size_t start = pos_;
        long v = 0;
        while (!done() && peek() >= U'0' && peek() <= U'9') {
            v = v * 10 + static_cast<long>(peek() - U'0');
            if (v > kMaxRepeat) fail_at("repetition count exceeds " + std::to_string(kMaxRepeat), start);
            ++pos_;
        }
        if (pos_ == start) return std::nullopt;
        return static_cast<int>(v);
    }

    NodePtr parse_quantifier(NodePtr atom) {
        if (!done()) {
            const std::size_t qpos = pos_;
            int min = 0, max = -1;
            const char32_t c = peek();
            if (c == U'*') {
                ++pos_;
            } else if (c == U'+') {
                ++pos_;
                min = 1;
            } else if (c == U'?') {
                ++pos_;
                max = 1;
            } else if (c == U'{') {
                const std::size_t save = pos_;
                ++pos_;
                auto lo = parse_int();
                if (!lo) {
                    // Not a bounded repetition: treat '{' as a literal.
                    pos_ = save;
                    return atom;
                }
                min = *lo;
                if (peek() == U',') {
                    ++pos_;
                    auto hi = parse_int();
                    max = hi ? *hi : -1;
                } else {
                    max = min;
                }
                if (peek() != U'}') fail("unterminated repetition");
                ++pos_;
                if (max != -1 && max < min) fail_at("repetition bounds out of order", qpos);
            } else {
                return atom;
            }
            if (atom->kind == Node::Kind::assertion || atom->kind == Node::Kind::empty) {
                fail_at("nothing to repeat", qpos);
            }
            if (peek() == U'?') ++pos_;  // lazy: same language, irrelevant for search
            else if (peek() == U'+') fail("possessive quantifiers are not supported");
            auto rep = std::make_unique<Node>(Node::Kind::repeat);
            rep->min = min;
            rep->max = max;
            rep->children.push_back(std::move(atom));
            atom = std::move(rep);
            if (!done() && (peek() == U'*' || peek() == U'+' || peek() == U'?' ||
                            (peek() == U'{' && peek(1) >= U'0' && peek(1) <= U'9'))) {
                fail("multiple repeat");
            }
        }
        return atom;
    }

    NodePtr literal(char32_t c, const Flags& flags) {
        auto n = std::make_unique<Node>(Node::Kind::literal);
        n->ch = c;
        n->icase = flags.icase;
        return n;
    }

    NodePtr class_node(CharClass cc, const Flags& flags) {
        cc.icase = flags.icase;
        classes_.push_back(std::move(cc));
        auto n = std::make_unique<Node>(Node::Kind::cls);
        n->class_index = classes_.size() - 1;
        return n;
    }

    NodePtr assertion(AssertKind k) {
        auto n = std::make_unique<Node>(Node::Kind::assertion);
        n->assertion = k;
        return n;
    }

    // Returns true and fills `flags` if the upcoming text is a flag spec
    // terminated by ')' or ':'; `scoped` reports which.
    bool parse_flag_spec(Flags& out, bool& scoped) {
        std::size_t p = pos_;
        Flags f = out;
        bool negate = false;
        bool any = false;
        while (p < src_.size()) {
            const char32_t c = src_[p];
            if (c == U')' || c == U':') {
                if (!any) return false;
                scoped = c == U':';
                pos_ = p + 1;
                out = f;
                return true;
            }
            if (c == U'-') {
                negate = true;
            } else if (c == U'i') {
                f.icase = !negate;
            } else if (c == U'm') {
                f.multiline = !negate;
            } else if (c == U's') {
                f.dotall = !negate;
            } else {
                fail_at("unknown inline flag", p);
            }
            any = true;
            ++p;
        }
        fail_at("unterminated group", p);
    }

    NodePtr parse_group(Flags& flags) {
        const std::size_t open = pos_;
        ++pos_;  // '('
        Flags inner = flags;
        if (peek() == U'?') {
            ++pos_;
            const char32_t c = peek();
            if (c == U':') {
                ++pos_;
            } else if (c == U'=' || c == U'!') {
                fail_at("lookahead is not supported", open);
            } else if (c == U'<' && (peek(1) == U'=' || peek(1) == U'!')) {
                fail_at("lookbehind is not supported", open);
            } else if (c == U'P' || c == U'<') {
                if (c == U'P') ++pos_;
                if (peek() != U'<') fail("malformed named group");
                ++pos_;
                while (!done() && peek() != U'>') {
                    if (!is_word(peek())) fail("invalid group name");
                    ++pos_;
                }
                if (done()) fail_at("unterminated group name", open);
                ++pos_;
            } else {
                bool scoped = false;
                if (!parse_flag_spec(inner, scoped)) fail_at("malformed group", open);
                if (!scoped) {
                    // (?i) applies to the remainder of the enclosing group.
                    flags = inner;
                    return nullptr;
                }
            }
        }
        NodePtr body = parse_alternation(inner);
        if (peek() != U')') fail_at("missing ')'", open);
        ++pos_;
        return body;
    }

    char32_t parse_hex(std::size_t digits) {
        char32_t v = 0;
        for (std::size_t i = 0; i < digits; ++i) {
            const char32_t c = peek();
            int d;
            if (c >= U'0' && c <= U'9') d = static_cast<int>(c - U'0');
            else if (c >= U'a' && c <= U'f') d = static_cast<int>(c - U'a') + 10;
            else if (c >= U'A' && c <= U'F') d = static_cast<int>(c - U'A') + 10;
            else fail("invalid hex escape");
            v = v * 16 + static_cast<char32_t>(d);
            ++pos_;
        }
        return v;
    }

    char32_t parse_braced_hex() {
        ++pos_;  // '{'
        char32_t v = 0;
        std::size_t n = 0;
        while (!done() && peek() != U'}') {
            v = v * 16 + parse_hex(1);
            if (++n > 6) fail("hex escape too long");
        }
        if (done() || n == 0) fail("malformed hex escape");
        ++pos_;
        if (v > 0x10FFFF) fail("code point out of range");
        return v;
    }

    // Escapes valid both inside and outside classes. Returns a literal code
    // point, or sets `builtin` for \d \w \s and their negations.
    char32_t parse_escape(std::optional<std::pair<Builtin, bool>>& builtin) {
        const std::size_t at = pos_;
        ++pos_;  // '\'
        if (done()) fail_at("trailing backslash", at);
        const char32_t c = peek();
        ++pos_;
        switch (c) {
            case U'd': builtin = {{Builtin::digit, false}}; return 0;
            case U'D': builtin = {{Builtin::digit, true}}; return 0;
            case U'w': builtin = {{Builtin::word, false}}; return 0;
            case U'W': builtin = {{Builtin::word, true}}; return 0;
            case U's': builtin = {{Builtin::space, false}}; return 0;
            case U'S': builtin = {{Builtin::space, true}}; return 0;
            case U'n': return U'\n';
            case U't': return U'\t';
            case U'r': return U'\r';
            case U'f': return U'\f';
            case U'v': return U'\v';
            case U'0': return 0;
            case U'x': return peek() == U'{' ? parse_braced_hex() : parse_hex(2);
            case U'u': return parse_hex(4);
            default: break;
        }
        if (c >= U'1' && c <= U'9') fail_at("backreferences are not supported", at);
        if (utf8::is_alnum(c)) fail_at("unknown escape", at);
        return c;  // escaped punctuation is literal
    }

    NodePtr parse_class(const Flags& flags) {
        const std::size_t open = pos_;
        ++pos_;  // '['
        CharClass cc;
        if (peek() == U'^') {
            cc.negated = true;
            ++pos_;
        }
        bool first = true;
        while (true) {
            if (done()) fail_at("unterminated character class", open);
            char32_t c = peek();
            if (c == U']' && !first) {
                ++pos_;
                break;
            }
            first = false;
            char32_t lo;
            if (c == U'\\') {
                std::optional<std::pair<Builtin, bool>> b;
                lo = parse_escape(b);
                if (b) {
                    cc.builtins.push_back(*b);
                    continue;
                }
            } else {
                lo = c;
                ++pos_;
            }
            if (peek() == U'-' && peek(1) != U']' && pos_ + 1 < src_.size()) {
                const std::size_t dash = pos_;
                ++pos_;
                char32_t hi;
                if (peek() == U'\\') {
                    std::optional<std::pair<Builtin, bool>> b;
                    hi = parse_escape(b);
                    if (b) fail_at("invalid range endpoint", dash);
                } else {
                    hi = peek();
                    ++pos_;
                }
                if (hi < lo) fail_at("character range out of order", dash);
                cc.ranges.emplace_back(lo, hi);
            } else {
                cc.ranges.emplace_back(lo, lo);
            }
        }
        return class_node(std::move(cc), flags);
    }

    NodePtr parse_atom(Flags& flags) {
        const char32_t c = peek();
        switch (c) {
            case U'(': return parse_group(flags);
            case U'[': return parse_class(flags);
            case U'.': {
                ++pos_;
                auto n = std::make_unique<Node>(Node::Kind::any);
                n->dotall = flags.dotall;
                return n;
            }
            case U'^':
                ++pos_;
                return assertion(flags.multiline ? AssertKind::line_start : AssertKind::text_start);
            case U'$':
                ++pos_;
                return assertion(flags.multiline ? AssertKind::line_end : AssertKind::text_end);
            case U'*': case U'+': case U'?':
                fail("nothing to repeat");
            case U'\\': {
                const char32_t e = peek(1);
                if (e == U'b') { pos_ += 2; return assertion(AssertKind::word_boundary); }
                if (e == U'B') { pos_ += 2; return assertion(AssertKind::not_word_boundary); }
                if (e == U'A') { pos_ += 2; return assertion(AssertKind::text_start); }
                if (e == U'z' || e == U'Z') { pos_ += 2; return assertion(AssertKind::text_end); }
                std::optional<std::pair<Builtin, bool>> b;
                const char32_t lit = parse_escape(b);
                if (b) {
                    CharClass cc;
                    cc.builtins.push_back(*b);
                    return class_node(std::move(cc), flags);
                }
                return literal(lit, flags);
            }
            default:
                ++pos_;
                return literal(c, flags);
        }
    }

    std::u32string src_;
    std::size_t pos_ = 0;
    std::vector<CharClass>& classes_;
};

}  // namespace

// ---- Program ----------------------------------------------------------------

struct Inst {
    enum class Op { ch, cls, any, assertion, split, jmp, match } op;
    char32_t ch = 0;
    bool icase = false;
    bool dotall = false;
    std::size_t class_index = 0;
    AssertKind assertion{};
    std::size_t x = 0;
    std::size_t y = 0;
};

struct Program {
    std::vector<Inst> code;
    std::vector<CharClass> classes;
};

namespace {

class Compiler {
public:
    explicit Compiler(Program& prog) : prog_(prog) {}

    void emit_node(const Node& n) {
        switch (n.kind) {
            case Node::Kind::empty: break;
            case Node::Kind::literal: {
                Inst i{Inst::Op::ch};
                i.ch = n.icase ? utf8::to_lower(n.ch) : n.ch;
                i.icase = n.icase;
                push(i);
                break;
            }
            case Node::Kind::cls: {
                Inst i{Inst::Op::cls};
                i.class_index = n.class_index;
                push(i);
                break;
            }
            case Node::Kind::any: {
                Inst i{Inst::Op::any};
                i.dotall = n.dotall;
                push(i);
                break;
            }
            case Node::Kind::assertion: {
                Inst i{Inst::Op::assertion};
                i.assertion = n.assertion;
                push(i);
                break;
            }
            case Node::Kind::concat:
                for (const auto& c : n.children) emit_node(*c);
                break;
            case Node::Kind::alternate: {
                // split L1, next; L1: a; jmp end; next: split L2, ... ; last
                std::vector<std::size_t> jumps;
                for (std::size_t k = 0; k + 1 < n.children.size(); ++k) {
                    const std::size_t split = push({Inst::Op::split});
                    prog_.code[split].x = prog_.code.size();
                    emit_node(*n.children[k]);
                    jumps.push_back(push({Inst::Op::jmp}));
                    prog_.code[split].y = prog_.code.size();
                }
                emit_node(*n.children.back());
                for (auto j : jumps) prog_.code[j].x = prog_.code.size();
                break;
            }
            case Node::Kind::repeat: {
                const Node& body = *n.children.front();
                for (int k = 0; k < n.min; ++k) emit_node(body);
                if (n.max == -1) {
                    // L: split body, end; body; jmp L
                    const std::size_t split = push({Inst::Op::split});
                    prog_.code[split].x = prog_.code.size();
                    emit_node(body);
                    Inst j{Inst::Op::jmp};
                    j.x = split;
                    push(j);
                    prog_.code[split].y = prog_.code.size();
                } else {
                    std::vector<std::size_t> splits;
                    for (int k = n.min; k < n.max; ++k) {
                        const std::size_t split = push({Inst::Op::split});
                        prog_.code[split].x = prog_.code.size();
                        splits.push_back(split);
                        emit_node(body);
                    }
                    for (auto s : splits) prog_.code[s].y = prog_.code.size();
                }
                break;
            }
        }
    }

private:
    std::size_t push(Inst i) {
        if (prog_.code.size() >= kMaxProgram) throw RegexError("pattern too large", 0);
        prog_.code.push_back(i);
        return prog_.code.size() - 1;
    }

    Program& prog_;
};

bool check_assertion(AssertKind k, std::u32string_view text, std::size_t pos) {
    const bool at_start = pos == 0;
    const bool at_end = pos == text.size();
    switch (k) {
        case AssertKind::text_start: return at_start;
        case AssertKind::text_end: return at_end;
        case AssertKind::line_start: return at_start || text[pos - 1] == U'\n';
        case AssertKind::line_end: return at_end || text[pos] == U'\n';
        case AssertKind::word_boundary:
        case AssertKind::not_word_boundary: {
            const bool before = !at_start && is_word(text[pos - 1]);
            const bool after = !at_end && is_word(text[pos]);
            return (before != after) == (k == AssertKind::word_boundary);
        }
    }
    return false;
}

// Sparse set of program counters for one simulation step.
class ThreadList {
public:
    explicit ThreadList(std::size_t n) : dense_(n), sparse_(n) {}
    bool contains(std::size_t pc) const {
        const std::size_t i = sparse_[pc];
        return i < size_ && dense_[i] == pc;
    }
    void insert(std::size_t pc) {
        sparse_[pc] = size_;
        dense_[size_++] = pc;
    }
    void clear() { size_ = 0; }
    std::size_t size() const { return size_; }
    std::size_t operator[](std::size_t i) const { return dense_[i]; }

private:
    std::vector<std::size_t> dense_;
    std::vector<std::size_t> sparse_;
    std::size_t size_ = 0;
};

}  // namespace

Regex Regex::compile(std::string_view source) {
    auto prog = std::make_shared<Program>();
    Parser parser(utf8::decode(source), prog->classes);
    NodePtr ast = parser.parse();
    Compiler compiler(*prog);
    compiler.emit_node(*ast);
    prog->code.push_back({Inst::Op::match});
    Regex r;
    r.source_ = std::string(source);
    r.program_ = std::move(prog);
    return r;
}

std::size_t Regex::program_size() const { return program_->code.size(); }

bool Regex::search(std::string_view utf8_text) const {
    return search(std::u32string_view(utf8::decode(utf8_text)));
}

bool Regex::search(std::u32string_view text) const {
    const Program& prog = *program_;
    const std::size_t n = prog.code.size();
    ThreadList clist(n), nlist(n);
    std::vector<std::size_t> stack;

    // Follows epsilon transitions from pc at text position pos; returns true on Match.
    auto add = [&](ThreadList& list, std::size_t start_pc, std::size_t pos) {
        stack.clear();
        stack.push_back(start_pc);
        while (!stack.empty()) {
            const std::size_t pc = stack.back();
            stack.pop_back();
            if (list.contains(pc)) continue;
            list.insert(pc);
            const Inst& inst = prog.code[pc];
            switch (inst.op) {
                case Inst::Op::jmp: stack.push_back(inst.x); break;
                case Inst::Op::split:
                    stack.push_back(inst.y);
                    stack.push_back(inst.x);
                    break;
                case Inst::Op::assertion:
                    if (check_assertion(inst.assertion, text, pos)) stack.push_back(pc + 1);
                    break;
                case Inst::Op::match: return true;
                default: break;
            }
        }
        return false;
    };

    for (std::size_t pos = 0;; ++pos) {
        if (add(clist, 0, pos)) return true;
        if (pos == text.size()) return false;
        const char32_t c = text[pos];
        nlist.clear();
        for (std::size_t t = 0; t < clist.size(); ++t) {
            const Inst& inst = prog.code[clist[t]];
            bool ok = false;
            switch (inst.op) {
                case Inst::Op::ch:
                    ok = inst.icase ? (utf8::to_lower(c) == inst.ch) : (c == inst.ch);
                    break;
                case Inst::Op::cls: ok = prog.classes[inst.class_index].matches(c); break;
                case Inst::Op::any: ok = inst.dotall || c != U'\n'; break;
                default: break;
            }
            if (ok && add(nlist, clist[t] + 1, pos + 1)) return true;
        }
        std::swap(clist, nlist);
    }
}

}  // namespace cogscreen::regex
