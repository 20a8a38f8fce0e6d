#include "btmc/syntax.hpp"

#include <cctype>

namespace btmc::syntax {

namespace {

constexpr int kMaxDepth = 512;

bool is_delim(unsigned char c)
{
    return c == '(' || c == ')' || c == ';' || std::isspace(c);
}

bool is_ident_start(unsigned char c)
{
    return std::isalpha(c) || c == '_' || c >= 0x80;
}

bool is_ident_char(unsigned char c)
{
    return std::isalnum(c) || c == '_' || c == '-' || c >= 0x80;
}

bool looks_numeric(std::string_view s)
{
    std::size_t i = 0;
    if (i < s.size() && (s[i] == '-' || s[i] == '+')) ++i;
    std::size_t digits = 0;
    bool dot = false;
    for (; i < s.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(s[i]))) {
            ++digits;
        } else if (s[i] == '.' && !dot) {
            dot = true;
        } else {
            return false;
        }
    }
    return digits > 0;
}

std::string display(std::string_view s)
{
    std::string out;
    for (unsigned char c : s) {
        if (c < 0x20 || c == 0x7f) {
            static const char* hex = "0123456789abcdef";
            out += "\\x";
            out += hex[c >> 4];
            out += hex[c & 15];
        } else {
            out += static_cast<char>(c);
        }
    }
    return out;
}

class Reader {
public:
    explicit Reader(std::string_view text) : text_(text) {}

    Datum read_document()
    {
        skip_blank();
        if (at_end()) throw ParseError(here(), "empty document");
        if (peek() != '(') throw ParseError(here(), "document must start with '('");
        Datum d = read(0);
        skip_blank();
        if (!at_end()) throw ParseError(here(), "unexpected text after the document");
        return d;
    }

private:
    std::string_view text_;
    std::size_t i_ = 0;
    int line_ = 1;
    int col_ = 1;

    bool at_end() const { return i_ >= text_.size(); }
    unsigned char peek() const { return static_cast<unsigned char>(text_[i_]); }
    SourcePos here() const { return {line_, col_}; }

    void advance()
    {
        if (text_[i_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++i_;
    }

    void skip_blank()
    {
        while (!at_end()) {
            unsigned char c = peek();
            if (c == ';') {
                while (!at_end() && peek() != '\n') advance();
            } else if (std::isspace(c)) {
                advance();
            } else {
                return;
            }
        }
    }

    Datum read(int depth)
    {
        if (depth > kMaxDepth) throw ParseError(here(), "nesting too deep");
        skip_blank();
        if (at_end()) throw ParseError(here(), "unexpected end of input");
        SourcePos pos = here();
        unsigned char c = peek();
        if (c == ')') throw ParseError(pos, "unbalanced ')'");
        if (c == '(') {
            advance();
            Datum list;
            list.kind = Datum::Kind::List;
            list.pos = pos;
            for (;;) {
                skip_blank();
                if (at_end()) throw ParseError(pos, "unbalanced '(': list is never closed");
                if (peek() == ')') {
                    advance();
                    return list;
                }
                list.items.push_back(read(depth + 1));
            }
        }
        return read_atom(pos);
    }

    Datum read_atom(SourcePos pos)
    {
        std::size_t start = i_;
        while (!at_end() && !is_delim(peek())) {
            unsigned char c = peek();
            if (c < 0x20 || c == 0x7f) throw ParseError(here(), "unexpected control character");
            advance();
        }
        std::string_view tok = text_.substr(start, i_ - start);
        Datum d;
        d.pos = pos;
        classify(tok, d);
        return d;
    }

    void classify(std::string_view tok, Datum& d) const
    {
        if (tok.size() > 1 && tok[0] == ':' && is_ident_start(static_cast<unsigned char>(tok[1]))) {
            for (unsigned char c : tok.substr(1))
                if (!is_ident_char(c)) throw ParseError(d.pos, "malformed keyword '" + display(tok) + "'");
            d.kind = Datum::Kind::Keyword;
            d.text = std::string(tok.substr(1));
            return;
        }
        if (looks_numeric(tok)) {
            d.kind = Datum::Kind::Number;
            d.text = std::string(tok);
            return;
        }
        auto dot = tok.find('.');
        if (dot != std::string_view::npos) {
            std::string_view head = tok.substr(0, dot);
            std::string_view tail = tok.substr(dot + 1);
            bool ident = !head.empty() && is_ident_start(static_cast<unsigned char>(head[0]));
            for (unsigned char c : head) ident = ident && is_ident_char(c);
            if (ident && tail == "rstatus") {
                d.kind = Datum::Kind::StatusRef;
                d.text = std::string(head);
                return;
            }
            throw ParseError(d.pos, "dotted name '" + display(tok) + "' (only <node>.rstatus is allowed)");
        }
        d.kind = Datum::Kind::Symbol;
        d.text = std::string(tok);
    }
};

}  // namespace

ParseError::ParseError(SourcePos pos, const std::string& message)
    : std::runtime_error(std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " + message),
      pos_(pos),
      message_(message)
{
}

bool Datum::operator==(const Datum& other) const
{
    return kind == other.kind && text == other.text && items == other.items;
}

Datum read_datum(std::string_view text)
{
    return Reader(text).read_document();
}

std::string print_datum(const Datum& d)
{
    switch (d.kind) {
    case Datum::Kind::List: {
        std::string out = "(";
        for (std::size_t i = 0; i < d.items.size(); ++i) {
            if (i) out += ' ';
            out += print_datum(d.items[i]);
        }
        return out + ")";
    }
    case Datum::Kind::Keyword: return ":" + d.text;
    case Datum::Kind::StatusRef: return d.text + ".rstatus";
    default: return d.text;
    }
}

bool iequals(std::string_view a, std::string_view b)
{
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (std::tolower(static_cast<unsigned char>(a[i])) != std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    return true;
}

}  // namespace btmc::syntax
