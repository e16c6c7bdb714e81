#ifndef FKIT_SRC_LEXER_HPP
#define FKIT_SRC_LEXER_HPP

// Tokenizer shared by the constraint and formula parsers.

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <string>
#include <string_view>
#include <vector>

#include <fkit/error.hpp>

namespace fkit::detail {

enum class TokenKind { Number, Ident, String, Punct, End };

struct Token {
    TokenKind kind;
    std::string text;
    double number = 0.0;
    std::size_t pos = 0;
};

inline std::vector<Token> tokenize(std::string_view src)
{
    static constexpr std::string_view two_char[] = {"<=", ">=", "==", "!=", "&&", "||", "->"};
    static constexpr std::string_view one_char = "()[],+-*/<>!&|";

    std::vector<Token> out;
    std::size_t i = 0;
    while (i < src.size()) {
        const char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (std::isdigit(static_cast<unsigned char>(c)) ||
            (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
            std::string buf(src.substr(i));
            char* end = nullptr;
            const double v = std::strtod(buf.c_str(), &end);
            const std::size_t len = static_cast<std::size_t>(end - buf.c_str());
            out.push_back({TokenKind::Number, std::string(src.substr(i, len)), v, start});
            i += len;
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < src.size()) {
                const char d = src[i];
                if (std::isalnum(static_cast<unsigned char>(d)) || d == '_') {
                    ++i;
                } else if (d == '.' && i + 1 < src.size() &&
                           (std::isalnum(static_cast<unsigned char>(src[i + 1])) || src[i + 1] == '_')) {
                    ++i;
                } else {
                    break;
                }
            }
            out.push_back({TokenKind::Ident, std::string(src.substr(start, i - start)), 0.0, start});
            continue;
        }
        if (c == '"' || c == '\'') {
            std::string s;
            ++i;
            while (i < src.size() && src[i] != c) {
                if (src[i] == '\\' && i + 1 < src.size())
                    ++i;
                s += src[i++];
            }
            if (i >= src.size())
                throw ParseError(ErrorKind::ParseError, "unterminated string literal", start);
            ++i;
            out.push_back({TokenKind::String, std::move(s), 0.0, start});
            continue;
        }
        bool matched = false;
        for (auto op : two_char) {
            if (src.substr(i, 2) == op) {
                out.push_back({TokenKind::Punct, std::string(op), 0.0, start});
                i += 2;
                matched = true;
                break;
            }
        }
        if (matched)
            continue;
        if (one_char.find(c) != std::string_view::npos) {
            out.push_back({TokenKind::Punct, std::string(1, c), 0.0, start});
            ++i;
            continue;
        }
        throw ParseError(ErrorKind::UnknownOperator, std::string("unknown symbol '") + c + "'", start);
    }
    out.push_back({TokenKind::End, "", 0.0, src.size()});
    return out;
}

class TokenCursor {
public:
    explicit TokenCursor(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    const Token& peek(std::size_t ahead = 0) const
    {
        const std::size_t k = std::min(index_ + ahead, tokens_.size() - 1);
        return tokens_[k];
    }
    const Token& next() { return tokens_[index_ < tokens_.size() - 1 ? index_++ : index_]; }

    bool at_punct(std::string_view p) const { return peek().kind == TokenKind::Punct && peek().text == p; }
    bool at_ident(std::string_view name) const { return peek().kind == TokenKind::Ident && peek().text == name; }

    bool accept(std::string_view p)
    {
        if (at_punct(p)) {
            next();
            return true;
        }
        return false;
    }

    void expect(std::string_view p)
    {
        if (!accept(p))
            fail("expected '" + std::string(p) + "'");
    }

    [[noreturn]] void fail(const std::string& what) const
    {
        const Token& t = peek();
        const std::string found = t.kind == TokenKind::End ? "end of input" : "'" + t.text + "'";
        throw ParseError(ErrorKind::ParseError, what + ", found " + found, t.pos);
    }

private:
    std::vector<Token> tokens_;
    std::size_t index_ = 0;
};

} // namespace fkit::detail

#endif
