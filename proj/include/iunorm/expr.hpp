#pragma once

// Micro-grammar for the fit command's abscissa expressions: the variables n
// and m, numeric constants, ln and log2 (with or without parentheses), '*',
// '+' and grouping.  Example: "n*(1+ln m)".

#include <cctype>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

namespace iunorm {

class Expr {
public:
    using Fn = std::function<double(double, double)>; // (n, m)

    static Expr parse(const std::string& text) {
        Parser p{text, 0};
        Expr e;
        e.fn_ = p.parse_sum();
        p.skip_ws();
        if (p.pos != text.size())
            throw std::invalid_argument("unexpected trailing input in expression: " + text);
        e.text_ = text;
        return e;
    }

    double operator()(double n, double m) const { return fn_(n, m); }
    const std::string& text() const { return text_; }

private:
    Fn fn_;
    std::string text_;

    struct Parser {
        const std::string& s;
        std::size_t pos;

        void skip_ws() {
            while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        }

        bool consume(char c) {
            skip_ws();
            if (pos < s.size() && s[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        bool consume_word(const char* w) {
            skip_ws();
            const std::size_t len = std::char_traits<char>::length(w);
            if (s.compare(pos, len, w) == 0) {
                const std::size_t after = pos + len;
                if (after < s.size() && (std::isalnum(static_cast<unsigned char>(s[after])) ||
                                         s[after] == '_'))
                    return false;
                pos = after;
                return true;
            }
            return false;
        }

        Fn parse_sum() {
            Fn lhs = parse_product();
            for (;;) {
                if (consume('+')) {
                    Fn rhs = parse_product();
                    lhs = [lhs, rhs](double n, double m) { return lhs(n, m) + rhs(n, m); };
                } else {
                    return lhs;
                }
            }
        }

        Fn parse_product() {
            Fn lhs = parse_factor();
            for (;;) {
                if (consume('*')) {
                    Fn rhs = parse_factor();
                    lhs = [lhs, rhs](double n, double m) { return lhs(n, m) * rhs(n, m); };
                } else {
                    return lhs;
                }
            }
        }

        Fn parse_factor() {
            skip_ws();
            if (consume('(')) {
                Fn inner = parse_sum();
                if (!consume(')')) throw std::invalid_argument("missing ')' in expression");
                return inner;
            }
            if (consume_word("ln")) {
                Fn inner = parse_factor();
                return [inner](double n, double m) { return std::log(inner(n, m)); };
            }
            if (consume_word("log2")) {
                Fn inner = parse_factor();
                return [inner](double n, double m) { return std::log2(inner(n, m)); };
            }
            if (consume_word("n")) return [](double n, double) { return n; };
            if (consume_word("m")) return [](double, double m) { return m; };
            skip_ws();
            const std::size_t start = pos;
            while (pos < s.size() &&
                   (std::isdigit(static_cast<unsigned char>(s[pos])) || s[pos] == '.' ||
                    s[pos] == 'e' || s[pos] == 'E' ||
                    ((s[pos] == '+' || s[pos] == '-') && pos > start &&
                     (s[pos - 1] == 'e' || s[pos - 1] == 'E'))))
                ++pos;
            if (pos == start) throw std::invalid_argument("expected a factor in expression");
            const double value = std::stod(s.substr(start, pos - start));
            return [value](double, double) { return value; };
        }
    };
};

} // namespace iunorm
