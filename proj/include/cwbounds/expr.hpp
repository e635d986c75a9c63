#pragma once

#include <cctype>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cwb {

/// Scalar expression over nonnegative variables t1..tn.
///
/// Grammar: infix + - * / with the usual precedence, unary minus, parentheses,
/// numeric literals, the constant `pi`, variables `t<k>`, and calls
///   sin(e) cos(e) exp(e) abs(e) min(a,b) max(a,b)
///   piecewise(c, a, b)        -> a where c <= 0, b elsewhere
///   clamp(e, lo, hi, thr)     -> e evaluated with every variable saturated at
///                                thr, then clamped into [lo, hi]
/// `clamp` exists to express the running-max envelope of a rising-then-falling
/// branch (e.g. sin saturating at its peak) in closed form.
class BoundExpr {
public:
    enum class Kind { Const, Var, Add, Sub, Mul, Div, Neg, Call };

    struct SyntaxError : std::runtime_error {
        SyntaxError(const std::string& msg, std::size_t offset)
            : std::runtime_error(msg + " at offset " + std::to_string(offset)),
              offset(offset) {}
        std::size_t offset;
    };

    static BoundExpr constant(double v) {
        BoundExpr e;
        e.kind_ = Kind::Const;
        e.value_ = v;
        return e;
    }
    static BoundExpr variable(int index) {
        BoundExpr e;
        e.kind_ = Kind::Var;
        e.var_ = index;
        return e;
    }

    static BoundExpr parse(const std::string& text) {
        Parser p{text, 0};
        BoundExpr e = p.parse_sum();
        p.skip_ws();
        if (p.pos != text.size())
            throw SyntaxError("unexpected trailing input", p.pos);
        return e;
    }

    double eval(const Eigen::VectorXd& theta) const {
        switch (kind_) {
            case Kind::Const: return value_;
            case Kind::Var:
                if (var_ >= theta.size())
                    throw std::invalid_argument("BoundExpr: variable t" +
                                                std::to_string(var_ + 1) +
                                                " out of range");
                return theta(var_);
            case Kind::Add: return args_[0].eval(theta) + args_[1].eval(theta);
            case Kind::Sub: return args_[0].eval(theta) - args_[1].eval(theta);
            case Kind::Mul: return args_[0].eval(theta) * args_[1].eval(theta);
            case Kind::Div: return args_[0].eval(theta) / args_[1].eval(theta);
            case Kind::Neg: return -args_[0].eval(theta);
            case Kind::Call: return eval_call(theta);
        }
        throw std::logic_error("BoundExpr: bad node");
    }

    /// Highest variable index referenced, plus one (0 for constants).
    int arity() const {
        switch (kind_) {
            case Kind::Const: return 0;
            case Kind::Var: return var_ + 1;
            default: {
                int a = 0;
                for (const auto& c : args_) a = std::max(a, c.arity());
                return a;
            }
        }
    }

    std::string str() const {
        switch (kind_) {
            case Kind::Const: {
                std::string s = std::to_string(value_);
                return s;
            }
            case Kind::Var: return "t" + std::to_string(var_ + 1);
            case Kind::Add: return "(" + args_[0].str() + " + " + args_[1].str() + ")";
            case Kind::Sub: return "(" + args_[0].str() + " - " + args_[1].str() + ")";
            case Kind::Mul: return "(" + args_[0].str() + " * " + args_[1].str() + ")";
            case Kind::Div: return "(" + args_[0].str() + " / " + args_[1].str() + ")";
            case Kind::Neg: return "(-" + args_[0].str() + ")";
            case Kind::Call: {
                std::string s = fn_ + "(";
                for (std::size_t i = 0; i < args_.size(); ++i) {
                    if (i) s += ", ";
                    s += args_[i].str();
                }
                return s + ")";
            }
        }
        return {};
    }

    Kind kind() const { return kind_; }
    const std::string& fn() const { return fn_; }

private:
    double eval_call(const Eigen::VectorXd& theta) const {
        if (fn_ == "sin") return std::sin(args_[0].eval(theta));
        if (fn_ == "cos") return std::cos(args_[0].eval(theta));
        if (fn_ == "exp") return std::exp(args_[0].eval(theta));
        if (fn_ == "abs") return std::abs(args_[0].eval(theta));
        if (fn_ == "min") return std::min(args_[0].eval(theta), args_[1].eval(theta));
        if (fn_ == "max") return std::max(args_[0].eval(theta), args_[1].eval(theta));
        if (fn_ == "piecewise")
            return args_[0].eval(theta) <= 0.0 ? args_[1].eval(theta)
                                               : args_[2].eval(theta);
        if (fn_ == "clamp") {
            const double thr = args_[3].eval(theta);
            Eigen::VectorXd sat = theta.cwiseMin(thr);
            const double v = args_[0].eval(sat);
            return std::min(std::max(v, args_[1].eval(theta)), args_[2].eval(theta));
        }
        throw std::logic_error("BoundExpr: unknown function " + fn_);
    }

    struct Parser {
        const std::string& text;
        std::size_t pos;

        void skip_ws() {
            while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
                ++pos;
        }
        bool eat(char c) {
            skip_ws();
            if (pos < text.size() && text[pos] == c) {
                ++pos;
                return true;
            }
            return false;
        }

        BoundExpr parse_sum() {
            BoundExpr lhs = parse_product();
            for (;;) {
                if (eat('+')) lhs = binary(Kind::Add, std::move(lhs), parse_product());
                else if (eat('-')) lhs = binary(Kind::Sub, std::move(lhs), parse_product());
                else return lhs;
            }
        }

        BoundExpr parse_product() {
            BoundExpr lhs = parse_unary();
            for (;;) {
                if (eat('*')) lhs = binary(Kind::Mul, std::move(lhs), parse_unary());
                else if (eat('/')) lhs = binary(Kind::Div, std::move(lhs), parse_unary());
                else return lhs;
            }
        }

        BoundExpr parse_unary() {
            if (eat('-')) {
                BoundExpr e;
                e.kind_ = Kind::Neg;
                e.args_.push_back(parse_unary());
                return e;
            }
            return parse_atom();
        }

        BoundExpr parse_atom() {
            skip_ws();
            if (pos >= text.size())
                throw SyntaxError("unexpected end of input", pos);
            const char c = text[pos];
            if (c == '(') {
                ++pos;
                BoundExpr e = parse_sum();
                if (!eat(')')) throw SyntaxError("expected ')'", pos);
                return e;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
                return parse_number();
            if (std::isalpha(static_cast<unsigned char>(c)))
                return parse_ident();
            throw SyntaxError(std::string("unexpected character '") + c + "'", pos);
        }

        BoundExpr parse_number() {
            std::size_t start = pos;
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(text.substr(start), &used);
            } catch (const std::exception&) {
                throw SyntaxError("malformed number", start);
            }
            pos = start + used;
            return BoundExpr::constant(v);
        }

        BoundExpr parse_ident() {
            std::size_t start = pos;
            while (pos < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
                ++pos;
            const std::string name = text.substr(start, pos - start);
            if (name == "pi") return BoundExpr::constant(3.14159265358979323846);
            if (name.size() >= 2 && name[0] == 't' &&
                std::isdigit(static_cast<unsigned char>(name[1]))) {
                const int idx = std::stoi(name.substr(1));
                if (idx < 1) throw SyntaxError("variable index must be >= 1", start);
                return BoundExpr::variable(idx - 1);
            }
            static const struct { const char* fn; std::size_t argc; } kFns[] = {
                {"sin", 1}, {"cos", 1}, {"exp", 1}, {"abs", 1},
                {"min", 2}, {"max", 2}, {"piecewise", 3}, {"clamp", 4},
            };
            for (const auto& f : kFns) {
                if (name != f.fn) continue;
                if (!eat('(')) throw SyntaxError("expected '(' after " + name, pos);
                BoundExpr e;
                e.kind_ = Kind::Call;
                e.fn_ = name;
                for (std::size_t i = 0; i < f.argc; ++i) {
                    if (i && !eat(',')) throw SyntaxError("expected ','", pos);
                    e.args_.push_back(parse_sum());
                }
                if (!eat(')')) throw SyntaxError("expected ')'", pos);
                return e;
            }
            throw SyntaxError("unknown identifier '" + name + "'", start);
        }

        static BoundExpr binary(Kind k, BoundExpr lhs, BoundExpr rhs) {
            BoundExpr e;
            e.kind_ = k;
            e.args_.push_back(std::move(lhs));
            e.args_.push_back(std::move(rhs));
            return e;
        }
    };

    Kind kind_ = Kind::Const;
    double value_ = 0.0;
    int var_ = 0;
    std::string fn_;
    std::vector<BoundExpr> args_;
};

} // namespace cwb
