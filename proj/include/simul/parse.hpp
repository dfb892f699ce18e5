#pragma once

#include <cctype>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "simul/action.hpp"
#include "simul/group.hpp"
#include "simul/quasimorphism.hpp"

namespace simul {

struct ParseError : std::runtime_error {
    std::size_t position;
    ParseError(const std::string& what, std::size_t pos)
        : std::runtime_error(what + " (at column " + std::to_string(pos + 1) + ")"), position(pos) {}
};

namespace detail {

class Cursor {
  public:
    explicit Cursor(std::string_view s) : s_(s) {}

    void skip_ws() {
        while (pos_ < s_.size() && std::isspace((unsigned char)s_[pos_])) ++pos_;
    }
    bool done() {
        skip_ws();
        return pos_ >= s_.size();
    }
    char peek() {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }
    bool try_consume(char c) {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        if (!try_consume(c)) throw ParseError(std::string("expected '") + c + "'", pos_);
    }
    std::string ident() {
        skip_ws();
        std::size_t start = pos_;
        while (pos_ < s_.size() &&
               (std::isalnum((unsigned char)s_[pos_]) || s_[pos_] == '-' || s_[pos_] == '_'))
            ++pos_;
        if (start == pos_) throw ParseError("expected identifier", pos_);
        std::string out(s_.substr(start, pos_ - start));
        for (char& c : out) c = char(std::tolower((unsigned char)c));
        return out;
    }
    long long integer() {
        skip_ws();
        std::size_t start = pos_;
        if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) ++pos_;
        while (pos_ < s_.size() && std::isdigit((unsigned char)s_[pos_])) ++pos_;
        if (start == pos_) throw ParseError("expected integer", pos_);
        return std::stoll(std::string(s_.substr(start, pos_ - start)));
    }
    Rat rational() {
        Rat num(integer());
        if (try_consume('/')) {
            long long den = integer();
            if (den == 0) throw ParseError("zero denominator", pos_);
            num /= den;
        }
        return num;
    }
    std::size_t pos() const { return pos_; }

  private:
    std::string_view s_;
    std::size_t pos_ = 0;
};

inline GroupSpecPtr parse_group(Cursor& cur) {
    std::string kw = cur.ident();
    if (kw == "free") {
        cur.expect('(');
        long long r = cur.integer();
        cur.expect(')');
        return make_free_group(int(r));
    }
    if (kw == "product") {
        cur.expect('(');
        std::vector<GroupSpecPtr> factors;
        factors.push_back(parse_group(cur));
        while (cur.try_consume(',')) factors.push_back(parse_group(cur));
        cur.expect(')');
        return make_direct_product(std::move(factors));
    }
    if (kw == "freeprod") {
        cur.expect('(');
        std::vector<int> orders;
        do {
            std::string z = cur.ident();
            if (z != "z") throw ParseError("expected z or z/k", cur.pos());
            if (cur.try_consume('/'))
                orders.push_back(int(cur.integer()));
            else
                orders.push_back(0);
        } while (cur.try_consume(','));
        cur.expect(')');
        return make_free_product(std::move(orders));
    }
    throw ParseError("unknown group kind '" + kw + "'", cur.pos());
}

inline std::vector<Rat> parse_weights(Cursor& cur, const GroupSpecPtr& group) {
    std::vector<Rat> w(group->generator_count(), Rat(0));
    if (cur.peek() != ')') {
        do {
            std::string name = cur.ident();
            if (name.size() != 1 || name[0] < 'a' || name[0] > 'z')
                throw ParseError("generator name must be a single letter", cur.pos());
            int idx = name[0] - 'a';
            if (idx >= group->generator_count())
                throw ParseError("generator '" + name + "' outside the group", cur.pos());
            cur.expect('=');
            w[idx] = cur.rational();
        } while (cur.try_consume(','));
    }
    return w;
}

inline ActionSpace parse_action(Cursor& cur, const GroupSpecPtr& group) {
    std::string kw = cur.ident();
    if (kw == "cayley") {
        int factor = -1;
        if (cur.try_consume('(')) {
            if (cur.peek() != ')') {
                std::string key = cur.ident();
                if (key != "factor") throw ParseError("expected factor=", cur.pos());
                cur.expect('=');
                factor = int(cur.integer()) - 1;
                if (factor < 0) throw ParseError("factor is 1-based", cur.pos());
            }
            cur.expect(')');
        }
        return ActionSpace::cayley_tree(group, factor);
    }
    if (kw == "bass-serre" || kw == "bassserre") return ActionSpace::bass_serre(group);
    if (kw == "line") {
        cur.expect('(');
        auto w = parse_weights(cur, group);
        cur.expect(')');
        return ActionSpace::line(group, std::move(w));
    }
    throw ParseError("unknown action kind '" + kw + "'", cur.pos());
}

inline Word parse_free_word(Cursor& cur, int rank) {
    std::vector<Letter> raw;
    while (true) {
        char c = cur.peek();
        if (c == '1' && raw.empty()) {
            cur.try_consume('1');
            break;
        }
        if (std::isalpha((unsigned char)c)) {
            cur.try_consume(c);
            bool inv = std::isupper((unsigned char)c);
            int idx = (inv ? c - 'A' : c - 'a');
            if (idx >= rank) throw ParseError("letter outside the free group", cur.pos());
            raw.push_back(make_letter(idx, inv ? -1 : +1));
        } else {
            break;
        }
    }
    return Word::reduce(raw, rank);
}

inline GroupElement parse_element(Cursor& cur, const GroupSpecPtr& group) {
    switch (group->kind) {
        case GroupKind::Free:
            return GroupElement::from_word(group, parse_free_word(cur, group->rank));
        case GroupKind::DirectProduct: {
            cur.expect('(');
            GroupElement::Tuple t;
            t.push_back(parse_element(cur, group->factors[0]));
            for (std::size_t i = 1; i < group->factors.size(); ++i) {
                cur.expect(',');
                t.push_back(parse_element(cur, group->factors[i]));
            }
            cur.expect(')');
            return GroupElement::from_tuple(group, std::move(t));
        }
        case GroupKind::FreeProduct: {
            GroupElement::Syllables s;
            while (true) {
                char c = cur.peek();
                if (c == '1' && s.empty()) {
                    cur.try_consume('1');
                    break;
                }
                if (!std::isalpha((unsigned char)c)) break;
                cur.try_consume(c);
                bool inv = std::isupper((unsigned char)c);
                int idx = inv ? c - 'A' : c - 'a';
                if (idx >= int(group->cyclic_orders.size()))
                    throw ParseError("letter outside the free product", cur.pos());
                s.push_back({idx, inv ? -1 : +1});
            }
            return GroupElement::from_syllables(group, std::move(s));
        }
    }
    throw std::logic_error("unreachable");
}

inline QmEvaluator parse_qm(Cursor& cur, const GroupSpecPtr& group) {
    std::string kw = cur.ident();
    if (kw == "hom") {
        cur.expect('(');
        auto w = parse_weights(cur, group);
        cur.expect(')');
        return QmEvaluator::homomorphism(group, std::move(w));
    }
    if (kw == "count") {
        cur.expect('(');
        std::string key = cur.ident();
        if (key != "w") throw ParseError("expected w=", cur.pos());
        cur.expect('=');
        if (group->kind != GroupKind::Free)
            throw ParseError("count(...) requires a free group", cur.pos());
        Word w = parse_free_word(cur, group->rank);
        cur.expect(')');
        return QmEvaluator::counting(group, std::move(w));
    }
    if (kw == "busemann") {
        cur.expect('(');
        ActionSpace line = parse_action(cur, group);
        cur.expect(')');
        return QmEvaluator::busemann(std::move(line));
    }
    throw ParseError("unknown evaluator kind '" + kw + "'", cur.pos());
}

}  // namespace detail

inline GroupSpecPtr parse_group_spec(const std::string& text) {
    detail::Cursor cur(text);
    GroupSpecPtr g = detail::parse_group(cur);
    if (!cur.done()) throw ParseError("trailing input after group spec", cur.pos());
    return g;
}

inline ActionSpace parse_action_spec(const std::string& text, const GroupSpecPtr& group) {
    detail::Cursor cur(text);
    ActionSpace a = detail::parse_action(cur, group);
    if (!cur.done()) throw ParseError("trailing input after action spec", cur.pos());
    return a;
}

/// Semicolon-separated list of action specs.
inline std::vector<ActionSpace> parse_action_list(const std::string& text,
                                                  const GroupSpecPtr& group) {
    std::vector<ActionSpace> out;
    detail::Cursor cur(text);
    if (cur.done()) return out;
    out.push_back(detail::parse_action(cur, group));
    while (cur.try_consume(';')) out.push_back(detail::parse_action(cur, group));
    if (!cur.done()) throw ParseError("trailing input after action list", cur.pos());
    return out;
}

inline QmEvaluator parse_qm_spec(const std::string& text, const GroupSpecPtr& group) {
    detail::Cursor cur(text);
    QmEvaluator q = detail::parse_qm(cur, group);
    if (!cur.done()) throw ParseError("trailing input after evaluator spec", cur.pos());
    return q;
}

inline std::vector<QmEvaluator> parse_qm_list(const std::string& text, const GroupSpecPtr& group) {
    std::vector<QmEvaluator> out;
    detail::Cursor cur(text);
    if (cur.done()) return out;
    out.push_back(detail::parse_qm(cur, group));
    while (cur.try_consume(';')) out.push_back(detail::parse_qm(cur, group));
    if (!cur.done()) throw ParseError("trailing input after evaluator list", cur.pos());
    return out;
}

inline GroupElement parse_element(const std::string& text, const GroupSpecPtr& group) {
    detail::Cursor cur(text);
    GroupElement e = detail::parse_element(cur, group);
    if (!cur.done()) throw ParseError("trailing input after element", cur.pos());
    return e;
}

}  // namespace simul
