#pragma once

#include <cstdint>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "simul/word.hpp"

namespace simul {

enum class GroupKind { Free, DirectProduct, FreeProduct };

struct GroupSpec;
using GroupSpecPtr = std::shared_ptr<const GroupSpec>;

/// Declared group: free, direct product, or free product of cyclic factors.
/// The generating set is always the standard one.
struct GroupSpec {
    GroupKind kind = GroupKind::Free;
    int rank = 0;                          // Free
    std::vector<GroupSpecPtr> factors;     // DirectProduct
    std::vector<int> cyclic_orders;        // FreeProduct: 0 = Z, k >= 2 = Z/k

    // Number of standard generators (recursive).
    int generator_count() const {
        switch (kind) {
            case GroupKind::Free: return rank;
            case GroupKind::DirectProduct: {
                int n = 0;
                for (const auto& f : factors) n += f->generator_count();
                return n;
            }
            case GroupKind::FreeProduct: return int(cyclic_orders.size());
        }
        return 0;
    }

    // Offset of factor i's generators in the global naming sequence a, b, c, ...
    int generator_offset(int factor) const {
        if (kind != GroupKind::DirectProduct) return 0;
        int off = 0;
        for (int i = 0; i < factor; ++i) off += factors[i]->generator_count();
        return off;
    }

    bool same_as(const GroupSpec& o) const {
        if (kind != o.kind) return false;
        switch (kind) {
            case GroupKind::Free: return rank == o.rank;
            case GroupKind::DirectProduct: {
                if (factors.size() != o.factors.size()) return false;
                for (std::size_t i = 0; i < factors.size(); ++i)
                    if (!factors[i]->same_as(*o.factors[i])) return false;
                return true;
            }
            case GroupKind::FreeProduct: return cyclic_orders == o.cyclic_orders;
        }
        return false;
    }

    std::string str() const {
        std::ostringstream os;
        switch (kind) {
            case GroupKind::Free: os << "free(" << rank << ")"; break;
            case GroupKind::DirectProduct: {
                os << "product(";
                for (std::size_t i = 0; i < factors.size(); ++i) {
                    if (i) os << ",";
                    os << factors[i]->str();
                }
                os << ")";
                break;
            }
            case GroupKind::FreeProduct: {
                os << "freeprod(";
                for (std::size_t i = 0; i < cyclic_orders.size(); ++i) {
                    if (i) os << ",";
                    if (cyclic_orders[i] == 0) os << "z";
                    else os << "z/" << cyclic_orders[i];
                }
                os << ")";
                break;
            }
        }
        return os.str();
    }
};

inline GroupSpecPtr make_free_group(int rank) {
    if (rank < 1) throw std::invalid_argument("free group rank must be >= 1");
    auto s = std::make_shared<GroupSpec>();
    s->kind = GroupKind::Free;
    s->rank = rank;
    return s;
}

inline GroupSpecPtr make_direct_product(std::vector<GroupSpecPtr> factors) {
    if (factors.size() < 2) throw std::invalid_argument("direct product needs >= 2 factors");
    auto s = std::make_shared<GroupSpec>();
    s->kind = GroupKind::DirectProduct;
    s->factors = std::move(factors);
    return s;
}

inline GroupSpecPtr make_free_product(std::vector<int> cyclic_orders) {
    if (cyclic_orders.size() < 2) throw std::invalid_argument("free product needs >= 2 factors");
    for (int k : cyclic_orders)
        if (k != 0 && k < 2) throw std::invalid_argument("cyclic order must be 0 (infinite) or >= 2");
    auto s = std::make_shared<GroupSpec>();
    s->kind = GroupKind::FreeProduct;
    s->cyclic_orders = std::move(cyclic_orders);
    return s;
}

/// One maximal factor block of a free-product normal form.
struct Syllable {
    int factor = 0;
    long long exp = 0;  // for Z/k factors stored in [1, k-1]
    friend bool operator==(const Syllable&, const Syllable&) = default;
};

class GroupElement;
bool is_identity(const GroupElement& g);
GroupElement multiply(const GroupElement& g, const GroupElement& h);
GroupElement inverse(const GroupElement& g);

/// Element of a declared group, always held in normal form:
/// reduced word / componentwise normal tuple / alternating nontrivial syllables.
class GroupElement {
  public:
    using Tuple = std::vector<GroupElement>;
    using Syllables = std::vector<Syllable>;

    GroupElement() = default;

    static GroupElement identity(GroupSpecPtr spec) {
        GroupElement g;
        g.spec_ = std::move(spec);
        switch (g.spec_->kind) {
            case GroupKind::Free: g.payload_ = Word{}; break;
            case GroupKind::DirectProduct: {
                Tuple t;
                for (const auto& f : g.spec_->factors) t.push_back(identity(f));
                g.payload_ = std::move(t);
                break;
            }
            case GroupKind::FreeProduct: g.payload_ = Syllables{}; break;
        }
        return g;
    }

    static GroupElement from_word(GroupSpecPtr spec, Word w) {
        if (spec->kind != GroupKind::Free) throw std::invalid_argument("from_word: group is not free");
        for (Letter l : w.letters())
            if (letter_gen(l) >= spec->rank) throw std::out_of_range("letter outside free group rank");
        GroupElement g;
        g.spec_ = std::move(spec);
        g.payload_ = std::move(w);
        return g;
    }

    static GroupElement from_tuple(GroupSpecPtr spec, Tuple t) {
        if (spec->kind != GroupKind::DirectProduct || t.size() != spec->factors.size())
            throw std::invalid_argument("from_tuple: bad shape");
        GroupElement g;
        g.spec_ = std::move(spec);
        g.payload_ = std::move(t);
        return g;
    }

    static GroupElement from_syllables(GroupSpecPtr spec, Syllables raw) {
        if (spec->kind != GroupKind::FreeProduct) throw std::invalid_argument("from_syllables: bad kind");
        GroupElement g;
        g.spec_ = spec;
        g.payload_ = normalize_syllables(*spec, std::move(raw));
        return g;
    }

    // The global generator with index `gen` (or its inverse).
    static GroupElement generator(GroupSpecPtr spec, int gen, bool inv = false) {
        switch (spec->kind) {
            case GroupKind::Free:
                if (gen >= spec->rank) throw std::out_of_range("generator index");
                return from_word(spec, Word::generator(gen, inv));
            case GroupKind::DirectProduct: {
                GroupElement g = identity(spec);
                int off = 0;
                for (std::size_t i = 0; i < spec->factors.size(); ++i) {
                    int n = spec->factors[i]->generator_count();
                    if (gen < off + n) {
                        std::get<Tuple>(g.payload_)[i] = generator(spec->factors[i], gen - off, inv);
                        return g;
                    }
                    off += n;
                }
                throw std::out_of_range("generator index");
            }
            case GroupKind::FreeProduct: {
                if (gen >= int(spec->cyclic_orders.size())) throw std::out_of_range("generator index");
                Syllables s{{gen, inv ? -1 : 1}};
                return from_syllables(spec, std::move(s));
            }
        }
        throw std::logic_error("unreachable");
    }

    const GroupSpecPtr& spec() const { return spec_; }
    const Word& word() const { return std::get<Word>(payload_); }
    const Tuple& tuple() const { return std::get<Tuple>(payload_); }
    const Syllables& syllables() const { return std::get<Syllables>(payload_); }

    friend bool operator==(const GroupElement& a, const GroupElement& b) {
        return a.payload_ == b.payload_;
    }

    std::size_t hash() const {
        std::size_t h = 0xcbf29ce484222325ull;
        auto mix = [&h](std::size_t v) {
            h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        };
        if (auto* w = std::get_if<Word>(&payload_)) {
            mix(w->hash());
        } else if (auto* t = std::get_if<Tuple>(&payload_)) {
            for (const auto& c : *t) mix(c.hash());
        } else {
            for (const auto& s : std::get<Syllables>(payload_)) {
                mix(std::size_t(s.factor) * 0x9e3779b97f4a7c15ull);
                mix(std::size_t(s.exp));
            }
        }
        return h;
    }

    static Syllables normalize_syllables(const GroupSpec& spec, Syllables raw) {
        Syllables out;
        for (const Syllable& s : raw) {
            if (s.factor < 0 || s.factor >= int(spec.cyclic_orders.size()))
                throw std::out_of_range("syllable factor index");
            long long e = s.exp;
            int k = spec.cyclic_orders[s.factor];
            if (k > 0) e = ((e % k) + k) % k;
            if (e == 0) continue;
            if (!out.empty() && out.back().factor == s.factor) {
                long long m = out.back().exp + e;
                if (k > 0) m = ((m % k) + k) % k;
                if (m == 0) out.pop_back();
                else out.back().exp = m;
            } else {
                out.push_back({s.factor, e});
            }
        }
        return out;
    }

    std::variant<Word, Tuple, Syllables>& payload() { return payload_; }
    const std::variant<Word, Tuple, Syllables>& payload() const { return payload_; }

  private:
    GroupSpecPtr spec_;
    std::variant<Word, Tuple, Syllables> payload_;
};

inline void require_same_spec(const GroupElement& a, const GroupElement& b) {
    if (!a.spec() || !b.spec() || !a.spec()->same_as(*b.spec()))
        throw std::invalid_argument("group spec mismatch");
}

inline bool is_identity(const GroupElement& g) {
    switch (g.spec()->kind) {
        case GroupKind::Free: return g.word().empty();
        case GroupKind::DirectProduct: {
            for (const auto& c : g.tuple())
                if (!is_identity(c)) return false;
            return true;
        }
        case GroupKind::FreeProduct: return g.syllables().empty();
    }
    return false;
}

inline GroupElement multiply(const GroupElement& a, const GroupElement& b) {
    require_same_spec(a, b);
    switch (a.spec()->kind) {
        case GroupKind::Free:
            return GroupElement::from_word(a.spec(), a.word() * b.word());
        case GroupKind::DirectProduct: {
            GroupElement::Tuple t;
            t.reserve(a.tuple().size());
            for (std::size_t i = 0; i < a.tuple().size(); ++i)
                t.push_back(multiply(a.tuple()[i], b.tuple()[i]));
            return GroupElement::from_tuple(a.spec(), std::move(t));
        }
        case GroupKind::FreeProduct: {
            GroupElement::Syllables s = a.syllables();
            s.insert(s.end(), b.syllables().begin(), b.syllables().end());
            return GroupElement::from_syllables(a.spec(), std::move(s));
        }
    }
    throw std::logic_error("unreachable");
}

inline GroupElement inverse(const GroupElement& g) {
    switch (g.spec()->kind) {
        case GroupKind::Free:
            return GroupElement::from_word(g.spec(), g.word().inverse());
        case GroupKind::DirectProduct: {
            GroupElement::Tuple t;
            t.reserve(g.tuple().size());
            for (const auto& c : g.tuple()) t.push_back(inverse(c));
            return GroupElement::from_tuple(g.spec(), std::move(t));
        }
        case GroupKind::FreeProduct: {
            GroupElement::Syllables s;
            s.reserve(g.syllables().size());
            for (auto it = g.syllables().rbegin(); it != g.syllables().rend(); ++it)
                s.push_back({it->factor, -it->exp});
            return GroupElement::from_syllables(g.spec(), std::move(s));
        }
    }
    throw std::logic_error("unreachable");
}

/// g = conjugator * core * conjugator^-1, core cyclically reduced.
struct CyclicForm {
    GroupElement conjugator;
    GroupElement core;
};

inline CyclicForm cyclic_reduce(const GroupElement& g) {
    switch (g.spec()->kind) {
        case GroupKind::Free: {
            auto cf = g.word().cyclic_reduce();
            return {GroupElement::from_word(g.spec(), cf.conjugator),
                    GroupElement::from_word(g.spec(), cf.core)};
        }
        case GroupKind::DirectProduct: {
            GroupElement::Tuple us, cs;
            for (const auto& c : g.tuple()) {
                CyclicForm f = cyclic_reduce(c);
                us.push_back(f.conjugator);
                cs.push_back(f.core);
            }
            return {GroupElement::from_tuple(g.spec(), std::move(us)),
                    GroupElement::from_tuple(g.spec(), std::move(cs))};
        }
        case GroupKind::FreeProduct: {
            GroupElement::Syllables core = g.syllables();
            GroupElement::Syllables conj;
            while (core.size() >= 2 && core.front().factor == core.back().factor) {
                Syllable s = core.front();
                conj.push_back(s);
                core.erase(core.begin());
                // core.back() and s merge after conjugation by s^-1
                int k = g.spec()->cyclic_orders[s.factor];
                long long m = core.back().exp + s.exp;
                if (k > 0) m = ((m % k) + k) % k;
                if (m == 0) core.pop_back();
                else core.back().exp = m;
            }
            return {GroupElement::from_syllables(g.spec(), std::move(conj)),
                    GroupElement::from_syllables(g.spec(), std::move(core))};
        }
    }
    throw std::logic_error("unreachable");
}

inline long long syllable_cost(const GroupSpec& spec, const Syllable& s) {
    int k = spec.cyclic_orders[s.factor];
    long long e = s.exp;
    if (k > 0) {
        long long m = ((e % k) + k) % k;
        return std::min(m, k - m);
    }
    return e < 0 ? -e : e;
}

/// Graph distance from the identity in the Cayley graph of the standard generators.
inline long long word_length(const GroupElement& g) {
    switch (g.spec()->kind) {
        case GroupKind::Free: return (long long)g.word().length();
        case GroupKind::DirectProduct: {
            long long n = 0;
            for (const auto& c : g.tuple()) n += word_length(c);
            return n;
        }
        case GroupKind::FreeProduct: {
            long long n = 0;
            for (const auto& s : g.syllables()) n += syllable_cost(*g.spec(), s);
            return n;
        }
    }
    return 0;
}

inline bool commutes(const GroupElement& a, const GroupElement& b) {
    require_same_spec(a, b);
    return multiply(a, b) == multiply(b, a);
}

inline GroupElement pow(const GroupElement& g, long long n) {
    if (n == 0) return GroupElement::identity(g.spec());
    if (n < 0) return pow(inverse(g), -n);
    switch (g.spec()->kind) {
        case GroupKind::Free:
            return GroupElement::from_word(g.spec(), g.word().pow(n));
        case GroupKind::DirectProduct: {
            GroupElement::Tuple t;
            for (const auto& c : g.tuple()) t.push_back(pow(c, n));
            return GroupElement::from_tuple(g.spec(), std::move(t));
        }
        case GroupKind::FreeProduct: {
            CyclicForm cf = cyclic_reduce(g);
            GroupElement::Syllables s = cf.conjugator.syllables();
            const auto& core = cf.core.syllables();
            for (long long i = 0; i < n; ++i) s.insert(s.end(), core.begin(), core.end());
            GroupElement ci = inverse(cf.conjugator);
            s.insert(s.end(), ci.syllables().begin(), ci.syllables().end());
            return GroupElement::from_syllables(g.spec(), std::move(s));
        }
    }
    throw std::logic_error("unreachable");
}

inline GroupElement conjugate(const GroupElement& x, const GroupElement& g) {
    // x g x^-1
    return multiply(multiply(x, g), inverse(x));
}

// Deterministic total order: word length first, then structural lex.
inline int compare(const GroupElement& a, const GroupElement& b) {
    long long la = word_length(a), lb = word_length(b);
    if (la != lb) return la < lb ? -1 : 1;
    switch (a.spec()->kind) {
        case GroupKind::Free: return Word::compare(a.word(), b.word());
        case GroupKind::DirectProduct: {
            for (std::size_t i = 0; i < a.tuple().size(); ++i) {
                int c = compare(a.tuple()[i], b.tuple()[i]);
                if (c != 0) return c;
            }
            return 0;
        }
        case GroupKind::FreeProduct: {
            const auto& sa = a.syllables();
            const auto& sb = b.syllables();
            if (sa.size() != sb.size()) return sa.size() < sb.size() ? -1 : 1;
            for (std::size_t i = 0; i < sa.size(); ++i) {
                if (sa[i].factor != sb[i].factor) return sa[i].factor < sb[i].factor ? -1 : 1;
                // shorter spelling first, positive direction breaking ties
                long long ca = syllable_cost(*a.spec(), sa[i]), cb = syllable_cost(*a.spec(), sb[i]);
                if (ca != cb) return ca < cb ? -1 : 1;
                if (sa[i].exp != sb[i].exp) return sa[i].exp > sb[i].exp ? -1 : 1;
            }
            return 0;
        }
    }
    return 0;
}

// Exponent sum of the global generator `gen` (for torsion generators this is
// only defined modulo the order; callers weight those by zero).
inline long long exponent_sum(const GroupElement& g, int gen) {
    switch (g.spec()->kind) {
        case GroupKind::Free: return g.word().exponent_sum(gen);
        case GroupKind::DirectProduct: {
            int off = 0;
            for (std::size_t i = 0; i < g.tuple().size(); ++i) {
                int n = g.spec()->factors[i]->generator_count();
                if (gen < off + n) return exponent_sum(g.tuple()[i], gen - off);
                off += n;
            }
            return 0;
        }
        case GroupKind::FreeProduct: {
            long long s = 0;
            for (const auto& syl : g.syllables())
                if (syl.factor == gen) s += syl.exp;
            return s;
        }
    }
    return 0;
}

inline std::string to_string(const GroupElement& g) {
    switch (g.spec()->kind) {
        case GroupKind::Free: return g.word().str();
        case GroupKind::DirectProduct: {
            std::string s = "(";
            int off = 0;
            for (std::size_t i = 0; i < g.tuple().size(); ++i) {
                if (i) s += ",";
                const GroupElement& c = g.tuple()[i];
                if (c.spec()->kind == GroupKind::Free)
                    s += c.word().str(off);
                else
                    s += to_string(c);
                off += c.spec()->generator_count();
            }
            s += ")";
            return s;
        }
        case GroupKind::FreeProduct: {
            if (g.syllables().empty()) return "1";
            std::string s;
            for (const auto& syl : g.syllables()) {
                int k = g.spec()->cyclic_orders[syl.factor];
                long long e = syl.exp;
                if (k > 0 && e > k / 2) e -= k;  // shortest spelling
                char base = char((e > 0 ? 'a' : 'A') + syl.factor);
                for (long long i = 0; i < (e < 0 ? -e : e); ++i) s.push_back(base);
            }
            return s;
        }
    }
    return "?";
}

struct GroupElementHash {
    std::size_t operator()(const GroupElement& g) const { return g.hash(); }
};

}  // namespace simul
