#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace simul {

// A letter of a free group: +(i+1) is generator i, -(i+1) its inverse.
using Letter = std::int32_t;

constexpr Letter make_letter(int gen, int sign) {
    return sign >= 0 ? Letter(gen + 1) : Letter(-(gen + 1));
}
constexpr int letter_gen(Letter l) { return (l > 0 ? l : -l) - 1; }
constexpr bool letter_inverse_flag(Letter l) { return l < 0; }
// Ordering code: a < a^-1 < b < b^-1 < ...
constexpr int letter_code(Letter l) { return 2 * letter_gen(l) + (l < 0 ? 1 : 0); }

/// Reduced word in a free group. The empty word is the identity.
class Word {
  public:
    Word() = default;

    // Reduces an arbitrary letter sequence with a stack. `rank` guards the alphabet.
    static Word reduce(std::span<const Letter> raw, int rank) {
        Word w;
        w.ls_.reserve(raw.size());
        for (Letter l : raw) {
            if (l == 0 || letter_gen(l) >= rank)
                throw std::out_of_range("word letter outside alphabet of rank " + std::to_string(rank));
            if (!w.ls_.empty() && w.ls_.back() == -l)
                w.ls_.pop_back();
            else
                w.ls_.push_back(l);
        }
        return w;
    }

    static Word generator(int gen, bool inverse = false) {
        Word w;
        w.ls_.push_back(make_letter(gen, inverse ? -1 : +1));
        return w;
    }

    static Word from_letters_unchecked(std::vector<Letter> reduced) {
        Word w;
        w.ls_ = std::move(reduced);
        return w;
    }

    const std::vector<Letter>& letters() const { return ls_; }
    std::size_t length() const { return ls_.size(); }
    bool empty() const { return ls_.empty(); }

    Word inverse() const {
        Word w;
        w.ls_.reserve(ls_.size());
        for (auto it = ls_.rbegin(); it != ls_.rend(); ++it) w.ls_.push_back(-*it);
        return w;
    }

    friend Word operator*(const Word& u, const Word& v) {
        std::size_t c = seam_cancellation(u, v);
        Word w;
        w.ls_.reserve(u.ls_.size() + v.ls_.size() - 2 * c);
        w.ls_.insert(w.ls_.end(), u.ls_.begin(), u.ls_.end() - c);
        w.ls_.insert(w.ls_.end(), v.ls_.begin() + c, v.ls_.end());
        return w;
    }

    // Longest t such that the last t letters of u cancel the first t of v.
    static std::size_t seam_cancellation(const Word& u, const Word& v) {
        std::size_t m = std::min(u.ls_.size(), v.ls_.size());
        std::size_t c = 0;
        while (c < m && u.ls_[u.ls_.size() - 1 - c] == -v.ls_[c]) ++c;
        return c;
    }

    static std::size_t product_length(const Word& u, const Word& v) {
        return u.ls_.size() + v.ls_.size() - 2 * seam_cancellation(u, v);
    }
    static bool product_trivial(const Word& u, const Word& v) {
        return u.ls_.size() == v.ls_.size() && seam_cancellation(u, v) == u.ls_.size();
    }

    struct Cyclic;

    // g = u c u^-1 with |g| = 2|u| + |c| and c cyclically reduced.
    Cyclic cyclic_reduce() const;

    bool cyclically_reduced() const {
        return ls_.size() < 2 || ls_.front() != -ls_.back();
    }

    Word pow(long long n) const;

    long long exponent_sum(int gen) const {
        long long s = 0;
        for (Letter l : ls_) {
            if (letter_gen(l) == gen) s += (l > 0 ? 1 : -1);
        }
        return s;
    }

    static std::size_t common_prefix(const Word& u, const Word& v) {
        std::size_t m = std::min(u.ls_.size(), v.ls_.size());
        std::size_t c = 0;
        while (c < m && u.ls_[c] == v.ls_[c]) ++c;
        return c;
    }

    Word prefix(std::size_t n) const {
        Word w;
        w.ls_.assign(ls_.begin(), ls_.begin() + std::min(n, ls_.size()));
        return w;
    }

    // Length-lexicographic order, letters ordered a < a^-1 < b < b^-1 < ...
    static int compare(const Word& u, const Word& v) {
        if (u.ls_.size() != v.ls_.size()) return u.ls_.size() < v.ls_.size() ? -1 : 1;
        for (std::size_t i = 0; i < u.ls_.size(); ++i) {
            int cu = letter_code(u.ls_[i]), cv = letter_code(v.ls_[i]);
            if (cu != cv) return cu < cv ? -1 : 1;
        }
        return 0;
    }

    friend bool operator==(const Word& u, const Word& v) { return u.ls_ == v.ls_; }
    friend bool operator<(const Word& u, const Word& v) { return compare(u, v) < 0; }

    std::size_t hash() const {
        std::size_t h = 1469598103934665603ull;
        for (Letter l : ls_) {
            h ^= std::size_t(std::uint32_t(l));
            h *= 1099511628211ull;
        }
        return h;
    }

    // Lowercase generator, uppercase inverse: a b A -> "abA"; identity -> "1".
    std::string str(int name_offset = 0) const {
        if (ls_.empty()) return "1";
        std::string s;
        s.reserve(ls_.size());
        for (Letter l : ls_) {
            int g = letter_gen(l) + name_offset;
            if (g >= 26) throw std::runtime_error("generator index beyond single-letter names");
            s.push_back(char((l > 0 ? 'a' : 'A') + g));
        }
        return s;
    }

  private:
    std::vector<Letter> ls_;
};

struct Word::Cyclic {
    Word conjugator;  // u
    Word core;        // c, cyclically reduced
};

inline Word::Cyclic Word::cyclic_reduce() const {
    std::size_t a = 0, b = ls_.size();
    while (b - a >= 2 && ls_[a] == -ls_[b - 1]) { ++a; --b; }
    Cyclic cf;
    cf.conjugator = from_letters_unchecked({ls_.begin(), ls_.begin() + a});
    cf.core = from_letters_unchecked({ls_.begin() + a, ls_.begin() + b});
    return cf;
}

inline Word Word::pow(long long n) const {
    if (n == 0 || ls_.empty()) return Word{};
    if (n < 0) return inverse().pow(-n);
    Cyclic cf = cyclic_reduce();
    Word w;
    w.ls_.reserve(cf.conjugator.ls_.size() * 2 + cf.core.ls_.size() * std::size_t(n));
    w.ls_ = cf.conjugator.ls_;
    for (long long i = 0; i < n; ++i)
        w.ls_.insert(w.ls_.end(), cf.core.ls_.begin(), cf.core.ls_.end());
    Word ui = cf.conjugator.inverse();
    w.ls_.insert(w.ls_.end(), ui.ls_.begin(), ui.ls_.end());
    return w;
}

}  // namespace simul
