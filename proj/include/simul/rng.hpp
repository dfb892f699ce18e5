#pragma once

#include <cstdint>
#include <random>

#include "simul/group.hpp"

namespace simul {

/// Deterministic source for sampled checks. mt19937_64 output is fully
/// specified, so seeded runs replicate across platforms.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next() { return eng_(); }

    long long uniform(long long lo, long long hi) {  // inclusive
        return std::uniform_int_distribution<long long>(lo, hi)(eng_);
    }

    Word random_reduced_word(int rank, int len) {
        std::vector<Letter> ls;
        ls.reserve(len);
        for (int i = 0; i < len; ++i) {
            while (true) {
                int g = int(uniform(0, rank - 1));
                Letter l = make_letter(g, uniform(0, 1) ? -1 : +1);
                if (!ls.empty() && ls.back() == -l) continue;
                ls.push_back(l);
                break;
            }
        }
        return Word::from_letters_unchecked(std::move(ls));
    }

    GroupElement random_element(const GroupSpecPtr& spec, int max_len) {
        switch (spec->kind) {
            case GroupKind::Free: {
                int len = int(uniform(0, max_len));
                return GroupElement::from_word(spec, random_reduced_word(spec->rank, len));
            }
            case GroupKind::DirectProduct: {
                GroupElement::Tuple t;
                int remaining = max_len;
                for (std::size_t i = 0; i < spec->factors.size(); ++i) {
                    int take = i + 1 == spec->factors.size() ? remaining : int(uniform(0, remaining));
                    t.push_back(random_element(spec->factors[i], take));
                    remaining -= int(word_length(t.back()));
                }
                return GroupElement::from_tuple(spec, std::move(t));
            }
            case GroupKind::FreeProduct: {
                GroupElement::Syllables s;
                int budget = int(uniform(0, max_len));
                int prev = -1;
                while (budget > 0) {
                    int f = int(uniform(0, (long long)spec->cyclic_orders.size() - 1));
                    if (f == prev) continue;
                    int k = spec->cyclic_orders[f];
                    long long max_exp = k == 0 ? budget : std::min<long long>(budget, k / 2);
                    if (max_exp == 0) break;
                    long long e = uniform(1, max_exp);
                    if (k == 0 && uniform(0, 1)) e = -e;
                    s.push_back({f, e});
                    budget -= int(e < 0 ? -e : e);
                    prev = f;
                }
                return GroupElement::from_syllables(spec, std::move(s));
            }
        }
        throw std::logic_error("unreachable");
    }

    GroupElement random_nontrivial(const GroupSpecPtr& spec, int max_len) {
        while (true) {
            GroupElement g = random_element(spec, max_len);
            if (!is_identity(g)) return g;
        }
    }

  private:
    std::mt19937_64 eng_;
};

}  // namespace simul
