#pragma once

#include <functional>
#include <future>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "simul/group.hpp"
#include "simul/rational.hpp"

namespace simul {

// ---- Sphere series and ball counts --------------------------------------

/// Exact sphere cardinalities s(0), s(1), ... of the word metric.
struct SphereSeries {
    GroupSpecPtr group;
    std::vector<Int> sizes;

    Int ball(std::size_t n) const {
        if (n >= sizes.size()) throw std::out_of_range("sphere series too short");
        Int b = 0;
        for (std::size_t i = 0; i <= n; ++i) b += sizes[i];
        return b;
    }
};

inline bool has_closed_form_series(const GroupSpec& g) {
    if (g.kind == GroupKind::Free) return true;
    if (g.kind == GroupKind::DirectProduct) {
        for (const auto& f : g.factors)
            if (!has_closed_form_series(*f)) return false;
        return true;
    }
    return false;
}

inline SphereSeries sphere_series(const GroupSpecPtr& group, std::size_t n_max) {
    if (!has_closed_form_series(*group))
        throw std::invalid_argument("sphere_series: closed form only for free groups and their direct products");
    SphereSeries out;
    out.group = group;
    out.sizes.assign(n_max + 1, Int(0));
    if (group->kind == GroupKind::Free) {
        long long k = group->rank;
        out.sizes[0] = 1;
        for (std::size_t n = 1; n <= n_max; ++n)
            out.sizes[n] = Int(2 * k) * int_pow(Int(2 * k - 1), n - 1);
        return out;
    }
    // direct product: coefficient-wise convolution of factor series
    std::vector<Int> acc{Int(1)};
    acc.resize(n_max + 1, Int(0));
    for (const auto& f : group->factors) {
        SphereSeries fs = sphere_series(f, n_max);
        std::vector<Int> next(n_max + 1, Int(0));
        for (std::size_t i = 0; i <= n_max; ++i) {
            if (acc[i] == 0) continue;
            for (std::size_t j = 0; i + j <= n_max; ++j) next[i + j] += acc[i] * fs.sizes[j];
        }
        acc = std::move(next);
    }
    out.sizes = std::move(acc);
    return out;
}

enum class CountMethod { Series, BFS };

/// Standard generators together with their inverses.
inline std::vector<GroupElement> standard_generators(const GroupSpecPtr& group) {
    std::vector<GroupElement> gens;
    int n = group->generator_count();
    for (int i = 0; i < n; ++i) {
        gens.push_back(GroupElement::generator(group, i, false));
        GroupElement inv = GroupElement::generator(group, i, true);
        if (!(inv == gens.back())) gens.push_back(std::move(inv));
    }
    return gens;
}

/// Breadth-first ball enumeration with normal-form dedup; the oracle path.
inline std::vector<GroupElement> bfs_ball(const GroupSpecPtr& group, int n,
                                          std::size_t budget = 50'000'000) {
    std::vector<GroupElement> ball{GroupElement::identity(group)};
    std::unordered_set<GroupElement, GroupElementHash,
                       std::equal_to<GroupElement>>
        seen{ball.begin(), ball.end()};
    auto gens = standard_generators(group);
    std::size_t lo = 0;
    for (int depth = 1; depth <= n; ++depth) {
        std::size_t hi = ball.size();
        for (std::size_t i = lo; i < hi; ++i) {
            for (const auto& s : gens) {
                GroupElement next = multiply(ball[i], s);
                if (seen.insert(next).second) {
                    if (ball.size() >= budget) throw std::length_error("bfs_ball budget exceeded");
                    ball.push_back(std::move(next));
                }
            }
        }
        lo = hi;
    }
    return ball;
}

inline Int ball_count(const GroupSpecPtr& group, std::size_t n, CountMethod method,
                      std::size_t budget = 50'000'000) {
    if (method == CountMethod::Series) return sphere_series(group, n).ball(n);
    return Int(bfs_ball(group, int(n), budget).size());
}

// ---- Deterministic enumeration ------------------------------------------

namespace detail {

inline void enumerate_free_sphere(const GroupSpecPtr& spec, int len,
                                  const std::function<void(const GroupElement&)>& fn,
                                  Letter fixed_first = 0) {
    int rank = spec->rank;
    if (len == 0) {
        if (fixed_first == 0) fn(GroupElement::identity(spec));
        return;
    }
    std::vector<Letter> cur;
    cur.reserve(len);
    // letters in code order a < a^-1 < b < b^-1 < ...
    std::vector<Letter> order;
    for (int g = 0; g < rank; ++g) {
        order.push_back(make_letter(g, +1));
        order.push_back(make_letter(g, -1));
    }
    std::function<void()> rec = [&]() {
        if (int(cur.size()) == len) {
            fn(GroupElement::from_word(spec, Word::from_letters_unchecked(cur)));
            return;
        }
        if (cur.empty() && fixed_first != 0) {
            cur.push_back(fixed_first);
            rec();
            cur.pop_back();
            return;
        }
        for (Letter l : order) {
            if (!cur.empty() && cur.back() == -l) continue;
            cur.push_back(l);
            rec();
            cur.pop_back();
        }
    };
    rec();
}

}  // namespace detail

/// Visits each sphere element exactly once in the deterministic order
/// (length, then structural lexicographic; see compare()).
inline void for_each_sphere(const GroupSpecPtr& group, int len,
                            const std::function<void(const GroupElement&)>& fn) {
    switch (group->kind) {
        case GroupKind::Free:
            detail::enumerate_free_sphere(group, len, fn);
            return;
        case GroupKind::DirectProduct: {
            // tuple-lex: coordinate 1 varies slowest
            std::function<void(std::size_t, int, std::vector<GroupElement>&)> rec =
                [&](std::size_t idx, int remaining, std::vector<GroupElement>& parts) {
                    if (idx + 1 == group->factors.size()) {
                        for_each_sphere(group->factors[idx], remaining, [&](const GroupElement& e) {
                            parts.push_back(e);
                            fn(GroupElement::from_tuple(group, parts));
                            parts.pop_back();
                        });
                        return;
                    }
                    for (int m = 0; m <= remaining; ++m) {
                        for_each_sphere(group->factors[idx], m, [&](const GroupElement& e) {
                            parts.push_back(e);
                            rec(idx + 1, remaining - m, parts);
                            parts.pop_back();
                        });
                    }
                };
            std::vector<GroupElement> parts;
            rec(0, len, parts);
            return;
        }
        case GroupKind::FreeProduct: {
            // no closed-form generator; BFS then filter on exact length
            auto ball = bfs_ball(group, len);
            std::vector<GroupElement> sphere;
            for (auto& e : ball)
                if (word_length(e) == len) sphere.push_back(std::move(e));
            std::sort(sphere.begin(), sphere.end(),
                      [](const GroupElement& a, const GroupElement& b) { return compare(a, b) < 0; });
            for (const auto& e : sphere) fn(e);
            return;
        }
    }
}

inline void for_each_ball_element(const GroupSpecPtr& group, int n,
                                  const std::function<void(const GroupElement&)>& fn) {
    if (group->kind == GroupKind::FreeProduct) {
        auto ball = bfs_ball(group, n);
        std::sort(ball.begin(), ball.end(),
                  [](const GroupElement& a, const GroupElement& b) { return compare(a, b) < 0; });
        for (const auto& e : ball) fn(e);
        return;
    }
    for (int m = 0; m <= n; ++m) for_each_sphere(group, m, fn);
}

/// Deterministic sphere partition for parallel censuses. Shard 0..count-1;
/// free groups split by first letter, products by first-coordinate length.
inline void for_each_sphere_shard(const GroupSpecPtr& group, int len, int shard_count,
                                  int shard, const std::function<void(const GroupElement&)>& fn) {
    if (shard_count <= 1) {
        if (shard == 0) for_each_sphere(group, len, fn);
        return;
    }
    switch (group->kind) {
        case GroupKind::Free: {
            if (len == 0) {
                if (shard == 0) fn(GroupElement::identity(group));
                return;
            }
            int idx = 0;
            for (int g = 0; g < group->rank; ++g) {
                for (int inv = 0; inv < 2; ++inv, ++idx) {
                    if (idx % shard_count != shard) continue;
                    detail::enumerate_free_sphere(group, len, fn, make_letter(g, inv ? -1 : +1));
                }
            }
            return;
        }
        case GroupKind::DirectProduct: {
            // partition by the first coordinate's length
            for (int m1 = 0; m1 <= len; ++m1) {
                if (m1 % shard_count != shard) continue;
                std::vector<GroupElement> parts;
                for_each_sphere(group->factors[0], m1, [&](const GroupElement& e1) {
                    parts.assign({e1});
                    std::function<void(std::size_t, int)> rec = [&](std::size_t idx, int remaining) {
                        if (idx + 1 == group->factors.size()) {
                            for_each_sphere(group->factors[idx], remaining, [&](const GroupElement& e) {
                                parts.push_back(e);
                                fn(GroupElement::from_tuple(group, parts));
                                parts.pop_back();
                            });
                            return;
                        }
                        for (int m = 0; m <= remaining; ++m) {
                            for_each_sphere(group->factors[idx], m, [&](const GroupElement& e) {
                                parts.push_back(e);
                                rec(idx + 1, remaining - m);
                                parts.pop_back();
                            });
                        }
                    };
                    rec(1, len - m1);
                });
            }
            return;
        }
        case GroupKind::FreeProduct: {
            long long i = 0;
            for_each_sphere(group, len, [&](const GroupElement& e) {
                if (i++ % shard_count == shard) fn(e);
            });
            return;
        }
    }
}

inline std::vector<GroupElement> enumerate_ball(const GroupSpecPtr& group, int n,
                                                std::size_t budget = 50'000'000) {
    std::vector<GroupElement> out;
    for_each_ball_element(group, n, [&](const GroupElement& e) {
        if (out.size() >= budget) throw std::length_error("enumerate_ball budget exceeded");
        out.push_back(e);
    });
    return out;
}

// ---- Density ---------------------------------------------------------------

/// Predicate over group elements, optionally with a closed-form hit count.
struct CensusPredicate {
    std::string label;
    std::function<bool(const GroupElement&)> fn;
    std::function<Int(std::size_t)> series_hits;  // may be empty
};

struct DensityReport {
    std::size_t n = 0;
    Int ball;
    Int hits;
    Rat ratio;
    std::string predicate;
    CountMethod method = CountMethod::BFS;
};

inline DensityReport density(const GroupSpecPtr& group, const CensusPredicate& pred,
                             std::size_t n, CountMethod method, int threads = 1) {
    DensityReport r;
    r.n = n;
    r.predicate = pred.label;
    r.method = method;
    if (method == CountMethod::Series) {
        if (!pred.series_hits)
            throw std::invalid_argument("density: predicate has no closed-form hit count");
        r.ball = ball_count(group, n, CountMethod::Series);
        r.hits = pred.series_hits(n);
    } else if (threads <= 1 || group->kind == GroupKind::FreeProduct) {
        long long hits = 0, total = 0;
        for_each_ball_element(group, int(n), [&](const GroupElement& e) {
            ++total;
            if (pred.fn(e)) ++hits;
        });
        r.ball = total;
        r.hits = hits;
    } else {
        // Shards are fixed by the partition rule, so totals are independent of
        // the worker count and of scheduling.
        std::vector<std::future<std::pair<long long, long long>>> futs;
        for (int shard = 0; shard < threads; ++shard) {
            futs.push_back(std::async(std::launch::async, [&, shard]() {
                long long hits = 0, total = 0;
                for (int m = 0; m <= int(n); ++m) {
                    for_each_sphere_shard(group, m, threads, shard, [&](const GroupElement& e) {
                        ++total;
                        if (pred.fn(e)) ++hits;
                    });
                }
                return std::pair<long long, long long>{total, hits};
            }));
        }
        long long hits = 0, total = 0;
        for (auto& f : futs) {
            auto [t, h] = f.get();
            total += t;
            hits += h;
        }
        r.ball = total;
        r.hits = hits;
    }
    if (r.hits < 0 || r.hits > r.ball) throw std::logic_error("density: hits out of range");
    r.ratio = Rat(r.hits) / Rat(r.ball);
    return r;
}

// ---- F2 x F3 growth and density audit ------------------------------------
//
// Two closed forms for the ball of F2 x F3 circulate: the cumulative
// convolution of factor *balls* (which double-counts) and the cumulative
// convolution of factor *spheres* (the true ball). The audit computes both,
// flags where they diverge, and reports the limiting non-simultaneously-
// hyperbolic fraction under each. Divergence is a first-class output, never
// suppressed.

struct AuditRow {
    std::size_t n = 0;
    Int ball_f2;                    // 2*3^n - 1
    Int ball_f3;                    // (3*5^n - 1)/2
    Rat ball_conv_closed_form;      // 45/32(5^{n+1}-1) + 3(-3^{n+1}+1) + (n+1)(2n+11)/8
    Int ball_exact;                 // sphere convolution
    std::optional<Int> ball_bfs;    // BFS verification for small n
    Int non_sh_closed;              // ball_f2 + ball_f3 - 1 = (3/2)5^n + 2*3^n - 5/2
    std::optional<Int> non_sh_exhaustive;
    Rat frac_under_closed_form;     // non_sh / ball_conv_closed_form
    Rat frac_exact;                 // non_sh / ball_exact
    bool diverges = false;
};

struct AuditReport {
    std::vector<AuditRow> rows;
    Rat limit_ball_convolution;  // limit of frac_under_closed_form
    Rat limit_exact;             // limit of frac_exact, by partial fractions
    std::optional<std::size_t> first_divergence;
};

// Residue of P(x)/((1-r0 x)(1-r1 x)(1-r2 x)) at the growth rate `rate`:
// the coefficient of rate^n in the expansion.
inline Rat leading_coefficient(const std::function<Rat(Rat)>& numerator,
                               const std::vector<long long>& rates, long long rate) {
    Rat x0 = Rat(1) / Rat(rate);
    Rat denom = 1;
    for (long long r : rates)
        if (r != rate) denom *= (1 - Rat(r) * x0);
    return numerator(x0) / denom;
}

inline AuditReport f2f3_audit(std::size_t n_max, std::size_t bfs_limit) {
    auto F2 = make_free_group(2);
    auto F3 = make_free_group(3);
    auto G = make_direct_product({F2, F3});
    SphereSeries s2 = sphere_series(F2, n_max);
    SphereSeries s3 = sphere_series(F3, n_max);
    SphereSeries sg = sphere_series(G, n_max);

    auto non_sh = [](const GroupElement& e) {
        return is_identity(e.tuple()[0]) || is_identity(e.tuple()[1]);
    };

    AuditReport rep;
    for (std::size_t n = 0; n <= n_max; ++n) {
        AuditRow row;
        row.n = n;
        row.ball_f2 = 2 * int_pow(Int(3), n) - 1;
        row.ball_f3 = (3 * int_pow(Int(5), n) - 1) / 2;
        if (row.ball_f2 != s2.ball(n) || row.ball_f3 != s3.ball(n))
            throw std::logic_error("audit: factor ball closed form disagrees with series");
        Int p5 = int_pow(Int(5), n + 1), p3 = int_pow(Int(3), n + 1);
        row.ball_conv_closed_form = Rat(45) / 32 * Rat(p5 - 1) + 3 * Rat(1 - p3) +
                                    Rat(Int(n + 1) * Int(2 * n + 11)) / 8;
        row.ball_exact = sg.ball(n);
        row.non_sh_closed = row.ball_f2 + row.ball_f3 - 1;
        if (n <= bfs_limit) {
            long long exh = 0, total = 0;
            for_each_ball_element(G, int(n), [&](const GroupElement& e) {
                ++total;
                if (non_sh(e)) ++exh;
            });
            row.ball_bfs = Int(total);
            row.non_sh_exhaustive = Int(exh);
            if (*row.ball_bfs != row.ball_exact)
                throw std::logic_error("audit: BFS ball disagrees with sphere convolution");
            if (*row.non_sh_exhaustive != row.non_sh_closed)
                throw std::logic_error("audit: exhaustive non-SH count disagrees with closed form");
        }
        row.frac_under_closed_form = Rat(row.non_sh_closed) / row.ball_conv_closed_form;
        row.frac_exact = Rat(row.non_sh_closed) / Rat(row.ball_exact);
        row.diverges = row.ball_conv_closed_form != Rat(row.ball_exact);
        if (row.diverges && !rep.first_divergence) rep.first_divergence = n;
        rep.rows.push_back(std::move(row));
    }
    // non-SH count grows like (3/2) 5^n; the stated ball closed form like
    // (225/32) 5^n; the exact ball's 5^n coefficient comes from the partial
    // fraction expansion of (1+x)^2 / ((1-x)(1-3x)(1-5x)).
    rep.limit_ball_convolution = Rat(3, 2) / Rat(225, 32);
    Rat lead_exact = leading_coefficient(
        [](Rat x) -> Rat { return (1 + x) * (1 + x); }, {1, 3, 5}, 5);
    rep.limit_exact = Rat(3, 2) / lead_exact;
    return rep;
}

}  // namespace simul

