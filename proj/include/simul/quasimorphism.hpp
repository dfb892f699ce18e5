#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "simul/action.hpp"
#include "simul/census.hpp"
#include "simul/contracting.hpp"
#include "simul/rng.hpp"

namespace simul {

enum class QmKind { Homomorphism, HomogenizedCounting, BusemannLine };

/// Homogeneous quasimorphism with a declared defect upper bound.
/// Homomorphism and Busemann-line evaluators are exact homomorphisms (defect
/// 0); homogenized counting evaluators carry a self-certified bound.
class QmEvaluator {
  public:
    static QmEvaluator homomorphism(GroupSpecPtr group, std::vector<Rat> weights) {
        QmEvaluator q;
        q.kind_ = QmKind::Homomorphism;
        q.group_ = group;
        weights.resize(group->generator_count(), Rat(0));
        q.weights_ = std::move(weights);
        if (group->kind == GroupKind::FreeProduct) {
            for (std::size_t i = 0; i < group->cyclic_orders.size(); ++i)
                if (group->cyclic_orders[i] > 0 && q.weights_[i] != 0)
                    throw std::invalid_argument("homomorphism: torsion generator must have weight 0");
        }
        q.defect_ = 0;
        std::ostringstream os;
        os << "hom(";
        bool first = true;
        for (std::size_t i = 0; i < q.weights_.size(); ++i) {
            if (q.weights_[i] == 0) continue;
            if (!first) os << ",";
            os << char('a' + i) << "=" << rat_str(q.weights_[i]);
            first = false;
        }
        os << ")";
        q.label_ = os.str();
        return q;
    }

    /// Counting quasimorphism homogenized on cyclic words: signed occurrences
    /// of the pattern per period of the bi-infinite core word. The defect
    /// bound comes from an exhaustive scan over all pairs in a ball, doubled
    /// as a safety factor; the scan radius is part of the declaration.
    static QmEvaluator counting(GroupSpecPtr group, Word pattern, int scan_radius = 5) {
        if (group->kind != GroupKind::Free)
            throw std::invalid_argument("counting quasimorphism: free groups only");
        if (pattern.empty()) throw std::invalid_argument("counting quasimorphism: empty pattern");
        QmEvaluator q;
        q.kind_ = QmKind::HomogenizedCounting;
        q.group_ = group;
        q.pattern_ = std::move(pattern);
        q.label_ = "count(w=" + q.pattern_.str() + ")";
        q.defect_ = 2 * counting_defect_scan(group, q.pattern_, scan_radius);
        return q;
    }

    static QmEvaluator busemann(ActionSpace line) {
        if (line.kind != SpaceKind::Line)
            throw std::invalid_argument("busemann evaluator: line actions only");
        QmEvaluator q;
        q.kind_ = QmKind::BusemannLine;
        q.group_ = line.group;
        q.line_ = std::move(line);
        q.defect_ = 0;
        q.label_ = "busemann(" + q.line_->str() + ")";
        return q;
    }

    QmKind kind() const { return kind_; }
    const GroupSpecPtr& group() const { return group_; }
    const Rat& defect_bound() const { return defect_; }
    const std::string& label() const { return label_; }
    const std::optional<ActionSpace>& line() const { return line_; }

    Rat operator()(const GroupElement& g) const { return evaluate_impl(g); }

    // Signed occurrences of `pattern` per period in the bi-infinite word
    // core^infinity; exact homogeneity comes from counting on the cyclic word.
    static long long cyclic_occurrences(const Word& core, const Word& pattern) {
        const auto& c = core.letters();
        const auto& w = pattern.letters();
        if (c.empty()) return 0;
        long long count = 0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            bool hit = true;
            for (std::size_t j = 0; j < w.size(); ++j) {
                if (c[(i + j) % c.size()] != w[j]) {
                    hit = false;
                    break;
                }
            }
            if (hit) ++count;
        }
        return count;
    }

    static Rat counting_defect_scan(const GroupSpecPtr& group, const Word& pattern, int radius);

  private:
    Rat evaluate_impl(const GroupElement& g) const {
        if (!g.spec()->same_as(*group_)) throw std::invalid_argument("evaluator: group mismatch");
        switch (kind_) {
            case QmKind::Homomorphism: {
                Rat v = 0;
                for (std::size_t i = 0; i < weights_.size(); ++i)
                    if (weights_[i] != 0) v += weights_[i] * Rat(exponent_sum(g, int(i)));
                return v;
            }
            case QmKind::BusemannLine:
                return line_->homomorphism_value(g);
            case QmKind::HomogenizedCounting: {
                Word core = g.word().cyclic_reduce().core;
                if (core.empty()) return 0;
                long long plus = cyclic_occurrences(core, pattern_);
                long long minus = cyclic_occurrences(core, pattern_.inverse());
                return Rat(plus - minus);
            }
        }
        throw std::logic_error("unreachable");
    }

    QmKind kind_ = QmKind::Homomorphism;
    GroupSpecPtr group_;
    std::vector<Rat> weights_;
    Word pattern_;
    std::optional<ActionSpace> line_;
    Rat defect_;
    std::string label_;
};

inline Rat evaluate(const QmEvaluator& q, const GroupElement& g) { return q(g); }

inline Rat QmEvaluator::counting_defect_scan(const GroupSpecPtr& group, const Word& pattern,
                                             int radius) {
    static std::mutex mu;
    static std::map<std::string, Rat> cache;
    std::string key = std::to_string(group->rank) + ":" + pattern.str() + ":" + std::to_string(radius);
    {
        std::lock_guard<std::mutex> lk(mu);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    auto beta = [&](const Word& w) {
        Word core = w.cyclic_reduce().core;
        return cyclic_occurrences(core, pattern) - cyclic_occurrences(core, pattern.inverse());
    };
    std::vector<Word> ball;
    for_each_ball_element(group, radius, [&](const GroupElement& e) { ball.push_back(e.word()); });
    std::vector<long long> values(ball.size());
    for (std::size_t i = 0; i < ball.size(); ++i) values[i] = beta(ball[i]);
    long long worst = 0;
    for (std::size_t i = 0; i < ball.size(); ++i) {
        for (std::size_t j = 0; j < ball.size(); ++j) {
            long long d = beta(ball[i] * ball[j]) - values[i] - values[j];
            if (d < 0) d = -d;
            if (d > worst) worst = d;
        }
    }
    Rat out(worst);
    std::lock_guard<std::mutex> lk(mu);
    cache[key] = out;
    return out;
}

/// Max sampled |beta(gh) - beta(g) - beta(h)|; must stay within the declared bound.
inline Rat defect_sample(const QmEvaluator& q, std::size_t pairs, std::uint64_t seed) {
    Rng rng(seed);
    Rat worst = 0;
    for (std::size_t i = 0; i < pairs; ++i) {
        GroupElement g = rng.random_element(q.group(), 12);
        GroupElement h = rng.random_element(q.group(), 12);
        Rat d = rat_abs(q(multiply(g, h)) - q(g) - q(h));
        if (d > worst) worst = d;
    }
    if (worst > q.defect_bound())
        throw DiagnosticError("defect_sample: sampled defect " + rat_str(worst) +
                              " exceeds declared bound " + rat_str(q.defect_bound()) + " for " +
                              q.label());
    return worst;
}

inline bool homogeneity_check(const QmEvaluator& q, const GroupElement& g, int n_max) {
    Rat base = q(g);
    for (int n = -n_max; n <= n_max; ++n) {
        if (q(pow(g, n)) != Rat(n) * base) return false;
    }
    return true;
}

struct NonvanishingSearchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// First ball element (deterministic order) with beta != 0.
inline GroupElement first_nonvanishing(const QmEvaluator& q, int search_radius) {
    std::optional<GroupElement> found;
    for (int n = 1; n <= search_radius && !found; ++n) {
        for_each_sphere(q.group(), n, [&](const GroupElement& e) {
            if (!found && q(e) != 0) found = e;
        });
    }
    if (!found)
        throw NonvanishingSearchError("quasimorphism " + q.label() + " vanishes on the ball of radius " +
                                      std::to_string(search_radius));
    return *found;
}

inline GroupElement combine_rec(const std::vector<QmEvaluator>& qms, int search_radius,
                                const Rat& delta) {
    if (qms.size() == 1) return first_nonvanishing(qms[0], search_radius);
    std::vector<QmEvaluator> head(qms.begin(), qms.end() - 1);
    std::vector<QmEvaluator> tail(qms.begin() + 1, qms.end());
    GroupElement g = combine_rec(head, search_radius, delta);
    // WLOG step with an early return when the inductive element already works.
    if (qms.back()(g) != 0) return g;
    GroupElement h = combine_rec(tail, search_radius, delta);
    if (qms.front()(h) != 0) return h;
    // g vanishes on the last evaluator, h on the first; combine powers.
    long long p = 1;
    while (!(rat_abs(Rat(p) * qms.front()(g)) > 2 * delta)) ++p;
    GroupElement gp = pow(g, p);
    std::vector<Rat> gp_vals;
    for (const auto& q : qms) gp_vals.push_back(q(gp));
    long long qq = 1;
    auto q_ok = [&](long long e) {
        if (!(rat_abs(Rat(e) * qms.back()(h)) > 2 * delta)) return false;
        for (std::size_t i = 1; i + 1 < qms.size(); ++i)
            if (!(rat_abs(Rat(e) * qms[i](h)) > rat_abs(gp_vals[i]) + 2 * delta)) return false;
        return true;
    };
    while (!q_ok(qq)) ++qq;
    return multiply(gp, pow(h, qq));
}

}  // namespace detail

inline Rat max_defect(const std::vector<QmEvaluator>& qms) {
    Rat d = 0;
    for (const auto& q : qms) d = std::max(d, q.defect_bound());
    return d;
}

/// Element with beta_i(g) != 0 for every i, built by combining powers of the
/// inductively obtained elements; the result is verified by direct evaluation.
inline GroupElement combine_nonvanishing(const std::vector<QmEvaluator>& qms, int search_radius) {
    if (qms.empty()) throw std::invalid_argument("combine_nonvanishing: no evaluators");
    for (const auto& q : qms) detail::first_nonvanishing(q, search_radius);  // precondition check
    GroupElement g = detail::combine_rec(qms, search_radius, max_defect(qms));
    for (const auto& q : qms)
        if (q(g) == 0)
            throw DiagnosticError("combine_nonvanishing: output vanishes on " + q.label());
    return g;
}

/// Smallest power g^k clearing every |beta_i(f_j)| + Delta; then g^k avoids
/// every zero set A_i and every coset A_i f_j.
inline GroupElement avoid_cosets(const std::vector<QmEvaluator>& qms, const GroupElement& g,
                                 const std::vector<GroupElement>& F) {
    Rat delta = max_defect(qms);
    std::vector<Rat> bounds;
    for (const auto& q : qms) {
        if (q(g) == 0) throw std::invalid_argument("avoid_cosets: beta(g) vanishes for " + q.label());
        Rat m = 0;
        for (const auto& f : F) m = std::max(m, rat_abs(q(f)));
        bounds.push_back(m + delta);
    }
    long long k = 1;
    auto ok = [&](long long e) {
        for (std::size_t i = 0; i < qms.size(); ++i)
            if (!(rat_abs(Rat(e) * qms[i](g)) > bounds[i])) return false;
        return true;
    };
    while (!ok(k)) ++k;
    GroupElement gk = pow(g, k);
    // direct membership checks, decidable for the supported evaluator kinds
    for (const auto& q : qms) {
        if (q(gk) == 0) throw DiagnosticError("avoid_cosets: g^k landed in a zero set");
        for (const auto& f : F)
            if (q(multiply(gk, inverse(f))) == 0)
                throw DiagnosticError("avoid_cosets: g^k landed in a coset A_i f_j");
    }
    return gk;
}

/// F = {h^k, h^{2k}, ..., h^{(l+1)k}} with k|beta_i(h)| > 2 Delta: for every g
/// some g h^{jk} has all beta_i nonzero, by pigeonhole over the l+1 powers.
inline std::vector<GroupElement> lineal_focal_extension_set(const std::vector<QmEvaluator>& qms,
                                                            int search_radius) {
    if (qms.empty()) throw std::invalid_argument("lineal_focal_extension_set: no evaluators");
    GroupElement h = combine_nonvanishing(qms, search_radius);
    Rat delta = max_defect(qms);
    long long k = 1;
    auto ok = [&](long long e) {
        for (const auto& q : qms)
            if (!(rat_abs(Rat(e) * q(h)) > 2 * delta)) return false;
        return true;
    };
    while (!ok(k)) ++k;
    std::vector<GroupElement> F;
    for (std::size_t j = 1; j <= qms.size() + 1; ++j) F.push_back(pow(h, k * (long long)j));
    return F;
}

}  // namespace simul
