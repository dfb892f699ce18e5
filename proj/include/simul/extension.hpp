#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "simul/construct.hpp"

namespace simul {

/// Finite set F such that every g in the group admits f in F with g f in the
/// target class. Built as union over ladder powers r of f_1^{j_r} * F'.
struct ExtensionSet {
    enum class Target { SC, SH };
    Target target = Target::SC;
    std::vector<GroupElement> F;            // full set, r-major then base order
    std::vector<GroupElement> base_powers;  // F'
    std::vector<long long> ladder;          // j_0 = 0 < j_1 < ...
    long long max_word_length = 0;          // M = max |f|_S over F
    Rat D;
    int general_block = 0;   // number of tree spaces the ladder runs over
    long long window = 1;    // power window for the SH variant
    std::vector<std::string> ladder_inequalities;
};

struct ExtensionVerification {
    int radius = 0;
    long long elements_checked = 0;
    long long min_valid_per_element = -1;
    bool claim_checked = true;
    bool pass = false;
};

namespace detail {

// Ladder exponents j_0 = 0 < j_1 < ... < j_count with
// d(o_k, f1^{j_r} o_k) > 2D + j_{r-1} L_k on every space.
inline std::vector<long long> build_ladder(const std::vector<ActionSpace>& spaces,
                                           const GroupElement& f1, const Rat& D, int count,
                                           std::vector<std::string>* log) {
    std::vector<Rat> L;
    for (const auto& space : spaces) L.push_back(orbit_distance(space, f1));
    std::vector<long long> ladder{0};
    for (int r = 1; r <= count; ++r) {
        long long j = ladder.back() + 1;
        while (true) {
            bool ok = true;
            for (std::size_t k = 0; k < spaces.size() && ok; ++k)
                ok = orbit_distance(spaces[k], pow(f1, j)) > 2 * D + Rat(ladder.back()) * L[k];
            if (ok) break;
            ++j;
        }
        if (log) {
            for (std::size_t k = 0; k < spaces.size(); ++k) {
                std::ostringstream os;
                os << "d(o_" << k + 1 << ", f1^" << j << " o) = "
                   << rat_str(orbit_distance(spaces[k], pow(f1, j))) << " > 2D + " << ladder.back()
                   << "*L_" << k + 1 << " = " << rat_str(2 * D + Rat(ladder.back()) * L[k]);
                log->push_back(os.str());
            }
        }
        ladder.push_back(j);
    }
    return ladder;
}

// Interval pigeonhole: the index r of an empty column of the partition
// I_{k,0} = [0, D], I_{k,r} = (D + j_{r-1} L_k, D + j_r L_k], I_{k,last} open.
inline int empty_ladder_column(const std::vector<ActionSpace>& spaces,
                               const std::vector<long long>& ladder,
                               const std::vector<Rat>& L, const Rat& D,
                               const std::vector<Rat>& dists) {
    std::size_t cols = ladder.size();  // r = 0..cols-1
    std::vector<bool> occupied(cols, false);
    for (std::size_t k = 0; k < spaces.size(); ++k) {
        Rat d = dists[k];
        std::size_t r;
        if (d <= D) {
            r = 0;
        } else {
            r = cols - 1;
            for (std::size_t c = 1; c + 1 < cols; ++c) {
                if (d <= D + Rat(ladder[c]) * L[k]) {
                    r = c;
                    break;
                }
            }
        }
        occupied[r] = true;
    }
    for (std::size_t r = 0; r < cols; ++r)
        if (!occupied[r]) return int(r);
    throw std::logic_error("ladder pigeonhole: no empty column with more columns than rows");
}

}  // namespace detail

/// Builds the SC extension set for the listed tree spaces, then (for a
/// positive radius) verifies the extension property exhaustively on the ball
/// and checks the interval-partition claim for every element.
inline std::pair<ExtensionSet, ExtensionVerification> sc_extension_set(
    const std::vector<ActionSpace>& spaces, int verify_radius, std::size_t trial_budget = 2000,
    std::uint64_t seed = 1) {
    int l = int(spaces.size());
    long long s = 2 * l + 2;
    std::vector<GroupElement> fam = independent_sc_family(spaces, std::size_t(s), trial_budget, seed);
    CalibrationResult cal = calibrate_extension_constant(spaces, fam, trial_budget, seed);
    Rat D = cal.D;

    ExtensionSet ext;
    ext.target = ExtensionSet::Target::SC;
    ext.D = D;
    ext.general_block = l;
    ext.window = 1;
    for (const auto& h : fam) {
        long long n = 1;
        while (true) {
            bool ok = true;
            for (const auto& space : spaces) ok = ok && orbit_distance(space, pow(h, n)) >= 2 * D;
            if (ok) break;
            ++n;
        }
        ext.base_powers.push_back(pow(h, n));
    }
    ext.ladder = detail::build_ladder(spaces, ext.base_powers[0], D, l, &ext.ladder_inequalities);
    for (long long j : ext.ladder) {
        GroupElement head = pow(ext.base_powers[0], j);
        for (const auto& f : ext.base_powers) ext.F.push_back(multiply(head, f));
    }
    for (const auto& f : ext.F) ext.max_word_length = std::max(ext.max_word_length, word_length(f));

    ExtensionVerification ver;
    ver.radius = verify_radius;
    if (verify_radius <= 0) return {ext, ver};

    std::vector<Rat> L;
    for (const auto& space : spaces) L.push_back(orbit_distance(space, ext.base_powers[0]));
    std::vector<GroupElement> heads;  // f1^{j_r}
    for (long long j : ext.ladder) heads.push_back(pow(ext.base_powers[0], j));

    long long min_valid = -1;
    long long checked = 0;
    for_each_ball_element(spaces.front().group, verify_radius, [&](const GroupElement& g) {
        ++checked;
        std::vector<Rat> dists;
        for (const auto& space : spaces) dists.push_back(orbit_distance(space, g));
        int r = detail::empty_ladder_column(spaces, ext.ladder, L, D, dists);
        GroupElement h = multiply(g, heads[r]);
        for (const auto& space : spaces) {
            if (!(orbit_distance(space, h) > D))
                throw DiagnosticError("extension claim failed: d(o, g f1^{j_r} o) <= D for g = " +
                                      to_string(g));
        }
        long long valid = 0;
        for (const auto& f : ext.base_powers) {
            bool ok = true;
            for (const auto& space : spaces) ok = ok && product_hyperbolic(space, h, f);
            if (ok) ++valid;
        }
        if (valid < (long long)ext.base_powers.size() - 2 * l)
            throw DiagnosticError("extension sweep guarantee failed for g = " + to_string(g));
        if (valid == 0) throw DiagnosticError("no extension for g = " + to_string(g));
        if (min_valid < 0 || valid < min_valid) min_valid = valid;
    });
    ver.elements_checked = checked;
    ver.min_valid_per_element = min_valid;
    ver.claim_checked = true;
    ver.pass = true;
    return {ext, ver};
}

// ---- Simultaneously hyperbolic elements -----------------------------------

struct ShCertificate {
    std::string mode;  // "lineal-focal", "general-pure", "general-mixed"
    GroupElement element;
    std::vector<std::pair<std::string, Rat>> per_space_translation;
    std::vector<std::pair<std::string, Rat>> per_evaluator_value;
    std::string notes;
    bool verified = false;
};

/// Splits declared actions into the general-type block and the lineal tail
/// realized by Busemann evaluators. Non-orientable lineal declarations are
/// rejected; focal trees enter through user-declared evaluators.
inline void validate_mixed_inputs(const std::vector<ActionSpace>& spaces,
                                  const std::vector<QmEvaluator>& qms) {
    for (const auto& space : spaces) {
        ActionType t = action_type(space);
        if (t.kind == ActionTypeKind::Elliptic)
            throw std::invalid_argument("elliptic action declared: " + space.str());
        if (t.kind == ActionTypeKind::Lineal && !t.orientable)
            throw std::invalid_argument(
                "non-orientable lineal action: declare an orientable cover instead: " + space.str());
    }
    (void)qms;
}

inline std::pair<GroupElement, ShCertificate> find_simul_hyperbolic(
    const std::vector<ActionSpace>& spaces, const std::vector<QmEvaluator>& qms,
    int search_radius = 6, std::size_t trial_budget = 2000, std::uint64_t seed = 1) {
    validate_mixed_inputs(spaces, qms);
    ShCertificate cert;

    // split: general-type spaces form the block; lineal tree/line actions are
    // handled through their Busemann evaluators
    std::vector<ActionSpace> block;
    std::vector<QmEvaluator> evals = qms;
    for (const auto& space : spaces) {
        ActionType t = action_type(space);
        if (t.kind == ActionTypeKind::GeneralType) {
            block.push_back(space);
        } else if (space.kind == SpaceKind::Line) {
            evals.push_back(QmEvaluator::busemann(space));
        } else {
            // lineal tree action (rank-1 Cayley tree): its Busemann
            // quasimorphism is the exponent-sum homomorphism of the factor
            std::vector<Rat> w(space.group->generator_count(), Rat(0));
            int off = space.factor >= 0 ? space.group->generator_offset(space.factor) : 0;
            w[off] = 1;
            evals.push_back(QmEvaluator::homomorphism(space.group, std::move(w)));
        }
    }

    GroupElement out;
    if (block.empty()) {
        cert.mode = "lineal-focal";
        out = combine_nonvanishing(evals, search_radius);
    } else if (evals.empty()) {
        cert.mode = "general-pure";
        // SH = SC on the supported block spaces
        std::vector<GroupElement> famF, famT;
        if (block.size() >= 2) {
            long long s = 2 * (long long)block.size() + 2;
            std::vector<ActionSpace> front(block.begin(), block.end() - 1);
            std::vector<ActionSpace> back(block.begin() + 1, block.end());
            famF = independent_sc_family(front, std::size_t(4 * s), trial_budget, seed);
            famT = independent_sc_family(back, std::size_t(4 * s), trial_budget, seed + 17);
        }
        auto [g, sc_cert] = find_simul_contracting(block, famF, famT, trial_budget, seed);
        cert.notes = "case " + sc_cert.case_taken;
        out = g;
    } else {
        cert.mode = "general-mixed";
        auto [ext, ver] = sc_extension_set(block, 0, trial_budget, seed);
        GroupElement g_nv = combine_nonvanishing(evals, search_radius);
        std::vector<GroupElement> f_inverses;
        for (const auto& f : ext.F) f_inverses.push_back(inverse(f));
        GroupElement h = avoid_cosets(evals, g_nv, f_inverses);
        std::optional<GroupElement> found;
        for (const auto& f : ext.F) {
            bool ok = true;
            for (const auto& space : block) ok = ok && product_hyperbolic(space, h, f);
            if (ok) {
                found = multiply(h, f);
                break;
            }
        }
        if (!found)
            throw DiagnosticError("find_simul_hyperbolic: extension set offered no block extension");
        out = *found;
        cert.notes = "h = " + to_string(h);
    }

    for (const auto& space : spaces) {
        if (!is_hyperbolic(space, out))
            throw DiagnosticError("find_simul_hyperbolic: output elliptic on " + space.str());
        cert.per_space_translation.push_back({space.str(), translation_length(space, out)});
    }
    for (const auto& q : qms) {
        Rat v = q(out);
        if (v == 0) throw DiagnosticError("find_simul_hyperbolic: output vanishes on " + q.label());
        cert.per_evaluator_value.push_back({q.label(), v});
    }
    cert.element = out;
    cert.verified = true;
    return {out, cert};
}

/// SH extension set for a general-type block plus quasimorphism tail: F' holds
/// the power window f_i^w for 1 <= w <= (#evaluators + 1), and the ladder runs
/// over the block spaces only.
inline std::pair<ExtensionSet, ExtensionVerification> sh_extension_set(
    const std::vector<ActionSpace>& block, const std::vector<QmEvaluator>& qms, int verify_radius,
    std::size_t trial_budget = 2000, std::uint64_t seed = 1) {
    if (block.empty()) throw std::invalid_argument("sh_extension_set: need a general-type block");
    for (const auto& space : block)
        if (action_type(space).kind != ActionTypeKind::GeneralType)
            throw std::invalid_argument("sh_extension_set: block spaces must be of general type");
    if (qms.empty()) return sc_extension_set(block, verify_radius, trial_budget, seed);

    int m = int(block.size());
    int l_total = m + int(qms.size());
    long long s = 2 * (long long)l_total + 2;  // s > 2l+1
    long long W = (long long)qms.size() + 1;   // power window l - m + 1

    // independent SH family: conjugates of one simultaneously hyperbolic
    // element, so every member has the same nonzero evaluator values
    auto [f0, f0cert] = find_simul_hyperbolic(block, qms, 6, trial_budget, seed);
    std::vector<GroupElement> pool = independent_sc_family(block, std::size_t(s) + 2, trial_budget, seed + 5);
    std::vector<GroupElement> partners = detail::filter_independent(block, f0, pool);
    if (partners.empty()) throw DiagnosticError("sh_extension_set: no independent partner");
    std::vector<GroupElement> fam =
        detail::conjugate_family_search(block, f0, partners.front(), std::size_t(s));
    for (const auto& h : fam)
        for (const auto& q : qms)
            if (q(h) == 0) throw DiagnosticError("sh_extension_set: conjugate lost a nonzero value");

    CalibrationResult cal = calibrate_extension_constant(block, fam, trial_budget, seed);
    Rat D = cal.D;
    Rat delta = max_defect(qms);

    ExtensionSet ext;
    ext.target = ExtensionSet::Target::SH;
    ext.D = D;
    ext.general_block = m;
    ext.window = W;
    std::vector<GroupElement> f_base;
    for (const auto& h : fam) {
        long long n = 1;
        while (true) {
            bool ok = true;
            GroupElement p = pow(h, n);
            for (const auto& space : block) ok = ok && orbit_distance(space, p) >= 2 * D;
            for (const auto& q : qms) ok = ok && rat_abs(q(p)) > 2 * delta;
            if (ok) break;
            ++n;
        }
        f_base.push_back(pow(h, n));
    }
    // F' = { f_i^w : 1 <= w <= W }, w-major to match the stated listing
    for (long long w = 1; w <= W; ++w)
        for (const auto& f : f_base) ext.base_powers.push_back(pow(f, w));
    ext.ladder = detail::build_ladder(block, f_base[0], D, m, &ext.ladder_inequalities);
    for (long long j : ext.ladder) {
        GroupElement head = pow(f_base[0], j);
        for (const auto& f : ext.base_powers) ext.F.push_back(multiply(head, f));
    }
    for (const auto& f : ext.F) ext.max_word_length = std::max(ext.max_word_length, word_length(f));

    ExtensionVerification ver;
    ver.radius = verify_radius;
    if (verify_radius <= 0) return {ext, ver};

    // cached evaluator values: additive for the supported evaluator kinds is
    // not assumed; recomputed per product below where needed
    std::vector<Rat> L;
    for (const auto& space : block) L.push_back(orbit_distance(space, f_base[0]));
    std::vector<GroupElement> heads;
    for (long long j : ext.ladder) heads.push_back(pow(f_base[0], j));

    long long checked = 0, min_valid = -1;
    for_each_ball_element(block.front().group, verify_radius, [&](const GroupElement& g) {
        ++checked;
        std::vector<Rat> dists;
        for (const auto& space : block) dists.push_back(orbit_distance(space, g));
        int r = detail::empty_ladder_column(block, ext.ladder, L, D, dists);
        GroupElement h = multiply(g, heads[r]);
        for (const auto& space : block)
            if (!(orbit_distance(space, h) > D))
                throw DiagnosticError("sh extension claim failed for g = " + to_string(g));
        // per-element window claim: for each i some power window entry fixes
        // every evaluator
        long long valid = 0;
        for (std::size_t i = 0; i < f_base.size(); ++i) {
            std::optional<long long> wi;
            for (long long w = 1; w <= W && !wi; ++w) {
                bool ok = true;
                GroupElement hf = multiply(h, pow(f_base[i], w));
                for (const auto& q : qms) ok = ok && q(hf) != 0;
                if (ok) wi = w;
            }
            if (!wi)
                throw DiagnosticError("sh window claim failed: every power of f_" + std::to_string(i) +
                                      " vanishes somewhere for g = " + to_string(g));
            bool ok = true;
            for (const auto& space : block)
                ok = ok && product_hyperbolic(space, h, pow(f_base[i], *wi));
            if (ok) ++valid;
        }
        if (valid < (long long)f_base.size() - 2 * m)
            throw DiagnosticError("sh extension sweep guarantee failed for g = " + to_string(g));
        if (valid == 0) throw DiagnosticError("no sh extension for g = " + to_string(g));
        if (min_valid < 0 || valid < min_valid) min_valid = valid;
    });
    ver.elements_checked = checked;
    ver.min_valid_per_element = min_valid;
    ver.pass = true;
    return {ext, ver};
}

// ---- Density bound and the in-ball claim ----------------------------------

/// c = 1 / #S^{<=2M} with M the longest word in F; the density of the target
/// class is at least c for every n > 2M.
struct DensityBound {
    long long M = 0;
    Int ball_2M;
    Rat c;
};

inline DensityBound density_bound_from_extension_set(const ExtensionSet& ext,
                                                     const GroupSpecPtr& group) {
    if (ext.F.empty()) throw std::invalid_argument("density bound: empty extension set");
    DensityBound b;
    for (const auto& f : ext.F) b.M = std::max(b.M, word_length(f));
    b.ball_2M = has_closed_form_series(*group)
                    ? ball_count(group, std::size_t(2 * b.M), CountMethod::Series)
                    : ball_count(group, std::size_t(2 * b.M), CountMethod::BFS);
    b.c = Rat(1) / Rat(b.ball_2M);
    if (!(b.c > 0 && b.c < 1)) throw std::logic_error("density bound outside (0,1)");
    return b;
}

// g with its trailing `cut` letters removed along some geodesic to 1.
inline GroupElement truncate_suffix(const GroupElement& g, long long cut) {
    if (cut <= 0) return g;
    switch (g.spec()->kind) {
        case GroupKind::Free: {
            const Word& w = g.word();
            return GroupElement::from_word(g.spec(), w.prefix(w.length() - std::size_t(cut)));
        }
        case GroupKind::DirectProduct: {
            GroupElement::Tuple t = g.tuple();
            long long remaining = cut;
            for (std::size_t i = t.size(); i-- > 0 && remaining > 0;) {
                long long len = word_length(t[i]);
                long long take = std::min(len, remaining);
                t[i] = truncate_suffix(t[i], take);
                remaining -= take;
            }
            if (remaining > 0) throw std::invalid_argument("truncate_suffix: cut exceeds length");
            return GroupElement::from_tuple(g.spec(), std::move(t));
        }
        case GroupKind::FreeProduct: {
            GroupElement::Syllables s = g.syllables();
            long long remaining = cut;
            while (remaining > 0) {
                if (s.empty()) throw std::invalid_argument("truncate_suffix: cut exceeds length");
                Syllable& last = s.back();
                long long cost = syllable_cost(*g.spec(), last);
                if (cost <= remaining) {
                    remaining -= cost;
                    s.pop_back();
                } else {
                    int k = g.spec()->cyclic_orders[last.factor];
                    if (k == 0) {
                        last.exp += last.exp > 0 ? -remaining : remaining;
                    } else {
                        // canonical exponent in [1, k-1]; shorten toward the
                        // nearer end of the cycle
                        last.exp += last.exp <= k / 2 ? -remaining : remaining;
                    }
                    remaining = 0;
                }
            }
            return GroupElement::from_syllables(g.spec(), std::move(s));
        }
    }
    throw std::logic_error("unreachable");
}

struct ClaimVerification {
    int n = 0;
    long long elements_checked = 0;
    long long max_witness_distance = 0;
    bool pass = false;
    std::string counterexample;  // dumped verbatim on failure
};

/// The in-ball claim behind the density bound: every g in S^{<=n} has a class
/// member h in S^{<=n} with d_S(g, h) <= 2M, produced either as g f directly
/// or by truncating g at distance M from its end and extending.
inline ClaimVerification verify_extension_claim(const ExtensionSet& ext, const GroupSpecPtr& group,
                                                int n,
                                                const std::function<bool(const GroupElement&)>& in_class) {
    long long M = 0;
    for (const auto& f : ext.F) M = std::max(M, word_length(f));
    ClaimVerification out;
    out.n = n;
    out.pass = true;
    for_each_ball_element(group, n, [&](const GroupElement& g) {
        if (!out.pass) return;
        ++out.elements_checked;
        long long lg = word_length(g);
        GroupElement base = lg <= M ? g : truncate_suffix(g, M);
        std::optional<GroupElement> h;
        for (const auto& f : ext.F) {
            GroupElement cand = multiply(base, f);
            if (word_length(cand) <= n && in_class(cand)) {
                h = std::move(cand);
                break;
            }
        }
        if (!h) {
            out.pass = false;
            out.counterexample = "g = " + to_string(g) + " (|g| = " + std::to_string(lg) + ")";
            return;
        }
        long long d = word_length(multiply(inverse(g), *h));
        if (d > 2 * M) {
            out.pass = false;
            out.counterexample = "witness too far: g = " + to_string(g) + ", h = " + to_string(*h) +
                                 ", d = " + std::to_string(d);
            return;
        }
        out.max_witness_distance = std::max(out.max_witness_distance, d);
    });
    return out;
}

}  // namespace simul
