#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "simul/action.hpp"
#include "simul/census.hpp"
#include "simul/contracting.hpp"
#include "simul/quasimorphism.hpp"
#include "simul/rng.hpp"

namespace simul {

struct CalibrationFalsified : DiagnosticError {
    using DiagnosticError::DiagnosticError;
};

// Fast independence test used inside sweeps: the commutation criterion is the
// exact algebraic decision on the supported trees; full certificates with
// overlap samples come from weakly_independent().
inline bool independent_fast(const ActionSpace& space, const GroupElement& g, const GroupElement& h) {
    return !same_axis_algebraic(space, g, h);
}

// ---- Extension-constant calibration ---------------------------------------

/// Empirical stand-in for the extension constant: the smallest D in the
/// doubling sequence such that every sampled (triple, g) with orbit distances
/// above D admits a candidate f with fg and gf both contracting.
struct CalibrationResult {
    Rat D;
    std::vector<ActionSpace> spaces;
    std::size_t witnesses_tested = 0;
    std::vector<std::string> failures;  // counterexamples that forced doubling
    std::uint64_t seed = 0;
};

/// Lowest-index f in the triple with f g and g f both contracting on the space.
inline GroupElement extension_pick(const ActionSpace& space, const GroupElement& g,
                                   const std::vector<GroupElement>& triple) {
    for (const GroupElement& f : triple) {
        if (product_hyperbolic(space, g, f) && product_hyperbolic(space, f, g)) return f;
    }
    std::ostringstream os;
    os << "extension_pick: no candidate works on " << space.str() << " for g=" << to_string(g)
       << " with triple {";
    for (std::size_t i = 0; i < triple.size(); ++i) os << (i ? "," : "") << to_string(triple[i]);
    os << "}";
    throw CalibrationFalsified(os.str());
}

inline CalibrationResult calibrate_extension_constant(const std::vector<ActionSpace>& spaces,
                                                      const std::vector<GroupElement>& pool,
                                                      std::size_t trial_budget, std::uint64_t seed) {
    if (pool.size() < 3) throw std::invalid_argument("calibrate: pool must have >= 3 elements");
    for (const auto& space : spaces) {
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (!is_contracting_element(space, pool[i]))
                throw std::invalid_argument("calibrate: pool element not contracting on " + space.str());
            for (std::size_t j = i + 1; j < pool.size(); ++j)
                if (!independent_fast(space, pool[i], pool[j]))
                    throw std::invalid_argument("calibrate: pool not pairwise weakly independent");
        }
    }
    CalibrationResult res;
    res.spaces = spaces;
    res.seed = seed;
    for (Rat D = 1;; D *= 2) {
        if (D > Rat(1 << 20))
            throw DiagnosticError("calibrate: no stable D within budget (never observed on supported spaces)");
        Rng rng(seed);
        bool ok = true;
        std::size_t tested = 0;
        for (std::size_t trial = 0; trial < trial_budget && ok; ++trial) {
            const ActionSpace& space = spaces[trial % spaces.size()];
            // three distinct pool members, powered above D on this space
            std::size_t a = std::size_t(rng.uniform(0, (long long)pool.size() - 1));
            std::size_t b = std::size_t(rng.uniform(0, (long long)pool.size() - 1));
            std::size_t c = std::size_t(rng.uniform(0, (long long)pool.size() - 1));
            if (a == b || a == c || b == c) continue;
            std::vector<GroupElement> triple;
            for (std::size_t idx : {a, b, c}) {
                long long e = rng.uniform(1, 3);
                GroupElement f = pow(pool[idx], e);
                while (!(orbit_distance(space, f) > D)) f = multiply(f, pool[idx]);
                triple.push_back(std::move(f));
            }
            GroupElement g = rng.random_element(space.group, int(8 + 2 * D.convert_to<long long>()));
            if (!(orbit_distance(space, g) > D)) continue;
            ++tested;
            bool found = false;
            for (const GroupElement& f : triple)
                if (product_hyperbolic(space, g, f) && product_hyperbolic(space, f, g)) {
                    found = true;
                    break;
                }
            if (!found) {
                std::ostringstream os;
                os << "D=" << rat_str(D) << " space=" << space.str() << " g=" << to_string(g);
                res.failures.push_back(os.str());
                ok = false;
            }
        }
        if (ok) {
            res.D = D;
            res.witnesses_tested = tested;
            return res;
        }
    }
}

// ---- Powered families and distance chains ---------------------------------

/// Family powered so the distance-estimate chain holds verbatim on every
/// listed space: d(o_k, f_i^{M_i} o_k) - 2(N - i) D strictly decreasing in i
/// (1-based), with the last entry above 3D and optional per-space floors.
struct PoweredFamily {
    std::vector<GroupElement> base;
    std::vector<long long> exponents;
    std::vector<GroupElement> powered;
    bool validated = false;
    std::vector<std::string> inequalities;
};

inline PoweredFamily power_up(const std::vector<ActionSpace>& spaces,
                              const std::vector<GroupElement>& elements, const Rat& D,
                              const std::vector<Rat>& last_floor = {}) {
    PoweredFamily fam;
    fam.base = elements;
    std::size_t n = elements.size();
    fam.exponents.assign(n, 0);
    fam.powered.resize(n);
    std::vector<std::vector<Rat>> dist(n);  // per element, per space
    for (std::size_t ii = n; ii-- > 0;) {
        for (const auto& space : spaces)
            if (!is_contracting_element(space, elements[ii]))
                throw std::invalid_argument("power_up: element elliptic on " + space.str() +
                                            " where a bound is required");
        long long M = 1;
        while (true) {
            GroupElement p = pow(elements[ii], M);
            std::vector<Rat> ds;
            bool ok = true;
            for (std::size_t k = 0; k < spaces.size() && ok; ++k) {
                Rat d = orbit_distance(spaces[k], p);
                ds.push_back(d);
                if (ii + 1 == n) {
                    Rat floor = 3 * D;
                    if (!last_floor.empty()) floor = std::max(floor, last_floor[k]);
                    ok = d > floor;
                } else {
                    ok = d > dist[ii + 1][k] + 2 * D;
                }
            }
            if (ok) {
                fam.exponents[ii] = M;
                fam.powered[ii] = std::move(p);
                dist[ii] = std::move(ds);
                break;
            }
            ++M;
        }
    }
    // recheck the chain in the stated form before setting the flag
    for (std::size_t k = 0; k < spaces.size(); ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            std::ostringstream os;
            Rat lhs = dist[i][k] - 2 * Rat((long long)(n - (i + 1))) * D;
            if (i + 1 < n) {
                Rat rhs = dist[i + 1][k] - 2 * Rat((long long)(n - (i + 2))) * D;
                if (!(lhs > rhs)) throw std::logic_error("power_up: chain recheck failed");
                os << "d(o," << i + 1 << ")-2(" << n << "-" << i + 1 << ")D=" << rat_str(lhs) << " > "
                   << rat_str(rhs) << " on " << spaces[k].str();
            } else {
                if (!(dist[i][k] > 3 * D)) throw std::logic_error("power_up: tail recheck failed");
                os << "d(o," << n << ")=" << rat_str(dist[i][k]) << " > 3D on " << spaces[k].str();
            }
            fam.inequalities.push_back(os.str());
        }
    }
    fam.validated = true;
    return fam;
}

// ---- The substitute-and-retry sweep ---------------------------------------

struct ScProduct {
    GroupElement h, f, product;  // product = h * f; f * h is verified as well
};

/// One sweep of the substitute-and-retry process for a single h over one
/// space list: returns the pool members f (pool order preserved) with f h and
/// h f contracting on every listed space. Yields |pool| - 2 |spaces| members.
inline std::vector<GroupElement> sweep_valid_pool(const std::vector<ActionSpace>& spaces,
                                                  const GroupElement& h,
                                                  const std::vector<GroupElement>& pool) {
    std::vector<GroupElement> current = pool;
    for (const auto& space : spaces) {
        if (!(orbit_distance(space, h) > 0))
            throw std::invalid_argument("sweep: h has zero displacement on " + space.str());
        if (current.size() < 3)
            throw CalibrationFalsified("sweep: pool exhausted on " + space.str());
        std::vector<GroupElement> working(current.begin(), current.begin() + 3);
        std::size_t next = 3;
        std::vector<GroupElement> valid;
        while (true) {
            GroupElement f = extension_pick(space, h, working);
            valid.push_back(f);
            working.erase(std::find_if(working.begin(), working.end(),
                                       [&](const GroupElement& x) { return x == f; }));
            if (next < current.size())
                working.push_back(current[next++]);
            else
                break;
        }
        // keep pool order for determinism
        std::vector<GroupElement> ordered;
        for (const auto& f : current)
            if (std::find_if(valid.begin(), valid.end(),
                             [&](const GroupElement& x) { return x == f; }) != valid.end())
                ordered.push_back(f);
        current = std::move(ordered);
    }
    return current;
}

/// SC construction for h_1..h_t on the listed spaces: per h, at least
/// |pool| - 2 |spaces| products f h (and h f) contracting on every space.
inline std::vector<std::vector<ScProduct>> sc_construction(const std::vector<ActionSpace>& spaces,
                                                           const std::vector<GroupElement>& h_list,
                                                           const std::vector<GroupElement>& pool,
                                                           const Rat& D) {
    if (pool.size() <= 2 * spaces.size())
        throw std::invalid_argument("sc_construction: pool must exceed twice the space count");
    for (const auto& space : spaces) {
        for (const auto& f : pool)
            if (!(orbit_distance(space, f) > D))
                throw std::invalid_argument("sc_construction: pool member below D on " + space.str());
        for (const auto& h : h_list)
            if (!(orbit_distance(space, h) > D))
                throw DiagnosticError("sc_construction: h below D on " + space.str() + ": " + to_string(h));
    }
    std::vector<std::vector<ScProduct>> out;
    for (const auto& h : h_list) {
        std::vector<GroupElement> valid = sweep_valid_pool(spaces, h, pool);
        if (valid.size() < pool.size() - 2 * spaces.size())
            throw CalibrationFalsified("sc_construction: sweep returned too few products");
        std::vector<ScProduct> row;
        for (const auto& f : valid) {
            ScProduct p{h, f, multiply(h, f)};
            for (const auto& space : spaces) {
                if (!is_contracting_element(space, p.product) ||
                    !is_contracting_element(space, multiply(f, h)))
                    throw CalibrationFalsified("sc_construction: verification failed on " + space.str());
            }
            row.push_back(std::move(p));
        }
        out.push_back(std::move(row));
    }
    return out;
}

// ---- Simultaneous contracting elements ------------------------------------

struct ScCertificate {
    std::string case_taken;
    int l = 0;
    long long s = 0;
    Rat D;
    std::vector<std::size_t> f_selection, g_selection;  // re-indexing maps
    std::vector<std::size_t> f_subselection, g_subselection;
    std::vector<std::string> pigeonhole_identities;
    std::vector<std::string> checked_inequalities;
    std::size_t grid_size = 0, valid_first = 0, valid_second = 0;
    GroupElement element;
    std::vector<std::pair<std::string, Rat>> per_space_translation;
    std::uint64_t seed = 0;
    bool verified = false;
};

namespace detail {

// Majority side of a threshold split, keeping original order; returns
// (indices, side_is_big).
inline std::pair<std::vector<std::size_t>, bool> pigeonhole_split(const std::vector<Rat>& d,
                                                                  const Rat& D, std::size_t want) {
    std::vector<std::size_t> big, small;
    for (std::size_t i = 0; i < d.size(); ++i) (d[i] > D ? big : small).push_back(i);
    if (big.size() >= want) {
        big.resize(want);
        return {big, true};
    }
    if (small.size() < want) throw std::logic_error("pigeonhole_split: impossible");
    small.resize(want);
    return {small, false};
}

inline void record_identity(ScCertificate& cert, const std::string& name, long long value) {
    std::ostringstream os;
    os << name << " = " << value << " > 0";
    if (value <= 0) throw std::logic_error("pigeonhole identity failed: " + os.str());
    cert.pigeonhole_identities.push_back(os.str());
}

inline void check_above_D(const std::vector<ActionSpace>& spaces, const GroupElement& g,
                          const Rat& D, const std::string& what, ScCertificate& cert) {
    for (const auto& space : spaces) {
        Rat d = orbit_distance(space, g);
        if (!(d > D))
            throw DiagnosticError("derived distance check failed: " + what + " on " + space.str());
        cert.checked_inequalities.push_back("d(o," + what + ")=" + rat_str(d) + " > D on " + space.str());
    }
}

// Runs two sweeps and intersects the (i, j) validity grids.
struct GridResult {
    std::set<std::pair<std::size_t, std::size_t>> first, second;
    std::pair<std::size_t, std::size_t> pick;  // lexicographically first common pair
};

inline GridResult intersect_grids(std::set<std::pair<std::size_t, std::size_t>> first,
                                  std::set<std::pair<std::size_t, std::size_t>> second) {
    GridResult gr;
    gr.first = std::move(first);
    gr.second = std::move(second);
    for (const auto& p : gr.first)
        if (gr.second.count(p)) {
            gr.pick = p;
            return gr;
        }
    throw DiagnosticError("pigeonhole intersection empty despite positive count bound");
}

}  // namespace detail

inline GroupElement find_first_contracting(const std::vector<ActionSpace>& spaces, int radius_max = 6) {
    const GroupSpecPtr& group = spaces.front().group;
    for (int n = 1; n <= radius_max; ++n) {
        std::optional<GroupElement> found;
        for_each_sphere(group, n, [&](const GroupElement& e) {
            if (found) return;
            bool ok = true;
            for (const auto& space : spaces) ok = ok && is_contracting_element(space, e);
            if (ok) found = e;
        });
        if (found) return *found;
    }
    throw DiagnosticError("no contracting element within the seed search radius");
}

/// The four-case pigeonhole construction. seedF must be independent in
/// SC(G; spaces 1..l-1), seedT in SC(G; spaces 2..l), both of size 4s for an
/// s > 2l+1. For l = 1 the pools are ignored and a ball scan suffices.
inline std::pair<GroupElement, ScCertificate> find_simul_contracting(
    const std::vector<ActionSpace>& spaces, const std::vector<GroupElement>& seedF,
    const std::vector<GroupElement>& seedT, std::size_t trial_budget = 2000,
    std::uint64_t seed = 1) {
    ScCertificate cert;
    cert.l = int(spaces.size());
    cert.seed = seed;
    if (spaces.empty()) throw std::invalid_argument("find_simul_contracting: no spaces");
    int l = int(spaces.size());
    if (l == 1) {
        GroupElement g = find_first_contracting(spaces);
        cert.case_taken = "base(l=1)";
        cert.element = g;
        for (const auto& space : spaces)
            cert.per_space_translation.push_back({space.str(), translation_length(space, g)});
        cert.verified = true;
        return {g, cert};
    }

    if (seedF.size() != seedT.size() || seedF.size() % 4 != 0)
        throw std::invalid_argument("find_simul_contracting: pools must have equal size 4s");
    long long s = (long long)seedF.size() / 4;
    if (!(s > 2 * l + 1))
        throw std::invalid_argument("find_simul_contracting: need s > 2l+1");
    cert.s = s;

    std::vector<ActionSpace> frontSpaces(spaces.begin(), spaces.end() - 1);  // X_1..X_{l-1}
    std::vector<ActionSpace> backSpaces(spaces.begin() + 1, spaces.end());   // X_2..X_l
    const ActionSpace& X1 = spaces.front();
    const ActionSpace& Xl = spaces.back();

    // uniform D over both pools' space ranges
    CalibrationResult calF = calibrate_extension_constant(frontSpaces, seedF, trial_budget, seed);
    CalibrationResult calT = calibrate_extension_constant(backSpaces, seedT, trial_budget, seed + 1);
    Rat D = std::max(calF.D, calT.D);
    cert.D = D;

    // distance chains (P3); the T chain additionally dominates 2 d(o, f_1) + 2D
    // on the middle spaces
    PoweredFamily FF = power_up(frontSpaces, seedF, D);
    std::vector<Rat> floors;
    for (std::size_t k = 0; k < backSpaces.size(); ++k) {
        bool middle = k + 1 < backSpaces.size();  // X_2..X_{l-1}
        floors.push_back(middle ? 2 * orbit_distance(backSpaces[k], FF.powered[0]) + 2 * D : Rat(0));
    }
    PoweredFamily TT = power_up(backSpaces, seedT, D, floors);
    cert.checked_inequalities.insert(cert.checked_inequalities.end(), FF.inequalities.begin(),
                                     FF.inequalities.end());
    cert.checked_inequalities.insert(cert.checked_inequalities.end(), TT.inequalities.begin(),
                                     TT.inequalities.end());

    // pigeonhole 4s -> 2s on the far spaces
    std::vector<Rat> dF, dG;
    for (const auto& f : FF.powered) dF.push_back(orbit_distance(Xl, f));
    for (const auto& g : TT.powered) dG.push_back(orbit_distance(X1, g));
    auto [selF, fBig] = detail::pigeonhole_split(dF, D, std::size_t(2 * s));
    auto [selG, gBig] = detail::pigeonhole_split(dG, D, std::size_t(2 * s));
    cert.f_selection = selF;
    cert.g_selection = selG;

    std::vector<GroupElement> F, T;
    for (auto i : selF) F.push_back(FF.powered[i]);
    for (auto j : selG) T.push_back(TT.powered[j]);
    const GroupElement& f1 = F[0];
    const GroupElement& g1 = T[0];
    long long S2 = 2 * s;  // selected family size

    auto valid_pairs_h_over_pool =
        [&](const std::vector<ActionSpace>& sp, const std::vector<GroupElement>& hs,
            const std::vector<GroupElement>& pool,
            auto pair_of) -> std::set<std::pair<std::size_t, std::size_t>> {
        std::set<std::pair<std::size_t, std::size_t>> out;
        auto rows = sc_construction(sp, hs, pool, D);
        for (std::size_t hi = 0; hi < hs.size(); ++hi) {
            for (const auto& prod : rows[hi]) {
                // recover the pool index of prod.f
                for (std::size_t pi = 0; pi < pool.size(); ++pi)
                    if (pool[pi] == prod.f) {
                        out.insert(pair_of(hi, pi));
                        break;
                    }
            }
        }
        return out;
    };

    GroupElement candidate;
    if (fBig && gBig) {
        cert.case_taken = "f>g>";
        detail::record_identity(cert, "4s^2-4sl", 4 * s * s - 4 * s * l);
        auto first = valid_pairs_h_over_pool(frontSpaces, T, F, [&](std::size_t j, std::size_t i) {
            return std::pair<std::size_t, std::size_t>{i, j};
        });
        auto second = valid_pairs_h_over_pool({Xl}, F, T, [&](std::size_t i, std::size_t j) {
            return std::pair<std::size_t, std::size_t>{i, j};
        });
        cert.grid_size = std::size_t(S2 * S2);
        cert.valid_first = first.size();
        cert.valid_second = second.size();
        auto gr = detail::intersect_grids(std::move(first), std::move(second));
        candidate = multiply(F[gr.pick.first], T[gr.pick.second]);
    } else if (!fBig && !gBig) {
        cert.case_taken = "f<g<";
        detail::record_identity(cert, "4s^2-(8l-4)s", 4 * s * s - (8 * l - 4) * s);
        GroupElement f1g1 = multiply(f1, g1);
        std::vector<GroupElement> hs1;  // f_1 g_1 g_j
        for (const auto& g : T) hs1.push_back(multiply(f1g1, g));
        for (const auto& h : hs1) detail::check_above_D({X1}, h, D, "f1 g1 g_j", cert);
        auto first = valid_pairs_h_over_pool({X1}, hs1, F, [&](std::size_t j, std::size_t i) {
            return std::pair<std::size_t, std::size_t>{i, j};
        });
        std::vector<GroupElement> hs2;  // f_i f_1 g_1
        for (const auto& f : F) hs2.push_back(multiply(f, f1g1));
        for (const auto& h : hs2) detail::check_above_D(backSpaces, h, D, "f_i f1 g1", cert);
        auto second = valid_pairs_h_over_pool(backSpaces, hs2, T, [&](std::size_t i, std::size_t j) {
            return std::pair<std::size_t, std::size_t>{i, j};
        });
        cert.grid_size = std::size_t(S2 * S2);
        cert.valid_first = first.size();
        cert.valid_second = second.size();
        auto gr = detail::intersect_grids(std::move(first), std::move(second));
        candidate = multiply(multiply(F[gr.pick.first], f1g1), T[gr.pick.second]);
    } else if (fBig && !gBig) {
        cert.case_taken = "f>g<";
        std::vector<Rat> d1f;
        for (const auto& f : F) d1f.push_back(orbit_distance(Xl, multiply(f1, f)));
        auto [subF, subBig] = detail::pigeonhole_split(d1f, D, std::size_t(s));
        cert.f_subselection = subF;
        std::vector<GroupElement> Fsub;
        for (auto i : subF) Fsub.push_back(F[i]);
        if (subBig) {
            cert.case_taken += "(1)";
            detail::record_identity(cert, "2s^2-(4l-2)s", 2 * s * s - (4 * l - 2) * s);
            std::vector<GroupElement> hs1;  // g_j f_1
            for (const auto& g : T) hs1.push_back(multiply(g, f1));
            for (const auto& h : hs1) detail::check_above_D(frontSpaces, h, D, "g_j f1", cert);
            auto first = valid_pairs_h_over_pool(frontSpaces, hs1, Fsub,
                                                 [&](std::size_t j, std::size_t i) {
                                                     return std::pair<std::size_t, std::size_t>{i, j};
                                                 });
            std::vector<GroupElement> hs2;  // f_1 f_i
            for (const auto& f : Fsub) hs2.push_back(multiply(f1, f));
            for (const auto& h : hs2) detail::check_above_D({Xl}, h, D, "f1 f_i", cert);
            auto second = valid_pairs_h_over_pool({Xl}, hs2, T, [&](std::size_t i, std::size_t j) {
                return std::pair<std::size_t, std::size_t>{i, j};
            });
            cert.grid_size = std::size_t(2 * s * s);
            cert.valid_first = first.size();
            cert.valid_second = second.size();
            auto gr = detail::intersect_grids(std::move(first), std::move(second));
            candidate = multiply(T[gr.pick.second], multiply(f1, Fsub[gr.pick.first]));
        } else {
            cert.case_taken += "(2)";
            detail::record_identity(cert, "2s^2-(2l+2)s", 2 * s * s - (2 * l + 2) * s);
            std::vector<GroupElement> hs1;  // g_j g_1 f_1
            for (const auto& g : T) hs1.push_back(multiply(multiply(g, g1), f1));
            for (const auto& h : hs1) detail::check_above_D({X1}, h, D, "g_j g1 f1", cert);
            auto first = valid_pairs_h_over_pool({X1}, hs1, Fsub, [&](std::size_t j, std::size_t i) {
                return std::pair<std::size_t, std::size_t>{i, j};
            });
            std::vector<GroupElement> hs2;  // g_1 f_1 f_i
            for (const auto& f : Fsub) hs2.push_back(multiply(multiply(g1, f1), f));
            for (const auto& h : hs2) detail::check_above_D(backSpaces, h, D, "g1 f1 f_i", cert);
            auto second = valid_pairs_h_over_pool(backSpaces, hs2, T, [&](std::size_t i, std::size_t j) {
                return std::pair<std::size_t, std::size_t>{i, j};
            });
            cert.grid_size = std::size_t(2 * s * s);
            cert.valid_first = first.size();
            cert.valid_second = second.size();
            auto gr = detail::intersect_grids(std::move(first), std::move(second));
            candidate = multiply(T[gr.pick.second], multiply(multiply(g1, f1), Fsub[gr.pick.first]));
        }
    } else {
        cert.case_taken = "f<g>";
        std::vector<Rat> dg1;
        for (const auto& g : T) dg1.push_back(orbit_distance(X1, multiply(g, g1)));
        auto [subG, subBig] = detail::pigeonhole_split(dg1, D, std::size_t(s));
        cert.g_subselection = subG;
        std::vector<GroupElement> Tsub;
        for (auto j : subG) Tsub.push_back(T[j]);
        detail::record_identity(cert, "2s^2-(4l-2)s", 2 * s * s - (4 * l - 2) * s);
        if (subBig) {
            cert.case_taken += "(1)";
            std::vector<GroupElement> hs1;  // g_j g_1
            for (const auto& g : Tsub) hs1.push_back(multiply(g, g1));
            for (const auto& h : hs1) detail::check_above_D({X1}, h, D, "g_j g1", cert);
            auto first = valid_pairs_h_over_pool({X1}, hs1, F, [&](std::size_t j, std::size_t i) {
                return std::pair<std::size_t, std::size_t>{i, j};
            });
            std::vector<GroupElement> hs2;  // g_1 f_i
            for (const auto& f : F) hs2.push_back(multiply(g1, f));
            for (const auto& h : hs2) detail::check_above_D(backSpaces, h, D, "g1 f_i", cert);
            auto second = valid_pairs_h_over_pool(backSpaces, hs2, Tsub, [&](std::size_t i, std::size_t j) {
                return std::pair<std::size_t, std::size_t>{i, j};
            });
            cert.grid_size = std::size_t(2 * s * s);
            cert.valid_first = first.size();
            cert.valid_second = second.size();
            auto gr = detail::intersect_grids(std::move(first), std::move(second));
            candidate = multiply(multiply(Tsub[gr.pick.second], g1), F[gr.pick.first]);
        } else {
            cert.case_taken += "(2)";
            std::vector<GroupElement> hs1;  // g_j g_1 f_1
            for (const auto& g : Tsub) hs1.push_back(multiply(multiply(g, g1), f1));
            for (const auto& h : hs1) detail::check_above_D({X1}, h, D, "g_j g1 f1", cert);
            auto first = valid_pairs_h_over_pool({X1}, hs1, F, [&](std::size_t j, std::size_t i) {
                return std::pair<std::size_t, std::size_t>{i, j};
            });
            std::vector<GroupElement> hs2;  // g_1 f_1 f_i
            for (const auto& f : F) hs2.push_back(multiply(multiply(g1, f1), f));
            for (const auto& h : hs2) detail::check_above_D(backSpaces, h, D, "g1 f1 f_i", cert);
            auto second = valid_pairs_h_over_pool(backSpaces, hs2, Tsub, [&](std::size_t i, std::size_t j) {
                return std::pair<std::size_t, std::size_t>{i, j};
            });
            cert.grid_size = std::size_t(2 * s * s);
            cert.valid_first = first.size();
            cert.valid_second = second.size();
            auto gr = detail::intersect_grids(std::move(first), std::move(second));
            candidate = multiply(multiply(multiply(Tsub[gr.pick.second], g1), f1), F[gr.pick.first]);
        }
    }

    for (const auto& space : spaces) {
        if (!is_contracting_element(space, candidate))
            throw DiagnosticError("find_simul_contracting: candidate failed verification on " +
                                  space.str());
        cert.per_space_translation.push_back({space.str(), translation_length(space, candidate)});
    }
    cert.element = candidate;
    cert.verified = true;
    return {candidate, cert};
}

// ---- Independent families ---------------------------------------------------

namespace detail {

// Keep the pool members weakly independent from x on every listed space.
// At most two casualties per space by the triple lemma; asserted.
inline std::vector<GroupElement> filter_independent(const std::vector<ActionSpace>& spaces,
                                                    const GroupElement& x,
                                                    const std::vector<GroupElement>& pool) {
    std::vector<GroupElement> cur = pool;
    for (const auto& space : spaces) {
        std::vector<GroupElement> next;
        for (const auto& h : cur)
            if (independent_fast(space, x, h)) next.push_back(h);
        if (cur.size() - next.size() > 2)
            throw DiagnosticError("more than two pool members share a power with x on " + space.str());
        cur = std::move(next);
    }
    return cur;
}

inline std::vector<GroupElement> conjugate_family_search(const std::vector<ActionSpace>& spaces,
                                                         const GroupElement& f, const GroupElement& h,
                                                         std::size_t count, long long n_max = 12) {
    for (long long n = 1; n <= n_max; ++n) {
        try {
            return conjugate_family(spaces, f, h, n, count);
        } catch (const ConjugateFamilyError&) {
            continue;
        }
    }
    throw DiagnosticError("conjugate_family_search: no exponent up to n_max verified");
}

}  // namespace detail

/// `count` pairwise weakly-independent elements, contracting on every listed
/// space, built by the inductive pipeline: recursive families on the two
/// overlapping space ranges, the four-case construction, and conjugation.
inline std::vector<GroupElement> independent_sc_family(const std::vector<ActionSpace>& spaces,
                                                       std::size_t count,
                                                       std::size_t trial_budget = 2000,
                                                       std::uint64_t seed = 1) {
    int l = int(spaces.size());
    if (l == 0) throw std::invalid_argument("independent_sc_family: no spaces");
    if (l == 1) {
        GroupElement g0 = find_first_contracting(spaces);
        GroupElement g1 = [&] {
            const GroupSpecPtr& group = spaces.front().group;
            for (int n = 1; n <= 6; ++n) {
                std::optional<GroupElement> found;
                for_each_sphere(group, n, [&](const GroupElement& e) {
                    if (found) return;
                    if (is_contracting_element(spaces[0], e) && independent_fast(spaces[0], g0, e))
                        found = e;
                });
                if (found) return *found;
            }
            throw DiagnosticError("no independent partner in the seed radius");
        }();
        if (count == 1) return {g0};
        return detail::conjugate_family_search(spaces, g0, g1, count);
    }

    long long s = 2 * l + 2;  // smallest s > 2l+1
    std::vector<ActionSpace> frontSpaces(spaces.begin(), spaces.end() - 1);
    std::vector<ActionSpace> backSpaces(spaces.begin() + 1, spaces.end());
    std::vector<GroupElement> famF =
        independent_sc_family(frontSpaces, std::size_t(4 * s), trial_budget, seed);
    std::vector<GroupElement> famT =
        independent_sc_family(backSpaces, std::size_t(4 * s), trial_budget, seed + 17);
    auto [x, cert] = find_simul_contracting(spaces, famF, famT, trial_budget, seed);

    // independent pair inside SC(all): conjugate x along the two space ranges
    std::vector<GroupElement> partners = detail::filter_independent(frontSpaces, x, famF);
    if (partners.empty()) throw DiagnosticError("independent_sc_family: no front partner");
    const GroupElement& g_front = partners.front();

    const ActionSpace& Xl = spaces.back();
    GroupElement h_back = [&] {
        const GroupSpecPtr& group = Xl.group;
        for (int n = 1; n <= 6; ++n) {
            std::optional<GroupElement> found;
            for_each_sphere(group, n, [&](const GroupElement& e) {
                if (found) return;
                if (is_contracting_element(Xl, e) && independent_fast(Xl, x, e)) found = e;
            });
            if (found) return *found;
        }
        throw DiagnosticError("independent_sc_family: no back partner");
    }();

    std::size_t span = std::size_t(2 * l + 1);  // s' > 2l suffices for the pair sweep
    std::vector<GroupElement> theta = detail::conjugate_family_search(frontSpaces, x, g_front, span);
    std::vector<GroupElement> eta = detail::conjugate_family_search({Xl}, x, h_back, span);
    for (const auto& space : spaces) {
        for (const auto& e : theta)
            if (!is_contracting_element(space, e))
                throw DiagnosticError("theta conjugate not contracting on " + space.str());
        for (const auto& e : eta)
            if (!is_contracting_element(space, e))
                throw DiagnosticError("eta conjugate not contracting on " + space.str());
    }
    if (!((long long)span * (long long)span - 2 * l * (long long)span > 0))
        throw std::logic_error("pair sweep pigeonhole s^2-2ls failed");
    std::optional<std::pair<std::size_t, std::size_t>> pick;
    for (std::size_t i = 0; i < theta.size() && !pick; ++i) {
        for (std::size_t j = 0; j < eta.size() && !pick; ++j) {
            bool ok = true;
            for (const auto& space : frontSpaces)
                ok = ok && independent_fast(space, theta[i], eta[j]);
            ok = ok && independent_fast(Xl, theta[i], eta[j]);
            if (ok) pick = {i, j};
        }
    }
    if (!pick) throw DiagnosticError("independent_sc_family: no independent (theta, eta) pair");
    return detail::conjugate_family_search(spaces, theta[pick->first], eta[pick->second], count);
}

}  // namespace simul
