#pragma once

#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "simul/action.hpp"
#include "simul/rng.hpp"

namespace simul {

/// Raised when a check that the underlying theory guarantees fails anyway;
/// carries the falsifying witness.
struct DiagnosticError : std::runtime_error {
    explicit DiagnosticError(const std::string& what) : std::runtime_error(what) {}
};

/// Invariant axis of a hyperbolic tree isometry: the vertex set
/// entry * (prefixes of period^+-infinity); translation along it equals tau.
struct Axis {
    ActionSpace space;
    GroupElement element;
    GroupElement entry;    // u (in the acting group)
    GroupElement period;   // c, cyclically reduced (in the acting group)
    Rat tau;
};

inline Axis axis(const ActionSpace& space, const GroupElement& g) {
    if (space.kind == SpaceKind::Line)
        throw std::invalid_argument("axis: tree kinds only");
    if (!is_hyperbolic(space, g))
        throw std::invalid_argument("axis: elliptic input");
    Axis ax;
    ax.space = space;
    ax.element = g;
    if (space.kind == SpaceKind::CayleyTree) {
        auto cf = space.coordinate(g).word().cyclic_reduce();
        GroupSpecPtr acting = space.factor >= 0 ? space.group->factors[space.factor] : space.group;
        ax.entry = GroupElement::from_word(acting, cf.conjugator);
        ax.period = GroupElement::from_word(acting, cf.core);
        ax.tau = Rat((long long)cf.core.length());
    } else {
        CyclicForm cf = cyclic_reduce(g);
        ax.entry = cf.conjugator;
        ax.period = cf.core;
        ax.tau = Rat((long long)cf.core.syllables().size());
    }
    return ax;
}

// Element vertex on the axis, `periods` translation steps from the entry
// vertex plus `rem` unit steps (0 <= rem < period length).
inline TreeVertex axis_vertex(const Axis& ax, long long periods, long long rem = 0) {
    if (ax.space.kind == SpaceKind::CayleyTree) {
        Word c = ax.period.word();
        Word pos = ax.entry.word() * c.pow(periods);
        if (rem > 0) {
            Word head = rem <= (long long)c.length()
                            ? c.prefix(std::size_t(rem))
                            : c;
            pos = pos * head;
        }
        return {GroupElement::from_word(ax.entry.spec(), pos), -1};
    }
    GroupElement pos = multiply(ax.entry, pow(ax.period, periods));
    if (rem > 0) {
        const auto& syl = ax.period.syllables();
        GroupElement::Syllables head(syl.begin(), syl.begin() + std::min<std::size_t>(rem, syl.size()));
        pos = multiply(pos, GroupElement::from_syllables(ax.period.spec(), std::move(head)));
    }
    return {pos, -1};
}

/// Closest-point projection of a tree vertex onto the axis; unique on trees.
inline TreeVertex project_vertex_to_axis(const TreeSpace& tree, const Axis& ax, const TreeVertex& p) {
    TreeVertex v0 = axis_vertex(ax, 0);
    long long span = tree.hops(p, v0) / 2 + 1;  // projection is within d(p, v0) of v0
    long long periods = span / (long long)(ax.tau.convert_to<long long>()) + 2;
    TreeVertex lo = axis_vertex(ax, -periods);
    TreeVertex hi = axis_vertex(ax, +periods);
    return tree.median(p, lo, hi);
}

inline TreeVertex project_to_axis(const ActionSpace& space, const Axis& ax, const GroupElement& p) {
    TreeSpace tree(space);
    TreeVertex point = tree.act(p, tree.base());
    return project_vertex_to_axis(tree, ax, point);
}

inline Rat distance_to_axis(const TreeSpace& tree, const Axis& ax, const TreeVertex& p) {
    return tree.distance(p, project_vertex_to_axis(tree, ax, p));
}

// Signed position of an on-axis vertex relative to the entry vertex.
inline Rat axis_parameter(const TreeSpace& tree, const Axis& ax, const TreeVertex& v) {
    TreeVertex v0 = axis_vertex(ax, 0);
    Rat d = tree.distance(v0, v);
    if (d == 0) return 0;
    long long periods = (d.convert_to<long long>() / ax.tau.convert_to<long long>()) + 2;
    TreeVertex hi = axis_vertex(ax, periods);
    return tree.distance(v, hi) < tree.distance(v0, hi) + d ? d : -d;
}

/// Verdict of a sampled contraction check.
struct ContractionReport {
    Rat C;
    std::size_t samples_tested = 0;
    Rat max_projection_diameter;
    bool pass = false;
    std::uint64_t seed = 0;
};

/// Samples random orbit geodesics disjoint from N_C(axis) and records the
/// diameter of their projections. On trees a disjoint geodesic projects to a
/// single vertex, so at C = 0 the report must pass with diameter 0.
inline ContractionReport check_contracting(const ActionSpace& space, const Axis& ax, const Rat& C,
                                           std::size_t samples, std::uint64_t seed) {
    TreeSpace tree(space);
    Rng rng(seed);
    ContractionReport rep;
    rep.C = C;
    rep.seed = seed;
    rep.max_projection_diameter = 0;
    std::size_t attempts = 0, max_attempts = samples * 50 + 100;
    while (rep.samples_tested < samples && attempts < max_attempts) {
        ++attempts;
        GroupElement p = rng.random_element(space.group, 10);
        GroupElement q = rng.random_element(space.group, 10);
        TreeVertex a = tree.act(p, tree.base());
        TreeVertex b = tree.act(q, tree.base());
        if (a == b) continue;
        auto path = tree.geodesic(a, b);
        bool disjoint = true;
        for (const TreeVertex& v : path) {
            if (distance_to_axis(tree, ax, v) <= C) {
                disjoint = false;
                break;
            }
        }
        if (!disjoint) continue;  // touching geodesics are excluded by the definition
        ++rep.samples_tested;
        Rat diam = tree.distance(project_vertex_to_axis(tree, ax, a),
                                 project_vertex_to_axis(tree, ax, b));
        if (diam > rep.max_projection_diameter) rep.max_projection_diameter = diam;
    }
    rep.pass = rep.max_projection_diameter <= C;
    return rep;
}

// ---- Axis overlaps and weak independence ---------------------------------

struct AxisOverlap {
    bool same_line = false;
    Rat overlap_length;  // length of Y cap Z when they meet (0 for a point)
    Rat bridge;          // distance between the lines when disjoint
    bool meets = false;
};

inline bool same_axis_algebraic(const ActionSpace& space, const GroupElement& g, const GroupElement& h) {
    // On the supported trees two hyperbolic isometries share an axis iff the
    // acting images commute iff the images share a power.
    if (space.kind == SpaceKind::CayleyTree)
        return commutes(space.coordinate(g), space.coordinate(h));
    return commutes(g, h);
}

inline AxisOverlap axis_overlap(const ActionSpace& space, const Axis& Y, const Axis& Z) {
    AxisOverlap ov;
    if (same_axis_algebraic(space, Y.element, Z.element)) {
        ov.same_line = true;
        return ov;
    }
    TreeSpace tree(space);
    // Project far points of Z onto Y, doubling the span until stable.
    long long T = 4;
    TreeVertex pa, pb;
    while (true) {
        pa = project_vertex_to_axis(tree, Y, axis_vertex(Z, -T));
        pb = project_vertex_to_axis(tree, Y, axis_vertex(Z, +T));
        TreeVertex pa2 = project_vertex_to_axis(tree, Y, axis_vertex(Z, -2 * T));
        TreeVertex pb2 = project_vertex_to_axis(tree, Y, axis_vertex(Z, +2 * T));
        if (pa == pa2 && pb == pb2) break;
        T *= 2;
        if (T > (1ll << 40)) throw std::logic_error("axis_overlap failed to stabilize");
    }
    if (!(pa == pb)) {
        ov.meets = true;
        ov.overlap_length = tree.distance(pa, pb);
        return ov;
    }
    Rat b = distance_to_axis(tree, Z, pa);
    ov.meets = b == 0;
    ov.overlap_length = 0;
    ov.bridge = b;
    return ov;
}

/// Exact diameter of N_r(Y) cap N_r(Z); empty intersections report 0.
/// Unbounded (no value) iff the axes share an infinite ray, i.e. iff the
/// elements share a common power.
inline std::optional<Rat> bounded_intersection_diam(const ActionSpace& space, const Axis& Y,
                                                    const Axis& Z, const Rat& r) {
    AxisOverlap ov = axis_overlap(space, Y, Z);
    if (ov.same_line) return std::nullopt;
    if (ov.meets) return ov.overlap_length + 2 * r;
    Rat d = 2 * r - ov.bridge;
    return d < 0 ? Rat(0) : d;
}

/// Evidence record for weak independence: the verdict is decided
/// algebraically (no common power); the sampled overlap diameters merely
/// witness it geometrically.
struct IndependenceCert {
    std::vector<std::pair<Rat, std::optional<Rat>>> overlap_samples;  // r -> diam, nullopt = unbounded
    bool verdict = false;
    std::string witness;
};

inline IndependenceCert weakly_independent(const ActionSpace& space, const GroupElement& g,
                                           const GroupElement& h) {
    if (!is_hyperbolic(space, g) || !is_hyperbolic(space, h))
        throw std::invalid_argument("weakly_independent: non-contracting input");
    IndependenceCert cert;
    if (space.kind == SpaceKind::Line) {
        cert.verdict = false;
        cert.witness = "line orbits are cofinal; overlap unbounded at every radius";
        for (int r : {0, 1, 2, 4}) cert.overlap_samples.push_back({Rat(r), std::nullopt});
        return cert;
    }
    Axis Y = axis(space, g), Z = axis(space, h);
    cert.verdict = !same_axis_algebraic(space, g, h);
    for (int r : {0, 1, 2, 4})
        cert.overlap_samples.push_back({Rat(r), bounded_intersection_diam(space, Y, Z, Rat(r))});
    if (cert.verdict) {
        std::ostringstream os;
        os << "axes overlap in a bounded segment; diam at r=0 is "
           << rat_str(cert.overlap_samples[0].second.value());
        cert.witness = os.str();
    } else {
        cert.witness = "common power: acting images commute";
    }
    return cert;
}

inline bool is_contracting_element(const ActionSpace& space, const GroupElement& g) {
    // On trees hyperbolic and contracting coincide; the orbit map is a
    // (1, d(o, axis))-quasi-isometric embedding and the axis is 0-contracting.
    return is_hyperbolic(space, g);
}

/// First pool member weakly independent from g (lowest index, deterministic).
inline GroupElement refine_independent_triple(const ActionSpace& space, const GroupElement& g,
                                              const std::vector<GroupElement>& pool) {
    for (const GroupElement& h : pool) {
        if (!is_hyperbolic(space, h)) continue;
        if (weakly_independent(space, g, h).verdict) return h;
    }
    throw DiagnosticError("refine_independent_triple: no pool member is weakly independent from " +
                          to_string(g) + " (falsifies the triple lemma on supported spaces)");
}

struct ConjugateFamilyError : DiagnosticError {
    using DiagnosticError::DiagnosticError;
};

/// {(f^n h^n)^k f (f^n h^n)^-k : 0 <= k < count}, verified contracting on every
/// listed space and pairwise weakly independent there (the exact algebraic
/// no-common-power criterion). A verification failure reports the failing
/// pair; callers should retry with a larger n.
inline std::vector<GroupElement> conjugate_family(const std::vector<ActionSpace>& spaces,
                                                  const GroupElement& f, const GroupElement& h,
                                                  long long n, std::size_t count) {
    GroupElement t = multiply(pow(f, n), pow(h, n));
    std::vector<GroupElement> out;
    GroupElement tk = GroupElement::identity(f.spec());
    for (std::size_t k = 0; k < count; ++k) {
        out.push_back(conjugate(tk, f));
        tk = multiply(tk, t);
    }
    for (const auto& space : spaces) {
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (!is_contracting_element(space, out[i]))
                throw ConjugateFamilyError("conjugate_family: member " + std::to_string(i) +
                                           " not contracting on " + space.str());
            for (std::size_t j = i + 1; j < out.size(); ++j) {
                if (same_axis_algebraic(space, out[i], out[j]))
                    throw ConjugateFamilyError("conjugate_family: members " + std::to_string(i) + "," +
                                               std::to_string(j) + " dependent on " + space.str() +
                                               " at n=" + std::to_string(n));
            }
        }
    }
    return out;
}

}  // namespace simul
