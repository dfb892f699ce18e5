#pragma once

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "simul/group.hpp"
#include "simul/rational.hpp"

namespace simul {

enum class SpaceKind { CayleyTree, BassSerreTree, Line };

/// A declared isometric action with a canonical basepoint. delta is 0 for
/// every supported kind; trees and lines are 0-hyperbolic.
struct ActionSpace {
    GroupSpecPtr group;
    SpaceKind kind = SpaceKind::CayleyTree;
    int factor = -1;                // CayleyTree: acting coordinate, -1 = whole group
    std::vector<Rat> weights;       // Line: one weight per global generator
    Rat delta = 0;
    std::string label;

    static ActionSpace cayley_tree(GroupSpecPtr group, int factor = -1) {
        ActionSpace s;
        s.group = std::move(group);
        s.kind = SpaceKind::CayleyTree;
        s.factor = factor;
        const GroupSpec* acting = s.acting_spec();
        if (acting->kind != GroupKind::Free)
            throw std::invalid_argument("cayley tree: acting factor must be a free group");
        std::ostringstream os;
        os << "cayley";
        if (factor >= 0) os << "(factor=" << factor + 1 << ")";
        s.label = os.str();
        return s;
    }

    static ActionSpace bass_serre(GroupSpecPtr group) {
        ActionSpace s;
        s.group = std::move(group);
        s.kind = SpaceKind::BassSerreTree;
        if (s.group->kind != GroupKind::FreeProduct)
            throw std::invalid_argument("bass-serre: group must be a free product");
        s.label = "bass-serre";
        return s;
    }

    static ActionSpace line(GroupSpecPtr group, std::vector<Rat> weights) {
        ActionSpace s;
        s.group = group;
        s.kind = SpaceKind::Line;
        weights.resize(group->generator_count(), Rat(0));
        s.weights = std::move(weights);
        if (group->kind == GroupKind::FreeProduct) {
            for (std::size_t i = 0; i < group->cyclic_orders.size(); ++i)
                if (group->cyclic_orders[i] > 0 && s.weights[i] != 0)
                    throw std::invalid_argument("line: torsion generator must have weight 0");
        }
        bool nonzero = false;
        for (const Rat& w : s.weights) nonzero = nonzero || w != 0;
        if (!nonzero) throw std::invalid_argument("line: all weights zero gives an elliptic action");
        std::ostringstream os;
        os << "line(";
        bool first = true;
        for (std::size_t i = 0; i < s.weights.size(); ++i) {
            if (s.weights[i] == 0) continue;
            if (!first) os << ",";
            os << char('a' + i) << "=" << rat_str(s.weights[i]);
            first = false;
        }
        os << ")";
        s.label = os.str();
        return s;
    }

    const GroupSpec* acting_spec() const {
        if (kind == SpaceKind::CayleyTree && factor >= 0) {
            if (group->kind != GroupKind::DirectProduct || factor >= int(group->factors.size()))
                throw std::invalid_argument("cayley tree factor index out of range");
            return group->factors[factor].get();
        }
        return group.get();
    }

    // Acting coordinate of g for tree kinds.
    const GroupElement& coordinate(const GroupElement& g) const {
        if (kind == SpaceKind::CayleyTree && factor >= 0) return g.tuple()[factor];
        return g;
    }

    Rat homomorphism_value(const GroupElement& g) const {
        Rat v = 0;
        for (std::size_t i = 0; i < weights.size(); ++i)
            if (weights[i] != 0) v += weights[i] * Rat(exponent_sum(g, int(i)));
        return v;
    }

    std::string str() const { return label; }
};

inline void require_in_group(const ActionSpace& space, const GroupElement& g) {
    if (!g.spec() || !g.spec()->same_as(*space.group))
        throw std::invalid_argument("element does not belong to the space's group");
}

// ---- Bass-Serre tree distances ------------------------------------------
//
// The tree for A_1 * ... * A_m has one vertex per factor coset plus one per
// group element, with edges g -- gA_i of length 1/2. Distances between coset
// vertices are integers; the basepoint is the vertex A_1. Internally we count
// doubled distances (edge hops).

inline GroupElement bs_canonical_coset_rep(const GroupElement& g, int factor) {
    const auto& syl = g.syllables();
    if (!syl.empty() && syl.back().factor == factor) {
        GroupElement::Syllables s(syl.begin(), syl.end() - 1);
        return GroupElement::from_syllables(g.spec(), std::move(s));
    }
    return g;
}

// Doubled distance between coset vertices u A_i and v A_j (canonical reps).
inline long long bs_coset_hops(const GroupElement& u, int i, const GroupElement& v, int j) {
    if (i == j && u == v) return 0;
    GroupElement w = multiply(inverse(u), v);
    const auto& syl = w.syllables();
    std::size_t lo = 0, hi = syl.size();
    if (lo < hi && syl[lo].factor == i) ++lo;
    if (lo < hi && syl[hi - 1].factor == j) --hi;
    return 2 * (long long)(hi - lo) + 2;
}

inline long long bs_orbit_hops(const GroupElement& g) {
    GroupElement rep = bs_canonical_coset_rep(g, 0);
    return bs_coset_hops(GroupElement::identity(g.spec()), 0, rep, 0);
}

// ---- Distances and classification ---------------------------------------

inline Rat orbit_distance(const ActionSpace& space, const GroupElement& g) {
    require_in_group(space, g);
    switch (space.kind) {
        case SpaceKind::CayleyTree:
            return Rat(word_length(space.coordinate(g)));
        case SpaceKind::Line:
            return rat_abs(space.homomorphism_value(g));
        case SpaceKind::BassSerreTree:
            return Rat(bs_orbit_hops(g)) / 2;
    }
    throw std::logic_error("unreachable");
}

inline Rat translation_length(const ActionSpace& space, const GroupElement& g) {
    require_in_group(space, g);
    switch (space.kind) {
        case SpaceKind::CayleyTree: {
            const Word& w = space.coordinate(g).word();
            return Rat((long long)w.cyclic_reduce().core.length());
        }
        case SpaceKind::Line:
            return rat_abs(space.homomorphism_value(g));
        case SpaceKind::BassSerreTree: {
            CyclicForm cf = cyclic_reduce(g);
            std::size_t m = cf.core.syllables().size();
            return m >= 2 ? Rat((long long)m) : Rat(0);
        }
    }
    throw std::logic_error("unreachable");
}

enum class IsometryKind { Elliptic, Hyperbolic };

/// No parabolic variant: parabolics cannot occur on the supported spaces.
/// Tests assert this closed-world assumption instead of silently assuming it.
struct ClassificationResult {
    IsometryKind kind = IsometryKind::Elliptic;
    Rat translation_length;
    Rat orbit_displacement;
};

inline ClassificationResult classify_isometry(const ActionSpace& space, const GroupElement& g) {
    ClassificationResult r;
    r.translation_length = translation_length(space, g);
    r.orbit_displacement = orbit_distance(space, g);
    r.kind = r.translation_length > 0 ? IsometryKind::Hyperbolic : IsometryKind::Elliptic;
    return r;
}

// Sanity probe for elliptic inputs: the <g>-orbit stays bounded.
inline bool elliptic_orbit_bounded_probe(const ActionSpace& space, const GroupElement& g, int n_max = 32) {
    Rat first_half_max = 0, all_max = 0;
    GroupElement p = GroupElement::identity(g.spec());
    for (int n = 1; n <= n_max; ++n) {
        p = multiply(p, g);
        Rat d = orbit_distance(space, p);
        if (n <= n_max / 2) first_half_max = std::max(first_half_max, d);
        all_max = std::max(all_max, d);
    }
    return all_max == first_half_max;
}

inline bool is_hyperbolic(const ActionSpace& space, const GroupElement& g) {
    return translation_length(space, g) > 0;
}

// g*h hyperbolic on the space, avoiding the full product where possible.
inline bool product_hyperbolic(const ActionSpace& space, const GroupElement& g, const GroupElement& h) {
    switch (space.kind) {
        case SpaceKind::CayleyTree: {
            const Word& a = space.coordinate(g).word();
            const Word& b = space.coordinate(h).word();
            return !Word::product_trivial(a, b);
        }
        case SpaceKind::Line:
            return space.homomorphism_value(g) + space.homomorphism_value(h) != 0;
        case SpaceKind::BassSerreTree:
            return is_hyperbolic(space, multiply(g, h));
    }
    return false;
}

inline Rat gromov_product(const ActionSpace& space, const GroupElement& x, const GroupElement& y) {
    Rat dx = orbit_distance(space, x);
    Rat dy = orbit_distance(space, y);
    Rat dxy = orbit_distance(space, multiply(inverse(x), y));
    return (dx + dy - dxy) / 2;
}

inline bool is_simul_hyperbolic(const std::vector<ActionSpace>& spaces, const GroupElement& g) {
    if (spaces.empty()) throw std::invalid_argument("is_simul_hyperbolic: empty space list");
    for (const auto& s : spaces)
        if (!is_hyperbolic(s, g)) return false;
    return true;
}

// ---- Declared action types ----------------------------------------------

enum class ActionTypeKind { Elliptic, Lineal, Focal, GeneralType };

struct ActionType {
    ActionTypeKind kind = ActionTypeKind::GeneralType;
    bool orientable = true;  // meaningful for Lineal
};

/// Declared by construction rules, never inferred by sampling.
inline ActionType action_type(const ActionSpace& space) {
    switch (space.kind) {
        case SpaceKind::Line:
            return {ActionTypeKind::Lineal, true};
        case SpaceKind::CayleyTree:
            return space.acting_spec()->rank >= 2 ? ActionType{ActionTypeKind::GeneralType, true}
                                                  : ActionType{ActionTypeKind::Lineal, true};
        case SpaceKind::BassSerreTree: {
            const auto& ords = space.group->cyclic_orders;
            if (ords.size() == 2 && ords[0] == 2 && ords[1] == 2)
                return {ActionTypeKind::Lineal, false};  // infinite dihedral on a line
            return {ActionTypeKind::GeneralType, true};
        }
    }
    return {};
}

// ---- Tree vertices, geodesics, medians ----------------------------------

/// Vertex of a supported tree. For Cayley trees `pos` is an element of the
/// acting free factor and `coset` is -1. For Bass-Serre trees `coset` is -1
/// for element vertices and the factor index for coset vertices, with `pos`
/// the canonical coset representative.
struct TreeVertex {
    GroupElement pos;
    int coset = -1;
    friend bool operator==(const TreeVertex& a, const TreeVertex& b) {
        return a.coset == b.coset && a.pos == b.pos;
    }
};

class TreeSpace {
  public:
    explicit TreeSpace(const ActionSpace& space) : space_(&space) {
        if (space.kind == SpaceKind::Line)
            throw std::invalid_argument("TreeSpace: line actions are not trees");
        if (space.kind == SpaceKind::CayleyTree) {
            // own a shared spec for the acting factor
            acting_ = space.factor >= 0 ? space.group->factors[space.factor]
                                        : space.group;
        }
    }

    const ActionSpace& space() const { return *space_; }

    TreeVertex base() const {
        if (space_->kind == SpaceKind::CayleyTree)
            return {GroupElement::identity(acting_), -1};
        return {GroupElement::identity(space_->group), 0};
    }

    TreeVertex act(const GroupElement& g, const TreeVertex& v) const {
        if (space_->kind == SpaceKind::CayleyTree)
            return {multiply(space_->coordinate(g), v.pos), -1};
        GroupElement moved = multiply(g, v.pos);
        if (v.coset < 0) return {std::move(moved), -1};
        return {bs_canonical_coset_rep(moved, v.coset), v.coset};
    }

    // Exact distance; integral on Cayley trees, half-integral on Bass-Serre.
    Rat distance(const TreeVertex& u, const TreeVertex& v) const {
        return Rat(hops(u, v)) / 2;
    }

    // Doubled distance (edge hops in the half-edge picture).
    long long hops(const TreeVertex& u, const TreeVertex& v) const {
        if (space_->kind == SpaceKind::CayleyTree) {
            const Word& a = u.pos.word();
            const Word& b = v.pos.word();
            return 2 * ((long long)a.length() + (long long)b.length() -
                        2 * (long long)Word::common_prefix(a, b));
        }
        if (u.coset < 0 && v.coset < 0)
            return 2 * (long long)multiply(inverse(u.pos), v.pos).syllables().size();
        if (u.coset < 0) {
            GroupElement w = multiply(inverse(u.pos), v.pos);
            const auto& syl = w.syllables();
            std::size_t hi = syl.size();
            if (hi > 0 && syl[hi - 1].factor == v.coset) --hi;
            return 2 * (long long)hi + 1;
        }
        if (v.coset < 0) return hops(v, u);
        return bs_coset_hops(u.pos, u.coset, v.pos, v.coset);
    }

    std::vector<TreeVertex> geodesic(const TreeVertex& u, const TreeVertex& v) const {
        if (space_->kind == SpaceKind::CayleyTree) return cayley_path(u, v);
        return bs_path(u, v);
    }

    // Unique tree median of three vertices.
    TreeVertex median(const TreeVertex& a, const TreeVertex& b, const TreeVertex& c) const {
        long long hab = hops(a, b), hac = hops(a, c), hbc = hops(b, c);
        long long t = (hab + hac - hbc) / 2;  // doubled Gromov product (b.c)_a
        std::vector<TreeVertex> path = geodesic(a, b);
        long long acc = 0;
        for (std::size_t i = 0; i < path.size(); ++i) {
            if (i > 0) acc += hops(path[i - 1], path[i]);
            if (acc == t) return path[i];
            if (acc > t) break;
        }
        throw std::logic_error("median not on geodesic vertex set");
    }

  private:
    std::vector<TreeVertex> cayley_path(const TreeVertex& u, const TreeVertex& v) const {
        const Word& a = u.pos.word();
        const Word& b = v.pos.word();
        std::size_t p = Word::common_prefix(a, b);
        std::vector<TreeVertex> out;
        for (std::size_t i = a.length();; --i) {
            out.push_back({GroupElement::from_word(acting_, a.prefix(i)), -1});
            if (i == p) break;
        }
        for (std::size_t i = p + 1; i <= b.length(); ++i)
            out.push_back({GroupElement::from_word(acting_, b.prefix(i)), -1});
        return out;
    }

    // Geodesic in the star tree; element and coset vertices alternate.
    std::vector<TreeVertex> bs_path(const TreeVertex& u, const TreeVertex& v) const {
        if (u == v) return {u};
        if (u.coset >= 0) {
            TreeVertex x = exit_element(u, v);
            std::vector<TreeVertex> rest = bs_path(x, v);
            std::vector<TreeVertex> out{u};
            out.insert(out.end(), rest.begin(), rest.end());
            return out;
        }
        if (v.coset >= 0) {
            std::vector<TreeVertex> rev = bs_path(v, u);
            return {rev.rbegin(), rev.rend()};
        }
        // element to element: follow syllables of u^-1 v
        std::vector<TreeVertex> out{u};
        GroupElement cur = u.pos;
        GroupElement w = multiply(inverse(u.pos), v.pos);
        for (const Syllable& s : w.syllables()) {
            out.push_back({bs_canonical_coset_rep(cur, s.factor), s.factor});
            cur = multiply(cur, GroupElement::from_syllables(cur.spec(), {s}));
            out.push_back({cur, -1});
        }
        return out;
    }

    // First element vertex on the geodesic from coset vertex u toward v.
    TreeVertex exit_element(const TreeVertex& u, const TreeVertex& v) const {
        GroupElement w = multiply(inverse(u.pos), v.pos);
        const auto& syl = w.syllables();
        if (!syl.empty() && syl.front().factor == u.coset) {
            GroupElement x = multiply(u.pos, GroupElement::from_syllables(u.pos.spec(), {syl.front()}));
            return {std::move(x), -1};
        }
        return {u.pos, -1};
    }

    const ActionSpace* space_;
    GroupSpecPtr acting_;
};

/// Every vertex of [x o, y o] lies within delta of the union of the other two
/// sides. Always true at delta = 0 on the supported trees.
inline bool thin_triangle_check(const ActionSpace& space, const GroupElement& x,
                                const GroupElement& y, const GroupElement& z, const Rat& delta) {
    TreeSpace tree(space);
    TreeVertex xo = tree.act(x, tree.base());
    TreeVertex yo = tree.act(y, tree.base());
    TreeVertex zo = tree.act(z, tree.base());
    auto side_xy = tree.geodesic(xo, yo);
    auto side_yz = tree.geodesic(yo, zo);
    auto side_zx = tree.geodesic(zo, xo);
    for (const TreeVertex& v : side_xy) {
        Rat best = -1;
        for (const TreeVertex& w : side_yz) {
            Rat d = tree.distance(v, w);
            if (best < 0 || d < best) best = d;
        }
        for (const TreeVertex& w : side_zx) {
            Rat d = tree.distance(v, w);
            if (best < 0 || d < best) best = d;
        }
        if (best > delta) return false;
    }
    return true;
}

}  // namespace simul
