#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fbc/common.hpp"
#include "fbc/freegroup.hpp"

namespace fbc {

// <g1, g2 | relator>. The generators are identified by name with a homology basis.
struct TwoGenPresentation {
    std::vector<std::string> gens;
    Word relator;  // cyclically reduced
    Word input;  // as read
    Word conjugator;  // input = conjugator relator conjugator^-1 after free reduction
};

TwoGenPresentation parse_two_gen(const std::string& text);
TwoGenPresentation read_two_gen(const std::string& path);
TwoGenPresentation two_gen(const std::vector<std::string>& gens, const Word& relator);

using Lattice = std::array<long, 2>;

struct PolygonTrace {
    std::vector<Lattice> path;  // closed: front == back
    std::vector<Lattice> hull;  // counterclockwise, no collinear vertices, from the least point
    std::map<Lattice, int> visits;  // hull vertex -> times the cyclic path passes it
    std::map<std::pair<Lattice, Lattice>, int> unit_edges;  // undirected lattice steps with multiplicity
    std::vector<std::pair<Lattice, Lattice>> thick() const;  // steps taken more than once
};

// Throws InvariantError if the relator does not close up in the plane.
PolygonTrace trace_polygon(const TwoGenPresentation& p);

// A covector p g1* + q g2*, primitive.
struct Covector {
    long p = 0, q = 0;
    bool operator==(const Covector& o) const { return p == o.p && q == o.q; }
    bool operator<(const Covector& o) const;  // by angle in [0, 2 pi)
    Covector operator-() const { return {-p, -q}; }
    std::string str(const std::vector<std::string>& gens) const;
};

Covector primitive_covector(long p, long q);

struct HullEdge {
    Lattice from, to;
    Covector normal;  // outward
    long length = 0;  // lattice length
    bool diagonal = false;
};

struct SlopeSet {
    std::vector<HullEdge> edges;
    std::vector<Covector> excluded;  // closed under negation, sorted by angle
    // Hull corners passed more than once, with the open cone of covectors maximized there.
    struct Corner {
        Lattice at;
        Covector from, to;
    };
    std::vector<Corner> indeterminate;
    bool is_excluded(const Covector& c) const;
    // "manual check required" when c is maximized at an indeterminate corner.
    bool needs_manual_check(const Covector& c) const;
};

SlopeSet excluded_directions(const PolygonTrace& t);

// Open sector swept counterclockwise from ray lo to ray hi.
struct ConeComponent {
    Covector lo, hi;
    bool contains(const Q& p, const Q& q) const;
    std::string str(const std::vector<std::string>& gens) const;
};

// Throws InvariantError when c lies on an excluded ray.
ConeComponent component_containing(const SlopeSet& s, const Covector& c);

// Primitive integral classes p g1* + q g2* in the component with p s1 + q s2 = 1,
// where (s1, s2) are the coordinates of the loop s, and |p|, |q| <= height.
struct LineReport {
    std::vector<Covector> classes;  // by increasing height
    std::string note;
};
LineReport lone_axis_line(const ConeComponent& comp, const std::array<long, 2>& s, long height);

std::string bns_json(const TwoGenPresentation& p, const PolygonTrace& t, const SlopeSet& s);
std::string bns_tikz(const PolygonTrace& t, const SlopeSet& s);
std::string bns_svg(const PolygonTrace& t, const SlopeSet& s);

}  // namespace fbc
