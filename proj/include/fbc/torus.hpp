#pragma once

#include <string>
#include <vector>

#include "fbc/common.hpp"
#include "fbc/folding.hpp"

namespace fbc {

// Fine structure: horizontal pieces of every level graph, vertical segments
// between consecutive levels, and the skew diagonals of the folds. Level k is
// glued to level 0, so fine points at level k are stored as level-0 points.

struct FinePoint {
    enum Kind { Vertex, Mark, Skew } kind = Vertex;
    int level = 0;  // slab for skew points
    int vertex = -1;  // vertex of the level graph
    int edge = -1;  // stored edge of the level graph for marks
    Q x;  // fraction along the edge in label direction, or s on the skew
};

struct Fine1Cell {
    enum Kind { Horizontal, Vertical, Partial, Skew } kind = Horizontal;
    int from = -1, to = -1;  // fine points
    int level = 0;  // level for horizontals, slab for the rest
    int edge = -1;  // horizontals: stored edge of the level graph
    int index = 0;  // piece index along the edge or the skew
    Q s0, s1;  // skew pieces: s-range; partials: s0 = foot
    bool constrained = false;
    int coarse = -1;
};

// One entry of a cell side: fine 1-cell traversed with a sign relative to +s.
struct SideCell {
    int cell = -1;
    int sign = 1;
    Q s0, s1;  // sub-interval of [0,1] in the cell coordinate
};

// A fine 2-cell in its own chart [0,1] x [0,1]: bottom and top chains run in
// +s direction, sides go up. A missing side (-1) is a degenerate corner.
struct Fine2Cell {
    enum Kind { Square, Lower, Upper } kind = Square;
    int slab = 1;
    std::vector<SideCell> bottom, top;
    int left = -1, right = -1;
    int corner[2][2] = {{-1, -1}, {-1, -1}};  // [s][t] fine points
    int coarse = -1;
    int sigma = 1;  // +1: s increases from right to left in the trapezoid
    std::vector<std::pair<int, int>> boundary() const;  // canonical cycle
};

struct Coarse0Cell {
    std::string name;
    int fine = -1;
};

struct Coarse1Cell {
    enum Kind { Vertical, Skew } kind = Vertical;
    std::string name;
    int from = -1, to = -1;  // coarse 0-cells
    std::vector<int> fine;  // fine 1-cells in order, all traversed forward
    int slab = 0;  // skews only
};

struct Trapezoid {
    std::string name;
    int bottom = -1;  // coarse skew
    std::vector<int> left, right;  // verticals going up from the bottom corners
    // Everything between the two sides, from the top left to the top right corner.
    std::vector<std::pair<int, int>> top;
    std::vector<std::pair<int, int>> boundary;  // (coarse 1-cell, sign), closed
    std::vector<int> fine;  // fine 2-cells
};

struct TrapComplex {
    FoldSequence seq;
    int k = 0;
    // fine structure
    std::vector<FinePoint> points;
    std::vector<Fine1Cell> cells1;
    std::vector<Fine2Cell> cells2;
    std::vector<std::vector<std::vector<Q>>> marks;  // [level 0..k][edge] sorted fractions
    std::vector<std::vector<Q>> skew_marks;  // [slab 1..k], index 0 unused
    // coarse structure
    std::vector<Coarse0Cell> c0;
    std::vector<Coarse1Cell> c1;
    std::vector<Trapezoid> c2;
    // base graph overlay: trapezoids met by the strip above each base edge
    std::vector<std::vector<int>> overlay;

    int euler() const { return int(c0.size()) - int(c1.size()) + int(c2.size()); }
    int skew_count() const;
    int find1(const std::string& name) const;

    // Fine point lookups; level k points resolve to level 0.
    int vertex_point(int level, int v) const;
    int mark_point(int level, int edge, const Q& x) const;
    int skew_point(int slab, const Q& s) const;
    int vertical_above(int point) const;  // full or partial vertical starting at a fine point

    // Time per period is 1: each slab has height 1/k.
    Q time(int fine1) const;

    // Internal lookup tables.
    std::vector<std::vector<int>> vid;  // [level][vertex] -> point
    std::vector<std::vector<std::vector<int>>> mid;  // [level][edge][mark index] -> point
    std::vector<std::vector<int>> sid;  // [slab][skew mark index] -> point
    std::vector<int> up;  // point -> vertical above
    std::vector<std::vector<std::vector<int>>> hid;  // [level][edge][piece] -> horizontal
};

// Position of a level-k point in level-0 terms.
struct LevelZeroPoint {
    int vertex = -1;  // Gamma_0 vertex
    int piece = -1;  // else a stored Gamma_0 edge and fraction along it
    Q x;
};

TrapComplex build_torus(const FoldSequence& seq, int mark_budget = 20000);

struct Diagnostics {
    bool ok = true;
    std::vector<std::string> problems;
    void fail(const std::string& m) {
        ok = false;
        problems.push_back(m);
    }
};

// Checks the coarse structure: skew degrees, backward termination of
// verticals, closed trapezoid boundaries, Euler characteristic.
Diagnostics validate(const TrapComplex& x);

struct SkewLoop {
    bool closed = false;
    std::vector<int> cells;  // coarse skews in flow order
    std::vector<std::pair<int, int>> chain;  // (coarse 1-cell, coefficient)
    std::string breaks;  // where consecutive skews fail to meet
};

SkewLoop skew_loop(const TrapComplex& x);

std::string torus_json(const TrapComplex& x);
std::string torus_dot(const TrapComplex& x);
std::string torus_tikz(const TrapComplex& x);

}  // namespace fbc
