#pragma once

#include <map>
#include <string>
#include <vector>

#include "fbc/cohomology.hpp"
#include "fbc/graph.hpp"
#include "fbc/torus.hpp"
#include "fbc/traintrack.hpp"

namespace fbc {

// A cocycle on the fine complex with prescribed sums on the coarse cells.
// Positive on verticals, partials and skew pieces, and the height gap
// between top and bottom of every fine 2-cell is positive off degenerate corners.
struct FineCocycle {
    QVec z;  // per fine 1-cell
    Q epsilon;  // the LP optimum (minimum slack)
};

// Throws InvariantError if the coarse cochain admits no such extension.
// With avoid_base the coarse cochain may move by a coboundary, and the
// extension vanishes on the level-0 horizontals.
FineCocycle extend_to_fine(const TrapComplex& x, const Cochain& coarse, bool avoid_base = false);

// A point of the section: on a fine 1-cell at a value in that cell's frame
// (the frame puts the cell's start at eta of its start point), or inside a
// fine 2-cell at chart position s and a level in that cell's frame.
struct SectionPoint {
    enum Kind { OnCell, Inside } kind = OnCell;
    int cell = -1;
    Q value;
    Q s;
    bool operator<(const SectionPoint& o) const;
    bool operator==(const SectionPoint& o) const;
};

// One piece of a level arc, traversed from s0 to s1 in the chart of `cell`.
struct ArcPiece {
    int cell = -1;
    Q level;
    Q s0, s1;
};

struct SectionVertex {
    std::string name;
    SectionPoint at;
    int host = -1;  // coarse 1-cell, -1 inside a trapezoid or on an unconstrained cell
    int index = 0;  // crossing number along the host, from its start
};

struct SectionEdge {
    std::string name;  // "<trapezoid>.<level>" or "<trapezoid>.<level>.<piece>"
    int trapezoid = -1;
    int level = 0;  // 1-based rank of its height inside the trapezoid
    int piece = 0;  // 1-based, left to right, 0 when the arc is one edge
    std::vector<ArcPiece> path;  // left to right
};

struct SectionOptions {
    Q phase = Q(1, 2);  // fraction along the least skew cell where the section crosses it
    int vertex_budget = 20000;
    int perturb_budget = 24;
    bool avoid_base = false;  // keep the section off the level-0 graph
};

struct Section {
    Graph graph;
    std::vector<SectionVertex> vertices;
    std::vector<SectionEdge> edges;
    FineCocycle fine;
    std::vector<Q> eta;  // per fine point, a lift of the height function
    Q y0;  // section levels are y0 + Z
    Q phase;  // after perturbation
    int basepoint = -1;
    int components = 0;
    std::vector<int> vertex_image;  // first return on vertices

    int rank() const { return graph.ne() - graph.nv() + components; }
    bool connected() const { return components == 1; }
    int vertex_on(const std::string& host, int index) const;
};

Section build_section(const TrapComplex& x, const Cochain& coarse, const SectionOptions& opt = {});

// Flows every edge up to the next level; the image is an edge path of the section.
GraphMap first_return(const TrapComplex& x, const Section& s);

// Renames the edges of the lone-axis family sections: e1, e2.i, e3.i, e4.i, s1, s2, t.i.
// Returns false (and leaves the names) when the section does not have that shape.
bool family_names(Section& s, const TrapComplex& x);

struct Monodromy {
    InducedAutomorphism aut;
    std::vector<std::string> tree;
    std::string basepoint;
};

// kappa f iota for the given tree (edge names), or a breadth-first tree from the basepoint.
Monodromy monodromy(const Section& s, const GraphMap& fr, const std::vector<std::string>& tree = {});

// Flows the section forward to the level-0 graph, then maps it to the base
// graph along labels. The section must miss level 0 (SectionOptions::avoid_base).
// Edges may map to the empty path.
GraphMap project_to_base(const TrapComplex& x, const Section& s);

struct OuterComparison {
    bool iso = false;  // the projection induces an isomorphism of fundamental groups
    bool equal = false;
    FreeGroupMap transport;  // section generators -> marking generators
    FreeGroupMap section_aut;
    FreeGroupMap base_aut;
    Word conjugator;
};

// Compares the outer class of the first return with the base map under the marking.
OuterComparison compare_outer(const TrapComplex& x, const Section& s, const GraphMap& fr, const MarkedGraph& marking);

struct SectionAudit {
    int rank = 0;
    int components = 0;
    int skew_crossings = 0;
    std::map<int, int> valence_profile;  // valence -> number of vertices
    int illegal_turns = 0;
    int illegal_at_valence_three = 0;  // distinct valence-3 vertices carrying an illegal turn
    bool train_track = false;
    bool irreducible = false;
    bool expanding = false;
    bool untouched_edge = false;  // an edge avoiding every such vertex
    int dim_bound = 0;
};

// certify runs the train track, irreducibility and expansion checks, which are
// quadratic or worse in the number of edges.
SectionAudit section_audit(const TrapComplex& x, const Section& s, const GraphMap& fr, bool certify = true);

std::string section_dot(const TrapComplex& x, const Section& s);
// Edge table: [{"edge": name, "image": "..."}] in edge order.
std::string first_return_json(const GraphMap& fr);

}  // namespace fbc
