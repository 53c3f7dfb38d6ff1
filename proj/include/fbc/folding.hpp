#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "fbc/graph.hpp"

namespace fbc {

// A graph whose edges are stored in the direction of their label, an edge of the base graph.
struct LabeledGraph {
    Graph g;
    std::vector<int> label;

    int olabel(int oe) const { return Graph::reversed(oe) ? Graph::rev(Graph::fwd(label[Graph::edge_of(oe)])) : Graph::fwd(label[Graph::edge_of(oe)]); }
};

struct Fold {
    int vertex = -1;  // in the source level
    int d1 = -1, d2 = -1;  // oriented edges leaving vertex with equal oriented labels
    int olabel = -1;  // oriented base edge
    std::vector<int> vq;  // vertex map to the next level
    std::vector<int> eq;  // stored edge map to the next level
    int merged_vertex = -1;  // image of the far endpoints
    int merged_edge = -1;  // image of both folded edges
};

// Position of a level-0 edge inside the base edge it subdivides.
struct Piece {
    int edge = -1;
    int index = 0;
    int count = 1;
    bool reversed = false;  // stored direction opposite to the base edge
};

enum class FoldPolicy { LexLeast, LexGreatest };

struct FoldSequence {
    GraphMap f;
    std::vector<LabeledGraph> levels;  // levels 0..k
    std::vector<Fold> folds;  // fold m maps level m to level m+1
    std::vector<Piece> pieces;  // per stored edge of level 0
    std::vector<std::vector<int>> pieces_of;  // base edge -> level-0 stored edges in order along it
    std::vector<int> h_v, h_e;  // last level -> base graph
    FoldPolicy policy = FoldPolicy::LexLeast;

    const Graph& base() const { return f.dom; }
    int length() const { return int(folds.size()); }
};

struct Subdivision {
    LabeledGraph g0;
    GraphMap relabel;  // g0 -> base, every edge over exactly one edge
    GraphMap pi;  // base -> g0, the subdivision homeomorphism
    std::vector<Piece> pieces;
    std::vector<std::vector<int>> pieces_of;
};

Subdivision subdivide_at_preimages(const GraphMap& f);

// Thrown when no fold is available before reaching a homeomorphism.
struct FoldStuck : std::runtime_error {
    LabeledGraph stuck;
    FoldStuck(const std::string& m, LabeledGraph g) : std::runtime_error(m), stuck(std::move(g)) {}
};

FoldSequence decompose(const GraphMap& f, FoldPolicy policy = FoldPolicy::LexLeast);

// The factor maps as graph maps: pi, q_1..q_k, h.
GraphMap fold_map(const FoldSequence& s, int m);
GraphMap pi_map(const FoldSequence& s);
GraphMap h_map(const FoldSequence& s);

bool verify(const FoldSequence& s, const GraphMap& f, std::string* why = nullptr);

struct AuxGraph {
    int n = 0;
    std::vector<std::pair<int, int>> arcs;
    std::vector<int> topo_order;  // empty when cyclic
    std::vector<int> cycle;  // witness when cyclic
    bool acyclic() const { return cycle.empty(); }
};

AuxGraph aux_graph(const GraphMap& f);

std::string fold_sequence_json(const FoldSequence& s);

}  // namespace fbc
