#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "fbc/freegroup.hpp"

namespace fbc {

// Oriented edge ids: 2e is edge e in its stored direction, 2e+1 the reverse.
using Path = std::vector<int>;

struct Graph {
    std::vector<std::string> vnames;
    std::vector<std::string> enames;
    std::vector<int> src, dst;

    int nv() const { return int(vnames.size()); }
    int ne() const { return int(enames.size()); }

    static int fwd(int e) { return 2 * e; }
    static int rev(int oe) { return oe ^ 1; }
    static int edge_of(int oe) { return oe >> 1; }
    static bool reversed(int oe) { return oe & 1; }

    int init(int oe) const { return reversed(oe) ? dst[edge_of(oe)] : src[edge_of(oe)]; }
    int term(int oe) const { return init(rev(oe)); }

    int add_vertex(const std::string& name);
    int add_edge(const std::string& name, int from, int to);

    int vertex(const std::string& name) const;
    int edge(const std::string& name) const;

    std::string oname(int oe) const;
    int parse_oriented(const std::string& tok) const;
    Path parse_path(const std::string& text) const;
    std::string format_path(const Path& p) const;

    // Oriented edges leaving v, in id order (loops contribute both ends).
    std::vector<int> directions_at(int v) const;
    int valence(int v) const { return int(directions_at(v).size()); }
    bool connected() const;
    bool single_char_names() const;
};

Path reverse_path(const Path& p);
bool composable(const Graph& g, const Path& p);
// Free reduction; throws on non-composable input.
Path tighten(const Graph& g, const Path& p);
int rank(const Graph& g);

struct GraphMap {
    Graph dom, cod;
    std::vector<int> vmap;
    std::vector<Path> emap;  // image of each stored edge

    Path image(int oe) const;
    Path apply(const Path& p) const;
    // Endpoint compatibility, nonempty images, composable images.
    void check() const;
    std::string format() const;
};

GraphMap identity_map(const Graph& g);
// (f o g): first g, then f. No tightening.
GraphMap compose(const GraphMap& f, const GraphMap& g);

struct SpanningTree {
    int root = 0;
    std::vector<int> parent;  // oriented edge from parent into v, -1 at root
    std::vector<bool> in_tree;  // per stored edge

    Path path_to(const Graph& g, int v) const;
};

// Breadth first from the least vertex name, edges taken in name order.
SpanningTree bfs_tree(const Graph& g);
// Tree given by edge names; fails unless it is a spanning tree.
SpanningTree tree_from_edges(const Graph& g, const std::vector<std::string>& edges, int root);

struct MarkedGraph {
    std::vector<std::string> gens;
    std::vector<Path> marking;  // loops at a common basepoint
};

struct InducedAutomorphism {
    FreeGroupMap map;
    std::vector<std::string> tree;
    std::string basepoint;
    std::string note;
};

// kappa o f o iota on generators for the BFS tree.
InducedAutomorphism map_to_automorphism(const GraphMap& f, const MarkedGraph& m);

// Homomorphism from pi_1(dom) at the tree root to F(m.gens) induced by p, on
// the loops of the non-tree edges (named by those edges).
FreeGroupMap induced_hom(const GraphMap& p, const SpanningTree& t, const MarkedGraph& m);

// Generators are the non-tree edges, iota(g) = tree path, g, tree path back.
InducedAutomorphism tree_automorphism(const GraphMap& f, const SpanningTree& t);

// Parsed contents of a .map file.
struct MapFile {
    std::string name;
    Graph graph;
    GraphMap map;
    std::optional<MarkedGraph> marked;
    std::optional<FreeGroupMap> expected;
    std::map<std::string, std::vector<std::pair<long, std::string>>> cycles;
};

MapFile parse_map_text(const std::string& text);
MapFile read_map_file(const std::string& path);
std::string read_text_file(const std::string& path);

}  // namespace fbc
