#include "fbc/graph.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fbc/common.hpp"

namespace fbc {

int Graph::add_vertex(const std::string& name) {
    vnames.push_back(name);
    return nv() - 1;
}

int Graph::add_edge(const std::string& name, int from, int to) {
    enames.push_back(name);
    src.push_back(from);
    dst.push_back(to);
    return ne() - 1;
}

int Graph::vertex(const std::string& name) const {
    auto it = std::find(vnames.begin(), vnames.end(), name);
    return it == vnames.end() ? -1 : int(it - vnames.begin());
}

int Graph::edge(const std::string& name) const {
    auto it = std::find(enames.begin(), enames.end(), name);
    return it == enames.end() ? -1 : int(it - enames.begin());
}

bool Graph::single_char_names() const {
    return std::all_of(enames.begin(), enames.end(), [](const std::string& s) {
        return s.size() == 1 && std::islower(static_cast<unsigned char>(s[0]));
    });
}

std::string Graph::oname(int oe) const {
    const std::string& n = enames.at(edge_of(oe));
    if (!reversed(oe)) return n;
    if (n.size() == 1 && std::islower(static_cast<unsigned char>(n[0])))
        return std::string(1, char(std::toupper(static_cast<unsigned char>(n[0]))));
    return n + "'";
}

int Graph::parse_oriented(const std::string& t) const {
    if (int e = edge(t); e >= 0) return fwd(e);
    if (t.size() > 1 && t.back() == '\'') {
        if (int e = edge(t.substr(0, t.size() - 1)); e >= 0) return rev(fwd(e));
    }
    if (t.size() == 1 && std::isupper(static_cast<unsigned char>(t[0]))) {
        if (int e = edge(std::string(1, char(std::tolower(static_cast<unsigned char>(t[0]))))); e >= 0)
            return rev(fwd(e));
    }
    throw ParseError("unknown edge '" + t + "'");
}

Path Graph::parse_path(const std::string& text) const {
    std::istringstream in(text);
    std::vector<std::string> toks;
    std::string t;
    while (in >> t) toks.push_back(t);
    if (toks.size() == 1 && single_char_names() && edge(toks[0]) < 0 && toks[0].size() > 1) {
        std::string s = toks[0];
        toks.clear();
        for (char c : s) toks.push_back(std::string(1, c));
    }
    Path p;
    for (const auto& tok : toks) p.push_back(parse_oriented(tok));
    return p;
}

std::string Graph::format_path(const Path& p) const {
    std::string out;
    bool compact = single_char_names();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i && !compact) out += ' ';
        out += oname(p[i]);
    }
    return out;
}

std::vector<int> Graph::directions_at(int v) const {
    std::vector<int> out;
    for (int oe = 0; oe < 2 * ne(); ++oe)
        if (init(oe) == v) out.push_back(oe);
    return out;
}

bool Graph::connected() const {
    if (nv() == 0) return false;
    std::vector<bool> seen(nv(), false);
    std::deque<int> q{0};
    seen[0] = true;
    while (!q.empty()) {
        int v = q.front();
        q.pop_front();
        for (int oe : directions_at(v))
            if (!seen[term(oe)]) {
                seen[term(oe)] = true;
                q.push_back(term(oe));
            }
    }
    return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
}

Path reverse_path(const Path& p) {
    Path out(p.rbegin(), p.rend());
    for (int& oe : out) oe = Graph::rev(oe);
    return out;
}

bool composable(const Graph& g, const Path& p) {
    for (std::size_t i = 1; i < p.size(); ++i)
        if (g.term(p[i - 1]) != g.init(p[i])) return false;
    return true;
}

Path tighten(const Graph& g, const Path& p) {
    if (!composable(g, p)) throw std::invalid_argument("tighten: path is not composable");
    Path out;
    for (int oe : p) {
        if (!out.empty() && out.back() == Graph::rev(oe))
            out.pop_back();
        else
            out.push_back(oe);
    }
    return out;
}

int rank(const Graph& g) {
    if (!g.connected()) throw std::invalid_argument("rank: graph is disconnected");
    return g.ne() - g.nv() + 1;
}

Path GraphMap::image(int oe) const {
    const Path& p = emap.at(Graph::edge_of(oe));
    return Graph::reversed(oe) ? reverse_path(p) : p;
}

Path GraphMap::apply(const Path& p) const {
    Path out;
    for (int oe : p) {
        Path img = image(oe);
        out.insert(out.end(), img.begin(), img.end());
    }
    return out;
}

void GraphMap::check() const {
    if (int(vmap.size()) != dom.nv() || int(emap.size()) != dom.ne())
        throw InvariantError("graph map: table sizes do not match the domain");
    for (int e = 0; e < dom.ne(); ++e) {
        const Path& p = emap[e];
        if (p.empty()) throw InvariantError("graph map: edge " + dom.enames[e] + " maps to an empty path");
        if (!composable(cod, p)) throw InvariantError("graph map: image of " + dom.enames[e] + " is not a path");
        if (cod.init(p.front()) != vmap[dom.src[e]] || cod.term(p.back()) != vmap[dom.dst[e]])
            throw InvariantError("graph map: image of " + dom.enames[e] + " has wrong endpoints");
    }
}

std::string GraphMap::format() const {
    std::string out;
    for (int e = 0; e < dom.ne(); ++e) out += dom.enames[e] + " -> " + cod.format_path(emap[e]) + "\n";
    return out;
}

GraphMap identity_map(const Graph& g) {
    GraphMap f;
    f.dom = f.cod = g;
    f.vmap.resize(g.nv());
    std::iota(f.vmap.begin(), f.vmap.end(), 0);
    for (int e = 0; e < g.ne(); ++e) f.emap.push_back({Graph::fwd(e)});
    return f;
}

GraphMap compose(const GraphMap& f, const GraphMap& g) {
    if (g.cod.vnames != f.dom.vnames || g.cod.enames != f.dom.enames)
        throw std::invalid_argument("compose: codomain and domain differ");
    GraphMap h;
    h.dom = g.dom;
    h.cod = f.cod;
    for (int v : g.vmap) h.vmap.push_back(f.vmap[v]);
    for (const Path& p : g.emap) h.emap.push_back(f.apply(p));
    return h;
}

Path SpanningTree::path_to(const Graph& g, int v) const {
    Path p;
    while (parent[v] >= 0) {
        p.push_back(parent[v]);
        v = g.init(parent[v]);
    }
    std::reverse(p.begin(), p.end());
    return p;
}

SpanningTree bfs_tree(const Graph& g) {
    SpanningTree t;
    std::vector<int> order(g.nv());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return g.vnames[a] < g.vnames[b]; });
    t.root = order.front();
    t.parent.assign(g.nv(), -1);
    t.in_tree.assign(g.ne(), false);
    std::vector<bool> seen(g.nv(), false);
    seen[t.root] = true;
    std::deque<int> q{t.root};
    while (!q.empty()) {
        int v = q.front();
        q.pop_front();
        std::vector<int> dirs = g.directions_at(v);
        std::sort(dirs.begin(), dirs.end(), [&](int a, int b) {
            const auto& na = g.enames[Graph::edge_of(a)];
            const auto& nb = g.enames[Graph::edge_of(b)];
            return na != nb ? na < nb : a < b;
        });
        for (int oe : dirs) {
            int w = g.term(oe);
            if (seen[w]) continue;
            seen[w] = true;
            t.parent[w] = oe;
            t.in_tree[Graph::edge_of(oe)] = true;
            q.push_back(w);
        }
    }
    return t;
}

SpanningTree tree_from_edges(const Graph& g, const std::vector<std::string>& edges, int root) {
    SpanningTree t;
    t.root = root;
    t.parent.assign(g.nv(), -1);
    t.in_tree.assign(g.ne(), false);
    for (const auto& n : edges) {
        int e = g.edge(n);
        if (e < 0) throw std::invalid_argument("tree: unknown edge " + n);
        t.in_tree[e] = true;
    }
    std::vector<bool> seen(g.nv(), false);
    seen[root] = true;
    std::deque<int> q{root};
    int reached = 1;
    while (!q.empty()) {
        int v = q.front();
        q.pop_front();
        for (int oe : g.directions_at(v)) {
            if (!t.in_tree[Graph::edge_of(oe)]) continue;
            int w = g.term(oe);
            if (seen[w]) {
                if (t.parent[v] != Graph::rev(oe)) throw std::invalid_argument("tree: edges contain a cycle");
                continue;
            }
            seen[w] = true;
            ++reached;
            t.parent[w] = oe;
            q.push_back(w);
        }
    }
    if (reached != g.nv()) throw std::invalid_argument("tree: edges do not span the graph");
    return t;
}

namespace {

// kappa: delete tree edges, read the rest as letters (non-tree edge i -> letter).
Word collapse(const SpanningTree& t, const std::vector<int>& letter, const Path& p) {
    Word w;
    for (int oe : p) {
        int e = Graph::edge_of(oe);
        if (t.in_tree[e]) continue;
        w.push_back(Graph::reversed(oe) ? -letter[e] : letter[e]);
    }
    return reduce(w);
}

}  // namespace

InducedAutomorphism map_to_automorphism(const GraphMap& f, const MarkedGraph& m) {
    const Graph& g = f.dom;
    SpanningTree t = bfs_tree(g);
    std::vector<int> letter(g.ne(), 0);
    std::vector<std::string> rose;
    for (int e = 0; e < g.ne(); ++e)
        if (!t.in_tree[e]) {
            rose.push_back(g.enames[e]);
            letter[e] = int(rose.size());
        }
    if (rose.size() != m.gens.size())
        throw InvariantError("marking: rank of the graph differs from the number of generators");

    // rho = kappa o iota, a map F(gens) -> F(non-tree edges)
    FreeGroupMap rho;
    rho.gens = m.gens;
    for (const Path& loop : m.marking) {
        if (!composable(g, loop) || loop.empty() || g.init(loop.front()) != g.term(loop.back()))
            throw InvariantError("marking: image is not a closed path");
        rho.images.push_back(collapse(t, letter, loop));
    }
    Inversion inv = nielsen_invert(rho);
    if (!inv.verified) throw InvariantError("marking fails the homotopy-inverse word check");
    // inv.inverse is written over the generator alphabet but acts on edge letters.
    FreeGroupMap back;
    back.gens = rose;
    back.images = inv.inverse.images;

    InducedAutomorphism out;
    out.map.gens = m.gens;
    for (const Path& loop : m.marking) {
        Word w = collapse(t, letter, f.apply(loop));
        FreeGroupMap tmp = back;
        Word img = tmp.apply(w);
        out.map.images.push_back(img);
    }
    for (int e = 0; e < g.ne(); ++e)
        if (t.in_tree[e]) out.tree.push_back(g.enames[e]);
    out.basepoint = g.vnames[t.root];
    out.note = "spanning tree by breadth-first search from " + out.basepoint;
    return out;
}

InducedAutomorphism tree_automorphism(const GraphMap& f, const SpanningTree& t) {
    const Graph& g = f.dom;
    std::vector<int> letter(g.ne(), 0);
    InducedAutomorphism out;
    std::vector<int> gens;
    for (int e = 0; e < g.ne(); ++e)
        if (!t.in_tree[e]) {
            out.map.gens.push_back(g.enames[e]);
            letter[e] = int(out.map.gens.size());
            gens.push_back(e);
        }
    for (int e : gens) {
        int oe = Graph::fwd(e);
        Path loop = t.path_to(g, g.init(oe));
        loop.push_back(oe);
        Path back = reverse_path(t.path_to(g, g.term(oe)));
        loop.insert(loop.end(), back.begin(), back.end());
        out.map.images.push_back(collapse(t, letter, f.apply(loop)));
    }
    for (int e = 0; e < g.ne(); ++e)
        if (t.in_tree[e]) out.tree.push_back(g.enames[e]);
    out.basepoint = g.vnames[t.root];
    out.note = "generators are the edges outside the tree";
    return out;
}

FreeGroupMap induced_hom(const GraphMap& p, const SpanningTree& t, const MarkedGraph& m) {
    const Graph& g = p.dom;
    const Graph& h = p.cod;
    SpanningTree th = bfs_tree(h);
    std::vector<int> hl(h.ne(), 0);
    std::vector<std::string> rose;
    for (int e = 0; e < h.ne(); ++e)
        if (!th.in_tree[e]) {
            rose.push_back(h.enames[e]);
            hl[e] = int(rose.size());
        }
    if (rose.size() != m.gens.size()) throw InvariantError("marking: rank of the graph differs from the number of generators");
    FreeGroupMap rho;
    rho.gens = m.gens;
    for (const Path& loop : m.marking) rho.images.push_back(collapse(th, hl, loop));
    Inversion inv = nielsen_invert(rho);
    if (!inv.verified) throw InvariantError("marking fails the homotopy-inverse word check");
    FreeGroupMap back;
    back.gens = rose;
    back.images = inv.inverse.images;

    FreeGroupMap out;
    for (int e = 0; e < g.ne(); ++e) {
        if (t.in_tree[e]) continue;
        out.gens.push_back(g.enames[e]);
        int oe = Graph::fwd(e);
        Path loop = t.path_to(g, g.init(oe));
        loop.push_back(oe);
        Path ret = reverse_path(t.path_to(g, g.term(oe)));
        loop.insert(loop.end(), ret.begin(), ret.end());
        out.images.push_back(back.apply(collapse(th, hl, p.apply(loop))));
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

MapFile parse_map_text(const std::string& text) {
    MapFile mf;
    std::istringstream in(text);
    std::string line;
    std::vector<std::pair<std::string, std::string>> images, vmaps, markings, expects;
    std::vector<std::string> gens;
    int lineno = 0;
    auto fail = [&](const std::string& msg) { throw ParseError("line " + std::to_string(lineno) + ": " + msg); };
    while (std::getline(in, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        std::string rest;
        std::getline(ls, rest);
        std::istringstream rs(rest);
        if (key == "name") {
            mf.name = rest.substr(rest.find_first_not_of(' ') == std::string::npos ? 0 : rest.find_first_not_of(' '));
        } else if (key == "vertices") {
            std::string v;
            while (rs >> v) mf.graph.add_vertex(v);
        } else if (key == "edge") {
            std::string n, a, b, extra;
            if (!(rs >> n >> a >> b) || (rs >> extra)) fail("expected: edge <name> <from> <to>");
            int ia = mf.graph.vertex(a), ib = mf.graph.vertex(b);
            if (ia < 0 || ib < 0) fail("unknown vertex in edge " + n);
            if (mf.graph.edge(n) >= 0) fail("duplicate edge " + n);
            mf.graph.add_edge(n, ia, ib);
        } else if (key == "vmap") {
            std::string a, b;
            if (!(rs >> a >> b)) fail("expected: vmap <vertex> <vertex>");
            vmaps.emplace_back(a, b);
        } else if (key == "image") {
            std::string n;
            if (!(rs >> n)) fail("expected: image <edge> <path>");
            std::string p;
            std::getline(rs, p);
            images.emplace_back(n, p);
        } else if (key == "generators") {
            std::string g;
            while (rs >> g) gens.push_back(g);
        } else if (key == "marking" || key == "expect") {
            std::string n, p;
            if (!(rs >> n)) fail("expected: " + key + " <generator> <word>");
            std::getline(rs, p);
            (key == "marking" ? markings : expects).emplace_back(n, p);
        } else if (key == "cycle") {
            std::string n;
            if (!(rs >> n)) fail("expected: cycle <name> <coef> <cell> ...");
            std::string c, cell;
            auto& terms = mf.cycles[n];
            while (rs >> c) {
                if (!(rs >> cell)) fail("cycle terms come in pairs");
                try {
                    terms.emplace_back(std::stol(c), cell);
                } catch (const std::exception&) {
                    fail("bad coefficient " + c);
                }
            }
        } else {
            fail("unknown keyword " + key);
        }
    }
    Graph& g = mf.graph;
    if (g.nv() == 0 || g.ne() == 0) throw ParseError("graph has no vertices or no edges");
    mf.map.dom = mf.map.cod = g;
    mf.map.emap.assign(g.ne(), {});
    std::vector<bool> have(g.ne(), false);
    for (auto& [n, p] : images) {
        int e = g.edge(n);
        if (e < 0) throw ParseError("image for unknown edge " + n);
        mf.map.emap[e] = g.parse_path(p);
        have[e] = true;
    }
    for (int e = 0; e < g.ne(); ++e)
        if (!have[e]) throw ParseError("missing image for edge " + g.enames[e]);
    mf.map.vmap.assign(g.nv(), -1);
    for (auto& [a, b] : vmaps) {
        int ia = g.vertex(a), ib = g.vertex(b);
        if (ia < 0 || ib < 0) throw ParseError("vmap names an unknown vertex");
        mf.map.vmap[ia] = ib;
    }
    for (int e = 0; e < g.ne(); ++e) {
        const Path& p = mf.map.emap[e];
        if (p.empty()) throw ParseError("edge " + g.enames[e] + " has an empty image");
        for (auto [v, w] : {std::pair{g.src[e], g.init(p.front())}, std::pair{g.dst[e], g.term(p.back())}}) {
            if (mf.map.vmap[v] < 0) mf.map.vmap[v] = w;
            if (mf.map.vmap[v] != w) throw ParseError("vertex images disagree at " + g.vnames[v]);
        }
    }
    for (int v = 0; v < g.nv(); ++v)
        if (mf.map.vmap[v] < 0) throw ParseError("no image for vertex " + g.vnames[v]);
    try {
        mf.map.check();
    } catch (const InvariantError& e) {
        throw ParseError(e.what());
    }
    if (!markings.empty()) {
        if (gens.empty()) throw ParseError("marking given without generators");
        MarkedGraph m;
        m.gens = gens;
        m.marking.assign(gens.size(), {});
        for (auto& [n, p] : markings) {
            auto it = std::find(gens.begin(), gens.end(), n);
            if (it == gens.end()) throw ParseError("marking for unknown generator " + n);
            m.marking[it - gens.begin()] = g.parse_path(p);
        }
        mf.marked = m;
    }
    if (!expects.empty()) {
        FreeGroupMap phi = FreeGroupMap::identity(gens);
        for (auto& [n, w] : expects) {
            auto it = std::find(gens.begin(), gens.end(), n);
            if (it == gens.end()) throw ParseError("expect for unknown generator " + n);
            phi.images[it - gens.begin()] = parse_word(w, gens);
        }
        mf.expected = phi;
    }
    return mf;
}

MapFile read_map_file(const std::string& path) { return parse_map_text(read_text_file(path)); }

}  // namespace fbc
