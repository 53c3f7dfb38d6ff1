#include "fbc/folding.hpp"

#include <algorithm>
#include <numeric>
#include <tuple>

#include "fbc/common.hpp"
#include "json.hpp"

namespace fbc {

Subdivision subdivide_at_preimages(const GraphMap& f) {
    const Graph& base = f.dom;
    Subdivision s;
    Graph& g = s.g0.g;
    for (const auto& v : base.vnames) g.add_vertex(v);
    s.pieces_of.resize(base.ne());
    for (int e = 0; e < base.ne(); ++e) {
        const Path& img = f.emap[e];
        int len = int(img.size());
        std::vector<int> pts{base.src[e]};
        for (int i = 1; i < len; ++i) pts.push_back(g.add_vertex(base.enames[e] + ":" + std::to_string(i)));
        pts.push_back(base.dst[e]);
        for (int i = 0; i < len; ++i) {
            int lab = img[i];
            bool rev = Graph::reversed(lab);
            std::string name = len == 1 ? base.enames[e] : base.enames[e] + "." + std::to_string(i + 1);
            int id = rev ? g.add_edge(name, pts[i + 1], pts[i]) : g.add_edge(name, pts[i], pts[i + 1]);
            s.g0.label.push_back(Graph::edge_of(lab));
            s.pieces.push_back({e, i, len, rev});
            s.pieces_of[e].push_back(id);
        }
    }
    s.relabel.dom = g;
    s.relabel.cod = f.cod;
    for (int v = 0; v < g.nv(); ++v) s.relabel.vmap.push_back(-1);
    for (int x = 0; x < g.ne(); ++x) {
        s.relabel.emap.push_back({Graph::fwd(s.g0.label[x])});
        s.relabel.vmap[g.src[x]] = f.cod.src[s.g0.label[x]];
        s.relabel.vmap[g.dst[x]] = f.cod.dst[s.g0.label[x]];
    }
    s.pi.dom = base;
    s.pi.cod = g;
    s.pi.vmap.resize(base.nv());
    std::iota(s.pi.vmap.begin(), s.pi.vmap.end(), 0);
    for (int e = 0; e < base.ne(); ++e) {
        Path p;
        for (int x : s.pieces_of[e]) p.push_back(s.pieces[x].reversed ? Graph::rev(Graph::fwd(x)) : Graph::fwd(x));
        s.pi.emap.push_back(p);
    }
    return s;
}

namespace {

struct Candidate {
    std::string vname, lname, n1, n2;
    int v, d1, d2;
    bool operator<(const Candidate& o) const {
        return std::tie(vname, lname, n1, n2) < std::tie(o.vname, o.lname, o.n1, o.n2);
    }
};

std::vector<Candidate> candidates(const LabeledGraph& lg, const Graph& base) {
    std::vector<Candidate> out;
    const Graph& g = lg.g;
    for (int v = 0; v < g.nv(); ++v) {
        std::vector<int> dirs = g.directions_at(v);
        for (std::size_t i = 0; i < dirs.size(); ++i)
            for (std::size_t j = i + 1; j < dirs.size(); ++j) {
                int a = dirs[i], b = dirs[j];
                if (Graph::edge_of(a) == Graph::edge_of(b)) continue;
                if (lg.olabel(a) != lg.olabel(b)) continue;
                std::string na = g.enames[Graph::edge_of(a)], nb = g.enames[Graph::edge_of(b)];
                if (nb < na) {
                    std::swap(a, b);
                    std::swap(na, nb);
                }
                out.push_back({g.vnames[v], base.oname(lg.olabel(a)), na, nb, v, a, b});
            }
    }
    return out;
}

// Applies a fold, returning the next level.
LabeledGraph apply_fold(const LabeledGraph& lg, Fold& fd) {
    const Graph& g = lg.g;
    int t1 = g.term(fd.d1), t2 = g.term(fd.d2);
    if (t1 == t2) throw InvariantError("fold at " + g.vnames[fd.vertex] + " would collapse a loop");
    int e1 = Graph::edge_of(fd.d1), e2 = Graph::edge_of(fd.d2);
    LabeledGraph out;
    fd.vq.assign(g.nv(), -1);
    for (int v = 0; v < g.nv(); ++v) {
        if (v == t2) continue;
        std::string name = v == t1 ? g.vnames[t1] + "~" + g.vnames[t2] : g.vnames[v];
        fd.vq[v] = out.g.add_vertex(name);
    }
    fd.vq[t2] = fd.vq[t1];
    fd.merged_vertex = fd.vq[t1];
    fd.eq.assign(g.ne(), -1);
    for (int e = 0; e < g.ne(); ++e) {
        if (e == e2) continue;
        fd.eq[e] = out.g.add_edge(g.enames[e], fd.vq[g.src[e]], fd.vq[g.dst[e]]);
        out.label.push_back(lg.label[e]);
    }
    fd.eq[e2] = fd.eq[e1];
    fd.merged_edge = fd.eq[e1];
    return out;
}

}  // namespace

FoldSequence decompose(const GraphMap& f, FoldPolicy policy) {
    const Graph& base = f.dom;
    FoldSequence s;
    s.f = f;
    s.policy = policy;
    Subdivision sub = subdivide_at_preimages(f);
    s.pieces = sub.pieces;
    s.pieces_of = sub.pieces_of;
    s.levels.push_back(sub.g0);
    int guard = sub.g0.g.ne() + 1;
    while (guard-- > 0) {
        const LabeledGraph& cur = s.levels.back();
        auto cands = candidates(cur, base);
        if (cands.empty()) break;
        const Candidate& c = policy == FoldPolicy::LexLeast ? *std::min_element(cands.begin(), cands.end())
                                                            : *std::max_element(cands.begin(), cands.end());
        Fold fd;
        fd.vertex = c.v;
        fd.d1 = c.d1;
        fd.d2 = c.d2;
        fd.olabel = cur.olabel(c.d1);
        LabeledGraph next = apply_fold(cur, fd);
        s.folds.push_back(fd);
        s.levels.push_back(std::move(next));
    }
    // The final labeled graph must be a copy of the base graph.
    const LabeledGraph& last = s.levels.back();
    const Graph& g = last.g;
    s.h_e.assign(g.ne(), -1);
    s.h_v.assign(g.nv(), -1);
    std::vector<int> used(base.ne(), 0);
    bool ok = g.ne() == base.ne() && g.nv() == base.nv();
    for (int e = 0; e < g.ne() && ok; ++e) {
        int b = last.label[e];
        s.h_e[e] = b;
        if (used[b]++) ok = false;
        for (auto [x, y] : {std::pair{g.src[e], base.src[b]}, std::pair{g.dst[e], base.dst[b]}}) {
            if (s.h_v[x] >= 0 && s.h_v[x] != y) ok = false;
            s.h_v[x] = y;
        }
    }
    if (ok) {
        std::vector<int> vs = s.h_v;
        std::sort(vs.begin(), vs.end());
        ok = vs.front() >= 0 && std::adjacent_find(vs.begin(), vs.end()) == vs.end();
    }
    if (!ok) throw FoldStuck("no fold available and the folded graph is not a copy of the base graph", last);
    return s;
}

GraphMap fold_map(const FoldSequence& s, int m) {
    const Fold& fd = s.folds.at(m);
    GraphMap q;
    q.dom = s.levels[m].g;
    q.cod = s.levels[m + 1].g;
    q.vmap = fd.vq;
    for (int e : fd.eq) q.emap.push_back({Graph::fwd(e)});
    return q;
}

GraphMap pi_map(const FoldSequence& s) {
    GraphMap p;
    p.dom = s.base();
    p.cod = s.levels[0].g;
    p.vmap.resize(p.dom.nv());
    std::iota(p.vmap.begin(), p.vmap.end(), 0);
    for (int e = 0; e < p.dom.ne(); ++e) {
        Path path;
        for (int x : s.pieces_of[e]) path.push_back(s.pieces[x].reversed ? Graph::rev(Graph::fwd(x)) : Graph::fwd(x));
        p.emap.push_back(path);
    }
    return p;
}

GraphMap h_map(const FoldSequence& s) {
    GraphMap h;
    h.dom = s.levels.back().g;
    h.cod = s.base();
    h.vmap = s.h_v;
    for (int e : s.h_e) h.emap.push_back({Graph::fwd(e)});
    return h;
}

bool verify(const FoldSequence& s, const GraphMap& f, std::string* why) {
    auto fail = [&](const std::string& m) {
        if (why) *why = m;
        return false;
    };
    try {
        if (s.levels.size() != s.folds.size() + 1) return fail("level count does not match fold count");
        for (std::size_t m = 0; m < s.folds.size(); ++m) {
            const Fold& fd = s.folds[m];
            const LabeledGraph& lg = s.levels[m];
            if (lg.g.init(fd.d1) != fd.vertex || lg.g.init(fd.d2) != fd.vertex)
                return fail("fold " + std::to_string(m + 1) + ": edges do not share the fold vertex");
            if (lg.olabel(fd.d1) != lg.olabel(fd.d2))
                return fail("fold " + std::to_string(m + 1) + ": edges carry different labels");
            if (s.levels[m + 1].g.ne() != lg.g.ne() - 1)
                return fail("fold " + std::to_string(m + 1) + ": edge count does not drop by one");
            GraphMap q = fold_map(s, int(m));
            q.check();
            for (int e = 0; e < lg.g.ne(); ++e)
                if (s.levels[m + 1].label[q.emap[e][0] >> 1] != lg.label[e])
                    return fail("fold " + std::to_string(m + 1) + ": labels not preserved");
        }
        GraphMap acc = pi_map(s);
        for (int m = 0; m < s.length(); ++m) acc = compose(fold_map(s, m), acc);
        acc = compose(h_map(s), acc);
        if (acc.vmap != f.vmap) return fail("recomposed vertex map differs");
        if (acc.emap != f.emap) return fail("recomposed edge images differ");
    } catch (const std::exception& e) {
        return fail(e.what());
    }
    return true;
}

AuxGraph aux_graph(const GraphMap& f) {
    int n = f.dom.ne();
    AuxGraph ag;
    ag.n = n;
    std::vector<std::vector<int>> cnt(n, std::vector<int>(n, 0));
    std::vector<int> col(n, 0);
    for (int i = 0; i < n; ++i)
        for (int oe : f.emap[i]) {
            ++cnt[i][Graph::edge_of(oe)];
            ++col[Graph::edge_of(oe)];
        }
    std::vector<std::vector<int>> out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (cnt[i][j] == 1 && col[j] == 1) {
                ag.arcs.emplace_back(i, j);
                out[i].push_back(j);
            }
    // depth-first search for a cycle, else a topological order
    std::vector<int> state(n, 0), stack, order;
    std::vector<int> parent(n, -1);
    for (int r = 0; r < n && ag.cycle.empty(); ++r) {
        if (state[r]) continue;
        std::vector<std::pair<int, std::size_t>> st{{r, 0}};
        state[r] = 1;
        while (!st.empty() && ag.cycle.empty()) {
            auto& [v, k] = st.back();
            if (k < out[v].size()) {
                int w = out[v][k++];
                if (state[w] == 1) {
                    for (auto it = st.rbegin(); it != st.rend(); ++it) {
                        ag.cycle.push_back(it->first);
                        if (it->first == w) break;
                    }
                    std::reverse(ag.cycle.begin(), ag.cycle.end());
                } else if (state[w] == 0) {
                    state[w] = 1;
                    st.push_back({w, 0});
                }
            } else {
                state[v] = 2;
                order.push_back(v);
                st.pop_back();
            }
        }
    }
    if (ag.cycle.empty()) ag.topo_order.assign(order.rbegin(), order.rend());
    return ag;
}

std::string fold_sequence_json(const FoldSequence& s) {
    using nlohmann::json;
    json j;
    const Graph& base = s.base();
    j["policy"] = s.policy == FoldPolicy::LexLeast ? "lex-least" : "lex-greatest";
    json levels = json::array();
    for (const auto& lg : s.levels) {
        json L;
        L["vertices"] = lg.g.vnames;
        json edges = json::array();
        for (int e = 0; e < lg.g.ne(); ++e)
            edges.push_back({{"name", lg.g.enames[e]},
                             {"from", lg.g.vnames[lg.g.src[e]]},
                             {"to", lg.g.vnames[lg.g.dst[e]]},
                             {"label", base.enames[lg.label[e]]}});
        L["edges"] = edges;
        levels.push_back(L);
    }
    j["levels"] = levels;
    json folds = json::array();
    for (std::size_t m = 0; m < s.folds.size(); ++m) {
        const Fold& fd = s.folds[m];
        const Graph& g = s.levels[m].g;
        folds.push_back({{"index", m + 1},
                         {"vertex", g.vnames[fd.vertex]},
                         {"edges", {g.oname(fd.d1), g.oname(fd.d2)}},
                         {"label", base.oname(fd.olabel)}});
    }
    j["folds"] = folds;
    json h;
    const Graph& last = s.levels.back().g;
    for (int v = 0; v < last.nv(); ++v) h["vertices"][last.vnames[v]] = base.vnames[s.h_v[v]];
    for (int e = 0; e < last.ne(); ++e) h["edges"][last.enames[e]] = base.enames[s.h_e[e]];
    j["h"] = h;
    return j.dump(2);
}

}  // namespace fbc
