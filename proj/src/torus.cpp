#include "fbc/torus.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace fbc {

std::vector<std::pair<int, int>> Fine2Cell::boundary() const {
    std::vector<std::pair<int, int>> b;
    for (const auto& c : bottom) b.emplace_back(c.cell, c.sign);
    if (right >= 0) b.emplace_back(right, 1);
    for (auto it = top.rbegin(); it != top.rend(); ++it) b.emplace_back(it->cell, -it->sign);
    if (left >= 0) b.emplace_back(left, -1);
    return b;
}

int TrapComplex::skew_count() const {
    return int(std::count_if(c1.begin(), c1.end(), [](const Coarse1Cell& c) { return c.kind == Coarse1Cell::Skew; }));
}

int TrapComplex::find1(const std::string& name) const {
    for (std::size_t i = 0; i < c1.size(); ++i)
        if (c1[i].name == name) return int(i);
    return -1;
}

int TrapComplex::vertex_point(int level, int v) const { return vid.at(level).at(v); }

int TrapComplex::mark_point(int level, int edge, const Q& x) const {
    const auto& m = marks.at(level).at(edge);
    auto it = std::lower_bound(m.begin(), m.end(), x);
    if (it == m.end() || *it != x) return -1;
    return mid[level][edge][it - m.begin()];
}

int TrapComplex::skew_point(int slab, const Q& s) const {
    const Fold& f = seq.folds.at(slab - 1);
    if (s == 0) return vid[slab - 1][f.vertex];
    if (s == 1) return vid[slab][f.merged_vertex];
    const auto& m = skew_marks.at(slab);
    auto it = std::lower_bound(m.begin(), m.end(), s);
    if (it == m.end() || *it != s) return -1;
    return sid[slab][it - m.begin()];
}

int TrapComplex::vertical_above(int point) const { return up.at(point); }

Q TrapComplex::time(int i) const {
    const Fine1Cell& c = cells1.at(i);
    switch (c.kind) {
        case Fine1Cell::Horizontal: return 0;
        case Fine1Cell::Vertical: return frac(1, k);
        case Fine1Cell::Partial: return (1 - c.s0) / k;
        case Fine1Cell::Skew: return (c.s1 - c.s0) / k;
    }
    return 0;
}

namespace {

struct Builder {
    const FoldSequence& seq;
    TrapComplex& X;
    int k;
    const Graph& base;
    const Graph& g0;
    std::vector<int> hv_inv, he_inv;
    std::vector<std::pair<int, int>> subdiv;  // Gamma_0 vertex -> (base edge, index) for subdivision points
    std::vector<std::vector<int>> pre_e, pre_v;  // [slab][edge or vertex of level m] -> preimage, -1 if none or two
    std::vector<std::vector<std::set<Q>>> mk;
    std::vector<std::set<Q>> smk;

    Builder(const FoldSequence& s, TrapComplex& x)
        : seq(s), X(x), k(s.length()), base(s.base()), g0(s.levels[0].g) {}

    const Fold& fold(int m) const { return seq.folds[m - 1]; }
    const Graph& lg(int j) const { return seq.levels[j].g; }
    bool fold_reversed(int m) const { return Graph::reversed(fold(m).d1); }

    void tables() {
        hv_inv.assign(base.nv(), -1);
        he_inv.assign(base.ne(), -1);
        for (std::size_t v = 0; v < seq.h_v.size(); ++v) hv_inv[seq.h_v[v]] = int(v);
        for (std::size_t e = 0; e < seq.h_e.size(); ++e) he_inv[seq.h_e[e]] = int(e);
        subdiv.assign(g0.nv(), {-1, -1});
        for (int E = 0; E < base.ne(); ++E) {
            const auto& ps = seq.pieces_of[E];
            for (std::size_t i = 0; i + 1 < ps.size(); ++i) {
                int p = ps[i];
                int end = seq.pieces[p].reversed ? g0.src[p] : g0.dst[p];
                subdiv[end] = {E, int(i) + 1};
            }
        }
        pre_e.assign(k + 1, {});
        pre_v.assign(k + 1, {});
        for (int m = 1; m <= k; ++m) {
            const Fold& f = fold(m);
            pre_e[m].assign(lg(m).ne(), -1);
            pre_v[m].assign(lg(m).nv(), -1);
            for (std::size_t e = 0; e < f.eq.size(); ++e)
                if (f.eq[e] != f.merged_edge) pre_e[m][f.eq[e]] = int(e);
            for (std::size_t v = 0; v < f.vq.size(); ++v)
                if (f.vq[v] != f.merged_vertex) pre_v[m][f.vq[v]] = int(v);
        }
    }

    // Level-k point on an edge, expressed on Gamma_0.
    LevelZeroPoint down(int g, const Q& x) const {
        int E = seq.h_e[g];
        const auto& ps = seq.pieces_of[E];
        Q t = x * int(ps.size());
        Q fl = floor_q(t);
        int i = int(fl.get_num().get_si());
        LevelZeroPoint r;
        if (t == fl) {
            int p = ps[i - 1];
            r.vertex = seq.pieces[p].reversed ? g0.src[p] : g0.dst[p];
            return r;
        }
        Q y = t - fl;
        r.piece = ps[i];
        r.x = seq.pieces[r.piece].reversed ? Q(1 - y) : y;
        return r;
    }

    // Level-0 point on a piece, expressed on Gamma_k.
    std::pair<int, Q> lift(int piece, const Q& y) const {
        const Piece& p = seq.pieces[piece];
        Q along = (Q(p.index) + (p.reversed ? Q(1 - y) : y)) / p.count;
        return {he_inv[p.edge], along};
    }

    std::pair<int, Q> lift_vertex(int v) const {
        auto [E, i] = subdiv[v];
        return {he_inv[E], frac(i, int(seq.pieces_of[E].size()))};
    }

    std::deque<std::tuple<int, int, Q>> work;
    long inserted = 0;
    int budget = 0;

    void add(int j, int g, const Q& x) {
        if (!mk[j][g].insert(x).second) return;
        if (++inserted > budget)
            throw InvariantError("backward closure of subdivision points exceeded " + std::to_string(budget) + " marks");
        if (j == 0) {
            auto [gk, xk] = lift(g, x);
            add(k, gk, xk);
        } else {
            work.emplace_back(j, g, x);
        }
    }

    void closure() {
        mk.assign(k + 1, {});
        for (int j = 0; j <= k; ++j) mk[j].assign(lg(j).ne(), {});
        smk.assign(k + 1, {});
        for (int v = base.nv(); v < g0.nv(); ++v) {
            auto [g, x] = lift_vertex(v);
            add(k, g, x);
        }
        while (!work.empty()) {
            auto [m, g, x] = work.front();
            work.pop_front();
            const Fold& f = fold(m);
            if (g == f.merged_edge) {
                smk[m].insert(fold_reversed(m) ? Q(1 - x) : x);
                continue;
            }
            add(m - 1, pre_e[m][g], x);
        }
        X.marks.assign(k + 1, {});
        for (int j = 0; j <= k; ++j)
            for (const auto& s : mk[j]) X.marks[j].emplace_back(s.begin(), s.end());
        X.skew_marks.assign(k + 1, {});
        for (int m = 1; m <= k; ++m) X.skew_marks[m].assign(smk[m].begin(), smk[m].end());
        for (int m = 1; m <= k; ++m) {
            const Fold& f = fold(m);
            for (int e : {Graph::edge_of(f.d1), Graph::edge_of(f.d2)})
                if (!X.marks[m - 1][e].empty()) throw InvariantError("a mark landed on a folded edge");
        }
    }

    int add_point(FinePoint p) {
        X.points.push_back(std::move(p));
        return int(X.points.size()) - 1;
    }

    void points() {
        X.vid.assign(k + 1, {});
        X.mid.assign(k + 1, {});
        for (int j = 0; j < k; ++j) {
            for (int v = 0; v < lg(j).nv(); ++v) X.vid[j].push_back(add_point({FinePoint::Vertex, j, v, -1, 0}));
            X.mid[j].resize(lg(j).ne());
            for (int g = 0; g < lg(j).ne(); ++g)
                for (const Q& x : X.marks[j][g]) X.mid[j][g].push_back(add_point({FinePoint::Mark, j, -1, g, x}));
        }
        // level k reuses level 0
        for (int v = 0; v < lg(k).nv(); ++v) X.vid[k].push_back(X.vid[0][seq.h_v[v]]);
        X.mid[k].resize(lg(k).ne());
        for (int g = 0; g < lg(k).ne(); ++g)
            for (const Q& x : X.marks[k][g]) {
                LevelZeroPoint z = down(g, x);
                X.mid[k][g].push_back(z.vertex >= 0 ? X.vid[0][z.vertex] : X.mark_point(0, z.piece, z.x));
                if (X.mid[k][g].back() < 0)
                    throw InvariantError("level-k mark " + lg(k).enames[g] + "@" + x.get_str() + " has no level-0 counterpart (piece " + g0.enames[z.piece] + "@" + z.x.get_str() + ")");
            }
        // the converse: every level-0 point other than a base vertex is a level-k mark
        std::size_t count0 = g0.nv() - base.nv();
        for (const auto& m : X.marks[0]) count0 += m.size();
        std::size_t countk = 0;
        for (const auto& m : X.marks[k]) countk += m.size();
        if (count0 != countk) throw InvariantError("level 0 and level k fine points disagree");
        X.sid.assign(k + 1, {});
        for (int m = 1; m <= k; ++m)
            for (const Q& s : X.skew_marks[m]) X.sid[m].push_back(add_point({FinePoint::Skew, m, -1, -1, s}));
    }

    int add_cell(Fine1Cell c) {
        X.cells1.push_back(std::move(c));
        return int(X.cells1.size()) - 1;
    }

    // Points along a level edge in label direction.
    std::vector<int> along(int j, int g) const {
        std::vector<int> pts{X.vid[j][lg(j).src[g]]};
        for (int p : X.mid[j][g]) pts.push_back(p);
        pts.push_back(X.vid[j][lg(j).dst[g]]);
        return pts;
    }

    // Horizontal piece i of edge g at level j with its sign relative to label direction.
    std::pair<int, int> horiz(int j, int g, int i) const {
        if (j < k) return {X.hid[j][g][i], 1};
        const auto& m = X.marks[k][g];
        Q a = i == 0 ? Q(0) : m[i - 1];
        Q b = i == int(m.size()) ? Q(1) : m[i];
        LevelZeroPoint z = down(g, (a + b) / 2);
        if (z.piece < 0) throw InvariantError("level-k piece midpoint is a vertex");
        const auto& m0 = X.marks[0][z.piece];
        int idx = int(std::lower_bound(m0.begin(), m0.end(), z.x) - m0.begin());
        return {X.hid[0][z.piece][idx], seq.pieces[z.piece].reversed ? -1 : 1};
    }

    std::vector<std::vector<int>> skew_cells;  // [slab] pieces in s order

    void cells() {
        X.hid.assign(k, {});
        for (int j = 0; j < k; ++j) {
            X.hid[j].resize(lg(j).ne());
            for (int g = 0; g < lg(j).ne(); ++g) {
                auto pts = along(j, g);
                for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
                    Fine1Cell c;
                    c.kind = Fine1Cell::Horizontal;
                    c.from = pts[i];
                    c.to = pts[i + 1];
                    c.level = j;
                    c.edge = g;
                    c.index = int(i);
                    X.hid[j][g].push_back(add_cell(c));
                }
            }
        }
        X.up.assign(X.points.size(), -1);
        for (int m = 1; m <= k; ++m) {
            const Fold& f = fold(m);
            int j = m - 1;
            for (int v = 0; v < lg(j).nv(); ++v) {
                Fine1Cell c;
                c.kind = Fine1Cell::Vertical;
                c.from = X.vid[j][v];
                c.to = X.vid[m][f.vq[v]];
                c.level = m;
                X.up[c.from] = add_cell(c);
            }
            for (int g = 0; g < lg(j).ne(); ++g)
                for (std::size_t i = 0; i < X.marks[j][g].size(); ++i) {
                    Fine1Cell c;
                    c.kind = Fine1Cell::Vertical;
                    c.from = X.mid[j][g][i];
                    c.to = X.mark_point(m, f.eq[g], X.marks[j][g][i]);
                    c.level = m;
                    if (c.to < 0) throw InvariantError("mark has no forward image");
                    X.up[c.from] = add_cell(c);
                }
            bool rev = fold_reversed(m);
            for (std::size_t i = 0; i < X.skew_marks[m].size(); ++i) {
                const Q& s = X.skew_marks[m][i];
                Fine1Cell c;
                c.kind = Fine1Cell::Partial;
                c.from = X.sid[m][i];
                c.to = X.mark_point(m, f.merged_edge, rev ? Q(1 - s) : s);
                c.level = m;
                c.s0 = s;
                if (c.to < 0) throw InvariantError("skew mark has no image on the folded edge");
                X.up[c.from] = add_cell(c);
            }
        }
        skew_cells.assign(k + 1, {});
        for (int m = 1; m <= k; ++m) {
            std::vector<Q> ss{0};
            for (const Q& s : X.skew_marks[m]) ss.push_back(s);
            ss.push_back(1);
            for (std::size_t i = 0; i + 1 < ss.size(); ++i) {
                Fine1Cell c;
                c.kind = Fine1Cell::Skew;
                c.from = X.skew_point(m, ss[i]);
                c.to = X.skew_point(m, ss[i + 1]);
                c.level = m;
                c.index = int(i);
                c.s0 = ss[i];
                c.s1 = ss[i + 1];
                skew_cells[m].push_back(add_cell(c));
            }
        }
    }

    void faces() {
        for (int m = 1; m <= k; ++m) {
            const Fold& f = fold(m);
            int j = m - 1;
            int e1 = Graph::edge_of(f.d1), e2 = Graph::edge_of(f.d2);
            for (int g = 0; g < lg(j).ne(); ++g) {
                if (g == e1 || g == e2) continue;
                int gi = f.eq[g];
                std::size_t n = X.hid[j][g].size();
                if (X.marks[m][gi].size() + 1 != n) throw InvariantError("square strip has mismatched pieces");
                for (std::size_t i = 0; i < n; ++i) {
                    const Fine1Cell& b = X.cells1[X.hid[j][g][i]];
                    auto [t, ts] = horiz(m, gi, int(i));
                    Fine2Cell c;
                    c.kind = Fine2Cell::Square;
                    c.slab = m;
                    c.bottom = {{X.hid[j][g][i], 1, 0, 1}};
                    c.top = {{t, ts, 0, 1}};
                    c.left = X.up[b.from];
                    c.right = X.up[b.to];
                    c.corner[0][0] = b.from;
                    c.corner[1][0] = b.to;
                    c.corner[0][1] = X.cells1[c.left].to;
                    c.corner[1][1] = X.cells1[c.right].to;
                    X.cells2.push_back(c);
                }
            }
            int vpt = X.vid[j][f.vertex], wpt = X.vid[m][f.merged_vertex];
            std::vector<SideCell> chain;
            for (int sc : skew_cells[m]) chain.push_back({sc, 1, X.cells1[sc].s0, X.cells1[sc].s1});
            for (int d : {f.d1, f.d2}) {
                int e = Graph::edge_of(d);
                if (X.hid[j][e].size() != 1) throw InvariantError("folded edge is subdivided");
                int tpt = X.vid[j][lg(j).term(d)];
                Fine2Cell c;
                c.kind = Fine2Cell::Lower;
                c.slab = m;
                c.bottom = {{X.hid[j][e][0], Graph::reversed(d) ? -1 : 1, 0, 1}};
                c.top = chain;
                c.right = X.up[tpt];
                c.corner[0][0] = c.corner[0][1] = vpt;
                c.corner[1][0] = tpt;
                c.corner[1][1] = wpt;
                X.cells2.push_back(c);
            }
            bool rev = fold_reversed(m);
            int r = int(X.skew_marks[m].size());
            for (int i = 0; i <= r; ++i) {
                const Fine1Cell& sk = X.cells1[skew_cells[m][i]];
                int idx = rev ? r - i : i;
                auto [t, ts] = horiz(m, f.merged_edge, idx);
                Fine2Cell c;
                c.kind = Fine2Cell::Upper;
                c.slab = m;
                c.bottom = {{skew_cells[m][i], 1, 0, 1}};
                c.top = {{t, rev ? -ts : ts, 0, 1}};
                c.left = i == 0 ? X.up[vpt] : X.up[sk.from];
                c.right = i == r ? -1 : X.up[sk.to];
                c.corner[0][0] = sk.from;
                c.corner[1][0] = sk.to;
                c.corner[0][1] = X.cells1[c.left].to;
                c.corner[1][1] = i == r ? wpt : X.cells1[c.right].to;
                X.cells2.push_back(c);
            }
        }
    }

    void constrain(int c) {
        if (c < 0) throw InvariantError("missing vertical in a constrained strand");
        X.cells1[c].constrained = true;
    }

    // Backward strands from the base vertices at level k, until a skew is hit.
    std::vector<std::vector<int>> back_chains;

    void constraints() {
        for (auto& c : X.cells1)
            if (c.kind == Fine1Cell::Skew) c.constrained = true;
        for (int p = 0; p < base.nv(); ++p) {
            int pt = X.vid[0][p];
            for (int m = 1; m <= k; ++m) {
                constrain(X.up[pt]);
                pt = X.cells1[X.up[pt]].to;
            }
        }
        back_chains.assign(base.nv(), {});
        long guard = 0;
        for (int p = 0; p < base.nv(); ++p) {
            int m = k;
            int v = hv_inv[p], g = -1;
            Q x;
            while (true) {
                if (++guard > budget) throw InvariantError("backward extension of a vertical did not reach a skew");
                const Fold& f = fold(m);
                int below;
                if (g < 0) {
                    if (v == f.merged_vertex) break;
                    v = pre_v[m][v];
                    below = X.up[X.vid[m - 1][v]];
                } else {
                    if (g == f.merged_edge) {
                        Q s = fold_reversed(m) ? Q(1 - x) : x;
                        below = X.up[X.skew_point(m, s)];
                        constrain(below);
                        back_chains[p].push_back(below);
                        break;
                    }
                    g = pre_e[m][g];
                    below = X.up[X.mark_point(m - 1, g, x)];
                }
                constrain(below);
                back_chains[p].push_back(below);
                --m;
                if (m > 0) continue;
                if (g < 0) {
                    if (v < base.nv()) break;
                    std::tie(g, x) = lift_vertex(v);
                } else {
                    std::tie(g, x) = lift(g, x);
                }
                m = k;
            }
        }
        // Forward lines of the skew endpoints up to the end of the period keep
        // every trapezoid down to a single bottom skew.
        fwd_chains.assign(base.nv(), {});
        for (int m = 1; m <= k; ++m)
            for (auto [j, pt] : {std::pair{m - 1, X.vid[m - 1][fold(m).vertex]}, std::pair{m, X.vid[m][fold(m).merged_vertex]}}) {
                std::vector<int> chain;
                for (; j < k; ++j) {
                    int c = X.up[pt];
                    constrain(c);
                    chain.push_back(c);
                    pt = X.cells1[c].to;
                }
                auto& dst = fwd_chains[X.points[pt].vertex];
                dst.insert(dst.end(), chain.begin(), chain.end());
            }
    }

    std::vector<std::vector<int>> fwd_chains;  // by the base vertex reached
    std::vector<int> c0_of;  // fine point -> coarse 0-cell

    void coarse_points() {
        c0_of.assign(X.points.size(), -1);
        auto add0 = [&](int pt, const std::string& name) {
            if (c0_of[pt] >= 0) return;
            c0_of[pt] = int(X.c0.size());
            X.c0.push_back({name, pt});
        };
        for (int m = 1; m <= k; ++m) add0(X.vid[m][fold(m).merged_vertex], "x" + std::to_string(m));
        for (int m = 1; m <= k; ++m) add0(X.vid[m - 1][fold(m).vertex], "y" + std::to_string(m));
        for (int p = 0; p < base.nv(); ++p) add0(X.vid[0][p], base.vnames[p]);
        for (int m = 1; m <= k; ++m)
            for (std::size_t i = 0; i < X.skew_marks[m].size(); ++i) {
                int pt = X.sid[m][i];
                if (X.cells1[X.up[pt]].constrained) add0(pt, "d" + std::to_string(m) + "@" + X.skew_marks[m][i].get_str());
            }
    }

    void coarse_cells() {
        // verticals
        for (std::size_t z = 0; z < X.c0.size(); ++z) {
            int pt = X.c0[z].fine;
            int c = X.up[pt];
            if (c < 0 || !X.cells1[c].constrained) continue;
            Coarse1Cell cc;
            cc.kind = Coarse1Cell::Vertical;
            cc.from = int(z);
            int guard = 0;
            while (true) {
                if (c < 0 || !X.cells1[c].constrained) throw InvariantError("constrained strand breaks off");
                if (++guard > int(X.cells1.size())) throw InvariantError("constrained strand never meets a 0-cell");
                cc.fine.push_back(c);
                X.cells1[c].coarse = int(X.c1.size());
                pt = X.cells1[c].to;
                if (c0_of[pt] >= 0) break;
                c = X.up[pt];
            }
            cc.to = c0_of[pt];
            X.c1.push_back(cc);
        }
        // skews, split at constrained feet
        for (int m = 1; m <= k; ++m) {
            std::vector<int> part;
            std::vector<Coarse1Cell> segs;
            for (int sc : skew_cells[m]) {
                part.push_back(sc);
                int end = X.cells1[sc].to;
                if (c0_of[end] >= 0) {
                    Coarse1Cell cc;
                    cc.kind = Coarse1Cell::Skew;
                    cc.slab = m;
                    cc.fine = part;
                    cc.from = c0_of[X.cells1[part.front()].from];
                    cc.to = c0_of[end];
                    segs.push_back(cc);
                    part.clear();
                }
            }
            for (std::size_t i = 0; i < segs.size(); ++i) {
                segs[i].name = "d" + std::to_string(m) + (segs.size() > 1 ? "." + std::to_string(i + 1) : "");
                for (int sc : segs[i].fine) X.cells1[sc].coarse = int(X.c1.size());
                X.c1.push_back(segs[i]);
            }
        }
        for (std::size_t i = 0; i < X.cells1.size(); ++i)
            if (X.cells1[i].constrained && X.cells1[i].coarse < 0)
                throw InvariantError("constrained fine cell outside every coarse cell");
    }

    void name_verticals() {
        std::vector<int> order(base.nv());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](int a, int b) { return base.vnames[a] < base.vnames[b]; });
        auto assign = [&](int p, const std::vector<int>& cells, const std::string& infix) {
            std::vector<int> fresh;
            for (int c : cells)
                if (X.c1[c].name.empty() && std::find(fresh.begin(), fresh.end(), c) == fresh.end()) fresh.push_back(c);
            for (std::size_t i = 0; i < fresh.size(); ++i)
                X.c1[fresh[i]].name =
                    base.vnames[p] + infix + (fresh.size() == 1 && infix.empty() ? "" : std::to_string(i + 1));
        };
        for (int p : order) {
            std::vector<int> cells;
            int pt = X.vid[0][p];
            for (int m = 1; m <= k; ++m) {
                int c = X.cells1[X.up[pt]].coarse;
                if (cells.empty() || cells.back() != c) cells.push_back(c);
                pt = X.cells1[X.up[pt]].to;
            }
            assign(p, cells, "");
        }
        for (int p : order) {
            std::vector<int> cells;
            for (auto it = back_chains[p].rbegin(); it != back_chains[p].rend(); ++it) {
                int c = X.cells1[*it].coarse;
                if (cells.empty() || cells.back() != c) cells.push_back(c);
            }
            assign(p, cells, "x");
        }
        for (int p : order) {
            std::vector<int> cells;
            for (int c : fwd_chains[p])
                if (cells.empty() || cells.back() != X.cells1[c].coarse) cells.push_back(X.cells1[c].coarse);
            assign(p, cells, "f");
        }
        int extra = 0;
        for (auto& c : X.c1)
            if (c.name.empty()) c.name = "z" + std::to_string(++extra);
    }

    static std::vector<std::pair<int, int>> flipped(std::vector<std::pair<int, int>> cyc) {
        std::reverse(cyc.begin(), cyc.end());
        for (auto& [c, s] : cyc) s = -s;
        return cyc;
    }

    void trapezoids() {
        int n2 = int(X.cells2.size());
        std::vector<std::vector<std::pair<int, int>>> inc(X.cells1.size());  // fine 1-cell -> (2-cell, sign)
        std::vector<std::vector<std::pair<int, int>>> bd(n2);
        for (int c = 0; c < n2; ++c) {
            bd[c] = X.cells2[c].boundary();
            for (auto [e, s] : bd[c]) inc[e].emplace_back(c, s);
        }
        std::vector<int> uf(n2);
        std::iota(uf.begin(), uf.end(), 0);
        std::function<int(int)> find = [&](int a) { return uf[a] == a ? a : uf[a] = find(uf[a]); };
        for (std::size_t e = 0; e < X.cells1.size(); ++e) {
            if (X.cells1[e].constrained) continue;
            for (auto [c, s] : inc[e]) uf[find(c)] = find(inc[e][0].first);
        }
        std::vector<int> comp_of(n2, -1);
        std::vector<int> orient(n2, 0);
        // each component is seeded at an upper cell so the bottom skew is known
        for (int seed = 0; seed < n2; ++seed) {
            if (X.cells2[seed].kind != Fine2Cell::Upper || comp_of[seed] >= 0) continue;
            int id = int(X.c2.size());
            Trapezoid T;
            std::vector<std::pair<int, int>> cyc = bd[seed];
            orient[seed] = 1;
            comp_of[seed] = id;
            std::deque<int> q{seed};
            while (!q.empty()) {
                int c = q.front();
                q.pop_front();
                T.fine.push_back(c);
                for (auto [e, s0] : bd[c]) {
                    if (X.cells1[e].constrained) continue;
                    for (auto [nb, snb] : inc[e]) {
                        if (comp_of[nb] >= 0) continue;
                        int sc = s0 * orient[c];
                        auto it = std::find(cyc.begin(), cyc.end(), std::make_pair(int(e), sc));
                        if (it == cyc.end()) continue;
                        std::vector<std::pair<int, int>> nbc = bd[nb];
                        orient[nb] = snb == sc ? -1 : 1;
                        if (orient[nb] < 0) nbc = flipped(nbc);
                        auto jt = std::find(nbc.begin(), nbc.end(), std::make_pair(int(e), -sc));
                        std::rotate(cyc.begin(), it, cyc.end());
                        std::rotate(nbc.begin(), jt, nbc.end());
                        std::vector<std::pair<int, int>> merged(cyc.begin() + 1, cyc.end());
                        merged.insert(merged.end(), nbc.begin() + 1, nbc.end());
                        cyc = std::move(merged);
                        comp_of[nb] = id;
                        q.push_back(nb);
                    }
                }
            }
            for (int c : T.fine)
                if (find(c) != find(seed)) throw InvariantError("trapezoid splicing left its component");
            std::vector<std::pair<int, int>> con;
            for (auto pr : cyc)
                if (X.cells1[pr.first].constrained) con.push_back(pr);
            // bottom: the skew under the seed
            int bottom_fine = X.cells2[seed].bottom[0].cell;
            T.bottom = X.cells1[bottom_fine].coarse;
            const Coarse1Cell& B = X.c1[T.bottom];
            auto it = std::find(con.begin(), con.end(), std::make_pair(B.fine.front(), 1));
            if (it == con.end()) throw InvariantError("bottom skew missing from trapezoid boundary");
            std::rotate(con.begin(), it, con.end());
            // group fine cells into coarse cells
            std::size_t i = 0;
            while (i < con.size()) {
                auto [e, s] = con[i];
                int cc = X.cells1[e].coarse;
                const auto& fine = X.c1[cc].fine;
                std::size_t n = fine.size();
                for (std::size_t t = 0; t < n; ++t) {
                    std::size_t idx = s > 0 ? t : n - 1 - t;
                    if (i + t >= con.size() || con[i + t] != std::make_pair(fine[idx], s))
                        throw InvariantError("trapezoid boundary cuts through coarse cell " + X.c1[cc].name);
                }
                T.boundary.emplace_back(cc, s);
                i += n;
            }
            // shape: bottom, left side going up, top, right side going down
            auto vertical_run = [&](std::size_t a, int sign) {
                return X.c1[T.boundary[a].first].kind == Coarse1Cell::Vertical && T.boundary[a].second == sign;
            };
            std::size_t lo = 1, hi = T.boundary.size();
            while (lo < hi && vertical_run(lo, 1)) T.left.push_back(T.boundary[lo++].first);
            while (hi > lo && vertical_run(hi - 1, -1)) T.right.push_back(T.boundary[--hi].first);
            T.top.assign(T.boundary.begin() + long(lo), T.boundary.begin() + long(hi));
            T.name = B.name;
            if (T.top.empty()) throw InvariantError("trapezoid " + T.name + " has an empty top");
            X.c2.push_back(T);
        }
        for (int c = 0; c < n2; ++c) {
            if (comp_of[c] < 0) throw InvariantError("fine 2-cell without a bottom skew in its trapezoid");
            X.cells2[c].coarse = comp_of[c];
            X.cells2[c].sigma = orient[c];
        }
        for (int c = 0; c < n2; ++c)
            if (X.cells2[c].kind == Fine2Cell::Upper &&
                X.cells1[X.cells2[c].bottom[0].cell].coarse != X.c2[comp_of[c]].bottom)
                throw InvariantError("trapezoid " + X.c2[comp_of[c]].name + " has more than one bottom skew");
    }

    void overlay() {
        X.overlay.assign(base.ne(), {});
        std::map<int, int> above;  // level-0 horizontal -> 2-cell over it
        for (std::size_t c = 0; c < X.cells2.size(); ++c) {
            const Fine2Cell& f = X.cells2[c];
            if (f.slab == 1 && f.kind != Fine2Cell::Upper) above[f.bottom[0].cell] = int(c);
        }
        for (int E = 0; E < base.ne(); ++E)
            for (int p : seq.pieces_of[E])
                for (int h : X.hid[0][p]) {
                    int t = X.cells2[above.at(h)].coarse;
                    auto& o = X.overlay[E];
                    if (std::find(o.begin(), o.end(), t) == o.end()) o.push_back(t);
                }
    }
};

}  // namespace

TrapComplex build_torus(const FoldSequence& seq, int mark_budget) {
    if (seq.length() == 0) throw InvariantError("fold sequence is empty; the map is a homeomorphism");
    AuxGraph ag = aux_graph(seq.f);
    if (!ag.acyclic()) {
        std::string w;
        for (int e : ag.cycle) w += seq.base().enames[e] + " ";
        throw InvariantError("auxiliary graph has a cycle (" + w + "); the map is not expanding irreducible");
    }
    TrapComplex X;
    X.seq = seq;
    X.k = seq.length();
    Builder b(X.seq, X);
    b.budget = mark_budget;
    b.tables();
    b.closure();
    b.points();
    b.cells();
    b.faces();
    b.constraints();
    b.coarse_points();
    b.coarse_cells();
    b.name_verticals();
    b.trapezoids();
    b.overlay();
    return X;
}

Diagnostics validate(const TrapComplex& x) {
    Diagnostics d;
    int n1 = int(x.c1.size());
    std::vector<int> as_bottom(n1, 0), in_top(n1, 0);
    for (const auto& T : x.c2) {
        if (T.bottom >= 0 && T.bottom < n1) ++as_bottom[T.bottom];
        bool first = true;
        for (auto [t, sg] : T.boundary) {
            if (t >= 0 && t < n1 && !(first && t == T.bottom)) ++in_top[t];
            first = false;
        }
        // closed boundary
        for (std::size_t i = 0; i < T.boundary.size(); ++i) {
            auto [a, sa] = T.boundary[i];
            auto [b, sb] = T.boundary[(i + 1) % T.boundary.size()];
            int end = sa > 0 ? x.c1[a].to : x.c1[a].from;
            int start = sb > 0 ? x.c1[b].from : x.c1[b].to;
            if (end != start) d.fail("trapezoid " + T.name + ": boundary breaks between " + x.c1[a].name + " and " + x.c1[b].name);
        }
    }
    std::vector<bool> skew_end(x.c0.size(), false);
    for (const auto& c : x.c1)
        if (c.kind == Coarse1Cell::Skew) {
            if (c.from >= 0) skew_end[c.from] = true;
            if (c.to >= 0) skew_end[c.to] = true;
        }
    for (int i = 0; i < n1; ++i) {
        const auto& c = x.c1[i];
        if (c.kind == Coarse1Cell::Skew) {
            int deg = as_bottom[i] + in_top[i];
            if (deg == 2) d.fail("skew cell " + c.name + " has degree 2");
            else if (as_bottom[i] != 1 || in_top[i] != 2)
                d.fail("skew cell " + c.name + " is the bottom of " + std::to_string(as_bottom[i]) + " cells and in the top of " +
                       std::to_string(in_top[i]));
            continue;
        }
        // backward extension must end on a skew
        int cur = i, steps = 0;
        while (true) {
            int from = x.c1[cur].from;
            if (from >= 0 && skew_end[from]) break;
            int below = -1;
            for (int j = 0; j < n1; ++j)
                if (x.c1[j].kind == Coarse1Cell::Vertical && x.c1[j].to == from) below = j;
            if (below < 0) {
                d.fail("vertical cell " + c.name + " dangles: its backward extension stops off the skew cells");
                break;
            }
            if (++steps > n1) {
                d.fail("vertical cell " + c.name + " extends backwards forever");
                break;
            }
            cur = below;
        }
    }
    if (x.euler() != 0) d.fail("Euler characteristic is " + std::to_string(x.euler()));
    return d;
}

SkewLoop skew_loop(const TrapComplex& x) {
    SkewLoop L;
    for (std::size_t i = 0; i < x.c1.size(); ++i)
        if (x.c1[i].kind == Coarse1Cell::Skew) L.cells.push_back(int(i));
    L.closed = !L.cells.empty();
    for (std::size_t i = 0; i < L.cells.size(); ++i) {
        const auto& a = x.c1[L.cells[i]];
        const auto& b = x.c1[L.cells[(i + 1) % L.cells.size()]];
        if (a.to != b.from) {
            L.closed = false;
            L.breaks += (L.breaks.empty() ? "" : "; ") + a.name + " ends at " + x.c0[a.to].name + " but " + b.name +
                        " starts at " + x.c0[b.from].name;
        }
    }
    if (L.closed)
        for (int c : L.cells) L.chain.emplace_back(c, 1);
    return L;
}

std::string torus_json(const TrapComplex& x) {
    using nlohmann::json;
    json j;
    j["folds"] = x.k;
    json c0 = json::array();
    for (const auto& c : x.c0) c0.push_back(c.name);
    j["0-cells"] = c0;
    json c1 = json::array();
    for (const auto& c : x.c1)
        c1.push_back({{"name", c.name},
                      {"kind", c.kind == Coarse1Cell::Skew ? "skew" : "vertical"},
                      {"from", x.c0[c.from].name},
                      {"to", x.c0[c.to].name},
                      {"fine", c.fine.size()}});
    j["1-cells"] = c1;
    json c2 = json::array();
    auto names = [&](const std::vector<int>& v) {
        json a = json::array();
        for (int i : v) a.push_back(x.c1[i].name);
        return a;
    };
    auto signed_names = [&](const std::vector<std::pair<int, int>>& v) {
        json a = json::array();
        for (auto [c, s] : v) a.push_back((s > 0 ? "" : "-") + x.c1[c].name);
        return a;
    };
    for (const auto& T : x.c2) {
        json b = signed_names(T.boundary);
        c2.push_back({{"name", T.name},
                      {"bottom", x.c1[T.bottom].name},
                      {"left", names(T.left)},
                      {"right", names(T.right)},
                      {"top", signed_names(T.top)},
                      {"boundary", b},
                      {"fine_cells", T.fine.size()}});
    }
    j["2-cells"] = c2;
    j["euler"] = x.euler();
    json ov;
    for (int E = 0; E < x.seq.base().ne(); ++E) {
        json a = json::array();
        for (int t : x.overlay[E]) a.push_back(x.c2[t].name);
        ov[x.seq.base().enames[E]] = a;
    }
    j["base_overlay"] = ov;
    j["fine"] = {{"points", x.points.size()}, {"1-cells", x.cells1.size()}, {"2-cells", x.cells2.size()}};
    return j.dump(2);
}

std::string torus_dot(const TrapComplex& x) {
    std::ostringstream o;
    o << "digraph torus {\n";
    for (const auto& c : x.c0) o << "  \"" << c.name << "\";\n";
    for (const auto& c : x.c1)
        o << "  \"" << x.c0[c.from].name << "\" -> \"" << x.c0[c.to].name << "\" [label=\"" << c.name << "\""
          << (c.kind == Coarse1Cell::Skew ? ", style=dashed, kind=skew" : ", kind=vertical") << "];\n";
    o << "}\n";
    return o.str();
}

std::string torus_tikz(const TrapComplex& x) {
    // Level j sits at height j; the edges of each level graph are laid side by side.
    std::ostringstream o;
    auto coord = [&](int pt) {
        const FinePoint& p = x.points[pt];
        std::ostringstream c;
        if (p.kind == FinePoint::Skew) {
            const Fold& f = x.seq.folds[p.level - 1];
            const Graph& g = x.seq.levels[p.level - 1].g;
            int e = Graph::edge_of(f.d1);
            double s = p.x.get_d();
            double pos = Graph::reversed(f.d1) ? e + 1 - s : e + s;
            c << "(" << pos * 2 << "," << p.level - 1 + s << ")";
            (void)g;
            return c.str();
        }
        const Graph& g = x.seq.levels[p.level].g;
        double pos;
        if (p.kind == FinePoint::Mark) pos = p.edge + p.x.get_d();
        else {
            pos = -1;
            for (int e = 0; e < g.ne() && pos < 0; ++e)
                if (g.src[e] == p.vertex) pos = e;
            for (int e = 0; e < g.ne() && pos < 0; ++e)
                if (g.dst[e] == p.vertex) pos = e + 1;
        }
        c << "(" << pos * 2 << "," << p.level << ")";
        return c.str();
    };
    o << "\\begin{tikzpicture}\n";
    for (const auto& c : x.cells1) {
        if (c.kind == Fine1Cell::Horizontal) continue;
        std::string from = coord(c.from);
        std::string to;
        if (c.kind == Fine1Cell::Skew) to = coord(c.to);
        else {
            // tops at level k are drawn at height k
            const FinePoint& p = x.points[c.to];
            to = coord(c.to);
            if (c.level == x.k && p.level == 0 && p.kind != FinePoint::Skew) {
                auto comma = to.find(',');
                to = to.substr(0, comma) + "," + std::to_string(x.k) + ")";
            }
        }
        std::string style = c.kind == Fine1Cell::Skew ? "thick" : c.constrained ? "thick" : "thin";
        o << "  \\draw[" << style << "] " << from << " -- " << to << ";\n";
    }
    o << "\\end{tikzpicture}\n";
    return o.str();
}

}  // namespace fbc
