#include "fbc/section.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"

namespace fbc {

bool SectionPoint::operator<(const SectionPoint& o) const {
    if (kind != o.kind) return kind < o.kind;
    if (cell != o.cell) return cell < o.cell;
    if (value != o.value) return value < o.value;
    return s < o.s;
}

bool SectionPoint::operator==(const SectionPoint& o) const {
    return kind == o.kind && cell == o.cell && value == o.value && s == o.s;
}

int Section::vertex_on(const std::string& host, int index) const {
    for (std::size_t v = 0; v < vertices.size(); ++v)
        if (vertices[v].index == index && vertices[v].name == host + "#" + std::to_string(index)) return int(v);
    return -1;
}

namespace {

bool is_vertical(const Fine1Cell& c) { return c.kind == Fine1Cell::Vertical || c.kind == Fine1Cell::Partial; }

// Lifts along the boundary of a fine 2-cell, in the cell frame (start of the bottom chain at eta).
struct CellGeo {
    std::vector<Q> bs, bv, ts, tv;  // breakpoints and values of bottom and top
    std::vector<int> bpt, tpt;  // fine points at the breakpoints
    std::vector<Q> blf, tlf;  // per chain piece: lift of the piece's start point
    Q left_lf, right_lf;
};

Q interp(const std::vector<Q>& s, const std::vector<Q>& v, const Q& x) {
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
        if (x <= s[i + 1]) return v[i] + (v[i + 1] - v[i]) * (x - s[i]) / (s[i + 1] - s[i]);
    return v.back();
}

// Unique x with f(x) = c for a monotone piecewise linear f, when c is strictly between f(0) and f(1).
Q solve_for(const std::vector<Q>& s, const std::vector<Q>& v, const Q& c) {
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const Q &a = v[i], &b = v[i + 1];
        if ((a < c && c < b) || (b < c && c < a)) return s[i] + (c - a) / (b - a) * (s[i + 1] - s[i]);
        if (a == c && i > 0) return s[i];
    }
    throw InvariantError("level does not cross the chain");
}

int piece_at(const std::vector<Q>& s, const Q& x) {
    for (std::size_t i = 0; i + 1 < s.size(); ++i)
        if (s[i] < x && x < s[i + 1]) return int(i);
    return -1;
}

int breakpoint_at(const std::vector<Q>& s, const Q& x) {
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] == x) return int(i);
    return -1;
}

struct Arc {
    int cell = -1;
    Q level;
    Q lo, hi;
    SectionPoint plo, phi;
    std::set<Q> cuts;
};

struct Engine {
    const TrapComplex& x;
    const QVec& z;
    const std::vector<Q>& eta;
    Q y0;
    std::vector<CellGeo> geo;
    std::vector<std::pair<int, int>> above;  // fine 1-cell -> (cell, bottom piece)

    Engine(const TrapComplex& xx, const QVec& zz, const std::vector<Q>& ee, const Q& y) : x(xx), z(zz), eta(ee), y0(y) {
        geo.resize(x.cells2.size());
        above.assign(x.cells1.size(), {-1, -1});
        for (std::size_t c = 0; c < x.cells2.size(); ++c) build(int(c));
    }

    int from(int e) const { return x.cells1[e].from; }
    int to(int e) const { return x.cells1[e].to; }

    void chain(const std::vector<SideCell>& ch, Q val, int start, std::vector<Q>& s, std::vector<Q>& v, std::vector<int>& pt,
               std::vector<Q>& lf) {
        s.push_back(ch.front().s0);
        v.push_back(val);
        pt.push_back(start);
        for (const SideCell& p : ch) {
            int a = p.sign > 0 ? from(p.cell) : to(p.cell);
            if (a != pt.back()) throw InvariantError("fine cell chain is not connected");
            lf.push_back(p.sign > 0 ? val : val - z[p.cell]);
            val += p.sign * z[p.cell];
            s.push_back(p.s1);
            v.push_back(val);
            pt.push_back(p.sign > 0 ? to(p.cell) : from(p.cell));
        }
    }

    void build(int c) {
        const Fine2Cell& f = x.cells2[c];
        CellGeo& g = geo[c];
        int c00 = f.corner[0][0];
        chain(f.bottom, eta[c00], c00, g.bs, g.bv, g.bpt, g.blf);
        int c01 = f.corner[0][1];
        Q top0 = eta[c00] + (f.left >= 0 ? z[f.left] : Q(0));
        chain(f.top, top0, c01, g.ts, g.tv, g.tpt, g.tlf);
        g.left_lf = eta[c00];
        g.right_lf = g.bv.back();
        Q top1 = g.bv.back() + (f.right >= 0 ? z[f.right] : Q(0));
        if (top1 != g.tv.back()) throw InvariantError("fine cochain is not a cocycle on a 2-cell");
        for (std::size_t i = 0; i < f.bottom.size(); ++i) above[f.bottom[i].cell] = {c, int(i)};
    }

    Q B(int c, const Q& s) const { return interp(geo[c].bs, geo[c].bv, s); }
    Q T(int c, const Q& s) const { return interp(geo[c].ts, geo[c].tv, s); }

    bool is_level(const Q& v) const { return is_integer(v - y0); }

    // Levels strictly between lo and hi.
    std::vector<Q> levels(const Q& lo, const Q& hi) const {
        std::vector<Q> out;
        Q c = y0 + ceil_q(lo - y0);
        if (c == lo) c += 1;
        for (; c < hi; c += 1) out.push_back(c);
        return out;
    }

    // Fraction along a chain piece (from its start point) at chart position s.
    static Q fraction(const SideCell& p, const Q& s) {
        Q u = (s - p.s0) / (p.s1 - p.s0);
        return p.sign > 0 ? u : Q(1 - u);
    }

    static Q chart(const SideCell& p, const Q& u) { return p.s0 + (p.sign > 0 ? u : Q(1 - u)) * (p.s1 - p.s0); }

    SectionPoint on(int e, const Q& v) const { return {SectionPoint::OnCell, e, v, 0}; }

    // Point of the cell boundary at chart s and cell-frame value c, on the bottom or top chain.
    SectionPoint chain_point(int c, bool top, const Q& s, const Q& val) const {
        const Fine2Cell& f = x.cells2[c];
        const auto& ch = top ? f.top : f.bottom;
        const auto& ss = top ? geo[c].ts : geo[c].bs;
        int i = piece_at(ss, s);
        if (i < 0) throw InvariantError("section meets a fine vertex");
        int e = ch[i].cell;
        Q lf = top ? geo[c].tlf[i] : geo[c].blf[i];
        return on(e, val - lf + eta[from(e)]);
    }

    // Enters the cell above a horizontal or skew piece e at fraction u, with a target in e's frame.
    std::tuple<int, Q, Q> enter(int e, const Q& u, const Q& target_e) const {
        auto [d, i] = above[e];
        if (d < 0) throw InvariantError("no fine cell above a horizontal piece");
        const SideCell& p = x.cells2[d].bottom[i];
        return {d, chart(p, u), target_e - eta[from(e)] + geo[d].blf[i]};
    }

    SectionPoint flow(const SectionPoint& p, const Q& dt = 1) const {
        enum Mode { Vert, In } mode;
        int id;
        Q s, target;
        if (p.kind == SectionPoint::Inside) {
            mode = In;
            id = p.cell;
            s = p.s;
            target = p.value + dt;
        } else if (is_vertical(x.cells1[p.cell])) {
            mode = Vert;
            id = p.cell;
            target = p.value + dt;
        } else {
            int e = p.cell;
            Q u = (p.value - eta[from(e)]) / z[e];
            std::tie(id, s, target) = enter(e, u, p.value + dt);
            mode = In;
        }
        for (int guard = 0; guard < 1000000; ++guard) {
            if (mode == Vert) {
                Q top = eta[from(id)] + z[id];
                if (target < top) return on(id, target);
                if (target == top) throw InvariantError("flow lands on a fine vertex");
                int P = to(id);
                target += eta[P] - top;
                id = x.up[P];
                continue;
            }
            Q tv = T(id, s);
            if (target < tv) return {SectionPoint::Inside, id, target, s};
            int b = breakpoint_at(geo[id].ts, s);
            if (target == tv) {
                if (b >= 0) throw InvariantError("flow lands on a fine vertex");
                return chain_point(id, true, s, target);
            }
            if (b >= 0) {
                int P = geo[id].tpt[b];
                target += eta[P] - geo[id].tv[b];
                mode = Vert;
                id = x.up[P];
                continue;
            }
            int i = piece_at(geo[id].ts, s);
            const SideCell& pc = x.cells2[id].top[i];
            Q te = target - geo[id].tlf[i] + eta[from(pc.cell)];
            std::tie(id, s, target) = enter(pc.cell, fraction(pc, s), te);
        }
        throw InvariantError("flow did not reach its level");
    }

    // Image of the arc segment from sa to sb at some level of cell c, flowed up to `target`.
    void flow_segment(int c, const Q& sa, const Q& sb, const Q& target, std::vector<ArcPiece>& out, int depth = 0) const {
        if (depth > 100000) throw InvariantError("segment flow exceeded its budget");
        const CellGeo& g = geo[c];
        Q lo = std::min(sa, sb), hi = std::max(sa, sb);
        std::vector<Q> cuts{lo, hi};
        for (const Q& t : g.ts)
            if (lo < t && t < hi) cuts.push_back(t);
        for (std::size_t i = 0; i + 1 < g.ts.size(); ++i) {
            const Q &a = g.tv[i], &b = g.tv[i + 1];
            if ((a < target && target < b) || (b < target && target < a)) {
                Q st = g.ts[i] + (target - a) / (b - a) * (g.ts[i + 1] - g.ts[i]);
                if (lo < st && st < hi) cuts.push_back(st);
            }
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
        if (sb < sa) std::reverse(cuts.begin(), cuts.end());
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            const Q &p = cuts[k], &q = cuts[k + 1];
            Q m = (p + q) / 2;
            if (T(c, m) > target) {
                if (!out.empty() && out.back().cell == c && out.back().level == target && out.back().s1 == p)
                    out.back().s1 = q;
                else
                    out.push_back({c, target, p, q});
                continue;
            }
            int i = piece_at(g.ts, m);
            const SideCell& pc = x.cells2[c].top[i];
            Q te = target - g.tlf[i] + eta[from(pc.cell)];
            auto [d, dp, td] = enter(pc.cell, fraction(pc, p), te);
            Q dq = std::get<1>(enter(pc.cell, fraction(pc, q), te));
            flow_segment(d, dp, dq, td, out, depth + 1);
        }
    }

    bool base_point(int P) const { return x.points[P].kind != FinePoint::Skew && x.points[P].level == 0; }
    bool base_cell(int e) const { return x.cells1[e].kind == Fine1Cell::Horizontal && x.cells1[e].level == 0; }

    // First meeting with the level-0 graph at positive time: a fine point, or a horizontal at a fraction.
    struct Hit {
        int point = -1;
        int cell = -1;
        Q u;
    };

    Hit hit_base(const SectionPoint& p) const {
        bool vert = false;
        int id;
        Q s;
        if (p.kind == SectionPoint::Inside) {
            id = p.cell;
            s = p.s;
        } else if (is_vertical(x.cells1[p.cell])) {
            vert = true;
            id = p.cell;
        } else {
            int e = p.cell;
            if (base_cell(e)) throw InvariantError("section meets the level-0 graph");
            std::tie(id, s, std::ignore) = enter(e, (p.value - eta[from(e)]) / z[e], 0);
        }
        for (int guard = 0; guard < 1000000; ++guard) {
            if (vert) {
                int P = to(id);
                if (base_point(P)) return {P, -1, 0};
                id = x.up[P];
                continue;
            }
            int b = breakpoint_at(geo[id].ts, s);
            if (b >= 0) {
                int P = geo[id].tpt[b];
                if (base_point(P)) return {P, -1, 0};
                vert = true;
                id = x.up[P];
                continue;
            }
            const SideCell& pc = x.cells2[id].top[piece_at(geo[id].ts, s)];
            Q u = fraction(pc, s);
            if (base_cell(pc.cell)) return {-1, pc.cell, u};
            std::tie(id, s, std::ignore) = enter(pc.cell, u, 0);
        }
        throw InvariantError("flow does not reach the level-0 graph");
    }

    // Flows a segment of cell c to the level-0 graph: (horizontal, u0, u1) pieces in order.
    void base_segment(int c, const Q& sa, const Q& sb, std::vector<std::tuple<int, Q, Q>>& out, int depth = 0) const {
        if (depth > 100000) throw InvariantError("segment flow exceeded its budget");
        const CellGeo& g = geo[c];
        Q lo = std::min(sa, sb), hi = std::max(sa, sb);
        std::vector<Q> cuts{lo, hi};
        for (const Q& t : g.ts)
            if (lo < t && t < hi) cuts.push_back(t);
        std::sort(cuts.begin(), cuts.end());
        if (sb < sa) std::reverse(cuts.begin(), cuts.end());
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
            const Q &p = cuts[k], &q = cuts[k + 1];
            const SideCell& pc = x.cells2[c].top[piece_at(g.ts, (p + q) / 2)];
            Q up = fraction(pc, p), uq = fraction(pc, q);
            if (base_cell(pc.cell)) {
                out.emplace_back(pc.cell, up, uq);
                continue;
            }
            auto [d, dp, td] = enter(pc.cell, up, 0);
            Q dq = std::get<1>(enter(pc.cell, uq, 0));
            base_segment(d, dp, dq, out, depth + 1);
        }
    }

    // Level arcs of one cell.
    std::vector<Arc> arcs(int c) const {
        const Fine2Cell& f = x.cells2[c];
        const CellGeo& g = geo[c];
        std::vector<Arc> out;
        Q lo = *std::min_element(g.bv.begin(), g.bv.end()), hi = *std::max_element(g.tv.begin(), g.tv.end());
        for (const Q& L : levels(lo, hi)) {
            // lower and upper ends with their kinds: 0 side, 1 bottom, 2 top
            Q a = 0, b = 1;
            int ka = 0, kb = 0;
            Q b0 = g.bv.front(), b1 = g.bv.back(), t0 = g.tv.front(), t1 = g.tv.back();
            if (b0 >= L && b1 >= L) continue;
            if (t0 <= L && t1 <= L) continue;
            if (!(b0 < L && b1 < L)) {
                Q sb = solve_for(g.bs, g.bv, L);
                if (b0 < L) b = sb, kb = 1;
                else a = sb, ka = 1;
            }
            if (!(t0 > L && t1 > L)) {
                Q st = solve_for(g.ts, g.tv, L);
                if (t0 > L) {
                    if (st < b) b = st, kb = 2;
                } else if (st > a) {
                    a = st, ka = 2;
                }
            }
            if (a >= b) continue;
            auto end = [&](const Q& s, int kind, bool right) {
                if (kind == 1) return chain_point(c, false, s, L);
                if (kind == 2) return chain_point(c, true, s, L);
                int side = right ? f.right : f.left;
                if (side < 0) throw InvariantError("level arc ends at a degenerate corner");
                Q lf = right ? g.right_lf : g.left_lf;
                return on(side, L - lf + eta[from(side)]);
            };
            Arc arc;
            arc.cell = c;
            arc.level = L;
            arc.lo = a;
            arc.hi = b;
            arc.plo = end(a, ka, false);
            arc.phi = end(b, kb, true);
            out.push_back(arc);
        }
        return out;
    }

    // Lift of the start point of fine 1-cell e in the frame of cell c, for each occurrence.
    std::vector<Q> lifts_of(int c, int e) const {
        const Fine2Cell& f = x.cells2[c];
        std::vector<Q> out;
        for (std::size_t i = 0; i < f.bottom.size(); ++i)
            if (f.bottom[i].cell == e) out.push_back(geo[c].blf[i]);
        for (std::size_t i = 0; i < f.top.size(); ++i)
            if (f.top[i].cell == e) out.push_back(geo[c].tlf[i]);
        if (f.left == e) out.push_back(geo[c].left_lf);
        if (f.right == e) out.push_back(geo[c].right_lf);
        return out;
    }
};

std::vector<Q> phase_schedule(const Q& first, int n) {
    std::vector<Q> out{first};
    for (int d = 2; int(out.size()) < n; ++d)
        for (int a = 1; a < d && int(out.size()) < n; ++a) {
            Q q = frac(a, d);
            if (std::find(out.begin(), out.end(), q) == out.end()) out.push_back(q);
        }
    return out;
}

int least_skew(const TrapComplex& x) {
    int best = -1;
    for (std::size_t i = 0; i < x.c1.size(); ++i)
        if (x.c1[i].kind == Coarse1Cell::Skew && (best < 0 || x.c1[i].name < x.c1[best].name)) best = int(i);
    return best;
}

}  // namespace

FineCocycle extend_to_fine(const TrapComplex& x, const Cochain& coarse, bool avoid_base) {
    int n1 = int(x.cells1.size()), np = int(x.points.size());
    // a particular fine cocycle with the coarse sums
    QMat a;
    QVec rhs;
    for (const auto& c : x.cells2) {
        QVec row(n1);
        for (auto [e, s] : c.boundary()) row[e] += s;
        a.push_back(row);
        rhs.push_back(0);
    }
    for (std::size_t c = 0; c < x.c1.size(); ++c) {
        QVec row(n1);
        for (int e : x.c1[c].fine) row[e] += 1;
        a.push_back(row);
        rhs.push_back(coarse[c]);
    }
    auto z0 = solve(a, rhs);
    if (!z0) throw InvariantError("coarse cochain is not a cocycle");
    // potentials on fine points that are not coarse 0-cells
    std::vector<int> var(np, -1);
    std::vector<bool> fixed(np, false);
    if (!avoid_base)
        for (const auto& c : x.c0) fixed[c.fine] = true;
    int nv = 0;
    for (int p = 0; p < np; ++p)
        if (!fixed[p]) var[p] = nv++;
    int eps = nv;
    LP lp(nv + 1);
    for (int j = 0; j <= nv; ++j) lp.free[j] = true;
    lp.c[eps] = 1;
    // row.g + eps <= rhs encodes  (z0 + delta g)(combination) >= eps
    auto add_ge = [&](const std::vector<std::pair<int, Q>>& comb) {
        QVec row(nv + 1);
        Q base = 0;
        for (auto [e, w] : comb) {
            base += w * (*z0)[e];
            const Fine1Cell& c = x.cells1[e];
            if (var[c.to] >= 0) row[var[c.to]] -= w;
            if (var[c.from] >= 0) row[var[c.from]] += w;
        }
        row[eps] = 1;
        lp.add(row, LP::Le, base);
    };
    for (int e = 0; e < n1; ++e)
        if (x.cells1[e].kind != Fine1Cell::Horizontal) add_ge({{e, Q(1)}});
    for (const auto& f : x.cells2) {
        if (f.kind != Fine2Cell::Lower) continue;
        // height gap at each interior skew mark of the top chain
        const SideCell& bot = f.bottom[0];
        std::vector<std::pair<int, Q>> comb;
        for (std::size_t i = 0; i + 1 < f.top.size(); ++i) {
            comb.emplace_back(f.top[i].cell, Q(f.top[i].sign));
            auto c2 = comb;
            c2.emplace_back(bot.cell, -f.top[i].s1 * bot.sign);
            add_ge(c2);
        }
    }
    if (avoid_base)
        for (int e = 0; e < n1; ++e) {
            const Fine1Cell& c = x.cells1[e];
            if (c.kind != Fine1Cell::Horizontal || c.level != 0) continue;
            QVec row(nv + 1);
            row[var[c.to]] += 1;
            row[var[c.from]] -= 1;
            lp.add(row, LP::Eq, -(*z0)[e]);
        }
    QVec cap(nv + 1);
    cap[eps] = 1;
    lp.add(cap, LP::Le, 1);
    LPResult r = solve_lp(lp);
    if (r.status != LPResult::Optimal) throw InvariantError("fine extension LP is " + r.str());
    if (r.value <= 0) throw InvariantError("coarse cocycle has no positive fine extension (optimum " + r.value.get_str() + ")");
    FineCocycle fc;
    fc.epsilon = r.value;
    fc.z = *z0;
    for (int e = 0; e < n1; ++e) {
        const Fine1Cell& c = x.cells1[e];
        if (var[c.to] >= 0) fc.z[e] += r.x[var[c.to]];
        if (var[c.from] >= 0) fc.z[e] -= r.x[var[c.from]];
    }
    return fc;
}

namespace {

struct Builder {
    const TrapComplex& x;
    Section& S;
    const SectionOptions& opt;

    Builder(const TrapComplex& xx, Section& s, const SectionOptions& o) : x(xx), S(s), opt(o) {}

    void heights() {
        int np = int(x.points.size());
        std::vector<std::vector<std::pair<int, int>>> adj(np);
        for (std::size_t e = 0; e < x.cells1.size(); ++e) {
            adj[x.cells1[e].from].emplace_back(int(e), 1);
            adj[x.cells1[e].to].emplace_back(int(e), -1);
        }
        S.eta.assign(np, 0);
        std::vector<bool> seen(np, false);
        for (int root = 0; root < np; ++root) {
            if (seen[root]) continue;
            seen[root] = true;
            std::deque<int> q{root};
            while (!q.empty()) {
                int p = q.front();
                q.pop_front();
                for (auto [e, s] : adj[p]) {
                    int o = s > 0 ? x.cells1[e].to : x.cells1[e].from;
                    if (seen[o]) continue;
                    seen[o] = true;
                    S.eta[o] = S.eta[p] + s * S.fine.z[e];
                    q.push_back(o);
                }
            }
        }
        for (std::size_t e = 0; e < x.cells1.size(); ++e)
            if (!is_integer(S.eta[x.cells1[e].to] - S.eta[x.cells1[e].from] - S.fine.z[e]))
                throw InvariantError("class is not integral: a period is not an integer");
    }

    void choose_phase() {
        int d = least_skew(x);
        if (d < 0) throw InvariantError("complex has no skew cells");
        Q zd = 0;
        for (int f : x.c1[d].fine) zd += S.fine.z[f];
        Q start = S.eta[x.c0[x.c1[d].from].fine];
        for (const Q& lam : phase_schedule(opt.phase, opt.perturb_budget)) {
            Q y = start + lam * zd;
            bool generic = std::none_of(S.eta.begin(), S.eta.end(), [&](const Q& e) { return is_integer(e - y); });
            if (generic) {
                S.y0 = y - floor_q(y);
                S.phase = lam;
                return;
            }
        }
        throw InvariantError("no generic phase within the perturbation budget");
    }

    void run(const Cochain& coarse) {
        S.fine = extend_to_fine(x, coarse, opt.avoid_base);
        heights();
        choose_phase();
        Engine E(x, S.fine.z, S.eta, S.y0);

        // level arcs
        std::vector<Arc> arcs;
        std::map<std::pair<int, Q>, int> arc_at;
        for (std::size_t c = 0; c < x.cells2.size(); ++c)
            for (Arc& a : E.arcs(int(c))) {
                arc_at[{a.cell, a.level}] = int(arcs.size());
                arcs.push_back(a);
            }
        // end points and valences
        std::map<SectionPoint, int> ends;
        for (const Arc& a : arcs) {
            ++ends[a.plo];
            ++ends[a.phi];
        }
        // vertex seeds: crossings with coarse 1-cells, then forward closure
        std::vector<SectionPoint> verts;
        std::map<SectionPoint, int> vid;
        std::deque<int> work;
        auto add_vertex = [&](const SectionPoint& p) {
            if (vid.count(p)) return vid[p];
            if (int(verts.size()) >= opt.vertex_budget) throw InvariantError("section vertex closure exceeded its budget");
            if (p.kind == SectionPoint::Inside) {
                auto it = arc_at.find({p.cell, p.value});
                if (it == arc_at.end() || !(arcs[it->second].lo < p.s && p.s < arcs[it->second].hi))
                    throw InvariantError("flowed vertex is off the section");
                arcs[it->second].cuts.insert(p.s);
            } else if (!ends.count(p)) {
                throw InvariantError("flowed vertex is not a crossing point");
            }
            int id = int(verts.size());
            vid[p] = id;
            verts.push_back(p);
            work.push_back(id);
            return id;
        };
        std::vector<int> crossing_order;
        for (std::size_t c = 0; c < x.c1.size(); ++c)
            for (int f : x.c1[c].fine) {
                Q a = S.eta[x.cells1[f].from];
                for (const Q& v : E.levels(a, a + S.fine.z[f])) add_vertex(E.on(f, v));
            }
        for (const auto& [p, n] : ends)
            if (n != 2) add_vertex(p);
        std::map<int, int> image;
        while (!work.empty()) {
            int v = work.front();
            work.pop_front();
            image[v] = add_vertex(E.flow(verts[v]));
        }

        // pieces of arcs between vertices, and the graph they form
        struct PieceRef {
            int arc, idx;
        };
        std::vector<std::vector<Q>> breaks(arcs.size());
        std::map<SectionPoint, std::vector<std::pair<PieceRef, int>>> inc;  // node -> (piece, 0 at low s end)
        auto node_of = [&](int a, std::size_t j) -> SectionPoint {
            const Arc& A = arcs[a];
            if (j == 0) return A.plo;
            if (j + 1 == breaks[a].size()) return A.phi;
            return {SectionPoint::Inside, A.cell, A.level, breaks[a][j]};
        };
        for (std::size_t a = 0; a < arcs.size(); ++a) {
            breaks[a].push_back(arcs[a].lo);
            for (const Q& c : arcs[a].cuts) breaks[a].push_back(c);
            breaks[a].push_back(arcs[a].hi);
            for (std::size_t j = 0; j + 1 < breaks[a].size(); ++j) {
                inc[node_of(int(a), j)].push_back({{int(a), int(j)}, 0});
                inc[node_of(int(a), j + 1)].push_back({{int(a), int(j)}, 1});
            }
        }
        for (const auto& [p, l] : inc)
            if (l.size() != 2 && !vid.count(p)) throw InvariantError("branch point of the section is not a vertex");

        std::vector<std::vector<bool>> used(arcs.size());
        for (std::size_t a = 0; a < arcs.size(); ++a) used[a].assign(breaks[a].size() - 1, false);
        struct Traced {
            std::vector<ArcPiece> path;
            int from, to;
        };
        std::vector<Traced> traced;
        for (std::size_t v = 0; v < verts.size(); ++v) {
            for (auto [ref, end] : inc[verts[v]]) {
                if (used[ref.arc][ref.idx]) continue;
                Traced t;
                t.from = int(v);
                PieceRef cur = ref;
                int cur_end = end;
                for (;;) {
                    used[cur.arc][cur.idx] = true;
                    const Arc& A = arcs[cur.arc];
                    Q s0 = breaks[cur.arc][cur.idx + cur_end], s1 = breaks[cur.arc][cur.idx + 1 - cur_end];
                    t.path.push_back({A.cell, A.level, s0, s1});
                    SectionPoint nxt = node_of(cur.arc, cur.idx + 1 - cur_end);
                    if (vid.count(nxt)) {
                        t.to = vid[nxt];
                        break;
                    }
                    const auto& l = inc[nxt];
                    auto other = l[0].first.arc == cur.arc && l[0].first.idx == cur.idx && l[0].second == 1 - cur_end ? l[1] : l[0];
                    cur = other.first;
                    cur_end = other.second;
                }
                traced.push_back(t);
            }
        }
        for (std::size_t a = 0; a < arcs.size(); ++a)
            for (bool u : used[a])
                if (!u) throw InvariantError("section has a component without vertices");

        // orientation: left to right in the host trapezoid
        for (Traced& t : traced) {
            auto rightward = [&](const ArcPiece& p) { return (p.s1 > p.s0) == (x.cells2[p.cell].sigma < 0); };
            bool r0 = rightward(t.path.front());
            for (const ArcPiece& p : t.path)
                if (rightward(p) != r0) throw InvariantError("section edge changes direction inside its trapezoid");
            if (!r0) {
                std::reverse(t.path.begin(), t.path.end());
                for (ArcPiece& p : t.path) std::swap(p.s0, p.s1);
                std::swap(t.from, t.to);
            }
        }

        name_vertices(verts, E);
        S.vertex_image.assign(verts.size(), -1);
        for (auto [v, w] : image) S.vertex_image[v] = w;
        name_edges(traced, E);
    }

    void name_vertices(const std::vector<SectionPoint>& verts, const Engine&) {
        S.vertices.resize(verts.size());
        // crossings of a coarse cell, ordered along it
        std::map<int, std::vector<std::pair<std::pair<int, Q>, int>>> along;
        for (std::size_t v = 0; v < verts.size(); ++v) {
            S.vertices[v].at = verts[v];
            if (verts[v].kind != SectionPoint::OnCell) continue;
            const Fine1Cell& f = x.cells1[verts[v].cell];
            if (!f.constrained) continue;
            const auto& fine = x.c1[f.coarse].fine;
            int pos = int(std::find(fine.begin(), fine.end(), verts[v].cell) - fine.begin());
            Q t = (verts[v].value - S.eta[f.from]) / S.fine.z[verts[v].cell];
            along[f.coarse].push_back({{pos, t}, int(v)});
        }
        for (auto& [c, l] : along) {
            std::sort(l.begin(), l.end());
            for (std::size_t i = 0; i < l.size(); ++i) {
                SectionVertex& sv = S.vertices[l[i].second];
                sv.host = c;
                sv.index = int(i) + 1;
                sv.name = x.c1[c].name + "#" + std::to_string(i + 1);
            }
        }
        int extra = 0;
        for (auto& sv : S.vertices)
            if (sv.name.empty()) sv.name = "o" + std::to_string(++extra);
        for (const auto& sv : S.vertices) S.graph.add_vertex(sv.name);
        int d = least_skew(x);
        for (std::size_t v = 0; v < S.vertices.size(); ++v)
            if (S.vertices[v].host == d && S.vertices[v].index == 1) S.basepoint = int(v);
    }

    template <class Traced>
    void name_edges(std::vector<Traced>& traced, const Engine& E) {
        // consistent frame inside each trapezoid
        int n2 = int(x.cells2.size());
        std::vector<Q> off(n2);
        std::vector<bool> seen(n2, false);
        std::vector<std::vector<int>> cells_of(x.cells1.size());
        for (int c = 0; c < n2; ++c)
            for (auto [e, s] : x.cells2[c].boundary()) cells_of[e].push_back(c);
        for (int root = 0; root < n2; ++root) {
            if (seen[root]) continue;
            seen[root] = true;
            std::deque<int> q{root};
            while (!q.empty()) {
                int c = q.front();
                q.pop_front();
                for (auto [e, s] : x.cells2[c].boundary()) {
                    if (x.cells1[e].constrained) continue;
                    for (int d : cells_of[e]) {
                        if (seen[d]) continue;
                        seen[d] = true;
                        off[d] = off[c] + E.lifts_of(c, e).front() - E.lifts_of(d, e).front();
                        q.push_back(d);
                    }
                }
            }
        }
        struct Key {
            int trap;
            Q level;
            int cell;
            Q s;
        };
        std::vector<Key> keys;
        for (const auto& t : traced) {
            const ArcPiece& p = t.path.front();
            keys.push_back({x.cells2[p.cell].coarse, off[p.cell] + p.level, p.cell, p.s0});
        }
        std::vector<int> order(traced.size());
        std::iota(order.begin(), order.end(), 0);
        // left to right within a level: follow end vertex to start vertex
        std::sort(order.begin(), order.end(), [&](int a, int b) {
            const Key &ka = keys[a], &kb = keys[b];
            if (x.c2[ka.trap].name != x.c2[kb.trap].name) return x.c2[ka.trap].name < x.c2[kb.trap].name;
            if (ka.level != kb.level) return ka.level < kb.level;
            if (ka.cell != kb.cell) return ka.cell < kb.cell;
            return ka.s < kb.s;
        });
        std::vector<int> final_order;
        std::size_t i = 0;
        std::vector<std::pair<int, int>> level_piece(traced.size());
        std::map<int, int> level_rank;
        while (i < order.size()) {
            std::size_t j = i;
            while (j < order.size() && keys[order[j]].trap == keys[order[i]].trap && keys[order[j]].level == keys[order[i]].level) ++j;
            std::vector<int> group(order.begin() + long(i), order.begin() + long(j));
            int trap = keys[order[i]].trap;
            int rank = ++level_rank[trap];
            std::vector<int> sorted;
            std::vector<bool> placed(group.size(), false);
            for (std::size_t h = 0; h < group.size(); ++h) {
                bool head = true;
                for (std::size_t o = 0; o < group.size(); ++o)
                    if (o != h && traced[group[o]].to == traced[group[h]].from) head = false;
                if (!head || placed[h]) continue;
                std::size_t cur = h;
                for (;;) {
                    placed[cur] = true;
                    sorted.push_back(group[cur]);
                    std::size_t nxt = group.size();
                    for (std::size_t o = 0; o < group.size(); ++o)
                        if (!placed[o] && traced[group[o]].from == traced[group[cur]].to) nxt = o;
                    if (nxt == group.size()) break;
                    cur = nxt;
                }
            }
            for (std::size_t h = 0; h < group.size(); ++h)
                if (!placed[h]) sorted.push_back(group[h]);
            for (std::size_t h = 0; h < sorted.size(); ++h) {
                level_piece[sorted[h]] = {rank, sorted.size() == 1 ? 0 : int(h) + 1};
                final_order.push_back(sorted[h]);
            }
            i = j;
        }
        for (int t : final_order) {
            SectionEdge e;
            e.trapezoid = keys[t].trap;
            e.level = level_piece[t].first;
            e.piece = level_piece[t].second;
            e.name = x.c2[e.trapezoid].name + "." + std::to_string(e.level) + (e.piece ? "." + std::to_string(e.piece) : "");
            e.path = traced[t].path;
            S.graph.add_edge(e.name, traced[t].from, traced[t].to);
            S.edges.push_back(e);
        }
    }
};

int count_components(const Graph& g) {
    std::vector<int> uf(g.nv());
    std::iota(uf.begin(), uf.end(), 0);
    std::function<int(int)> find = [&](int a) { return uf[a] == a ? a : uf[a] = find(uf[a]); };
    for (int e = 0; e < g.ne(); ++e) uf[find(g.src[e])] = find(g.dst[e]);
    int n = 0;
    for (int v = 0; v < g.nv(); ++v) n += find(v) == v;
    return n;
}

}  // namespace

Section build_section(const TrapComplex& x, const Cochain& coarse, const SectionOptions& opt) {
    Section S;
    Builder b(x, S, opt);
    b.run(coarse);
    S.components = count_components(S.graph);
    return S;
}

GraphMap first_return(const TrapComplex& x, const Section& s) {
    Engine E(x, s.fine.z, s.eta, s.y0);
    // arc pieces -> (edge, index in its path)
    std::map<std::pair<int, Q>, std::vector<std::pair<std::pair<Q, Q>, std::pair<int, int>>>> pieces;
    for (std::size_t e = 0; e < s.edges.size(); ++e)
        for (std::size_t i = 0; i < s.edges[e].path.size(); ++i) {
            const ArcPiece& p = s.edges[e].path[i];
            pieces[{p.cell, p.level}].push_back({{std::min(p.s0, p.s1), std::max(p.s0, p.s1)}, {int(e), int(i)}});
        }
    for (auto& [k, v] : pieces) std::sort(v.begin(), v.end());

    GraphMap f;
    f.dom = s.graph;
    f.cod = s.graph;
    f.vmap = s.vertex_image;
    for (std::size_t e = 0; e < s.edges.size(); ++e) {
        std::vector<ArcPiece> land;
        for (const ArcPiece& p : s.edges[e].path) E.flow_segment(p.cell, p.s0, p.s1, p.level + 1, land);
        Path img;
        for (const ArcPiece& l : land) {
            auto it = pieces.find({l.cell, l.level});
            if (it == pieces.end()) throw InvariantError("flowed edge leaves the section");
            auto list = it->second;
            bool up = l.s1 > l.s0;
            if (!up) std::reverse(list.begin(), list.end());
            for (const auto& [range, ref] : list) {
                auto [a, b] = range;
                Q lo = std::min(l.s0, l.s1), hi = std::max(l.s0, l.s1);
                if (b <= lo || a >= hi) continue;
                const SectionEdge& E2 = s.edges[ref.first];
                const ArcPiece& p = E2.path[ref.second];
                bool along = (p.s1 > p.s0) == up;  // travelling in the edge's direction
                Q reach = up ? std::min(hi, b) : std::max(lo, a);
                if (along && ref.second + 1 == int(E2.path.size()) && reach == p.s1) img.push_back(Graph::fwd(ref.first));
                if (!along && ref.second == 0 && reach == p.s0) img.push_back(Graph::rev(Graph::fwd(ref.first)));
            }
        }
        f.emap.push_back(img);
    }
    f.check();
    return f;
}

GraphMap project_to_base(const TrapComplex& x, const Section& s) {
    Engine E(x, s.fine.z, s.eta, s.y0);
    const LabeledGraph& L0 = x.seq.levels[0];
    const Graph& base = x.seq.base();
    std::vector<int> lv(L0.g.nv(), -1);
    for (int e = 0; e < L0.g.ne(); ++e) {
        lv[L0.g.src[e]] = base.src[L0.label[e]];
        lv[L0.g.dst[e]] = base.dst[L0.label[e]];
    }
    GraphMap p;
    p.dom = s.graph;
    p.cod = base;
    for (const SectionVertex& v : s.vertices) {
        auto h = E.hit_base(v.at);
        int w;
        if (h.point >= 0) {
            const FinePoint& q = x.points[h.point];
            w = q.kind == FinePoint::Vertex ? q.vertex : L0.g.src[q.edge];
        } else {
            w = L0.g.src[x.cells1[h.cell].edge];
        }
        p.vmap.push_back(lv[w]);
    }
    // An edge of the level-0 graph is recorded when the path reaches its end going forward
    // or leaves its end going backward; vertices go to the start of the edge they lie on.
    for (std::size_t e = 0; e < s.edges.size(); ++e) {
        std::vector<std::tuple<int, Q, Q>> pieces;
        for (const ArcPiece& a : s.edges[e].path) E.base_segment(a.cell, a.s0, a.s1, pieces);
        Path lp;
        for (auto [h, u0, u1] : pieces) {
            int g = x.cells1[h].edge;
            if (x.hid[0][g].back() != h) continue;
            if (u0 < u1 && u1 == 1) lp.push_back(Graph::fwd(g));
            if (u0 > u1 && u0 == 1) lp.push_back(Graph::rev(Graph::fwd(g)));
        }
        Path bp;
        for (int oe : tighten(L0.g, lp)) bp.push_back(L0.olabel(oe));
        bp = tighten(base, bp);
        int a = p.vmap[s.graph.src[e]], b = p.vmap[s.graph.dst[e]];
        bool ok = bp.empty() ? a == b : composable(base, bp) && base.init(bp.front()) == a && base.term(bp.back()) == b;
        if (!ok) throw InvariantError("projection of " + s.graph.enames[e] + " has the wrong endpoints");
        p.emap.push_back(bp);
    }
    return p;
}

OuterComparison compare_outer(const TrapComplex& x, const Section& s, const GraphMap& fr, const MarkedGraph& marking) {
    OuterComparison out;
    Monodromy m = monodromy(s, fr);
    out.section_aut = m.aut.map;
    SpanningTree t = tree_from_edges(s.graph, m.tree, s.graph.vertex(m.basepoint));
    out.transport = induced_hom(project_to_base(x, s), t, marking);
    out.iso = nielsen_invert(out.transport).verified;
    out.base_aut = map_to_automorphism(x.seq.f, marking).map;
    FreeGroupMap a = out.transport, b = out.transport;
    for (std::size_t i = 0; i < a.images.size(); ++i) {
        a.images[i] = out.base_aut.apply(out.transport.images[i]);
        b.images[i] = out.transport.apply(out.section_aut.images[i]);
    }
    auto w = outer_conjugator(a, b, 40);
    out.equal = out.iso && w.has_value();
    if (w) out.conjugator = *w;
    return out;
}

bool family_names(Section& s, const TrapComplex& x) {
    std::map<std::string, std::vector<int>> by;
    for (std::size_t e = 0; e < s.edges.size(); ++e) by[x.c2[s.edges[e].trapezoid].name].push_back(int(e));
    auto levels = [&](const std::string& t) {
        int n = 0;
        for (int e : by[t]) n = std::max(n, s.edges[e].level);
        return n;
    };
    int n = levels("d2");
    if (n < 1 || levels("d1") != 1 || by["d1"].size() != 1 || levels("d4") != n + 1 || levels("d3") != n + 1) return false;
    if (by["d2"].size() != std::size_t(n) || by["d4"].size() != std::size_t(n + 1) || by["d3"].size() != std::size_t(2 * n + 1))
        return false;
    std::vector<std::string> names(s.edges.size());
    names[by["d1"][0]] = "e1";
    for (int e : by["d2"]) names[e] = "e2." + std::to_string(s.edges[e].level);
    for (int e : by["d4"]) names[e] = s.edges[e].level == n + 1 ? "s2" : "e4." + std::to_string(s.edges[e].level);
    for (int e : by["d3"]) {
        const SectionEdge& E = s.edges[e];
        if (E.level == n + 1) {
            if (E.piece != 0) return false;
            names[e] = "s1";
        } else {
            if (E.piece == 0) return false;
            names[e] = (E.piece == 1 ? "t" : "e3.") + std::to_string(E.level);
        }
    }
    for (std::size_t e = 0; e < s.edges.size(); ++e) {
        s.edges[e].name = names[e];
        s.graph.enames[e] = names[e];
    }
    return true;
}

Monodromy monodromy(const Section& s, const GraphMap& fr, const std::vector<std::string>& tree) {
    if (!s.connected()) throw InvariantError("section is disconnected (" + std::to_string(s.components) + " components)");
    const Graph& g = s.graph;
    int root = s.basepoint >= 0 ? s.basepoint : 0;
    SpanningTree t;
    if (!tree.empty()) {
        t = tree_from_edges(g, tree, root);
    } else {
        t.root = root;
        t.parent.assign(g.nv(), -1);
        t.in_tree.assign(g.ne(), false);
        std::vector<bool> seen(g.nv(), false);
        seen[root] = true;
        std::deque<int> q{root};
        while (!q.empty()) {
            int v = q.front();
            q.pop_front();
            for (int oe : g.directions_at(v)) {
                int w = g.term(oe);
                if (seen[w]) continue;
                seen[w] = true;
                t.parent[w] = oe;
                t.in_tree[Graph::edge_of(oe)] = true;
                q.push_back(w);
            }
        }
    }
    Monodromy m;
    m.aut = tree_automorphism(fr, t);
    m.tree = m.aut.tree;
    m.basepoint = g.vnames[root];
    return m;
}

SectionAudit section_audit(const TrapComplex& x, const Section& s, const GraphMap& fr, bool certify) {
    SectionAudit a;
    const Graph& g = s.graph;
    a.rank = s.rank();
    a.components = s.components;
    for (const auto& v : s.vertices)
        if (v.host >= 0 && x.c1[v.host].kind == Coarse1Cell::Skew) ++a.skew_crossings;
    for (int v = 0; v < g.nv(); ++v) ++a.valence_profile[g.valence(v)];
    auto turns = illegal_turns(fr);
    a.illegal_turns = int(turns.size());
    std::set<int> marked;
    for (const Turn& t : turns) {
        int v = g.init(t.d1);
        if (g.valence(v) == 3) marked.insert(v);
    }
    a.illegal_at_valence_three = int(marked.size());
    for (int e = 0; e < g.ne() && !a.untouched_edge; ++e)
        if (!marked.count(g.src[e]) && !marked.count(g.dst[e])) a.untouched_edge = true;
    if (certify) {
        a.train_track = is_train_track(fr).ok;
        a.irreducible = is_irreducible(fr);
        a.expanding = is_expanding(fr);
    }
    a.dim_bound = axis_dim_lower_bound(a.illegal_at_valence_three, a.untouched_edge);
    return a;
}

std::string section_dot(const TrapComplex& x, const Section& s) {
    std::ostringstream o;
    o << "digraph section {\n";
    for (std::size_t v = 0; v < s.vertices.size(); ++v) {
        const SectionVertex& sv = s.vertices[v];
        std::string attr;
        if (int(v) == s.basepoint) attr = "shape=star";
        else if (sv.host >= 0 && x.c1[sv.host].kind == Coarse1Cell::Skew) attr = "shape=diamond";
        else if (sv.host < 0) attr = "shape=point";
        o << "  \"" << sv.name << "\" [" << attr << (attr.empty() ? "" : ", ") << "label=\"" << sv.name << "\"];\n";
    }
    for (int e = 0; e < s.graph.ne(); ++e)
        o << "  \"" << s.graph.vnames[s.graph.src[e]] << "\" -> \"" << s.graph.vnames[s.graph.dst[e]] << "\" [label=\""
          << s.graph.enames[e] << "\"];\n";
    o << "}\n";
    return o.str();
}

std::string first_return_json(const GraphMap& fr) {
    nlohmann::json j = nlohmann::json::array();
    for (int e = 0; e < fr.dom.ne(); ++e)
        j.push_back({{"edge", fr.dom.enames[e]}, {"image", fr.cod.format_path(fr.emap[e])}});
    return j.dump(2);
}

}  // namespace fbc
