#include "fbc/traintrack.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

namespace fbc {

std::string format_turn(const Graph& g, const Turn& t) {
    return "{" + g.oname(t.d1) + ", " + g.oname(t.d2) + "}";
}

std::vector<int> direction_map(const GraphMap& f) {
    std::vector<int> df(2 * f.dom.ne());
    for (int oe = 0; oe < int(df.size()); ++oe) df[oe] = f.image(oe).front();
    return df;
}

std::vector<int> periodic_directions(const GraphMap& f) {
    std::vector<int> df = direction_map(f), out;
    int n = int(df.size());
    for (int d = 0; d < n; ++d) {
        int x = df[d];
        for (int i = 0; i < n && x != d; ++i) x = df[x];
        if (x == d) out.push_back(d);
    }
    return out;
}

std::vector<Turn> illegal_turns(const GraphMap& f) {
    const Graph& g = f.dom;
    std::vector<int> df = direction_map(f);
    int n = int(df.size());
    std::vector<Turn> out;
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            if (g.init(a) != g.init(b)) continue;
            std::set<Turn> seen;
            Turn t(a, b);
            while (!t.degenerate() && seen.insert(t).second) t = Turn(df[t.d1], df[t.d2]);
            if (t.degenerate()) out.emplace_back(a, b);
        }
    return out;
}

std::vector<Turn> turns_in_path(const Graph&, const Path& p) {
    std::vector<Turn> out;
    for (std::size_t i = 1; i < p.size(); ++i) out.emplace_back(Graph::rev(p[i - 1]), p[i]);
    return out;
}

TrainTrackWitness is_train_track(const GraphMap& f) {
    std::vector<Turn> bad = illegal_turns(f);
    std::set<Turn> illegal(bad.begin(), bad.end());
    TrainTrackWitness w;
    for (int e = 0; e < f.dom.ne(); ++e) {
        std::vector<Turn> ts = turns_in_path(f.cod, f.emap[e]);
        for (std::size_t i = 0; i < ts.size(); ++i)
            if (ts[i].degenerate() || illegal.count(ts[i])) {
                w.ok = false;
                w.edge = e;
                w.position = int(i);
                w.turn = ts[i];
                return w;
            }
    }
    return w;
}

IntMatrix transition_matrix(const GraphMap& f) {
    int n = f.dom.ne(), m = f.cod.ne();
    IntMatrix a(n, std::vector<long>(m, 0));
    for (int i = 0; i < n; ++i)
        for (int oe : f.emap[i]) ++a[i][Graph::edge_of(oe)];
    return a;
}

IntMatrix multiply(const IntMatrix& a, const IntMatrix& b) {
    std::size_t n = a.size(), m = b.empty() ? 0 : b[0].size();
    IntMatrix c(n, std::vector<long>(m, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < b.size(); ++k)
            if (a[i][k])
                for (std::size_t j = 0; j < m; ++j) c[i][j] += a[i][k] * b[k][j];
    return c;
}

static std::vector<std::vector<bool>> reachability(const IntMatrix& a) {
    std::size_t n = a.size();
    std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) r[i][j] = a[i][j] > 0;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            if (r[i][k])
                for (std::size_t j = 0; j < n; ++j)
                    if (r[k][j]) r[i][j] = true;
    return r;
}

bool is_irreducible(const IntMatrix& a) {
    auto r = reachability(a);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a.size(); ++j)
            if (!r[i][j]) return false;
    return !a.empty();
}

bool is_irreducible(const GraphMap& f) { return is_irreducible(transition_matrix(f)); }

bool is_expanding(const GraphMap& f) {
    // Spectral radius > 1 iff some strong component is not a permutation block.
    IntMatrix a = transition_matrix(f);
    auto r = reachability(a);
    std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (!r[i][i]) continue;
        long inside = 0;
        for (std::size_t j = 0; j < n; ++j)
            if (r[i][j] && r[j][i]) inside += a[i][j];
        if (inside >= 2) return true;
    }
    return false;
}

EigenMetric eigen_metric(const GraphMap& f) {
    IntMatrix a = transition_matrix(f);
    if (!is_irreducible(a)) throw std::invalid_argument("eigen_metric: map is not irreducible");
    if (!is_expanding(f)) throw std::invalid_argument("eigen_metric: map is not expanding");
    std::size_t n = a.size();
    std::vector<long double> x(n, 1.0L / n), y(n);
    EigenMetric em;
    for (int it = 0; it < 100000; ++it) {
        long double s = 0;
        for (std::size_t j = 0; j < n; ++j) {
            y[j] = x[j];
            for (std::size_t i = 0; i < n; ++i) y[j] += x[i] * a[i][j];
            s += y[j];
        }
        long double diff = 0;
        for (std::size_t j = 0; j < n; ++j) {
            y[j] /= s;
            diff = std::max(diff, std::fabs(y[j] - x[j]));
        }
        x = y;
        em.iterations = it + 1;
        if (diff < 1e-16L) break;
    }
    // lambda from the Rayleigh-type ratio sum(x^T A) / sum(x) with sum(x) = 1
    long double lam = 0;
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) lam += x[i] * a[i][j];
    long double res = 0;
    for (std::size_t j = 0; j < n; ++j) {
        long double v = -lam * x[j];
        for (std::size_t i = 0; i < n; ++i) v += x[i] * a[i][j];
        res = std::max(res, std::fabs(v));
    }
    em.lambda = double(lam);
    em.residual = double(res);
    for (auto v : x) em.lengths.push_back(double(v));
    return em;
}

std::vector<Turn> taken_turns(const GraphMap& f) {
    std::vector<int> df = direction_map(f);
    std::set<Turn> taken;
    std::vector<Turn> work;
    for (int e = 0; e < f.dom.ne(); ++e)
        for (const Turn& t : turns_in_path(f.cod, f.emap[e]))
            if (!t.degenerate() && taken.insert(t).second) work.push_back(t);
    while (!work.empty()) {
        Turn t = work.back();
        work.pop_back();
        Turn u(df[t.d1], df[t.d2]);
        if (!u.degenerate() && taken.insert(u).second) work.push_back(u);
    }
    return {taken.begin(), taken.end()};
}

NielsenReport nielsen_search(const GraphMap& f, int max_len, int max_period) {
    const Graph& g = f.dom;
    NielsenReport rep;
    rep.max_len = max_len;
    rep.max_period = max_period;
    // Tight images f^p(e) for every oriented edge; images of paths are built
    // incrementally by concatenating these with cancellation at the junction.
    std::vector<std::vector<Path>> fp(max_period + 1, std::vector<Path>(2 * g.ne()));
    for (int oe = 0; oe < 2 * g.ne(); ++oe) {
        Path q{oe};
        for (int p = 1; p <= max_period; ++p) {
            q = tighten(g, f.apply(q));
            fp[p][oe] = q;
        }
    }
    std::vector<std::vector<int>> vp(max_period + 1, std::vector<int>(g.nv()));
    for (int v = 0; v < g.nv(); ++v) {
        int x = v;
        for (int p = 1; p <= max_period; ++p) vp[p][v] = x = f.vmap[x];
    }
    auto extend = [](Path q, const Path& tail) {
        std::size_t i = 0;
        while (i < tail.size() && !q.empty() && q.back() == Graph::rev(tail[i])) {
            q.pop_back();
            ++i;
        }
        q.insert(q.end(), tail.begin() + long(i), tail.end());
        return q;
    };
    Path rho;
    std::vector<std::vector<Path>> imgs{std::vector<Path>(max_period + 1)};
    std::function<void()> grow = [&]() {
        if (!rho.empty()) {
            ++rep.searched;
            if (rho <= reverse_path(rho)) {
                int a = g.init(rho.front()), b = g.term(rho.back());
                for (int p = 1; p <= max_period; ++p)
                    if (vp[p][a] == a && vp[p][b] == b && imgs.back()[p] == rho) {
                        rep.found.emplace_back(rho, p);
                        break;
                    }
            }
        }
        if (int(rho.size()) == max_len) return;
        int v = rho.empty() ? -1 : g.term(rho.back());
        for (int oe = 0; oe < 2 * g.ne(); ++oe) {
            if (v >= 0 && (g.init(oe) != v || oe == Graph::rev(rho.back()))) continue;
            std::vector<Path> next(max_period + 1);
            for (int p = 1; p <= max_period; ++p) next[p] = extend(imgs.back()[p], fp[p][oe]);
            rho.push_back(oe);
            imgs.push_back(std::move(next));
            grow();
            imgs.pop_back();
            rho.pop_back();
        }
    };
    grow();
    return rep;
}

bool IWComponent::has_cut_vertex() const {
    int n = int(dirs.size());
    if (n < 3) return false;
    for (int cut = 0; cut < n; ++cut) {
        std::vector<int> comp(n, -1);
        int start = cut == 0 ? 1 : 0;
        std::vector<int> stack{start};
        comp[start] = 0;
        int reached = 1;
        while (!stack.empty()) {
            int x = stack.back();
            stack.pop_back();
            for (auto [a, b] : edges) {
                int y = a == x ? b : b == x ? a : -1;
                if (y < 0 || y == cut || comp[y] >= 0) continue;
                comp[y] = 0;
                ++reached;
                stack.push_back(y);
            }
        }
        if (reached < n - 1) return true;
    }
    return false;
}

std::vector<int> IdealWhiteheadGraph::sizes() const {
    std::vector<int> s;
    for (const auto& c : components) s.push_back(int(c.dirs.size()));
    return s;
}

IdealWhiteheadGraph ideal_whitehead(const GraphMap& f, bool no_pnp) {
    if (!no_pnp)
        throw std::invalid_argument(
            "ideal_whitehead: periodic Nielsen paths not excluded; identifications along them are not implemented");
    const Graph& g = f.dom;
    std::vector<int> per = periodic_directions(f);
    std::vector<Turn> taken = taken_turns(f);
    IdealWhiteheadGraph iw;
    for (int v = 0; v < g.nv(); ++v) {
        int x = f.vmap[v];
        for (int i = 0; i < g.nv() && x != v; ++i) x = f.vmap[x];
        if (x != v) continue;
        std::vector<int> dirs;
        for (int d : per)
            if (g.init(d) == v) dirs.push_back(d);
        if (dirs.size() < 3) continue;
        // split the stable Whitehead graph at v into connected pieces
        std::vector<int> comp(dirs.size(), -1);
        auto idx = [&](int d) { return int(std::find(dirs.begin(), dirs.end(), d) - dirs.begin()); };
        std::vector<std::pair<int, int>> edges;
        for (const Turn& t : taken) {
            int a = idx(t.d1), b = idx(t.d2);
            if (a < int(dirs.size()) && b < int(dirs.size())) edges.emplace_back(a, b);
        }
        int ncomp = 0;
        for (std::size_t s = 0; s < dirs.size(); ++s) {
            if (comp[s] >= 0) continue;
            std::vector<int> stack{int(s)};
            comp[s] = ncomp;
            while (!stack.empty()) {
                int y = stack.back();
                stack.pop_back();
                for (auto [a, b] : edges) {
                    int z = a == y ? b : b == y ? a : -1;
                    if (z >= 0 && comp[z] < 0) {
                        comp[z] = ncomp;
                        stack.push_back(z);
                    }
                }
            }
            ++ncomp;
        }
        for (int c = 0; c < ncomp; ++c) {
            IWComponent wc;
            wc.vertex = v;
            std::vector<int> local(dirs.size(), -1);
            for (std::size_t s = 0; s < dirs.size(); ++s)
                if (comp[s] == c) {
                    local[s] = int(wc.dirs.size());
                    wc.dirs.push_back(dirs[s]);
                }
            for (auto [a, b] : edges)
                if (comp[a] == c) wc.edges.emplace_back(local[a], local[b]);
            iw.components.push_back(wc);
        }
    }
    return iw;
}

Q rotationless_index(const IdealWhiteheadGraph& iw) {
    Q sum = 0;
    for (const auto& c : iw.components) sum += 1 - frac(long(c.dirs.size()), 2);
    return sum;
}

std::string iw_dot(const Graph& g, const IdealWhiteheadGraph& iw) {
    std::ostringstream out;
    out << "graph IW {\n";
    for (std::size_t c = 0; c < iw.components.size(); ++c) {
        const auto& comp = iw.components[c];
        out << "  subgraph cluster_" << c << " {\n    label=\"" << g.vnames[comp.vertex] << "\";\n";
        for (int d : comp.dirs) out << "    \"" << g.oname(d) << "\";\n";
        for (auto [a, b] : comp.edges)
            out << "    \"" << g.oname(comp.dirs[a]) << "\" -- \"" << g.oname(comp.dirs[b]) << "\";\n";
        out << "  }\n";
    }
    out << "}\n";
    return out.str();
}

Verdict lone_axis_check(const GraphMap& f, const LoneAxisOptions& opt) {
    Verdict v;
    v.assumptions.push_back(opt.assume_ageometric ? "ageometric: asserted by input" : "ageometric: not asserted");
    v.assumptions.push_back(opt.assume_fully_irreducible ? "fully irreducible: asserted by input"
                                                         : "fully irreducible: not asserted");
    if (!is_train_track(f).ok || !is_irreducible(f) || !is_expanding(f)) {
        v.reason = "input is not an expanding irreducible train track map";
        return v;
    }
    std::vector<Turn> ill = illegal_turns(f);
    if (ill.size() >= 2) {
        v.kind = Verdict::No;
        v.reason = "at least two illegal turns, so the axis bundle is not a single line";
        return v;
    }
    NielsenReport nr = nielsen_search(f, opt.nielsen_len, opt.nielsen_period);
    if (!nr.none_found()) {
        v.reason = "periodic Nielsen path found; ideal Whitehead graph identifications are not implemented";
        return v;
    }
    v.assumptions.push_back("no periodic Nielsen paths up to length " + std::to_string(opt.nielsen_len) +
                            " and period " + std::to_string(opt.nielsen_period));
    if (!opt.assume_ageometric || !opt.assume_fully_irreducible) {
        v.reason = "ageometric or fully irreducible not asserted";
        return v;
    }
    IdealWhiteheadGraph iw = ideal_whitehead(f, true);
    Q index = rotationless_index(iw);
    Q target = frac(3, 2) - rank(f.dom);
    if (index != target) {
        v.kind = Verdict::No;
        v.reason = "rotationless index " + index.get_str() + " differs from " + target.get_str();
        return v;
    }
    for (const auto& c : iw.components)
        if (c.has_cut_vertex()) {
            v.kind = Verdict::No;
            v.reason = "an ideal Whitehead graph component has a cut vertex";
            return v;
        }
    v.kind = Verdict::Yes;
    v.reason = "index " + index.get_str() + " and no component has a cut vertex";
    return v;
}

}  // namespace fbc
