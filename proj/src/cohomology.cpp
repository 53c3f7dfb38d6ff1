#include "fbc/cohomology.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"

namespace fbc {

ChainComplex chain_complex(const TrapComplex& x) {
    ChainComplex cc;
    cc.n0 = int(x.c0.size());
    cc.n1 = int(x.c1.size());
    cc.n2 = int(x.c2.size());
    cc.d1 = zmat(cc.n0, cc.n1);
    cc.d2 = zmat(cc.n1, cc.n2);
    for (const auto& c : x.c0) cc.names0.push_back(c.name);
    for (int e = 0; e < cc.n1; ++e) {
        cc.names1.push_back(x.c1[e].name);
        cc.d1[x.c1[e].to][e] += 1;
        cc.d1[x.c1[e].from][e] -= 1;
    }
    for (int f = 0; f < cc.n2; ++f) {
        cc.names2.push_back(x.c2[f].name);
        for (auto [e, s] : x.c2[f].boundary) cc.d2[e][f] += s;
    }
    ZMat dd = zmul(cc.d1, cc.d2);
    for (const auto& row : dd)
        for (const Z& v : row)
            if (v != 0) throw InvariantError("boundary of a boundary is nonzero");
    return cc;
}

Chain chain_from_terms(const ChainComplex& cc, const std::vector<std::pair<long, std::string>>& terms) {
    Chain c(cc.n1);
    for (const auto& [coef, name] : terms) {
        auto it = std::find(cc.names1.begin(), cc.names1.end(), name);
        if (it == cc.names1.end()) throw ParseError("unknown 1-cell " + name);
        c[it - cc.names1.begin()] += coef;
    }
    return c;
}

bool is_cycle(const ChainComplex& cc, const Chain& c) {
    for (int v = 0; v < cc.n0; ++v) {
        Q s = 0;
        for (int e = 0; e < cc.n1; ++e)
            if (cc.d1[v][e] != 0) s += Q(cc.d1[v][e]) * c[e];
        if (s != 0) return false;
    }
    return true;
}

bool is_cocycle(const ChainComplex& cc, const Cochain& z) {
    for (int f = 0; f < cc.n2; ++f) {
        Q s = 0;
        for (int e = 0; e < cc.n1; ++e)
            if (cc.d2[e][f] != 0) s += Q(cc.d2[e][f]) * z[e];
        if (s != 0) return false;
    }
    return true;
}

Cochain coboundary(const ChainComplex& cc, const QVec& g) {
    Cochain z(cc.n1);
    for (int e = 0; e < cc.n1; ++e)
        for (int v = 0; v < cc.n0; ++v)
            if (cc.d1[v][e] != 0) z[e] += Q(cc.d1[v][e]) * g[v];
    return z;
}

Q pair(const Cochain& z, const Chain& c) {
    Q s = 0;
    for (std::size_t i = 0; i < z.size(); ++i) s += z[i] * c[i];
    return s;
}

int H1::index(const std::string& name) const {
    auto it = std::find(names.begin(), names.end(), name);
    return it == names.end() ? -1 : int(it - names.begin());
}

namespace {

// Cocycles dual to the given cycles; requires the cycles to be independent mod boundaries.
std::vector<Cochain> dual_cocycles(const ChainComplex& cc, const std::vector<Chain>& cycles) {
    QMat a;
    for (int f = 0; f < cc.n2; ++f) {
        QVec row(cc.n1);
        for (int e = 0; e < cc.n1; ++e) row[e] = cc.d2[e][f];
        a.push_back(row);
    }
    for (const auto& c : cycles) a.push_back(c);
    std::vector<Cochain> out;
    for (std::size_t i = 0; i < cycles.size(); ++i) {
        QVec b(a.size());
        b[cc.n2 + i] = 1;
        auto z = solve(a, b);
        if (!z) throw InvariantError("cycles are dependent modulo boundaries");
        out.push_back(*z);
    }
    return out;
}

// Coordinates of the free part of the homology lattice: the basis of ker d1
// adapted to im d2 by the Smith form.
struct Lattice {
    std::vector<Chain> free;  // free generators of H1
    std::vector<Z> torsion;
};

Lattice homology_lattice(const ChainComplex& cc) {
    auto ker = integer_kernel(cc.d1, cc.n1);
    int p = int(ker.size());
    Lattice L;
    if (p == 0) return L;
    // boundaries in kernel coordinates
    QMat K(cc.n1, QVec(p));
    for (int j = 0; j < p; ++j)
        for (int i = 0; i < cc.n1; ++i) K[i][j] = ker[j][i];
    ZMat B = zmat(p, cc.n2);
    for (int f = 0; f < cc.n2; ++f) {
        QVec col(cc.n1);
        for (int i = 0; i < cc.n1; ++i) col[i] = cc.d2[i][f];
        auto c = solve(K, col);
        if (!c) throw InvariantError("boundary is not a cycle");
        for (int j = 0; j < p; ++j) {
            if (!is_integer((*c)[j])) throw InvariantError("kernel basis is not saturated");
            B[j][f] = (*c)[j].get_num();
        }
    }
    Smith s = smith_normal_form(B, cc.n2);
    // new kernel basis = K u^-1; compute u^-1 exactly
    QMat uq = to_q(s.u);
    QMat uinv(p, QVec(p));
    for (int j = 0; j < p; ++j) {
        QVec e(p);
        e[j] = 1;
        auto col = solve(uq, e);
        for (int i = 0; i < p; ++i) uinv[i][j] = (*col)[i];
    }
    for (const Z& d : s.diag)
        if (d > 1) L.torsion.push_back(d);
    for (int j = s.rank(); j < p; ++j) {
        Chain c(cc.n1);
        for (int i = 0; i < cc.n1; ++i)
            for (int l = 0; l < p; ++l) c[i] += K[i][l] * uinv[l][j];
        L.free.push_back(c);
    }
    return L;
}

}  // namespace

H1 h1(const ChainComplex& cc, const std::vector<std::pair<std::string, Chain>>& named) {
    Lattice L = homology_lattice(cc);
    H1 h;
    h.rank = int(L.free.size());
    h.torsion = L.torsion;
    bool use_named = int(named.size()) == h.rank && h.rank > 0;
    if (use_named) {
        for (const auto& [n, c] : named)
            if (!is_cycle(cc, c)) use_named = false;
    }
    if (use_named) {
        // the named cycles must be a basis of the free part: unimodular against the Smith basis
        std::vector<Chain> cyc;
        for (const auto& [n, c] : named) cyc.push_back(c);
        try {
            auto dual = dual_cocycles(cc, L.free);
            QMat m(h.rank, QVec(h.rank));
            for (int i = 0; i < h.rank; ++i)
                for (int j = 0; j < h.rank; ++j) m[i][j] = pair(dual[j], cyc[i]);
            QMat mm = m;
            bool unimodular = rank(mm) == h.rank;
            for (const auto& row : m)
                for (const Q& v : row) unimodular = unimodular && is_integer(v);
            if (unimodular) {
                // det = +-1 via the integral inverse
                for (int j = 0; j < h.rank && unimodular; ++j) {
                    QVec e(h.rank);
                    e[j] = 1;
                    auto col = solve(m, e);
                    for (const Q& v : *col) unimodular = unimodular && is_integer(v);
                }
            }
            use_named = unimodular;
        } catch (const InvariantError&) {
            use_named = false;
        }
    }
    if (use_named) {
        for (const auto& [n, c] : named) {
            h.names.push_back(n);
            h.cycles.push_back(c);
        }
        h.source = "named";
    } else {
        h.cycles = L.free;
        for (int i = 0; i < h.rank; ++i) h.names.push_back("c" + std::to_string(i + 1));
        h.source = "smith";
    }
    h.cocycles = dual_cocycles(cc, h.cycles);
    return h;
}

std::vector<std::pair<std::string, Chain>> named_cycles(const ChainComplex& cc, const MapFile& mf) {
    std::vector<std::pair<std::string, Chain>> out;
    for (const auto& [name, terms] : mf.cycles) out.emplace_back(name, chain_from_terms(cc, terms));
    return out;
}

QVec homology_class(const H1& h, const Chain& c) {
    QVec v;
    for (const auto& z : h.cocycles) v.push_back(pair(z, c));
    return v;
}

bool CohomClass::integral() const {
    return std::all_of(coords.begin(), coords.end(), [](const Q& q) { return is_integer(q); });
}

bool CohomClass::primitive() const {
    if (!integral()) return false;
    Z g = 0;
    for (const Q& q : coords) g = gcd(g, Z(q.get_num()));
    return g == 1;
}

std::string CohomClass::str(const H1& h) const {
    std::string s;
    for (std::size_t i = 0; i < coords.size(); ++i) {
        if (coords[i] == 0) continue;
        Q a = abs(coords[i]);
        s += s.empty() ? (coords[i] < 0 ? "-" : "") : (coords[i] < 0 ? " - " : " + ");
        if (a != 1) s += a.get_str();
        s += h.names[i] + "*";
    }
    return s.empty() ? "0" : s;
}

Cochain representative(const H1& h, const CohomClass& c) {
    Cochain z(h.cocycles.empty() ? 0 : h.cocycles[0].size());
    for (std::size_t i = 0; i < c.coords.size(); ++i)
        for (std::size_t e = 0; e < z.size(); ++e) z[e] += c.coords[i] * h.cocycles[i][e];
    return z;
}

Q evaluate(const ChainComplex& cc, const H1& h, const CohomClass& c, const Chain& loop) {
    if (!is_cycle(cc, loop)) throw InvariantError("chain is not a cycle");
    return pair(representative(h, c), loop);
}

Cochain time_cochain(const TrapComplex& x) {
    Cochain t(x.c1.size());
    for (std::size_t e = 0; e < x.c1.size(); ++e)
        for (int f : x.c1[e].fine) t[e] += x.time(f);
    return t;
}

bool ConeWitness::verify(const ChainComplex& cc, const Cochain& rep) const {
    if (inside) {
        if (!is_cocycle(cc, cocycle)) return false;
        for (const Q& v : cocycle)
            if (v <= 0) return false;
        // same class: the difference is a coboundary
        QVec diff(cc.n1);
        for (int e = 0; e < cc.n1; ++e) diff[e] = cocycle[e] - rep[e];
        QMat a(cc.n1, QVec(cc.n0));
        for (int e = 0; e < cc.n1; ++e)
            for (int v = 0; v < cc.n0; ++v) a[e][v] = cc.d1[v][e];
        return solve(a, diff).has_value();
    }
    if (!is_cycle(cc, certificate)) return false;
    Q total = 0;
    for (const Q& v : certificate) {
        if (v < 0) return false;
        total += v;
    }
    return total == 1 && pair(rep, certificate) <= 0 && pair(rep, certificate) == certificate_value;
}

ConeWitness cone_membership(const ChainComplex& cc, const Cochain& rep) {
    ConeWitness w;
    // maximize eps: rep(e) + g(to) - g(from) >= eps, eps <= 1
    int n = cc.n0 + 1, eps = cc.n0;
    LP lp(n);
    for (int j = 0; j < n; ++j) lp.free[j] = true;
    lp.c[eps] = 1;
    for (int e = 0; e < cc.n1; ++e) {
        QVec row(n);
        for (int v = 0; v < cc.n0; ++v) row[v] = -Q(cc.d1[v][e]);
        row[eps] = 1;
        lp.add(row, LP::Le, rep[e]);
    }
    QVec cap(n);
    cap[eps] = 1;
    lp.add(cap, LP::Le, 1);
    LPResult r = solve_lp(lp);
    if (r.status != LPResult::Optimal) throw InvariantError("cone LP is " + r.str());
    w.epsilon = r.value;
    if (w.epsilon > 0) {
        w.inside = true;
        QVec g(r.x.begin(), r.x.begin() + cc.n0);
        w.cocycle = coboundary(cc, g);
        for (int e = 0; e < cc.n1; ++e) w.cocycle[e] += rep[e];
        return w;
    }
    // Farkas side: minimize rep.y over nonnegative cycles of weight 1
    LP dual(cc.n1);
    for (int e = 0; e < cc.n1; ++e) dual.c[e] = -rep[e];
    for (int v = 0; v < cc.n0; ++v) {
        QVec row(cc.n1);
        for (int e = 0; e < cc.n1; ++e) row[e] = cc.d1[v][e];
        dual.add(row, LP::Eq, 0);
    }
    dual.add(QVec(cc.n1, Q(1)), LP::Eq, 1);
    LPResult d = solve_lp(dual);
    if (d.status != LPResult::Optimal) throw InvariantError("certificate LP is " + d.str());
    w.certificate = d.x;
    w.certificate_value = -d.value;
    return w;
}

ConeWitness cone_membership(const ChainComplex& cc, const H1& h, const CohomClass& c) {
    return cone_membership(cc, representative(h, c));
}

bool DiscreteCone::contains(const CohomClass& c) const {
    const Q& p = c.coords[base];
    if (p <= 0) return false;
    for (std::size_t i = 0; i < c.coords.size(); ++i)
        if (int(i) != base && abs(c.coords[i]) * m >= p) return false;
    return true;
}

Cochain DiscreteCone::cocycle(const CohomClass& c) const {
    Cochain z(z_base.size());
    for (std::size_t e = 0; e < z.size(); ++e) z[e] = c.coords[base] * z_base[e];
    for (const auto& [i, zi] : others)
        for (std::size_t e = 0; e < z.size(); ++e) z[e] += c.coords[i] * zi[e];
    return z;
}

DiscreteCone discreteness_cone(const TrapComplex& x, const ChainComplex& cc, const H1& h, int k, int base,
                               const Cochain& z_base) {
    for (const Q& v : z_base)
        if (v <= 0) throw InvariantError("base cocycle is not positive");
    if (!is_cocycle(cc, z_base)) throw InvariantError("base cochain is not a cocycle");
    DiscreteCone D;
    D.k = k;
    D.base = base;
    D.z_base = z_base;
    for (int i = 0; i < h.rank; ++i)
        if (i != base) D.others.emplace_back(i, h.cocycles[i]);
    auto spread = [&](int e) {
        Q s = 0;
        for (const auto& [i, z] : D.others) s += abs(z[e]);
        return s;
    };
    // smallest integer M with M a > b, a > 0
    auto least = [](const Q& a, const Q& b) {
        Q q = b / a;
        Q m = floor_q(q) + 1;
        return m.get_num().get_si();
    };
    long m0 = 0;
    for (int e = 0; e < cc.n1; ++e) m0 = std::max(m0, least(z_base[e], spread(e)));
    for (int e = 0; e < cc.n1; ++e) {
        if (x.c1[e].kind != Coarse1Cell::Skew) continue;
        long md = std::max(m0, least(z_base[e], spread(e) + k + 2));
        D.per_skew.emplace_back(e, md);
        if (D.skew < 0 || md < D.m) {
            D.m = md;
            D.skew = e;
        }
    }
    if (D.skew < 0) throw InvariantError("complex has no skew cells");
    return D;
}

int axis_dim_lower_bound(int illegal_at_valence_three, bool has_untouched_edge) {
    int n = illegal_at_valence_three;
    return has_untouched_edge ? n : std::max(0, n - 2);
}

std::vector<std::vector<int>> delta_table(const Graph& g, const std::vector<Turn>& turns) {
    std::set<int> seen;
    std::vector<std::vector<int>> t;
    for (const Turn& tr : turns) {
        int v = g.init(tr.d1);
        if (g.init(tr.d2) != v) throw InvariantError("turn directions leave different vertices");
        if (!seen.insert(v).second) throw InvariantError("two turns at vertex " + g.vnames[v]);
        std::vector<int> row(g.ne(), 0);
        for (int e = 0; e < g.ne(); ++e) {
            if (g.src[e] == g.dst[e]) continue;
            if (g.src[e] != v && g.dst[e] != v) continue;
            row[e] = (e == Graph::edge_of(tr.d1) || e == Graph::edge_of(tr.d2)) ? -1 : 1;
        }
        t.push_back(row);
    }
    return t;
}

std::vector<double> delta_lengths(const Graph& g, const std::vector<double>& lengths, const std::vector<Turn>& turns,
                                  const std::vector<double>& t) {
    auto delta = delta_table(g, turns);
    double total = 0;
    for (double x : t) total += x;
    if (total >= 1) throw InvariantError("fold parameters sum to at least 1");
    std::vector<double> out(g.ne());
    for (int e = 0; e < g.ne(); ++e) {
        double l = lengths[e];
        for (std::size_t i = 0; i < turns.size(); ++i) l += delta[i][e] * t[i];
        out[e] = l / (1 - total);
    }
    return out;
}

std::string cochain_json(const ChainComplex& cc, const Cochain& z) {
    nlohmann::json j = nlohmann::json::object();
    for (int e = 0; e < cc.n1; ++e) j[cc.names1[e]] = z[e].get_str();
    return j.dump();
}

}  // namespace fbc
