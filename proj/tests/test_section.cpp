#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <Eigen/Eigenvalues>

#include "fbc/section.hpp"

using namespace fbc;

namespace {

struct Example {
    MapFile mf = read_map_file(FBC_DATA_DIR "/phi_f3.map");
    TrapComplex x = build_torus(decompose(mf.map));
    ChainComplex cc = chain_complex(x);
    H1 h = h1(cc, named_cycles(cc, mf));
    ConeWitness r_star = cone_membership(cc, h, CohomClass{{Q(0), Q(1)}});
};

const Example& example() {
    static Example e;
    return e;
}

// Hand-built cocycle of k b* + (k+1) r* with small values on d1, d2, d3 and v1.
Cochain family_cocycle(const Example& e, int k) {
    const Q eps = frac(1, 8);
    Cochain z(e.cc.n1);
    std::map<std::string, Q> v{{"d1", eps},         {"d2", eps},     {"d3", eps},          {"v1", eps},
                               {"v2", 2 * eps},     {"u1", 2 * eps}, {"u2", k + 1 - 2 * eps}, {"w", Q(k + 1)},
                               {"v3", 1 - 3 * eps}, {"d4", 1 - 3 * eps}};
    for (auto& [n, q] : v) z[e.x.find1(n)] = q;
    return z;
}

// The first-return table of the family, written out from its closed form.
std::map<std::string, std::string> family_table(int k) {
    auto e = [](int j, int i) { return "e" + std::to_string(j) + "." + std::to_string(i); };
    std::map<std::string, std::string> t;
    t["e1"] = e(3, 1);
    for (int j = 2; j <= 4; ++j)
        for (int i = 1; i <= k; ++i) t[e(j, i)] = e(j, i + 1);
    t[e(2, k + 1)] = e(4, 1) + "'";
    t[e(3, k + 1)] = "t1 " + e(3, 1) + " " + e(2, 1);
    t[e(4, k + 1)] = "s2 e1";
    t["s1"] = e(2, 1) + " t1";
    t["s2"] = "t1";
    for (int i = 1; i <= k; ++i) t["t" + std::to_string(i)] = "t" + std::to_string(i + 1);
    t["t" + std::to_string(k + 1)] = "s1 e1 " + e(4, 1);
    return t;
}

std::map<std::string, std::string> family_monodromy(int k) {
    std::map<std::string, std::string> m{{"s1", "t1"}, {"s2", "s2 t1"}};
    for (int i = 1; i <= k; ++i) m["t" + std::to_string(i)] = "t" + std::to_string(i + 1);
    m["t" + std::to_string(k + 1)] = "s2 s1 t1 s2'";
    return m;
}

std::vector<std::string> tree_of_e_edges(const Section& s) {
    std::vector<std::string> t;
    for (const auto& e : s.edges)
        if (e.name[0] == 'e') t.push_back(e.name);
    return t;
}

// Multigraph with valence-2 vertices smoothed: vertex count and sorted edge endpoint pairs.
struct Shape {
    int nv = 0;
    std::vector<std::pair<int, int>> edges;
};

Shape smooth(const Graph& g) {
    std::vector<int> keep;
    std::vector<int> id(g.nv(), -1);
    for (int v = 0; v < g.nv(); ++v)
        if (g.valence(v) != 2) {
            id[v] = int(keep.size());
            keep.push_back(v);
        }
    Shape s;
    s.nv = int(keep.size());
    std::set<int> used;
    for (int v : keep)
        for (int oe : g.directions_at(v)) {
            if (used.count(oe)) continue;
            int cur = oe;
            used.insert(cur);
            while (id[g.term(cur)] < 0) {
                int w = g.term(cur);
                auto d = g.directions_at(w);
                int next = d[0] == Graph::rev(cur) ? d[1] : d[0];
                cur = next;
                used.insert(cur);
            }
            used.insert(Graph::rev(cur));
            int a = id[v], b = id[g.term(cur)];
            s.edges.push_back({std::min(a, b), std::max(a, b)});
        }
    std::sort(s.edges.begin(), s.edges.end());
    return s;
}

bool isomorphic(const Shape& a, const Shape& b) {
    if (a.nv != b.nv || a.edges.size() != b.edges.size()) return false;
    std::vector<int> p(a.nv);
    std::iota(p.begin(), p.end(), 0);
    do {
        std::vector<std::pair<int, int>> m;
        for (auto [x, y] : a.edges) m.push_back({std::min(p[x], p[y]), std::max(p[x], p[y])});
        std::sort(m.begin(), m.end());
        if (m == b.edges) return true;
    } while (std::next_permutation(p.begin(), p.end()));
    return false;
}

// Levels y0 + n strictly inside (a, a + z), counted by floor arithmetic.
long crossings(const Q& a, const Q& z, const Q& y0) {
    long n = 0;
    Q lo = a - y0, hi = a + z - y0;
    Z f = floor_q(hi).get_num(), c = ceil_q(lo).get_num();
    n = Z(f - c + 1).get_si();
    if (is_integer(lo)) --n;
    if (is_integer(hi)) --n;
    return std::max(0L, n);
}

}  // namespace

TEST_CASE("r* section is the base graph in the middle of a fold") {
    // A generic level meets a slab where one fold is half done, so the valence-4
    // vertex of the base graph is split into two trivalent ones.
    const auto& e = example();
    Section s = build_section(e.x, e.r_star.cocycle);
    CHECK(s.connected());
    CHECK(s.rank() == 3);
    Shape sh = smooth(s.graph), base = smooth(e.mf.map.dom);
    CHECK(base.nv == 3);
    CHECK(sh.nv == 4);
    CHECK(sh.edges.size() == 6);
    for (int v = 0; v < s.graph.nv(); ++v) CHECK((s.graph.valence(v) == 2 || s.graph.valence(v) == 3));
    CHECK_FALSE(isomorphic(sh, base));
    CHECK(s.vertices[s.basepoint].name == "d1#1");
    GraphMap fr = first_return(e.x, s);
    SectionAudit a = section_audit(e.x, s, fr);
    CHECK(a.train_track);
    CHECK(a.irreducible);
    CHECK(a.expanding);
}

TEST_CASE("r* sections reproduce the outer class of the map") {
    const auto& e = example();
    SectionOptions opt;
    opt.avoid_base = true;
    for (const Cochain& z : {e.r_star.cocycle, family_cocycle(e, 0)}) {
        Section s = build_section(e.x, z, opt);
        GraphMap fr = first_return(e.x, s);
        OuterComparison c = compare_outer(e.x, s, fr, *e.mf.marked);
        CHECK(c.iso);
        CHECK(c.equal);
        CHECK(outer_equal(c.base_aut, *e.mf.expected));
    }
}

TEST_CASE("avoiding level 0 is impossible when the class sees the fiber") {
    const auto& e = example();
    SectionOptions opt;
    opt.avoid_base = true;
    CHECK_THROWS_AS(build_section(e.x, family_cocycle(e, 1), opt), InvariantError);
}

TEST_CASE("lone-axis family sections") {
    const auto& e = example();
    for (int k = 0; k <= 5; ++k) {
        CAPTURE(k);
        Section s = build_section(e.x, family_cocycle(e, k));
        CHECK(s.graph.ne() == 4 * k + 7);
        CHECK(s.graph.nv() == 3 * k + 5);
        CHECK(s.rank() == k + 3);
        CHECK(s.connected());
        REQUIRE(family_names(s, e.x));
        GraphMap fr = first_return(e.x, s);
        std::map<std::string, std::string> table;
        for (int i = 0; i < fr.dom.ne(); ++i) table[fr.dom.enames[i]] = fr.cod.format_path(fr.emap[i]);
        CHECK(table == family_table(k));

        Monodromy m = monodromy(s, fr, tree_of_e_edges(s));
        CHECK(m.basepoint == "d1#1");
        std::map<std::string, std::string> aut;
        for (std::size_t i = 0; i < m.aut.map.rank(); ++i)
            aut[m.aut.map.gens[i]] = format_word(m.aut.map.images[i], m.aut.map.gens);
        std::map<std::string, std::string> want = family_monodromy(k);
        // words print with spaces only between multi-letter generators
        for (auto& [g, w] : aut) w.erase(std::remove(w.begin(), w.end(), ' '), w.end());
        for (auto& [g, w] : want) w.erase(std::remove(w.begin(), w.end(), ' '), w.end());
        CHECK(aut == want);

        SectionAudit a = section_audit(e.x, s, fr);
        CHECK(a.skew_crossings == 1);
        CHECK(a.illegal_turns == 1);
        CHECK(a.train_track);
        CHECK(a.irreducible);
        CHECK(a.expanding);
    }
}

TEST_CASE("family section tables serialize in edge order") {
    const auto& e = example();
    Section s = build_section(e.x, family_cocycle(e, 1));
    REQUIRE(family_names(s, e.x));
    std::string j = first_return_json(first_return(e.x, s));
    CHECK(j.find("\"edge\": \"e2.2\"") != std::string::npos);
    CHECK(j.find("\"image\": \"e4.1'\"") != std::string::npos);
    CHECK(section_dot(e.x, s).find("shape=star") != std::string::npos);
}

TEST_CASE("non-primitive classes give disconnected sections") {
    const auto& e = example();
    for (int m : {2, 3}) {
        Cochain z = e.r_star.cocycle;
        for (Q& v : z) v *= m;
        Section s = build_section(e.x, z);
        CHECK(s.components == m);
        CHECK_THROWS_AS(monodromy(s, first_return(e.x, s)), InvariantError);
    }
}

TEST_CASE("each 1-cell hosts one vertex per level crossing") {
    const auto& e = example();
    for (const Cochain& z : {e.r_star.cocycle, family_cocycle(e, 2)}) {
        Section s = build_section(e.x, z);
        std::map<int, long> hosted;
        for (const auto& v : s.vertices)
            if (v.host >= 0) ++hosted[v.host];
        long total = 0;
        for (int c = 0; c < e.cc.n1; ++c) {
            long want = 0;
            for (int f : e.x.c1[c].fine) want += crossings(s.eta[e.x.cells1[f].from], s.fine.z[f], s.y0);
            CHECK(hosted[c] == want);
            total += want;
        }
        CHECK(total > 0);
    }
}

TEST_CASE("fine extension is a positive cocycle with the coarse sums") {
    const auto& e = example();
    Cochain z = family_cocycle(e, 3);
    FineCocycle f = extend_to_fine(e.x, z);
    CHECK(f.epsilon > 0);
    for (std::size_t c = 0; c < e.x.cells1.size(); ++c)
        if (e.x.cells1[c].kind != Fine1Cell::Horizontal) CHECK(f.z[c] > 0);
    for (const auto& c : e.x.cells2) {
        Q s = 0;
        for (auto [cell, sign] : c.boundary()) s += sign * f.z[cell];
        CHECK(s == 0);
    }
    for (int c = 0; c < e.cc.n1; ++c) {
        Q s = 0;
        for (int fi : e.x.c1[c].fine) s += f.z[fi];
        CHECK(s == z[c]);
    }
}

TEST_CASE("non-integral classes are rejected") {
    const auto& e = example();
    Cochain z = e.r_star.cocycle;
    for (Q& v : z) v /= 2;
    CHECK_THROWS_AS(build_section(e.x, z), InvariantError);
}

TEST_CASE("section rank is linear along the cone") {
    // rank - 1 of the fiber is the linear function 2 r* - b* on the cone
    const auto& e = example();
    for (auto [q, p] : std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {1, 3}, {-1, 2}, {-1, 1}, {2, 5}}) {
        CohomClass c{{Q(q), Q(p)}};
        ConeWitness w = cone_membership(e.cc, e.h, c);
        REQUIRE(w.inside);
        Section s = build_section(e.x, w.cocycle);
        CHECK(s.connected());
        CHECK(s.rank() - 1 == 2 * p - q);
        GraphMap fr = first_return(e.x, s);
        SectionAudit a = section_audit(e.x, s, fr);
        CHECK(a.train_track);
        CHECK(a.irreducible);
    }
}

TEST_CASE("homology of the monodromy matches the mapping torus") {
    // rank H1 of the mapping torus of the monodromy is 1 + dim ker(A - I), A its abelianization
    const auto& e = example();
    for (int k = 0; k <= 3; ++k) {
        Section s = build_section(e.x, family_cocycle(e, k));
        GraphMap fr = first_return(e.x, s);
        Monodromy m = monodromy(s, fr);
        int n = int(m.aut.map.rank());
        QMat a(n, QVec(n));
        for (int j = 0; j < n; ++j)
            for (int l : m.aut.map.images[j]) a[std::abs(l) - 1][j] += l > 0 ? 1 : -1;
        for (int i = 0; i < n; ++i) a[i][i] -= 1;
        CHECK(1 + n - rank(a) == e.h.rank);
    }
}

TEST_CASE("folding illegal turns of a cone section") {
    const auto& e = example();
    DiscreteCone dc = discreteness_cone(e.x, e.cc, e.h, 1, e.h.index("r"), e.r_star.cocycle);
    CohomClass c{{Q(1), Q(dc.m + 1)}};
    REQUIRE(dc.contains(c));
    Section s = build_section(e.x, dc.cocycle(c));
    GraphMap fr = first_return(e.x, s);
    SectionAudit a = section_audit(e.x, s, fr, false);
    CHECK(a.illegal_at_valence_three >= 3);
    CHECK(a.untouched_edge);

    // two turns at distinct valence-3 vertices
    std::vector<Turn> turns;
    std::set<int> at;
    for (const Turn& t : illegal_turns(fr)) {
        int v = s.graph.init(t.d1);
        if (s.graph.valence(v) == 3 && at.insert(v).second) turns.push_back(t);
        if (turns.size() == 2) break;
    }
    REQUIRE(turns.size() == 2);
    std::vector<double> len(s.graph.ne(), 1.0 / s.graph.ne());
    CHECK(delta_lengths(s.graph, len, turns, {0, 0}) == len);
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0, 0.004);
    std::vector<std::vector<double>> seen;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> out = delta_lengths(s.graph, len, turns, {u(rng), u(rng)});
        double vol = 0;
        for (double l : out) vol += l;
        CHECK(std::abs(vol - 1) < 1e-12);
        seen.push_back(out);
    }
    std::sort(seen.begin(), seen.end());
    for (std::size_t i = 0; i + 1 < seen.size(); ++i) {
        double d = 0;
        for (std::size_t j = 0; j < seen[i].size(); ++j) d = std::max(d, std::abs(seen[i][j] - seen[i + 1][j]));
        CHECK(d > 0);
    }
}

TEST_CASE("homology spectral radius is bounded by the stretch factor") {
    // Equality fails already for k = 0: the action on homology has the golden ratio
    // as spectral radius, while the stretch factor is about 1.966.
    const auto& e = example();
    double lambda_phi = eigen_metric(e.mf.map).lambda;
    for (int k = 0; k <= 3; ++k) {
        Section s = build_section(e.x, family_cocycle(e, k));
        GraphMap fr = first_return(e.x, s);
        Monodromy m = monodromy(s, fr);
        int n = int(m.aut.map.rank());
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
        for (int j = 0; j < n; ++j)
            for (int l : m.aut.map.images[j]) a(std::abs(l) - 1, j) += l > 0 ? 1 : -1;
        double rho = a.eigenvalues().cwiseAbs().maxCoeff();
        double lambda = eigen_metric(fr).lambda;
        CHECK(rho <= lambda + 1e-9);
        if (k == 0) {
            CHECK(rho == doctest::Approx((1 + std::sqrt(5.0)) / 2).epsilon(1e-9));
            CHECK(lambda == doctest::Approx(lambda_phi).epsilon(1e-9));
        }
    }
}
