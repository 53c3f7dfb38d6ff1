#include "doctest.h"

#include <random>

#include "fbc/cohomology.hpp"
#include "fbc/torus.hpp"

using namespace fbc;

namespace {

struct Example {
    MapFile mf = read_map_file(FBC_DATA_DIR "/phi_f3.map");
    TrapComplex x = build_torus(decompose(mf.map));
    ChainComplex cc = chain_complex(x);
    H1 h = h1(cc, named_cycles(cc, mf));
};

const Example& example() {
    static Example e;
    return e;
}

Chain skew_chain(const Example& e) {
    Chain s(e.cc.n1);
    for (auto [c, k] : skew_loop(e.x).chain) s[c] += k;
    return s;
}

Q at(const Example& e, const Cochain& z, const std::string& cell) { return z[e.x.find1(cell)]; }

// Independent check of a witness: cocycle, positive on every 1-cell, and the right values on b and r.
void check_inside(const Example& e, const ConeWitness& w, const CohomClass& c) {
    REQUIRE(w.inside);
    CHECK(is_cocycle(e.cc, w.cocycle));
    for (const Q& v : w.cocycle) CHECK(v > 0);
    for (std::size_t i = 0; i < e.h.cycles.size(); ++i) CHECK(pair(w.cocycle, e.h.cycles[i]) == c.coords[i]);
}

}  // namespace

TEST_CASE("boundary maps compose to zero") {
    const auto& e = example();
    CHECK(e.cc.n0 == 6);
    CHECK(e.cc.n1 == 10);
    CHECK(e.cc.n2 == 4);
    ZMat dd = zmul(e.cc.d1, e.cc.d2);
    for (const auto& row : dd)
        for (const Z& v : row) CHECK(v == 0);
}

TEST_CASE("first homology has rank two with the named basis") {
    const auto& e = example();
    CHECK(e.h.rank == 2);
    CHECK(e.h.torsion.empty());
    CHECK(e.h.source == "named");
    REQUIRE(e.h.names == std::vector<std::string>{"b", "r"});
    for (const Chain& c : e.h.cycles) CHECK(is_cycle(e.cc, c));
    // dual basis
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j) CHECK(pair(e.h.cocycles[i], e.h.cycles[j]) == Q(i == j ? 1 : 0));
}

TEST_CASE("smith basis has the same rank") {
    const auto& e = example();
    H1 s = h1(e.cc);
    CHECK(s.rank == 2);
    CHECK(s.source == "smith");
}

TEST_CASE("skew loop has class r minus b") {
    const auto& e = example();
    Chain s = skew_chain(e);
    REQUIRE(is_cycle(e.cc, s));
    CHECK(homology_class(e.h, s) == QVec{Q(-1), Q(1)});
    CHECK(evaluate(e.cc, e.h, CohomClass{{Q(0), Q(1)}}, s) == 1);
    CHECK(evaluate(e.cc, e.h, CohomClass{{Q(1), Q(0)}}, s) == -1);
    for (int k = 0; k <= 5; ++k) CHECK(evaluate(e.cc, e.h, CohomClass{{Q(k), Q(k + 1)}}, s) == 1);
    CHECK(evaluate(e.cc, e.h, CohomClass{{Q(3), Q(7)}}, Chain(e.cc.n1)) == 0);
}

TEST_CASE("evaluate rejects a non-cycle") {
    const auto& e = example();
    Chain c(e.cc.n1);
    c[e.x.find1("d1")] = 1;
    CHECK_THROWS_AS(evaluate(e.cc, e.h, CohomClass{{Q(0), Q(1)}}, c), InvariantError);
}

TEST_CASE("evaluation depends only on the homology class") {
    const auto& e = example();
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> coef(-3, 3);
    Chain s = skew_chain(e);
    CohomClass c{{Q(2), Q(5)}};
    Q v = evaluate(e.cc, e.h, c, s);
    for (int trial = 0; trial < 50; ++trial) {
        Chain t = s;
        for (int f = 0; f < e.cc.n2; ++f) {
            int k = coef(rng);
            for (int i = 0; i < e.cc.n1; ++i) t[i] += k * Q(e.cc.d2[i][f]);
        }
        CHECK(evaluate(e.cc, e.h, c, t) == v);
    }
}

TEST_CASE("flow time cochain") {
    const auto& e = example();
    Cochain t = time_cochain(e.x);
    CHECK(is_cocycle(e.cc, t));
    for (const char* d : {"d1", "d2", "d3", "d4", "v1", "v3"}) CHECK(at(e, t, d) == Q(1, 4));
    for (const char* d : {"u1", "u2", "v2"}) CHECK(at(e, t, d) == Q(1, 2));
    CHECK(at(e, t, "w") == 1);
    // the time class is r*: one period along r, none along b
    CHECK(pair(t, e.h.cycles[0]) == 0);
    CHECK(pair(t, e.h.cycles[1]) == 1);
}

TEST_CASE("cone membership on the r* + t b* line") {
    const auto& e = example();
    for (Q t : {Q(-1), frac(-1, 2), Q(0), frac(1, 2), frac(3, 4)}) {
        CohomClass c{{t, Q(1)}};
        ConeWitness w = cone_membership(e.cc, e.h, c);
        check_inside(e, w, c);
        CHECK(w.verify(e.cc, representative(e.h, c)));
    }
    for (Q t : {Q(1), Q(2)}) {
        CohomClass c{{t, Q(1)}};
        ConeWitness w = cone_membership(e.cc, e.h, c);
        REQUIRE_FALSE(w.inside);
        // certificate: nonnegative cycle of weight one where the class is not positive
        CHECK(is_cycle(e.cc, w.certificate));
        Q total = 0;
        for (const Q& v : w.certificate) {
            CHECK(v >= 0);
            total += v;
        }
        CHECK(total == 1);
        CHECK(pair(representative(e.h, c), w.certificate) <= 0);
        CHECK(pair(representative(e.h, c), w.certificate) == w.certificate_value);
        CHECK(w.verify(e.cc, representative(e.h, c)));
    }
}

TEST_CASE("cone membership is projectively invariant") {
    const auto& e = example();
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> num(-12, 12), scale(1, 9);
    for (int trial = 0; trial < 30; ++trial) {
        CohomClass c{{Q(num(rng)), Q(num(rng))}};
        CohomClass d{{c.coords[0] * scale(rng), Q(0)}};
        d.coords[1] = c.coords[1] * (d.coords[0] == 0 ? Q(scale(rng)) : d.coords[0] / c.coords[0]);
        if (c.coords[0] == 0) d.coords[0] = 0;
        ConeWitness a = cone_membership(e.cc, e.h, c), b = cone_membership(e.cc, e.h, d);
        CHECK(a.inside == b.inside);
        if (!a.inside) continue;
        Q lam = c.coords[1] != 0 ? d.coords[1] / c.coords[1] : d.coords[0] / c.coords[0];
        Cochain scaled = a.cocycle;
        for (Q& v : scaled) v *= lam;
        ConeWitness sw;
        sw.inside = true;
        sw.cocycle = scaled;
        CHECK(sw.verify(e.cc, representative(e.h, d)));
    }
}

TEST_CASE("coboundary shifts keep the cocycle condition and the class") {
    const auto& e = example();
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> num(-20, 20), den(1, 7);
    Cochain z = representative(e.h, CohomClass{{Q(2), Q(3)}});
    for (int trial = 0; trial < 200; ++trial) {
        QVec g(e.cc.n0);
        for (Q& v : g) v = frac(num(rng), den(rng));
        Cochain s = coboundary(e.cc, g);
        CHECK(is_cocycle(e.cc, s));
        Cochain y = z;
        for (int i = 0; i < e.cc.n1; ++i) y[i] += s[i];
        CHECK(is_cocycle(e.cc, y));
        for (const Chain& c : e.h.cycles) CHECK(pair(y, c) == pair(z, c));
    }
}

TEST_CASE("discreteness cone inequalities hold at every 1-cell") {
    const auto& e = example();
    ConeWitness w = cone_membership(e.cc, e.h, CohomClass{{Q(0), Q(1)}});
    REQUIRE(w.inside);
    int r = e.h.index("r");
    for (int k : {0, 1, 5}) {
        DiscreteCone dc = discreteness_cone(e.x, e.cc, e.h, k, r, w.cocycle);
        REQUIRE(dc.m > 0);
        for (int c = 0; c < e.cc.n1; ++c) {
            Q s = 0;
            for (const auto& [i, z] : dc.others) s += abs(z[c]);
            Q lhs = Q(dc.m) * dc.z_base[c] - s;
            CHECK(lhs > 0);
            if (c == dc.skew) CHECK(lhs > k + 2);
        }
        // minimality: M - 1 fails one of the inequalities
        bool fails = false;
        for (int c = 0; c < e.cc.n1; ++c) {
            Q s = 0;
            for (const auto& [i, z] : dc.others) s += abs(z[c]);
            Q lhs = Q(dc.m - 1) * dc.z_base[c] - s;
            if (lhs <= 0 || (c == dc.skew && lhs <= k + 2)) fails = true;
        }
        CHECK(fails);
    }
    long m0 = discreteness_cone(e.x, e.cc, e.h, 0, r, w.cocycle).m;
    long m5 = discreteness_cone(e.x, e.cc, e.h, 5, r, w.cocycle).m;
    CHECK(m0 <= m5);
}

TEST_CASE("discreteness cone classes are positive with a large skew value") {
    const auto& e = example();
    ConeWitness w = cone_membership(e.cc, e.h, CohomClass{{Q(0), Q(1)}});
    int r = e.h.index("r");
    const int k = 1;
    DiscreteCone dc = discreteness_cone(e.x, e.cc, e.h, k, r, w.cocycle);
    int tested = 0;
    for (long p = 1; p <= 40; ++p)
        for (long q = -p; q <= p; ++q) {
            CohomClass c{{Q(q), Q(p)}};
            if (q == 0 || !c.primitive() || !dc.contains(c)) continue;
            Cochain z = dc.cocycle(c);
            CHECK(is_cocycle(e.cc, z));
            for (const Q& v : z) CHECK(v > 0);
            CHECK(z[dc.skew] > k + 2);
            ++tested;
        }
    CHECK(tested > 0);
}

TEST_CASE("dimension lower bound") {
    CHECK(axis_dim_lower_bound(4, false) == 2);
    CHECK(axis_dim_lower_bound(4, true) == 4);
    CHECK(axis_dim_lower_bound(1, false) == 0);
    CHECK(axis_dim_lower_bound(0, true) == 0);
}

TEST_CASE("cochain json is keyed by cell name") {
    const auto& e = example();
    std::string j = cochain_json(e.cc, time_cochain(e.x));
    CHECK(j.find("\"w\":\"1\"") != std::string::npos);
    CHECK(j.find("\"d1\":\"1/4\"") != std::string::npos);
}
