#include "doctest.h"

#include <algorithm>
#include <climits>
#include <numeric>
#include <set>

#include "fbc/bns.hpp"
#include "fbc/cohomology.hpp"
#include "fbc/torus.hpp"

using namespace fbc;

namespace {

const std::vector<std::string> BR{"b", "r"};

TwoGenPresentation example() { return read_two_gen(FBC_DATA_DIR "/g_phi.2gen"); }

std::set<std::pair<long, long>> as_set(const std::vector<Covector>& v) {
    std::set<std::pair<long, long>> s;
    for (const auto& c : v) s.insert({c.p, c.q});
    return s;
}

// Brute force: a covector is excluded when its maximum over the path is attained
// on a hull edge that is diagonal or has lattice length at least two.
bool brute_face(const PolygonTrace& t, long p, long q) {
    long best = LONG_MIN;
    for (const auto& v : t.path) best = std::max(best, p * v[0] + q * v[1]);
    std::vector<Lattice> top;
    for (const auto& v : t.path)
        if (p * v[0] + q * v[1] == best && std::find(top.begin(), top.end(), v) == top.end()) top.push_back(v);
    if (top.size() < 2) return false;
    auto [xa, xb] = std::minmax_element(top.begin(), top.end(), [](auto& a, auto& b) { return a[0] < b[0]; });
    auto [ya, yb] = std::minmax_element(top.begin(), top.end(), [](auto& a, auto& b) { return a[1] < b[1]; });
    long dx = (*xb)[0] - (*xa)[0], dy = (*yb)[1] - (*ya)[1];
    return (dx > 0 && dy > 0) || dx >= 2 || dy >= 2;
}

// the excluded set is closed under negation
bool brute_excluded(const PolygonTrace& t, long p, long q) { return brute_face(t, p, q) || brute_face(t, -p, -q); }

}  // namespace

TEST_CASE("example relator traces the expected polygon") {
    auto p = example();
    CHECK(format_word(p.relator, BR) == "rrrBRbRbrBRbRB");
    PolygonTrace t = trace_polygon(p);
    CHECK(t.path.size() == 15);
    CHECK(t.path.back() == Lattice{0, 0});
    std::vector<Lattice> hull{{-1, 2}, {0, 0}, {1, 0}, {1, 2}, {0, 3}, {-1, 3}};
    REQUIRE(t.hull.size() == 6);
    // least point first, counterclockwise
    CHECK(t.hull.front() == Lattice{-1, 2});
    for (const auto& v : hull) CHECK(std::find(t.hull.begin(), t.hull.end(), v) != t.hull.end());
    for (const auto& [v, n] : t.visits) CHECK(n == 1);
    auto thick = t.thick();
    REQUIRE(thick.size() == 2);
    CHECK(t.unit_edges.at({{0, 1}, {0, 2}}) == 3);
    CHECK(t.unit_edges.at({{0, 1}, {1, 1}}) == 2);
}

TEST_CASE("example excluded rays") {
    PolygonTrace t = trace_polygon(example());
    SlopeSet s = excluded_directions(t);
    CHECK(as_set(s.excluded) == std::set<std::pair<long, long>>{{1, 0}, {-1, 0}, {2, 1}, {-2, -1}, {1, 1}, {-1, -1}});
    CHECK(s.indeterminate.empty());
    CHECK_FALSE(s.needs_manual_check({0, 1}));
    CHECK(std::is_sorted(s.excluded.begin(), s.excluded.end()));
    for (long p = -6; p <= 6; ++p)
        for (long q = -6; q <= 6; ++q) {
            if ((p == 0 && q == 0) || std::gcd(p, q) != 1) continue;
            CHECK_MESSAGE(s.is_excluded({p, q}) == brute_excluded(t, p, q), p << "," << q);
        }
}

TEST_CASE("component of r* is the open sector t b* + r*, t < 1") {
    SlopeSet s = excluded_directions(trace_polygon(example()));
    ConeComponent c = component_containing(s, {0, 1});
    CHECK(c.lo == Covector{1, 1});
    CHECK(c.hi == Covector{-1, 0});
    for (int i = -40; i <= 40; ++i) CHECK(c.contains(frac(i, 8), Q(1)) == (i < 8));
    CHECK_FALSE(c.contains(Q(-1), Q(0)));
    CHECK_FALSE(c.contains(Q(0), Q(-1)));
    ConeComponent m = component_containing(s, {0, -1});
    CHECK(m.lo == Covector{-1, -1});
    CHECK(m.hi == Covector{1, 0});
    for (int i = -40; i <= 40; ++i) CHECK(m.contains(frac(-i, 8), Q(-1)) == c.contains(frac(i, 8), Q(1)));
    CHECK_THROWS_AS(component_containing(s, {1, 1}), InvariantError);
    CHECK_THROWS_AS(component_containing(s, {-2, -1}), InvariantError);
}

TEST_CASE("fibered cone and BNS sector agree on the slope grid") {
    MapFile mf = read_map_file(FBC_DATA_DIR "/phi_f3.map");
    TrapComplex x = build_torus(decompose(mf.map));
    ChainComplex cc = chain_complex(x);
    H1 h = h1(cc, named_cycles(cc, mf));
    REQUIRE(h.names == BR);
    ConeComponent comp = component_containing(excluded_directions(trace_polygon(example())), {0, 1});
    int agree = 0;
    for (int i = -16; i <= 16; ++i) {
        Q t = frac(i, 8);
        bool lp = cone_membership(cc, h, CohomClass{{t, Q(1)}}).inside;
        CHECK_MESSAGE(lp == comp.contains(t, Q(1)), "t = " << t.get_str());
        agree += lp == comp.contains(t, Q(1));
    }
    CHECK(agree == 33);
}

TEST_CASE("lone axis line inside the component") {
    SlopeSet s = excluded_directions(trace_polygon(example()));
    ConeComponent c = component_containing(s, {0, 1});
    LineReport r = lone_axis_line(c, {-1, 1}, 5);
    std::vector<Covector> want;
    for (long k = 0; k <= 4; ++k) want.push_back({k, k + 1});
    CHECK(r.classes == want);
    CHECK(r.note.empty());
    for (const auto& v : r.classes) CHECK(-v.p + v.q == 1);
    LineReport parity = lone_axis_line(c, {-2, 2}, 10);
    CHECK(parity.classes.empty());
    CHECK(parity.note.find("gcd 2") != std::string::npos);
}

TEST_CASE("commutator is a unit square with nothing excluded") {
    auto p = parse_two_gen("generators x y\nrelator xyXY\n");
    PolygonTrace t = trace_polygon(p);
    CHECK(t.hull.size() == 4);
    SlopeSet s = excluded_directions(t);
    CHECK(s.excluded.empty());
    ConeComponent c = component_containing(s, {3, -5});
    CHECK(c.contains(Q(-1), Q(0)));
    CHECK(c.str({"x", "y"}) == "everything");
}

TEST_CASE("long axis edge excludes its normal") {
    auto p = parse_two_gen("generators b r\nrelator bbbrBBBR\n");
    SlopeSet s = excluded_directions(trace_polygon(p));
    CHECK(as_set(s.excluded) == std::set<std::pair<long, long>>{{0, 1}, {0, -1}});
    ConeComponent c = component_containing(s, {1, 0});
    CHECK(c.lo == Covector{0, -1});
    CHECK(c.hi == Covector{0, 1});
}

TEST_CASE("non-closing relator is rejected") {
    auto p = parse_two_gen("generators b r\nrelator bbb\n");
    CHECK_THROWS_AS(trace_polygon(p), InvariantError);
    CHECK_THROWS_AS(parse_two_gen("generators b r s\nrelator br\n"), ParseError);
    CHECK_THROWS_AS(parse_two_gen("generators b r\nrelator bB\n"), ParseError);
    CHECK_THROWS_AS(parse_two_gen("generators b r\nfoo\n"), ParseError);
}

TEST_CASE("excluded set is stable under inversion and cyclic permutation") {
    auto p = example();
    auto base = as_set(excluded_directions(trace_polygon(p)).excluded);
    CHECK(as_set(excluded_directions(trace_polygon(two_gen(BR, inverse(p.relator)))).excluded) == base);
    for (std::size_t k = 1; k < p.relator.size(); ++k) {
        Word w(p.relator.begin() + k, p.relator.end());
        w.insert(w.end(), p.relator.begin(), p.relator.begin() + k);
        CHECK(as_set(excluded_directions(trace_polygon(two_gen(BR, w))).excluded) == base);
    }
    // a conjugated input reduces to the same relator
    Word c = concat(concat(Word{1, 2}, p.relator), Word{-2, -1});
    auto q = two_gen(BR, c);
    CHECK(q.relator == p.relator);
    CHECK(reduce(concat(concat(q.conjugator, q.relator), inverse(q.conjugator))) == reduce(c));
}

TEST_CASE("revisited hull corner is flagged for a manual check") {
    // the path passes the corner (0,0) twice
    auto p = parse_two_gen("generators x y\nrelator xyXYxxyXXY\n");
    PolygonTrace t = trace_polygon(p);
    SlopeSet s = excluded_directions(t);
    REQUIRE_FALSE(s.indeterminate.empty());
    const auto& k = s.indeterminate.front();
    CHECK(t.visits.at(k.at) >= 2);
    long px = k.from.p + k.to.p, py = k.from.q + k.to.q;
    CHECK(s.needs_manual_check({px, py}));
}

TEST_CASE("renderings mention the excluded rays") {
    auto p = example();
    PolygonTrace t = trace_polygon(p);
    SlopeSet s = excluded_directions(t);
    std::string j = bns_json(p, t, s);
    CHECK(j.find("\"b* + r*\"") != std::string::npos);
    CHECK(j.find("\"-2b* - r*\"") != std::string::npos);
    CHECK(bns_tikz(t, s).find("\\begin{tikzpicture}") == 0);
    CHECK(bns_svg(t, s).find("<svg") == 0);
}
