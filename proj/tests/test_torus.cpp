#include "doctest.h"

#include <algorithm>
#include <map>

#include "fbc/corpus.hpp"
#include "fbc/torus.hpp"
#include "fbc/traintrack.hpp"

using namespace fbc;

namespace {

TrapComplex example_torus() { return build_torus(decompose(read_map_file(FBC_DATA_DIR "/phi_f3.map").map)); }

std::vector<std::string> word(const TrapComplex& x, const std::vector<std::pair<int, int>>& w) {
    std::vector<std::string> out;
    for (auto [c, s] : w) out.push_back((s > 0 ? "" : "-") + x.c1[c].name);
    return out;
}

const Trapezoid& trap(const TrapComplex& x, const std::string& name) {
    auto it = std::find_if(x.c2.begin(), x.c2.end(), [&](const Trapezoid& t) { return t.name == name; });
    REQUIRE(it != x.c2.end());
    return *it;
}

// Boundary of every fine 2-cell, and of every trapezoid, is a cycle.
void check_cycles(const TrapComplex& x) {
    for (const auto& c : x.cells2) {
        std::map<int, int> deg;
        for (auto [e, s] : c.boundary()) {
            deg[x.cells1[e].from] -= s;
            deg[x.cells1[e].to] += s;
        }
        for (auto [p, d] : deg) CHECK(d == 0);
    }
    for (const auto& t : x.c2) {
        std::map<int, int> deg;
        for (auto [e, s] : t.boundary) {
            deg[x.c1[e].from] -= s;
            deg[x.c1[e].to] += s;
        }
        for (auto [p, d] : deg) CHECK(d == 0);
    }
}

}  // namespace

TEST_CASE("example torus has four skews and the drawn vertical cells") {
    TrapComplex x = example_torus();
    CHECK(x.skew_count() == 4);
    CHECK(x.euler() == 0);
    std::vector<std::string> names;
    for (const auto& c : x.c1) names.push_back(c.name);
    std::sort(names.begin(), names.end());
    CHECK(names == std::vector<std::string>{"d1", "d2", "d3", "d4", "u1", "u2", "v1", "v2", "v3", "w"});
    CHECK(x.c0.size() == 6);
    CHECK(x.c2.size() == 4);
    Diagnostics d = validate(x);
    CHECK_MESSAGE(d.ok, (d.problems.empty() ? "" : d.problems[0]));
    check_cycles(x);
}

TEST_CASE("example trapezoids match the drawn cells") {
    TrapComplex x = example_torus();
    using V = std::vector<std::string>;
    CHECK(word(x, trap(x, "d1").boundary) == V{"d1", "v2", "-d3", "-u1"});
    CHECK(word(x, trap(x, "d2").boundary) == V{"d2", "u2", "v1", "v2", "d4", "-w", "-v3", "-v2"});
    CHECK(word(x, trap(x, "d3").top) == V{"-d2", "-d1", "-d4", "-d3", "-d2"});
    CHECK(word(x, trap(x, "d4").boundary) == V{"d4", "u1", "u2", "v1", "-d1", "-w", "-v3"});
    const Trapezoid& c = trap(x, "d3");
    std::vector<std::string> left, right;
    for (int i : c.left) left.push_back(x.c1[i].name);
    for (int i : c.right) right.push_back(x.c1[i].name);
    CHECK(left == V{"v3", "w", "u1"});
    CHECK(right == V{"u2", "v1"});
}

TEST_CASE("example skew cells close into a loop") {
    TrapComplex x = example_torus();
    SkewLoop l = skew_loop(x);
    CHECK(l.closed);
    std::vector<std::string> names;
    for (int c : l.cells) names.push_back(x.c1[c].name);
    CHECK(names == std::vector<std::string>{"d1", "d2", "d3", "d4"});
}

TEST_CASE("time cocycle is one per period on fine cells") {
    TrapComplex x = example_torus();
    for (const auto& c : x.cells2) {
        Q sum = 0;
        for (auto [e, s] : c.boundary()) sum += s * x.time(e);
        CHECK(sum == 0);
    }
    // the vertex strand of v runs once around
    Q t = 0;
    for (const char* n : {"v1", "v2", "v3"})
        for (int f : x.c1[x.find1(n)].fine) t += x.time(f);
    CHECK(t == 1);
}

TEST_CASE("fibonacci map gives one trapezoid folding onto itself") {
    TrapComplex x = build_torus(decompose(read_map_file(FBC_DATA_DIR "/fibonacci.map").map));
    CHECK(x.skew_count() == 1);
    REQUIRE(x.c2.size() == 1);
    int d = x.find1("d1");
    int top = int(std::count_if(x.c2[0].top.begin(), x.c2[0].top.end(), [&](auto p) { return p.first == d; }));
    CHECK(top == 2);
    CHECK(x.euler() == 0);
    CHECK(validate(x).ok);
}

TEST_CASE("two illegal turns break the skew loop") {
    MapFile m = read_map_file(FBC_DATA_DIR "/two_turns.map");
    REQUIRE(is_train_track(m.map).ok);
    REQUIRE(illegal_turns(m.map).size() == 2);
    TrapComplex x = build_torus(decompose(m.map));
    SkewLoop l = skew_loop(x);
    CHECK_FALSE(l.closed);
    CHECK(l.breaks.find("ends at") != std::string::npos);
    CHECK(validate(x).ok);
}

TEST_CASE("validate names an injected degree-2 skew and a dangling vertical") {
    TrapComplex x = example_torus();
    TrapComplex bad = x;
    Trapezoid& t = bad.c2[0];
    // drop one top occurrence of a skew
    for (std::size_t i = 1; i < t.boundary.size(); ++i)
        if (bad.c1[t.boundary[i].first].kind == Coarse1Cell::Skew) {
            t.boundary.erase(t.boundary.begin() + long(i));
            break;
        }
    Diagnostics d = validate(bad);
    CHECK_FALSE(d.ok);
    bool named = false;
    for (const auto& p : d.problems) named = named || p.find("degree 2") != std::string::npos;
    CHECK(named);

    TrapComplex dang = x;
    dang.c0.push_back({"loose", -1});
    Coarse1Cell v;
    v.name = "hair";
    v.from = int(dang.c0.size()) - 1;
    v.to = 0;
    dang.c1.push_back(v);
    Diagnostics e = validate(dang);
    CHECK_FALSE(e.ok);
    bool dangling = false;
    for (const auto& p : e.problems) dangling = dangling || p.find("hair dangles") != std::string::npos;
    CHECK(dangling);
}

TEST_CASE("random maps give valid tori with one skew per fold") {
    for (const GraphMap& f : random_corpus(60, 21)) {
        FoldSequence s = decompose(f);
        TrapComplex x = build_torus(s);
        CHECK(x.skew_count() >= s.length());
        int slabs = 0;
        for (int m = 1; m <= s.length(); ++m)
            slabs += std::any_of(x.c1.begin(), x.c1.end(), [&](const Coarse1Cell& c) { return c.kind == Coarse1Cell::Skew && c.slab == m; });
        CHECK(slabs == s.length());
        CHECK(x.euler() == 0);
        CHECK(validate(x).ok);
    }
}
