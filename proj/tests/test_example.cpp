#include "doctest.h"

#include "fbc/corpus.hpp"
#include "fbc/folding.hpp"
#include "fbc/traintrack.hpp"

using namespace fbc;

namespace {
MapFile example() { return read_map_file(FBC_DATA_DIR "/phi_f3.map"); }
}  // namespace

TEST_CASE("example map parses and has rank 3") {
    MapFile m = example();
    CHECK(m.graph.nv() == 3);
    CHECK(m.graph.ne() == 5);
    CHECK(rank(m.graph) == 3);
    m.map.check();
}

TEST_CASE("example induces the expected outer automorphism") {
    MapFile m = example();
    REQUIRE(m.marked);
    REQUIRE(m.expected);
    InducedAutomorphism a = map_to_automorphism(m.map, *m.marked);
    CHECK(outer_equal(a.map, *m.expected));
}

TEST_CASE("example is an expanding irreducible train track with one illegal turn") {
    MapFile m = example();
    CHECK(is_train_track(m.map).ok);
    CHECK(is_irreducible(m.map));
    CHECK(is_expanding(m.map));
    auto ill = illegal_turns(m.map);
    REQUIRE(ill.size() == 1);
    const Graph& g = m.graph;
    CHECK(ill[0] == Turn(g.parse_oriented("B"), g.parse_oriented("C")));
}

TEST_CASE("example folds in four steps with labels a e a d") {
    MapFile m = example();
    FoldSequence s = decompose(m.map);
    REQUIRE(s.length() == 4);
    std::vector<std::string> labels;
    for (const Fold& f : s.folds) labels.push_back(m.graph.enames[Graph::edge_of(f.olabel)]);
    CHECK(labels == std::vector<std::string>{"a", "e", "a", "d"});
    std::string why;
    CHECK_MESSAGE(verify(s, m.map, &why), why);
    CHECK(aux_graph(m.map).acyclic());
}

TEST_CASE("example ideal Whitehead graph is three triangles") {
    MapFile m = example();
    auto iw = ideal_whitehead(m.map, nielsen_search(m.map).none_found());
    CHECK(iw.sizes() == std::vector<int>{3, 3, 3});
    for (const auto& c : iw.components) {
        CHECK(c.edges.size() == 3);
        CHECK_FALSE(c.has_cut_vertex());
    }
    CHECK(rotationless_index(iw) == Q(-3, 2));
    CHECK(lone_axis_check(m.map).kind == Verdict::Yes);
}

TEST_CASE("fold decomposition recomposes on random maps") {
    for (const GraphMap& f : random_corpus(40, 7)) {
        FoldSequence s = decompose(f);
        std::string why;
        CHECK_MESSAGE(verify(s, f, &why), why);
    }
}
