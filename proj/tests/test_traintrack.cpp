#include "doctest.h"

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "fbc/corpus.hpp"
#include "fbc/folding.hpp"
#include "fbc/traintrack.hpp"

using namespace fbc;

namespace {

const std::vector<GraphMap>& corpus() {
    static std::vector<GraphMap> c = random_corpus(200, 2024);
    return c;
}

Path random_path(std::mt19937_64& rng, const Graph& g, int len) {
    std::uniform_int_distribution<int> pick(0, 2 * g.ne() - 1);
    Path p;
    int at = g.init(pick(rng));
    for (int i = 0; i < len; ++i) {
        auto d = g.directions_at(at);
        std::uniform_int_distribution<int> k(0, int(d.size()) - 1);
        p.push_back(d[k(rng)]);
        at = g.term(p.back());
    }
    return p;
}

// A rose path read as a word: edge e in its stored direction is letter e+1.
Word as_word(const Path& p) {
    Word w;
    for (int oe : p) w.push_back(Graph::reversed(oe) ? -(Graph::edge_of(oe) + 1) : Graph::edge_of(oe) + 1);
    return w;
}

Path concat_path(const Path& a, const Path& b) {
    Path c = a;
    c.insert(c.end(), b.begin(), b.end());
    return c;
}

}  // namespace

TEST_CASE("fold decomposition recomposes on the corpus") {
    REQUIRE(corpus().size() == 200);
    for (const GraphMap& f : corpus()) {
        FoldSequence s = decompose(f);
        std::string why;
        CHECK_MESSAGE(verify(s, f, &why), why);
    }
}

TEST_CASE("transition matrix of a composition") {
    const auto& c = corpus();
    int checked = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const GraphMap& f = c[i];
        IntMatrix af = transition_matrix(f);
        CHECK(transition_matrix(compose(f, f)) == multiply(af, af));
        for (std::size_t j = i + 1; j < c.size() && j < i + 6; ++j) {
            const GraphMap& g = c[j];
            if (g.dom.ne() != f.dom.ne()) continue;
            CHECK(transition_matrix(compose(f, g)) == multiply(transition_matrix(g), af));
            ++checked;
        }
    }
    CHECK(checked > 50);
}

TEST_CASE("tighten laws on random paths") {
    std::mt19937_64 rng(99);
    MapFile m = read_map_file(FBC_DATA_DIR "/phi_f3.map");
    const Graph& g = m.graph;
    Graph r = rose(3);
    std::uniform_int_distribution<int> len(0, 30);
    for (int trial = 0; trial < 10000; ++trial) {
        const Graph& h = trial % 2 ? g : r;
        Path p = random_path(rng, h, len(rng));
        Path t = tighten(h, p);
        CHECK(tighten(h, t) == t);
        CHECK(tighten(h, reverse_path(p)) == reverse_path(t));
        CHECK(tighten(h, concat_path(p, reverse_path(p))).empty());
        for (std::size_t i = 0; i + 1 < t.size(); ++i) CHECK(t[i + 1] != Graph::rev(t[i]));
        if (!p.empty()) {
            Path q = random_path(rng, h, len(rng));
            // continue q from the end of p
            if (!q.empty() && h.init(q[0]) == h.term(p.back())) {
                CHECK(tighten(h, concat_path(p, q)) == tighten(h, concat_path(t, tighten(h, q))));
            }
        }
        if (&h == &r) CHECK(as_word(t) == reduce(as_word(p)));
    }
}

TEST_CASE("eigen metric residual on the corpus") {
    for (const GraphMap& f : corpus()) {
        EigenMetric em = eigen_metric(f);
        CHECK(em.residual <= 1e-10);
        double vol = 0;
        for (double l : em.lengths) {
            CHECK(l > 0);
            vol += l;
        }
        CHECK(std::abs(vol - 1) < 1e-12);
        // independent spectral radius
        IntMatrix a = transition_matrix(f);
        Eigen::MatrixXd ma(a.size(), a.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            for (std::size_t j = 0; j < a.size(); ++j) ma(i, j) = double(a[i][j]);
        double rho = ma.eigenvalues().cwiseAbs().maxCoeff();
        CHECK(std::abs(rho - em.lambda) < 1e-8 * rho);
        CHECK(em.lambda > 1);
    }
}

TEST_CASE("example stretch factor matches word growth") {
    MapFile m = read_map_file(FBC_DATA_DIR "/phi_f3.map");
    REQUIRE(m.expected);
    EigenMetric em = eigen_metric(m.map);
    const FreeGroupMap& phi = *m.expected;
    Word w{1};
    std::size_t prev = 0;
    for (int n = 1; n <= 21; ++n) {
        prev = w.size();
        w = reduce(phi.apply(w));
    }
    double ratio = double(w.size()) / double(prev);
    CHECK(std::abs(em.lambda - ratio) < 1e-3);
    CHECK(std::abs(em.lambda - 1.96595) < 1e-4);
}

TEST_CASE("identity map is not expanding and gets no verdict") {
    Graph r = rose(2);
    GraphMap id = identity_map(r);
    CHECK_FALSE(is_expanding(id));
    CHECK(lone_axis_check(id).kind != Verdict::Yes);
}

TEST_CASE("auxiliary graph is acyclic on expanding irreducible train tracks") {
    int tt = 0;
    for (const GraphMap& f : corpus()) {
        if (!is_train_track(f).ok) continue;
        CHECK(aux_graph(f).acyclic());
        ++tt;
    }
    CHECK(tt > 0);
}

TEST_CASE("transition matrix rows count image letters") {
    for (const GraphMap& f : corpus()) {
        IntMatrix a = transition_matrix(f);
        for (int e = 0; e < f.dom.ne(); ++e) {
            long s = 0;
            for (long v : a[e]) s += v;
            CHECK(s == long(f.emap[e].size()));
        }
    }
}
