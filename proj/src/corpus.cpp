#include "fbc/corpus.hpp"

#include "fbc/traintrack.hpp"

namespace fbc {

Graph rose(int rank) {
    Graph g;
    g.add_vertex("x");
    for (int i = 0; i < rank; ++i) g.add_edge(std::string(1, char('a' + i)), 0, 0);
    return g;
}

GraphMap rose_map(const FreeGroupMap& phi) {
    GraphMap f;
    f.dom = f.cod = rose(int(phi.rank()));
    f.vmap = {0};
    for (const Word& w : phi.images) {
        Path p;
        for (Letter l : w) p.push_back(l > 0 ? Graph::fwd(l - 1) : Graph::rev(Graph::fwd(-l - 1)));
        f.emap.push_back(p);
    }
    return f;
}

FreeGroupMap random_automorphism(std::mt19937_64& rng, int rank, int moves) {
    std::vector<std::string> gens;
    for (int i = 0; i < rank; ++i) gens.push_back(std::string(1, char('a' + i)));
    FreeGroupMap phi = FreeGroupMap::identity(gens);
    std::uniform_int_distribution<int> pick(0, rank - 1), coin(0, 1);
    for (int m = 0; m < moves; ++m) {
        int i = pick(rng), j = pick(rng);
        if (i == j) {
            if (coin(rng)) phi.images[i] = inverse(phi.images[i]);
            continue;
        }
        Word y = phi.images[j];
        if (coin(rng)) y = inverse(y);
        phi.images[i] = coin(rng) ? reduce(concat(phi.images[i], y)) : reduce(concat(y, phi.images[i]));
    }
    return phi;
}

std::vector<GraphMap> random_corpus(int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> rk(2, 4), mv(4, 10);
    std::vector<GraphMap> out;
    while (int(out.size()) < count) {
        GraphMap f = rose_map(random_automorphism(rng, rk(rng), mv(rng)));
        bool nonempty = true;
        for (const Path& p : f.emap) nonempty = nonempty && !p.empty();
        if (nonempty && is_irreducible(f) && is_expanding(f)) out.push_back(f);
    }
    return out;
}

}  // namespace fbc
