#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "fbc/graph.hpp"

namespace fbc {

// Rose with one vertex "x" and edges a, b, c, ...
Graph rose(int rank);

// Self-map of a rose given by a free group endomorphism on its edges.
GraphMap rose_map(const FreeGroupMap& phi);

// Product of random Nielsen moves, as an automorphism of F_rank.
FreeGroupMap random_automorphism(std::mt19937_64& rng, int rank, int moves);

// Expanding irreducible rose maps of rank 2..4 built from random automorphisms.
std::vector<GraphMap> random_corpus(int count, std::uint64_t seed);

}  // namespace fbc
