#pragma once

#include <optional>
#include <string>
#include <vector>

namespace fbc {

// Letter g >= 1 is the generator with index g-1, -g its inverse.
using Letter = int;
using Word = std::vector<Letter>;

Word reduce(const Word& w);
Word inverse(const Word& w);
Word concat(const Word& a, const Word& b);
Word power(const Word& w, int n);

// Cyclic reduction w = c * core * c^-1; returns core and stores c.
Word cyclic_core(const Word& w, Word* conj = nullptr);

// Shortest root: w = root^k with k maximal.
Word primitive_root(const Word& w);

struct FreeGroupMap {
    std::vector<std::string> gens;
    std::vector<Word> images;

    std::size_t rank() const { return gens.size(); }
    Word apply(const Word& w) const;
    static FreeGroupMap identity(const std::vector<std::string>& gens);
};

// (f o g)(x) = f(g(x)).
FreeGroupMap compose(const FreeGroupMap& f, const FreeGroupMap& g);

std::string format_word(const Word& w, const std::vector<std::string>& gens);
Word parse_word(const std::string& text, const std::vector<std::string>& gens);
std::string format_map(const FreeGroupMap& f);

// Searches for w with g(x) = w f(x) w^-1 for every generator x.
// Candidates come from the conjugators of the first nontrivial image plus
// powers of its root, bounded by max_len.
std::optional<Word> outer_conjugator(const FreeGroupMap& f, const FreeGroupMap& g, int max_len = 20);
bool outer_equal(const FreeGroupMap& f, const FreeGroupMap& g, int max_len = 20);

struct Inversion {
    bool verified = false;
    FreeGroupMap inverse;
    std::string note;
};

// Greedy Nielsen reduction of the image tuple.
Inversion nielsen_invert(const FreeGroupMap& f, int max_steps = 100000);

}  // namespace fbc
