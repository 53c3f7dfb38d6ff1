#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fbc/linalg.hpp"
#include "fbc/torus.hpp"
#include "fbc/traintrack.hpp"

namespace fbc {

// Cellular chains of the coarse complex. d1 is c0 x c1, d2 is c1 x c2.
struct ChainComplex {
    int n0 = 0, n1 = 0, n2 = 0;
    ZMat d1, d2;
    std::vector<std::string> names0, names1, names2;
};

ChainComplex chain_complex(const TrapComplex& x);

// Chains and cochains on 1-cells are vectors indexed by coarse 1-cell.
using Chain = QVec;
using Cochain = QVec;

Chain chain_from_terms(const ChainComplex& cc, const std::vector<std::pair<long, std::string>>& terms);
bool is_cycle(const ChainComplex& cc, const Chain& c);
bool is_cocycle(const ChainComplex& cc, const Cochain& z);
Cochain coboundary(const ChainComplex& cc, const QVec& g);  // g on 0-cells
Q pair(const Cochain& z, const Chain& c);

struct H1 {
    int rank = 0;
    std::vector<Z> torsion;
    std::vector<std::string> names;  // basis names; dual classes are name + "*"
    std::vector<Chain> cycles;  // integral cycles, a basis of H1 mod torsion
    std::vector<Cochain> cocycles;  // dual basis: cocycles[i] on cycles[j] is [i == j]
    std::string source;  // "named" or "smith"

    int index(const std::string& name) const;
};

// With named cycles that form a basis, the basis is theirs (in the given order);
// otherwise the free part of the Smith form basis, named c1, c2, ...
H1 h1(const ChainComplex& cc, const std::vector<std::pair<std::string, Chain>>& named = {});

// Named cycles of a map file, converted to chains.
std::vector<std::pair<std::string, Chain>> named_cycles(const ChainComplex& cc, const MapFile& mf);

// Coordinates of a cycle in the basis (exact up to torsion).
QVec homology_class(const H1& h, const Chain& c);

struct CohomClass {
    QVec coords;  // in the dual basis of H1
    bool integral() const;
    bool primitive() const;
    std::string str(const H1& h) const;
};

Cochain representative(const H1& h, const CohomClass& c);
// Throws InvariantError unless c is a cycle.
Q evaluate(const ChainComplex& cc, const H1& h, const CohomClass& c, const Chain& loop);

// Coarse cochain of the flow time; represents the class evaluating to the period on each loop.
Cochain time_cochain(const TrapComplex& x);

struct ConeWitness {
    bool inside = false;
    Cochain cocycle;  // positive representative when inside
    Q epsilon;  // min over 1-cells of the LP optimum, capped at 1
    // When outside: a nonnegative 1-cycle of total weight 1 on which the class is <= 0.
    Chain certificate;
    Q certificate_value;
    bool verify(const ChainComplex& cc, const Cochain& rep) const;
};

ConeWitness cone_membership(const ChainComplex& cc, const H1& h, const CohomClass& c);
// Same LP from an arbitrary cocycle representative.
ConeWitness cone_membership(const ChainComplex& cc, const Cochain& rep);

struct DiscreteCone {
    int k = 0;
    long m = 0;
    int skew = -1;  // coarse 1-cell d achieving the minimal M
    int base = -1;  // basis index of the positive class
    Cochain z_base;
    std::vector<std::pair<int, Cochain>> others;  // basis index, cocycle
    std::vector<std::pair<int, long>> per_skew;  // M for every skew cell

    // p r* + sum q_i a_i with |q_i| < p / M for every i.
    bool contains(const CohomClass& c) const;
    Cochain cocycle(const CohomClass& c) const;  // p z_base + sum q_i z_i
};

// Smallest M with M z(e) - sum |z_i(e)| > 0 on all 1-cells and > k + 2 on the skew d,
// minimized over the skew cells.
DiscreteCone discreteness_cone(const TrapComplex& x, const ChainComplex& cc, const H1& h, int k, int base,
                               const Cochain& z_base);

// Lower bound on the local dimension from n illegal turns at distinct valence-three vertices.
int axis_dim_lower_bound(int illegal_at_valence_three, bool has_untouched_edge);

// Lengths after simultaneously folding illegal turns by t_i.
std::vector<double> delta_lengths(const Graph& g, const std::vector<double>& lengths, const std::vector<Turn>& turns,
                                  const std::vector<double>& t);
// delta_i(e) for each turn i and edge e.
std::vector<std::vector<int>> delta_table(const Graph& g, const std::vector<Turn>& turns);

std::string cochain_json(const ChainComplex& cc, const Cochain& z);

}  // namespace fbc
