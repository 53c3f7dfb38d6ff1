#pragma once

#include <string>
#include <vector>

#include "fbc/common.hpp"
#include "fbc/graph.hpp"

namespace fbc {

// Directions are oriented edges; a direction is the germ of the edge at its init.
struct Turn {
    int d1 = 0, d2 = 0;  // d1 <= d2
    Turn() = default;
    Turn(int a, int b) : d1(std::min(a, b)), d2(std::max(a, b)) {}
    bool degenerate() const { return d1 == d2; }
    bool operator==(const Turn& o) const { return d1 == o.d1 && d2 == o.d2; }
    bool operator<(const Turn& o) const { return d1 != o.d1 ? d1 < o.d1 : d2 < o.d2; }
};

std::string format_turn(const Graph& g, const Turn& t);

std::vector<int> direction_map(const GraphMap& f);
std::vector<int> periodic_directions(const GraphMap& f);
std::vector<Turn> illegal_turns(const GraphMap& f);

struct TrainTrackWitness {
    bool ok = true;
    int edge = -1;  // offending edge
    int position = -1;  // index of the turn inside its image
    Turn turn;
};
TrainTrackWitness is_train_track(const GraphMap& f);

using IntMatrix = std::vector<std::vector<long>>;
// a[i][j] = number of times the image of edge i crosses edge j.
IntMatrix transition_matrix(const GraphMap& f);
IntMatrix multiply(const IntMatrix& a, const IntMatrix& b);
bool is_irreducible(const GraphMap& f);
bool is_irreducible(const IntMatrix& a);
bool is_expanding(const GraphMap& f);

struct EigenMetric {
    std::vector<double> lengths;
    double lambda = 0;
    double residual = 0;
    int iterations = 0;
};
// Left PF eigenvector by power iteration on (A + I)^T, volume 1.
EigenMetric eigen_metric(const GraphMap& f);

std::vector<Turn> turns_in_path(const Graph& g, const Path& p);
std::vector<Turn> taken_turns(const GraphMap& f);

struct NielsenReport {
    std::vector<std::pair<Path, int>> found;  // path and period
    int max_len = 10, max_period = 6;
    long searched = 0;
    bool none_found() const { return found.empty(); }
};
NielsenReport nielsen_search(const GraphMap& f, int max_len = 10, int max_period = 6);

struct IWComponent {
    int vertex = -1;
    std::vector<int> dirs;
    std::vector<std::pair<int, int>> edges;  // indices into dirs
    bool has_cut_vertex() const;
};

struct IdealWhiteheadGraph {
    std::vector<IWComponent> components;
    std::vector<int> sizes() const;
};

// Stable Whitehead graphs at principal vertices; valid only without periodic Nielsen paths.
IdealWhiteheadGraph ideal_whitehead(const GraphMap& f, bool no_pnp);
Q rotationless_index(const IdealWhiteheadGraph& iw);
std::string iw_dot(const Graph& g, const IdealWhiteheadGraph& iw);

struct LoneAxisOptions {
    int nielsen_len = 10;
    int nielsen_period = 6;
    bool assume_ageometric = true;
    bool assume_fully_irreducible = true;
};

struct Verdict {
    enum Kind { Yes, No, Inconclusive } kind = Inconclusive;
    std::string reason;
    std::vector<std::string> assumptions;
    std::string str() const { return kind == Yes ? "yes" : kind == No ? "no" : "inconclusive"; }
};

Verdict lone_axis_check(const GraphMap& f, const LoneAxisOptions& opt = {});

}  // namespace fbc
