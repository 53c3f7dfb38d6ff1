// Acceptance run: one pass/fail line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "fbc/bns.hpp"
#include "fbc/corpus.hpp"
#include "fbc/section.hpp"

using namespace fbc;

namespace {

// Tolerances and budgets.
constexpr double kCriterion1Seconds = 1.0;
constexpr double kCriterion2Seconds = 1.0;
constexpr double kCriterion4Seconds = 10.0;
constexpr double kResidualTol = 1e-10;
constexpr double kGrowthTol = 1e-3;
constexpr int kGrowthN = 20;
constexpr int kCorpusSize = 200;
constexpr std::uint64_t kCorpusSeed = 2024;
constexpr int kTightenPaths = 10000;
constexpr int kConeSamples = 20;

// Collects failed checks for one criterion.
struct Check {
    std::vector<std::string> failures;
    void operator()(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Example {
    MapFile mf = read_map_file(FBC_DATA_DIR "/phi_f3.map");
    TrapComplex x = build_torus(decompose(mf.map));
    ChainComplex cc = chain_complex(x);
    H1 h = h1(cc, named_cycles(cc, mf));
};

std::string strip_spaces(std::string s) {
    s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
    return s;
}

// IW of a map is n disjoint triangles, each without a cut vertex.
bool triangles(const IdealWhiteheadGraph& iw, std::size_t n) {
    if (iw.components.size() != n) return false;
    std::set<int> vertices;
    for (const auto& c : iw.components) {
        if (c.dirs.size() != 3 || c.edges.size() != 3 || c.has_cut_vertex()) return false;
        vertices.insert(c.vertex);
    }
    return vertices.size() == n;
}

void criterion1(Check& ok) {
    auto t0 = std::chrono::steady_clock::now();
    MapFile m = read_map_file(FBC_DATA_DIR "/phi_f3.map");
    const GraphMap& f = m.map;
    const Graph& g = m.graph;
    ok(is_train_track(f).ok, "train track");
    ok(is_irreducible(f), "irreducible");
    ok(is_expanding(f), "expanding");
    auto ill = illegal_turns(f);
    ok(ill.size() == 1 && ill[0] == Turn(g.parse_oriented("B"), g.parse_oriented("C")), "one illegal turn {B, C}");
    FoldSequence s = decompose(f);
    std::vector<std::string> labels;
    for (const Fold& fd : s.folds) labels.push_back(g.enames[Graph::edge_of(fd.olabel)]);
    ok(labels == std::vector<std::string>{"a", "e", "a", "d"}, "fold labels a e a d");
    NielsenReport nr = nielsen_search(f, 10, 6);
    ok(nr.none_found(), "no periodic Nielsen path within (10, 6)");
    auto iw = ideal_whitehead(f, nr.none_found());
    ok(triangles(iw, 3), "IW is three disjoint triangles");
    ok(rotationless_index(iw) == frac(-3, 2), "index -3/2");
    LoneAxisOptions opt;
    opt.nielsen_len = 10;
    opt.nielsen_period = 6;
    opt.assume_ageometric = true;
    opt.assume_fully_irreducible = true;
    ok(lone_axis_check(f, opt).kind == Verdict::Yes, "verdict yes");
    ok(seconds_since(t0) < kCriterion1Seconds, "under 1 s");
}

void criterion2(Check& ok) {
    auto t0 = std::chrono::steady_clock::now();
    Example e;
    ok(e.x.skew_count() == 4, "four skew 1-cells");
    ok(e.x.euler() == 0, "euler characteristic 0");
    ok(e.h.rank == 2 && e.h.source == "named", "H1 rank 2 on the named cycles");
    for (const Chain& c : e.h.cycles) ok(is_cycle(e.cc, c), "named chain is a cycle");
    SkewLoop sl = skew_loop(e.x);
    ok(sl.closed, "skew loop closes");
    Chain loop(e.cc.n1);
    for (auto [c, k] : sl.chain) loop[c] += k;
    ok(homology_class(e.h, loop) == QVec{Q(-1), Q(1)}, "skew loop class r - b");
    for (Q t : {Q(-1), frac(-1, 2), Q(0), frac(1, 2), frac(3, 4)}) {
        CohomClass c{{t, Q(1)}};
        ConeWitness w = cone_membership(e.cc, e.h, c);
        bool pos = w.inside && is_cocycle(e.cc, w.cocycle);
        for (const Q& v : w.cocycle) pos = pos && v > 0;
        for (std::size_t i = 0; pos && i < 2; ++i) pos = pair(w.cocycle, e.h.cycles[i]) == c.coords[i];
        ok(pos, "inside at t = " + t.get_str());
    }
    for (Q t : {Q(1), Q(2)}) {
        CohomClass c{{t, Q(1)}};
        ConeWitness w = cone_membership(e.cc, e.h, c);
        bool cert = !w.inside && is_cycle(e.cc, w.certificate);
        Q total = 0;
        for (const Q& v : w.certificate) {
            cert = cert && v >= 0;
            total += v;
        }
        cert = cert && total == 1 && pair(representative(e.h, c), w.certificate) <= 0;
        ok(cert, "outside with certificate at t = " + t.get_str());
    }
    ok(seconds_since(t0) < kCriterion2Seconds, "under 1 s");
}

void criterion3(Check& ok) {
    TwoGenPresentation p = read_two_gen(FBC_DATA_DIR "/g_phi.2gen");
    SlopeSet s = excluded_directions(trace_polygon(p));
    std::set<std::pair<long, long>> got;
    for (const auto& c : s.excluded) got.insert({c.p, c.q});
    ok(got == std::set<std::pair<long, long>>{{1, 0}, {-1, 0}, {2, 1}, {-2, -1}, {1, 1}, {-1, -1}},
       "excluded rays +-b*, +-(2b*+r*), +-(b*+r*)");
    ConeComponent comp = component_containing(s, {0, 1});
    ok(comp.lo == Covector{1, 1} && comp.hi == Covector{-1, 0}, "component of r* is {t b* + r* : t < 1}");
    Example e;
    int disagree = 0, n = 0;
    for (int i = -16; i <= 16; ++i, ++n) {
        Q t = frac(i, 8);
        bool lp = cone_membership(e.cc, e.h, CohomClass{{t, Q(1)}}).inside;
        bool sector = comp.contains(t, Q(1));
        disagree += lp != sector || sector != (t < 1);
    }
    ok(n == 33 && disagree == 0, "LP and sector agree at 33 slopes");
}

std::map<std::string, std::string> family_table(int k) {
    auto e = [](int j, int i) { return "e" + std::to_string(j) + "." + std::to_string(i); };
    std::map<std::string, std::string> t;
    t["e1"] = e(3, 1);
    for (int j = 2; j <= 4; ++j)
        for (int i = 1; i <= k; ++i) t[e(j, i)] = e(j, i + 1);
    t[e(2, k + 1)] = e(4, 1) + "'";
    t[e(3, k + 1)] = "t1 " + e(3, 1) + " " + e(2, 1);
    t[e(4, k + 1)] = "s2 e1";
    t["s1"] = e(2, 1) + " t1";
    t["s2"] = "t1";
    for (int i = 1; i <= k; ++i) t["t" + std::to_string(i)] = "t" + std::to_string(i + 1);
    t["t" + std::to_string(k + 1)] = "s1 e1 " + e(4, 1);
    return t;
}

// Third column of the table: the image with the tree edges collapsed.
std::map<std::string, std::string> family_collapsed(int k) {
    std::map<std::string, std::string> t{{"s1", "t1"}, {"s2", "t1"}, {"e3." + std::to_string(k + 1), "t1"},
                                         {"e4." + std::to_string(k + 1), "s2"}};
    for (int i = 1; i <= k; ++i) t["t" + std::to_string(i)] = "t" + std::to_string(i + 1);
    t["t" + std::to_string(k + 1)] = "s1";
    return t;
}

std::map<std::string, std::string> family_monodromy(int k) {
    std::map<std::string, std::string> m{{"s1", "t1"}, {"s2", "s2t1"}};
    for (int i = 1; i <= k; ++i) m["t" + std::to_string(i)] = "t" + std::to_string(i + 1);
    m["t" + std::to_string(k + 1)] = "s2s1t1s2'";
    return m;
}

void criterion4(Check& ok) {
    auto t0 = std::chrono::steady_clock::now();
    Example e;
    for (int k = 0; k <= 5; ++k) {
        std::string K = "k = " + std::to_string(k) + ": ";
        CohomClass c{{Q(k), Q(k + 1)}};
        ConeWitness w = cone_membership(e.cc, e.h, c);
        ok(w.inside, K + "class in the positive cone");
        if (!w.inside) continue;
        Section s = build_section(e.x, w.cocycle);
        ok(s.connected(), K + "connected");
        ok(s.rank() == k + 3, K + "rank k+3");
        bool named = family_names(s, e.x);
        ok(named, K + "family shape");
        if (!named || !s.connected()) continue;
        GraphMap fr = first_return(e.x, s);
        std::vector<std::string> tree;
        for (const auto& ed : s.edges)
            if (ed.name[0] == 'e') tree.push_back(ed.name);
        if (k >= 1) {
            std::map<std::string, std::string> table, collapsed;
            std::set<std::string> in_tree(tree.begin(), tree.end());
            for (int i = 0; i < fr.dom.ne(); ++i) {
                table[fr.dom.enames[i]] = fr.cod.format_path(fr.emap[i]);
                std::string col;
                for (int oe : fr.emap[i]) {
                    const std::string& n = fr.cod.enames[Graph::edge_of(oe)];
                    if (!in_tree.count(n)) col += (col.empty() ? "" : " ") + fr.cod.oname(oe);
                }
                if (!col.empty()) collapsed[fr.dom.enames[i]] = col;
            }
            ok(table == family_table(k), K + "first-return table");
            ok(collapsed == family_collapsed(k), K + "collapsed column");
        }
        Monodromy m = monodromy(s, fr, tree);
        std::map<std::string, std::string> aut;
        for (std::size_t i = 0; i < m.aut.map.rank(); ++i)
            aut[m.aut.map.gens[i]] = strip_spaces(format_word(m.aut.map.images[i], m.aut.map.gens));
        ok(m.basepoint == "d1#1" && aut == family_monodromy(k), K + "monodromy under the canonical tree");
        NielsenReport nr = nielsen_search(fr, 10, 6);
        auto iw = ideal_whitehead(fr, nr.none_found());
        ok(triangles(iw, 2 * k + 3), K + "IW is 2k+3 triangles");
        ok(rotationless_index(iw) == frac(3, 2) - (k + 3), K + "index 3/2 - (k+3)");
        ok(lone_axis_check(fr).kind == Verdict::Yes, K + "verdict yes");
        if (k == 0) {
            SectionOptions opt;
            opt.avoid_base = true;
            Section sb = build_section(e.x, w.cocycle, opt);
            GraphMap frb = first_return(e.x, sb);
            OuterComparison oc = compare_outer(e.x, sb, frb, *e.mf.marked);
            ok(oc.iso && oc.equal && outer_equal(oc.base_aut, *e.mf.expected), K + "outer class of the map");
        }
    }
    ok(seconds_since(t0) < kCriterion4Seconds, "under 10 s");
}

void criterion5(Check& ok) {
    Example e;
    const int k = 1;
    ConeWitness w = cone_membership(e.cc, e.h, CohomClass{{Q(0), Q(1)}});
    int r = e.h.index("r"), b = e.h.index("b");
    DiscreteCone dc = discreteness_cone(e.x, e.cc, e.h, k, r, w.cocycle);
    for (int c = 0; c < e.cc.n1; ++c) {
        Q sum = 0;
        for (const auto& [i, z] : dc.others) sum += abs(z[c]);
        Q lhs = Q(dc.m) * dc.z_base[c] - sum;
        ok(lhs > 0, "first inequality at " + e.cc.names1[c]);
        if (c == dc.skew) ok(lhs > k + 2, "second inequality at " + e.cc.names1[c]);
    }
    std::mt19937_64 rng(31);
    std::uniform_int_distribution<long> pick_p(dc.m + 1, 2 * dc.m + 4);
    int found = 0;
    while (found < kConeSamples) {
        long p = pick_p(rng);
        long qmax = (p - 1) / dc.m;
        std::uniform_int_distribution<long> pick_q(-qmax, qmax);
        long q = pick_q(rng);
        if (q == 0 || std::gcd(p, q) != 1) continue;
        CohomClass c;
        c.coords.assign(2, Q(0));
        c.coords[r] = p;
        c.coords[b] = q;
        if (!dc.contains(c)) continue;
        ++found;
        std::string tag = c.str(e.h);
        Section s = build_section(e.x, dc.cocycle(c));
        ok(s.connected(), tag + " connected");
        if (!s.connected()) continue;
        SectionAudit a = section_audit(e.x, s, first_return(e.x, s), false);
        ok(a.illegal_at_valence_three >= 3, tag + " has >= 3 illegal turns at valence-3 vertices");
        ok(a.dim_bound >= 1, tag + " dimension bound >= 1");
    }
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

void criterion6(Check& ok) {
    auto corpus = random_corpus(kCorpusSize, kCorpusSeed);
    int rt = 0, mult = 0;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const GraphMap& f = corpus[i];
        rt += verify(decompose(f), f);
        const GraphMap& g = corpus[(i + 1) % corpus.size()];
        const GraphMap& h = g.dom.ne() == f.dom.ne() ? g : f;
        mult += transition_matrix(compose(f, h)) == multiply(transition_matrix(h), transition_matrix(f));
    }
    ok(rt == kCorpusSize, "fold roundtrip on 200 maps");
    ok(mult == kCorpusSize, "A(f o g) = A(g) A(f) on 200 pairs");

    std::mt19937_64 rng(17);
    std::uniform_int_distribution<int> len(0, 30);
    Graph g = read_map_file(FBC_DATA_DIR "/phi_f3.map").graph;
    int laws = 0;
    for (int t = 0; t < kTightenPaths; ++t) {
        Path p = random_path(rng, g, len(rng));
        Path tp = tighten(g, p);
        Path back = reverse_path(p), pp = p;
        pp.insert(pp.end(), back.begin(), back.end());
        bool reduced = true;
        for (std::size_t i = 0; i + 1 < tp.size(); ++i) reduced = reduced && tp[i + 1] != Graph::rev(tp[i]);
        laws += tighten(g, tp) == tp && tighten(g, back) == reverse_path(tp) && tighten(g, pp).empty() && reduced;
    }
    ok(laws == kTightenPaths, "tighten laws on 10^4 paths");

    Example e;
    Cochain z = representative(e.h, CohomClass{{Q(2), Q(3)}});
    std::uniform_int_distribution<int> num(-20, 20), den(1, 7);
    int kept = 0;
    const int shifts = 200;
    for (int t = 0; t < shifts; ++t) {
        QVec gv(e.cc.n0);
        for (Q& v : gv) v = frac(num(rng), den(rng));
        Cochain s = coboundary(e.cc, gv);
        Cochain y = z;
        for (int i = 0; i < e.cc.n1; ++i) y[i] += s[i];
        bool same = is_cocycle(e.cc, y);
        for (const Chain& c : e.h.cycles) same = same && pair(y, c) == pair(z, c);
        kept += same;
    }
    ok(kept == shifts, "cocycle condition under coboundary shifts");

    ConeWitness w = cone_membership(e.cc, e.h, CohomClass{{Q(0), Q(2)}});
    ok(w.inside && build_section(e.x, w.cocycle).components == 2, "2r* gives 2 section components");
}

void criterion7(Check& ok) {
    double worst = 0;
    for (const GraphMap& f : random_corpus(kCorpusSize, kCorpusSeed)) worst = std::max(worst, eigen_metric(f).residual);
    ok(worst <= kResidualTol, "eigen_metric residual <= 1e-10 (worst " + std::to_string(worst) + ")");
    MapFile m = read_map_file(FBC_DATA_DIR "/phi_f3.map");
    double lam = eigen_metric(m.map).lambda;
    Word w{1};
    std::size_t prev = 0;
    for (int n = 0; n <= kGrowthN; ++n) {
        prev = w.size();
        w = reduce(m.expected->apply(w));
    }
    double ratio = double(w.size()) / double(prev);
    std::ostringstream msg;
    msg.precision(8);
    msg << "lambda " << lam << " vs |phi^21(a)|/|phi^20(a)| = " << ratio;
    ok(std::abs(lam - ratio) <= kGrowthTol, msg.str());
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<void(Check&)> run;
    };
    std::vector<Criterion> all{{"running example end-to-end", criterion1},
                               {"torus and cohomology", criterion2},
                               {"Brown's algorithm and the slope grid", criterion3},
                               {"lone-axis family k = 0..5", criterion4},
                               {"discreteness cone, k = 1", criterion5},
                               {"property suites", criterion6},
                               {"numerics", criterion7}};
    int failed = 0;
    for (std::size_t i = 0; i < all.size(); ++i) {
        Check ok;
        auto t0 = std::chrono::steady_clock::now();
        try {
            all[i].run(ok);
        } catch (const std::exception& e) {
            ok.failures.push_back(std::string("exception: ") + e.what());
        }
        double dt = seconds_since(t0);
        bool pass = ok.failures.empty();
        failed += !pass;
        std::cout << (pass ? "PASS" : "FAIL") << "  " << i + 1 << ". " << all[i].name << "  (" << std::fixed
                  << std::setprecision(2) << dt << " s)";
        if (!pass) {
            std::cout << "  failed:";
            for (std::size_t j = 0; j < ok.failures.size() && j < 5; ++j) std::cout << " [" << ok.failures[j] << "]";
            if (ok.failures.size() > 5) std::cout << " ... " << ok.failures.size() - 5 << " more";
        }
        std::cout << std::endl;
    }
    return failed ? 1 : 0;
}
