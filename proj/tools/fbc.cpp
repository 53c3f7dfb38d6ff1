// Command line driver: train track report, torus, cohomology survey, sections, BNS.

#include <filesystem>
#include <fstream>
#include <atomic>
#include <mutex>
#include <thread>
#include <iostream>
#include <numeric>

#include "CLI11.hpp"
#include "json.hpp"

#include "fbc/bns.hpp"
#include "fbc/section.hpp"

using namespace fbc;
using nlohmann::json;

namespace {

enum Exit { Ok = 0, DefiniteNo = 1, Inconclusive = 2, ParseFail = 64, InvariantFail = 65 };

struct RunConfig {
    std::string input;
    std::string cls;
    int k_max = 5;
    int height_max = 8;
    std::string phase = "1/2";
    int nielsen_len = 10;
    int nielsen_period = 6;
    std::string format = "json";
    std::string out;
};

void emit(const RunConfig& cfg, const std::string& stem, const std::string& text) {
    if (cfg.out.empty()) {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::filesystem::create_directories(cfg.out);
    std::string ext = cfg.format == "tikz" ? "tex" : cfg.format;
    auto path = std::filesystem::path(cfg.out) / (stem + "." + ext);
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << text;
    std::cerr << "wrote " << path.string() << '\n';
}

void need_format(const RunConfig& cfg, std::initializer_list<const char*> allowed) {
    for (const char* a : allowed)
        if (cfg.format == a) return;
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : "|") + a;
    throw ParseError("--format must be one of " + list + " for this command");
}

Q parse_q(const std::string& s) {
    Q q;
    if (q.set_str(s, 10) != 0) throw ParseError("not a rational number: " + s);
    q.canonicalize();
    return q;
}

CohomClass parse_class(const std::string& text, const H1& h) {
    CohomClass c;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) c.coords.push_back(parse_q(tok));
    if (int(c.coords.size()) != h.rank)
        throw ParseError("--class needs " + std::to_string(h.rank) + " comma separated coordinates");
    return c;
}

struct Pipeline {
    MapFile mf;
    FoldSequence seq;
    TrapComplex x;
    ChainComplex cc;
    H1 h;

    explicit Pipeline(const std::string& path)
        : mf(read_map_file(path)), seq(decompose(mf.map)), x(build_torus(seq)), cc(chain_complex(x)),
          h(h1(cc, named_cycles(cc, mf))) {}
};

json audit_json(const SectionAudit& a) {
    json j{{"rank", a.rank},
           {"components", a.components},
           {"skew_crossings", a.skew_crossings},
           {"illegal_turns", a.illegal_turns},
           {"illegal_at_valence_three", a.illegal_at_valence_three},
           {"untouched_edge", a.untouched_edge},
           {"dim_lower_bound", a.dim_bound}};
    json v = json::object();
    for (auto [val, n] : a.valence_profile) v[std::to_string(val)] = n;
    j["valence_profile"] = v;
    return j;
}

json verdict_json(const GraphMap& f, const RunConfig& cfg, Verdict* out = nullptr) {
    LoneAxisOptions opt;
    opt.nielsen_len = cfg.nielsen_len;
    opt.nielsen_period = cfg.nielsen_period;
    Verdict v = lone_axis_check(f, opt);
    if (out) *out = v;
    return json{{"verdict", v.str()}, {"reason", v.reason}, {"assumptions", v.assumptions}};
}

int exit_for(const Verdict& v) {
    return v.kind == Verdict::Yes ? Ok : v.kind == Verdict::No ? DefiniteNo : Inconclusive;
}

int cmd_traintrack(const RunConfig& cfg) {
    need_format(cfg, {"json", "dot"});
    MapFile mf = read_map_file(cfg.input);
    const GraphMap& f = mf.map;
    f.check();
    json j;
    j["name"] = mf.name;
    j["vertices"] = f.dom.nv();
    j["edges"] = f.dom.ne();
    auto tt = is_train_track(f);
    j["train_track"] = tt.ok;
    bool irr = is_irreducible(f), exp = is_expanding(f);
    j["irreducible"] = irr;
    j["expanding"] = exp;
    json ill = json::array();
    for (const Turn& t : illegal_turns(f)) ill.push_back(format_turn(f.dom, t));
    j["illegal_turns"] = ill;
    if (irr && exp) {
        EigenMetric em = eigen_metric(f);
        j["lambda"] = em.lambda;
        j["eigen_residual"] = em.residual;
        json len = json::object();
        for (int e = 0; e < f.dom.ne(); ++e) len[f.dom.enames[e]] = em.lengths[e];
        j["eigen_lengths"] = len;
    }
    if (tt.ok && irr && exp) {
        FoldSequence s = decompose(f);
        json labels = json::array();
        for (const Fold& fd : s.folds) labels.push_back(f.dom.enames[Graph::edge_of(fd.olabel)]);
        j["folds"] = labels;
        NielsenReport nr = nielsen_search(f, cfg.nielsen_len, cfg.nielsen_period);
        j["nielsen"] = {{"max_len", nr.max_len}, {"max_period", nr.max_period}, {"found", nr.found.size()}};
        auto iw = ideal_whitehead(f, nr.none_found());
        j["ideal_whitehead_sizes"] = iw.sizes();
        j["rotationless_index"] = qstr(rotationless_index(iw));
        if (cfg.format == "dot") {
            Verdict v;
            verdict_json(f, cfg, &v);
            emit(cfg, "iw", iw_dot(f.dom, iw));
            return exit_for(v);
        }
    } else if (cfg.format == "dot") {
        throw InvariantError("ideal Whitehead graph needs an expanding irreducible train track map");
    }
    Verdict v;
    j["lone_axis"] = verdict_json(f, cfg, &v);
    emit(cfg, "traintrack", j.dump(2));
    return exit_for(v);
}

int cmd_torus(const RunConfig& cfg) {
    need_format(cfg, {"json", "dot", "tikz"});
    MapFile mf = read_map_file(cfg.input);
    TrapComplex x = build_torus(decompose(mf.map));
    if (cfg.format == "dot") emit(cfg, "torus", torus_dot(x));
    else if (cfg.format == "tikz") emit(cfg, "torus", torus_tikz(x));
    else emit(cfg, "torus", torus_json(x));
    return Ok;
}

struct SurveyRow {
    CohomClass c;
    bool in_cone = false, primitive = false, on_line = false;
    Q skew_value;
    SectionAudit audit;
    bool built = false;
    std::string verdict;
};

int cmd_survey(const RunConfig& cfg) {
    need_format(cfg, {"json"});
    Pipeline p(cfg.input);
    if (p.h.rank != 2) throw InvariantError("survey expects a rank 2 first cohomology");
    SkewLoop sl = skew_loop(p.x);
    if (!sl.closed) throw InvariantError("skew cells do not close into a loop: " + sl.breaks);
    Chain loop(p.cc.n1);
    for (auto [cell, k] : sl.chain) loop[cell] += k;
    QVec s = homology_class(p.h, loop);
    const long H = cfg.height_max;

    std::vector<CohomClass> classes;
    for (long b = -H; b <= H; ++b)
        for (long a = -H; a <= H; ++a)
            if (a != 0 || b != 0) classes.push_back(CohomClass{{Q(a), Q(b)}});

    auto work = [&](CohomClass c) {
        SurveyRow r;
        r.c = c;
        r.primitive = c.primitive();
        r.skew_value = evaluate(p.cc, p.h, c, loop);
        r.on_line = r.skew_value == 1;
        ConeWitness w = cone_membership(p.cc, p.h, c);
        r.in_cone = w.inside;
        if (!r.in_cone || !r.primitive) return r;
        Section sec = build_section(p.x, w.cocycle);
        GraphMap fr = first_return(p.x, sec);
        r.audit = section_audit(p.x, sec, fr, false);
        r.built = true;
        if (r.on_line) {
            // k is the value on the first basis loop
            long k = c.coords[0].get_num().get_si();
            if (k >= 0 && k <= cfg.k_max) r.verdict = lone_axis_check(fr, {cfg.nielsen_len, cfg.nielsen_period}).str();
        }
        return r;
    };
    // fan out per class; rows keep the enumeration order
    std::vector<SurveyRow> done(classes.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_lock;
    std::vector<std::thread> pool;
    unsigned workers = std::max(1u, std::min(std::thread::hardware_concurrency(), 16u));
    for (unsigned t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next++) < classes.size();) {
                try {
                    done[i] = work(classes[i]);
                } catch (...) {
                    std::lock_guard<std::mutex> g(failure_lock);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    json rows = json::array(), eligible = json::array();
    for (const SurveyRow& r : done) {
        if (!r.in_cone) continue;
        json j{{"class", r.c.str(p.h)},
               {"coords", {qstr(r.c.coords[0]), qstr(r.c.coords[1])}},
               {"primitive", r.primitive},
               {"skew_value", qstr(r.skew_value)},
               {"lone_axis_line", r.on_line}};
        if (r.built) {
            j["section"] = audit_json(r.audit);
            j["monodromy_rank"] = r.audit.rank;
        } else {
            long g = std::gcd(r.c.coords[0].get_num().get_si(), r.c.coords[1].get_num().get_si());
            j["section_components"] = g;
        }
        if (!r.verdict.empty()) j["lone_axis_verdict"] = r.verdict;
        if (r.on_line && r.primitive) eligible.push_back(r.c.str(p.h));
        rows.push_back(j);
    }
    json out{{"skew_loop_class", {qstr(s[0]), qstr(s[1])}},
             {"basis", p.h.names},
             {"height_max", H},
             {"k_max", cfg.k_max},
             {"classes", rows},
             {"lone_axis_eligible", eligible}};
    emit(cfg, "survey", out.dump(2));
    return Ok;
}

// Builds the section of the class; returns an exit code when it stops early.
struct SectionRun {
    Pipeline p;
    CohomClass c;
    Cochain z;
    Section s;
    GraphMap fr;
    bool family = false;
};

int prepare_section(const RunConfig& cfg, SectionRun& run) {
    if (cfg.cls.empty()) throw ParseError("--class is required");
    run.c = parse_class(cfg.cls, run.p.h);
    if (!run.c.integral()) throw ParseError("--class must be integral");
    ConeWitness w = cone_membership(run.p.cc, run.p.h, run.c);
    if (!w.inside) {
        json j{{"class", run.c.str(run.p.h)},
               {"in_cone", false},
               {"note", "class is not positive on every 1-cell for any representative"},
               {"certificate_value", qstr(w.certificate_value)}};
        emit(cfg, "section", j.dump(2));
        return DefiniteNo;
    }
    run.z = w.cocycle;
    SectionOptions opt;
    opt.phase = parse_q(cfg.phase);
    if (opt.phase <= 0 || opt.phase >= 1) throw ParseError("--phase must lie strictly between 0 and 1");
    run.s = build_section(run.p.x, run.z, opt);
    if (!run.s.connected()) {
        json comps = json::array();
        json j{{"class", run.c.str(run.p.h)},
               {"primitive", run.c.primitive()},
               {"components", run.s.components},
               {"vertices", run.s.graph.nv()},
               {"edges", run.s.graph.ne()},
               {"note", "section is disconnected; the class is not primitive"}};
        emit(cfg, "section", j.dump(2));
        return DefiniteNo;
    }
    run.family = family_names(run.s, run.p.x);
    run.fr = first_return(run.p.x, run.s);
    return -1;
}

int cmd_section(const RunConfig& cfg) {
    need_format(cfg, {"json", "dot"});
    SectionRun run{Pipeline(cfg.input), {}, {}, {}, {}, false};
    if (int code = prepare_section(cfg, run); code >= 0) return code;
    if (cfg.format == "dot") {
        emit(cfg, "section", section_dot(run.p.x, run.s));
        return Ok;
    }
    const Section& s = run.s;
    json verts = json::array();
    for (const auto& v : s.vertices) {
        json jv{{"name", v.name}, {"valence", s.graph.valence(s.graph.vertex(v.name))}};
        if (v.host >= 0) jv["host"] = run.p.x.c1[v.host].name;
        verts.push_back(jv);
    }
    json edges = json::array();
    for (const auto& e : s.edges) {
        int id = s.graph.edge(e.name);
        edges.push_back({{"name", e.name},
                         {"trapezoid", run.p.x.c2[e.trapezoid].name},
                         {"from", s.graph.vnames[s.graph.src[id]]},
                         {"to", s.graph.vnames[s.graph.dst[id]]}});
    }
    json j{{"class", run.c.str(run.p.h)},
           {"primitive", run.c.primitive()},
           {"rank", s.rank()},
           {"connected", true},
           {"family_names", run.family},
           {"basepoint", s.graph.vnames[s.basepoint]},
           {"vertices", verts},
           {"edges", edges},
           {"first_return", json::parse(first_return_json(run.fr))},
           {"audit", audit_json(section_audit(run.p.x, s, run.fr, false))}};
    emit(cfg, "section", j.dump(2));
    return Ok;
}

int cmd_monodromy(const RunConfig& cfg) {
    need_format(cfg, {"json"});
    SectionRun run{Pipeline(cfg.input), {}, {}, {}, {}, false};
    if (int code = prepare_section(cfg, run); code >= 0) return code;
    std::vector<std::string> tree;
    if (run.family)
        for (const auto& e : run.s.edges)
            if (e.name[0] == 'e') tree.push_back(e.name);
    Monodromy m = monodromy(run.s, run.fr, tree);
    json images = json::object();
    for (std::size_t i = 0; i < m.aut.map.gens.size(); ++i)
        images[m.aut.map.gens[i]] = format_word(m.aut.map.images[i], m.aut.map.gens);
    json j{{"class", run.c.str(run.p.h)},
           {"rank", run.s.rank()},
           {"tree", m.tree},
           {"basepoint", m.basepoint},
           {"automorphism", images}};
    Verdict v;
    j["lone_axis"] = verdict_json(run.fr, cfg, &v);
    // compare with the base map when a section off the base graph exists
    if (run.p.mf.marked) {
        try {
            SectionOptions opt;
            opt.phase = parse_q(cfg.phase);
            opt.avoid_base = true;
            Section sb = build_section(run.p.x, run.z, opt);
            GraphMap frb = first_return(run.p.x, sb);
            OuterComparison oc = compare_outer(run.p.x, sb, frb, *run.p.mf.marked);
            json base = json::object();
            for (std::size_t i = 0; i < oc.base_aut.gens.size(); ++i)
                base[oc.base_aut.gens[i]] = format_word(oc.base_aut.images[i], oc.base_aut.gens);
            j["base_comparison"] = {{"isomorphic", oc.iso}, {"same_outer_class", oc.equal}, {"base_automorphism", base}};
        } catch (const InvariantError& e) {
            j["base_comparison"] = {{"note", std::string("not available: ") + e.what()}};
        }
    }
    emit(cfg, "monodromy", j.dump(2));
    return Ok;
}

int cmd_bns(const RunConfig& cfg) {
    need_format(cfg, {"json", "tikz", "svg"});
    TwoGenPresentation p = read_two_gen(cfg.input);
    PolygonTrace t = trace_polygon(p);
    SlopeSet s = excluded_directions(t);
    if (cfg.format == "tikz") emit(cfg, "bns", bns_tikz(t, s));
    else if (cfg.format == "svg") emit(cfg, "bns", bns_svg(t, s));
    else {
        json j = json::parse(bns_json(p, t, s));
        if (!cfg.cls.empty()) {
            std::vector<long> v;
            std::stringstream ss(cfg.cls);
            std::string tok;
            while (std::getline(ss, tok, ',')) {
                Q q = parse_q(tok);
                if (q.get_den() != 1) throw ParseError("--class must be integral");
                v.push_back(q.get_num().get_si());
            }
            if (v.size() != 2) throw ParseError("--class needs two coordinates");
            Covector c{v[0], v[1]};
            ConeComponent comp = component_containing(s, c);
            j["component"] = {{"of", c.str(p.gens)},
                              {"lo", {comp.lo.p, comp.lo.q}},
                              {"hi", {comp.hi.p, comp.hi.q}},
                              {"description", comp.str(p.gens)},
                              {"manual_check_required", s.needs_manual_check(c)}};
        }
        emit(cfg, "bns", j.dump(2));
    }
    return Ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"free-by-cyclic toolkit: train tracks, folded mapping tori, sections, BNS"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--input", cfg.input, "input file (.map or .2gen)")->required()->check(CLI::ExistingFile);
        sub->add_option("--format", cfg.format, "json|dot|tikz (svg for bns)");
        sub->add_option("--out", cfg.out, "write into this directory instead of stdout");
        sub->add_option("--nielsen-len", cfg.nielsen_len, "Nielsen search path length bound")->check(CLI::Range(1, 16));
        sub->add_option("--nielsen-period", cfg.nielsen_period, "Nielsen search period bound")->check(CLI::Range(1, 12));
    };
    auto classed = [&](CLI::App* sub) {
        sub->add_option("--class", cfg.cls, "cohomology class coordinates a,b,...");
        sub->add_option("--phase", cfg.phase, "where the section crosses the least skew cell, in (0,1)");
    };

    auto* tt = app.add_subcommand("traintrack", "certify a train track map and decide the lone-axis criteria");
    common(tt);
    auto* to = app.add_subcommand("torus", "folded mapping torus");
    common(to);
    auto* sv = app.add_subcommand("survey", "survey integral classes in the positive cone");
    common(sv);
    sv->add_option("--k-max", cfg.k_max, "largest k on the lone-axis line to decide")->check(CLI::Range(0, 50));
    sv->add_option("--height-max", cfg.height_max, "coordinate height bound")->check(CLI::Range(1, 40));
    auto* se = app.add_subcommand("section", "cross section and first return map");
    common(se);
    classed(se);
    auto* mo = app.add_subcommand("monodromy", "monodromy automorphism of a cross section");
    common(mo);
    classed(mo);
    auto* bn = app.add_subcommand("bns", "Brown's algorithm for a two-generator one-relator group");
    common(bn);
    bn->add_option("--class", cfg.cls, "report the component of this covector");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return ParseFail;
    }

    try {
        if (*tt) return cmd_traintrack(cfg);
        if (*to) return cmd_torus(cfg);
        if (*sv) return cmd_survey(cfg);
        if (*se) return cmd_section(cfg);
        if (*mo) return cmd_monodromy(cfg);
        if (*bn) return cmd_bns(cfg);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return ParseFail;
    } catch (const InvariantError& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return InvariantFail;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return InvariantFail;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return InvariantFail;
    }
    return Ok;
}
