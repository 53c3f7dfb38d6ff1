#include "fbc/bns.hpp"
#include "fbc/graph.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <boost/geometry/geometries/multi_point.hpp>

#include "json.hpp"

namespace fbc {

namespace bg = boost::geometry;

TwoGenPresentation two_gen(const std::vector<std::string>& gens, const Word& relator) {
    if (gens.size() != 2) throw ParseError("presentation needs exactly two generators");
    TwoGenPresentation p;
    p.gens = gens;
    p.input = relator;
    p.relator = cyclic_core(reduce(relator), &p.conjugator);
    if (p.relator.empty()) throw ParseError("relator is trivial");
    return p;
}

TwoGenPresentation parse_two_gen(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> gens;
    std::string rel;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "generators") {
            std::string g;
            while (ls >> g) gens.push_back(g);
        } else if (key == "relator") {
            std::string rest;
            std::getline(ls, rest);
            rel = rest;
        } else {
            throw ParseError("line " + std::to_string(n) + ": unknown key '" + key + "'");
        }
    }
    if (gens.size() != 2) throw ParseError("expected: generators <g1> <g2>");
    if (rel.find_first_not_of(" \t") == std::string::npos) throw ParseError("expected: relator <word>");
    return two_gen(gens, parse_word(rel, gens));
}

TwoGenPresentation read_two_gen(const std::string& path) { return parse_two_gen(read_text_file(path)); }

std::vector<std::pair<Lattice, Lattice>> PolygonTrace::thick() const {
    std::vector<std::pair<Lattice, Lattice>> out;
    for (const auto& [e, m] : unit_edges)
        if (m > 1) out.push_back(e);
    return out;
}

namespace {

using BPoint = bg::model::d2::point_xy<long>;

long cross(const Lattice& o, const Lattice& a, const Lattice& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

long cross(const Covector& a, const Covector& b) { return a.p * b.q - a.q * b.p; }

int half(const Covector& c) { return (c.q > 0 || (c.q == 0 && c.p > 0)) ? 0 : 1; }

// c strictly inside the open sector swept counterclockwise from lo to hi.
template <class T>
bool ccw_between(const Covector& lo, T p, T q, const Covector& hi) {
    auto cr = [](T ap, T aq, T bp, T bq) -> T { return ap * bq - aq * bp; };
    T c_lo = cr(T(lo.p), T(lo.q), p, q), c_hi = cr(p, q, T(hi.p), T(hi.q));
    long lh = cross(lo, hi);
    if (lh > 0) return c_lo > 0 && c_hi > 0;
    if (lh < 0) return !(c_lo <= 0 && c_hi <= 0);
    bool same = lo.p * hi.p + lo.q * hi.q > 0;
    if (!same) return c_lo > 0;
    // full turn around a single ray
    return !(c_lo == 0 && T(lo.p) * p + T(lo.q) * q > 0);
}

}  // namespace

PolygonTrace trace_polygon(const TwoGenPresentation& p) {
    PolygonTrace t;
    Lattice cur{0, 0};
    t.path.push_back(cur);
    for (Letter l : p.relator) {
        Lattice next = cur;
        next[std::abs(l) - 1] += l > 0 ? 1 : -1;
        auto key = std::minmax(cur, next);
        ++t.unit_edges[{key.first, key.second}];
        t.path.push_back(next);
        cur = next;
    }
    if (cur != Lattice{0, 0})
        throw InvariantError("relator does not close up: ends at (" + std::to_string(cur[0]) + ", " + std::to_string(cur[1]) + ")");

    bg::model::multi_point<BPoint> pts;
    for (const Lattice& q : t.path) bg::append(pts, BPoint(q[0], q[1]));
    bg::model::polygon<BPoint, false> hull;
    bg::convex_hull(pts, hull);
    std::vector<Lattice> h;
    for (const BPoint& q : hull.outer()) h.push_back({q.x(), q.y()});
    if (h.size() > 1 && h.front() == h.back()) h.pop_back();
    // drop collinear points and orient counterclockwise
    std::vector<Lattice> clean;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const Lattice& a = h[(i + h.size() - 1) % h.size()];
        const Lattice& c = h[(i + 1) % h.size()];
        if (cross(a, h[i], c) != 0) clean.push_back(h[i]);
    }
    if (clean.size() >= 3 && cross(clean[0], clean[1], clean[2]) < 0) std::reverse(clean.begin(), clean.end());
    if (!clean.empty()) std::rotate(clean.begin(), std::min_element(clean.begin(), clean.end()), clean.end());
    t.hull = clean;
    for (const Lattice& v : t.hull) {
        int n = 0;
        for (std::size_t i = 0; i + 1 < t.path.size(); ++i) n += t.path[i] == v;
        t.visits[v] = n;
    }
    return t;
}

bool Covector::operator<(const Covector& o) const {
    if (half(*this) != half(o)) return half(*this) < half(o);
    return cross(*this, o) > 0;
}

std::string Covector::str(const std::vector<std::string>& gens) const {
    std::string s;
    auto term = [&](long c, const std::string& g) {
        if (c == 0) return;
        if (!s.empty()) s += c > 0 ? " + " : " - ";
        else if (c < 0) s += "-";
        long a = std::abs(c);
        if (a != 1) s += std::to_string(a);
        s += g + "*";
    };
    term(p, gens[0]);
    term(q, gens[1]);
    return s.empty() ? "0" : s;
}

Covector primitive_covector(long p, long q) {
    long g = std::gcd(p, q);
    if (g == 0) throw InvariantError("zero covector");
    return {p / g, q / g};
}

bool SlopeSet::is_excluded(const Covector& c) const {
    Covector d = primitive_covector(c.p, c.q);
    return std::find(excluded.begin(), excluded.end(), d) != excluded.end();
}

bool SlopeSet::needs_manual_check(const Covector& c) const {
    for (const Corner& k : indeterminate)
        if (ccw_between<long>(k.from, c.p, c.q, k.to)) return true;
    return false;
}

SlopeSet excluded_directions(const PolygonTrace& t) {
    SlopeSet s;
    std::size_t n = t.hull.size();
    if (n < 2) return s;
    for (std::size_t i = 0; i < n; ++i) {
        HullEdge e;
        e.from = t.hull[i];
        e.to = t.hull[(i + 1) % n];
        long dx = e.to[0] - e.from[0], dy = e.to[1] - e.from[1];
        e.length = std::gcd(dx, dy);
        e.normal = primitive_covector(dy, -dx);
        e.diagonal = dx != 0 && dy != 0;
        s.edges.push_back(e);
        if (e.diagonal || e.length >= 2) {
            for (Covector c : {e.normal, -e.normal})
                if (std::find(s.excluded.begin(), s.excluded.end(), c) == s.excluded.end()) s.excluded.push_back(c);
        }
    }
    std::sort(s.excluded.begin(), s.excluded.end());
    for (std::size_t i = 0; i < n; ++i) {
        const Lattice& v = t.hull[i];
        auto it = t.visits.find(v);
        if (it == t.visits.end() || it->second < 2) continue;
        s.indeterminate.push_back({v, s.edges[(i + n - 1) % n].normal, s.edges[i].normal});
    }
    return s;
}

bool ConeComponent::contains(const Q& p, const Q& q) const {
    if (p == 0 && q == 0) return false;
    if (lo.p == 0 && lo.q == 0) return true;
    return ccw_between<Q>(lo, p, q, hi);
}

std::string ConeComponent::str(const std::vector<std::string>& gens) const {
    if (lo.p == 0 && lo.q == 0) return "everything";
    return "open sector from " + lo.str(gens) + " counterclockwise to " + hi.str(gens);
}

ConeComponent component_containing(const SlopeSet& s, const Covector& c) {
    if (c.p == 0 && c.q == 0) throw InvariantError("zero covector");
    if (s.is_excluded(c)) throw InvariantError("covector lies on an excluded ray");
    ConeComponent out;
    if (s.excluded.empty()) return out;
    const auto& ex = s.excluded;
    // the sector between consecutive excluded rays that holds c
    for (std::size_t i = 0; i < ex.size(); ++i) {
        const Covector& lo = ex[i];
        const Covector& hi = ex[(i + 1) % ex.size()];
        if (ccw_between<long>(lo, c.p, c.q, hi)) {
            out.lo = lo;
            out.hi = hi;
            return out;
        }
    }
    throw InvariantError("no component contains the covector");
}

LineReport lone_axis_line(const ConeComponent& comp, const std::array<long, 2>& s, long height) {
    LineReport r;
    long g = std::gcd(s[0], s[1]);
    if (g != 1) {
        r.note = "no integral class takes the value 1 on the loop (gcd " + std::to_string(g) + ")";
        return r;
    }
    for (long p = -height; p <= height; ++p) {
        long rest = 1 - s[0] * p;
        if (s[1] == 0) {
            if (rest != 0) continue;
            for (long q = -height; q <= height; ++q)
                if (comp.contains(Q(p), Q(q))) r.classes.push_back({p, q});
            continue;
        }
        if (rest % s[1] != 0) continue;
        long q = rest / s[1];
        if (std::abs(q) <= height && comp.contains(Q(p), Q(q))) r.classes.push_back({p, q});
    }
    std::sort(r.classes.begin(), r.classes.end(), [](const Covector& a, const Covector& b) {
        long ha = std::max(std::abs(a.p), std::abs(a.q)), hb = std::max(std::abs(b.p), std::abs(b.q));
        return ha != hb ? ha < hb : (a.p != b.p ? a.p < b.p : a.q < b.q);
    });
    if (r.classes.empty()) r.note = "no class on the line inside the component up to height " + std::to_string(height);
    return r;
}

std::string bns_json(const TwoGenPresentation& p, const PolygonTrace& t, const SlopeSet& s) {
    using nlohmann::json;
    auto pt = [](const Lattice& a) { return json::array({a[0], a[1]}); };
    auto cv = [](const Covector& c) { return json::array({c.p, c.q}); };
    json j;
    j["generators"] = p.gens;
    j["relator"] = format_word(p.relator, p.gens);
    j["cyclic_conjugator"] = format_word(p.conjugator, p.gens);
    json path = json::array();
    for (const auto& a : t.path) path.push_back(pt(a));
    j["path"] = path;
    json hull = json::array();
    for (const auto& a : t.hull) hull.push_back({{"vertex", pt(a)}, {"visits", t.visits.at(a)}});
    j["hull"] = hull;
    json thick = json::array();
    for (const auto& [a, b] : t.thick()) thick.push_back({{"from", pt(a)}, {"to", pt(b)}, {"times", t.unit_edges.at({a, b})}});
    j["thick_edges"] = thick;
    json edges = json::array();
    for (const auto& e : s.edges)
        edges.push_back({{"from", pt(e.from)},
                         {"to", pt(e.to)},
                         {"normal", cv(e.normal)},
                         {"length", e.length},
                         {"excludes", e.diagonal ? "diagonal" : (e.length >= 2 ? "long axis edge" : "")}});
    j["hull_edges"] = edges;
    json ex = json::array();
    for (const auto& c : s.excluded) ex.push_back({{"covector", cv(c)}, {"name", c.str(p.gens)}});
    j["excluded"] = ex;
    json ind = json::array();
    for (const auto& c : s.indeterminate)
        ind.push_back({{"corner", pt(c.at)}, {"from", cv(c.from)}, {"to", cv(c.to)}, {"status", "manual check required"}});
    j["indeterminate"] = ind;
    return j.dump(2);
}

std::string bns_tikz(const PolygonTrace& t, const SlopeSet& s) {
    std::ostringstream o;
    o << "\\begin{tikzpicture}\n";
    o << "  \\draw[gray!60] ";
    for (std::size_t i = 0; i < t.path.size(); ++i) o << (i ? " -- " : "") << "(" << t.path[i][0] << "," << t.path[i][1] << ")";
    o << ";\n";
    for (const auto& [a, b] : t.thick())
        o << "  \\draw[very thick] (" << a[0] << "," << a[1] << ") -- (" << b[0] << "," << b[1] << ");\n";
    o << "  \\draw[blue] ";
    for (const auto& v : t.hull) o << "(" << v[0] << "," << v[1] << ") -- ";
    o << "cycle;\n";
    o << "  \\begin{scope}[xshift=6cm]\n";
    for (const auto& c : s.excluded) {
        double n = std::hypot(double(c.p), double(c.q));
        o << "    \\draw[blue] (0,0) -- (" << 2.5 * c.p / n << "," << 2.5 * c.q / n << ");\n";
    }
    o << "  \\end{scope}\n\\end{tikzpicture}\n";
    return o.str();
}

std::string bns_svg(const PolygonTrace& t, const SlopeSet& s) {
    const int scale = 40, pad = 40;
    long xmin = 0, xmax = 0, ymin = 0, ymax = 0;
    for (const auto& p : t.path) {
        xmin = std::min(xmin, p[0]);
        xmax = std::max(xmax, p[0]);
        ymin = std::min(ymin, p[1]);
        ymax = std::max(ymax, p[1]);
    }
    long w = (xmax - xmin) * scale + 2 * pad, h = (ymax - ymin) * scale + 2 * pad;
    auto X = [&](long x) { return (x - xmin) * scale + pad; };
    auto Y = [&](long y) { return (ymax - y) * scale + pad; };
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w + 200 << "\" height=\"" << std::max(h, 200L) << "\">\n";
    o << "  <polyline fill=\"none\" stroke=\"#999\" points=\"";
    for (const auto& p : t.path) o << X(p[0]) << "," << Y(p[1]) << " ";
    o << "\"/>\n";
    for (const auto& [a, b] : t.thick())
        o << "  <line stroke=\"black\" stroke-width=\"4\" x1=\"" << X(a[0]) << "\" y1=\"" << Y(a[1]) << "\" x2=\"" << X(b[0])
          << "\" y2=\"" << Y(b[1]) << "\"/>\n";
    o << "  <polygon fill=\"none\" stroke=\"blue\" points=\"";
    for (const auto& p : t.hull) o << X(p[0]) << "," << Y(p[1]) << " ";
    o << "\"/>\n";
    double cx = double(w) + 100, cy = 100;
    for (const auto& c : s.excluded) {
        double n = std::hypot(double(c.p), double(c.q));
        o << "  <line stroke=\"blue\" x1=\"" << cx << "\" y1=\"" << cy << "\" x2=\"" << cx + 80 * c.p / n << "\" y2=\""
          << cy - 80 * c.q / n << "\"/>\n";
    }
    o << "</svg>\n";
    return o.str();
}

}  // namespace fbc
