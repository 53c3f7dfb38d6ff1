#include "fbc/freegroup.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "fbc/common.hpp"

namespace fbc {

Word reduce(const Word& w) {
    Word out;
    out.reserve(w.size());
    for (Letter x : w) {
        if (!out.empty() && out.back() == -x)
            out.pop_back();
        else
            out.push_back(x);
    }
    return out;
}

Word inverse(const Word& w) {
    Word out(w.rbegin(), w.rend());
    for (auto& x : out) x = -x;
    return out;
}

Word concat(const Word& a, const Word& b) {
    Word w = a;
    w.insert(w.end(), b.begin(), b.end());
    return reduce(w);
}

Word power(const Word& w, int n) {
    Word base = n >= 0 ? w : inverse(w);
    Word out;
    for (int i = 0; i < std::abs(n); ++i) out.insert(out.end(), base.begin(), base.end());
    return reduce(out);
}

Word cyclic_core(const Word& w0, Word* conj) {
    Word w = reduce(w0);
    std::size_t i = 0, j = w.size();
    while (j - i >= 2 && w[i] == -w[j - 1]) {
        ++i;
        --j;
    }
    if (conj) conj->assign(w.begin(), w.begin() + i);
    return Word(w.begin() + i, w.begin() + j);
}

Word primitive_root(const Word& w) {
    std::size_t n = w.size();
    for (std::size_t d = 1; d <= n; ++d) {
        if (n % d) continue;
        bool ok = true;
        for (std::size_t i = d; i < n && ok; ++i) ok = w[i] == w[i - d];
        if (ok) return Word(w.begin(), w.begin() + d);
    }
    return w;
}

Word FreeGroupMap::apply(const Word& w) const {
    Word out;
    for (Letter x : w) {
        const Word& img = images.at(std::abs(x) - 1);
        if (x > 0)
            out.insert(out.end(), img.begin(), img.end());
        else {
            Word inv = inverse(img);
            out.insert(out.end(), inv.begin(), inv.end());
        }
    }
    return reduce(out);
}

FreeGroupMap FreeGroupMap::identity(const std::vector<std::string>& gens) {
    FreeGroupMap f;
    f.gens = gens;
    for (std::size_t i = 0; i < gens.size(); ++i) f.images.push_back({Letter(i + 1)});
    return f;
}

FreeGroupMap compose(const FreeGroupMap& f, const FreeGroupMap& g) {
    FreeGroupMap h;
    h.gens = g.gens;
    for (const Word& w : g.images) h.images.push_back(f.apply(w));
    return h;
}

static bool single_chars(const std::vector<std::string>& gens) {
    return std::all_of(gens.begin(), gens.end(), [](const std::string& s) {
        return s.size() == 1 && std::islower(static_cast<unsigned char>(s[0]));
    });
}

std::string format_word(const Word& w, const std::vector<std::string>& gens) {
    if (w.empty()) return "1";
    std::string out;
    bool compact = single_chars(gens);
    for (std::size_t i = 0; i < w.size(); ++i) {
        const std::string& g = gens.at(std::abs(w[i]) - 1);
        if (compact) {
            out += w[i] > 0 ? g[0] : char(std::toupper(static_cast<unsigned char>(g[0])));
        } else {
            if (i) out += ' ';
            out += g;
            if (w[i] < 0) out += '\'';
        }
    }
    return out;
}

Word parse_word(const std::string& text, const std::vector<std::string>& gens) {
    auto find = [&](const std::string& name) -> int {
        for (std::size_t i = 0; i < gens.size(); ++i)
            if (gens[i] == name) return int(i + 1);
        return 0;
    };
    Word w;
    std::istringstream in(text);
    std::string tok;
    std::vector<std::string> toks;
    while (in >> tok) toks.push_back(tok);
    if (toks.size() == 1 && toks[0] == "1") return w;
    bool compact = single_chars(gens) && toks.size() == 1 && !find(toks[0]);
    if (compact) {
        std::string s = toks[0];
        toks.clear();
        for (char c : s) toks.push_back(std::string(1, c));
    }
    for (const std::string& t : toks) {
        if (int g = find(t)) {
            w.push_back(g);
            continue;
        }
        if (t.size() > 1 && t.back() == '\'') {
            if (int g = find(t.substr(0, t.size() - 1))) {
                w.push_back(-g);
                continue;
            }
        }
        if (t.size() == 1 && std::isupper(static_cast<unsigned char>(t[0]))) {
            if (int g = find(std::string(1, char(std::tolower(static_cast<unsigned char>(t[0])))))) {
                w.push_back(-g);
                continue;
            }
        }
        throw ParseError("unknown generator '" + t + "'");
    }
    return reduce(w);
}

std::string format_map(const FreeGroupMap& f) {
    std::string out;
    for (std::size_t i = 0; i < f.gens.size(); ++i) {
        if (i) out += ", ";
        out += f.gens[i] + " -> " + format_word(f.images[i], f.gens);
    }
    return out;
}

static bool conjugates_all(const FreeGroupMap& f, const FreeGroupMap& g, const Word& c) {
    Word ci = inverse(c);
    for (std::size_t i = 0; i < f.images.size(); ++i)
        if (reduce(concat(concat(c, f.images[i]), ci)) != g.images[i]) return false;
    return true;
}

std::optional<Word> outer_conjugator(const FreeGroupMap& f, const FreeGroupMap& g, int max_len) {
    if (f.rank() != g.rank()) return std::nullopt;
    std::size_t pivot = 0;
    while (pivot < f.rank() && f.images[pivot].empty()) ++pivot;
    if (pivot == f.rank()) return conjugates_all(f, g, {}) ? std::optional<Word>(Word{}) : std::nullopt;

    Word u, v;
    Word a = cyclic_core(f.images[pivot], &u);
    Word b = cyclic_core(g.images[pivot], &v);
    if (a.size() != b.size()) return std::nullopt;
    Word root = primitive_root(a);
    int span = max_len / std::max<int>(1, int(root.size())) + 1;
    std::optional<Word> best;
    for (std::size_t r = 0; r < a.size(); ++r) {
        Word rot(a.begin() + r, a.end());
        rot.insert(rot.end(), a.begin(), a.begin() + r);
        if (rot != b) continue;
        // b = p^-1 a p with p the rotated prefix
        Word p(a.begin(), a.begin() + r);
        for (int j = -span; j <= span; ++j) {
            // g(x) = v b v^-1 = v p^-1 root^j a root^-j p v^-1, and a = u^-1 f(x) u
            Word c = concat(concat(concat(v, inverse(p)), power(root, j)), inverse(u));
            if (int(c.size()) > max_len) continue;
            if (conjugates_all(f, g, c) && (!best || c.size() < best->size())) best = c;
        }
    }
    return best;
}

bool outer_equal(const FreeGroupMap& f, const FreeGroupMap& g, int max_len) {
    return outer_conjugator(f, g, max_len).has_value();
}

Inversion nielsen_invert(const FreeGroupMap& f, int max_steps) {
    std::size_t n = f.rank();
    std::vector<Word> W = f.images, U;
    for (std::size_t i = 0; i < n; ++i) U.push_back({Letter(i + 1)});
    Inversion res;
    for (int step = 0; step < max_steps; ++step) {
        std::size_t bi = 0, bj = 0;
        int bsign = 0;
        bool bleft = false;
        long best = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                for (int s : {1, -1})
                    for (bool left : {true, false}) {
                        Word wj = s > 0 ? W[j] : inverse(W[j]);
                        Word cand = left ? concat(wj, W[i]) : concat(W[i], wj);
                        long gain = long(W[i].size()) - long(cand.size());
                        if (gain > best) {
                            best = gain;
                            bi = i, bj = j, bsign = s, bleft = left;
                        }
                    }
            }
        if (best <= 0) break;
        Word wj = bsign > 0 ? W[bj] : inverse(W[bj]);
        Word uj = bsign > 0 ? U[bj] : inverse(U[bj]);
        W[bi] = bleft ? concat(wj, W[bi]) : concat(W[bi], wj);
        U[bi] = bleft ? concat(uj, U[bi]) : concat(U[bi], uj);
    }
    res.inverse.gens = f.gens;
    res.inverse.images.assign(n, Word{});
    std::vector<bool> seen(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (W[i].size() != 1 || seen[std::abs(W[i][0]) - 1]) {
            res.note = "endomorphism, invertibility unverified";
            return res;
        }
        int p = std::abs(W[i][0]) - 1;
        seen[p] = true;
        res.inverse.images[p] = W[i][0] > 0 ? U[i] : inverse(U[i]);
    }
    FreeGroupMap id = FreeGroupMap::identity(f.gens);
    FreeGroupMap a = compose(f, res.inverse), b = compose(res.inverse, f);
    res.verified = a.images == id.images && b.images == id.images;
    res.note = res.verified ? "automorphism, inverse verified" : "endomorphism, invertibility unverified";
    return res;
}

}  // namespace fbc
