#include "fbc/linalg.hpp"

#include <algorithm>
#include <utility>

namespace fbc {

ZMat zmat(int rows, int cols) { return ZMat(rows, std::vector<Z>(cols, 0)); }

ZMat zmul(const ZMat& a, const ZMat& b) {
    if (a.empty()) return {};
    int n = int(a.size()), m = int(b.size()), p = b.empty() ? 0 : int(b[0].size());
    ZMat r = zmat(n, p);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < m; ++k)
            if (a[i][k] != 0)
                for (int j = 0; j < p; ++j) r[i][j] += a[i][k] * b[k][j];
    return r;
}

ZMat ztranspose(const ZMat& a) {
    if (a.empty()) return {};
    ZMat t = zmat(int(a[0].size()), int(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < a[i].size(); ++j) t[j][i] = a[i][j];
    return t;
}

QMat to_q(const ZMat& a) {
    QMat q(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        for (const Z& x : a[i]) q[i].push_back(Q(x));
    return q;
}

namespace {

ZMat identity(int n) {
    ZMat m = zmat(n, n);
    for (int i = 0; i < n; ++i) m[i][i] = 1;
    return m;
}

}  // namespace

Smith smith_normal_form(const ZMat& a, int cols) {
    int n = int(a.size());
    int m = cols >= 0 ? cols : (a.empty() ? 0 : int(a[0].size()));
    Smith s;
    s.d = a;
    if (n == 0) s.d = {};
    s.u = identity(n);
    s.v = identity(m);
    ZMat& d = s.d;

    auto swap_rows = [&](int i, int j) {
        std::swap(d[i], d[j]);
        std::swap(s.u[i], s.u[j]);
    };
    auto swap_cols = [&](int i, int j) {
        for (auto& r : d) std::swap(r[i], r[j]);
        for (auto& r : s.v) std::swap(r[i], r[j]);
    };
    // row i -= q row j
    auto row_op = [&](int i, int j, const Z& q) {
        for (int c = 0; c < m; ++c) d[i][c] -= q * d[j][c];
        for (int c = 0; c < n; ++c) s.u[i][c] -= q * s.u[j][c];
    };
    auto col_op = [&](int i, int j, const Z& q) {
        for (int r = 0; r < n; ++r) d[r][i] -= q * d[r][j];
        for (int r = 0; r < m; ++r) s.v[r][i] -= q * s.v[r][j];
    };

    for (int t = 0; t < std::min(n, m); ++t) {
        // smallest nonzero entry in the lower right block
        int pi = -1, pj = -1;
        for (int i = t; i < n; ++i)
            for (int j = t; j < m; ++j)
                if (d[i][j] != 0 && (pi < 0 || abs(d[i][j]) < abs(d[pi][pj]))) pi = i, pj = j;
        if (pi < 0) break;
        swap_rows(t, pi);
        swap_cols(t, pj);
        for (;;) {
            bool done = true;
            for (int i = t + 1; i < n; ++i) {
                if (d[i][t] == 0) continue;
                Z q;
                mpz_fdiv_q(q.get_mpz_t(), d[i][t].get_mpz_t(), d[t][t].get_mpz_t());
                row_op(i, t, q);
                if (d[i][t] != 0) {
                    swap_rows(t, i);
                    done = false;
                }
            }
            for (int j = t + 1; j < m; ++j) {
                if (d[t][j] == 0) continue;
                Z q;
                mpz_fdiv_q(q.get_mpz_t(), d[t][j].get_mpz_t(), d[t][t].get_mpz_t());
                col_op(j, t, q);
                if (d[t][j] != 0) {
                    swap_cols(t, j);
                    done = false;
                }
            }
            if (!done) continue;
            // divisibility: fold in any entry not divisible by the pivot
            int bad = -1;
            for (int i = t + 1; i < n && bad < 0; ++i)
                for (int j = t + 1; j < m; ++j)
                    if (d[i][j] % d[t][t] != 0) {
                        bad = i;
                        break;
                    }
            if (bad < 0) break;
            row_op(t, bad, -1);
        }
        if (d[t][t] < 0) {
            for (int c = 0; c < m; ++c) d[t][c] = -d[t][c];
            for (int c = 0; c < n; ++c) s.u[t][c] = -s.u[t][c];
        }
        s.diag.push_back(d[t][t]);
    }
    return s;
}

std::vector<std::vector<Z>> integer_kernel(const ZMat& a, int cols) {
    Smith s = smith_normal_form(a, cols);
    std::vector<std::vector<Z>> out;
    for (int j = s.rank(); j < cols; ++j) {
        std::vector<Z> col(cols);
        for (int i = 0; i < cols; ++i) col[i] = s.v[i][j];
        out.push_back(col);
    }
    return out;
}

std::vector<int> rref(QMat& m) {
    std::vector<int> piv;
    if (m.empty()) return piv;
    int rows = int(m.size()), cols = int(m[0].size()), r = 0;
    for (int c = 0; c < cols && r < rows; ++c) {
        int p = -1;
        for (int i = r; i < rows; ++i)
            if (m[i][c] != 0) {
                p = i;
                break;
            }
        if (p < 0) continue;
        std::swap(m[r], m[p]);
        Q inv = 1 / m[r][c];
        for (auto& x : m[r]) x *= inv;
        for (int i = 0; i < rows; ++i) {
            if (i == r || m[i][c] == 0) continue;
            Q f = m[i][c];
            for (int j = c; j < cols; ++j) m[i][j] -= f * m[r][j];
        }
        piv.push_back(c);
        ++r;
    }
    return piv;
}

int rank(QMat m) { return int(rref(m).size()); }

std::optional<QVec> solve(const QMat& a, const QVec& b) {
    int cols = a.empty() ? 0 : int(a[0].size());
    QMat aug = a;
    for (std::size_t i = 0; i < aug.size(); ++i) aug[i].push_back(b[i]);
    std::vector<int> piv = rref(aug);
    QVec x(cols);
    for (std::size_t r = 0; r < piv.size(); ++r) {
        if (piv[r] == cols) return std::nullopt;
        x[piv[r]] = aug[r][cols];
    }
    return x;
}

std::vector<QVec> kernel(const QMat& a, int cols) {
    QMat m = a;
    std::vector<int> piv = rref(m);
    std::vector<bool> is_piv(cols, false);
    for (int p : piv) is_piv[p] = true;
    std::vector<QVec> out;
    for (int f = 0; f < cols; ++f) {
        if (is_piv[f]) continue;
        QVec v(cols);
        v[f] = 1;
        for (std::size_t r = 0; r < piv.size(); ++r) v[piv[r]] = -m[r][f];
        out.push_back(v);
    }
    return out;
}

namespace {

// Tableau in the form  B^-1 A x = B^-1 b, with basis[i] the basic column of row i.
struct Tableau {
    QMat t;  // rows x (cols + 1), last column rhs
    std::vector<int> basis;
    int cols = 0;
    int pivots = 0;

    void pivot(int r, int c) {
        ++pivots;
        Q inv = 1 / t[r][c];
        for (auto& x : t[r]) x *= inv;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (int(i) == r || t[i][c] == 0) continue;
            Q f = t[i][c];
            for (int j = 0; j <= cols; ++j)
                if (t[r][j] != 0) t[i][j] -= f * t[r][j];
        }
        basis[r] = c;
    }

    // Maximizes obj.x over the allowed columns. Returns false if unbounded.
    bool optimize(const QVec& obj, const std::vector<bool>& allowed, int max_pivots) {
        for (;;) {
            if (pivots > max_pivots) throw InvariantError("simplex pivot budget exhausted");
            // reduced costs
            int enter = -1;
            for (int j = 0; j < cols && enter < 0; ++j) {
                if (!allowed[j]) continue;
                Q rc = obj[j];
                for (std::size_t i = 0; i < t.size(); ++i)
                    if (t[i][j] != 0) rc -= obj[basis[i]] * t[i][j];
                if (rc > 0) enter = j;
            }
            if (enter < 0) return true;
            int leave = -1;
            Q best;
            for (std::size_t i = 0; i < t.size(); ++i) {
                if (t[i][enter] <= 0) continue;
                Q ratio = t[i][cols] / t[i][enter];
                if (leave < 0 || ratio < best || (ratio == best && basis[i] < basis[leave])) {
                    leave = int(i);
                    best = ratio;
                }
            }
            if (leave < 0) return false;
            pivot(leave, enter);
        }
    }
};

}  // namespace

LPResult solve_lp(const LP& lp, int max_pivots) {
    // Standard form: free x = p - q, slacks, artificials.
    std::vector<int> pos(lp.n), neg(lp.n, -1);
    int cols = 0;
    for (int j = 0; j < lp.n; ++j) {
        pos[j] = cols++;
        if (lp.free[j]) neg[j] = cols++;
    }
    int m = int(lp.rows.size());
    std::vector<int> slack(m, -1);
    for (int i = 0; i < m; ++i)
        if (lp.rel[i] != LP::Eq) slack[i] = cols++;
    int first_art = cols;
    cols += m;

    Tableau tb;
    tb.cols = cols;
    tb.t.assign(m, QVec(cols + 1));
    tb.basis.assign(m, -1);
    for (int i = 0; i < m; ++i) {
        Q sign = lp.rhs[i] < 0 ? -1 : 1;
        for (int j = 0; j < lp.n; ++j) {
            tb.t[i][pos[j]] = sign * lp.rows[i][j];
            if (neg[j] >= 0) tb.t[i][neg[j]] = -sign * lp.rows[i][j];
        }
        if (slack[i] >= 0) tb.t[i][slack[i]] = sign * (lp.rel[i] == LP::Le ? 1 : -1);
        tb.t[i][first_art + i] = 1;
        tb.t[i][cols] = sign * lp.rhs[i];
        tb.basis[i] = first_art + i;
    }

    // phase 1: minimize the artificials
    QVec obj1(cols);
    for (int i = 0; i < m; ++i) obj1[first_art + i] = -1;
    std::vector<bool> all(cols, true);
    tb.optimize(obj1, all, max_pivots);
    LPResult res;
    for (int i = 0; i < m; ++i)
        if (tb.basis[i] >= first_art && tb.t[i][cols] != 0) {
            res.status = LPResult::Infeasible;
            res.pivots = tb.pivots;
            return res;
        }
    // drive remaining artificials out of the basis where possible
    for (int i = 0; i < m; ++i) {
        if (tb.basis[i] < first_art) continue;
        for (int j = 0; j < first_art; ++j)
            if (tb.t[i][j] != 0) {
                tb.pivot(i, j);
                break;
            }
    }

    // phase 2
    QVec obj(cols);
    for (int j = 0; j < lp.n; ++j) {
        obj[pos[j]] = lp.c[j];
        if (neg[j] >= 0) obj[neg[j]] = -lp.c[j];
    }
    std::vector<bool> allowed(cols, true);
    for (int j = first_art; j < cols; ++j) allowed[j] = false;
    bool bounded = tb.optimize(obj, allowed, max_pivots);
    res.pivots = tb.pivots;
    if (!bounded) {
        res.status = LPResult::Unbounded;
        return res;
    }
    QVec val(cols);
    for (int i = 0; i < m; ++i) val[tb.basis[i]] = tb.t[i][cols];
    res.status = LPResult::Optimal;
    res.x.assign(lp.n, 0);
    for (int j = 0; j < lp.n; ++j) res.x[j] = val[pos[j]] - (neg[j] >= 0 ? val[neg[j]] : Q(0));
    res.value = 0;
    for (int j = 0; j < lp.n; ++j) res.value += lp.c[j] * res.x[j];
    return res;
}

std::string qvec_str(const QVec& v) {
    std::string s = "(";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + v[i].get_str();
    return s + ")";
}

}  // namespace fbc
