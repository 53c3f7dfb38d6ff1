#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fbc/common.hpp"

namespace fbc {

using ZMat = std::vector<std::vector<Z>>;
using QMat = std::vector<std::vector<Q>>;
using QVec = std::vector<Q>;

ZMat zmat(int rows, int cols);
ZMat zmul(const ZMat& a, const ZMat& b);
ZMat ztranspose(const ZMat& a);
QMat to_q(const ZMat& a);

// u * a * v = d, d diagonal with d[i][i] | d[i+1][i+1], u and v unimodular.
struct Smith {
    ZMat u, v, d;
    std::vector<Z> diag;  // nonzero invariant factors
    int rank() const { return int(diag.size()); }
};
Smith smith_normal_form(const ZMat& a, int cols = -1);

// Integral basis of {x : a x = 0}, as columns stacked in a vector of vectors.
std::vector<std::vector<Z>> integer_kernel(const ZMat& a, int cols);

// Reduced row echelon form in place; returns pivot columns.
std::vector<int> rref(QMat& m);
int rank(QMat m);
// Some solution of a x = b (free variables zero), or nothing.
std::optional<QVec> solve(const QMat& a, const QVec& b);
std::vector<QVec> kernel(const QMat& a, int cols);

// Dense two-phase simplex with Bland's rule, exact.
//   maximize c.x  subject to  rows[i].x (<=, =, >=) rhs[i],  x[j] >= 0 unless free[j].
struct LP {
    enum Rel { Le, Eq, Ge };
    int n = 0;
    QVec c;
    QMat rows;
    std::vector<Rel> rel;
    QVec rhs;
    std::vector<bool> free;

    explicit LP(int vars) : n(vars), c(vars), free(vars, false) {}
    void add(QVec row, Rel r, Q b) {
        rows.push_back(std::move(row));
        rel.push_back(r);
        rhs.push_back(std::move(b));
    }
};

struct LPResult {
    enum Status { Optimal, Infeasible, Unbounded } status = Infeasible;
    Q value;
    QVec x;
    int pivots = 0;
    std::string str() const { return status == Optimal ? "optimal" : status == Infeasible ? "infeasible" : "unbounded"; }
};

LPResult solve_lp(const LP& lp, int max_pivots = 200000);

std::string qvec_str(const QVec& v);

}  // namespace fbc
