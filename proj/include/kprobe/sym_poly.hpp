#pragma once

#include <map>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "kprobe/errors.hpp"

namespace kprobe {

using MultiIndex = std::vector<int>;

// Sparse polynomial in n variables, exponent vector -> coefficient.
// Internal helper for expansions; the public containers are dense.
using PolyMap = std::map<MultiIndex, double>;

inline PolyMap poly_mul(const PolyMap& a, const PolyMap& b) {
    PolyMap out;
    for (const auto& [ea, ca] : a)
        for (const auto& [eb, cb] : b) {
            MultiIndex e(ea.size());
            for (std::size_t k = 0; k < e.size(); ++k) e[k] = ea[k] + eb[k];
            out[e] += ca * cb;
        }
    return out;
}

// The space S^d of homogeneous degree-d polynomials in n variables.
// Basis: plain monomials v^alpha (no multinomial weights), multi-indices in
// descending lexicographic order, e.g. n=2, d=3: v1^3, v1^2 v2, v1 v2^2, v2^3.
class SymPolySpace {
public:
    SymPolySpace() : SymPolySpace(1, 1) {}

    SymPolySpace(int n, int d) : n_(n), d_(d) {
        MultiIndex cur(n, 0);
        gen(cur, 0, d);
        for (int i = 0; i < static_cast<int>(basis_.size()); ++i) lookup_[basis_[i]] = i;
    }

    int n() const { return n_; }
    int d() const { return d_; }
    int size() const { return static_cast<int>(basis_.size()); } // N = C(n+d-1, d)
    const std::vector<MultiIndex>& basis() const { return basis_; }

    int index_of(const MultiIndex& alpha) const {
        auto it = lookup_.find(alpha);
        if (it == lookup_.end()) throw Error(ErrorKind::ConfigError, "multi-index not in basis");
        return it->second;
    }

    // Monomial evaluations (v^alpha per basis element); rows of the linear
    // systems the transport maps solve.
    Eigen::VectorXd veronese(const Eigen::VectorXd& v) const {
        Eigen::VectorXd out(size());
        for (int i = 0; i < size(); ++i) {
            double m = 1.0;
            for (int k = 0; k < n_; ++k)
                for (int e = 0; e < basis_[i][k]; ++e) m *= v[k];
            out[i] = m;
        }
        return out;
    }

    // Dense coefficients of a PolyMap that is homogeneous of degree d.
    Eigen::VectorXd coeffs_of(const PolyMap& p) const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
        for (const auto& [e, c] : p) out[index_of(e)] += c;
        return out;
    }

    bool operator==(const SymPolySpace& o) const { return n_ == o.n_ && d_ == o.d_; }

private:
    void gen(MultiIndex& cur, int pos, int rem) {
        if (pos == n_ - 1) {
            cur[pos] = rem;
            basis_.push_back(cur);
            return;
        }
        for (int e = rem; e >= 0; --e) {
            cur[pos] = e;
            gen(cur, pos + 1, rem - e);
        }
        cur[pos] = 0;
    }

    int n_, d_;
    std::vector<MultiIndex> basis_;
    std::map<MultiIndex, int> lookup_;
};

struct SymPolyElement {
    SymPolySpace space;
    Eigen::VectorXd coeffs;

    double eval(const Eigen::VectorXd& v) const { return coeffs.dot(space.veronese(v)); }
};

// Decisiveness of N direction vectors: the stacked Veronese matrix must be
// invertible with 2-norm condition number within cond_max. Returns the
// condition number alongside so borderline sets stay visible.
inline std::pair<bool, double> is_decisive(const SymPolySpace& space,
                                           const std::vector<Eigen::VectorXd>& vectors,
                                           double cond_max) {
    const int N = space.size();
    if (static_cast<int>(vectors.size()) != N)
        throw Error(ErrorKind::ConfigError, "is_decisive needs exactly N vectors");
    Eigen::MatrixXd M(N, N);
    for (int i = 0; i < N; ++i) M.row(i) = space.veronese(vectors[i]).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(N - 1);
    if (!(smin > 0.0)) return {false, std::numeric_limits<double>::infinity()};
    const double cond = smax / smin;
    return {cond <= cond_max, cond};
}

// Pullback matrix M of a linear map on directions: eval(M p, v) = eval(p, sigma^T v).
// Functorial: induced_map(s1 s2) = induced_map(s1) induced_map(s2).
inline Eigen::MatrixXd induced_map(const SymPolySpace& space, const Eigen::MatrixXd& sigma) {
    const int n = space.n();
    const int N = space.size();
    Eigen::MatrixXd out(N, N);
    // linear forms (sigma^T v)_k = sum_j sigma(j,k) v_j
    std::vector<PolyMap> forms(n);
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < n; ++j) {
            MultiIndex e(n, 0);
            e[j] = 1;
            if (sigma(j, k) != 0.0) forms[k][e] = sigma(j, k);
        }
        if (forms[k].empty()) forms[k][MultiIndex(n, 0)] = 0.0;
    }
    for (int col = 0; col < N; ++col) {
        PolyMap acc;
        acc[MultiIndex(n, 0)] = 1.0;
        const MultiIndex& beta = space.basis()[col];
        for (int k = 0; k < n; ++k)
            for (int e = 0; e < beta[k]; ++e) acc = poly_mul(acc, forms[k]);
        out.col(col) = space.coeffs_of(acc);
    }
    return out;
}

// Coefficients of (1/2 v^T G v)^q in the monomial basis of S^{2q}.
inline SymPolyElement quadratic_form_power(const Eigen::MatrixXd& G, int q) {
    const int n = static_cast<int>(G.rows());
    PolyMap h;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            MultiIndex e(n, 0);
            e[i] += 1;
            e[j] += 1;
            h[e] += 0.5 * G(i, j);
        }
    PolyMap acc;
    acc[MultiIndex(n, 0)] = 1.0;
    for (int k = 0; k < q; ++k) acc = poly_mul(acc, h);
    SymPolySpace space(n, 2 * q);
    return {space, space.coeffs_of(acc)};
}

} // namespace kprobe
