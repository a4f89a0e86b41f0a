#pragma once

#include <algorithm>
#include <array>
#include <cmath>

#include "rotlearn/config.hpp"
#include "rotlearn/errors.hpp"
#include "rotlearn/mat.hpp"

namespace rotlearn {

namespace detail {

/// Cyclic Jacobi sweeps on a symmetric long double matrix, in place. `a` ends
/// diagonal, `v` accumulates the rotations (columns are eigenvectors).
/// Throws NumericalError when the sweep cap is exceeded.
template <int N>
inline void jacobi_sweeps(long double (&a)[N][N], long double (&v)[N][N]) {
    long double scale = 0.0L;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            v[i][j] = (i == j) ? 1.0L : 0.0L;
            scale = std::max(scale, fabsl(a[i][j]));
        }
    const long double stop =
        static_cast<long double>(tol::jacobi_off) * std::max(scale * scale, 1.0L);
    int sweep = 0;
    for (; sweep < tol::jacobi_max_sweeps; ++sweep) {
        long double off = 0.0L;
        for (int i = 0; i < N; ++i)
            for (int j = i + 1; j < N; ++j) off += a[i][j] * a[i][j];
        if (off <= stop) break;
        for (int p = 0; p < N - 1; ++p) {
            for (int q = p + 1; q < N; ++q) {
                if (fabsl(a[p][q]) == 0.0L) continue;
                const long double theta = (a[q][q] - a[p][p]) / (2.0L * a[p][q]);
                const long double t = (theta >= 0.0L)
                                          ? 1.0L / (theta + sqrtl(1.0L + theta * theta))
                                          : 1.0L / (theta - sqrtl(1.0L + theta * theta));
                const long double c = 1.0L / sqrtl(1.0L + t * t);
                const long double s = t * c;
                for (int k = 0; k < N; ++k) {
                    const long double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (int k = 0; k < N; ++k) {
                    const long double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (int k = 0; k < N; ++k) {
                    const long double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if (sweep >= tol::jacobi_max_sweeps)
        throw NumericalError("jacobi_sweeps: did not converge within the sweep cap");
}

}  // namespace detail

template <int N>
struct SymEig {
    std::array<double, N> values;  // ascending
    Mat<N, N> vectors;             // columns match values
};

/// Eigen-decomposition of a symmetric matrix. Input must be symmetric to 1e-9
/// relative; internals run in long double.
template <int N>
inline SymEig<N> symmetric_eigen(const Mat<N, N>& m) {
    long double a[N][N], v[N][N];
    long double scale = 0.0L;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            a[i][j] = static_cast<long double>(m(i, j));
            scale = std::max(scale, fabsl(a[i][j]));
        }
    for (int i = 0; i < N; ++i)
        for (int j = i + 1; j < N; ++j)
            if (fabsl(a[i][j] - a[j][i]) > 1e-9L * std::max(scale, 1.0L))
                throw std::invalid_argument("symmetric_eigen: matrix is not symmetric");
    detail::jacobi_sweeps<N>(a, v);

    int order[N];
    for (int i = 0; i < N; ++i) order[i] = i;
    std::sort(order, order + N, [&](int x, int y) { return a[x][x] < a[y][y]; });
    SymEig<N> out;
    for (int i = 0; i < N; ++i) {
        out.values[i] = static_cast<double>(a[order[i]][order[i]]);
        for (int k = 0; k < N; ++k) out.vectors(k, i) = static_cast<double>(v[k][order[i]]);
    }
    return out;
}

/// Eigenvalues only, ascending.
template <int N>
inline std::array<double, N> symmetric_eigenvalues(const Mat<N, N>& m) {
    return symmetric_eigen(m).values;
}

/// Eigenvalues of B * B^T, ascending, with the product accumulated in long
/// double. Forming the product in double would bury a rank deficiency under
/// roundoff of order eps * ||B||^2; this keeps the floor far below it.
template <int N, int C>
inline std::array<double, N> symmetric_eigenvalues_of_product(const Mat<N, C>& b) {
    long double a[N][N], v[N][N];
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            long double s = 0.0L;
            for (int k = 0; k < C; ++k)
                s += static_cast<long double>(b(i, k)) * static_cast<long double>(b(j, k));
            a[i][j] = s;
        }
    detail::jacobi_sweeps<N>(a, v);
    std::array<double, N> vals;
    for (int i = 0; i < N; ++i) vals[i] = static_cast<double>(a[i][i]);
    std::sort(vals.begin(), vals.end());
    return vals;
}

}  // namespace rotlearn
