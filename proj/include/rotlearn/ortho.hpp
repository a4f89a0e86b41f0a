#pragma once

#include <cmath>
#include <limits>

#include "rotlearn/config.hpp"
#include "rotlearn/errors.hpp"
#include "rotlearn/mat.hpp"
#include "rotlearn/rotations.hpp"
#include "rotlearn/sym_eig.hpp"

namespace rotlearn {

// ---------------------------------------------------------------------------
// forward maps

/// Column-wise Gram-Schmidt. Output column i spans the same subspace as input
/// columns 0..i. Throws DegenerateInput (with the column index) when a
/// projection residual collapses below the threshold.
inline Mat3 gram_schmidt(const Mat3& p) {
    Mat3 q;
    Vec3 cols[3];
    for (int i = 0; i < 3; ++i) {
        Vec3 u = col(p, i);
        for (int j = 0; j < i; ++j) u -= dot(cols[j], col(p, i)) * cols[j];
        const double n = norm(u);
        if (n < tol::degenerate)
            throw DegenerateInput("gram_schmidt: projection residual collapsed at column " +
                                      std::to_string(i),
                                  i);
        cols[i] = (1.0 / n) * u;
        set_col(q, i, cols[i]);
    }
    return q;
}

/// Recovery of a full rotation from the first-two-columns form: normalize t1,
/// orthogonalize-and-normalize t2, complete with the cross product.
inline Mat3 six_d_to_matrix(const SixD& t) {
    const double n1 = norm(t.t1);
    if (n1 < tol::degenerate) throw DegenerateInput("six_d_to_matrix: t1 collapsed", 0);
    const Vec3 r1 = (1.0 / n1) * t.t1;
    Vec3 u = t.t2 - dot(r1, t.t2) * r1;
    const double n2 = norm(u);
    if (n2 < tol::degenerate)
        throw DegenerateInput("six_d_to_matrix: t2 is parallel to t1", 1);
    const Vec3 r2 = (1.0 / n2) * u;
    const Vec3 r3 = cross(r1, r2);
    Mat3 r;
    set_col(r, 0, r1);
    set_col(r, 1, r2);
    set_col(r, 2, r3);
    return r;
}

/// The pseudo-rotation rule: no orthogonalization, the matrix passes through.
inline Mat3 prom_identity(const Mat3& p) { return p; }

struct SvdFactors {
    Mat3 u;
    Vec3 s;  // descending, >= 0
    Mat3 v;
};

/// 3x3 SVD via eigen-decomposition of P^T P; V is right-handed, U recovered
/// as P V S^-1 with cross-product completion for collapsed directions.
/// Throws DegenerateInput when P is (numerically) the zero matrix.
inline SvdFactors svd3(const Mat3& p) {
    Mat3 ptp = transpose(p) * p;
    // Symmetrize exactly; the product can be off by rounding.
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            const double m = 0.5 * (ptp(i, j) + ptp(j, i));
            ptp(i, j) = m;
            ptp(j, i) = m;
        }
    const SymEig<3> eig = symmetric_eigen(ptp);

    SvdFactors f;
    for (int i = 0; i < 3; ++i) {
        const double lam = std::max(eig.values[2 - i], 0.0);
        f.s.a[i] = std::sqrt(lam);
        set_col(f.v, i, col(eig.vectors, 2 - i));
    }
    if (det(f.v) < 0.0) set_col(f.v, 2, -1.0 * col(f.v, 2));

    const double smax = f.s.a[0];
    if (smax < tol::degenerate) throw DegenerateInput("svd3: zero matrix", -1);
    const double cutoff = tol::degenerate * std::max(1.0, smax);

    Vec3 u0, u1, u2;
    u0 = (1.0 / std::max(f.s.a[0], cutoff)) * (p * col(f.v, 0));
    u0 *= 1.0 / norm(u0);
    if (f.s.a[1] > cutoff) {
        u1 = p * col(f.v, 1);
        u1 -= dot(u0, u1) * u0;
        u1 *= 1.0 / norm(u1);
    } else {
        // Any unit vector orthogonal to u0.
        Vec3 e = std::abs(u0.a[0]) < 0.9 ? vec3(1, 0, 0) : vec3(0, 1, 0);
        u1 = cross(u0, e);
        u1 *= 1.0 / norm(u1);
    }
    if (f.s.a[2] > cutoff) {
        u2 = p * col(f.v, 2);
        u2 -= dot(u0, u2) * u0;
        u2 -= dot(u1, u2) * u1;
        u2 *= 1.0 / norm(u2);
    } else {
        u2 = cross(u0, u1);
    }
    set_col(f.u, 0, u0);
    set_col(f.u, 1, u1);
    set_col(f.u, 2, u2);
    return f;
}

/// U V^T. Orthonormal, but the determinant may be -1 for reflective inputs.
inline Mat3 svd_orthogonalize(const Mat3& p) {
    const SvdFactors f = svd3(p);
    return f.u * transpose(f.v);
}

/// Determinant-corrected projection onto proper rotations:
/// U diag(1, 1, det(UV^T)) V^T. This is the nearest rotation in Frobenius
/// norm, and the form used on the learning path and at inference.
inline Mat3 svd_orthogonalize_special(const Mat3& p) {
    const SvdFactors f = svd3(p);
    Mat3 u = f.u;
    if (det(f.u * transpose(f.v)) < 0.0) set_col(u, 2, -1.0 * col(u, 2));
    return u * transpose(f.v);
}

// ---------------------------------------------------------------------------
// Jacobians. All are d vec(output) / d vec(input) over the column-major
// flattening: entry (3*c_out + r_out, 3*c_in + r_in).

/// d (u/|u|) / d u evaluated with q = u/|u| already known: (I - q q^T)/|u|.
inline Mat3 normalize_jacobian(const Vec3& q, double norm_u) {
    return (1.0 / norm_u) * (Mat3::identity() - outer(q, q));
}

/// Jacobian of six_d_to_matrix, 9x6 (outputs r1 r2 r3, inputs t1 t2).
/// The d r2 / d t1 block carries the 1/|r2''| factor that blows up as t2
/// approaches the span of t1.
inline Jacobian9x6 six_d_jacobian(const SixD& t) {
    const double n1 = norm(t.t1);
    if (n1 < tol::degenerate) throw DegenerateInput("six_d_jacobian: t1 collapsed", 0);
    const Vec3 r1 = (1.0 / n1) * t.t1;
    const Vec3 u = t.t2 - dot(r1, t.t2) * r1;
    const double n2 = norm(u);
    if (n2 < tol::degenerate) throw DegenerateInput("six_d_jacobian: t2 parallel to t1", 1);
    const Vec3 r2 = (1.0 / n2) * u;

    const Mat3 dn1 = normalize_jacobian(r1, n1);
    const Mat3 dn2 = normalize_jacobian(r2, n2);
    const Mat3 du_dr1 = -1.0 * (dot(r1, t.t2) * Mat3::identity() + outer(r1, t.t2));

    const Mat3 dr1_dt1 = dn1;
    const Mat3 dr2_dt1 = dn2 * du_dr1 * dr1_dt1;
    const Mat3 dr2_dt2 = dn2 * (Mat3::identity() - outer(r1, r1));
    const Mat3 dr3_dt1 = hat(r1) * dr2_dt1 - hat(r2) * dr1_dt1;
    const Mat3 dr3_dt2 = hat(r1) * dr2_dt2;

    Jacobian9x6 jac;
    auto put = [&jac](int row0, int col0, const Mat3& b) {
        for (int c = 0; c < 3; ++c)
            for (int r = 0; r < 3; ++r) jac(row0 + r, col0 + c) = b(r, c);
    };
    put(0, 0, dr1_dt1);
    put(3, 0, dr2_dt1);
    put(6, 0, dr3_dt1);
    put(3, 3, dr2_dt2);
    put(6, 3, dr3_dt2);
    return jac;
}

/// Jacobian of gram_schmidt, 9x9. Rank is at most 6: outputs are invariant to
/// rescaling each input column.
inline Jacobian9 gram_schmidt_jacobian(const Mat3& p) {
    const Vec3 p1 = col(p, 0), p2 = col(p, 1), p3 = col(p, 2);
    const double n1 = norm(p1);
    if (n1 < tol::degenerate) throw DegenerateInput("gram_schmidt_jacobian: column 0", 0);
    const Vec3 q1 = (1.0 / n1) * p1;
    const Vec3 u2 = p2 - dot(q1, p2) * q1;
    const double n2 = norm(u2);
    if (n2 < tol::degenerate) throw DegenerateInput("gram_schmidt_jacobian: column 1", 1);
    const Vec3 q2 = (1.0 / n2) * u2;
    const Vec3 u3 = p3 - dot(q1, p3) * q1 - dot(q2, p3) * q2;
    const double n3 = norm(u3);
    if (n3 < tol::degenerate) throw DegenerateInput("gram_schmidt_jacobian: column 2", 2);
    const Vec3 q3 = (1.0 / n3) * u3;

    const Mat3 id = Mat3::identity();
    const Mat3 nj1 = normalize_jacobian(q1, n1);
    const Mat3 nj2 = normalize_jacobian(q2, n2);
    const Mat3 nj3 = normalize_jacobian(q3, n3);

    const Mat3 dq1_dp1 = nj1;

    const Mat3 du2_dq1 = -1.0 * (dot(q1, p2) * id + outer(q1, p2));
    const Mat3 dq2_dp1 = nj2 * du2_dq1 * dq1_dp1;
    const Mat3 dq2_dp2 = nj2 * (id - outer(q1, q1));

    const Mat3 du3_dq1 = -1.0 * (dot(q1, p3) * id + outer(q1, p3));
    const Mat3 du3_dq2 = -1.0 * (dot(q2, p3) * id + outer(q2, p3));
    const Mat3 dq3_dp1 = nj3 * (du3_dq1 * dq1_dp1 + du3_dq2 * dq2_dp1);
    const Mat3 dq3_dp2 = nj3 * (du3_dq2 * dq2_dp2);
    const Mat3 dq3_dp3 = nj3 * (id - outer(q1, q1) - outer(q2, q2));

    Jacobian9 jac;
    auto put = [&jac](int row0, int col0, const Mat3& b) {
        for (int c = 0; c < 3; ++c)
            for (int r = 0; r < 3; ++r) jac(row0 + r, col0 + c) = b(r, c);
    };
    put(0, 0, dq1_dp1);
    put(3, 0, dq2_dp1);
    put(6, 0, dq3_dp1);
    put(3, 3, dq2_dp2);
    put(6, 3, dq3_dp2);
    put(6, 6, dq3_dp3);
    return jac;
}

/// d vec(P) / d vec(P) of the pass-through rule: exactly the identity.
inline Jacobian9 prom_jacobian() { return Jacobian9::identity(); }

struct SvdJacobian {
    Jacobian9 jac;
    bool near_degenerate = false;
};

/// Analytic Jacobian of the determinant-corrected projection.
///
/// In the signed convention (U, V in SO(3), s3 carries sign(det P)) the
/// projection is R = U V^T and its differential is R' = U Gamma V^T with
///   Gamma_ij = (A_ij - A_ji) / (s_i + s_j),   A = U^T dP V.
/// The pair sums are the K-matrix denominators: s2 + s3 = sigma2 - sigma3 for
/// reflective inputs, so near-equal singular values there make the entries
/// blow up. Such inputs are flagged near_degenerate (entries may be huge).
inline SvdJacobian svd_orthogonalize_jacobian(const Mat3& p) {
    SvdFactors f = svd3(p);
    Vec3 s = f.s;
    Mat3 u = f.u;
    if (det(f.u) < 0.0) {
        set_col(u, 2, -1.0 * col(u, 2));
        s.a[2] = -s.a[2];
    }

    SvdJacobian out;
    const double scale = std::max(1.0, s.a[0]);
    double den[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double d = s.a[i] + s.a[j];
            if (i != j && std::abs(d) < tol::svd_gap * scale) out.near_degenerate = true;
            // Keep the quotient finite and signed at exact degeneracy.
            if (d >= 0.0)
                d = std::max(d, 1e-300);
            else
                d = std::min(d, -1e-300);
            den[i][j] = d;
        }

    for (int cin = 0; cin < 3; ++cin)
        for (int rin = 0; rin < 3; ++rin) {
            // A = U^T E V for the basis direction E = e_rin e_cin^T.
            double amat[3][3];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) amat[i][j] = u(rin, i) * f.v(cin, j);
            Mat3 gamma;
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j)
                    if (i != j) gamma(i, j) = (amat[i][j] - amat[j][i]) / den[i][j];
            const Mat3 dr = u * gamma * transpose(f.v);
            const int jc = 3 * cin + rin;
            for (int i = 0; i < 9; ++i) out.jac(i, jc) = dr.a[i];
        }
    return out;
}

/// Central finite differences of the projection; fallback for flagged inputs.
inline Jacobian9 svd_jacobian_fd(const Mat3& p, double step = 0.0) {
    if (step <= 0.0) step = tol::fd_step * std::max(1.0, frobenius_norm(p));
    Jacobian9 jac;
    for (int c = 0; c < 9; ++c) {
        Mat3 hi = p, lo = p;
        hi.a[c] += step;
        lo.a[c] -= step;
        const Mat3 rhi = svd_orthogonalize_special(hi);
        const Mat3 rlo = svd_orthogonalize_special(lo);
        for (int r = 0; r < 9; ++r) jac(r, c) = (rhi.a[r] - rlo.a[r]) / (2.0 * step);
    }
    return jac;
}

/// Analytic path unless flagged near_degenerate, then finite differences.
/// The flag is preserved so callers can mark the sample.
inline SvdJacobian svd_jacobian_auto(const Mat3& p) {
    SvdJacobian j = svd_orthogonalize_jacobian(p);
    if (j.near_degenerate) j.jac = svd_jacobian_fd(p);
    return j;
}

// ---------------------------------------------------------------------------
// conditioning

/// psi(M) = 1 / sqrt(lambda_min(M M^T)); infinity when lambda_min is
/// indistinguishable from the nullspace-at-roundoff floor. The cutoff is
/// relative to lambda_max because the floor of forming M M^T scales with it.
template <int N>
inline double psi(const Mat<N, N>& m) {
    const auto vals = symmetric_eigenvalues_of_product(m);
    const double lmin = vals[0];
    const double lmax = vals[N - 1];
    if (lmin < tol::psi_inf * std::max(1.0, lmax))
        return std::numeric_limits<double>::infinity();
    return 1.0 / std::sqrt(lmin);
}

}  // namespace rotlearn
