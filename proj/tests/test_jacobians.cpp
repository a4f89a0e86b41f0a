#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <rotlearn/ortho.hpp>
#include <rotlearn/rotations.hpp>
#include <rotlearn/sym_eig.hpp>

using namespace rotlearn;

namespace {

// Test-local central-difference oracle over a 9-entry input.
template <typename F>
double fd_rel_error_9x9(const F& fwd, Mat3 p, const Jacobian9& analytic) {
    double diff = 0, ref = 0;
    for (int c = 0; c < 9; ++c) {
        const double keep = p.a[static_cast<std::size_t>(c)];
        const double h = 1e-6 * std::max(1.0, std::abs(keep));
        p.a[static_cast<std::size_t>(c)] = keep + h;
        const Vec9 hi = flatten(fwd(p));
        p.a[static_cast<std::size_t>(c)] = keep - h;
        const Vec9 lo = flatten(fwd(p));
        p.a[static_cast<std::size_t>(c)] = keep;
        for (int r = 0; r < 9; ++r) {
            const double fd = (hi.a[r] - lo.a[r]) / (2 * h);
            const double d = analytic(r, c) - fd;
            diff += d * d;
            ref += fd * fd;
        }
    }
    return std::sqrt(diff) / std::max(std::sqrt(ref), 1.0);
}

template <typename F>
double fd_rel_error_9x6(const F& fwd, SixD t, const Jacobian9x6& analytic) {
    double* x[6] = {&t.t1.a[0], &t.t1.a[1], &t.t1.a[2], &t.t2.a[0], &t.t2.a[1], &t.t2.a[2]};
    double diff = 0, ref = 0;
    for (int c = 0; c < 6; ++c) {
        const double keep = *x[c];
        const double h = 1e-6 * std::max(1.0, std::abs(keep));
        *x[c] = keep + h;
        const Vec9 hi = flatten(fwd(t));
        *x[c] = keep - h;
        const Vec9 lo = flatten(fwd(t));
        *x[c] = keep;
        for (int r = 0; r < 9; ++r) {
            const double fd = (hi.a[r] - lo.a[r]) / (2 * h);
            const double d = analytic(r, c) - fd;
            diff += d * d;
            ref += fd * fd;
        }
    }
    return std::sqrt(diff) / std::max(std::sqrt(ref), 1.0);
}

Mat3 diag3(double a, double b, double c) {
    Mat3 m = Mat3::zero();
    m(0, 0) = a;
    m(1, 1) = b;
    m(2, 2) = c;
    return m;
}

}  // namespace

TEST_CASE("six_d_jacobian agrees with finite differences") {
    Rng rng(501);
    for (int i = 0; i < 300; ++i) {
        SixD t{vec3(rng.normal(), rng.normal(), rng.normal()),
               vec3(rng.normal(), rng.normal(), rng.normal())};
        const Jacobian9x6 j = six_d_jacobian(t);
        REQUIRE(fd_rel_error_9x6([](const SixD& s) { return six_d_to_matrix(s); }, t, j) < 1e-5);
    }
}

TEST_CASE("gram_schmidt_jacobian agrees with finite differences") {
    Rng rng(502);
    for (int i = 0; i < 300; ++i) {
        Mat3 p;
        for (double& v : p.a) v = rng.normal();
        const Jacobian9 j = gram_schmidt_jacobian(p);
        REQUIRE(fd_rel_error_9x9([](const Mat3& m) { return gram_schmidt(m); }, p, j) < 1e-5);
    }
}

TEST_CASE("gram_schmidt_jacobian is rank deficient: at least three null directions") {
    Rng rng(503);
    for (int i = 0; i < 50; ++i) {
        const Mat3 r = sample_rotation(rng);
        const Mat3 p = perturb_rotation(rng, r, 0.5);
        const Jacobian9 j = gram_schmidt_jacobian(p);
        const auto lam = symmetric_eigenvalues_of_product<9, 9>(j);
        const double scale = std::max(1.0, lam[8]);
        REQUIRE(lam[0] < 1e-12 * scale);
        REQUIRE(lam[1] < 1e-12 * scale);
        REQUIRE(lam[2] < 1e-12 * scale);
    }
}

TEST_CASE("svd jacobian agrees with finite differences away from degeneracy") {
    Rng rng(504);
    int done = 0;
    while (done < 300) {
        const Mat3 r = sample_rotation(rng);
        const Mat3 p = perturb_rotation(rng, r, 0.5);
        const SvdFactors f = svd3(p);
        const double s3 = det(p) < 0 ? -f.s[2] : f.s[2];
        const double smin = std::min({f.s[0] + f.s[1], f.s[0] + s3, f.s[1] + s3});
        if (smin < 1e-2 * std::max(1.0, f.s[0])) continue;  // FD cannot resolve
        const SvdJacobian j = svd_orthogonalize_jacobian(p);
        REQUIRE_FALSE(j.near_degenerate);
        REQUIRE(fd_rel_error_9x9([](const Mat3& m) { return svd_orthogonalize_special(m); }, p,
                                 j.jac) < 1e-4);
        ++done;
    }
}

TEST_CASE("svd jacobian has rank three: six null directions") {
    Rng rng(505);
    for (int i = 0; i < 50; ++i) {
        const Mat3 r = sample_rotation(rng);
        const Mat3 p = perturb_rotation(rng, r, 0.5);
        const Jacobian9 j = svd_orthogonalize_jacobian(p).jac;
        const auto lam = symmetric_eigenvalues_of_product<9, 9>(j);
        const double scale = std::max(1.0, lam[8]);
        for (int k = 0; k < 6; ++k) REQUIRE(lam[k] < 1e-10 * scale);
        REQUIRE(lam[6] > 1e-6);
    }
}

TEST_CASE("six_d explosion law: norm times gap approaches two") {
    // t1 = e1, t2 = e1 + gap e2: closed form gives ||J||_F = 2 sqrt(1 + 1/gap^2).
    for (double gap : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6}) {
        const SixD t{vec3(1, 0, 0), vec3(1, gap, 0)};
        const double n = frobenius_norm(six_d_jacobian(t));
        REQUIRE(std::abs(n * gap - 2.0) < 1e-3);
    }
}

TEST_CASE("svd explosion law: norm times gap approaches two") {
    // diag(2, 1+gap, -1): signed pair sum s2 + s3 = gap dominates the norm.
    for (double gap : {1e-3, 1e-4, 1e-5, 1e-6}) {
        const SvdJacobian j = svd_orthogonalize_jacobian(diag3(2, 1 + gap, -1));
        REQUIRE(std::abs(frobenius_norm(j.jac) * gap - 2.0) < 0.01);
    }
}

TEST_CASE("svd near-degeneracy flag fires only near the K-matrix blow-up") {
    REQUIRE_FALSE(svd_orthogonalize_jacobian(diag3(2, 1 + 1e-3, -1)).near_degenerate);
    const SvdJacobian j = svd_orthogonalize_jacobian(diag3(2, 1 + 1e-8, -1));
    REQUIRE(j.near_degenerate);
    REQUIRE(frobenius_norm(j.jac) > 1e6);
}

TEST_CASE("svd auto path substitutes finite differences when flagged") {
    const Mat3 p = diag3(2, 1 + 1e-8, -1);
    const SvdJacobian j = svd_jacobian_auto(p);
    REQUIRE(j.near_degenerate);
    for (double v : j.jac.a) REQUIRE(std::isfinite(v));
    // Away from the flag the auto path is the analytic one, bit for bit.
    const Mat3 q = diag3(2, 1 + 1e-2, -1);
    const SvdJacobian a = svd_orthogonalize_jacobian(q);
    const SvdJacobian b = svd_jacobian_auto(q);
    REQUIRE_FALSE(b.near_degenerate);
    REQUIRE(max_abs(a.jac - b.jac) == 0.0);
}

TEST_CASE("equal singular values with positive determinant stay bounded") {
    // det > 0 input with a repeated singular value: every signed pair sum is
    // far from zero, so no blow-up and no flag. The explosion needs the
    // reflective case.
    const SvdJacobian j = svd_orthogonalize_jacobian(diag3(1 + 1e-9, 1, 2));
    REQUIRE_FALSE(j.near_degenerate);
    REQUIRE(frobenius_norm(j.jac) < 10.0);
}
