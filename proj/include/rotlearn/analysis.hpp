#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "rotlearn/errors.hpp"
#include "rotlearn/heads.hpp"
#include "rotlearn/mat.hpp"
#include "rotlearn/ortho.hpp"
#include "rotlearn/rng.hpp"
#include "rotlearn/rotations.hpp"
#include "rotlearn/sym_eig.hpp"
#include "rotlearn/tasks.hpp"

namespace rotlearn {

// ---------------------------------------------------------------------------
// gradient scatter: per-element update direction vs per-element error.
// Target R, noisy head output P = R + noise. The loss is the matrix MSE, so
// the upstream gradient per entry is 2/9 times the entry error. x is the
// error of entry (0,0); y is the pulled-back loss gradient for the raw input
// feeding that same entry. With no orthogonalization y = (2/9) x exactly;
// through gs or svd the pullback mixes all entries and can flip sign.

struct ScatterPoint {
    double x = 0;
    double y = 0;
    bool degenerate = false;
};

inline std::vector<ScatterPoint> gradient_scatter(Method m, double sigma, int iters,
                                                  std::uint64_t seed) {
    if (iters < 0) throw std::invalid_argument("gradient_scatter: negative iters");
    std::vector<ScatterPoint> pts(static_cast<std::size_t>(iters));
    for (int i = 0; i < iters; ++i) {
        // Per-iteration substream: results do not depend on work partitioning.
        Rng rng(substream_seed(seed, static_cast<std::uint64_t>(i)));
        const Mat3 r = sample_rotation(rng);
        const Mat3 p = perturb_rotation(rng, r, sigma);
        ScatterPoint pt;
        pt.x = p(0, 0) - r(0, 0);
        switch (m) {
            case Method::prom: {
                pt.y = 2.0 / 9.0 * pt.x;
                break;
            }
            case Method::gs: {
                // 6-column route: inputs are the first two columns of P.
                const SixD t{col(p, 0), col(p, 1)};
                try {
                    const Mat3 rhat = six_d_to_matrix(t);
                    const Jacobian9x6 j = six_d_jacobian(t);
                    const Vec9 pred = flatten(rhat), want = flatten(r);
                    double y = 0;
                    for (int e = 0; e < 9; ++e)
                        y += j(e, 0) * (2.0 / 9.0) * (pred.a[e] - want.a[e]);
                    pt.y = y;
                } catch (const DegenerateInput&) {
                    pt.y = std::numeric_limits<double>::infinity();
                    pt.degenerate = true;
                }
                break;
            }
            case Method::svd: {
                try {
                    const Mat3 rhat = svd_orthogonalize_special(p);
                    const SvdJacobian j = svd_jacobian_auto(p);
                    pt.degenerate = j.near_degenerate;
                    const Vec9 pred = flatten(rhat), want = flatten(r);
                    double y = 0;
                    for (int e = 0; e < 9; ++e)
                        y += j.jac(e, 0) * (2.0 / 9.0) * (pred.a[e] - want.a[e]);
                    pt.y = y;
                } catch (const DegenerateInput&) {
                    pt.y = std::numeric_limits<double>::infinity();
                    pt.degenerate = true;
                }
                break;
            }
        }
        pts[static_cast<std::size_t>(i)] = pt;
    }
    return pts;
}

/// Fraction of samples whose update direction opposes the entry error.
inline double sign_disagreement_rate(const std::vector<ScatterPoint>& pts) {
    if (pts.empty()) return 0.0;
    long bad = 0;
    for (const ScatterPoint& p : pts)
        if (p.x * p.y < 0.0) ++bad;
    return static_cast<double>(bad) / static_cast<double>(pts.size());
}

/// max|y| over the 99th percentile of |y|. Infinite when any y is.
inline double outlier_ratio(const std::vector<ScatterPoint>& pts) {
    if (pts.empty()) return 0.0;
    std::vector<double> ys;
    ys.reserve(pts.size());
    for (const ScatterPoint& p : pts) ys.push_back(std::abs(p.y));
    std::sort(ys.begin(), ys.end());
    const std::size_t n = ys.size();
    const std::size_t p99 =
        std::min(n - 1, static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(n))) - 1);
    const double denom = ys[p99];
    if (denom == 0.0) return ys.back() == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    return ys.back() / denom;
}

/// RMS residual about the best line through the origin.
inline double collinearity_residual(const std::vector<ScatterPoint>& pts) {
    if (pts.empty()) return 0.0;
    double sxy = 0, sxx = 0;
    for (const ScatterPoint& p : pts) {
        sxy += p.x * p.y;
        sxx += p.x * p.x;
    }
    const double a = sxx > 0 ? sxy / sxx : 0.0;
    double ss = 0;
    for (const ScatterPoint& p : pts) {
        const double d = p.y - a * p.x;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(pts.size()));
}

// ---------------------------------------------------------------------------
// eigenvalue verification: lambda_min of B B^T where B is the route's
// Jacobian at a perturbed rotation. The unorthogonalized route has B = I, so
// lambda_min is 1 exactly; both orthogonalization routes are rank-deficient
// and lambda_min sits at the roundoff floor.

struct EigenRow {
    int sample = 0;
    double lambda_min = 0;
    double psi_value = 0;
};

inline std::vector<EigenRow> eigen_verification(Method m, int samples, double sigma,
                                                std::uint64_t seed) {
    if (samples < 0) throw std::invalid_argument("eigen_verification: negative samples");
    std::vector<EigenRow> rows(static_cast<std::size_t>(samples));
    for (int i = 0; i < samples; ++i) {
        Rng rng(substream_seed(seed, static_cast<std::uint64_t>(i)));
        const Mat3 r = sample_rotation(rng);
        const Mat3 p = perturb_rotation(rng, r, sigma);
        Jacobian9 b;
        switch (m) {
            case Method::prom: b = prom_jacobian(); break;
            case Method::gs: b = gram_schmidt_jacobian(p); break;
            case Method::svd: b = svd_jacobian_auto(p).jac; break;
        }
        EigenRow row;
        row.sample = i;
        const auto lam = symmetric_eigenvalues_of_product<9, 9>(b);
        row.lambda_min = std::max(lam[0], 0.0);
        row.psi_value = psi<9>(b);
        rows[static_cast<std::size_t>(i)] = row;
    }
    return rows;
}

// ---------------------------------------------------------------------------
// explosion probe: Jacobian norm against a controlled degeneracy gap.
// gs: second column t2 = t1 + gap * e2, so the rejected component has norm
//     gap and the 1/|r''_2| law shows as norm ~ 1/gap.
// svd: diag(2, 1+gap, -1) keeps det < 0 with signed-spectrum pair sum
//     s2 + s3 = gap, the K-matrix law. The analytic Jacobian is probed on
//     purpose; the flag reports when the training path would fall back.
// prom: identity Jacobian, norm 3 for every gap.

struct ExplosionRow {
    double gap = 0;
    double grad_norm = 0;
    bool flagged = false;
};

inline Mat3 svd_probe_input(double gap) {
    Mat3 p = Mat3::zero();
    p(0, 0) = 2.0;
    p(1, 1) = 1.0 + gap;
    p(2, 2) = -1.0;
    return p;
}

inline std::vector<ExplosionRow> explosion_probe(Method m, std::span<const double> gaps) {
    std::vector<ExplosionRow> rows;
    rows.reserve(gaps.size());
    for (double gap : gaps) {
        if (gap <= 0) throw std::invalid_argument("explosion_probe: gap must be positive");
        ExplosionRow row;
        row.gap = gap;
        switch (m) {
            case Method::gs: {
                const SixD t{vec3(1, 0, 0), vec3(1, gap, 0)};
                row.grad_norm = frobenius_norm(six_d_jacobian(t));
                break;
            }
            case Method::svd: {
                const SvdJacobian j = svd_orthogonalize_jacobian(svd_probe_input(gap));
                row.grad_norm = frobenius_norm(j.jac);
                row.flagged = j.near_degenerate;
                break;
            }
            case Method::prom: {
                row.grad_norm = frobenius_norm(prom_jacobian());
                break;
            }
        }
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// learning-rate sweep on rotation recovery, one run per (method, lr).

struct SweepRow {
    Method method = Method::prom;
    double lr = 0;
    double final_error = 0;  // mean held-out geodesic degrees at the end
    long diverged_at = -1;
};

inline std::vector<SweepRow> lr_sweep(std::span<const Method> methods,
                                      std::span<const double> lrs, const TrainConfig& base) {
    std::vector<SweepRow> rows;
    rows.reserve(methods.size() * lrs.size());
    for (Method m : methods) {
        const MethodSpec spec = method_spec(m);
        for (double lr : lrs) {
            TrainConfig cfg = base;
            cfg.lr = lr;
            const RunRecord rec = train_rotation_recovery(spec.head, spec.loss, cfg);
            SweepRow row;
            row.method = m;
            row.lr = lr;
            row.final_error = rec.final_geodesic_deg;
            row.diverged_at = rec.diverged_at;
            rows.push_back(row);
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// self-validation: every analytic Jacobian against central finite
// differences, plus the MLP backward pass. This is the CI gate the CLI
// exposes as `check`.

struct CheckResult {
    std::string name;
    double worst = 0;    // max relative Frobenius error observed
    double tolerance = 0;
    int samples = 0;
    bool pass = false;
};

namespace detail {

inline double fd_step_for(double scale) { return tol::fd_step * std::max(1.0, scale); }

template <typename F>
inline double rel_fro_error_9xN(const F& fwd, std::span<double> x, const MatX& analytic) {
    const int n = static_cast<int>(x.size());
    MatX fd(9, n);
    for (int c = 0; c < n; ++c) {
        const double keep = x[static_cast<std::size_t>(c)];
        const double h = fd_step_for(std::abs(keep));
        x[static_cast<std::size_t>(c)] = keep + h;
        const Vec9 hi = fwd(x);
        x[static_cast<std::size_t>(c)] = keep - h;
        const Vec9 lo = fwd(x);
        x[static_cast<std::size_t>(c)] = keep;
        for (int r = 0; r < 9; ++r) fd(r, c) = (hi.a[r] - lo.a[r]) / (2 * h);
    }
    double diff = 0, ref = 0;
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < 9; ++r) {
            const double d = analytic(r, c) - fd(r, c);
            diff += d * d;
            ref += fd(r, c) * fd(r, c);
        }
    return std::sqrt(diff) / std::max(std::sqrt(ref), 1.0);
}

}  // namespace detail

inline std::vector<CheckResult> run_checks(int samples, std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("run_checks: need samples >= 1");
    std::vector<CheckResult> out;

    {  // six_d_jacobian vs finite differences at generic 6-vectors
        CheckResult c{"six_d_jacobian_fd", 0, 1e-5, samples, false};
        Rng rng(substream_seed(seed, 101));
        for (int s = 0; s < samples; ++s) {
            double x[6];
            for (double& v : x) v = rng.normal();
            const SixD t{vec3(x[0], x[1], x[2]), vec3(x[3], x[4], x[5])};
            const Jacobian9x6 j = six_d_jacobian(t);
            MatX ja(9, 6);
            for (int cc = 0; cc < 6; ++cc)
                for (int r = 0; r < 9; ++r) ja(r, cc) = j(r, cc);
            auto fwd = [](std::span<double> v) {
                return flatten(six_d_to_matrix(
                    {vec3(v[0], v[1], v[2]), vec3(v[3], v[4], v[5])}));
            };
            c.worst = std::max(c.worst, detail::rel_fro_error_9xN(fwd, x, ja));
        }
        c.pass = c.worst < c.tolerance;
        out.push_back(c);
    }

    {  // gram_schmidt_jacobian vs finite differences at generic matrices
        CheckResult c{"gram_schmidt_jacobian_fd", 0, 1e-5, samples, false};
        Rng rng(substream_seed(seed, 102));
        for (int s = 0; s < samples; ++s) {
            double x[9];
            for (double& v : x) v = rng.normal();
            Vec9 v9;
            for (int i = 0; i < 9; ++i) v9.a[i] = x[i];
            const Jacobian9 j = gram_schmidt_jacobian(unflatten(v9));
            MatX ja(9, 9);
            for (int cc = 0; cc < 9; ++cc)
                for (int r = 0; r < 9; ++r) ja(r, cc) = j(r, cc);
            auto fwd = [](std::span<double> v) {
                Vec9 w;
                for (int i = 0; i < 9; ++i) w.a[i] = v[i];
                return flatten(gram_schmidt(unflatten(w)));
            };
            c.worst = std::max(c.worst, detail::rel_fro_error_9xN(fwd, x, ja));
        }
        c.pass = c.worst < c.tolerance;
        out.push_back(c);
    }

    {  // svd Jacobian (analytic) vs finite differences, non-degenerate subset
        CheckResult c{"svd_jacobian_fd", 0, 1e-4, samples, false};
        Rng rng(substream_seed(seed, 103));
        int done = 0;
        while (done < samples) {
            const Mat3 r = sample_rotation(rng);
            const Mat3 p = perturb_rotation(rng, r, 0.5);
            // FD cannot resolve pair sums below ~1e-2; that region is the
            // flagged/fallback regime, checked separately by construction.
            const SvdFactors f = svd3(p);
            double det_p = det(p);
            double s3 = det_p < 0 ? -f.s.a[2] : f.s.a[2];
            const double smin = std::min({f.s.a[0] + f.s.a[1], f.s.a[0] + s3, f.s.a[1] + s3});
            if (smin < 1e-2 * std::max(1.0, f.s.a[0])) continue;
            const SvdJacobian j = svd_orthogonalize_jacobian(p);
            if (j.near_degenerate) continue;
            double x[9];
            const Vec9 v9 = flatten(p);
            for (int i = 0; i < 9; ++i) x[i] = v9.a[i];
            MatX ja(9, 9);
            for (int cc = 0; cc < 9; ++cc)
                for (int rr = 0; rr < 9; ++rr) ja(rr, cc) = j.jac(rr, cc);
            auto fwd = [](std::span<double> v) {
                Vec9 w;
                for (int i = 0; i < 9; ++i) w.a[i] = v[i];
                return flatten(svd_orthogonalize_special(unflatten(w)));
            };
            c.worst = std::max(c.worst, detail::rel_fro_error_9xN(fwd, x, ja));
            ++done;
        }
        c.pass = c.worst < c.tolerance;
        out.push_back(c);
    }

    {  // fk_jacobian vs finite differences (FK is multilinear, FD is sharp)
        CheckResult c{"fk_jacobian_fd", 0, 1e-6, samples, false};
        Rng rng(substream_seed(seed, 104));
        const KinematicChain chain = default_chain();
        const int k = chain.joints();
        for (int s = 0; s < samples; ++s) {
            ChainPose pose;
            pose.joints.resize(static_cast<std::size_t>(k));
            for (Mat3& jm : pose.joints)
                for (int i = 0; i < 9; ++i) jm.a[static_cast<std::size_t>(i)] = rng.normal();
            const MatX ja = fk_jacobian(chain, pose);
            MatX fd(3 * (k + 1), 9 * k);
            for (int j = 0; j < k; ++j)
                for (int e = 0; e < 9; ++e) {
                    double& entry = pose.joints[static_cast<std::size_t>(j)].a[static_cast<std::size_t>(e)];
                    const double keep = entry;
                    const double h = detail::fd_step_for(std::abs(keep));
                    entry = keep + h;
                    const std::vector<Vec3> hi = forward_kinematics(chain, pose);
                    entry = keep - h;
                    const std::vector<Vec3> lo = forward_kinematics(chain, pose);
                    entry = keep;
                    for (int m = 0; m <= k; ++m)
                        for (int cc = 0; cc < 3; ++cc)
                            fd(3 * m + cc, 9 * j + e) =
                                (hi[static_cast<std::size_t>(m)].a[cc] -
                                 lo[static_cast<std::size_t>(m)].a[cc]) / (2 * h);
                }
            double diff = 0, ref = 0;
            for (std::size_t i = 0; i < ja.a.size(); ++i) {
                const double d = ja.a[i] - fd.a[i];
                diff += d * d;
                ref += fd.a[i] * fd.a[i];
            }
            c.worst = std::max(c.worst, std::sqrt(diff) / std::max(std::sqrt(ref), 1.0));
        }
        c.pass = c.worst < c.tolerance;
        out.push_back(c);
    }

    {  // MLP backward vs finite differences over seeded parameter subsets
        CheckResult c{"mlp_backward_fd", 0, 1e-4, 0, false};
        Rng rng(substream_seed(seed, 105));
        const int nets = std::max(1, samples / 10);
        for (int s = 0; s < nets; ++s) {
            const Activation act = (s % 2 == 0) ? Activation::tanh_act : Activation::relu;
            Mlp net = Mlp::create({9, 16, 9}, act, rng.raw());
            std::vector<double> input(9), target(9);
            for (double& v : input) v = rng.normal();
            for (double& v : target) v = rng.normal();
            c.worst = std::max(c.worst, grad_check(net, input, target, rng.raw()));
            c.samples += net.param_count() / 10;
        }
        c.pass = c.worst < c.tolerance;
        out.push_back(c);
    }

    return out;
}

}  // namespace rotlearn
