#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rotlearn/chain.hpp"
#include "rotlearn/csv.hpp"
#include "rotlearn/errors.hpp"
#include "rotlearn/heads.hpp"
#include "rotlearn/mat.hpp"
#include "rotlearn/net.hpp"
#include "rotlearn/ortho.hpp"
#include "rotlearn/rng.hpp"
#include "rotlearn/rotations.hpp"

namespace rotlearn {

/// Which orthogonalization rule sits inside each loss term. The matrix loss
/// compares g_theta(head output) against the target; the downstream loss runs
/// g_y(head output) through the task map first. identity/identity is the
/// unorthogonalized route.
struct LossConfig {
    OrthoRule ortho_theta = OrthoRule::identity;
    OrthoRule ortho_y = OrthoRule::identity;
    bool use_theta = true;
    bool use_y = false;
};

struct TrainConfig {
    int steps = 2000;
    int batch = 32;
    double lr = 1e-3;
    OptimKind optim = OptimKind::adam;
    std::uint64_t seed = 42;
    int eval_every = 200;
    int eval_samples = 256;
    std::vector<int> hidden = {128, 128};
};

struct StepRow {
    long step = 0;
    double total_loss = 0, loss_theta = 0, loss_y = 0, grad_norm = 0;
    bool has_eval = false;
    double eval_deg = 0;  // mean geodesic degrees on the held-out set
    bool diverged = false;
};

struct EvalStats {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double max = std::numeric_limits<double>::quiet_NaN();
    double stddev = std::numeric_limits<double>::quiet_NaN();
};

struct RunRecord {
    std::vector<StepRow> rows;
    bool diverged = false;
    long diverged_at = -1;             // step index of the first bad update
    std::string metric_name;           // geodesic_deg or position_mse
    EvalStats final_eval;              // stats of metric_name over the eval set
    double final_geodesic_deg = std::numeric_limits<double>::quiet_NaN();
    long flagged_samples = 0;          // svd K-degeneracy fallbacks on the loss path
};

/// Run CSV: one row per training step, eval column empty off-schedule.
inline std::string run_csv(const RunRecord& rec) {
    CsvBuilder csv({"step", "total_loss", "loss_theta", "loss_y", "grad_norm",
                    "eval_geodesic_deg", "diverged"});
    for (const StepRow& r : rec.rows)
        csv.row({fmt(r.step), fmt(r.total_loss), fmt(r.loss_theta), fmt(r.loss_y),
                 fmt(r.grad_norm), r.has_eval ? fmt(r.eval_deg) : std::string(),
                 r.diverged ? "1" : "0"});
    return csv.text();
}

namespace detail {

// Substream tags; keep stable, they pin every published number.
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kInitStream = 2;
constexpr std::uint64_t kEvalStream = 3;
constexpr std::uint64_t kPilotStream = 4;
constexpr std::uint64_t kCloudStream = 5;

inline EvalStats stats_of(const std::vector<double>& xs) {
    EvalStats s;
    if (xs.empty()) return s;
    double sum = 0, mx = -std::numeric_limits<double>::infinity();
    for (double x : xs) {
        sum += x;
        mx = std::max(mx, x);
    }
    s.mean = sum / static_cast<double>(xs.size());
    s.max = mx;
    double var = 0;
    for (double x : xs) var += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(var / static_cast<double>(xs.size()));
    return s;
}

// Step decay: final fifth of training at lr/10, so the run settles and the
// final eval measures the converged model rather than optimizer oscillation.
inline double lr_at(const TrainConfig& cfg, int step) {
    return step >= cfg.steps - cfg.steps / 5 ? cfg.lr * 0.1 : cfg.lr;
}

// grad_theta += head_jac^T * (ortho_jac^T * upstream9) * weight
inline void pull_back(const MatX& head_jac, const Jacobian9& ortho_jac,
                      const double (&up)[9], double weight, std::span<double> grad_theta) {
    double v[9];
    for (int e = 0; e < 9; ++e) {
        double s = 0;
        for (int r = 0; r < 9; ++r) s += ortho_jac(r, e) * up[r];
        v[e] = s;
    }
    for (int d = 0; d < head_jac.cols; ++d) {
        double s = 0;
        for (int e = 0; e < 9; ++e) s += head_jac(e, d) * v[e];
        grad_theta[static_cast<std::size_t>(d)] += weight * s;
    }
}

inline double l2(std::span<const double> xs) {
    double s = 0;
    for (double x : xs) s += x * x;
    return std::sqrt(s);
}

// Inference-time decode shared by every head: head map, then projection to
// the nearest rotation. Degenerate head outputs score as a half-turn rather
// than aborting the whole evaluation.
inline Mat3 decode_or_flip(Head head, std::span<const double> theta, bool& ok) {
    ok = true;
    try {
        const HeadMap hm = head_forward(head, theta);
        const Mat3 r = svd_orthogonalize_special(hm.r);
        // A blown-up net can hand the projection a non-finite matrix; the
        // result is garbage rather than an exception, so validate before
        // letting it reach geodesic_angle.
        if (!is_rotation(r)) {
            ok = false;
            return Mat3::identity();
        }
        return r;
    } catch (const DegenerateInput&) {
        ok = false;
        return Mat3::identity();
    } catch (const NumericalError&) {
        // Entries large enough to overflow the eigen-solver; same verdict.
        ok = false;
        return Mat3::identity();
    }
}

}  // namespace detail

/// Decodes a trained net on one 9-entry input into a rotation. Every head
/// goes through the same nearest-rotation projection at inference.
inline Mat3 infer_rotation(const Mlp& net, Head head, const Mat3& target_input) {
    Tape tape;
    const Vec9 x = flatten(target_input);
    const std::vector<double> y = forward(net, std::span<const double>(x.a.data(), 9), tape);
    bool ok = true;
    const Mat3 r = detail::decode_or_flip(head, y, ok);
    if (!ok) throw DegenerateInput("infer_rotation: head output not decodable", -1);
    return r;
}

// ---------------------------------------------------------------------------
// rotation recovery: input is the flattened target rotation itself; the net
// must reproduce it through the head. Supervision is the matrix loss only.

inline RunRecord train_rotation_recovery(Head head, const LossConfig& loss_cfg,
                                         const TrainConfig& cfg) {
    RunRecord rec;
    rec.metric_name = "geodesic_deg";

    Rng data_rng(substream_seed(cfg.seed, detail::kDataStream));
    Rng eval_rng(substream_seed(cfg.seed, detail::kEvalStream));

    std::vector<Mat3> eval_targets(static_cast<std::size_t>(cfg.eval_samples));
    for (Mat3& t : eval_targets) t = sample_rotation(eval_rng);

    std::vector<int> widths;
    widths.push_back(9);
    for (int h : cfg.hidden) widths.push_back(h);
    widths.push_back(head_dim(head));
    Mlp net = Mlp::create(widths, Activation::tanh_act,
                          substream_seed(cfg.seed, detail::kInitStream));
    OptimState opt = cfg.optim == OptimKind::adam ? OptimState::adam(cfg.lr)
                                                  : OptimState::sgd(cfg.lr);

    auto eval_degs = [&](void) {
        std::vector<double> degs;
        degs.reserve(eval_targets.size());
        Tape tape;
        for (const Mat3& t : eval_targets) {
            const Vec9 x = flatten(t);
            const std::vector<double> y =
                forward(net, std::span<const double>(x.a.data(), 9), tape);
            bool ok = true;
            const Mat3 rhat = detail::decode_or_flip(head, y, ok);
            degs.push_back(ok ? geodesic_deg(rhat, t) : 180.0);
        }
        return degs;
    };

    std::vector<double> grad(net.w.size(), 0.0);
    std::vector<double> grad_theta(static_cast<std::size_t>(head_dim(head)), 0.0);
    Tape tape;

    for (int s = 0; s < cfg.steps; ++s) {
        opt.lr = detail::lr_at(cfg, s);
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss_theta = 0;
        bool bad = false;
        for (int b = 0; b < cfg.batch && !bad; ++b) {
            const Mat3 target = sample_rotation(data_rng);
            const Vec9 x = flatten(target);
            const std::vector<double> y =
                forward(net, std::span<const double>(x.a.data(), 9), tape);
            try {
                const HeadMap hm = head_forward(head, y);
                const OrthoApplied oa = apply_ortho(loss_cfg.ortho_theta, hm.r);
                if (oa.flagged) ++rec.flagged_samples;
                const Vec9 pred = flatten(oa.r), want = flatten(target);
                double up[9];
                double l = 0;
                for (int e = 0; e < 9; ++e) {
                    const double d = pred.a[e] - want.a[e];
                    l += d * d;
                    up[e] = 2.0 * d / 9.0;
                }
                loss_theta += l / 9.0;
                std::fill(grad_theta.begin(), grad_theta.end(), 0.0);
                detail::pull_back(hm.jac, oa.jac, up, 1.0 / cfg.batch, grad_theta);
                backward_accumulate(net, tape, grad_theta, grad);
            } catch (const DegenerateInput&) {
                bad = true;  // non-differentiable point hit: treat as divergence
            }
        }
        loss_theta /= cfg.batch;

        StepRow row;
        row.step = s;
        row.total_loss = row.loss_theta = loss_theta;
        row.grad_norm = detail::l2(grad);
        if (bad || !std::isfinite(loss_theta) || !all_finite(grad)) {
            row.diverged = true;
            if (bad) row.total_loss = row.loss_theta =
                std::numeric_limits<double>::quiet_NaN();
            rec.rows.push_back(row);
            rec.diverged = true;
            rec.diverged_at = s;
            break;
        }
        step(opt, net, grad);
        if ((cfg.eval_every > 0 && s % cfg.eval_every == 0) || s == cfg.steps - 1) {
            const std::vector<double> degs = eval_degs();
            row.has_eval = true;
            row.eval_deg = detail::stats_of(degs).mean;
        }
        rec.rows.push_back(row);
    }

    const std::vector<double> degs = eval_degs();
    rec.final_eval = detail::stats_of(degs);
    rec.final_geodesic_deg = rec.final_eval.mean;
    return rec;
}

// ---------------------------------------------------------------------------
// point cloud alignment: a fixed reference cloud and its rotated copy; the net
// sees both flattened and must output the rotation. Matrix and/or alignment
// losses, each with its own orthogonalization rule.

inline RunRecord train_point_cloud(Head head, const LossConfig& loss_cfg,
                                   const TrainConfig& cfg, int n_points = 16) {
    if (n_points < 3) throw std::invalid_argument("train_point_cloud: need >= 3 points");
    RunRecord rec;
    rec.metric_name = "geodesic_deg";

    Rng cloud_rng(substream_seed(cfg.seed, detail::kCloudStream));
    std::vector<Vec3> cloud(static_cast<std::size_t>(n_points));
    for (Vec3& p : cloud) p = vec3(cloud_rng.normal(), cloud_rng.normal(), cloud_rng.normal());

    Rng data_rng(substream_seed(cfg.seed, detail::kDataStream));
    Rng eval_rng(substream_seed(cfg.seed, detail::kEvalStream));
    std::vector<Mat3> eval_targets(static_cast<std::size_t>(cfg.eval_samples));
    for (Mat3& t : eval_targets) t = sample_rotation(eval_rng);

    const int in_dim = 6 * n_points;
    auto make_input = [&](const Mat3& r) {
        std::vector<double> x(static_cast<std::size_t>(in_dim));
        for (int i = 0; i < n_points; ++i) {
            const Vec3& p = cloud[static_cast<std::size_t>(i)];
            const Vec3 q = r * p;
            x[static_cast<std::size_t>(3 * i) + 0] = p.a[0];
            x[static_cast<std::size_t>(3 * i) + 1] = p.a[1];
            x[static_cast<std::size_t>(3 * i) + 2] = p.a[2];
            x[static_cast<std::size_t>(3 * (n_points + i)) + 0] = q.a[0];
            x[static_cast<std::size_t>(3 * (n_points + i)) + 1] = q.a[1];
            x[static_cast<std::size_t>(3 * (n_points + i)) + 2] = q.a[2];
        }
        return x;
    };

    std::vector<int> widths;
    widths.push_back(in_dim);
    for (int h : cfg.hidden) widths.push_back(h);
    widths.push_back(head_dim(head));
    Mlp net = Mlp::create(widths, Activation::tanh_act,
                          substream_seed(cfg.seed, detail::kInitStream));
    OptimState opt = cfg.optim == OptimKind::adam ? OptimState::adam(cfg.lr)
                                                  : OptimState::sgd(cfg.lr);

    auto eval_degs = [&](void) {
        std::vector<double> degs;
        degs.reserve(eval_targets.size());
        Tape tape;
        for (const Mat3& t : eval_targets) {
            const std::vector<double> x = make_input(t);
            const std::vector<double> y = forward(net, x, tape);
            bool ok = true;
            const Mat3 rhat = detail::decode_or_flip(head, y, ok);
            degs.push_back(ok ? geodesic_deg(rhat, t) : 180.0);
        }
        return degs;
    };

    std::vector<double> grad(net.w.size(), 0.0);
    std::vector<double> grad_theta(static_cast<std::size_t>(head_dim(head)), 0.0);
    Tape tape;

    for (int s = 0; s < cfg.steps; ++s) {
        opt.lr = detail::lr_at(cfg, s);
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss_theta = 0, loss_y = 0;
        bool bad = false;
        for (int b = 0; b < cfg.batch && !bad; ++b) {
            const Mat3 target = sample_rotation(data_rng);
            const std::vector<double> x = make_input(target);
            const std::vector<double> y = forward(net, x, tape);
            try {
                const HeadMap hm = head_forward(head, y);
                std::fill(grad_theta.begin(), grad_theta.end(), 0.0);

                if (loss_cfg.use_theta) {
                    const OrthoApplied oa = apply_ortho(loss_cfg.ortho_theta, hm.r);
                    if (oa.flagged) ++rec.flagged_samples;
                    const Vec9 pred = flatten(oa.r), want = flatten(target);
                    double up[9];
                    double l = 0;
                    for (int e = 0; e < 9; ++e) {
                        const double d = pred.a[e] - want.a[e];
                        l += d * d;
                        up[e] = 2.0 * d / 9.0;
                    }
                    loss_theta += l / 9.0;
                    detail::pull_back(hm.jac, oa.jac, up, 1.0 / cfg.batch, grad_theta);
                }
                if (loss_cfg.use_y) {
                    const OrthoApplied oy = apply_ortho(loss_cfg.ortho_y, hm.r);
                    if (oy.flagged) ++rec.flagged_samples;
                    // L_Y = mean over 3n coordinates of squared position error.
                    Mat3 dldr1 = Mat3::zero();
                    double l = 0;
                    for (const Vec3& p : cloud) {
                        const Vec3 e = oy.r * p - target * p;
                        l += dot(e, e);
                        dldr1 += outer(e, p);
                    }
                    const double scale = 2.0 / (3.0 * n_points);
                    loss_y += l / (3.0 * n_points);
                    double up[9];
                    const Vec9 g9 = flatten(dldr1);
                    for (int e = 0; e < 9; ++e) up[e] = scale * g9.a[e];
                    detail::pull_back(hm.jac, oy.jac, up, 1.0 / cfg.batch, grad_theta);
                }
                backward_accumulate(net, tape, grad_theta, grad);
            } catch (const DegenerateInput&) {
                bad = true;
            }
        }
        loss_theta /= cfg.batch;
        loss_y /= cfg.batch;

        StepRow row;
        row.step = s;
        row.loss_theta = loss_theta;
        row.loss_y = loss_y;
        row.total_loss = loss_theta + loss_y;
        row.grad_norm = detail::l2(grad);
        if (bad || !std::isfinite(row.total_loss) || !all_finite(grad)) {
            row.diverged = true;
            if (bad)
                row.total_loss = row.loss_theta = row.loss_y =
                    std::numeric_limits<double>::quiet_NaN();
            rec.rows.push_back(row);
            rec.diverged = true;
            rec.diverged_at = s;
            break;
        }
        step(opt, net, grad);
        if ((cfg.eval_every > 0 && s % cfg.eval_every == 0) || s == cfg.steps - 1) {
            const std::vector<double> degs = eval_degs();
            row.has_eval = true;
            row.eval_deg = detail::stats_of(degs).mean;
        }
        rec.rows.push_back(row);
    }

    const std::vector<double> degs = eval_degs();
    rec.final_eval = detail::stats_of(degs);
    rec.final_geodesic_deg = rec.final_eval.mean;
    return rec;
}

// ---------------------------------------------------------------------------
// chain pose recovery: input is the flattened FK positions of a ground-truth
// pose, output one head block per joint. Downstream loss runs the predictions
// through FK; this is where orthogonalization rules inside the loss differ
// most visibly.

inline RunRecord train_chain(const KinematicChain& chain, Head head,
                             const LossConfig& loss_cfg, const TrainConfig& cfg) {
    const int k = chain.joints();
    if (k < 1) throw std::invalid_argument("train_chain: empty chain");
    RunRecord rec;
    rec.metric_name = "position_mse";

    const int in_dim = 3 * (k + 1);
    const int dim = head_dim(head);
    const int out_dim = k * dim;

    Rng data_rng(substream_seed(cfg.seed, detail::kDataStream));
    Rng eval_rng(substream_seed(cfg.seed, detail::kEvalStream));
    Rng pilot_rng(substream_seed(cfg.seed, detail::kPilotStream));

    auto sample_pose = [&](Rng& rng) {
        ChainPose pose;
        pose.joints.resize(static_cast<std::size_t>(k));
        for (Mat3& j : pose.joints) j = sample_rotation(rng);
        return pose;
    };
    auto flatten_positions = [&](const std::vector<Vec3>& ps) {
        std::vector<double> x(static_cast<std::size_t>(in_dim));
        for (int i = 0; i <= k; ++i)
            for (int c = 0; c < 3; ++c)
                x[static_cast<std::size_t>(3 * i + c)] = ps[static_cast<std::size_t>(i)].a[c];
        return x;
    };

    // Input standardization from a seeded pilot batch; fixed before training.
    std::vector<double> mu(static_cast<std::size_t>(in_dim), 0.0);
    std::vector<double> sd(static_cast<std::size_t>(in_dim), 0.0);
    {
        const int pilot = 512;
        std::vector<std::vector<double>> xs;
        xs.reserve(pilot);
        for (int i = 0; i < pilot; ++i)
            xs.push_back(flatten_positions(forward_kinematics(chain, sample_pose(pilot_rng))));
        for (const auto& x : xs)
            for (int c = 0; c < in_dim; ++c) mu[static_cast<std::size_t>(c)] += x[static_cast<std::size_t>(c)];
        for (double& m : mu) m /= pilot;
        for (const auto& x : xs)
            for (int c = 0; c < in_dim; ++c) {
                const double d = x[static_cast<std::size_t>(c)] - mu[static_cast<std::size_t>(c)];
                sd[static_cast<std::size_t>(c)] += d * d;
            }
        for (double& s : sd) s = std::max(std::sqrt(s / pilot), 1e-8);
    }
    auto standardize = [&](std::vector<double> x) {
        for (int c = 0; c < in_dim; ++c)
            x[static_cast<std::size_t>(c)] =
                (x[static_cast<std::size_t>(c)] - mu[static_cast<std::size_t>(c)]) /
                sd[static_cast<std::size_t>(c)];
        return x;
    };

    struct EvalCase {
        ChainPose pose;
        std::vector<Vec3> positions;
        std::vector<double> input;
    };
    std::vector<EvalCase> eval_set(static_cast<std::size_t>(cfg.eval_samples));
    for (EvalCase& e : eval_set) {
        e.pose = sample_pose(eval_rng);
        e.positions = forward_kinematics(chain, e.pose);
        e.input = standardize(flatten_positions(e.positions));
    }

    std::vector<int> widths;
    widths.push_back(in_dim);
    for (int h : cfg.hidden) widths.push_back(h);
    widths.push_back(out_dim);
    Mlp net = Mlp::create(widths, Activation::tanh_act,
                          substream_seed(cfg.seed, detail::kInitStream));
    OptimState opt = cfg.optim == OptimKind::adam ? OptimState::adam(cfg.lr)
                                                  : OptimState::sgd(cfg.lr);

    // Returns per-sample position MSE, and mean per-joint geodesic degrees.
    // Inference projection is the same for every loss variant, so the grid
    // compares training rules, never eval rules.
    auto eval_metrics = [&](std::vector<double>& mses, std::vector<double>& degs) {
        mses.clear();
        degs.clear();
        Tape tape;
        for (const EvalCase& e : eval_set) {
            const std::vector<double> y = forward(net, e.input, tape);
            ChainPose pred;
            pred.joints.resize(static_cast<std::size_t>(k));
            double deg_sum = 0;
            for (int j = 0; j < k; ++j) {
                bool ok = true;
                pred.joints[static_cast<std::size_t>(j)] = detail::decode_or_flip(
                    head, std::span<const double>(y.data() + j * dim, static_cast<std::size_t>(dim)), ok);
                deg_sum += ok ? geodesic_deg(pred.joints[static_cast<std::size_t>(j)],
                                             e.pose.joints[static_cast<std::size_t>(j)])
                              : 180.0;
            }
            const std::vector<Vec3> ps = forward_kinematics(chain, pred);
            double mse = 0;
            for (int i = 0; i <= k; ++i) {
                const Vec3 d = ps[static_cast<std::size_t>(i)] - e.positions[static_cast<std::size_t>(i)];
                mse += dot(d, d);
            }
            mses.push_back(mse / (3.0 * (k + 1)));
            degs.push_back(deg_sum / k);
        }
    };

    std::vector<double> grad(net.w.size(), 0.0);
    std::vector<double> grad_out(static_cast<std::size_t>(out_dim), 0.0);
    Tape tape;

    for (int s = 0; s < cfg.steps; ++s) {
        opt.lr = detail::lr_at(cfg, s);
        std::fill(grad.begin(), grad.end(), 0.0);
        double loss_theta = 0, loss_y = 0;
        bool bad = false;
        for (int b = 0; b < cfg.batch && !bad; ++b) {
            const ChainPose gt = sample_pose(data_rng);
            const std::vector<Vec3> gt_pos = forward_kinematics(chain, gt);
            const std::vector<double> x = standardize(flatten_positions(gt_pos));
            const std::vector<double> y = forward(net, x, tape);
            try {
                std::vector<HeadMap> maps(static_cast<std::size_t>(k));
                for (int j = 0; j < k; ++j)
                    maps[static_cast<std::size_t>(j)] = head_forward(
                        head, std::span<const double>(y.data() + j * dim,
                                                      static_cast<std::size_t>(dim)));
                std::fill(grad_out.begin(), grad_out.end(), 0.0);

                if (loss_cfg.use_theta) {
                    double l = 0;
                    for (int j = 0; j < k; ++j) {
                        const OrthoApplied oa =
                            apply_ortho(loss_cfg.ortho_theta, maps[static_cast<std::size_t>(j)].r);
                        if (oa.flagged) ++rec.flagged_samples;
                        const Vec9 pred = flatten(oa.r);
                        const Vec9 want = flatten(gt.joints[static_cast<std::size_t>(j)]);
                        double up[9];
                        for (int e = 0; e < 9; ++e) {
                            const double d = pred.a[e] - want.a[e];
                            l += d * d;
                            up[e] = 2.0 * d / (9.0 * k);
                        }
                        detail::pull_back(maps[static_cast<std::size_t>(j)].jac, oa.jac, up,
                                          1.0 / cfg.batch,
                                          std::span<double>(grad_out.data() + j * dim,
                                                            static_cast<std::size_t>(dim)));
                    }
                    loss_theta += l / (9.0 * k);
                }
                if (loss_cfg.use_y) {
                    ChainPose used;
                    used.joints.resize(static_cast<std::size_t>(k));
                    std::vector<Jacobian9> gy_jac(static_cast<std::size_t>(k));
                    for (int j = 0; j < k; ++j) {
                        const OrthoApplied oy =
                            apply_ortho(loss_cfg.ortho_y, maps[static_cast<std::size_t>(j)].r);
                        if (oy.flagged) ++rec.flagged_samples;
                        used.joints[static_cast<std::size_t>(j)] = oy.r;
                        gy_jac[static_cast<std::size_t>(j)] = oy.jac;
                    }
                    const std::vector<Vec3> ps = forward_kinematics(chain, used);
                    const MatX jfk = fk_jacobian(chain, used);
                    std::vector<double> dldp(static_cast<std::size_t>(in_dim));
                    double l = 0;
                    for (int i = 0; i <= k; ++i)
                        for (int c = 0; c < 3; ++c) {
                            const double d = ps[static_cast<std::size_t>(i)].a[c] -
                                             gt_pos[static_cast<std::size_t>(i)].a[c];
                            l += d * d;
                            dldp[static_cast<std::size_t>(3 * i + c)] = 2.0 * d / (3.0 * (k + 1));
                        }
                    loss_y += l / (3.0 * (k + 1));
                    for (int j = 0; j < k; ++j) {
                        double up[9];
                        for (int e = 0; e < 9; ++e) {
                            double sdot = 0;
                            for (int m = 0; m < in_dim; ++m)
                                sdot += jfk(m, 9 * j + e) * dldp[static_cast<std::size_t>(m)];
                            up[e] = sdot;
                        }
                        detail::pull_back(maps[static_cast<std::size_t>(j)].jac,
                                          gy_jac[static_cast<std::size_t>(j)], up,
                                          1.0 / cfg.batch,
                                          std::span<double>(grad_out.data() + j * dim,
                                                            static_cast<std::size_t>(dim)));
                    }
                }
                backward_accumulate(net, tape, grad_out, grad);
            } catch (const DegenerateInput&) {
                bad = true;
            }
        }
        loss_theta /= cfg.batch;
        loss_y /= cfg.batch;

        StepRow row;
        row.step = s;
        row.loss_theta = loss_theta;
        row.loss_y = loss_y;
        row.total_loss = loss_theta + loss_y;
        row.grad_norm = detail::l2(grad);
        if (bad || !std::isfinite(row.total_loss) || !all_finite(grad)) {
            row.diverged = true;
            if (bad)
                row.total_loss = row.loss_theta = row.loss_y =
                    std::numeric_limits<double>::quiet_NaN();
            rec.rows.push_back(row);
            rec.diverged = true;
            rec.diverged_at = s;
            break;
        }
        step(opt, net, grad);
        if ((cfg.eval_every > 0 && s % cfg.eval_every == 0) || s == cfg.steps - 1) {
            std::vector<double> mses, degs;
            eval_metrics(mses, degs);
            row.has_eval = true;
            row.eval_deg = detail::stats_of(degs).mean;
        }
        rec.rows.push_back(row);
    }

    std::vector<double> mses, degs;
    eval_metrics(mses, degs);
    rec.final_eval = detail::stats_of(mses);
    rec.final_geodesic_deg = detail::stats_of(degs).mean;
    return rec;
}

// ---------------------------------------------------------------------------
// Named training routes used by the comparisons. gs trains the 6-column head;
// svd trains the raw 9-entry head through the projection inside the loss;
// prom trains the raw head with no orthogonalization until inference.

enum class Method { gs, svd, prom };

inline const char* method_name(Method m) {
    switch (m) {
        case Method::gs: return "gs";
        case Method::svd: return "svd";
        case Method::prom: return "prom";
    }
    return "?";
}

inline Method method_from_name(const std::string& s) {
    if (s == "gs") return Method::gs;
    if (s == "svd") return Method::svd;
    if (s == "prom") return Method::prom;
    throw std::invalid_argument("unknown method: " + s);
}

struct MethodSpec {
    Head head;
    LossConfig loss;
};

inline MethodSpec method_spec(Method m, bool with_downstream = false) {
    MethodSpec spec;
    spec.loss.use_theta = true;
    spec.loss.use_y = with_downstream;
    switch (m) {
        case Method::gs:
            spec.head = Head::six_d;
            return spec;
        case Method::svd:
            spec.head = Head::prom;
            spec.loss.ortho_theta = OrthoRule::svd;
            spec.loss.ortho_y = OrthoRule::svd;
            return spec;
        case Method::prom:
            spec.head = Head::prom;
            return spec;
    }
    throw std::invalid_argument("method_spec: bad method");
}

}  // namespace rotlearn
