#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "rotlearn/rng.hpp"

namespace rotlearn {

enum class Activation : std::uint32_t { tanh_act = 0, relu = 1 };

/// Fully connected net, flat parameter vector. Hidden layers apply the
/// activation, the output layer is linear. Per-layer layout: weight matrix
/// (out x in, column-major), then bias.
struct Mlp {
    std::vector<int> widths;  // input, hidden..., output
    Activation act = Activation::tanh_act;
    std::vector<double> w;

    int layer_count() const { return static_cast<int>(widths.size()) - 1; }

    int param_count() const {
        int n = 0;
        for (int l = 0; l + 1 < static_cast<int>(widths.size()); ++l)
            n += widths[l] * widths[l + 1] + widths[l + 1];
        return n;
    }

    /// Glorot-uniform weights, zero biases.
    static Mlp create(std::vector<int> widths, Activation act, std::uint64_t seed) {
        if (widths.size() < 2) throw std::invalid_argument("Mlp: need at least two widths");
        for (int wd : widths)
            if (wd <= 0) throw std::invalid_argument("Mlp: widths must be positive");
        Mlp net;
        net.widths = std::move(widths);
        net.act = act;
        net.w.assign(static_cast<std::size_t>(net.param_count()), 0.0);
        Rng rng(seed);
        std::size_t at = 0;
        for (int l = 0; l + 1 < static_cast<int>(net.widths.size()); ++l) {
            const int fan_in = net.widths[l], fan_out = net.widths[l + 1];
            const double limit = std::sqrt(6.0 / (fan_in + fan_out));
            for (int i = 0; i < fan_in * fan_out; ++i) net.w[at++] = rng.uniform(-limit, limit);
            at += static_cast<std::size_t>(fan_out);  // biases stay zero
        }
        return net;
    }
};

/// Cached per-layer activations from one forward pass. Input is acts[0],
/// output acts[L]. Reused across steps; valid marks a completed forward.
struct Tape {
    std::vector<std::vector<double>> acts;
    bool valid = false;
};

inline std::vector<double> forward(const Mlp& net, std::span<const double> input, Tape& tape) {
    const int layers = net.layer_count();
    if (static_cast<int>(input.size()) != net.widths[0])
        throw std::invalid_argument("forward: input width mismatch");
    tape.acts.resize(static_cast<std::size_t>(layers) + 1);
    tape.acts[0].assign(input.begin(), input.end());
    std::size_t at = 0;
    for (int l = 0; l < layers; ++l) {
        const int in_w = net.widths[l], out_w = net.widths[l + 1];
        const double* wmat = net.w.data() + at;
        const double* bias = wmat + static_cast<std::size_t>(in_w) * out_w;
        const std::vector<double>& a = tape.acts[l];
        std::vector<double>& z = tape.acts[l + 1];
        z.assign(static_cast<std::size_t>(out_w), 0.0);
        for (int i = 0; i < in_w; ++i) {
            const double ai = a[i];
            const double* wcol = wmat + static_cast<std::size_t>(i) * out_w;
            for (int j = 0; j < out_w; ++j) z[j] += wcol[j] * ai;
        }
        const bool last = (l == layers - 1);
        for (int j = 0; j < out_w; ++j) {
            z[j] += bias[j];
            if (!last) {
                if (net.act == Activation::tanh_act)
                    z[j] = std::tanh(z[j]);
                else
                    z[j] = z[j] > 0.0 ? z[j] : 0.0;
            }
        }
        at += static_cast<std::size_t>(in_w) * out_w + out_w;
    }
    tape.valid = true;
    return tape.acts.back();
}

/// Accumulates d loss / d params into grad (same layout as w) given
/// d loss / d output. grad must be sized and is NOT zeroed here; callers zero
/// it between steps. Throws if the tape has no forward recorded.
inline void backward_accumulate(const Mlp& net, const Tape& tape,
                                std::span<const double> upstream, std::vector<double>& grad) {
    if (!tape.valid) throw std::logic_error("backward: no forward pass on the tape");
    const int layers = net.layer_count();
    if (static_cast<int>(upstream.size()) != net.widths.back())
        throw std::invalid_argument("backward: upstream width mismatch");
    if (grad.size() != net.w.size()) throw std::invalid_argument("backward: grad size mismatch");

    std::vector<double> delta(upstream.begin(), upstream.end());
    std::vector<double> prev;
    std::size_t layer_off = net.w.size();
    for (int l = layers - 1; l >= 0; --l) {
        const int in_w = net.widths[l], out_w = net.widths[l + 1];
        layer_off -= static_cast<std::size_t>(in_w) * out_w + out_w;
        const double* wmat = net.w.data() + layer_off;
        double* gmat = grad.data() + layer_off;
        double* gbias = gmat + static_cast<std::size_t>(in_w) * out_w;
        const std::vector<double>& a = tape.acts[l];

        for (int j = 0; j < out_w; ++j) gbias[j] += delta[j];
        for (int i = 0; i < in_w; ++i) {
            const double ai = a[i];
            double* gcol = gmat + static_cast<std::size_t>(i) * out_w;
            for (int j = 0; j < out_w; ++j) gcol[j] += delta[j] * ai;
        }
        if (l > 0) {
            prev.assign(static_cast<std::size_t>(in_w), 0.0);
            for (int i = 0; i < in_w; ++i) {
                const double* wcol = wmat + static_cast<std::size_t>(i) * out_w;
                double s = 0.0;
                for (int j = 0; j < out_w; ++j) s += wcol[j] * delta[j];
                prev[i] = s;
            }
            // Hidden activations were stored post-nonlinearity.
            for (int i = 0; i < in_w; ++i) {
                const double ai = a[i];
                prev[i] *= (net.act == Activation::tanh_act) ? (1.0 - ai * ai)
                                                             : (ai > 0.0 ? 1.0 : 0.0);
            }
            delta.swap(prev);
        }
    }
}

inline std::vector<double> backward(const Mlp& net, const Tape& tape,
                                    std::span<const double> upstream) {
    std::vector<double> grad(net.w.size(), 0.0);
    backward_accumulate(net, tape, upstream, grad);
    return grad;
}

inline bool all_finite(std::span<const double> xs) {
    for (double x : xs)
        if (!std::isfinite(x)) return false;
    return true;
}

enum class OptimKind { sgd, adam };

struct OptimState {
    OptimKind kind = OptimKind::adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long t = 0;
    std::vector<double> m, v;  // adam moments, lazily sized

    static OptimState sgd(double lr) { return {OptimKind::sgd, lr, 0, 0, 0, 0, {}, {}}; }
    static OptimState adam(double lr) { return {OptimKind::adam, lr, 0.9, 0.999, 1e-8, 0, {}, {}}; }
};

/// Applies one update. Returns false (parameters untouched, t not advanced)
/// when the gradient contains NaN or Inf; that is the divergence signal.
inline bool step(OptimState& opt, Mlp& net, std::span<const double> grad) {
    if (grad.size() != net.w.size()) throw std::invalid_argument("step: grad size mismatch");
    if (!all_finite(grad)) return false;
    if (opt.kind == OptimKind::sgd) {
        ++opt.t;
        for (std::size_t i = 0; i < grad.size(); ++i) net.w[i] -= opt.lr * grad[i];
        return true;
    }
    if (opt.m.size() != grad.size()) {
        opt.m.assign(grad.size(), 0.0);
        opt.v.assign(grad.size(), 0.0);
    }
    ++opt.t;
    const double b1t = 1.0 - std::pow(opt.beta1, static_cast<double>(opt.t));
    const double b2t = 1.0 - std::pow(opt.beta2, static_cast<double>(opt.t));
    for (std::size_t i = 0; i < grad.size(); ++i) {
        opt.m[i] = opt.beta1 * opt.m[i] + (1.0 - opt.beta1) * grad[i];
        opt.v[i] = opt.beta2 * opt.v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
        const double mhat = opt.m[i] / b1t;
        const double vhat = opt.v[i] / b2t;
        net.w[i] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
    return true;
}

/// Max relative error between analytic and central-difference gradients of
/// sum((out - target)^2), over a seeded 10 percent parameter subset.
/// Returns 0 for an empty subset.
inline double grad_check(Mlp net, std::span<const double> input,
                         std::span<const double> target, std::uint64_t seed,
                         double step_h = 1e-6) {
    Tape tape;
    std::vector<double> out = forward(net, input, tape);
    if (out.size() != target.size()) throw std::invalid_argument("grad_check: target width");
    std::vector<double> upstream(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) upstream[i] = 2.0 * (out[i] - target[i]);
    const std::vector<double> analytic = backward(net, tape, upstream);

    auto loss_at = [&](void) {
        Tape t2;
        std::vector<double> o = forward(net, input, t2);
        double s = 0.0;
        for (std::size_t i = 0; i < o.size(); ++i) s += (o[i] - target[i]) * (o[i] - target[i]);
        return s;
    };

    Rng rng(seed);
    const std::size_t n = net.w.size();
    const std::size_t want = n / 10;
    double worst = 0.0;
    for (std::size_t k = 0; k < want; ++k) {
        const std::size_t i = static_cast<std::size_t>(rng.raw() % n);
        const double keep = net.w[i];
        net.w[i] = keep + step_h;
        const double hi = loss_at();
        net.w[i] = keep - step_h;
        const double lo = loss_at();
        net.w[i] = keep;
        const double fd = (hi - lo) / (2.0 * step_h);
        const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-8});
        worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// checkpoints: little-endian, layer-width header then raw f64 parameters.
// Layout: u32 width_count | u32 widths[width_count] | u32 activation | f64 w[...]

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw std::runtime_error("checkpoint: truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f64(std::ostream& os, double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

inline double get_f64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    if (!is) throw std::runtime_error("checkpoint: truncated parameters");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
}

}  // namespace detail

inline void checkpoint_save(const Mlp& net, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("checkpoint_save: cannot open " + path);
    detail::put_u32(os, static_cast<std::uint32_t>(net.widths.size()));
    for (int wd : net.widths) detail::put_u32(os, static_cast<std::uint32_t>(wd));
    detail::put_u32(os, static_cast<std::uint32_t>(net.act));
    for (double d : net.w) detail::put_f64(os, d);
    if (!os) throw std::runtime_error("checkpoint_save: write failed for " + path);
}

inline Mlp checkpoint_load(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint_load: cannot open " + path);
    const std::uint32_t nw = detail::get_u32(is);
    if (nw < 2 || nw > 64) throw std::runtime_error("checkpoint_load: bad width count");
    Mlp net;
    net.widths.resize(nw);
    for (std::uint32_t i = 0; i < nw; ++i) {
        net.widths[i] = static_cast<int>(detail::get_u32(is));
        if (net.widths[i] <= 0 || net.widths[i] > (1 << 20))
            throw std::runtime_error("checkpoint_load: bad width");
    }
    const std::uint32_t act = detail::get_u32(is);
    if (act > 1) throw std::runtime_error("checkpoint_load: bad activation tag");
    net.act = static_cast<Activation>(act);
    net.w.resize(static_cast<std::size_t>(net.param_count()));
    for (double& d : net.w) d = detail::get_f64(is);
    char extra;
    if (is.read(&extra, 1)) throw std::runtime_error("checkpoint_load: trailing bytes");
    return net;
}

}  // namespace rotlearn
