#pragma once

#include <cmath>
#include <stdexcept>

#include "rotlearn/mat.hpp"
#include "rotlearn/rng.hpp"

namespace rotlearn {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_from_rad(double r) { return r * (180.0 / kPi); }
inline double rad_from_deg(double d) { return d * (kPi / 180.0); }

/// Unit axis plus angle in [0, pi].
struct AxisAngle {
    Vec3 axis;
    double angle = 0.0;
};

/// Intrinsic Z-Y-X: R = Rz(yaw) * Ry(pitch) * Rx(roll).
struct EulerAngles {
    double yaw = 0.0;
    double pitch = 0.0;
    double roll = 0.0;
};

struct EulerResult {
    EulerAngles angles;
    bool gimbal_lock = false;
};

/// Scalar-first. Hemisphere convention: conversions return w >= 0.
struct Quaternion {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;
};

/// First two columns of a rotation matrix; the third is implied.
struct SixD {
    Vec3 t1, t2;
};

inline bool is_rotation(const Mat3& r, double tolerance = 1e-6) {
    return frobenius_norm(transpose(r) * r - Mat3::identity()) < tolerance && det(r) > 0.0;
}

// ---------------------------------------------------------------------------
// axis-angle

inline Mat3 axis_angle_to_matrix(const AxisAngle& aa) {
    const double n = norm(aa.axis);
    if (std::abs(n - 1.0) > 1e-9)
        throw std::invalid_argument("axis_angle_to_matrix: axis must be unit length");
    const Mat3 k = hat(aa.axis);
    return Mat3::identity() + std::sin(aa.angle) * k + (1.0 - std::cos(aa.angle)) * (k * k);
}

// ---------------------------------------------------------------------------
// quaternion

inline Quaternion normalized(const Quaternion& q) {
    const double n = std::sqrt(q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z);
    if (n < 1e-12) throw std::invalid_argument("quaternion norm too small to normalize");
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

/// Accepts non-unit input; normalizes internally.
inline Mat3 quat_to_matrix(const Quaternion& q_in) {
    const Quaternion q = normalized(q_in);
    const double w = q.w, x = q.x, y = q.y, z = q.z;
    Mat3 r;
    r(0, 0) = 1.0 - 2.0 * (y * y + z * z);
    r(0, 1) = 2.0 * (x * y - w * z);
    r(0, 2) = 2.0 * (x * z + w * y);
    r(1, 0) = 2.0 * (x * y + w * z);
    r(1, 1) = 1.0 - 2.0 * (x * x + z * z);
    r(1, 2) = 2.0 * (y * z - w * x);
    r(2, 0) = 2.0 * (x * z - w * y);
    r(2, 1) = 2.0 * (y * z + w * x);
    r(2, 2) = 1.0 - 2.0 * (x * x + y * y);
    return r;
}

/// Shepperd's method, branch on the largest of trace and diagonal entries.
inline Quaternion matrix_to_quat(const Mat3& r) {
    if (!is_rotation(r)) throw std::invalid_argument("matrix_to_quat: input is not a rotation");
    Quaternion q;
    const double tr = trace(r);
    if (tr > 0.0) {
        double s = std::sqrt(tr + 1.0) * 2.0;
        q.w = 0.25 * s;
        q.x = (r(2, 1) - r(1, 2)) / s;
        q.y = (r(0, 2) - r(2, 0)) / s;
        q.z = (r(1, 0) - r(0, 1)) / s;
    } else if (r(0, 0) > r(1, 1) && r(0, 0) > r(2, 2)) {
        double s = std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2)) * 2.0;
        q.w = (r(2, 1) - r(1, 2)) / s;
        q.x = 0.25 * s;
        q.y = (r(0, 1) + r(1, 0)) / s;
        q.z = (r(0, 2) + r(2, 0)) / s;
    } else if (r(1, 1) > r(2, 2)) {
        double s = std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2)) * 2.0;
        q.w = (r(0, 2) - r(2, 0)) / s;
        q.x = (r(0, 1) + r(1, 0)) / s;
        q.y = 0.25 * s;
        q.z = (r(1, 2) + r(2, 1)) / s;
    } else {
        double s = std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1)) * 2.0;
        q.w = (r(1, 0) - r(0, 1)) / s;
        q.x = (r(0, 2) + r(2, 0)) / s;
        q.y = (r(1, 2) + r(2, 1)) / s;
        q.z = 0.25 * s;
    }
    q = normalized(q);
    // Canonical hemisphere. Ties (w == 0) resolved on the first nonzero part.
    bool flip = q.w < 0.0;
    if (q.w == 0.0) {
        if (q.x != 0.0)
            flip = q.x < 0.0;
        else if (q.y != 0.0)
            flip = q.y < 0.0;
        else
            flip = q.z < 0.0;
    }
    if (flip) q = {-q.w, -q.x, -q.y, -q.z};
    return q;
}

/// Stable at all angles via the quaternion route. angle in [0, pi]; identity
/// maps to axis (1,0,0), angle 0. At exactly pi the axis sign is fixed by
/// requiring axis . (1,1,1) >= 0.
inline AxisAngle matrix_to_axis_angle(const Mat3& r) {
    const Quaternion q = matrix_to_quat(r);
    const double vn = std::sqrt(q.x * q.x + q.y * q.y + q.z * q.z);
    AxisAngle aa;
    if (vn < 1e-12) {
        aa.axis = vec3(1.0, 0.0, 0.0);
        aa.angle = 0.0;
        return aa;
    }
    aa.axis = vec3(q.x / vn, q.y / vn, q.z / vn);
    aa.angle = 2.0 * std::atan2(vn, q.w);
    if (q.w == 0.0) {
        const double s = aa.axis.a[0] + aa.axis.a[1] + aa.axis.a[2];
        if (s < 0.0) aa.axis *= -1.0;
    }
    return aa;
}

// ---------------------------------------------------------------------------
// Euler, intrinsic Z-Y-X

inline Mat3 rot_z(double a) {
    Mat3 m = Mat3::identity();
    m(0, 0) = std::cos(a);
    m(0, 1) = -std::sin(a);
    m(1, 0) = std::sin(a);
    m(1, 1) = std::cos(a);
    return m;
}

inline Mat3 rot_y(double a) {
    Mat3 m = Mat3::identity();
    m(0, 0) = std::cos(a);
    m(0, 2) = std::sin(a);
    m(2, 0) = -std::sin(a);
    m(2, 2) = std::cos(a);
    return m;
}

inline Mat3 rot_x(double a) {
    Mat3 m = Mat3::identity();
    m(1, 1) = std::cos(a);
    m(1, 2) = -std::sin(a);
    m(2, 1) = std::sin(a);
    m(2, 2) = std::cos(a);
    return m;
}

inline Mat3 euler_to_matrix(const EulerAngles& e) {
    return rot_z(e.yaw) * rot_y(e.pitch) * rot_x(e.roll);
}

/// pitch is read from -R(2,0). Within 1e-10 of the poles the result is flagged:
/// pitch snaps to +-pi/2, roll is set to 0 and yaw absorbs the free angle.
inline EulerResult matrix_to_euler(const Mat3& r) {
    if (!is_rotation(r)) throw std::invalid_argument("matrix_to_euler: input is not a rotation");
    EulerResult out;
    const double sp = -r(2, 0);
    if (std::abs(sp) >= 1.0 - 1e-10) {
        out.gimbal_lock = true;
        out.angles.pitch = (sp > 0.0) ? kPi / 2.0 : -kPi / 2.0;
        out.angles.roll = 0.0;
        out.angles.yaw = std::atan2(-r(0, 1), r(1, 1));
        return out;
    }
    out.angles.pitch = std::asin(std::clamp(sp, -1.0, 1.0));
    out.angles.yaw = std::atan2(r(1, 0), r(0, 0));
    out.angles.roll = std::atan2(r(2, 1), r(2, 2));
    return out;
}

// ---------------------------------------------------------------------------
// 6D

inline SixD six_d_from_matrix(const Mat3& r) { return {col(r, 0), col(r, 1)}; }

// ---------------------------------------------------------------------------
// metric and sampling

/// Geodesic distance on SO(3) in radians, in [0, pi].
inline double geodesic_angle(const Mat3& ra, const Mat3& rb) {
    if (!is_rotation(ra) || !is_rotation(rb))
        throw std::invalid_argument("geodesic_angle: inputs must be rotations");
    const double c = std::clamp((trace(transpose(ra) * rb) - 1.0) * 0.5, -1.0, 1.0);
    return std::acos(c);
}

inline double geodesic_deg(const Mat3& ra, const Mat3& rb) {
    return deg_from_rad(geodesic_angle(ra, rb));
}

/// Random rotation: Gaussian direction for the axis, angle uniform on [0, pi].
/// Deliberately NOT Haar-uniform; the angle density is flat where Haar has
/// weight (1-cos a)/pi, so small angles are over-represented. Mean geodesic
/// distance from identity is pi/2.
inline Mat3 sample_rotation(Rng& rng) {
    Vec3 axis;
    double n = 0.0;
    do {
        axis = vec3(rng.normal(), rng.normal(), rng.normal());
        n = norm(axis);
    } while (n < 1e-6);
    axis *= 1.0 / n;
    const double angle = rng.uniform(0.0, kPi);
    return axis_angle_to_matrix({axis, angle});
}

/// Adds iid N(0, sigma^2) to every entry, drawn in column-major order.
/// The result is generally not orthogonal.
inline Mat3 perturb_rotation(Rng& rng, const Mat3& r, double sigma) {
    if (sigma < 0.0) throw std::invalid_argument("perturb_rotation: sigma must be >= 0");
    Mat3 out = r;
    for (int i = 0; i < 9; ++i) out.a[i] += rng.normal(0.0, sigma);
    return out;
}

// ---------------------------------------------------------------------------
// Jacobians of the representation maps, as 9 x dim matrices over the
// column-major flattening. These are what training heads chain through.

/// R(v) for the unpacked 3-vector v = axis * angle (Rodrigues).
inline Mat3 rotation_vector_to_matrix(const Vec3& v) {
    const double t = norm(v);
    const Mat3 k = hat(v);
    double a, b;
    if (t < 1e-4) {
        const double t2 = t * t;
        a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
        b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
    } else {
        a = std::sin(t) / t;
        b = (1.0 - std::cos(t)) / (t * t);
    }
    return Mat3::identity() + a * k + b * (k * k);
}

/// d vec(R) / d v for rotation_vector_to_matrix. Coefficient derivatives are
/// evaluated by series below t = 1e-4 to avoid cancellation.
inline Mat<9, 3> rotation_vector_jacobian(const Vec3& v) {
    const double t = norm(v);
    const Mat3 k = hat(v);
    const Mat3 k2 = k * k;
    double a, b, da_over_t, db_over_t;
    if (t < 1e-4) {
        const double t2 = t * t;
        a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
        b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
        // (da/dt)/t and (db/dt)/t stay finite at t = 0.
        da_over_t = -1.0 / 3.0 + t2 / 30.0;
        db_over_t = -1.0 / 12.0 + t2 / 180.0;
    } else {
        const double st = std::sin(t), ct = std::cos(t), t2 = t * t;
        a = st / t;
        b = (1.0 - ct) / t2;
        da_over_t = (t * ct - st) / (t2 * t);
        db_over_t = (t * st - 2.0 * (1.0 - ct)) / (t2 * t2);
    }
    Mat<9, 3> jac;
    for (int c = 0; c < 3; ++c) {
        Vec3 e;
        e.a[c] = 1.0;
        const Mat3 ek = hat(e);
        const Mat3 d = (da_over_t * v.a[c]) * k + a * ek + (db_over_t * v.a[c]) * k2 +
                       b * (ek * k + k * ek);
        for (int i = 0; i < 9; ++i) jac(i, c) = d.a[i];
    }
    return jac;
}

/// d vec(R) / d (yaw, pitch, roll).
inline Mat<9, 3> euler_jacobian(const EulerAngles& e) {
    const Mat3 rz = rot_z(e.yaw), ry = rot_y(e.pitch), rx = rot_x(e.roll);
    Mat3 drz, dry, drx;
    drz(0, 0) = -std::sin(e.yaw);
    drz(0, 1) = -std::cos(e.yaw);
    drz(1, 0) = std::cos(e.yaw);
    drz(1, 1) = -std::sin(e.yaw);
    dry(0, 0) = -std::sin(e.pitch);
    dry(0, 2) = std::cos(e.pitch);
    dry(2, 0) = -std::cos(e.pitch);
    dry(2, 2) = -std::sin(e.pitch);
    drx(1, 1) = -std::sin(e.roll);
    drx(1, 2) = -std::cos(e.roll);
    drx(2, 1) = std::cos(e.roll);
    drx(2, 2) = -std::sin(e.roll);
    const Mat3 dyaw = drz * ry * rx;
    const Mat3 dpitch = rz * dry * rx;
    const Mat3 droll = rz * ry * drx;
    Mat<9, 3> jac;
    for (int i = 0; i < 9; ++i) {
        jac(i, 0) = dyaw.a[i];
        jac(i, 1) = dpitch.a[i];
        jac(i, 2) = droll.a[i];
    }
    return jac;
}

/// d vec(R) / d q for the raw (not yet unit) quaternion, normalization chained in.
inline Mat<9, 4> quat_jacobian(const Quaternion& q_raw) {
    const double n2 = q_raw.w * q_raw.w + q_raw.x * q_raw.x + q_raw.y * q_raw.y + q_raw.z * q_raw.z;
    const double n = std::sqrt(n2);
    if (n < 1e-12) throw std::invalid_argument("quat_jacobian: quaternion norm too small");
    const Quaternion q = {q_raw.w / n, q_raw.x / n, q_raw.y / n, q_raw.z / n};
    const double w = q.w, x = q.x, y = q.y, z = q.z;

    // d vec(R) / d unit-q, column per component (w, x, y, z).
    Mat<9, 4> dr;
    auto put = [&dr](int colidx, const Mat3& m) {
        for (int i = 0; i < 9; ++i) dr(i, colidx) = m.a[i];
    };
    Mat3 dw, dx, dy, dz;
    dw(0, 1) = -2 * z; dw(0, 2) = 2 * y;
    dw(1, 0) = 2 * z;  dw(1, 2) = -2 * x;
    dw(2, 0) = -2 * y; dw(2, 1) = 2 * x;
    dx(0, 1) = 2 * y;  dx(0, 2) = 2 * z;
    dx(1, 0) = 2 * y;  dx(1, 1) = -4 * x; dx(1, 2) = -2 * w;
    dx(2, 0) = 2 * z;  dx(2, 1) = 2 * w;  dx(2, 2) = -4 * x;
    dy(0, 0) = -4 * y; dy(0, 1) = 2 * x;  dy(0, 2) = 2 * w;
    dy(1, 0) = 2 * x;  dy(1, 2) = 2 * z;
    dy(2, 0) = -2 * w; dy(2, 1) = 2 * z;  dy(2, 2) = -4 * y;
    dz(0, 0) = -4 * z; dz(0, 1) = -2 * w; dz(0, 2) = 2 * x;
    dz(1, 0) = 2 * w;  dz(1, 1) = -4 * z; dz(1, 2) = 2 * y;
    dz(2, 0) = 2 * x;  dz(2, 1) = 2 * y;
    put(0, dw);
    put(1, dx);
    put(2, dy);
    put(3, dz);

    // Normalization: d unit-q / d raw-q = (I - qq^T) / n.
    Mat<4, 4> jn;
    const double qv[4] = {w, x, y, z};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) jn(i, j) = ((i == j ? 1.0 : 0.0) - qv[i] * qv[j]) / n;
    return dr * jn;
}

}  // namespace rotlearn
