#pragma once

#include <span>
#include <stdexcept>
#include <string>

#include "rotlearn/mat.hpp"
#include "rotlearn/ortho.hpp"
#include "rotlearn/rotations.hpp"

namespace rotlearn {

/// Output parameterizations a network can regress. prom is the raw 9-entry
/// matrix with no constraint.
enum class Head { axis_angle, euler, quat, six_d, prom };

inline int head_dim(Head h) {
    switch (h) {
        case Head::axis_angle: return 3;
        case Head::euler: return 3;
        case Head::quat: return 4;
        case Head::six_d: return 6;
        case Head::prom: return 9;
    }
    throw std::invalid_argument("head_dim: bad head");
}

inline const char* head_name(Head h) {
    switch (h) {
        case Head::axis_angle: return "axis_angle";
        case Head::euler: return "euler";
        case Head::quat: return "quat";
        case Head::six_d: return "six_d";
        case Head::prom: return "prom";
    }
    return "?";
}

inline Head head_from_name(const std::string& s) {
    if (s == "axis_angle") return Head::axis_angle;
    if (s == "euler") return Head::euler;
    if (s == "quat") return Head::quat;
    if (s == "six_d") return Head::six_d;
    if (s == "prom") return Head::prom;
    throw std::invalid_argument("unknown head: " + s);
}

/// Orthogonalization rule applied to the head output inside a loss term.
enum class OrthoRule { identity, gs, svd };

inline const char* ortho_name(OrthoRule g) {
    switch (g) {
        case OrthoRule::identity: return "id";
        case OrthoRule::gs: return "gs";
        case OrthoRule::svd: return "svd";
    }
    return "?";
}

inline OrthoRule ortho_from_name(const std::string& s) {
    if (s == "id" || s == "identity") return OrthoRule::identity;
    if (s == "gs") return OrthoRule::gs;
    if (s == "svd") return OrthoRule::svd;
    throw std::invalid_argument("unknown orthogonalization rule: " + s);
}

/// Head output mapped to a matrix, with d vec(R) / d theta (9 x dim).
struct HeadMap {
    Mat3 r;
    MatX jac;
};

inline HeadMap head_forward(Head h, std::span<const double> theta) {
    if (static_cast<int>(theta.size()) != head_dim(h))
        throw std::invalid_argument("head_forward: theta width mismatch");
    HeadMap out;
    switch (h) {
        case Head::axis_angle: {
            const Vec3 v = vec3(theta[0], theta[1], theta[2]);
            out.r = rotation_vector_to_matrix(v);
            const Mat<9, 3> j = rotation_vector_jacobian(v);
            out.jac = MatX(9, 3);
            for (int c = 0; c < 3; ++c)
                for (int r = 0; r < 9; ++r) out.jac(r, c) = j(r, c);
            return out;
        }
        case Head::euler: {
            const EulerAngles e{theta[0], theta[1], theta[2]};
            out.r = euler_to_matrix(e);
            const Mat<9, 3> j = euler_jacobian(e);
            out.jac = MatX(9, 3);
            for (int c = 0; c < 3; ++c)
                for (int r = 0; r < 9; ++r) out.jac(r, c) = j(r, c);
            return out;
        }
        case Head::quat: {
            const Quaternion q{theta[0], theta[1], theta[2], theta[3]};
            out.r = quat_to_matrix(q);
            const Mat<9, 4> j = quat_jacobian(q);
            out.jac = MatX(9, 4);
            for (int c = 0; c < 4; ++c)
                for (int r = 0; r < 9; ++r) out.jac(r, c) = j(r, c);
            return out;
        }
        case Head::six_d: {
            const SixD t{vec3(theta[0], theta[1], theta[2]), vec3(theta[3], theta[4], theta[5])};
            out.r = six_d_to_matrix(t);
            const Jacobian9x6 j = six_d_jacobian(t);
            out.jac = MatX(9, 6);
            for (int c = 0; c < 6; ++c)
                for (int r = 0; r < 9; ++r) out.jac(r, c) = j(r, c);
            return out;
        }
        case Head::prom: {
            Vec9 v;
            for (int i = 0; i < 9; ++i) v.a[i] = theta[i];
            out.r = unflatten(v);
            out.jac = MatX(9, 9);
            for (int i = 0; i < 9; ++i) out.jac(i, i) = 1.0;
            return out;
        }
    }
    throw std::invalid_argument("head_forward: bad head");
}

/// Rule applied to a head matrix, with its 9x9 Jacobian. flagged marks svd
/// inputs that fell back to finite differences near a K-matrix degeneracy.
struct OrthoApplied {
    Mat3 r;
    Jacobian9 jac;
    bool flagged = false;
};

inline OrthoApplied apply_ortho(OrthoRule g, const Mat3& r0) {
    OrthoApplied out;
    switch (g) {
        case OrthoRule::identity:
            out.r = r0;
            out.jac = prom_jacobian();
            return out;
        case OrthoRule::gs:
            out.r = gram_schmidt(r0);
            out.jac = gram_schmidt_jacobian(r0);
            return out;
        case OrthoRule::svd: {
            out.r = svd_orthogonalize_special(r0);
            const SvdJacobian j = svd_jacobian_auto(r0);
            out.jac = j.jac;
            out.flagged = j.near_degenerate;
            return out;
        }
    }
    throw std::invalid_argument("apply_ortho: bad rule");
}

}  // namespace rotlearn
