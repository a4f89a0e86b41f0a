#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace rotlearn {

/// Fixed-size dense matrix, column-major storage.
template <int R, int C>
struct Mat {
    static_assert(R > 0 && C > 0);
    std::array<double, static_cast<std::size_t>(R) * C> a{};

    static constexpr int rows = R;
    static constexpr int cols = C;

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(c) * R + r]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(c) * R + r]; }

    double& operator[](int i)
        requires(C == 1)
    {
        return a[static_cast<std::size_t>(i)];
    }
    double operator[](int i) const
        requires(C == 1)
    {
        return a[static_cast<std::size_t>(i)];
    }

    static Mat zero() { return Mat{}; }

    static Mat identity()
        requires(R == C)
    {
        Mat m;
        for (int i = 0; i < R; ++i) m(i, i) = 1.0;
        return m;
    }

    Mat& operator+=(const Mat& o) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += o.a[i];
        return *this;
    }
    Mat& operator-=(const Mat& o) {
        for (std::size_t i = 0; i < a.size(); ++i) a[i] -= o.a[i];
        return *this;
    }
    Mat& operator*=(double s) {
        for (double& v : a) v *= s;
        return *this;
    }

    friend Mat operator+(Mat x, const Mat& y) { return x += y; }
    friend Mat operator-(Mat x, const Mat& y) { return x -= y; }
    friend Mat operator*(Mat x, double s) { return x *= s; }
    friend Mat operator*(double s, Mat x) { return x *= s; }
};

template <int R, int K, int C>
inline Mat<R, C> operator*(const Mat<R, K>& x, const Mat<K, C>& y) {
    Mat<R, C> out;
    for (int c = 0; c < C; ++c)
        for (int k = 0; k < K; ++k) {
            const double yv = y(k, c);
            if (yv == 0.0) continue;
            for (int r = 0; r < R; ++r) out(r, c) += x(r, k) * yv;
        }
    return out;
}

template <int R, int C>
inline Mat<C, R> transpose(const Mat<R, C>& m) {
    Mat<C, R> t;
    for (int c = 0; c < C; ++c)
        for (int r = 0; r < R; ++r) t(c, r) = m(r, c);
    return t;
}

template <int R, int C>
inline double frobenius_norm(const Mat<R, C>& m) {
    double s = 0.0;
    for (double v : m.a) s += v * v;
    return std::sqrt(s);
}

template <int R, int C>
inline double max_abs(const Mat<R, C>& m) {
    double s = 0.0;
    for (double v : m.a) s = std::max(s, std::abs(v));
    return s;
}

using Vec3 = Mat<3, 1>;
using Mat3 = Mat<3, 3>;
using Vec9 = Mat<9, 1>;
using Jacobian9 = Mat<9, 9>;
using Jacobian9x6 = Mat<9, 6>;

inline Vec3 vec3(double x, double y, double z) {
    Vec3 v;
    v.a = {x, y, z};
    return v;
}

inline double dot(const Vec3& x, const Vec3& y) {
    return x.a[0] * y.a[0] + x.a[1] * y.a[1] + x.a[2] * y.a[2];
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline Vec3 cross(const Vec3& x, const Vec3& y) {
    return vec3(x.a[1] * y.a[2] - x.a[2] * y.a[1],
                x.a[2] * y.a[0] - x.a[0] * y.a[2],
                x.a[0] * y.a[1] - x.a[1] * y.a[0]);
}

/// Skew-symmetric cross-product matrix: hat(v) * w == cross(v, w).
inline Mat3 hat(const Vec3& v) {
    Mat3 m;
    m(0, 1) = -v.a[2];
    m(0, 2) = v.a[1];
    m(1, 0) = v.a[2];
    m(1, 2) = -v.a[0];
    m(2, 0) = -v.a[1];
    m(2, 1) = v.a[0];
    return m;
}

/// v v^T
inline Mat3 outer(const Vec3& x, const Vec3& y) {
    Mat3 m;
    for (int c = 0; c < 3; ++c)
        for (int r = 0; r < 3; ++r) m(r, c) = x.a[r] * y.a[c];
    return m;
}

inline Vec3 col(const Mat3& m, int c) { return vec3(m(0, c), m(1, c), m(2, c)); }

inline void set_col(Mat3& m, int c, const Vec3& v) {
    m(0, c) = v.a[0];
    m(1, c) = v.a[1];
    m(2, c) = v.a[2];
}

inline double det(const Mat3& m) {
    return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
           m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
           m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
}

inline double trace(const Mat3& m) { return m(0, 0) + m(1, 1) + m(2, 2); }

/// Column-major flattening; index of entry (r, c) in the 9-vector is 3*c + r.
inline Vec9 flatten(const Mat3& m) {
    Vec9 v;
    for (int i = 0; i < 9; ++i) v.a[i] = m.a[i];
    return v;
}

inline Mat3 unflatten(const Vec9& v) {
    Mat3 m;
    for (int i = 0; i < 9; ++i) m.a[i] = v.a[i];
    return m;
}

/// Dense runtime-sized matrix, column-major. Used where shapes depend on config
/// (FK Jacobians, network layers assembled per task).
struct MatX {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    MatX() = default;
    MatX(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {
        if (r < 0 || c < 0) throw std::invalid_argument("MatX: negative shape");
    }

    double& operator()(int r, int c) { return a[static_cast<std::size_t>(c) * rows + r]; }
    double operator()(int r, int c) const { return a[static_cast<std::size_t>(c) * rows + r]; }
};

inline double frobenius_norm(const MatX& m) {
    double s = 0.0;
    for (double v : m.a) s += v * v;
    return std::sqrt(s);
}

}  // namespace rotlearn
