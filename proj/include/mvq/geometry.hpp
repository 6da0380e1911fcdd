#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

namespace mvq {

/// 3D point / vector in millimetres.
struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    constexpr double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    constexpr Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    constexpr Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    constexpr Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    constexpr Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
    constexpr bool operator==(const Vec3& o) const { return x == o.x && y == o.y && z == o.z; }
};

inline constexpr Vec3 operator*(double s, const Vec3& v) { return v * s; }

inline constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline constexpr double squared_norm(const Vec3& v) { return dot(v, v); }
inline double distance(const Vec3& a, const Vec3& b) { return norm(a - b); }

/// Unit vector in the direction of v. Throws on (near-)zero input.
inline Vec3 normalized(const Vec3& v) {
    const double n = norm(v);
    if (n < 1e-300) throw std::invalid_argument("normalized: zero-length vector");
    return v / n;
}

/// Rotation of v around unit axis by angle (radians), Rodrigues formula.
inline Vec3 rotate_around(const Vec3& v, const Vec3& axis, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return v * c + cross(axis, v) * s + axis * (dot(axis, v) * (1.0 - c));
}

/// Proper rigid transform x -> R x + t with R given row-major.
struct RigidTransform {
    std::array<std::array<double, 3>, 3> rotation{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    Vec3 translation{};

    Vec3 apply_point(const Vec3& p) const {
        const auto& r = rotation;
        return {r[0][0] * p.x + r[0][1] * p.y + r[0][2] * p.z + translation.x,
                r[1][0] * p.x + r[1][1] * p.y + r[1][2] * p.z + translation.y,
                r[2][0] * p.x + r[2][1] * p.y + r[2][2] * p.z + translation.z};
    }

    Vec3 apply_vector(const Vec3& v) const {
        const auto& r = rotation;
        return {r[0][0] * v.x + r[0][1] * v.y + r[0][2] * v.z,
                r[1][0] * v.x + r[1][1] * v.y + r[1][2] * v.z,
                r[2][0] * v.x + r[2][1] * v.y + r[2][2] * v.z};
    }
};

/// Rigid transform rotating around a unit axis through the origin, then translating.
inline RigidTransform make_rigid_transform(const Vec3& axis, double angle, const Vec3& translation) {
    const Vec3 a = normalized(axis);
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    const double t = 1.0 - c;
    RigidTransform out;
    out.rotation = {{{t * a.x * a.x + c, t * a.x * a.y - s * a.z, t * a.x * a.z + s * a.y},
                     {t * a.x * a.y + s * a.z, t * a.y * a.y + c, t * a.y * a.z - s * a.x},
                     {t * a.x * a.z - s * a.y, t * a.y * a.z + s * a.x, t * a.z * a.z + c}}};
    out.translation = translation;
    return out;
}

inline constexpr double deg_to_rad(double deg) { return deg * 3.14159265358979323846 / 180.0; }
inline constexpr double rad_to_deg(double rad) { return rad * 180.0 / 3.14159265358979323846; }

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Wraps an angle to [0, 2π).
inline double wrap_angle(double theta) {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0) t += kTwoPi;
    return t;
}

/// Absolute cyclic separation of two angles, in [0, π].
inline double angle_separation(double a, double b) {
    double d = std::fabs(wrap_angle(a) - wrap_angle(b));
    return d > kPi ? kTwoPi - d : d;
}

}  // namespace mvq
