#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "hopnet/errors.hpp"

namespace hopnet::geom {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr Vec3() = default;
    constexpr Vec3(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm2() const { return dot(*this); }
    double norm() const { return std::sqrt(norm2()); }
    bool finite() const {
        return std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Scalar-first unit quaternion (w, x, y, z).
struct Quat {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    constexpr Quat() = default;
    constexpr Quat(double w_, double x_, double y_, double z_)
        : w(w_), x(x_), y(y_), z(z_) {}

    static Quat identity() { return {1.0, 0.0, 0.0, 0.0}; }
    static Quat from_axis_angle(const Vec3& axis, double angle);
    /// exp of a rotation vector (angle * unit axis).
    static Quat from_rotation_vector(const Vec3& rv);

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    Quat normalized() const;
    Quat conjugate() const { return {w, -x, -y, -z}; }
    Vec3 vector_part() const { return {x, y, z}; }
    Vec3 rotate(const Vec3& v) const;
    std::array<double, 9> to_matrix() const; // row-major
    double angle() const; // rotation angle in [0, pi]
};

Quat hamilton_product(const Quat& a, const Quat& b);
/// Throws ZeroQuaternion if the norm is below 1e-12.
Quat quat_inverse(const Quat& q);
/// Rotation matrix (row-major, must be proper orthogonal) to quaternion.
Quat quat_from_matrix(const std::array<double, 9>& m);

/// A triangle of a specific object's mesh; node ids index the scene-wide
/// node array and keep the stored winding.
struct TriangleRef {
    int object_id = -1;
    std::array<int, 3> node_ids{-1, -1, -1};
};

struct Aabb {
    Vec3 min, max;

    static Aabb of_points(const Vec3* pts, int n);
    Aabb inflated(double margin) const {
        return {min - Vec3{margin, margin, margin}, max + Vec3{margin, margin, margin}};
    }
    bool overlaps(const Aabb& o) const {
        return min.x <= o.max.x && o.min.x <= max.x && min.y <= o.max.y &&
               o.min.y <= max.y && min.z <= o.max.z && o.min.z <= max.z;
    }
};

/// Result of a rigid least-squares fit; rotation is always proper.
struct RigidFit {
    Vec3 translation;
    Quat rotation;
    double residual = 0.0; // weighted RMS in meters
};

/// Un-normalized face normal (v1-v0)x(v2-v0); its norm is twice the area.
/// Throws DegenerateTriangle when the cross-product norm is below 1e-12.
Vec3 triangle_normal(const std::array<Vec3, 3>& tri);

struct ClosestResult {
    Vec3 p_s, p_r;
    double dist = 0.0;
};

/// Global minimum-distance points between two triangles; deterministic
/// tie-break via a fixed candidate enumeration order.
ClosestResult closest_points(const std::array<Vec3, 3>& tri_s,
                             const std::array<Vec3, 3>& tri_r);

/// Closest point on a triangle to a point (used by tests and the simulator).
Vec3 closest_point_on_triangle(const Vec3& p, const std::array<Vec3, 3>& tri);

/// Closest points between two segments [p1,q1] and [p2,q2].
void closest_segment_segment(const Vec3& p1, const Vec3& q1, const Vec3& p2,
                             const Vec3& q2, Vec3& c1, Vec3& c2);

/// Weighted rigid registration of ref onto target (Kabsch / polar via
/// cyclic Jacobi on the 3x3 symmetric factor, 30-sweep cap).
RigidFit shape_match(const std::vector<Vec3>& ref_points,
                     const std::vector<Vec3>& target_points,
                     const std::vector<double>& weights);

/// All index pairs (i < j) whose margin-inflated boxes intersect, in
/// lexicographic order.
std::vector<std::pair<int, int>> aabb_pairs(const std::vector<Aabb>& boxes,
                                            double margin);

} // namespace hopnet::geom
