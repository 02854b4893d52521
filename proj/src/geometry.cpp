#include "hopnet/geometry.hpp"

#include <algorithm>
#include <limits>

namespace hopnet::geom {

namespace {
constexpr double kDegenerateTol = 1e-12;
} // namespace

Quat Quat::from_axis_angle(const Vec3& axis, double angle) {
    const double n = axis.norm();
    if (n < kDegenerateTol) return Quat::identity();
    const double h = 0.5 * angle;
    const double s = std::sin(h) / n;
    return {std::cos(h), axis.x * s, axis.y * s, axis.z * s};
}

Quat Quat::from_rotation_vector(const Vec3& rv) {
    const double angle = rv.norm();
    if (angle < 1e-14) {
        // first-order expansion keeps the map smooth through zero
        return Quat{1.0, 0.5 * rv.x, 0.5 * rv.y, 0.5 * rv.z}.normalized();
    }
    return from_axis_angle(rv, angle);
}

Quat Quat::normalized() const {
    const double n = norm();
    if (n < kDegenerateTol) throw ZeroQuaternion("cannot normalize a zero quaternion");
    return {w / n, x / n, y / n, z / n};
}

Vec3 Quat::rotate(const Vec3& v) const {
    // q v q* expanded
    const Vec3 u{x, y, z};
    const Vec3 t = u.cross(v) * 2.0;
    return v + t * w + u.cross(t);
}

std::array<double, 9> Quat::to_matrix() const {
    const double xx = x * x, yy = y * y, zz = z * z;
    const double xy = x * y, xz = x * z, yz = y * z;
    const double wx = w * x, wy = w * y, wz = w * z;
    return {1 - 2 * (yy + zz), 2 * (xy - wz),     2 * (xz + wy),
            2 * (xy + wz),     1 - 2 * (xx + zz), 2 * (yz - wx),
            2 * (xz - wy),     2 * (yz + wx),     1 - 2 * (xx + yy)};
}

double Quat::angle() const {
    const double v = Vec3{x, y, z}.norm();
    return 2.0 * std::atan2(v, std::abs(w));
}

Quat hamilton_product(const Quat& a, const Quat& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Quat quat_inverse(const Quat& q) {
    const double n2 = q.w * q.w + q.x * q.x + q.y * q.y + q.z * q.z;
    if (std::sqrt(n2) < kDegenerateTol)
        throw ZeroQuaternion("quat_inverse of (near-)zero quaternion");
    return {q.w / n2, -q.x / n2, -q.y / n2, -q.z / n2};
}

Quat quat_from_matrix(const std::array<double, 9>& m) {
    // Shepperd's method: pick the most stable of the four branches.
    const double trace = m[0] + m[4] + m[8];
    Quat q;
    if (trace > 0.0) {
        double s = std::sqrt(trace + 1.0) * 2.0;
        q = {0.25 * s, (m[7] - m[5]) / s, (m[2] - m[6]) / s, (m[3] - m[1]) / s};
    } else if (m[0] > m[4] && m[0] > m[8]) {
        double s = std::sqrt(1.0 + m[0] - m[4] - m[8]) * 2.0;
        q = {(m[7] - m[5]) / s, 0.25 * s, (m[1] + m[3]) / s, (m[2] + m[6]) / s};
    } else if (m[4] > m[8]) {
        double s = std::sqrt(1.0 + m[4] - m[0] - m[8]) * 2.0;
        q = {(m[2] - m[6]) / s, (m[1] + m[3]) / s, 0.25 * s, (m[5] + m[7]) / s};
    } else {
        double s = std::sqrt(1.0 + m[8] - m[0] - m[4]) * 2.0;
        q = {(m[3] - m[1]) / s, (m[2] + m[6]) / s, (m[5] + m[7]) / s, 0.25 * s};
    }
    return q.normalized();
}

Aabb Aabb::of_points(const Vec3* pts, int n) {
    Aabb b{pts[0], pts[0]};
    for (int i = 1; i < n; ++i) {
        b.min.x = std::min(b.min.x, pts[i].x);
        b.min.y = std::min(b.min.y, pts[i].y);
        b.min.z = std::min(b.min.z, pts[i].z);
        b.max.x = std::max(b.max.x, pts[i].x);
        b.max.y = std::max(b.max.y, pts[i].y);
        b.max.z = std::max(b.max.z, pts[i].z);
    }
    return b;
}

Vec3 triangle_normal(const std::array<Vec3, 3>& tri) {
    const Vec3 n = (tri[1] - tri[0]).cross(tri[2] - tri[0]);
    if (n.norm() < kDegenerateTol)
        throw DegenerateTriangle("triangle is (near-)collinear");
    return n;
}

Vec3 closest_point_on_triangle(const Vec3& p, const std::array<Vec3, 3>& tri) {
    // Ericson, Real-Time Collision Detection, 5.1.5
    const Vec3 a = tri[0], b = tri[1], c = tri[2];
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return a;

    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return b;

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
        const double v = d1 / (d1 - d3);
        return a + ab * v;
    }

    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return c;

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
        const double w = d2 / (d2 - d6);
        return a + ac * w;
    }

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    return a + ab * v + ac * w;
}

void closest_segment_segment(const Vec3& p1, const Vec3& q1, const Vec3& p2,
                             const Vec3& q2, Vec3& c1, Vec3& c2) {
    // Ericson 5.1.9, clamped
    const Vec3 d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
    const double a = d1.norm2(), e = d2.norm2(), f = d2.dot(r);
    double s = 0.0, t = 0.0;
    constexpr double eps = 1e-30;

    if (a <= eps && e <= eps) {
        c1 = p1;
        c2 = p2;
        return;
    }
    if (a <= eps) {
        t = std::clamp(f / e, 0.0, 1.0);
    } else {
        const double c = d1.dot(r);
        if (e <= eps) {
            s = std::clamp(-c / a, 0.0, 1.0);
        } else {
            const double b = d1.dot(d2);
            const double denom = a * e - b * b;
            if (denom > eps) s = std::clamp((b * f - c * e) / denom, 0.0, 1.0);
            t = (b * s + f) / e;
            if (t < 0.0) {
                t = 0.0;
                s = std::clamp(-c / a, 0.0, 1.0);
            } else if (t > 1.0) {
                t = 1.0;
                s = std::clamp((b - c) / a, 0.0, 1.0);
            }
        }
    }
    c1 = p1 + d1 * s;
    c2 = p2 + d2 * t;
}

namespace {

// Segment against triangle interior; returns true with the touch point when
// the segment crosses the (open) triangle.
bool segment_hits_triangle(const Vec3& p, const Vec3& q,
                           const std::array<Vec3, 3>& tri, Vec3& hit) {
    const Vec3 ab = tri[1] - tri[0], ac = tri[2] - tri[0], qp = p - q;
    const Vec3 n = ab.cross(ac);
    const double d = qp.dot(n);
    if (std::abs(d) < 1e-30) return false; // parallel
    const Vec3 ap = p - tri[0];
    const double t = ap.dot(n);
    if (d > 0.0 ? (t < 0.0 || t > d) : (t > 0.0 || t < d)) return false;
    const Vec3 e = qp.cross(ap);
    double v = ac.dot(e), w = -ab.dot(e);
    if (d > 0.0 ? (v < 0.0 || w < 0.0 || v + w > d) : (v > 0.0 || w > 0.0 || v + w < d))
        return false;
    hit = p - qp * (t / d);
    return true;
}

} // namespace

ClosestResult closest_points(const std::array<Vec3, 3>& tri_s,
                             const std::array<Vec3, 3>& tri_r) {
    // Validate both triangles up front.
    (void)triangle_normal(tri_s);
    (void)triangle_normal(tri_r);

    ClosestResult best;
    best.dist = std::numeric_limits<double>::infinity();
    auto consider = [&best](const Vec3& a, const Vec3& b) {
        const double d2 = (a - b).norm2();
        if (d2 < best.dist) { // strict: earlier candidates win ties
            best.dist = d2;
            best.p_s = a;
            best.p_r = b;
        }
    };

    // Fixed enumeration order: 9 edge-edge, 3+3 vertex-face, then edge-face
    // crossings (intersection => distance 0).
    for (int i = 0; i < 3; ++i) {
        const Vec3 a0 = tri_s[i], a1 = tri_s[(i + 1) % 3];
        for (int j = 0; j < 3; ++j) {
            Vec3 c1, c2;
            closest_segment_segment(a0, a1, tri_r[j], tri_r[(j + 1) % 3], c1, c2);
            consider(c1, c2);
        }
    }
    for (int i = 0; i < 3; ++i)
        consider(tri_s[i], closest_point_on_triangle(tri_s[i], tri_r));
    for (int i = 0; i < 3; ++i)
        consider(closest_point_on_triangle(tri_r[i], tri_s), tri_r[i]);
    for (int i = 0; i < 3; ++i) {
        Vec3 hit;
        if (segment_hits_triangle(tri_s[i], tri_s[(i + 1) % 3], tri_r, hit))
            consider(hit, hit);
        if (segment_hits_triangle(tri_r[i], tri_r[(i + 1) % 3], tri_s, hit)) {
            // hit lies on tri_s and on the edge of tri_r
            consider(hit, hit);
        }
    }

    best.dist = std::sqrt(best.dist);
    return best;
}

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric 3x3 matrix.
// a is row-major and gets diagonalized in place; v accumulates eigenvectors
// as columns.
void jacobi_eigen3(std::array<double, 9>& a, std::array<double, 9>& v) {
    v = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    constexpr int kMaxSweeps = 30;
    constexpr double kTol = 1e-12;
    const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        const double off = std::sqrt(a[1] * a[1] + a[2] * a[2] + a[5] * a[5]);
        if (off < kTol) break;
        for (const auto& pr : pairs) {
            const int p = pr[0], q = pr[1];
            const double apq = a[p * 3 + q];
            if (std::abs(apq) < 1e-300) continue;
            const double app = a[p * 3 + p], aqq = a[q * 3 + q];
            const double theta = (aqq - app) / (2.0 * apq);
            const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                             (std::abs(theta) + std::sqrt(theta * theta + 1.0));
            const double c = 1.0 / std::sqrt(t * t + 1.0);
            const double s = t * c;
            for (int k = 0; k < 3; ++k) {
                const double akp = a[k * 3 + p], akq = a[k * 3 + q];
                a[k * 3 + p] = c * akp - s * akq;
                a[k * 3 + q] = s * akp + c * akq;
            }
            for (int k = 0; k < 3; ++k) {
                const double apk = a[p * 3 + k], aqk = a[q * 3 + k];
                a[p * 3 + k] = c * apk - s * aqk;
                a[q * 3 + k] = s * apk + c * aqk;
            }
            for (int k = 0; k < 3; ++k) {
                const double vkp = v[k * 3 + p], vkq = v[k * 3 + q];
                v[k * 3 + p] = c * vkp - s * vkq;
                v[k * 3 + q] = s * vkp + c * vkq;
            }
        }
    }
}

Vec3 matrix_col(const std::array<double, 9>& m, int c) {
    return {m[c], m[3 + c], m[6 + c]};
}

} // namespace

RigidFit shape_match(const std::vector<Vec3>& ref_points,
                     const std::vector<Vec3>& target_points,
                     const std::vector<double>& weights) {
    const std::size_t n = ref_points.size();
    if (n < 3) throw DegenerateConfiguration("shape_match needs at least 3 points");
    if (target_points.size() != n || weights.size() != n)
        throw LengthMismatch("shape_match input sizes differ");

    double wsum = 0.0;
    for (double w : weights) {
        if (!(w > 0.0)) throw DegenerateConfiguration("shape_match weights must be positive");
        wsum += w;
    }

    Vec3 ref_c, tgt_c;
    for (std::size_t i = 0; i < n; ++i) {
        ref_c += ref_points[i] * weights[i];
        tgt_c += target_points[i] * weights[i];
    }
    ref_c = ref_c / wsum;
    tgt_c = tgt_c / wsum;

    // Weighted covariance A = sum w (t - t_c)(r - r_c)^T
    std::array<double, 9> A{};
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 t = target_points[i] - tgt_c;
        const Vec3 r = ref_points[i] - ref_c;
        const double w = weights[i];
        A[0] += w * t.x * r.x; A[1] += w * t.x * r.y; A[2] += w * t.x * r.z;
        A[3] += w * t.y * r.x; A[4] += w * t.y * r.y; A[5] += w * t.y * r.z;
        A[6] += w * t.z * r.x; A[7] += w * t.z * r.y; A[8] += w * t.z * r.z;
    }

    // SVD of A through the symmetric factor A^T A = V D V^T.
    std::array<double, 9> S{};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) S[i * 3 + j] += A[k * 3 + i] * A[k * 3 + j];

    std::array<double, 9> D = S, V{};
    jacobi_eigen3(D, V);

    std::array<double, 3> sigma{};
    std::array<int, 3> order{0, 1, 2};
    for (int i = 0; i < 3; ++i) sigma[i] = std::sqrt(std::max(0.0, D[i * 3 + i]));
    std::sort(order.begin(), order.end(),
              [&sigma](int a, int b) { return sigma[a] > sigma[b]; });

    const double s0 = sigma[order[0]], s1 = sigma[order[1]], s2 = sigma[order[2]];
    const double rank_tol = 1e-12 * std::max(1.0, s0);
    if (s1 <= rank_tol)
        throw DegenerateConfiguration("shape_match covariance rank < 2");

    Vec3 v0 = matrix_col(V, order[0]);
    Vec3 v1 = matrix_col(V, order[1]);
    Vec3 v2 = v0.cross(v1); // right-handed V basis

    auto apply_A = [&A](const Vec3& v) {
        return Vec3{A[0] * v.x + A[1] * v.y + A[2] * v.z,
                    A[3] * v.x + A[4] * v.y + A[5] * v.z,
                    A[6] * v.x + A[7] * v.y + A[8] * v.z};
    };
    Vec3 u0 = apply_A(v0) / s0;
    Vec3 u1 = apply_A(v1) / s1;
    // re-orthonormalize against accumulated rounding
    u0 = u0 / u0.norm();
    u1 = u1 - u0 * u0.dot(u1);
    u1 = u1 / u1.norm();
    // u2 = u0 x u1 forces det(U) = +1; when det(A) < 0 this is exactly the
    // Kabsch correction (the smallest-singular-value axis gets negated).
    const Vec3 u2 = u0.cross(u1);

    std::array<double, 9> R{};
    {
        const Vec3 us[3] = {u0, u1, u2};
        const Vec3 vs[3] = {v0, v1, v2};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double acc = 0.0;
                for (int k = 0; k < 3; ++k) acc += us[k][i] * vs[k][j];
                R[i * 3 + j] = acc;
            }
    }

    RigidFit fit;
    fit.rotation = quat_from_matrix(R);
    const Vec3 r_rc = fit.rotation.rotate(ref_c);
    fit.translation = tgt_c - r_rc;

    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec3 d = fit.rotation.rotate(ref_points[i]) + fit.translation -
                       target_points[i];
        err += weights[i] * d.norm2();
    }
    fit.residual = std::sqrt(err / wsum);
    return fit;
}

std::vector<std::pair<int, int>> aabb_pairs(const std::vector<Aabb>& boxes,
                                            double margin) {
    if (margin < 0.0) throw OutOfRange("aabb_pairs margin must be >= 0");
    const int n = static_cast<int>(boxes.size());
    std::vector<Aabb> inflated;
    inflated.reserve(n);
    for (const auto& b : boxes) inflated.push_back(b.inflated(margin));

    // Sweep along x.
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (inflated[a].min.x != inflated[b].min.x)
            return inflated[a].min.x < inflated[b].min.x;
        return a < b;
    });

    std::vector<std::pair<int, int>> out;
    for (int ii = 0; ii < n; ++ii) {
        const int i = idx[ii];
        for (int jj = ii + 1; jj < n; ++jj) {
            const int j = idx[jj];
            if (inflated[j].min.x > inflated[i].max.x) break;
            if (inflated[i].overlaps(inflated[j])) {
                out.emplace_back(std::min(i, j), std::max(i, j));
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace hopnet::geom
