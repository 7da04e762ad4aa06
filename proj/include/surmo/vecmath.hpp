#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace surmo {

struct Vec2d {
    double x = 0.0, y = 0.0;

    Vec2d() = default;
    Vec2d(double x_, double y_) : x(x_), y(y_) {}

    Vec2d operator+(const Vec2d& o) const { return {x + o.x, y + o.y}; }
    Vec2d operator-(const Vec2d& o) const { return {x - o.x, y - o.y}; }
    Vec2d operator*(double s) const { return {x * s, y * s}; }
};

inline double dot(const Vec2d& a, const Vec2d& b) { return a.x * b.x + a.y * b.y; }
inline double cross2(const Vec2d& a, const Vec2d& b) { return a.x * b.y - a.y * b.x; }

struct Vec3d {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3d() = default;
    Vec3d(double x_, double y_, double z_) : x(x_), y(y_), z(z_) {}

    Vec3d operator+(const Vec3d& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3d operator-(const Vec3d& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3d operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3d operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3d& operator+=(const Vec3d& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3d operator-() const { return {-x, -y, -z}; }

    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3d operator*(double s, const Vec3d& v) { return v * s; }
inline double dot(const Vec3d& a, const Vec3d& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3d cross(const Vec3d& a, const Vec3d& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(const Vec3d& v) { return dot(v, v); }
inline double norm(const Vec3d& v) { return std::sqrt(dot(v, v)); }
inline Vec3d normalized(const Vec3d& v) { return v / norm(v); }

// Axis-aligned box, empty by default.
struct Box3d {
    Vec3d lo{std::numeric_limits<double>::max(), std::numeric_limits<double>::max(),
             std::numeric_limits<double>::max()};
    Vec3d hi{std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest(),
             std::numeric_limits<double>::lowest()};

    bool empty() const { return lo.x > hi.x; }

    void extend(const Vec3d& p) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    void extend(const Box3d& b) {
        extend(b.lo);
        extend(b.hi);
    }
    Box3d dilated(double r) const {
        Box3d d;
        d.lo = {lo.x - r, lo.y - r, lo.z - r};
        d.hi = {hi.x + r, hi.y + r, hi.z + r};
        return d;
    }
    Vec3d diagonal() const { return hi - lo; }
    Vec3d center() const { return (lo + hi) * 0.5; }

    // Squared distance from a point to the box (0 inside).
    double sq_dist(const Vec3d& p) const {
        double d = 0.0;
        for (int i = 0; i < 3; ++i) {
            double v = p[i];
            double l = lo[i], h = hi[i];
            if (v < l) d += (l - v) * (l - v);
            if (v > h) d += (v - h) * (v - h);
        }
        return d;
    }
};

}  // namespace surmo
