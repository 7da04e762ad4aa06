#pragma once

#include <array>

#include "surmo/geometry.hpp"
#include "surmo/tensor.hpp"

namespace surmo {

enum class TriplaneKind { Surface, Volumetric };

// Feature volume shaped as a shell around the body surface: three planes
// indexed by (u,v), (u,h), (h,v), h being the signed distance to the surface
// normalized over [-h_max, h_max].
struct SurfaceTriplane {
    int resolution = 256;
    int channels = 16;  // per plane; 3 planes = 48 total
    double h_max = 0.1;
    Tensor plane_uv, plane_uh, plane_hv;  // each [res, res, channels]

    static SurfaceTriplane zeros(int resolution, int channels, double h_max);
};

// Axis-aligned world-space baseline used by the ablation: planes indexed by
// normalized (x,y), (x,z), (z,y) over a bounding box.
struct VolumetricTriplane {
    int resolution = 256;
    int channels = 16;
    Box3d box;
    Tensor plane_xy, plane_xz, plane_zy;

    static VolumetricTriplane zeros(int resolution, int channels, const Box3d& box);
};

// h in [-h_max, h_max] -> [0,1], clamped outside the shell.
inline double normalize_h(double h, double h_max) {
    double t = (h + h_max) / (2.0 * h_max);
    return t < 0.0 ? 0.0 : (t > 1.0 ? 1.0 : t);
}

// The coordinate transform feeding plane lookups; the only difference
// between the surface and volumetric variants.
struct TriplaneTransform {
    TriplaneKind kind = TriplaneKind::Surface;
    double h_max = 0.1;
    Box3d box;  // volumetric only

    // Returns the (a,b) pair per plane in sampling order [uv | uh | hv]
    // (surface) or [xy | xz | zy] (volumetric).
    std::array<Vec2d, 3> plane_coords(const SurfaceLocalCoord& c, const Vec3d& world) const {
        if (kind == TriplaneKind::Surface) {
            double hn = normalize_h(c.h, h_max);
            return {Vec2d{c.u, c.v}, Vec2d{c.u, hn}, Vec2d{hn, c.v}};
        }
        Vec3d d = box.diagonal();
        double x = (world.x - box.lo.x) / d.x;
        double y = (world.y - box.lo.y) / d.y;
        double z = (world.z - box.lo.z) / d.z;
        return {Vec2d{x, y}, Vec2d{x, z}, Vec2d{z, y}};
    }
};

// Bilinear footprint of one clamped [0,1]^2 lookup over texel centers.
struct BilinearFootprint {
    int x0, x1, y0, y1;
    double fx, fy;  // fraction toward x1 / y1
};

inline BilinearFootprint bilinear_footprint(double a, double b, int width, int height) {
    a = std::clamp(a, 0.0, 1.0);
    b = std::clamp(b, 0.0, 1.0);
    double x = a * width - 0.5;
    double y = b * height - 0.5;
    int x0 = int(std::floor(x)), y0 = int(std::floor(y));
    BilinearFootprint f;
    f.fx = x - x0;
    f.fy = y - y0;
    f.x1 = std::min(x0 + 1, width - 1);
    f.y1 = std::min(y0 + 1, height - 1);
    f.x0 = std::max(x0, 0);
    f.y0 = std::max(y0, 0);
    return f;
}

// Differentiable bilinear plane sampling (functional form). plane is
// [H,W,C]; out has C entries. Optional d_a/d_b receive the value derivative
// with respect to the (pre-clamp) coordinates, valid inside a texel cell.
template <class T>
void sample_plane(const TensorT<T>& plane, double a, double b, T* out, T* d_a = nullptr,
                  T* d_b = nullptr) {
    int h = plane.dim(0), w = plane.dim(1), c = plane.dim(2);
    BilinearFootprint f = bilinear_footprint(a, b, w, h);
    const T* p00 = plane.v.data() + (int64_t(f.y0) * w + f.x0) * c;
    const T* p10 = plane.v.data() + (int64_t(f.y0) * w + f.x1) * c;
    const T* p01 = plane.v.data() + (int64_t(f.y1) * w + f.x0) * c;
    const T* p11 = plane.v.data() + (int64_t(f.y1) * w + f.x1) * c;
    T fx = T(f.fx), fy = T(f.fy);
    for (int k = 0; k < c; ++k) {
        T top = p00[k] * (T(1) - fx) + p10[k] * fx;
        T bot = p01[k] * (T(1) - fx) + p11[k] * fx;
        out[k] = top * (T(1) - fy) + bot * fy;
        if (d_a) d_a[k] = ((p10[k] - p00[k]) * (T(1) - fy) + (p11[k] - p01[k]) * fy) * T(w);
        if (d_b) d_b[k] = ((p01[k] - p00[k]) * (T(1) - fx) + (p11[k] - p10[k]) * fx) * T(h);
    }
}

// Tape op: gathers N bilinear lookups from a plane node. coords holds N
// (a,b) pairs; output is [N,C]. Gradients flow into the plane contents.
template <class T>
typename Tape<T>::Val sample_plane_op(Tape<T>& tape, typename Tape<T>::Val plane,
                                      std::vector<Vec2d> coords) {
    const TensorT<T>& pv = tape.value(plane);
    if (pv.rank() != 3) throw InvalidArgument("sample_plane: plane must be [H,W,C]");
    int h = pv.dim(0), w = pv.dim(1), c = pv.dim(2);
    int64_t n = int64_t(coords.size());
    TensorT<T> out({int(n), c});
    parallel_for(0, n, [&](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i)
            sample_plane(pv, coords[size_t(i)].x, coords[size_t(i)].y, out.v.data() + i * c);
    });
    auto shared = std::make_shared<std::vector<Vec2d>>(std::move(coords));
    return tape.custom({plane}, std::move(out),
                       [plane, shared, h, w, c, n](Tape<T>& tp, typename Tape<T>::Val self) {
                           const T* go = tp.grad(self).g.data();
                           T* gp = tp.grad_ptr(plane);
                           if (!gp) return;
                           // Serial scatter: overlapping footprints accumulate
                           // in a fixed order.
                           for (int64_t i = 0; i < n; ++i) {
                               BilinearFootprint f =
                                   bilinear_footprint((*shared)[size_t(i)].x, (*shared)[size_t(i)].y, w, h);
                               T fx = T(f.fx), fy = T(f.fy);
                               T* g00 = gp + (int64_t(f.y0) * w + f.x0) * c;
                               T* g10 = gp + (int64_t(f.y0) * w + f.x1) * c;
                               T* g01 = gp + (int64_t(f.y1) * w + f.x0) * c;
                               T* g11 = gp + (int64_t(f.y1) * w + f.x1) * c;
                               const T* grow = go + i * c;
                               for (int k = 0; k < c; ++k) {
                                   g00[k] += grow[k] * (T(1) - fx) * (T(1) - fy);
                                   g10[k] += grow[k] * fx * (T(1) - fy);
                                   g01[k] += grow[k] * (T(1) - fx) * fy;
                                   g11[k] += grow[k] * fx * fy;
                               }
                           }
                       });
}

// z^{uvh} for a single query: concatenation [uv | uh | hv] of the three
// plane lookups at the surface-local coordinate.
std::vector<float> sample_surface_features(const SurfaceTriplane& tp, const SurfaceLocalCoord& c);

// Per-plane texel utilization for points drawn uniformly inside the render
// shell (random surface point offset by h in [-h_max, h_max]).
struct OccupancyStats {
    std::array<double, 3> plane_fraction{0, 0, 0};
    double mean_fraction = 0.0;
    std::array<std::vector<uint8_t>, 3> touched;  // res*res each
};

OccupancyStats occupancy_stats(const SurfaceTriplane& tp, const MeshFrame& mesh, const FaceBvh& bvh,
                               int n_samples, uint64_t seed = 0);

// Volumetric variant over the same shell-sample distribution (shell_h_max
// should match the surface triplane being compared against).
OccupancyStats occupancy_stats(const VolumetricTriplane& tp, const MeshFrame& mesh,
                               const FaceBvh& bvh, int n_samples, double shell_h_max,
                               uint64_t seed = 0);

}  // namespace surmo
