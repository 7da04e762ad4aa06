#include "surmo/triplane.hpp"

#include "surmo/error.hpp"
#include "surmo/rng.hpp"

namespace surmo {

SurfaceTriplane SurfaceTriplane::zeros(int resolution, int channels, double h_max) {
    if (h_max <= 0.0) throw InvalidArgument("SurfaceTriplane: h_max must be positive");
    SurfaceTriplane tp;
    tp.resolution = resolution;
    tp.channels = channels;
    tp.h_max = h_max;
    tp.plane_uv = Tensor({resolution, resolution, channels});
    tp.plane_uh = Tensor({resolution, resolution, channels});
    tp.plane_hv = Tensor({resolution, resolution, channels});
    return tp;
}

VolumetricTriplane VolumetricTriplane::zeros(int resolution, int channels, const Box3d& box) {
    if (box.empty() || norm2(box.diagonal()) == 0.0)
        throw InvalidArgument("VolumetricTriplane: degenerate bounding box");
    VolumetricTriplane tp;
    tp.resolution = resolution;
    tp.channels = channels;
    tp.box = box;
    tp.plane_xy = Tensor({resolution, resolution, channels});
    tp.plane_xz = Tensor({resolution, resolution, channels});
    tp.plane_zy = Tensor({resolution, resolution, channels});
    return tp;
}

std::vector<float> sample_surface_features(const SurfaceTriplane& tp, const SurfaceLocalCoord& c) {
    TriplaneTransform tf{TriplaneKind::Surface, tp.h_max, Box3d{}};
    std::array<Vec2d, 3> pc = tf.plane_coords(c, Vec3d{});
    std::vector<float> z(size_t(tp.channels) * 3);
    sample_plane(tp.plane_uv, pc[0].x, pc[0].y, z.data());
    sample_plane(tp.plane_uh, pc[1].x, pc[1].y, z.data() + tp.channels);
    sample_plane(tp.plane_hv, pc[2].x, pc[2].y, z.data() + 2 * tp.channels);
    return z;
}

namespace {

void mark_touched(std::vector<uint8_t>& grid, int res, const Vec2d& ab) {
    BilinearFootprint f = bilinear_footprint(ab.x, ab.y, res, res);
    // Only corners carrying nonzero bilinear weight count as touched.
    bool x1w = f.fx > 0.0 && f.x1 != f.x0;
    bool y1w = f.fy > 0.0 && f.y1 != f.y0;
    bool x0w = f.fx < 1.0 || f.x1 == f.x0;
    bool y0w = f.fy < 1.0 || f.y1 == f.y0;
    if (x0w && y0w) grid[size_t(f.y0 * res + f.x0)] = 1;
    if (x1w && y0w) grid[size_t(f.y0 * res + f.x1)] = 1;
    if (x0w && y1w) grid[size_t(f.y1 * res + f.x0)] = 1;
    if (x1w && y1w) grid[size_t(f.y1 * res + f.x1)] = 1;
}

OccupancyStats occupancy_impl(const TriplaneTransform& tf, int res, const MeshFrame& mesh,
                              const FaceBvh& bvh, int n_samples, double h_max, uint64_t seed) {
    if (n_samples < 1) throw InvalidArgument("occupancy_stats: n_samples must be >= 1");

    OccupancyStats stats;
    for (auto& g : stats.touched) g.assign(size_t(res) * size_t(res), 0);

    // Area-weighted face sampling for uniform coverage of the shell.
    std::vector<double> cdf(mesh.faces.size());
    double total = 0.0;
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& tri = mesh.faces[f];
        total += 0.5 * norm(cross(mesh.vertices[tri[1]] - mesh.vertices[tri[0]],
                                  mesh.vertices[tri[2]] - mesh.vertices[tri[0]]));
        cdf[f] = total;
    }

    Rng rng(seed);
    for (int i = 0; i < n_samples; ++i) {
        double r = rng.uniform() * total;
        size_t f = size_t(std::lower_bound(cdf.begin(), cdf.end(), r) - cdf.begin());
        if (f >= mesh.faces.size()) f = mesh.faces.size() - 1;
        double s = rng.uniform(), t = rng.uniform();
        if (s + t > 1.0) {
            s = 1.0 - s;
            t = 1.0 - t;
        }
        const auto& tri = mesh.faces[f];
        Vec3d base = mesh.vertices[tri[0]] * (1.0 - s - t) + mesh.vertices[tri[1]] * s +
                     mesh.vertices[tri[2]] * t;
        double h = rng.uniform(-h_max, h_max);
        Vec3d p = base + face_normal(mesh, int(f)) * h;

        SurfaceLocalCoord c = surface_local_coords(bvh, mesh, p);
        std::array<Vec2d, 3> pc = tf.plane_coords(c, p);
        for (int k = 0; k < 3; ++k) mark_touched(stats.touched[size_t(k)], res, pc[size_t(k)]);
    }

    double mean = 0.0;
    for (int k = 0; k < 3; ++k) {
        size_t on = 0;
        for (uint8_t v : stats.touched[size_t(k)]) on += v;
        stats.plane_fraction[size_t(k)] = double(on) / double(size_t(res) * size_t(res));
        mean += stats.plane_fraction[size_t(k)];
    }
    stats.mean_fraction = mean / 3.0;
    return stats;
}

}  // namespace

OccupancyStats occupancy_stats(const SurfaceTriplane& tp, const MeshFrame& mesh, const FaceBvh& bvh,
                               int n_samples, uint64_t seed) {
    TriplaneTransform tf{TriplaneKind::Surface, tp.h_max, Box3d{}};
    return occupancy_impl(tf, tp.resolution, mesh, bvh, n_samples, tp.h_max, seed);
}

OccupancyStats occupancy_stats(const VolumetricTriplane& tp, const MeshFrame& mesh,
                               const FaceBvh& bvh, int n_samples, double shell_h_max,
                               uint64_t seed) {
    // Same shell-sample distribution as the surface variant; only the
    // coordinate transform differs, so fractions are directly comparable.
    TriplaneTransform tf{TriplaneKind::Volumetric, shell_h_max, tp.box};
    return occupancy_impl(tf, tp.resolution, mesh, bvh, n_samples, shell_h_max, seed);
}

}  // namespace surmo
