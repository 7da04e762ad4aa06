#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "surmo/geometry.hpp"
#include "surmo/model.hpp"
#include "surmo/rng.hpp"
#include "surmo/tensor.hpp"
#include "surmo/triplane.hpp"

namespace surmo {

// Pinhole camera. extrinsic is the row-major 3x4 world-to-camera transform
// [R | t]: X_cam = R X_world + t.
struct Camera {
    double fx = 0, fy = 0, cx = 0, cy = 0;
    std::array<double, 12> extrinsic{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0};
    int width = 0, height = 0;

    Vec3d rotate_to_world(const Vec3d& v) const {  // R^T v
        return {extrinsic[0] * v.x + extrinsic[4] * v.y + extrinsic[8] * v.z,
                extrinsic[1] * v.x + extrinsic[5] * v.y + extrinsic[9] * v.z,
                extrinsic[2] * v.x + extrinsic[6] * v.y + extrinsic[10] * v.z};
    }
    Vec3d rotate_to_camera(const Vec3d& v) const {  // R v
        return {extrinsic[0] * v.x + extrinsic[1] * v.y + extrinsic[2] * v.z,
                extrinsic[4] * v.x + extrinsic[5] * v.y + extrinsic[6] * v.z,
                extrinsic[8] * v.x + extrinsic[9] * v.y + extrinsic[10] * v.z};
    }
    Vec3d to_camera(const Vec3d& p) const {
        Vec3d r = rotate_to_camera(p);
        return {r.x + extrinsic[3], r.y + extrinsic[7], r.z + extrinsic[11]};
    }
    Vec3d center() const { return -rotate_to_world({extrinsic[3], extrinsic[7], extrinsic[11]}); }
    Vec3d forward() const { return {extrinsic[8], extrinsic[9], extrinsic[10]}; }

    // Throws InvalidArgument if intrinsics are invalid or the rotation part
    // is not orthonormal within 1e-6.
    void validate() const;

    // Camera at `eye` looking at `target` (y-down image convention).
    static Camera look_at(const Vec3d& eye, const Vec3d& target, const Vec3d& up, double focal,
                          int width, int height);
};

struct Ray {
    Vec3d origin;
    Vec3d dir;  // unit
};

// Per-pixel rays through pixel centers, row-major y*width+x.
std::vector<Ray> generate_rays(const Camera& cam);
Ray generate_ray(const Camera& cam, double px, double py);

// Stratified samples of one ray inside the mesh bounding box dilated by
// h_max. Validity marks samples inside the surface shell (|h| <= h_max);
// samples outside carry zero density by contract.
struct RaySampleSet {
    std::vector<Vec3d> positions;
    std::vector<double> deltas;              // stratum widths, > 0
    std::vector<uint8_t> valid;
    std::vector<SurfaceLocalCoord> coords;   // one per sample
    double t_near = 0, t_far = 0;
    bool hit_box = false;

    size_t size() const { return positions.size(); }
    size_t valid_count() const {
        size_t n = 0;
        for (uint8_t v : valid) n += v;
        return n;
    }
};

// rng == nullptr uses stratum midpoints; otherwise one jitter per stratum.
RaySampleSet sample_points_filtered(const Ray& ray, const MeshFrame& mesh, const FaceBvh& bvh,
                                    double h_max, int n_samples, Rng* rng = nullptr);

// Slab test against a box; returns false on miss. On hit, tn/tf bound the
// overlap of the ray with the box (tn clamped to 0).
bool intersect_box(const Ray& ray, const Box3d& box, double& tn, double& tf);

struct RenderConfig {
    int n_samples = 64;
    uint64_t seed = 0;
    bool filtered = true;   // skip radiance-field evaluation outside the shell
};

template <class T>
struct RenderResult {
    typename Tape<T>::Val feature_image;  // [H, W, feat_channels]
    typename Tape<T>::Val opacity;        // [H, W, 1]
    int64_t rf_evals = 0;                 // rows evaluated by the radiance field
    int64_t total_samples = 0;            // all in-box samples
};

// Alpha compositing of one ray (closed form: alpha_j = 1 - exp(-sigma_j * delta_j)).
template <class T>
void integrate_ray(const T* sigma, const T* color, const T* delta, int count, int channels,
                   T* out_feature, T* out_opacity) {
    for (int c = 0; c < channels; ++c) out_feature[c] = T(0);
    T transmittance = T(1);
    for (int i = 0; i < count; ++i) {
        T alpha = T(1) - std::exp(-sigma[i] * delta[i]);
        T w = transmittance * alpha;
        const T* ci = color + int64_t(i) * channels;
        for (int c = 0; c < channels; ++c) out_feature[c] += w * ci[c];
        transmittance *= T(1) - alpha;
    }
    *out_opacity = T(1) - transmittance;
}

// Tape op: composites per-sample (sigma, color) into per-ray features and
// opacities. ray_start has n_rays+1 offsets into the flat sample arrays;
// samples are depth-sorted within each ray. Output is [n_rays, C+1], last
// channel the accumulated opacity.
template <class T>
typename Tape<T>::Val integrate_volume_op(Tape<T>& tape, typename Tape<T>::Val sigma,
                                          typename Tape<T>::Val color,
                                          std::vector<int64_t> ray_start, std::vector<T> deltas) {
    const auto& sv = tape.value(sigma);
    const auto& cv = tape.value(color);
    if (cv.rank() != 2 || sv.numel() != cv.dim(0) || int64_t(deltas.size()) != sv.numel())
        throw InvalidArgument("integrate_volume: sample count mismatch sigma" +
                              shape_str(sv.shape) + " color" + shape_str(cv.shape));
    int64_t n_rays = int64_t(ray_start.size()) - 1;
    int ch = cv.dim(1);
    TensorT<T> out({int(n_rays), ch + 1});
    auto rs = std::make_shared<std::vector<int64_t>>(std::move(ray_start));
    auto ds = std::make_shared<std::vector<T>>(std::move(deltas));
    {
        const T* sp = sv.v.data();
        const T* cp = cv.v.data();
        T* op = out.v.data();
        parallel_for(0, n_rays, [&](int64_t lo, int64_t hi) {
            for (int64_t r = lo; r < hi; ++r) {
                int64_t first = (*rs)[size_t(r)];
                int count = int((*rs)[size_t(r + 1)] - first);
                integrate_ray(sp + first, cp + first * ch, ds->data() + first, count, ch,
                              op + r * (ch + 1), op + r * (ch + 1) + ch);
            }
        });
    }
    return tape.custom(
        {sigma, color}, std::move(out),
        [sigma, color, rs, ds, n_rays, ch](Tape<T>& tp, typename Tape<T>::Val self) {
            const T* go = tp.grad(self).g.data();
            const T* sp = tp.value(sigma).v.data();
            const T* cp = tp.value(color).v.data();
            T* gs = tp.grad_ptr(sigma);
            T* gc = tp.grad_ptr(color);
            parallel_for(0, n_rays, [&](int64_t lo, int64_t hi) {
                std::vector<T> trans, weight;
                for (int64_t r = lo; r < hi; ++r) {
                    int64_t first = (*rs)[size_t(r)];
                    int count = int((*rs)[size_t(r + 1)] - first);
                    const T* grow = go + r * (ch + 1);
                    T g_opacity = grow[ch];

                    trans.assign(size_t(count) + 1, T(1));
                    weight.assign(size_t(count), T(0));
                    for (int i = 0; i < count; ++i) {
                        T alpha = T(1) - std::exp(-sp[first + i] * (*ds)[size_t(first + i)]);
                        weight[size_t(i)] = trans[size_t(i)] * alpha;
                        trans[size_t(i) + 1] = trans[size_t(i)] * (T(1) - alpha);
                    }
                    T t_end = trans[size_t(count)];

                    if (gc) {
                        for (int i = 0; i < count; ++i) {
                            T* gcrow = gc + (first + i) * ch;
                            for (int c = 0; c < ch; ++c) gcrow[c] += weight[size_t(i)] * grow[c];
                        }
                    }
                    if (gs) {
                        // d(out)/d(sigma_i) = delta_i * (T_{i+1} G_i - sum_{j>i} w_j G_j)
                        // with G_j = <grad, c_j>; opacity adds delta_i * T_end.
                        T suffix = T(0);
                        for (int i = count - 1; i >= 0; --i) {
                            const T* ci = cp + (first + i) * ch;
                            T gi = T(0);
                            for (int c = 0; c < ch; ++c) gi += grow[c] * ci[c];
                            T d = (*ds)[size_t(first + i)];
                            gs[first + i] += d * (trans[size_t(i) + 1] * gi - suffix) +
                                             d * t_end * g_opacity;
                            suffix += weight[size_t(i)] * gi;
                        }
                    }
                }
            });
        });
}

// G_1: generates rays, samples with surface-guided filtering, queries the
// triplane + radiance field, and integrates to a feature image. The plane
// values come in as tape nodes so gradients reach the encoder.
template <class T>
RenderResult<T> render_feature_image(Tape<T>& tape, SurmoModelT<T>& model,
                                     const std::array<typename Tape<T>::Val, 3>& planes,
                                     const MeshFrame& mesh, const FaceBvh& bvh, const Camera& cam,
                                     const RenderConfig& cfg) {
    using Val = typename Tape<T>::Val;
    cam.validate();
    const ModelConfig& mc = model.config();
    TriplaneTransform transform = mc.transform();
    std::vector<Ray> rays = generate_rays(cam);
    int64_t n_rays = int64_t(rays.size());

    auto sets = std::vector<RaySampleSet>(size_t(n_rays));
    parallel_for(0, n_rays, [&](int64_t lo, int64_t hi) {
        for (int64_t r = lo; r < hi; ++r) {
            Rng rng = Rng::stream(cfg.seed, uint64_t(r));
            sets[size_t(r)] =
                sample_points_filtered(rays[size_t(r)], mesh, bvh, mc.h_max, cfg.n_samples, &rng);
        }
    });

    // Flatten: filtered mode keeps shell samples only; unfiltered keeps every
    // in-box sample and zeroes the density outside the shell instead.
    std::vector<int64_t> ray_start(size_t(n_rays) + 1, 0);
    std::vector<Vec2d> coords0, coords1, coords2;
    std::vector<T> deltas, dirs, sigma_mask;
    int64_t total_samples = 0;
    for (int64_t r = 0; r < n_rays; ++r) {
        const RaySampleSet& s = sets[size_t(r)];
        ray_start[size_t(r)] = int64_t(coords0.size());
        for (size_t i = 0; i < s.size(); ++i) {
            total_samples += 1;
            if (cfg.filtered && !s.valid[i]) continue;
            std::array<Vec2d, 3> pc = transform.plane_coords(s.coords[i], s.positions[i]);
            coords0.push_back(pc[0]);
            coords1.push_back(pc[1]);
            coords2.push_back(pc[2]);
            deltas.push_back(T(s.deltas[i]));
            const Vec3d& d = rays[size_t(r)].dir;
            dirs.push_back(T(d.x));
            dirs.push_back(T(d.y));
            dirs.push_back(T(d.z));
            sigma_mask.push_back(s.valid[i] ? T(1) : T(0));
        }
    }
    ray_start[size_t(n_rays)] = int64_t(coords0.size());

    int64_t m = int64_t(coords0.size());
    RenderResult<T> out;
    out.total_samples = total_samples;
    out.rf_evals = m;

    int ch = mc.feat_channels;
    if (m == 0) {
        TensorT<T> feat({cam.height, cam.width, ch});
        TensorT<T> op({cam.height, cam.width, 1});
        out.feature_image = tape.constant(std::move(feat));
        out.opacity = tape.constant(std::move(op));
        return out;
    }

    Val z = tape.concat({sample_plane_op(tape, planes[0], std::move(coords0)),
                         sample_plane_op(tape, planes[1], std::move(coords1)),
                         sample_plane_op(tape, planes[2], std::move(coords2))});
    Val dir_val = tape.constant(TensorT<T>({int(m), 3}, std::move(dirs)));
    RadianceOutput<T> rf = model.radiance_field(tape, z, dir_val);
    Val sigma = tape.reshape(rf.sigma, {int(m)});
    if (!cfg.filtered) {
        // Zero-density-outside-shell contract.
        Val mask = tape.constant(TensorT<T>({int(m)}, std::move(sigma_mask)));
        sigma = tape.mul(sigma, mask);
    }
    Val integrated = integrate_volume_op(tape, sigma, rf.color, std::move(ray_start),
                                         std::move(deltas));
    Val feat = tape.slice_channels(integrated, 0, ch);
    out.feature_image = tape.reshape(feat, {cam.height, cam.width, ch});
    out.opacity = tape.reshape(tape.slice_channels(integrated, ch, ch + 1),
                               {cam.height, cam.width, 1});
    return out;
}

}  // namespace surmo
