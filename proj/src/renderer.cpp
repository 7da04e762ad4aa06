#include "surmo/renderer.hpp"

#include <cmath>

#include "surmo/error.hpp"

namespace surmo {

void Camera::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw InvalidArgument("camera: focal lengths must be positive");
    if (width <= 0 || height <= 0) throw InvalidArgument("camera: image size must be positive");
    // Orthonormality of the rotation rows.
    Vec3d r0{extrinsic[0], extrinsic[1], extrinsic[2]};
    Vec3d r1{extrinsic[4], extrinsic[5], extrinsic[6]};
    Vec3d r2{extrinsic[8], extrinsic[9], extrinsic[10]};
    constexpr double tol = 1e-6;
    if (std::abs(norm(r0) - 1.0) > tol || std::abs(norm(r1) - 1.0) > tol ||
        std::abs(norm(r2) - 1.0) > tol || std::abs(dot(r0, r1)) > tol ||
        std::abs(dot(r0, r2)) > tol || std::abs(dot(r1, r2)) > tol)
        throw InvalidArgument("camera: rotation part not orthonormal");
}

Camera Camera::look_at(const Vec3d& eye, const Vec3d& target, const Vec3d& up, double focal,
                       int width, int height) {
    Vec3d fwd = normalized(target - eye);
    Vec3d right = normalized(cross(fwd, up));
    Vec3d down = cross(fwd, right);  // y axis points down in image space
    Camera cam;
    cam.fx = cam.fy = focal;
    cam.cx = width * 0.5;
    cam.cy = height * 0.5;
    cam.width = width;
    cam.height = height;
    Vec3d t{-dot(right, eye), -dot(down, eye), -dot(fwd, eye)};
    cam.extrinsic = {right.x, right.y, right.z, t.x,
                     down.x,  down.y,  down.z,  t.y,
                     fwd.x,   fwd.y,   fwd.z,   t.z};
    return cam;
}

Ray generate_ray(const Camera& cam, double px, double py) {
    Vec3d dir_cam{(px - cam.cx) / cam.fx, (py - cam.cy) / cam.fy, 1.0};
    return {cam.center(), normalized(cam.rotate_to_world(dir_cam))};
}

std::vector<Ray> generate_rays(const Camera& cam) {
    cam.validate();
    std::vector<Ray> rays(size_t(cam.width) * size_t(cam.height));
    Vec3d origin = cam.center();
    for (int y = 0; y < cam.height; ++y) {
        for (int x = 0; x < cam.width; ++x) {
            Vec3d dir_cam{(x + 0.5 - cam.cx) / cam.fx, (y + 0.5 - cam.cy) / cam.fy, 1.0};
            rays[size_t(y) * size_t(cam.width) + size_t(x)] = {
                origin, normalized(cam.rotate_to_world(dir_cam))};
        }
    }
    return rays;
}

bool intersect_box(const Ray& ray, const Box3d& box, double& tn, double& tf) {
    tn = 0.0;
    tf = std::numeric_limits<double>::max();
    for (int i = 0; i < 3; ++i) {
        double o = ray.origin[i], d = ray.dir[i];
        double lo = box.lo[i], hi = box.hi[i];
        if (std::abs(d) < 1e-15) {
            if (o < lo || o > hi) return false;
            continue;
        }
        double inv = 1.0 / d;
        double t0 = (lo - o) * inv, t1 = (hi - o) * inv;
        if (t0 > t1) std::swap(t0, t1);
        tn = std::max(tn, t0);
        tf = std::min(tf, t1);
        if (tn > tf) return false;
    }
    return tf > tn;
}

RaySampleSet sample_points_filtered(const Ray& ray, const MeshFrame& mesh, const FaceBvh& bvh,
                                    double h_max, int n_samples, Rng* rng) {
    if (n_samples < 1) throw InvalidArgument("sample_points_filtered: n_samples must be >= 1");
    RaySampleSet set;
    Box3d shell = mesh.bounds().dilated(h_max);
    double tn, tf;
    if (!intersect_box(ray, shell, tn, tf)) return set;  // background pixel

    set.hit_box = true;
    set.t_near = tn;
    set.t_far = tf;
    double stratum = (tf - tn) / n_samples;
    set.positions.resize(size_t(n_samples));
    set.deltas.assign(size_t(n_samples), stratum);
    set.valid.resize(size_t(n_samples));
    set.coords.resize(size_t(n_samples));
    for (int i = 0; i < n_samples; ++i) {
        double jitter = rng ? rng->uniform() : 0.5;
        double t = tn + (i + jitter) * stratum;
        Vec3d p = ray.origin + ray.dir * t;
        SurfaceLocalCoord c = surface_local_coords(bvh, mesh, p);
        set.positions[size_t(i)] = p;
        set.coords[size_t(i)] = c;
        set.valid[size_t(i)] = std::abs(c.h) <= h_max ? 1 : 0;
    }
    return set;
}

}  // namespace surmo
