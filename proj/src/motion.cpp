#include "surmo/motion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "surmo/error.hpp"
#include "surmo/parallel.hpp"

namespace surmo {

TrajectoryConfig TrajectoryConfig::decayed(int window, double decay) {
    TrajectoryConfig cfg;
    cfg.window = window;
    cfg.weights.resize(size_t(window));
    double w = 1.0;
    for (int i = 0; i < window; ++i) {
        cfg.weights[size_t(i)] = w;
        w *= decay;
    }
    return cfg;
}

size_t UvMap::covered_count() const {
    size_t n = 0;
    for (uint8_t m : mask) n += m != 0;
    return n;
}

void UvMap::sample(double a, double b, float* out) const {
    a = std::clamp(a, 0.0, 1.0);
    b = std::clamp(b, 0.0, 1.0);
    double x = a * width - 0.5;
    double y = b * height - 0.5;
    int x0 = int(std::floor(x)), y0 = int(std::floor(y));
    double fx = x - x0, fy = y - y0;
    int x1 = std::min(x0 + 1, width - 1), y1 = std::min(y0 + 1, height - 1);
    x0 = std::max(x0, 0);
    y0 = std::max(y0, 0);
    for (int c = 0; c < channels; ++c) {
        double v00 = at(x0, y0, c), v10 = at(x1, y0, c);
        double v01 = at(x0, y1, c), v11 = at(x1, y1, c);
        out[c] = float((v00 * (1 - fx) + v10 * fx) * (1 - fy) + (v01 * (1 - fx) + v11 * fx) * fy);
    }
}

std::vector<Vec3d> compute_velocity(const MeshSequence& seq, int t) {
    if (t < 0 || t >= seq.frame_count())
        throw InvalidArgument("compute_velocity: frame " + std::to_string(t) + " out of range");
    const auto& now = seq.frames[size_t(t)];
    std::vector<Vec3d> v(now.size());
    if (t == 0) return v;  // boundary convention
    const auto& prev = seq.frames[size_t(t - 1)];
    if (prev.size() != now.size())
        throw InvalidArgument("compute_velocity: topology mismatch between frames " +
                              std::to_string(t - 1) + " and " + std::to_string(t));
    for (size_t i = 0; i < now.size(); ++i) v[i] = now[i] - prev[i];
    return v;
}

std::vector<Vec3d> compute_trajectory(const MeshSequence& seq, int t, const TrajectoryConfig& cfg) {
    if (cfg.window < 1 || cfg.weights.size() != size_t(cfg.window))
        throw InvalidArgument("compute_trajectory: window/weights mismatch");
    for (double w : cfg.weights)
        if (!(w > 0.0)) throw InvalidArgument("compute_trajectory: weights must be positive");

    double weight_sum = 0.0;
    for (double w : cfg.weights) weight_sum += w;

    const auto& pose = seq.frames.at(size_t(t));
    std::vector<Vec3d> traj(pose.size());
    std::vector<Vec3d> acc(pose.size());
    for (int i = 1; i <= cfg.window; ++i) {
        int ti = t - i;
        if (ti < 0) continue;  // zero-padded history
        std::vector<Vec3d> v = compute_velocity(seq, ti);
        double lambda = cfg.weights[size_t(i - 1)];
        for (size_t k = 0; k < acc.size(); ++k) acc[k] += v[k] * lambda;
    }
    for (size_t k = 0; k < pose.size(); ++k) traj[k] = pose[k] + acc[k] / weight_sum;
    return traj;
}

MotionState extract_motion_state(const MeshSequence& seq, int t, const TrajectoryConfig& cfg) {
    MotionState s;
    s.pose = seq.frames.at(size_t(t));
    s.velocity = compute_velocity(seq, t);
    s.trajectory = compute_trajectory(seq, t, cfg);
    s.frame_index = t;
    return s;
}

namespace {

struct UvTri {
    Vec2d a, b, c;
    double det;  // signed doubled area in UV units
};

// Barycentric weights of point q in the UV triangle; w[i] may be slightly
// negative at edges, the caller applies the coverage tolerance.
std::array<double, 3> uv_bary(const UvTri& t, const Vec2d& q) {
    Vec2d e1 = t.b - t.a, e2 = t.c - t.a, d{q.x - t.a.x, q.y - t.a.y};
    double w1 = cross2(d, e2) / t.det;
    double w2 = cross2(e1, d) / t.det;
    return {1.0 - w1 - w2, w1, w2};
}

// Shared scanline loop. emit(face, x, y, bary) is called once per covered
// texel, faces visited in ascending index so the lowest face wins overlaps.
template <typename Emit>
void rasterize_atlas(const MeshFrame& mesh, int width, int height, std::vector<uint8_t>& mask,
                     const Emit& emit) {
    if (width <= 0 || height <= 0)
        throw InvalidArgument("rasterize_uv: resolution must be positive");
    mask.assign(size_t(width) * size_t(height), 0);

    constexpr double tol = 1e-12;
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& tri = mesh.faces[f];
        UvTri t{mesh.uv_coords[tri[0]], mesh.uv_coords[tri[1]], mesh.uv_coords[tri[2]], 0.0};
        t.det = cross2(t.b - t.a, t.c - t.a);
        if (std::abs(t.det) < 1e-16) continue;  // degenerate chart triangle

        double ulo = std::min({t.a.x, t.b.x, t.c.x});
        double uhi = std::max({t.a.x, t.b.x, t.c.x});
        double vlo = std::min({t.a.y, t.b.y, t.c.y});
        double vhi = std::max({t.a.y, t.b.y, t.c.y});
        int x0 = std::max(0, int(std::floor(ulo * width - 0.5)));
        int x1 = std::min(width - 1, int(std::ceil(uhi * width - 0.5)));
        int y0 = std::max(0, int(std::floor(vlo * height - 0.5)));
        int y1 = std::min(height - 1, int(std::ceil(vhi * height - 0.5)));

        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                size_t texel = size_t(y) * size_t(width) + size_t(x);
                if (mask[texel]) continue;
                Vec2d q{(x + 0.5) / width, (y + 0.5) / height};
                std::array<double, 3> w = uv_bary(t, q);
                if (w[0] < -tol || w[1] < -tol || w[2] < -tol) continue;
                mask[texel] = 1;
                emit(f, x, y, w);
            }
        }
    }
}

}  // namespace

UvMap rasterize_uv(const MeshFrame& mesh, const std::vector<double>& attributes, int attr_dim,
                   int width, int height) {
    if (attributes.size() != mesh.vertices.size() * size_t(attr_dim))
        throw InvalidArgument("rasterize_uv: attribute length != vertex count * dim");
    UvMap map;
    map.width = width;
    map.height = height;
    map.channels = attr_dim;
    map.data.assign(size_t(width) * size_t(height) * size_t(attr_dim), 0.0f);
    rasterize_atlas(mesh, width, height, map.mask,
                    [&](size_t f, int x, int y, const std::array<double, 3>& w) {
                        const auto& tri = mesh.faces[f];
                        for (int c = 0; c < attr_dim; ++c) {
                            double v = w[0] * attributes[tri[0] * size_t(attr_dim) + size_t(c)] +
                                       w[1] * attributes[tri[1] * size_t(attr_dim) + size_t(c)] +
                                       w[2] * attributes[tri[2] * size_t(attr_dim) + size_t(c)];
                            map.at(x, y, c) = float(v);
                        }
                    });
    return map;
}

UvMap rasterize_uv_face(const MeshFrame& mesh, const std::vector<double>& face_attributes,
                        int attr_dim, int width, int height) {
    if (face_attributes.size() != mesh.faces.size() * size_t(attr_dim))
        throw InvalidArgument("rasterize_uv_face: attribute length != face count * dim");
    UvMap map;
    map.width = width;
    map.height = height;
    map.channels = attr_dim;
    map.data.assign(size_t(width) * size_t(height) * size_t(attr_dim), 0.0f);
    rasterize_atlas(mesh, width, height, map.mask,
                    [&](size_t f, int x, int y, const std::array<double, 3>&) {
                        for (int c = 0; c < attr_dim; ++c)
                            map.at(x, y, c) = float(face_attributes[f * size_t(attr_dim) + size_t(c)]);
                    });
    return map;
}

std::vector<uint8_t> rasterize_mask(const MeshFrame& mesh, int width, int height) {
    std::vector<uint8_t> mask;
    rasterize_atlas(mesh, width, height, mask, [](size_t, int, int, const std::array<double, 3>&) {});
    return mask;
}

UvMap motion_to_uv(const MotionState& state, const MeshFrame& mesh, int width, int height) {
    size_t n = mesh.vertices.size();
    if (state.pose.size() != n || state.velocity.size() != n || state.trajectory.size() != n)
        throw InvalidArgument("motion_to_uv: motion state does not match mesh vertex count");
    std::vector<double> attr(n * 9);
    for (size_t i = 0; i < n; ++i) {
        attr[i * 9 + 0] = state.pose[i].x;
        attr[i * 9 + 1] = state.pose[i].y;
        attr[i * 9 + 2] = state.pose[i].z;
        attr[i * 9 + 3] = state.velocity[i].x;
        attr[i * 9 + 4] = state.velocity[i].y;
        attr[i * 9 + 5] = state.velocity[i].z;
        attr[i * 9 + 6] = state.trajectory[i].x;
        attr[i * 9 + 7] = state.trajectory[i].y;
        attr[i * 9 + 8] = state.trajectory[i].z;
    }
    return rasterize_uv(mesh, attr, 9, width, height);
}

UvMap normal_map_uv(const MeshFrame& mesh, int width, int height) {
    std::vector<Vec3d> normals = face_normals(mesh);
    std::vector<double> attr(normals.size() * 3);
    for (size_t f = 0; f < normals.size(); ++f) {
        attr[f * 3 + 0] = normals[f].x;
        attr[f * 3 + 1] = normals[f].y;
        attr[f * 3 + 2] = normals[f].z;
    }
    return rasterize_uv_face(mesh, attr, 3, width, height);
}

UvMap vectors_to_uv(const std::vector<Vec3d>& values, const MeshFrame& mesh, int width, int height) {
    if (values.size() != mesh.vertices.size())
        throw InvalidArgument("vectors_to_uv: value count != vertex count");
    std::vector<double> attr(values.size() * 3);
    for (size_t i = 0; i < values.size(); ++i) {
        attr[i * 3 + 0] = values[i].x;
        attr[i * 3 + 1] = values[i].y;
        attr[i * 3 + 2] = values[i].z;
    }
    return rasterize_uv(mesh, attr, 3, width, height);
}

}  // namespace surmo
