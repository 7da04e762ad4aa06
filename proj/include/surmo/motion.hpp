#pragma once

#include <cstdint>
#include <vector>

#include "surmo/geometry.hpp"

namespace surmo {

// Per-frame 4D motion attributes: pose P_t, velocity V_t (world units per
// frame, backward difference), and trajectory T_t (pose advanced by a decayed
// average of past velocities).
struct MotionState {
    std::vector<Vec3d> pose;
    std::vector<Vec3d> velocity;
    std::vector<Vec3d> trajectory;
    int frame_index = 0;
};

// Sliding-window trajectory aggregation: T_t = P_t + sum(lambda_i * V_{t-i}) / sum(lambda_i).
struct TrajectoryConfig {
    int window = 5;
    std::vector<double> weights;  // lambda_1..lambda_w, strictly positive

    // Default decay lambda_i = decay^(i-1).
    static TrajectoryConfig decayed(int window, double decay);
};

// Fixed-resolution multi-channel map over the UV atlas. data is row-major
// [v][u][c]; texels outside the coverage mask are exactly zero.
struct UvMap {
    int width = 0;    // U texels
    int height = 0;   // V texels
    int channels = 0;
    std::vector<float> data;
    std::vector<uint8_t> mask;  // width*height, 1 where covered

    float& at(int x, int y, int c) { return data[size_t((y * width + x) * channels + c)]; }
    float at(int x, int y, int c) const { return data[size_t((y * width + x) * channels + c)]; }
    bool covered(int x, int y) const { return mask[size_t(y * width + x)] != 0; }
    size_t covered_count() const;

    // Bilinear sample over texel centers, coordinates in [0,1], clamped.
    void sample(double a, double b, float* out) const;
};

// V_t = P_t - P_{t-1}; V_0 = 0 by convention.
std::vector<Vec3d> compute_velocity(const MeshSequence& seq, int t);

// Eq. T_t above; velocities at negative indices count as zero while the
// normalizer keeps the full weight sum.
std::vector<Vec3d> compute_trajectory(const MeshSequence& seq, int t, const TrajectoryConfig& cfg);

MotionState extract_motion_state(const MeshSequence& seq, int t, const TrajectoryConfig& cfg);

// Rasterizes per-vertex K-dim attributes into UV space: each covered texel
// holds the barycentric interpolation over the UV triangle covering its
// center. Overlaps resolve to the lowest face index. Texel centers are the
// sample points; no anti-aliasing.
UvMap rasterize_uv(const MeshFrame& mesh, const std::vector<double>& attributes, int attr_dim,
                   int width, int height);

// Per-face (flat) variant: every texel covered by a face gets that face's
// attribute row unchanged.
UvMap rasterize_uv_face(const MeshFrame& mesh, const std::vector<double>& face_attributes,
                        int attr_dim, int width, int height);

// Coverage mask only (no attributes); identical to the mask of any
// rasterization from the same atlas at the same resolution.
std::vector<uint8_t> rasterize_mask(const MeshFrame& mesh, int width, int height);

// 9-channel motion map, channel layout [P | V | T].
UvMap motion_to_uv(const MotionState& state, const MeshFrame& mesh, int width, int height);

// Flat-normal ground-truth map of a frame (3 channels).
UvMap normal_map_uv(const MeshFrame& mesh, int width, int height);

// Per-vertex vectors rasterized as a 3-channel map (used for velocity maps).
UvMap vectors_to_uv(const std::vector<Vec3d>& values, const MeshFrame& mesh, int width, int height);

}  // namespace surmo
