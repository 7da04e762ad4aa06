#pragma once

#include <cstdint>
#include <vector>

#include "surmo/geometry.hpp"
#include "surmo/io.hpp"
#include "surmo/renderer.hpp"

namespace surmo {

// Articulated toy body: a torso box, two swinging arms, and a hanging cloth
// sheet whose deflection follows the arm swing velocity at a time lag, so
// identical poses recur with different cloth geometry.
struct ToyBodySpec {
    int frames = 60;
    double fps = 15.0;
    double swing_amplitude = 0.9;  // radians, peak arm swing
    double swing_frequency = 0.5;  // Hz
    double flap_amplitude = 0.14;  // world units, peak cloth deflection
    double flap_lag = 0.25;        // seconds behind the driving swing
    uint64_t texture_seed = 7;
    int texture_size = 128;
    int subdiv = 3;  // per-face grid subdivision of the boxes
};

// Fixed topology + UV atlas with per-frame vertex positions. Frame positions
// are quantized to a dyadic grid (multiples of 2^-12) so that per-frame
// velocity differences and their reconstruction are exact in floating point.
MeshSequence generate_sequence(const ToyBodySpec& spec);

// Unquantized positions at a continuous frame time; the derivative oracle
// for velocity tests.
std::vector<Vec3d> toy_body_positions(const ToyBodySpec& spec, double t_frames);

// Procedural checker + stripe texture over the UV atlas.
io::Image generate_texture(const ToyBodySpec& spec);

struct LightSpec {
    Vec3d direction{0.25, 1.0, 0.35};  // from surface toward the light
    double ambient = 0.35;
    double diffuse = 0.65;
};

struct RenderedView {
    io::Image color;
    std::vector<uint8_t> silhouette;  // 1 where geometry covers the pixel
    std::vector<float> depth;         // camera-space depth, 0 where empty
};

// Deterministic z-buffered rasterization with perspective-correct UVs,
// bilinear texture lookup and a clamped Lambert term on flat face normals.
RenderedView reference_render(const MeshFrame& mesh, const Camera& cam, const io::Image& texture,
                              const LightSpec& light);

// Evenly spaced inward-looking cameras on a ring around the target.
std::vector<Camera> make_camera_ring(int count, double radius, double height, const Vec3d& target,
                                     double focal, int width, int height_px);

}  // namespace surmo
