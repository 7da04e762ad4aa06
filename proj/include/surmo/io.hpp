#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "surmo/geometry.hpp"
#include "surmo/motion.hpp"
#include "surmo/renderer.hpp"
#include "surmo/tensor.hpp"

namespace surmo::io {

// RGB image, row-major, values in [0,1].
struct Image {
    int width = 0, height = 0, channels = 0;
    std::vector<float> pixels;

    float& at(int x, int y, int c) { return pixels[size_t((y * width + x) * channels + c)]; }
    float at(int x, int y, int c) const { return pixels[size_t((y * width + x) * channels + c)]; }
};

// --- mesh sequences ("SMSQ1": text header + little-endian binary body) ------

void write_mesh_sequence(const std::string& path, const MeshSequence& seq);
MeshSequence read_mesh_sequence(const std::string& path);

// --- cameras (text key=value) ------------------------------------------------

void write_camera(const std::string& path, const Camera& cam);
Camera read_camera(const std::string& path);

// --- images ------------------------------------------------------------------

// 8-bit binary PPM (P6). Quantization: round(clamp(v,0,1)*255).
void write_ppm(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);

// Raw float32 planar map with a text header ("FMAP1"), optional mask plane.
void write_float_map(const std::string& path, const Image& img,
                     const std::vector<uint8_t>* mask = nullptr);
Image read_float_map(const std::string& path, std::vector<uint8_t>* mask = nullptr);

void write_uv_map(const std::string& path, const UvMap& map);
UvMap read_uv_map(const std::string& path);

// --- checkpoints ("SURM": named-tensor table + u64 checksum) ------------------

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

void write_checkpoint(const std::string& path, const NamedTensors& tensors);
NamedTensors read_checkpoint(const std::string& path);

// FNV-1a 64 over a byte range; also the checkpoint payload checksum.
uint64_t fnv1a64(const void* data, size_t size);

// --- small text helpers --------------------------------------------------------

// key=value pairs, one per line; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> read_key_values(const std::string& path);
void write_key_values(const std::string& path,
                      const std::vector<std::pair<std::string, std::string>>& kv);

}  // namespace surmo::io
