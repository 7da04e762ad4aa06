#include "surmo/synth.hpp"

#include <cmath>

#include "surmo/error.hpp"
#include "surmo/rng.hpp"

namespace surmo {

namespace {

constexpr double kTau = 6.283185307179586;
constexpr double kQuantum = 1.0 / 4096.0;  // dyadic position grid

// One rectangular grid patch: rows x cols quads with its own UV chart.
struct Patch {
    int rows, cols;
    size_t first_vertex;
};

struct BodyBuilder {
    std::vector<std::array<uint32_t, 3>> faces;
    std::vector<Vec2d> uvs;
    // Rest-position grid parameters per vertex, consumed by the pose function.
    struct VertexRef {
        int part;      // 0 torso, 1 left arm, 2 right arm, 3 cloth
        Vec3d rest;    // rest position (part-local where applicable)
        double s, t;   // grid parameters in [0,1]
    };
    std::vector<VertexRef> verts;
    int next_chart = 0;

    // Charts tile a 5x4 grid of the UV square with margins.
    Vec2d chart_uv(int chart, double s, double t) const {
        int gx = chart % 5, gy = chart / 5;
        double cell_w = 1.0 / 5.0, cell_h = 1.0 / 4.0;
        double margin = 0.012;
        double u = gx * cell_w + margin + s * (cell_w - 2 * margin);
        double v = gy * cell_h + margin + t * (cell_h - 2 * margin);
        return {u, v};
    }

    // Adds a grid of (rows+1)x(cols+1) vertices; pos(s,t) gives the rest
    // position, s along columns, t along rows.
    template <typename PosFn>
    void add_grid(int part, int rows, int cols, const PosFn& pos) {
        int chart = next_chart++;
        uint32_t base = uint32_t(verts.size());
        for (int r = 0; r <= rows; ++r) {
            for (int c = 0; c <= cols; ++c) {
                double s = double(c) / cols, t = double(r) / rows;
                verts.push_back({part, pos(s, t), s, t});
                uvs.push_back(chart_uv(chart, s, t));
            }
        }
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                uint32_t v00 = base + uint32_t(r * (cols + 1) + c);
                uint32_t v10 = v00 + 1;
                uint32_t v01 = v00 + uint32_t(cols + 1);
                uint32_t v11 = v01 + 1;
                faces.push_back({v00, v10, v11});
                faces.push_back({v00, v11, v01});
            }
        }
    }

    // Axis-aligned box as six independent grid charts.
    void add_box(int part, const Vec3d& center, const Vec3d& size, int subdiv) {
        Vec3d h = size * 0.5;
        auto face = [&](Vec3d origin, Vec3d du, Vec3d dv) {
            add_grid(part, subdiv, subdiv, [&](double s, double t) {
                return center + origin + du * (s - 0.5) * 2.0 + dv * (t - 0.5) * 2.0;
            });
        };
        face({0, 0, h.z}, {h.x, 0, 0}, {0, h.y, 0});    // +z
        face({0, 0, -h.z}, {-h.x, 0, 0}, {0, h.y, 0});  // -z
        face({h.x, 0, 0}, {0, 0, -h.z}, {0, h.y, 0});   // +x
        face({-h.x, 0, 0}, {0, 0, h.z}, {0, h.y, 0});   // -x
        face({0, h.y, 0}, {h.x, 0, 0}, {0, 0, h.z});    // +y
        face({0, -h.y, 0}, {h.x, 0, 0}, {0, 0, -h.z});  // -y
    }
};

struct BodyLayout {
    Vec3d torso_center{0.0, 0.05, 0.0};
    Vec3d torso_size{0.30, 0.52, 0.16};
    Vec3d shoulder_l{-0.21, 0.26, 0.0};
    Vec3d shoulder_r{0.21, 0.26, 0.0};
    double arm_len = 0.40;
    double arm_thick = 0.085;
    double cloth_top = -0.20;
    double cloth_bottom = -0.46;
    double cloth_half_width = 0.15;
    double cloth_z = -0.10;
};

BodyBuilder build_body(const ToyBodySpec& spec) {
    BodyLayout L;
    BodyBuilder b;
    b.add_box(0, L.torso_center, L.torso_size, spec.subdiv);
    // Arms in shoulder-local coordinates, hanging along -y.
    b.add_box(1, Vec3d{0.0, -L.arm_len * 0.5, 0.0}, Vec3d{L.arm_thick, L.arm_len, L.arm_thick},
              spec.subdiv);
    b.add_box(2, Vec3d{0.0, -L.arm_len * 0.5, 0.0}, Vec3d{L.arm_thick, L.arm_len, L.arm_thick},
              spec.subdiv);
    // Cloth sheet hanging behind the torso, grid parameters (s across, t down).
    b.add_grid(3, 2 * spec.subdiv + 2, 2 * spec.subdiv, [&](double s, double t) {
        return Vec3d{(s - 0.5) * 2.0 * L.cloth_half_width,
                     L.cloth_top + t * (L.cloth_bottom - L.cloth_top), L.cloth_z};
    });
    return b;
}

Vec3d rotate_x(const Vec3d& v, double angle) {
    double c = std::cos(angle), s = std::sin(angle);
    return {v.x, c * v.y - s * v.z, s * v.y + c * v.z};
}

std::vector<Vec3d> pose_positions(const ToyBodySpec& spec, const BodyBuilder& b, double t_frames) {
    BodyLayout L;
    double t_sec = t_frames / spec.fps;
    double phase = kTau * spec.swing_frequency * t_sec;
    double angle_l = spec.swing_amplitude * std::sin(phase);
    double angle_r = spec.swing_amplitude * std::sin(phase + 3.141592653589793);

    // Cloth deflection follows the (normalized) swing angular velocity at a
    // lagged time: equal poses with opposite phase flex the cloth differently.
    double lag_phase = kTau * spec.swing_frequency * (t_sec - spec.flap_lag);
    double flap = spec.flap_amplitude * std::cos(lag_phase);

    std::vector<Vec3d> out(b.verts.size());
    for (size_t i = 0; i < b.verts.size(); ++i) {
        const auto& vr = b.verts[i];
        switch (vr.part) {
            case 0:
                out[i] = vr.rest;
                break;
            case 1:
                out[i] = L.shoulder_l + rotate_x(vr.rest, angle_l);
                break;
            case 2:
                out[i] = L.shoulder_r + rotate_x(vr.rest, angle_r);
                break;
            default: {
                // Quadratic bend down the sheet plus a slight sideways drag.
                double bend = vr.t * vr.t;
                Vec3d p = vr.rest;
                p.z += bend * flap;
                p.x += 0.25 * bend * flap * (vr.s - 0.5);
                out[i] = p;
            }
        }
    }
    return out;
}

double quantize(double x) { return std::round(x / kQuantum) * kQuantum; }

}  // namespace

std::vector<Vec3d> toy_body_positions(const ToyBodySpec& spec, double t_frames) {
    BodyBuilder b = build_body(spec);
    return pose_positions(spec, b, t_frames);
}

MeshSequence generate_sequence(const ToyBodySpec& spec) {
    if (spec.frames < 2) throw InvalidArgument("generate_sequence: need at least 2 frames");
    BodyBuilder b = build_body(spec);
    MeshSequence seq;
    seq.faces = b.faces;
    seq.uv_coords = b.uvs;
    seq.fps = spec.fps;
    seq.frames.resize(size_t(spec.frames));
    for (int t = 0; t < spec.frames; ++t) {
        std::vector<Vec3d> pos = pose_positions(spec, b, double(t));
        for (auto& p : pos) p = {quantize(p.x), quantize(p.y), quantize(p.z)};
        seq.frames[size_t(t)] = std::move(pos);
    }
    return seq;
}

io::Image generate_texture(const ToyBodySpec& spec) {
    int n = spec.texture_size;
    io::Image tex;
    tex.width = n;
    tex.height = n;
    tex.channels = 3;
    tex.pixels.resize(size_t(n) * size_t(n) * 3);

    // Per-chart base colors; checkers and stripes add the high-frequency
    // content PSNR/SSIM need to discriminate.
    Rng rng(spec.texture_seed);
    std::array<std::array<float, 3>, 20> base;
    for (auto& c : base)
        for (auto& v : c) v = float(rng.uniform(0.25, 0.95));

    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            double u = (x + 0.5) / n, v = (y + 0.5) / n;
            int chart = std::min(19, int(u * 5) + 5 * int(v * 4));
            int checker = (int(u * 40) + int(v * 40)) % 2;
            double stripe = 0.5 + 0.5 * std::sin(v * 80.0);
            for (int c = 0; c < 3; ++c) {
                double val = base[size_t(chart)][size_t(c)];
                val *= checker ? 1.0 : 0.55;
                val = 0.8 * val + 0.2 * stripe;
                tex.at(x, y, c) = float(std::clamp(val, 0.0, 1.0));
            }
        }
    }
    return tex;
}

RenderedView reference_render(const MeshFrame& mesh, const Camera& cam, const io::Image& texture,
                              const LightSpec& light) {
    cam.validate();
    int w = cam.width, h = cam.height;
    RenderedView view;
    view.color.width = w;
    view.color.height = h;
    view.color.channels = 3;
    view.color.pixels.assign(size_t(w) * size_t(h) * 3, 0.0f);
    view.silhouette.assign(size_t(w) * size_t(h), 0);
    view.depth.assign(size_t(w) * size_t(h), 0.0f);
    std::vector<double> zbuf(size_t(w) * size_t(h), std::numeric_limits<double>::max());

    Vec3d ldir = normalized(light.direction);
    constexpr double znear = 1e-3;

    auto tex_sample = [&](double u, double v, float* rgb) {
        u = std::clamp(u, 0.0, 1.0);
        v = std::clamp(v, 0.0, 1.0);
        double x = u * texture.width - 0.5, y = v * texture.height - 0.5;
        int x0 = std::max(0, int(std::floor(x))), y0 = std::max(0, int(std::floor(y)));
        int x1 = std::min(texture.width - 1, x0 + 1), y1 = std::min(texture.height - 1, y0 + 1);
        double fx = std::clamp(x - x0, 0.0, 1.0), fy = std::clamp(y - y0, 0.0, 1.0);
        for (int c = 0; c < 3; ++c) {
            double top = texture.at(x0, y0, c) * (1 - fx) + texture.at(x1, y0, c) * fx;
            double bot = texture.at(x0, y1, c) * (1 - fx) + texture.at(x1, y1, c) * fx;
            rgb[c] = float(top * (1 - fy) + bot * fy);
        }
    };

    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& tri = mesh.faces[f];
        Vec3d pc[3];
        double sx[3], sy[3];
        bool behind = false;
        for (int k = 0; k < 3; ++k) {
            pc[k] = cam.to_camera(mesh.vertices[tri[size_t(k)]]);
            if (pc[k].z < znear) behind = true;
        }
        if (behind) continue;
        for (int k = 0; k < 3; ++k) {
            sx[k] = cam.fx * pc[k].x / pc[k].z + cam.cx;
            sy[k] = cam.fy * pc[k].y / pc[k].z + cam.cy;
        }
        double area = (sx[1] - sx[0]) * (sy[2] - sy[0]) - (sy[1] - sy[0]) * (sx[2] - sx[0]);
        if (std::abs(area) < 1e-12) continue;

        Vec3d n = face_normal(mesh, int(f));
        double lambert = light.ambient + light.diffuse * std::max(0.0, dot(n, ldir));

        int x0 = std::max(0, int(std::floor(std::min({sx[0], sx[1], sx[2]}))));
        int x1 = std::min(w - 1, int(std::ceil(std::max({sx[0], sx[1], sx[2]}))));
        int y0 = std::max(0, int(std::floor(std::min({sy[0], sy[1], sy[2]}))));
        int y1 = std::min(h - 1, int(std::ceil(std::max({sy[0], sy[1], sy[2]}))));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                double px = x + 0.5, py = y + 0.5;
                double w0 = (sx[1] - px) * (sy[2] - py) - (sy[1] - py) * (sx[2] - px);
                double w1 = (sx[2] - px) * (sy[0] - py) - (sy[2] - py) * (sx[0] - px);
                double w2 = (sx[0] - px) * (sy[1] - py) - (sy[0] - py) * (sx[1] - px);
                double inv_area = 1.0 / area;
                w0 *= inv_area;
                w1 *= inv_area;
                w2 *= inv_area;
                if (w0 < 0 || w1 < 0 || w2 < 0) continue;

                // Perspective-correct interpolation via 1/z.
                double invz = w0 / pc[0].z + w1 / pc[1].z + w2 / pc[2].z;
                double z = 1.0 / invz;
                size_t px_idx = size_t(y) * size_t(w) + size_t(x);
                if (z >= zbuf[px_idx]) continue;
                zbuf[px_idx] = z;

                double u = (w0 * mesh.uv_coords[tri[0]].x / pc[0].z +
                            w1 * mesh.uv_coords[tri[1]].x / pc[1].z +
                            w2 * mesh.uv_coords[tri[2]].x / pc[2].z) * z;
                double v = (w0 * mesh.uv_coords[tri[0]].y / pc[0].z +
                            w1 * mesh.uv_coords[tri[1]].y / pc[1].z +
                            w2 * mesh.uv_coords[tri[2]].y / pc[2].z) * z;
                float rgb[3];
                tex_sample(u, v, rgb);
                for (int c = 0; c < 3; ++c)
                    view.color.pixels[px_idx * 3 + size_t(c)] =
                        float(std::clamp(double(rgb[c]) * lambert, 0.0, 1.0));
                view.silhouette[px_idx] = 1;
                view.depth[px_idx] = float(z);
            }
        }
    }
    return view;
}

std::vector<Camera> make_camera_ring(int count, double radius, double height, const Vec3d& target,
                                     double focal, int width, int height_px) {
    std::vector<Camera> cams;
    cams.reserve(size_t(count));
    for (int i = 0; i < count; ++i) {
        double a = kTau * i / count;
        Vec3d eye{target.x + radius * std::sin(a), target.y + height,
                  target.z + radius * std::cos(a)};
        cams.push_back(Camera::look_at(eye, target, {0, 1, 0}, focal, width, height_px));
    }
    return cams;
}

}  // namespace surmo
