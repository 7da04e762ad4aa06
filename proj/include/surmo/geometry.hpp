#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "surmo/vecmath.hpp"

namespace surmo {

// One time step of a triangle mesh with a shared UV atlas.
// Faces index into both vertices and uv_coords (per-vertex UVs).
struct MeshFrame {
    std::vector<Vec3d> vertices;
    std::vector<std::array<uint32_t, 3>> faces;
    std::vector<Vec2d> uv_coords;  // in [0,1]^2
    int frame_index = 0;

    Box3d bounds() const {
        Box3d b;
        for (const auto& v : vertices) b.extend(v);
        return b;
    }
};

// Fixed-topology animated mesh: one topology + per-frame vertex positions.
struct MeshSequence {
    std::vector<std::array<uint32_t, 3>> faces;
    std::vector<Vec2d> uv_coords;
    std::vector<std::vector<Vec3d>> frames;  // frames[t][vertex]
    double fps = 30.0;
    int uv_res_hint = 256;

    int frame_count() const { return int(frames.size()); }
    int vertex_count() const { return frames.empty() ? 0 : int(frames[0].size()); }

    MeshFrame frame(int t) const {
        MeshFrame m;
        m.vertices = frames.at(size_t(t));
        m.faces = faces;
        m.uv_coords = uv_coords;
        m.frame_index = t;
        return m;
    }
};

// Surface-local coordinate of a 3D point: the UV location of its nearest
// surface point plus the signed distance h along the nearest face normal.
struct SurfaceLocalCoord {
    int face_index = -1;
    double u = 0.0;
    double v = 0.0;
    double h = 0.0;
};

// Static bounding-volume hierarchy over mesh faces. Interior nodes store
// child links, leaves store a contiguous run of face indices.
struct FaceBvh {
    struct Node {
        Box3d box;
        int32_t left = -1;        // child node; -1 for leaves
        int32_t right = -1;
        int32_t first = 0;        // leaf: range into leaf_faces
        int32_t count = 0;
    };
    std::vector<Node> nodes;
    std::vector<uint32_t> leaf_faces;

    bool empty() const { return nodes.empty(); }
};

struct NearestFaceResult {
    int face_index = -1;
    Vec3d point;       // closest point on that face
    double distance = 0.0;
};

// Closest point on a single triangle (Ericson's region test).
Vec3d closest_point_on_triangle(const Vec3d& p, const Vec3d& a, const Vec3d& b, const Vec3d& c);

// Barycentric coordinates of a point assumed on the triangle's plane.
std::array<double, 3> barycentric(const Vec3d& p, const Vec3d& a, const Vec3d& b, const Vec3d& c);

// Builds the BVH. Throws InvalidArgument for an empty mesh.
FaceBvh build_bvh(const MeshFrame& mesh);

// Exact nearest face; ties broken toward the lowest face index.
NearestFaceResult nearest_face(const FaceBvh& bvh, const MeshFrame& mesh, const Vec3d& p);

// Brute-force reference with the identical tie-break, used by tests.
NearestFaceResult nearest_face_brute(const MeshFrame& mesh, const Vec3d& p);

// (u, v, h) of a query point. |h| equals the nearest-face distance; the sign
// follows the nearest face's own normal. UVs are taken from the nearest
// face's chart, so seams resolve to one deterministic chart.
SurfaceLocalCoord surface_local_coords(const FaceBvh& bvh, const MeshFrame& mesh, const Vec3d& p);

// Inverse transform: surface point from the face's UV chart plus h along the
// face normal. Throws InvalidArgument if (u,v) falls outside the face's UV
// triangle.
Vec3d local_to_world(const MeshFrame& mesh, const SurfaceLocalCoord& c);

// Unit normal of one face (right-hand rule). Throws on zero-area faces.
Vec3d face_normal(const MeshFrame& mesh, int face);

// All face normals.
std::vector<Vec3d> face_normals(const MeshFrame& mesh);

}  // namespace surmo
